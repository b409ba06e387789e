#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "ahsse/bath.hpp"
#include "ahsse/grid.hpp"

namespace ahsse {

/// Two-level block density matrix over the spatial grid. Entries are raw
/// kernel values rho(x_i, x_j); traces carry a dx quadrature weight.
struct BlockDensityMatrix {
    Eigen::MatrixXcd rho00, rho01, rho10, rho11;
    double time = 0.0;

    /// Blockwise-consistent re-symmetrization:
    /// rho00, rho11 <- Hermitian parts, rho01 <- (rho01 + rho10^H)/2, rho10 = rho01^H.
    void hermitize();
    double trace(double dx) const;
    double purity(double dx) const;

    static BlockDensityMatrix zero(int m);
};

/// p0 = dx tr rho00, p1 = dx tr rho11.
std::pair<double, double> populations_from_density(const BlockDensityMatrix& rho, double dx);

/// Dense grid Hamiltonian h = F^H diag(eps^2 mu^2 / 2) F + diag(U), Hermitized.
Eigen::MatrixXcd build_hamiltonian(const SpatialGrid& grid, const Eigen::VectorXd& potential,
                                   double epsilon);

/// Markovian dissipator coefficients Lambda^∓ = int_0^T c^∓(tau) V e^{-i h tau/eps} V dtau
/// (h = h1 for Lambda^-, h = h0 for Lambda^+), plus the scalar feed integrals
/// Gamma^± = int_0^T c^±(tau) dtau that multiply the level-exchange term.
struct DissipatorCoefficients {
    Eigen::MatrixXcd lambda_plus, lambda_minus;
    Complex gamma_plus{0.0, 0.0}, gamma_minus{0.0, 0.0};
    double horizon = 0.0;
};

/// Spectral construction: h = Phi E Phi^H, the tau integral folded into the
/// band energy integral analytically (no oscillatory tau quadrature).
/// redfield = true treats `horizon` as T_large and verifies horizon
/// convergence by doubling (throws HorizonNotConverged beyond tol).
DissipatorCoefficients dissipator_coefficients(const BathSpec& spec, const Eigen::MatrixXcd& h0,
                                               const Eigen::MatrixXcd& h1,
                                               const Eigen::VectorXd& v, double horizon,
                                               bool redfield = false, double tol = 1e-6);

/// Delta-kernel insertion c(tau) = c0 delta(tau): Lambda = c0 V V (full
/// boundary weight), Gamma = c0 / 2 (half weight, matching the quadratic
/// variation of the corresponding Markovian noise).
DissipatorCoefficients dissipator_coefficients_delta(Complex c0_plus, Complex c0_minus,
                                                     const Eigen::VectorXd& v);

/// Explicit Markovian form: commutator blocks plus the V-dressed dissipator
///   coeff * V [ -2(rho00-rho11), -(rho01+rho10); -(rho01+rho10), -2(rho11-rho00) ] V.
/// coeff is the magnitude lambda^2/eps^2 |c0|; the relaxing (negative) sign is
/// built in. Trace of the dissipator vanishes identically.
BlockDensityMatrix qme_rhs_markovian(const BlockDensityMatrix& rho, const Eigen::MatrixXcd& h0,
                                     const Eigen::MatrixXcd& h1, const Eigen::VectorXd& v,
                                     double coeff, double epsilon);

/// FH-QME / Redfield form with precomputed coefficients (gamma = lambda^2/eps^2):
///   d00 = -(i/eps)[h0,rho00] + gamma (Lm rho00 + rho00 Lm^H + 2 Re(Gp) V rho11 V)
///   d11 = -(i/eps)[h1,rho11] + gamma (Lp rho11 + rho11 Lp^H + 2 Re(Gm) V rho00 V)
///   d01 = -(i/eps)(h0 rho01 - rho01 h1) + gamma (Lm rho01 + rho01 Lp^H),  d10 = d01^H.
BlockDensityMatrix qme_rhs_history(const BlockDensityMatrix& rho, const Eigen::MatrixXcd& h0,
                                   const Eigen::MatrixXcd& h1, const Eigen::VectorXd& v,
                                   const DissipatorCoefficients& coeffs, double gamma,
                                   double epsilon);

using QmeRhs = std::function<BlockDensityMatrix(const BlockDensityMatrix&)>;

/// Classical RK4 with blockwise re-Hermitization after every step. Returns
/// snapshots every sample_stride steps (initial state included).
std::vector<BlockDensityMatrix> integrate_qme(const BlockDensityMatrix& rho0, const QmeRhs& rhs,
                                              double dt, double t_final, int sample_stride = 1);

struct EnsembleDensity {
    BlockDensityMatrix raw;         // mean of unnormalized outer products
    BlockDensityMatrix normalized;  // trajectory states normalized before averaging
};

/// rho = (1/n) sum |Psi><Psi| over trajectory snapshots sharing grid and time.
EnsembleDensity ensemble_density(const std::vector<SpinorState>& states, const SpatialGrid& grid);

/// Population time series CSV: t, P0, P1, trace, purity.
void write_qme_csv(const std::vector<BlockDensityMatrix>& series, double dx,
                   const std::string& path);

}  // namespace ahsse
