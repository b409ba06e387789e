#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ahsse/errors.hpp"

namespace ahsse {

using Complex = std::complex<double>;

enum class KernelSign { Plus, Minus };

/// Flat-band fermionic bath description. Immutable after construction;
/// all evaluation routines below are pure functions of (spec, args).
struct BathSpec {
    double beta = 1.0;       // inverse temperature
    double e_minus = -2.0;   // lower band edge
    double e_plus = 2.0;     // upper band edge
    double epsilon = 1.0 / 32.0;  // semiclassical parameter
    double mu = 0.0;         // chemical potential
    int quadrature_points = 400;

    void validate() const;
};

/// Occupation factor 1/(1 + exp(-beta (E - mu))). Saturates instead of
/// overflowing for large |beta E|.
double fermi_weight_plus(double energy, double beta, double mu = 0.0);
/// 1/(1 + exp(+beta (E - mu))).
double fermi_weight_minus(double energy, double beta, double mu = 0.0);

/// Continuous-band correlation function
///   c^±(tau) = int_{E-}^{E+} exp(∓ i E tau / eps) / (1 + exp(∓ beta (E-mu))) dE
/// evaluated by Gauss-Legendre quadrature with an oscillation-resolved node
/// count. Throws InsufficientQuadrature if the error estimate (node-count
/// refinement) exceeds `tol`.
Complex c_continuous(KernelSign sign, double tau, const BathSpec& spec, double tol = 1e-8);

/// Discrete-band kernel C_k^±(tau) on the equidistant grid
/// E_k = E- + (k - 1/2) h_N, h_N = (E+ - E-)/N. k is 1-based.
Complex c_discrete(KernelSign sign, double tau, int k, int n_band, const BathSpec& spec);

/// Band-sum h_N sum_k C_k^±(tau); converges to c^±(tau) as N -> infinity.
Complex c_discrete_band_sum(KernelSign sign, double tau, int n_band, const BathSpec& spec);

/// Markovian constants c_0^±. Defaults to 2*pi*eps for both (the beta=0
/// infinite-band Fourier integral); explicit overrides pass through.
std::pair<Complex, Complex> markov_constants(const BathSpec& spec,
                                             std::optional<Complex> c0_plus_override = std::nullopt,
                                             std::optional<Complex> c0_minus_override = std::nullopt);

/// Gauss-Legendre nodes and weights on [-1, 1], cached per order.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const QuadratureRule& gauss_legendre_rule(int n);

/// Hermitian covariance matrix K(t_i, t_j) on a uniform time grid.
struct KernelMatrix {
    Eigen::VectorXd times;
    Eigen::MatrixXcd values;  // K(i,j) = conj(K(j,i)) exactly as stored
};

/// Relative PSD tolerance used when validating covariance matrices.
inline constexpr double kTolPsd = 1e-8;

/// K_±(s,t) = int_0^s int_0^t c^±(tau1 - tau2) dtau1 dtau2 by double
/// cumulative trapezoidal quadrature. Hermitized as (K + K^H)/2 and
/// PSD-checked (throws KernelNotPSD beyond kTolPsd relative).
KernelMatrix covariance_matrix(KernelSign sign, const Eigen::VectorXd& times, const BathSpec& spec);

/// Analytic insertion of the delta kernel c(tau) = c0 delta(tau):
/// K(s,t) = c0 * min(s,t).
KernelMatrix covariance_delta(const Eigen::VectorXd& times, double c0);

/// Row-major CSV dump, one "re,im" cell pair per entry.
void write_kernel_csv(const KernelMatrix& kernel, const std::string& path);

}  // namespace ahsse
