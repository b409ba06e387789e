#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

#include "ahsse/bath.hpp"

namespace ahsse {

/// Karhunen-Loeve basis of a covariance kernel: eigenpairs of the
/// trapezoidal-weighted Nystrom discretization of
///   int_0^T K(s,t) phi(t) dt = lambda phi(s).
struct KLBasis {
    Eigen::VectorXd eigenvalues;      // descending, >= 0 after clamping
    Eigen::MatrixXcd eigenfunctions;  // columns; orthonormal w.r.t. trapezoid weights
    Eigen::VectorXd times;

    /// Modes with lambda_k > 1e-12 * lambda_1.
    int default_truncation() const;
};

/// Sampled complex Gaussian processes W_±(t) and their per-step increments.
struct NoisePath {
    Eigen::VectorXcd w_plus, w_minus;    // W_±(t_n), W_±(0) = 0
    Eigen::VectorXcd dw_plus, dw_minus;  // exact differences of the stored paths
    std::uint64_t seed = 0;
};

/// Deterministic counter-based seed splitting (splitmix64 finalizer mix).
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

/// Deterministic standard-normal stream (mt19937_64 + Box-Muller), independent
/// of libstdc++'s distribution implementation.
class GaussianStream {
  public:
    explicit GaussianStream(std::uint64_t seed);
    double next();
    /// Circularly-symmetric standard complex Gaussian, (a + i b)/sqrt(2).
    Complex next_complex();

  private:
    std::uint64_t state_[2];
    double spare_ = 0.0;
    bool has_spare_ = false;
    std::uint64_t next_u64();
};

/// Solve the weighted eigenproblem (symmetrized as D^{1/2} K D^{1/2}).
/// Eigenvalues in (-tol_psd*lambda_max, 0) are clamped to 0.
/// Throws InvalidKernel on non-Hermitian input.
KLBasis kl_decompose(const KernelMatrix& kernel);

/// W(t) = sum_k alpha_k sqrt(lambda_k) phi_k(t) with circular complex
/// Gaussian alpha_k. truncation < 0 selects the default mode count.
Eigen::VectorXcd sample_kl_path(const KLBasis& basis, std::uint64_t seed, int truncation = -1);

/// Both noise processes W_± from one trajectory seed (independent sub-streams).
NoisePath sample_noise_path(const KLBasis& basis_plus, const KLBasis& basis_minus,
                            std::uint64_t seed, int truncation = -1);

/// Direct Brownian sampling for delta-correlated kernels c(tau)=c0 delta(tau):
/// increments dW with E|dW|^2 = c0 dt. Used on time grids too large for the
/// KL route.
NoisePath sample_brownian_path(const Eigen::VectorXd& times, double c0_plus, double c0_minus,
                               std::uint64_t seed);

/// xi1 = xi_minus - xi_plus, xi2 = i (xi_plus + xi_minus).
std::pair<Eigen::VectorXcd, Eigen::VectorXcd> xi_cross_transform(const Eigen::VectorXcd& xi_plus,
                                                                 const Eigen::VectorXcd& xi_minus);

/// Inverse map: xi_plus = (-xi1 - i xi2)/2, xi_minus = (xi1 - i xi2)/2.
std::pair<Eigen::VectorXcd, Eigen::VectorXcd> xi_cross_inverse(const Eigen::VectorXcd& xi1,
                                                               const Eigen::VectorXcd& xi2);

/// Little-endian f64 interleaved re/im dump of a sampled path.
void write_path_binary(const NoisePath& path, const std::string& filename);

}  // namespace ahsse
