#include "ahsse/noise.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace ahsse {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t x = master ^ (0x9e3779b97f4a7c15ULL + index * 0xd1342543de82ef95ULL);
    return splitmix64(x);
}

GaussianStream::GaussianStream(std::uint64_t seed) {
    std::uint64_t s = seed;
    state_[0] = splitmix64(s);
    state_[1] = splitmix64(s);
    if (state_[0] == 0 && state_[1] == 0) state_[0] = 1;
}

std::uint64_t GaussianStream::next_u64() {
    // xorshift128+
    std::uint64_t s1 = state_[0];
    const std::uint64_t s0 = state_[1];
    state_[0] = s0;
    s1 ^= s1 << 23;
    state_[1] = s1 ^ s0 ^ (s1 >> 18) ^ (s0 >> 5);
    return state_[1] + s0;
}

double GaussianStream::next() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; u1 in (0,1], u2 in [0,1).
    const double u1 = ((next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = (next_u64() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

Complex GaussianStream::next_complex() {
    const double a = next();
    const double b = next();
    return {a * std::numbers::sqrt2 / 2.0, b * std::numbers::sqrt2 / 2.0};
}

int KLBasis::default_truncation() const {
    if (eigenvalues.size() == 0) return 0;
    const double cutoff = 1e-12 * eigenvalues[0];
    int count = 0;
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k)
        if (eigenvalues[k] > cutoff) ++count;
    return count;
}

KLBasis kl_decompose(const KernelMatrix& kernel) {
    const Eigen::Index n = kernel.values.rows();
    if ((kernel.values - kernel.values.adjoint()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, kernel.values.cwiseAbs().maxCoeff()))
        throw InvalidKernel("kl_decompose: kernel is not Hermitian");

    const double dt = (n > 1) ? kernel.times[1] - kernel.times[0] : 1.0;
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, dt);
    w[0] *= 0.5;
    w[n - 1] *= 0.5;
    const Eigen::VectorXd sqrt_w = w.cwiseSqrt();

    Eigen::MatrixXcd b = sqrt_w.asDiagonal() * kernel.values * sqrt_w.asDiagonal();
    b = 0.5 * (b + b.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(b);
    if (es.info() != Eigen::Success) throw InvalidKernel("kl_decompose: eigensolver failed");

    KLBasis basis;
    basis.times = kernel.times;
    basis.eigenvalues.resize(n);
    basis.eigenfunctions.resize(n, n);
    const double lambda_max = std::max(es.eigenvalues().maxCoeff(), 0.0);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = n - 1 - k;  // descending order
        double lambda = es.eigenvalues()[src];
        if (lambda < 0.0) {
            if (lambda < -kTolPsd * std::max(lambda_max, 1e-300))
                throw InvalidKernel("kl_decompose: kernel not PSD within tolerance");
            lambda = 0.0;
        }
        basis.eigenvalues[k] = lambda;
        basis.eigenfunctions.col(k) = es.eigenvectors().col(src).cwiseQuotient(
            sqrt_w.cast<Complex>());
    }
    return basis;
}

Eigen::VectorXcd sample_kl_path(const KLBasis& basis, std::uint64_t seed, int truncation) {
    const Eigen::Index n = basis.times.size();
    if (truncation < 0) truncation = basis.default_truncation();
    GaussianStream rng(seed);
    Eigen::VectorXcd path = Eigen::VectorXcd::Zero(n);
    for (int k = 0; k < truncation; ++k) {
        const Complex alpha = rng.next_complex();
        path += alpha * std::sqrt(basis.eigenvalues[k]) * basis.eigenfunctions.col(k);
    }
    return path;
}

namespace {

void fill_increments(NoisePath& path) {
    const Eigen::Index n = path.w_plus.size();
    path.dw_plus.resize(n - 1);
    path.dw_minus.resize(n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        path.dw_plus[i] = path.w_plus[i + 1] - path.w_plus[i];
        path.dw_minus[i] = path.w_minus[i + 1] - path.w_minus[i];
    }
}

}  // namespace

NoisePath sample_noise_path(const KLBasis& basis_plus, const KLBasis& basis_minus,
                            std::uint64_t seed, int truncation) {
    NoisePath path;
    path.seed = seed;
    path.w_plus = sample_kl_path(basis_plus, split_seed(seed, 1), truncation);
    path.w_minus = sample_kl_path(basis_minus, split_seed(seed, 2), truncation);
    fill_increments(path);
    return path;
}

NoisePath sample_brownian_path(const Eigen::VectorXd& times, double c0_plus, double c0_minus,
                               std::uint64_t seed) {
    const Eigen::Index n = times.size();
    NoisePath path;
    path.seed = seed;
    path.w_plus = Eigen::VectorXcd::Zero(n);
    path.w_minus = Eigen::VectorXcd::Zero(n);
    GaussianStream rng_plus(split_seed(seed, 1));
    GaussianStream rng_minus(split_seed(seed, 2));
    for (Eigen::Index i = 1; i < n; ++i) {
        const double dt = times[i] - times[i - 1];
        path.w_plus[i] = path.w_plus[i - 1] + std::sqrt(c0_plus * dt) * rng_plus.next_complex();
        path.w_minus[i] = path.w_minus[i - 1] + std::sqrt(c0_minus * dt) * rng_minus.next_complex();
    }
    fill_increments(path);
    return path;
}

std::pair<Eigen::VectorXcd, Eigen::VectorXcd> xi_cross_transform(const Eigen::VectorXcd& xi_plus,
                                                                 const Eigen::VectorXcd& xi_minus) {
    if (xi_plus.size() != xi_minus.size())
        throw InvalidKernel("xi_cross_transform: length mismatch");
    const Complex i{0.0, 1.0};
    return {xi_minus - xi_plus, i * (xi_plus + xi_minus)};
}

std::pair<Eigen::VectorXcd, Eigen::VectorXcd> xi_cross_inverse(const Eigen::VectorXcd& xi1,
                                                               const Eigen::VectorXcd& xi2) {
    if (xi1.size() != xi2.size()) throw InvalidKernel("xi_cross_inverse: length mismatch");
    const Complex i{0.0, 1.0};
    return {0.5 * (-xi1 - i * xi2), 0.5 * (xi1 - i * xi2)};
}

void write_path_binary(const NoisePath& path, const std::string& filename) {
    std::ofstream out(filename, std::ios::binary);
    if (!out) throw IoError("cannot open " + filename + " for writing");
    auto dump = [&](const Eigen::VectorXcd& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double re = v[i].real(), im = v[i].imag();
            out.write(reinterpret_cast<const char*>(&re), sizeof(double));
            out.write(reinterpret_cast<const char*>(&im), sizeof(double));
        }
    };
    dump(path.w_plus);
    dump(path.w_minus);
    if (!out) throw IoError("write failed: " + filename);
}

}  // namespace ahsse
