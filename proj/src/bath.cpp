#include "ahsse/bath.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

namespace ahsse {

namespace {

constexpr Complex kI{0.0, 1.0};

}  // namespace

// Newton iteration on Legendre polynomials; cached per node count.
const QuadratureRule& gauss_legendre_rule(int n) {
    static std::mutex mtx;
    static std::map<int, QuadratureRule> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

namespace {

Complex band_integral(KernelSign sign, double tau, const BathSpec& spec, int n_nodes) {
    const auto& rule = gauss_legendre_rule(n_nodes);
    const double half = 0.5 * (spec.e_plus - spec.e_minus);
    const double mid = 0.5 * (spec.e_plus + spec.e_minus);
    const double s = (sign == KernelSign::Plus) ? 1.0 : -1.0;
    Complex sum{0.0, 0.0};
    for (int i = 0; i < n_nodes; ++i) {
        const double e = mid + half * rule.nodes[i];
        const double weight = (sign == KernelSign::Plus)
                                  ? fermi_weight_plus(e, spec.beta, spec.mu)
                                  : fermi_weight_minus(e, spec.beta, spec.mu);
        sum += rule.weights[i] * weight * std::exp(-kI * s * e * tau / spec.epsilon);
    }
    return half * sum;
}

}  // namespace

void BathSpec::validate() const {
    if (!(e_minus < e_plus)) throw ConfigError("BathSpec: e_minus must be < e_plus");
    if (beta < 0.0) throw ConfigError("BathSpec: beta must be >= 0");
    if (!(epsilon > 0.0)) throw ConfigError("BathSpec: epsilon must be > 0");
    if (quadrature_points < 2) throw ConfigError("BathSpec: quadrature_points must be >= 2");
}

double fermi_weight_plus(double energy, double beta, double mu) {
    const double x = -beta * (energy - mu);
    if (x > 700.0) return 0.0;
    if (x < -700.0) return 1.0;
    return 1.0 / (1.0 + std::exp(x));
}

double fermi_weight_minus(double energy, double beta, double mu) {
    const double x = beta * (energy - mu);
    if (x > 700.0) return 0.0;
    if (x < -700.0) return 1.0;
    return 1.0 / (1.0 + std::exp(x));
}

Complex c_continuous(KernelSign sign, double tau, const BathSpec& spec, double tol) {
    spec.validate();
    // Resolve the phase exp(∓ i E tau / eps): at least 10 nodes per period.
    const double periods =
        (spec.e_plus - spec.e_minus) * std::abs(tau) / (2.0 * std::numbers::pi * spec.epsilon);
    int n = std::max(spec.quadrature_points, static_cast<int>(std::ceil(10.0 * periods)));
    const Complex coarse = band_integral(sign, tau, spec, n);
    const Complex fine = band_integral(sign, tau, spec, n + n / 2 + 8);
    const double scale = std::max(1.0, std::abs(fine));
    if (std::abs(fine - coarse) > tol * scale)
        throw InsufficientQuadrature("c_continuous: quadrature error estimate " +
                                     std::to_string(std::abs(fine - coarse)) +
                                     " above tolerance at tau=" + std::to_string(tau));
    return fine;
}

Complex c_discrete(KernelSign sign, double tau, int k, int n_band, const BathSpec& spec) {
    const double h = (spec.e_plus - spec.e_minus) / n_band;
    const double e_k = spec.e_minus + (k - 0.5) * h;
    const double s = (sign == KernelSign::Plus) ? 1.0 : -1.0;
    const double weight = (sign == KernelSign::Plus)
                              ? fermi_weight_plus(e_k, spec.beta, spec.mu)
                              : fermi_weight_minus(e_k, spec.beta, spec.mu);
    return weight * std::exp(-kI * s * e_k * tau / spec.epsilon);
}

Complex c_discrete_band_sum(KernelSign sign, double tau, int n_band, const BathSpec& spec) {
    const double h = (spec.e_plus - spec.e_minus) / n_band;
    Complex sum{0.0, 0.0};
    for (int k = 1; k <= n_band; ++k) sum += c_discrete(sign, tau, k, n_band, spec);
    return h * sum;
}

std::pair<Complex, Complex> markov_constants(const BathSpec& spec,
                                             std::optional<Complex> c0_plus_override,
                                             std::optional<Complex> c0_minus_override) {
    const Complex def = 2.0 * std::numbers::pi * spec.epsilon;
    return {c0_plus_override.value_or(def), c0_minus_override.value_or(def)};
}

namespace {

void check_psd(const Eigen::MatrixXcd& k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(k, Eigen::EigenvaluesOnly);
    const double largest = std::max(es.eigenvalues().maxCoeff(), 0.0);
    const double floor = -kTolPsd * std::max(largest, 1e-300);
    if (es.eigenvalues().minCoeff() < floor)
        throw KernelNotPSD("covariance matrix has eigenvalue " +
                           std::to_string(es.eigenvalues().minCoeff()) +
                           " below PSD tolerance");
}

}  // namespace

KernelMatrix covariance_matrix(KernelSign sign, const Eigen::VectorXd& times, const BathSpec& spec) {
    spec.validate();
    const Eigen::Index n = times.size();
    if (n < 1) throw InvalidKernel("covariance_matrix: empty time grid");
    const double dt = (n > 1) ? times[1] - times[0] : 0.0;
    for (Eigen::Index i = 1; i < n; ++i)
        if (std::abs((times[i] - times[i - 1]) - dt) > 1e-12 * std::max(1.0, std::abs(dt)))
            throw InvalidKernel("covariance_matrix: non-uniform time grid");
    if (std::abs(times[0]) > 1e-15) throw InvalidKernel("covariance_matrix: grid must start at 0");

    // c on the uniform lag grid, tau = j*dt for j in [-(n-1), n-1].
    std::vector<Complex> lag(2 * n - 1);
    for (Eigen::Index j = 0; j < n; ++j) {
        lag[n - 1 + j] = c_continuous(sign, j * dt, spec);
        lag[n - 1 - j] = std::conj(lag[n - 1 + j]);
    }
    auto c_at = [&](Eigen::Index p, Eigen::Index q) { return lag[n - 1 + (p - q)]; };

    // Trapezoid in q per row, then trapezoid in p, via prefix sums.
    Eigen::MatrixXcd row_trap(n, n);  // row_trap(p, j) = sum'_{q<=j} c(p,q)
    for (Eigen::Index p = 0; p < n; ++p) {
        Complex acc{0.0, 0.0};
        for (Eigen::Index j = 0; j < n; ++j) {
            acc += c_at(p, j);
            row_trap(p, j) = acc - 0.5 * c_at(p, 0) - 0.5 * c_at(p, j);
        }
    }
    Eigen::MatrixXcd k(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Complex acc{0.0, 0.0};
        for (Eigen::Index i = 0; i < n; ++i) {
            acc += row_trap(i, j);
            k(i, j) = (acc - 0.5 * row_trap(0, j) - 0.5 * row_trap(i, j)) * dt * dt;
        }
    }
    k = 0.5 * (k + k.adjoint().eval());
    check_psd(k);
    return {times, std::move(k)};
}

KernelMatrix covariance_delta(const Eigen::VectorXd& times, double c0) {
    if (c0 < 0.0) throw InvalidKernel("covariance_delta: c0 must be >= 0");
    const Eigen::Index n = times.size();
    Eigen::MatrixXcd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) k(i, j) = c0 * std::min(times[i], times[j]);
    return {times, std::move(k)};
}

void write_kernel_csv(const KernelMatrix& kernel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    const Eigen::Index n = kernel.values.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j) out << ',';
            out << kernel.values(i, j).real() << ',' << kernel.values(i, j).imag();
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace ahsse
