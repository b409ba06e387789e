#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "ahsse/bath.hpp"

using namespace ahsse;
using std::numbers::pi;

namespace {
BathSpec default_spec() {
    BathSpec s;
    s.beta = 1.0;
    s.e_minus = -2.0;
    s.e_plus = 2.0;
    s.epsilon = 1.0 / 32.0;
    return s;
}
}  // namespace

TEST_CASE("BathSpec validation") {
    BathSpec s = default_spec();
    CHECK_NOTHROW(s.validate());
    s.e_minus = 3.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = default_spec();
    s.beta = -1.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = default_spec();
    s.epsilon = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("Fermi weights saturate and are complementary") {
    CHECK(fermi_weight_plus(1e6, 1.0) == doctest::Approx(1.0));
    CHECK(fermi_weight_plus(-1e6, 1.0) == doctest::Approx(0.0));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 50; ++i) {
        const double e = u(rng);
        CHECK(std::abs(fermi_weight_plus(e, 1.3, 0.2) + fermi_weight_minus(e, 1.3, 0.2) - 1.0) <
              1e-15);
    }
}

TEST_CASE("c_continuous: constant integrand at beta=0") {
    BathSpec s = default_spec();
    s.beta = 0.0;
    s.e_minus = -1.0;
    s.e_plus = 1.0;
    CHECK(c_continuous(KernelSign::Plus, 0.0, s).real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c_continuous(KernelSign::Plus, 0.0, s).imag() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("c_continuous: Hermitian symmetry c(-tau) = conj(c(tau))") {
    const BathSpec s = default_spec();
    for (double tau : {0.05, 0.17, 0.3, 0.62}) {
        for (KernelSign sign : {KernelSign::Plus, KernelSign::Minus}) {
            const Complex a = c_continuous(sign, tau, s);
            const Complex b = c_continuous(sign, -tau, s);
            CHECK(std::abs(b - std::conj(a)) < 1e-12);
        }
    }
}

TEST_CASE("c_continuous: frozen reference values") {
    const BathSpec s = default_spec();
    // Independent adaptive quadrature of the band integral.
    const Complex cp01 = c_continuous(KernelSign::Plus, 0.1, s);
    CHECK(cp01.real() == doctest::Approx(0.0364216265157792).epsilon(1e-9));
    CHECK(cp01.imag() == doctest::Approx(0.238709778763884).epsilon(1e-9));
    const Complex cp05 = c_continuous(KernelSign::Plus, 0.5, s);
    CHECK(cp05.real() == doctest::Approx(0.0344641675776056).epsilon(1e-9));
    CHECK(cp05.imag() == doctest::Approx(0.0392896761864333).epsilon(1e-9));
    CHECK(c_continuous(KernelSign::Plus, 0.0, s).real() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("c_continuous: closed-form band identity at tau=0.3") {
    const BathSpec s = default_spec();
    const double tau = 0.3;
    const Complex mi(0.0, -1.0);
    const Complex closed = (s.epsilon / (mi * tau)) *
                           (std::exp(mi * s.e_plus * tau / s.epsilon) -
                            std::exp(mi * s.e_minus * tau / s.epsilon));
    const Complex sum =
        c_continuous(KernelSign::Plus, tau, s) + std::conj(c_continuous(KernelSign::Minus, tau, s));
    CHECK(std::abs(sum - closed) < 1e-8 * std::abs(closed));
    CHECK(closed.real() == doctest::Approx(0.07152394350414487).epsilon(1e-12));
}

TEST_CASE("c_continuous: error estimate can reject too-coarse quadrature") {
    // A sharp off-center Fermi edge defeats a 2-point rule (symmetric
    // integrands are exact at any order and cannot trigger the estimate).
    BathSpec s = default_spec();
    s.quadrature_points = 2;
    s.beta = 50.0;
    s.mu = 0.5;
    CHECK_THROWS_AS(c_continuous(KernelSign::Plus, 0.0, s), InsufficientQuadrature);
    CHECK_NOTHROW(c_continuous(KernelSign::Plus, 0.0, s, 1.0));  // loose tolerance passes
}

TEST_CASE("c_discrete on the midpoint energy grid") {
    const BathSpec s = default_spec();
    // Band [-2,2], N=5: E_3 = -2 + 2.5*0.8 = 0.
    CHECK(c_discrete(KernelSign::Plus, 0.0, 3, 5, s).real() == doctest::Approx(0.5));
    CHECK(c_discrete(KernelSign::Plus, 0.0, 3, 5, s).imag() == doctest::Approx(0.0));
    // Unit-modulus phase: |C_k(tau)| independent of tau.
    for (double tau : {0.0, 0.2, 0.7}) {
        const double mag = std::abs(c_discrete(KernelSign::Minus, tau, 2, 5, s));
        CHECK(mag == doctest::Approx(std::abs(c_discrete(KernelSign::Minus, 0.0, 2, 5, s)))
                         .epsilon(1e-14));
    }
}

TEST_CASE("band sum converges to the continuous kernel") {
    const BathSpec s = default_spec();
    const double tau = 0.5;
    const Complex cont = c_continuous(KernelSign::Plus, tau, s);
    const Complex sum = c_discrete_band_sum(KernelSign::Plus, tau, 10000, s);
    CHECK(std::abs(sum - cont) < 1e-4);
}

TEST_CASE("markov_constants default and override") {
    const BathSpec s = default_spec();
    const auto [p, m] = markov_constants(s);
    CHECK(p.real() == doctest::Approx(2.0 * pi / 32.0).epsilon(1e-14));
    CHECK(m == p);
    const auto [po, mo] = markov_constants(s, Complex(1.0, 0.0), Complex(1.0, 0.0));
    CHECK(po == Complex(1.0, 0.0));
    CHECK(mo == Complex(1.0, 0.0));
}

TEST_CASE("wide-band beta=0 kernel integrates to 2*pi*eps*f(0) over a symmetric window") {
    BathSpec s;
    s.beta = 0.0;
    s.e_minus = -50.0;
    s.e_plus = 50.0;
    s.epsilon = 1.0 / 32.0;
    // int_{-10 eps}^{10 eps} c^+(tau) dtau by trapezoid; the delta family
    // sharpens as the band widens, with half the mass on each half-axis.
    const int n = 1200;
    const double w = 10.0 * s.epsilon;
    const double h = 2.0 * w / n;
    Complex acc{0.0, 0.0};
    for (int i = 0; i <= n; ++i) {
        const double tau = -w + i * h;
        const double weight = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += weight * c_continuous(KernelSign::Plus, tau, s);
    }
    acc *= h;
    const double expected = 2.0 * pi * s.epsilon * 0.5;  // f(0) = 1/2 at beta = 0
    CHECK(std::abs(acc - expected) < 0.02 * expected);
}

TEST_CASE("covariance_delta reproduces the Brownian kernel") {
    Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(9, 0.0, 1.0);
    const KernelMatrix k = covariance_delta(times, 2.0);
    CHECK(k.values(3, 5).real() == doctest::Approx(2.0 * times[3]));
    CHECK(k.values(5, 3).real() == doctest::Approx(2.0 * times[3]));
    CHECK(k.values(0, 7) == Complex(0.0, 0.0));
    CHECK_THROWS_AS(covariance_delta(times, -1.0), InvalidKernel);
}

TEST_CASE("covariance_matrix requires a uniform grid from zero") {
    const BathSpec s = default_spec();
    Eigen::VectorXd bad(3);
    bad << 0.0, 0.1, 0.3;
    CHECK_THROWS_AS(covariance_matrix(KernelSign::Plus, bad, s), InvalidKernel);
    Eigen::VectorXd shifted(3);
    shifted << 0.5, 0.6, 0.7;
    CHECK_THROWS_AS(covariance_matrix(KernelSign::Plus, shifted, s), InvalidKernel);
}

TEST_CASE("covariance_matrix against brute-force fine quadrature") {
    const BathSpec s = default_spec();
    const int n = 17;          // coarse grid on [0, 0.25]
    const int refine = 4;      // oracle resolution multiplier
    const double t_max = 0.25;
    Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(n, 0.0, t_max);
    const KernelMatrix k = covariance_matrix(KernelSign::Plus, times, s);

    // Oracle: direct double trapezoid sum on a 4x finer grid.
    const int nf = (n - 1) * refine + 1;
    const double dtf = t_max / (nf - 1);
    std::vector<Complex> lag(nf);
    for (int j = 0; j < nf; ++j) lag[j] = c_continuous(KernelSign::Plus, j * dtf, s);
    auto c_at = [&](int p, int q) {
        return (p >= q) ? lag[p - q] : std::conj(lag[q - p]);
    };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int pi_ = i * refine, qi = j * refine;
            Complex acc{0.0, 0.0};
            for (int p = 0; p <= pi_; ++p) {
                const double wp = (p == 0 || p == pi_) ? 0.5 : 1.0;
                for (int q = 0; q <= qi; ++q) {
                    const double wq = (q == 0 || q == qi) ? 0.5 : 1.0;
                    acc += wp * wq * c_at(p, q);
                }
            }
            acc *= dtf * dtf;
            if (pi_ == 0 || qi == 0) acc = Complex(0.0, 0.0);
            CHECK(std::abs(k.values(i, j) - acc) < 1e-3);
        }
    }

    // K(0, t) = 0 for all t.
    for (int j = 0; j < n; ++j) CHECK(std::abs(k.values(0, j)) < 1e-12);
    // Hermitian as stored.
    CHECK((k.values - k.values.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("covariance matrices are PSD for several bath settings") {
    for (double beta : {0.0, 1.0, 4.0}) {
        BathSpec s = default_spec();
        s.beta = beta;
        Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(33, 0.0, 0.5);
        for (KernelSign sign : {KernelSign::Plus, KernelSign::Minus})
            CHECK_NOTHROW(covariance_matrix(sign, times, s));
    }
}

TEST_CASE("kernel CSV export") {
    Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(4, 0.0, 1.0);
    const KernelMatrix k = covariance_delta(times, 1.0);
    const std::string path = (std::filesystem::temp_directory_path() / "k_test.csv").string();
    write_kernel_csv(k, path);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4);
    std::filesystem::remove(path);
}
