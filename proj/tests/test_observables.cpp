#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <random>

#include "ahsse/observables.hpp"

using namespace ahsse;

namespace {
SpinorState make_state(const SpatialGrid& g, Complex a0, Complex a1) {
    SpinorState s;
    s.psi0 = Eigen::VectorXcd::Constant(g.m, a0);
    s.psi1 = Eigen::VectorXcd::Constant(g.m, a1);
    return s;
}
}  // namespace

TEST_CASE("transition rate limits and invariances") {
    const SpatialGrid g = make_grid(-1.0, 1.0, 16);
    CHECK(transition_rate(make_state(g, 1.0, 0.0), g) == doctest::Approx(1.0));
    CHECK(transition_rate(make_state(g, 0.0, 1.0), g) == doctest::Approx(0.0));
    CHECK(transition_rate(make_state(g, 1.0, 1.0), g) == doctest::Approx(0.5));
    // R0 + R1 = 1 exactly under component swap.
    const SpinorState s = make_state(g, Complex(0.3, 0.4), Complex(-0.2, 0.9));
    SpinorState sw;
    sw.psi0 = s.psi1;
    sw.psi1 = s.psi0;
    CHECK(transition_rate(s, g) + transition_rate(sw, g) == doctest::Approx(1.0).epsilon(1e-15));
    // Invariance under global scaling / phase (trajectories are unnormalized).
    SpinorState sc;
    const Complex z(1.7, -2.2);
    sc.psi0 = z * s.psi0;
    sc.psi1 = z * s.psi1;
    CHECK(transition_rate(sc, g) == doctest::Approx(transition_rate(s, g)).epsilon(1e-14));
    // Zero norm is an error.
    CHECK_THROWS(transition_rate(make_state(g, 0.0, 0.0), g));
}

TEST_CASE("mean position") {
    const SpatialGrid g = make_grid(-std::numbers::pi, std::numbers::pi, 512);
    // Uniform density: discrete mean is the grid-point average, -dx/2.
    CHECK(mean_position(uniform_packet(g), g) == doctest::Approx(-g.dx() / 2.0).epsilon(1e-10));
    // Coherent state centered at -1.
    const SpinorState c = gaussian_packet(g, -1.0, 0.0, 1.0 / 32.0);
    CHECK(mean_position(c, g) == doctest::Approx(-1.0).epsilon(1e-6));
    // Mixed-level state with equal-weight packets at +/-1: mean position 0.
    const SpinorState p = gaussian_packet(g, 1.0, 0.0, 1.0 / 32.0);
    SpinorState mix;
    mix.psi0 = c.psi0;
    mix.psi1 = p.psi0;
    CHECK(std::abs(mean_position(mix, g)) < 1e-6);
    CHECK(transition_rate(mix, g) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("sample_observables bundles the scalars") {
    const SpatialGrid g = make_grid(-2.0, 2.0, 64);
    SpinorState s = uniform_packet(g);
    s.time = 1.25;
    const ObservableSample o = sample_observables(s, g, 7);
    CHECK(o.time == 1.25);
    CHECK(o.trajectory_id == 7);
    CHECK(o.r == doctest::Approx(1.0));
    CHECK(o.norm0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(o.norm1 == 0.0);
    CHECK(o.x_mean == doctest::Approx(-g.dx() / 2.0).epsilon(1e-10));
}

TEST_CASE("histogram counting and moments") {
    const std::vector<double> xs{0.05, 0.15, 0.15, 0.95, -0.5, 1.5};
    const HistogramSummary h = histogram(xs, 10, 0.0, 1.0);
    CHECK(h.counts.size() == 10);
    CHECK(h.counts[0] == 1);
    CHECK(h.counts[1] == 2);
    CHECK(h.counts[9] == 1);
    CHECK(h.counts.sum() == 4);
    CHECK(h.underflow == 1);
    CHECK(h.overflow == 1);
    CHECK(h.n == 6);
    // Moments over all samples, including out-of-range ones.
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= (xs.size() - 1);
    CHECK(h.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(h.variance == doctest::Approx(var).epsilon(1e-12));

    CHECK_THROWS_AS(histogram({}, 10, 0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(histogram(xs, 0, 0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(histogram(xs, 10, 1.0, 0.0), ConfigError);
}

TEST_CASE("histogram of uniform draws is statistically flat") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 40000, bins = 40;
    std::vector<double> xs(n);
    for (auto& x : xs) x = u(rng);
    const HistogramSummary h = histogram(xs, bins, 0.0, 1.0);
    const double p = 1.0 / bins;
    const double sigma = std::sqrt(n * p * (1.0 - p));
    for (int b = 0; b < bins; ++b) CHECK(std::abs(h.counts[b] - n * p) < 5.0 * sigma);
    CHECK(h.mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(h.variance == doctest::Approx(1.0 / 12.0).epsilon(0.05));
}

TEST_CASE("histogram CSV export") {
    const HistogramSummary h = histogram({0.1, 0.2, 0.3}, 5, 0.0, 1.0);
    const std::string path = (std::filesystem::temp_directory_path() / "hist_test.csv").string();
    write_histogram_csv(h, path);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows >= 5);
    std::filesystem::remove(path);
}
