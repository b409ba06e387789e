#include "ahsse/grid.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace ahsse {

SpatialGrid make_grid(double a, double b, int m) {
    if (!(a < b)) throw ConfigError("grid: a must be < b");
    if (m < 8 || (m & (m - 1)) != 0) throw ConfigError("grid: m must be a power of two >= 8");
    SpatialGrid grid;
    grid.a = a;
    grid.b = b;
    grid.m = m;
    grid.points.resize(m);
    grid.wavenumbers.resize(m);
    const double dx = (b - a) / m;
    for (int j = 0; j < m; ++j) grid.points[j] = a + j * dx;
    for (int l = 0; l < m; ++l) {
        const int signed_l = (l < m / 2) ? l : l - m;
        grid.wavenumbers[l] = 2.0 * std::numbers::pi * signed_l / (b - a);
    }
    return grid;
}

PotentialPair harmonic_pair(const SpatialGrid& grid, double g, double e_d) {
    PotentialPair p;
    p.u0 = 0.5 * grid.points.array().square();
    p.u1 = p.u0.array() + std::numbers::sqrt2 * g * grid.points.array() + g * g + e_d;
    return p;
}

PotentialPair shifted_harmonic(const SpatialGrid& grid, double slope) {
    PotentialPair p;
    p.u0 = 0.5 * grid.points.array().square();
    p.u1 = p.u0.array() + slope * grid.points.array();
    return p;
}

CouplingFunction build_coupling(const SpatialGrid& grid, const std::vector<GaussianTerm>& terms) {
    for (const auto& t : terms)
        if (!(t.width > 0.0)) throw ConfigError("coupling: gaussian width must be > 0");
    CouplingFunction c;
    c.spec = terms;
    c.v = Eigen::VectorXd::Zero(grid.m);
    for (const auto& t : terms)
        c.v.array() += t.amplitude *
                       (-t.width * (grid.points.array() - t.center).square() + t.offset).exp();
    return c;
}

CouplingFunction constant_coupling(const SpatialGrid& grid, double value) {
    CouplingFunction c;
    c.v = Eigen::VectorXd::Constant(grid.m, value);
    return c;
}

double component_norm_sq(const Eigen::VectorXcd& psi, const SpatialGrid& grid) {
    return psi.squaredNorm() * grid.dx();
}

double total_norm_sq(const SpinorState& state, const SpatialGrid& grid) {
    return component_norm_sq(state.psi0, grid) + component_norm_sq(state.psi1, grid);
}

SpinorState gaussian_packet(const SpatialGrid& grid, double q0, double p0, double epsilon,
                            double width_scale) {
    const double eps_w = epsilon * width_scale * width_scale;
    if (grid.dx() >= std::sqrt(eps_w))
        throw GridTooCoarse("gaussian_packet: dx must be < sqrt(eps_w) to resolve the packet");
    SpinorState state;
    state.psi0.resize(grid.m);
    state.psi1 = Eigen::VectorXcd::Zero(grid.m);
    const double norm = std::pow(std::numbers::pi * eps_w, -0.25);
    const Complex i{0.0, 1.0};
    for (int j = 0; j < grid.m; ++j) {
        const double x = grid.points[j] - q0;
        state.psi0[j] = norm * std::exp(-x * x / (2.0 * eps_w) + i * p0 * x / epsilon);
    }
    return state;
}

SpinorState nongaussian_packet(const SpatialGrid& grid, double epsilon) {
    if (grid.dx() >= std::sqrt(0.1))
        throw GridTooCoarse("nongaussian_packet: grid too coarse for the packet envelope");
    SpinorState state;
    state.psi0.resize(grid.m);
    state.psi1 = Eigen::VectorXcd::Zero(grid.m);
    const Complex i{0.0, 1.0};
    for (int j = 0; j < grid.m; ++j) {
        const double x = grid.points[j];
        state.psi0[j] = std::exp(-5.0 * (x + 1.0) * (x + 1.0) + i * std::sin(x) / epsilon);
    }
    state.psi0 /= std::sqrt(component_norm_sq(state.psi0, grid));
    return state;
}

SpinorState uniform_packet(const SpatialGrid& grid) {
    SpinorState state;
    state.psi0 = Eigen::VectorXcd::Constant(grid.m, 1.0 / std::sqrt(grid.length()));
    state.psi1 = Eigen::VectorXcd::Zero(grid.m);
    return state;
}

Eigen::VectorXcd kinetic_phase(const SpatialGrid& grid, double epsilon, double dt) {
    if (!(dt > 0.0)) throw ConfigError("kinetic_phase: dt must be > 0");
    Eigen::VectorXcd phase(grid.m);
    const Complex i{0.0, 1.0};
    for (int l = 0; l < grid.m; ++l) {
        const double mu = grid.wavenumbers[l];
        phase[l] = std::exp(-i * epsilon * mu * mu * dt / 2.0);
    }
    return phase;
}

void write_state_csv(const SpinorState& state, const SpatialGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "x,re_psi0,im_psi0,re_psi1,im_psi1\n";
    for (int j = 0; j < grid.m; ++j)
        out << grid.points[j] << ',' << state.psi0[j].real() << ',' << state.psi0[j].imag() << ','
            << state.psi1[j].real() << ',' << state.psi1[j].imag() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace ahsse
