#pragma once

#include <Eigen/Dense>
#include <numbers>
#include <string>
#include <vector>

#include "ahsse/bath.hpp"

namespace ahsse {

/// Uniform periodic grid on [a,b) with the FFT wavenumber layout
/// mu_l = 2 pi l / (b-a), l = 0..m/2-1, -m/2..-1 (matching FFT bin order).
struct SpatialGrid {
    double a = -std::numbers::pi;
    double b = std::numbers::pi;
    int m = 512;  // power of two >= 8
    Eigen::VectorXd points;
    Eigen::VectorXd wavenumbers;

    double dx() const { return (b - a) / m; }
    double length() const { return b - a; }
};

SpatialGrid make_grid(double a, double b, int m);

struct PotentialPair {
    Eigen::VectorXd u0, u1;
};

/// U0 = x^2/2, U1 = U0 + sqrt(2) g x + g^2 + E_d.
PotentialPair harmonic_pair(const SpatialGrid& grid, double g, double e_d);
/// U0 = x^2/2, U1 = U0 + slope * x (the harmonic pair of the trajectory examples).
PotentialPair shifted_harmonic(const SpatialGrid& grid, double slope);

struct GaussianTerm {
    double amplitude = 1.0;
    double center = 0.0;
    double width = 1.0;   // exponent coefficient, exp(-width (x-center)^2 + offset)
    double offset = 0.0;
};

struct CouplingFunction {
    Eigen::VectorXd v;
    std::vector<GaussianTerm> spec;
};

CouplingFunction build_coupling(const SpatialGrid& grid, const std::vector<GaussianTerm>& terms);
CouplingFunction constant_coupling(const SpatialGrid& grid, double value);

/// Two-component wavefunction on the grid. SSE trajectories are not kept
/// normalized; observables divide by the norm.
struct SpinorState {
    Eigen::VectorXcd psi0, psi1;
    double time = 0.0;
};

double component_norm_sq(const Eigen::VectorXcd& psi, const SpatialGrid& grid);
double total_norm_sq(const SpinorState& state, const SpatialGrid& grid);

/// Coherent state (pi eps_w)^{-1/4} exp(-(x-q0)^2/(2 eps_w) + i p0 (x-q0)/eps)
/// on the neutral level, eps_w = eps * width_scale^2. Throws GridTooCoarse if
/// dx >= sqrt(eps_w).
SpinorState gaussian_packet(const SpatialGrid& grid, double q0, double p0, double epsilon,
                            double width_scale = 1.0);

/// psi0 ∝ exp(-5 (x+1)^2 + i sin(x)/eps), normalized to 1.
SpinorState nongaussian_packet(const SpatialGrid& grid, double epsilon);

/// psi0 ∝ 1, normalized to 1.
SpinorState uniform_packet(const SpatialGrid& grid);

/// Spectral kinetic phases exp(-i eps mu_l^2 dt / 2) in FFT bin order.
Eigen::VectorXcd kinetic_phase(const SpatialGrid& grid, double epsilon, double dt);

/// Snapshot CSV: x, re psi0, im psi0, re psi1, im psi1.
void write_state_csv(const SpinorState& state, const SpatialGrid& grid, const std::string& path);

}  // namespace ahsse
