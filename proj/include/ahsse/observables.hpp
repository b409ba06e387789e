#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ahsse/grid.hpp"

namespace ahsse {

struct ObservableSample {
    double time = 0.0;
    double r = 0.0;       // transition rate, in [0,1]
    double x_mean = 0.0;  // mean atomic position
    double norm0 = 0.0;   // |psi0|^2 integral
    double norm1 = 0.0;
    long trajectory_id = -1;
};

/// R = |psi0|^2 / (|psi0|^2 + |psi1|^2). Throws on zero total norm.
double transition_rate(const SpinorState& state, const SpatialGrid& grid);

/// <X> = int x (|psi0|^2 + |psi1|^2) / total norm.
double mean_position(const SpinorState& state, const SpatialGrid& grid);

ObservableSample sample_observables(const SpinorState& state, const SpatialGrid& grid,
                                    long trajectory_id = -1);

struct HistogramSummary {
    Eigen::VectorXd bin_edges;  // n_bins + 1, strictly increasing
    Eigen::VectorXi counts;     // n_bins
    long underflow = 0;
    long overflow = 0;
    double mean = 0.0;
    double variance = 0.0;  // sample variance (n - 1 denominator)
    long n = 0;
};

/// Left-closed uniform binning on [lo, hi); out-of-range samples land in the
/// under/overflow counters. Throws ConfigError on an empty sample list.
HistogramSummary histogram(const std::vector<double>& samples, int n_bins, double lo, double hi);

void write_histogram_csv(const HistogramSummary& hist, const std::string& path);

}  // namespace ahsse
