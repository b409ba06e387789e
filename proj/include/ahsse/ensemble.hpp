#pragma once

#include <string>
#include <vector>

#include "ahsse/config.hpp"
#include "ahsse/observables.hpp"
#include "ahsse/qme.hpp"
#include "ahsse/sse.hpp"

namespace ahsse {

/// Ensemble-reduced observables. P0/P1 are the normalized per-trajectory
/// level populations (P0 = R, P1 = 1 - R pointwise), averaged like R and X.
struct EnsembleResult {
    std::vector<double> times;
    std::vector<double> r_mean, r_se;
    std::vector<double> x_mean, x_se;
    std::vector<double> p0_mean, p0_se;
    std::vector<double> p1_mean, p1_se;
    std::vector<double> final_r, final_x;  // per-trajectory samples at t = T
    long n_trajectories = 0;
    long aborted = 0;
    double wall_seconds = 0.0;  // excluded from the determinism contract
    SimulationConfig config_echo;
};

/// Effective worker count: AHSSE_THREADS env wins, then the configured value,
/// then hardware concurrency.
int resolve_worker_count(int configured);

/// Run the Monte-Carlo ensemble described by the config. Deterministic for a
/// fixed config regardless of worker count (per-trajectory seeding, ordered
/// compensated reduction). Throws NumericalBlowup if more than 1% of
/// trajectories abort.
EnsembleResult run_ensemble(const SimulationConfig& config);

/// Integrate the QME selected by config.qme on the config's grid and horizon.
std::vector<BlockDensityMatrix> run_qme(const SimulationConfig& config);

struct PresetResult {
    EnsembleResult ensemble;
    std::vector<BlockDensityMatrix> qme_series;  // sse_vs_qme only
    SimulationConfig config;
};

/// Known presets: example1 | example2 | example3 | sse_vs_qme.
SimulationConfig preset_config(const std::string& name);

/// Instantiate a preset, apply `section.key=value` overrides, run the
/// ensemble (plus the QME for sse_vs_qme), and write artifacts.
PresetResult run_preset(const std::string& name, const std::vector<std::string>& overrides);

/// Write config echo (JSON), time-series CSV, final-sample CSV, histogram
/// CSVs, and run metadata into config.output.directory.
void write_results(const EnsembleResult& result, const SimulationConfig& config,
                   const std::vector<BlockDensityMatrix>& qme_series = {});

}  // namespace ahsse
