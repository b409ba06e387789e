#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ahsse/bath.hpp"
#include "ahsse/grid.hpp"
#include "ahsse/sse.hpp"

namespace ahsse {

struct GridConfig {
    double a = -std::numbers::pi;
    double b = std::numbers::pi;
    int m = 512;
};

struct TimeConfig {
    double dt = 1e-3;
    double t_final = 10.0;
    int sample_stride = 100;
};

struct PhysicsConfig {
    double epsilon = 1.0 / 32.0;
    double lambda = 1.0 / 32.0;
    double beta = 1.0;
    double e_minus = -2.0;
    double e_plus = 2.0;
    double mu = 0.0;
    int quadrature_points = 400;
    std::optional<Complex> c0_plus_override, c0_minus_override;
    StepperMode mode = StepperMode::Markovian;
    double memory_window = 0.0;
    int memory_stride = 1;

    BathSpec bath() const;
};

struct PotentialConfig {
    std::string type = "shifted_harmonic";  // shifted_harmonic | harmonic_pair | free
    double slope = 0.1;                     // shifted_harmonic
    double g = 0.1, e_d = 0.1;              // harmonic_pair
};

struct CouplingConfig {
    std::string type = "constant";  // constant | gaussians
    double value = 1.0;
    std::vector<GaussianTerm> terms;
};

struct InitialStateConfig {
    std::string type = "gaussian";  // gaussian | nongaussian | uniform
    double q0 = -1.0;
    double p0 = 0.5;
    double width_scale = 1.0;
};

struct EnsembleConfig {
    long n_trajectories = 4000;
    std::uint64_t master_seed = 20240901;
    int worker_count = 0;  // 0: hardware concurrency (AHSSE_THREADS overrides)
};

struct OutputConfig {
    std::string directory = "out";
    bool write_timeseries = true;
    bool write_final_samples = true;
    bool write_histograms = true;
    bool snapshots = false;
    int histogram_bins = 40;
};

struct QmeConfig {
    bool enabled = false;
    std::string form = "markovian";  // markovian | fh | redfield
    double dt = 1e-3;
    double horizon = 0.0;  // kernel horizon for fh/redfield coefficients
};

struct SimulationConfig {
    GridConfig grid;
    TimeConfig time;
    PhysicsConfig physics;
    PotentialConfig potential;
    CouplingConfig coupling;
    InitialStateConfig initial_state;
    EnsembleConfig ensemble;
    OutputConfig output;
    QmeConfig qme;

    void validate() const;

    SpatialGrid make_spatial_grid() const;
    PotentialPair make_potentials(const SpatialGrid& g) const;
    CouplingFunction make_coupling(const SpatialGrid& g) const;
    SpinorState make_initial_state(const SpatialGrid& g) const;
    StepperConfig make_stepper_config() const;
};

/// JSON (de)serialization; unknown keys are rejected, missing keys take the
/// defaults above. Throws ConfigError with key context on bad input.
SimulationConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const SimulationConfig& config);

SimulationConfig load_config(const std::string& path);
void save_config(const SimulationConfig& config, const std::string& path);

/// Apply a `section.key=value` override (CLI --set) on top of a config.
void apply_override(SimulationConfig& config, const std::string& assignment);

}  // namespace ahsse
