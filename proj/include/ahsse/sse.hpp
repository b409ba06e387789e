#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "ahsse/grid.hpp"
#include "ahsse/noise.hpp"
#include "ahsse/observables.hpp"

namespace ahsse {

/// In-place power-of-two FFT on Eigen complex vectors. Each instance owns its
/// FFTW plans; plan creation is serialized internally, execution is
/// per-instance and safe to run on concurrent steppers.
class Fft {
  public:
    explicit Fft(int n);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    void forward(Eigen::VectorXcd& data);   // unnormalized
    void inverse(Eigen::VectorXcd& data);   // normalized by 1/n

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int n_;
};

enum class StepperMode { Markovian, NonMarkovian };

struct StepperConfig {
    double dt = 1e-3;
    double epsilon = 1.0 / 32.0;
    double lambda = 1.0 / 32.0;
    Complex c0_plus{0.0, 0.0};
    Complex c0_minus{0.0, 0.0};
    StepperMode mode = StepperMode::Markovian;
    double memory_window = 0.0;  // max retained lag for the non-Markovian memory sum
    int memory_stride = 1;       // history thinning factor

    void validate() const;
};

/// Split-step spectral + Euler-Maruyama integrator for the Markovian SSE.
/// A stepper instance is single-trajectory; shared inputs are immutable.
class MarkovianStepper {
  public:
    MarkovianStepper(const SpatialGrid& grid, const PotentialPair& potentials,
                     const CouplingFunction& coupling, const StepperConfig& cfg);

    /// One step: potential phase, spectral kinetic phase, then the
    /// Euler-Maruyama fluctuation-dissipation update with increments
    /// dW_± over [t, t+dt]. Throws NumericalBlowup on non-finite state.
    void step(SpinorState& state, Complex dw_plus, Complex dw_minus);

    const StepperConfig& config() const { return cfg_; }

  protected:
    void hamiltonian_stage(Eigen::VectorXcd& psi, const Eigen::VectorXcd& pot_phase);
    void check_finite(const SpinorState& state) const;

    const SpatialGrid& grid_;
    StepperConfig cfg_;
    Eigen::VectorXcd pot_phase0_, pot_phase1_, kin_phase_;
    Eigen::VectorXcd v_, vsq_;  // real-valued coupling stored complex for cwise ops
    Fft fft_;
    long step_index_ = 0;
};

struct HistoryEntry {
    double birth_time = 0.0;
    Eigen::VectorXcd phi0;  // V psi0(t_k), evolved under h1
    Eigen::VectorXcd phi1;  // V psi1(t_k), evolved under h0
};

using HistoryBuffer = std::deque<HistoryEntry>;

/// Kernel values c^±(tau) needed by the memory sum, tabulated at multiples
/// of dt * memory_stride.
struct MemoryKernelTable {
    std::vector<Complex> c_plus;
    std::vector<Complex> c_minus;
    double tau_step = 0.0;
};

MemoryKernelTable tabulate_memory_kernel(const BathSpec& spec, double dt, int stride,
                                         double memory_window);

/// Non-Markovian stepper: Hamiltonian stages as in the Markovian scheme, the
/// stage-3 dissipation replaced by a trapezoidal memory sum over history
/// states carried forward by the split propagator of the opposite level.
class NonMarkovianStepper : public MarkovianStepper {
  public:
    NonMarkovianStepper(const SpatialGrid& grid, const PotentialPair& potentials,
                        const CouplingFunction& coupling, const StepperConfig& cfg,
                        MemoryKernelTable kernel);

    void step(SpinorState& state, HistoryBuffer& history, Complex dw_plus, Complex dw_minus);

  private:
    MemoryKernelTable kernel_;
};

struct TrajectoryRecord {
    std::vector<ObservableSample> samples;
    std::vector<SpinorState> snapshots;  // filled only when requested
    bool aborted = false;
    long abort_step = -1;
};

struct TrajectorySettings {
    double t_final = 10.0;
    int sample_stride = 100;
    bool keep_snapshots = false;
    long trajectory_id = -1;
};

/// Iterate the configured stepper from t=0 to T, recording observables every
/// sample_stride steps (plus the initial and final states). The noise grid
/// must match the time grid (t_final / dt steps).
TrajectoryRecord propagate_trajectory(const SpatialGrid& grid, const PotentialPair& potentials,
                                      const CouplingFunction& coupling, const StepperConfig& cfg,
                                      const SpinorState& initial, const NoisePath& noise,
                                      const TrajectorySettings& settings,
                                      const MemoryKernelTable* kernel = nullptr);

/// Trajectory time series CSV: t, R, X, norm0, norm1.
void write_trajectory_csv(const TrajectoryRecord& record, const std::string& path);

}  // namespace ahsse
