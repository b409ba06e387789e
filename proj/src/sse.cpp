#include "ahsse/sse.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>

namespace ahsse {

namespace {
std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

struct Fft::Impl {
    fftw_complex* buffer = nullptr;
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;
};

Fft::Fft(int n) : impl_(std::make_unique<Impl>()), n_(n) {
    if (n < 2) throw ConfigError("FFT size must be at least 2");
    impl_->buffer = fftw_alloc_complex(static_cast<std::size_t>(n));
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    impl_->forward =
        fftw_plan_dft_1d(n, impl_->buffer, impl_->buffer, FFTW_FORWARD, FFTW_ESTIMATE);
    impl_->inverse =
        fftw_plan_dft_1d(n, impl_->buffer, impl_->buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft::~Fft() {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    if (impl_->forward) fftw_destroy_plan(impl_->forward);
    if (impl_->inverse) fftw_destroy_plan(impl_->inverse);
    if (impl_->buffer) fftw_free(impl_->buffer);
}

void Fft::forward(Eigen::VectorXcd& data) {
    if (data.size() != n_) throw ConfigError("FFT input size mismatch");
    std::memcpy(impl_->buffer, data.data(), sizeof(fftw_complex) * n_);
    fftw_execute(impl_->forward);
    std::memcpy(data.data(), impl_->buffer, sizeof(fftw_complex) * n_);
}

void Fft::inverse(Eigen::VectorXcd& data) {
    if (data.size() != n_) throw ConfigError("FFT input size mismatch");
    std::memcpy(impl_->buffer, data.data(), sizeof(fftw_complex) * n_);
    fftw_execute(impl_->inverse);
    std::memcpy(data.data(), impl_->buffer, sizeof(fftw_complex) * n_);
    data /= static_cast<double>(n_);
}

void StepperConfig::validate() const {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
    if (memory_window < 0.0) throw ConfigError("memory window must be nonnegative");
    if (memory_stride < 1) throw ConfigError("memory stride must be >= 1");
}

MarkovianStepper::MarkovianStepper(const SpatialGrid& grid, const PotentialPair& potentials,
                                   const CouplingFunction& coupling, const StepperConfig& cfg)
    : grid_(grid), cfg_(cfg), fft_(grid.m) {
    cfg_.validate();
    if (potentials.u0.size() != grid.m || potentials.u1.size() != grid.m ||
        coupling.v.size() != grid.m) {
        throw ConfigError("potential/coupling size does not match grid");
    }
    const Complex mi(0.0, -1.0);
    pot_phase0_ = ((mi * cfg_.dt / cfg_.epsilon) * potentials.u0).array().exp();
    pot_phase1_ = ((mi * cfg_.dt / cfg_.epsilon) * potentials.u1).array().exp();
    kin_phase_ = kinetic_phase(grid, cfg_.epsilon, cfg_.dt);
    v_ = coupling.v.cast<Complex>();
    vsq_ = v_.cwiseProduct(v_);
}

void MarkovianStepper::hamiltonian_stage(Eigen::VectorXcd& psi, const Eigen::VectorXcd& pot_phase) {
    psi.array() *= pot_phase.array();
    fft_.forward(psi);
    psi.array() *= kin_phase_.array();
    fft_.inverse(psi);
}

void MarkovianStepper::check_finite(const SpinorState& state) const {
    if (!state.psi0.allFinite() || !state.psi1.allFinite()) {
        throw NumericalBlowup("wavefunction is not finite", step_index_);
    }
}

void MarkovianStepper::step(SpinorState& state, Complex dw_plus, Complex dw_minus) {
    hamiltonian_stage(state.psi0, pot_phase0_);
    hamiltonian_stage(state.psi1, pot_phase1_);

    const double gamma = (cfg_.lambda * cfg_.lambda) / (cfg_.epsilon * cfg_.epsilon);
    const Complex noise_scale(0.0, -cfg_.lambda / cfg_.epsilon);
    const Eigen::VectorXcd a = state.psi0;
    const Eigen::VectorXcd b = state.psi1;

    state.psi0 = a + (noise_scale * dw_plus) * v_.cwiseProduct(b) +
                 (gamma * cfg_.dt * cfg_.c0_minus) * vsq_.cwiseProduct(a);
    state.psi1 = b + (noise_scale * dw_minus) * v_.cwiseProduct(a) +
                 (gamma * cfg_.dt * cfg_.c0_plus) * vsq_.cwiseProduct(b);

    state.time += cfg_.dt;
    ++step_index_;
    check_finite(state);
}

MemoryKernelTable tabulate_memory_kernel(const BathSpec& spec, double dt, int stride,
                                         double memory_window) {
    if (!(dt > 0.0) || stride < 1) throw ConfigError("invalid memory kernel discretization");
    MemoryKernelTable table;
    table.tau_step = dt * stride;
    const int n_lags = static_cast<int>(std::llround(memory_window / table.tau_step));
    table.c_plus.reserve(n_lags + 1);
    table.c_minus.reserve(n_lags + 1);
    for (int j = 0; j <= n_lags; ++j) {
        const double tau = j * table.tau_step;
        table.c_plus.push_back(c_continuous(KernelSign::Plus, tau, spec));
        table.c_minus.push_back(c_continuous(KernelSign::Minus, tau, spec));
    }
    return table;
}

NonMarkovianStepper::NonMarkovianStepper(const SpatialGrid& grid, const PotentialPair& potentials,
                                         const CouplingFunction& coupling,
                                         const StepperConfig& cfg, MemoryKernelTable kernel)
    : MarkovianStepper(grid, potentials, coupling, cfg), kernel_(std::move(kernel)) {
    if (cfg_.memory_window > 0.0 && kernel_.c_plus.empty()) {
        throw ConfigError("memory kernel table is empty but a memory window was requested");
    }
}

void NonMarkovianStepper::step(SpinorState& state, HistoryBuffer& history, Complex dw_plus,
                               Complex dw_minus) {
    hamiltonian_stage(state.psi0, pot_phase0_);
    hamiltonian_stage(state.psi1, pot_phase1_);

    // History states ride along under the opposite level's propagator so that
    // the memory integrand V exp(-i h (t-s)/eps) V psi(s) is available at the
    // current time without re-propagation.
    for (HistoryEntry& entry : history) {
        hamiltonian_stage(entry.phi0, pot_phase1_);
        hamiltonian_stage(entry.phi1, pot_phase0_);
    }

    const double t_new = state.time + cfg_.dt;
    const double gamma = (cfg_.lambda * cfg_.lambda) / (cfg_.epsilon * cfg_.epsilon);
    const Complex noise_scale(0.0, -cfg_.lambda / cfg_.epsilon);
    const Eigen::VectorXcd a = state.psi0;
    const Eigen::VectorXcd b = state.psi1;

    Eigen::VectorXcd mem0 = Eigen::VectorXcd::Zero(grid_.m);
    Eigen::VectorXcd mem1 = Eigen::VectorXcd::Zero(grid_.m);
    if (cfg_.memory_window > 0.0) {
        const double h = kernel_.tau_step;
        const int max_lag = static_cast<int>(kernel_.c_plus.size()) - 1;
        // Trapezoidal rule in the lag variable: half weight at lag zero
        // (the current state carries it), full weight at stored entries.
        mem0 = (0.5 * h * kernel_.c_minus[0]) * vsq_.cwiseProduct(a);
        mem1 = (0.5 * h * kernel_.c_plus[0]) * vsq_.cwiseProduct(b);
        for (const HistoryEntry& entry : history) {
            const int j = static_cast<int>(std::llround((t_new - entry.birth_time) / h));
            if (j < 1 || j > max_lag) continue;
            const double w = (j == max_lag) ? 0.5 * h : h;
            mem0 += (w * kernel_.c_minus[j]) * v_.cwiseProduct(entry.phi0);
            mem1 += (w * kernel_.c_plus[j]) * v_.cwiseProduct(entry.phi1);
        }
    }

    state.psi0 = a + (noise_scale * dw_plus) * v_.cwiseProduct(b) + (gamma * cfg_.dt) * mem0;
    state.psi1 = b + (noise_scale * dw_minus) * v_.cwiseProduct(a) + (gamma * cfg_.dt) * mem1;
    state.time = t_new;
    ++step_index_;

    if (cfg_.memory_window > 0.0 && step_index_ % cfg_.memory_stride == 0) {
        history.push_back({state.time, v_.cwiseProduct(state.psi0), v_.cwiseProduct(state.psi1)});
    }
    while (!history.empty() &&
           state.time - history.front().birth_time > cfg_.memory_window + 0.5 * cfg_.dt) {
        history.pop_front();
    }

    check_finite(state);
}

TrajectoryRecord propagate_trajectory(const SpatialGrid& grid, const PotentialPair& potentials,
                                      const CouplingFunction& coupling, const StepperConfig& cfg,
                                      const SpinorState& initial, const NoisePath& noise,
                                      const TrajectorySettings& settings,
                                      const MemoryKernelTable* kernel) {
    if (settings.t_final < 0.0) throw ConfigError("trajectory horizon must be nonnegative");
    if (settings.sample_stride < 1) throw ConfigError("sample stride must be >= 1");
    const long n_steps = std::llround(settings.t_final / cfg.dt);
    if (noise.dw_plus.size() < n_steps || noise.dw_minus.size() < n_steps) {
        throw ConfigError("noise path shorter than the trajectory time grid");
    }

    TrajectoryRecord record;
    SpinorState state = initial;
    state.time = 0.0;

    auto sample = [&](const SpinorState& s) {
        record.samples.push_back(sample_observables(s, grid, settings.trajectory_id));
        if (settings.keep_snapshots) record.snapshots.push_back(s);
    };
    sample(state);

    try {
        if (cfg.mode == StepperMode::Markovian) {
            MarkovianStepper stepper(grid, potentials, coupling, cfg);
            for (long n = 0; n < n_steps; ++n) {
                stepper.step(state, noise.dw_plus[n], noise.dw_minus[n]);
                if ((n + 1) % settings.sample_stride == 0 || n + 1 == n_steps) sample(state);
            }
        } else {
            MemoryKernelTable empty;
            NonMarkovianStepper stepper(grid, potentials, coupling, cfg,
                                        kernel ? *kernel : empty);
            HistoryBuffer history;
            for (long n = 0; n < n_steps; ++n) {
                stepper.step(state, history, noise.dw_plus[n], noise.dw_minus[n]);
                if ((n + 1) % settings.sample_stride == 0 || n + 1 == n_steps) sample(state);
            }
        }
    } catch (const NumericalBlowup& e) {
        record.aborted = true;
        record.abort_step = e.step_index;
    }
    return record;
}

void write_trajectory_csv(const TrajectoryRecord& record, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "t,R,X,norm0,norm1\n";
    out.precision(15);
    for (const ObservableSample& s : record.samples) {
        out << s.time << ',' << s.r << ',' << s.x_mean << ',' << s.norm0 << ',' << s.norm1 << '\n';
    }
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace ahsse
