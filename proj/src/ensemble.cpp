#include "ahsse/ensemble.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

namespace ahsse {

namespace {

// Compensated (Kahan) accumulator so reductions are partition-invariant.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

struct SeriesStats {
    std::vector<KahanSum> sum, sum_sq;
    explicit SeriesStats(std::size_t n) : sum(n), sum_sq(n) {}
    void add(std::size_t i, double v) {
        sum[i].add(v);
        sum_sq[i].add(v * v);
    }
    void finalize(long n, std::vector<double>& mean, std::vector<double>& se) const {
        mean.resize(sum.size());
        se.resize(sum.size());
        for (std::size_t i = 0; i < sum.size(); ++i) {
            mean[i] = sum[i].sum / n;
            if (n > 1) {
                const double var =
                    std::max(0.0, (sum_sq[i].sum - n * mean[i] * mean[i]) / (n - 1));
                se[i] = std::sqrt(var / n);
            } else {
                se[i] = 0.0;
            }
        }
    }
};

constexpr Eigen::Index kMaxKlGrid = 4097;

}  // namespace

int resolve_worker_count(int configured) {
    if (const char* env = std::getenv("AHSSE_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    if (configured >= 1) return configured;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

EnsembleResult run_ensemble(const SimulationConfig& config) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();

    const SpatialGrid grid = config.make_spatial_grid();
    const PotentialPair potentials = config.make_potentials(grid);
    const CouplingFunction coupling = config.make_coupling(grid);
    const SpinorState initial = config.make_initial_state(grid);
    const StepperConfig stepper_cfg = config.make_stepper_config();
    const BathSpec bath = config.physics.bath();

    const long n_steps = std::llround(config.time.t_final / config.time.dt);
    Eigen::VectorXd times(n_steps + 1);
    for (long n = 0; n <= n_steps; ++n) times[n] = n * config.time.dt;

    // Shared immutable noise machinery. Markovian runs sample Brownian
    // increments directly; non-Markovian runs go through the KL basis of the
    // correlated covariance, which bounds the usable time-grid size.
    const bool markovian = stepper_cfg.mode == StepperMode::Markovian;
    double c0p_var = 0.0, c0m_var = 0.0;
    KLBasis basis_plus, basis_minus;
    MemoryKernelTable kernel_table;
    if (markovian) {
        c0p_var = stepper_cfg.c0_plus.real();
        c0m_var = stepper_cfg.c0_minus.real();
        if (c0p_var < 0.0 || c0m_var < 0.0)
            throw ConfigError("Markovian noise variance Re(c0) must be nonnegative");
    } else {
        if (times.size() > kMaxKlGrid)
            throw ConfigError("non-Markovian run: time grid too large for KL sampling (" +
                              std::to_string(times.size()) + " points)");
        basis_plus = kl_decompose(covariance_matrix(KernelSign::Plus, times, bath));
        basis_minus = kl_decompose(covariance_matrix(KernelSign::Minus, times, bath));
        kernel_table = tabulate_memory_kernel(bath, config.time.dt, config.physics.memory_stride,
                                              config.physics.memory_window);
    }

    TrajectorySettings settings;
    settings.t_final = config.time.t_final;
    settings.sample_stride = config.time.sample_stride;
    settings.keep_snapshots = false;

    const long n_traj = config.ensemble.n_trajectories;
    std::vector<TrajectoryRecord> records(n_traj);
    std::atomic<long> next{0};

    auto worker = [&]() {
        for (;;) {
            const long i = next.fetch_add(1);
            if (i >= n_traj) break;
            const std::uint64_t seed = split_seed(config.ensemble.master_seed,
                                                  static_cast<std::uint64_t>(i));
            NoisePath noise = markovian
                                  ? sample_brownian_path(times, c0p_var, c0m_var, seed)
                                  : sample_noise_path(basis_plus, basis_minus, seed);
            TrajectorySettings s = settings;
            s.trajectory_id = i;
            records[i] = propagate_trajectory(grid, potentials, coupling, stepper_cfg, initial,
                                              noise, s, markovian ? nullptr : &kernel_table);
        }
    };

    const int n_workers = std::min<long>(resolve_worker_count(config.ensemble.worker_count),
                                         n_traj);
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    EnsembleResult result;
    result.config_echo = config;
    result.n_trajectories = n_traj;
    std::size_t n_samples = 0;
    for (const TrajectoryRecord& r : records) {
        if (r.aborted) ++result.aborted;
        else n_samples = r.samples.size();
    }
    if (result.aborted > n_traj / 100)
        throw NumericalBlowup("ensemble abort fraction above 1% (" +
                                  std::to_string(result.aborted) + " of " +
                                  std::to_string(n_traj) + " trajectories)",
                              0);
    const long n_ok = n_traj - result.aborted;

    SeriesStats r_stats(n_samples), x_stats(n_samples), p0_stats(n_samples), p1_stats(n_samples);
    result.final_r.reserve(n_ok);
    result.final_x.reserve(n_ok);
    for (const TrajectoryRecord& rec : records) {  // ordered by trajectory index
        if (rec.aborted) continue;
        for (std::size_t i = 0; i < rec.samples.size(); ++i) {
            const ObservableSample& s = rec.samples[i];
            const double total = s.norm0 + s.norm1;
            r_stats.add(i, s.r);
            x_stats.add(i, s.x_mean);
            p0_stats.add(i, s.norm0 / total);
            p1_stats.add(i, s.norm1 / total);
        }
        result.final_r.push_back(rec.samples.back().r);
        result.final_x.push_back(rec.samples.back().x_mean);
    }
    if (n_ok > 0) {
        result.times.resize(n_samples);
        const TrajectoryRecord* ref = nullptr;
        for (const TrajectoryRecord& rec : records)
            if (!rec.aborted) { ref = &rec; break; }
        for (std::size_t i = 0; i < n_samples; ++i) result.times[i] = ref->samples[i].time;
        r_stats.finalize(n_ok, result.r_mean, result.r_se);
        x_stats.finalize(n_ok, result.x_mean, result.x_se);
        p0_stats.finalize(n_ok, result.p0_mean, result.p0_se);
        p1_stats.finalize(n_ok, result.p1_mean, result.p1_se);
    }

    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

std::vector<BlockDensityMatrix> run_qme(const SimulationConfig& config) {
    config.validate();
    const SpatialGrid grid = config.make_spatial_grid();
    const PotentialPair potentials = config.make_potentials(grid);
    const CouplingFunction coupling = config.make_coupling(grid);
    const SpinorState initial = config.make_initial_state(grid);
    const BathSpec bath = config.physics.bath();

    const Eigen::MatrixXcd h0 = build_hamiltonian(grid, potentials.u0, config.physics.epsilon);
    const Eigen::MatrixXcd h1 = build_hamiltonian(grid, potentials.u1, config.physics.epsilon);
    const double eps = config.physics.epsilon;
    const double gamma = config.physics.lambda * config.physics.lambda / (eps * eps);

    // Initial pure state; dx weight keeps tr rho00 * dx = 1.
    BlockDensityMatrix rho0 = BlockDensityMatrix::zero(grid.m);
    rho0.rho00 = initial.psi0 * initial.psi0.adjoint();
    rho0.rho01 = initial.psi0 * initial.psi1.adjoint();
    rho0.rho10 = rho0.rho01.adjoint();
    rho0.rho11 = initial.psi1 * initial.psi1.adjoint();

    QmeRhs rhs;
    if (config.qme.form == "markovian") {
        const auto [c0p, c0m] = markov_constants(bath, config.physics.c0_plus_override,
                                                 config.physics.c0_minus_override);
        const double coeff = gamma * std::abs(c0p);
        rhs = [&, coeff](const BlockDensityMatrix& rho) {
            return qme_rhs_markovian(rho, h0, h1, coupling.v, coeff, eps);
        };
    } else {
        const DissipatorCoefficients coeffs =
            dissipator_coefficients(bath, h0, h1, coupling.v, config.qme.horizon,
                                    config.qme.form == "redfield");
        rhs = [&, coeffs](const BlockDensityMatrix& rho) {
            return qme_rhs_history(rho, h0, h1, coupling.v, coeffs, gamma, eps);
        };
    }

    const int stride = std::max(
        1, static_cast<int>(std::llround(config.time.sample_stride * config.time.dt /
                                         config.qme.dt)));
    auto series = integrate_qme(rho0, rhs, config.qme.dt, config.time.t_final, stride);
    const double dt = config.qme.dt;
    for (std::size_t i = 0; i < series.size(); ++i)
        series[i].time = (i + 1 < series.size()) ? i * stride * dt : config.time.t_final;
    return series;
}

SimulationConfig preset_config(const std::string& name) {
    SimulationConfig c;  // defaults: [-pi,pi], m=512, dt=1e-3, T=10, eps=lambda=1/32
    c.potential.type = "shifted_harmonic";
    c.potential.slope = 0.1;
    c.ensemble.n_trajectories = 4000;
    if (name == "example1") {
        c.coupling.type = "gaussians";
        c.coupling.terms = {{1.0, 0.5, 10.0, 0.0}, {1.0, -2.0, 40.0, -1.0}};
        c.initial_state = {"gaussian", -1.0, 0.5, 1.0};
        c.output.directory = "out/example1";
    } else if (name == "example2") {
        c.coupling.type = "gaussians";
        c.coupling.terms = {{2.0, 0.9, 10.0, 0.0}, {5.0, -0.5, 40.0, 0.0}};
        c.initial_state = {"gaussian", -1.0, 0.5, 1.0};
        c.output.directory = "out/example2";
    } else if (name == "example3") {
        c.coupling.type = "gaussians";
        c.coupling.terms = {{1.0, 0.0, 10.0, 0.0}};
        c.initial_state = {"nongaussian", 0.0, 0.0, 1.0};
        c.output.directory = "out/example3";
    } else if (name == "sse_vs_qme") {
        c.grid = {-10.0, 10.0, 32};
        c.time = {0.02, 300.0, 50};
        c.physics.lambda = c.physics.epsilon / 4.0;
        c.potential.type = "harmonic_pair";
        c.potential.g = 0.1;
        c.potential.e_d = 0.1;
        c.coupling.type = "constant";
        c.coupling.value = 1.0;
        c.initial_state.type = "uniform";
        c.qme.enabled = true;
        c.qme.form = "markovian";
        c.qme.dt = 1e-3;
        c.output.directory = "out/sse_vs_qme";
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return c;
}

PresetResult run_preset(const std::string& name, const std::vector<std::string>& overrides) {
    PresetResult out;
    out.config = preset_config(name);
    for (const std::string& assignment : overrides) apply_override(out.config, assignment);
    out.ensemble = run_ensemble(out.config);
    if (out.config.qme.enabled) out.qme_series = run_qme(out.config);
    write_results(out.ensemble, out.config, out.qme_series);
    return out;
}

void write_results(const EnsembleResult& result, const SimulationConfig& config,
                   const std::vector<BlockDensityMatrix>& qme_series) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(config.output.directory, ec);
    if (ec) throw IoError("cannot create output directory " + config.output.directory);
    const fs::path dir(config.output.directory);

    save_config(config, (dir / "config.json").string());

    if (config.output.write_timeseries) {
        std::ofstream out(dir / "timeseries.csv");
        if (!out) throw IoError("cannot open " + (dir / "timeseries.csv").string());
        out << "t,R_mean,R_se,X_mean,X_se,P0_mean,P0_se,P1_mean,P1_se\n";
        out.precision(15);
        for (std::size_t i = 0; i < result.times.size(); ++i) {
            out << result.times[i] << ',' << result.r_mean[i] << ',' << result.r_se[i] << ','
                << result.x_mean[i] << ',' << result.x_se[i] << ',' << result.p0_mean[i] << ','
                << result.p0_se[i] << ',' << result.p1_mean[i] << ',' << result.p1_se[i] << '\n';
        }
        if (!out) throw IoError("write failed: " + (dir / "timeseries.csv").string());
    }
    if (config.output.write_final_samples) {
        std::ofstream out(dir / "final_samples.csv");
        if (!out) throw IoError("cannot open " + (dir / "final_samples.csv").string());
        out << "R,X\n";
        out.precision(15);
        for (std::size_t i = 0; i < result.final_r.size(); ++i)
            out << result.final_r[i] << ',' << result.final_x[i] << '\n';
        if (!out) throw IoError("write failed: " + (dir / "final_samples.csv").string());
    }
    if (config.output.write_histograms && !result.final_r.empty()) {
        write_histogram_csv(histogram(result.final_r, config.output.histogram_bins, 0.0, 1.0),
                            (dir / "histogram_r.csv").string());
        write_histogram_csv(
            histogram(result.final_x, config.output.histogram_bins, config.grid.a, config.grid.b),
            (dir / "histogram_x.csv").string());
    }
    if (!qme_series.empty()) {
        const double dx = (config.grid.b - config.grid.a) / config.grid.m;
        write_qme_csv(qme_series, dx, (dir / "qme.csv").string());
    }
    {
        std::ofstream out(dir / "metadata.json");
        if (!out) throw IoError("cannot open " + (dir / "metadata.json").string());
        out << "{\n  \"n_trajectories\": " << result.n_trajectories
            << ",\n  \"aborted\": " << result.aborted
            << ",\n  \"wall_seconds\": " << result.wall_seconds << "\n}\n";
        if (!out) throw IoError("write failed: " + (dir / "metadata.json").string());
    }
}

}  // namespace ahsse
