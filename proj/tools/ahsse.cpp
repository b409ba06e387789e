#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ahsse/ensemble.hpp"

namespace {

using namespace ahsse;

void cmd_run(const std::string& config_path) {
    const SimulationConfig config = load_config(config_path);
    const EnsembleResult result = run_ensemble(config);
    std::vector<BlockDensityMatrix> qme_series;
    if (config.qme.enabled) qme_series = run_qme(config);
    write_results(result, config, qme_series);
    std::cout << "ensemble: " << result.n_trajectories << " trajectories, " << result.aborted
              << " aborted, " << result.wall_seconds << " s\n"
              << "artifacts in " << config.output.directory << "\n";
}

void cmd_preset(const std::string& name, const std::vector<std::string>& overrides) {
    const PresetResult result = run_preset(name, overrides);
    std::cout << "preset " << name << ": " << result.ensemble.n_trajectories << " trajectories, "
              << result.ensemble.aborted << " aborted, " << result.ensemble.wall_seconds
              << " s\n"
              << "artifacts in " << result.config.output.directory << "\n";
}

void cmd_kernels(const std::string& config_path) {
    const SimulationConfig config = load_config(config_path);
    const BathSpec bath = config.physics.bath();
    std::filesystem::create_directories(config.output.directory);
    const std::filesystem::path out_path =
        std::filesystem::path(config.output.directory) / "kernels.csv";
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot open " + out_path.string());
    out << "tau,re_c_plus,im_c_plus,re_c_minus,im_c_minus\n";
    out.precision(15);
    const double step = config.time.dt * config.time.sample_stride;
    for (double tau = 0.0; tau <= config.time.t_final + 1e-12; tau += step) {
        const Complex cp = c_continuous(KernelSign::Plus, tau, bath);
        const Complex cm = c_continuous(KernelSign::Minus, tau, bath);
        out << tau << ',' << cp.real() << ',' << cp.imag() << ',' << cm.real() << ','
            << cm.imag() << '\n';
    }
    if (!out) throw IoError("write failed: " + out_path.string());
    std::cout << "kernel table written to " << out_path.string() << "\n";
}

void cmd_noise_validate(const std::string& config_path) {
    const SimulationConfig config = load_config(config_path);
    const BathSpec bath = config.physics.bath();
    const long n_steps = std::llround(config.time.t_final / config.time.dt);
    if (n_steps > 1024)
        throw ConfigError("noise-validate: time grid too large (" + std::to_string(n_steps + 1) +
                          " points); reduce t_final/dt");
    Eigen::VectorXd times(n_steps + 1);
    for (long n = 0; n <= n_steps; ++n) times[n] = n * config.time.dt;

    KernelMatrix kernel;
    if (config.physics.mode == StepperMode::Markovian) {
        const auto [c0p, c0m] = markov_constants(bath, config.physics.c0_plus_override,
                                                 config.physics.c0_minus_override);
        (void)c0m;
        kernel = covariance_delta(times, c0p.real());
    } else {
        kernel = covariance_matrix(KernelSign::Plus, times, bath);
    }
    const KLBasis basis = kl_decompose(kernel);

    const long n_paths = std::min<long>(config.ensemble.n_trajectories, 10000);
    const Eigen::Index n = times.size();
    Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(n, n);
    Eigen::MatrixXcd pseudo = Eigen::MatrixXcd::Zero(n, n);
    for (long i = 0; i < n_paths; ++i) {
        const Eigen::VectorXcd w =
            sample_kl_path(basis, split_seed(config.ensemble.master_seed, i));
        cov += w * w.adjoint();
        pseudo += w * w.transpose();
    }
    cov /= double(n_paths);
    pseudo /= double(n_paths);

    double max_err = 0.0, max_sigma = 0.0, max_pseudo_sigma = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double kij = std::abs(kernel.values(i, j));
            const double se = std::sqrt((kernel.values(i, i).real() * kernel.values(j, j).real() +
                                         kij * kij) /
                                        double(n_paths));
            const double err = std::abs(cov(i, j) - kernel.values(i, j));
            max_err = std::max(max_err, err);
            if (se > 0.0) {
                max_sigma = std::max(max_sigma, err / se);
                max_pseudo_sigma = std::max(max_pseudo_sigma, std::abs(pseudo(i, j)) / se);
            }
        }
    }
    std::cout << "noise validation over " << n_paths << " paths, " << n << " time points\n"
              << "max |E[WW*] - K|          : " << max_err << "\n"
              << "max deviation (MC sigma)  : " << max_sigma << "\n"
              << "max |E[WW]| (MC sigma)    : " << max_pseudo_sigma << "\n";
    if (max_sigma > 5.0 || max_pseudo_sigma > 5.0)
        throw NumericalBlowup("noise covariance deviates beyond 5 MC standard errors", 0);
}

void cmd_qme(const std::string& config_path) {
    SimulationConfig config = load_config(config_path);
    if (!config.qme.enabled) {
        config.qme.enabled = true;  // the subcommand itself selects QME mode
        config.validate();
    }
    const auto series = run_qme(config);
    std::filesystem::create_directories(config.output.directory);
    const double dx = (config.grid.b - config.grid.a) / config.grid.m;
    const std::string path =
        (std::filesystem::path(config.output.directory) / "qme.csv").string();
    write_qme_csv(series, dx, path);
    const auto [p0, p1] = populations_from_density(series.back(), dx);
    std::cout << "qme: " << series.size() << " snapshots, final P0=" << p0 << " P1=" << p1
              << "\nartifacts in " << path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic Schrodinger / quantum master equation toolkit for "
                 "Anderson-Holstein impurities"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run an SSE ensemble from a config file");
    run->add_option("--config", config_path, "JSON config file")->required();

    std::string preset_name;
    std::vector<std::string> overrides;
    auto* preset = app.add_subcommand("preset", "Run a named preset experiment");
    preset->add_option("name", preset_name, "example1 | example2 | example3 | sse_vs_qme")
        ->required();
    preset->add_option("--set", overrides, "Override config entries (section.key=value)");

    std::string kernels_config;
    auto* kernels = app.add_subcommand("kernels", "Dump bath correlation kernel tables");
    kernels->add_option("--config", kernels_config, "JSON config file")->required();

    std::string noise_config;
    auto* noise = app.add_subcommand("noise-validate", "Validate sampled noise covariance");
    noise->add_option("--config", noise_config, "JSON config file")->required();

    std::string qme_config;
    auto* qme = app.add_subcommand("qme", "Integrate the quantum master equation");
    qme->add_option("--config", qme_config, "JSON config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return ahsse::kExitConfigError;
    }

    try {
        if (run->parsed()) cmd_run(config_path);
        if (preset->parsed()) cmd_preset(preset_name, overrides);
        if (kernels->parsed()) cmd_kernels(kernels_config);
        if (noise->parsed()) cmd_noise_validate(noise_config);
        if (qme->parsed()) cmd_qme(qme_config);
    } catch (const ahsse::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ahsse::kExitConfigError;
    } catch (const ahsse::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return ahsse::kExitIoError;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return ahsse::kExitNumericalFailure;
    }
    return ahsse::kExitOk;
}
