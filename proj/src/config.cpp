#include "ahsse/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ahsse {

using nlohmann::json;

BathSpec PhysicsConfig::bath() const {
    BathSpec spec;
    spec.beta = beta;
    spec.e_minus = e_minus;
    spec.e_plus = e_plus;
    spec.epsilon = epsilon;
    spec.mu = mu;
    spec.quadrature_points = quadrature_points;
    return spec;
}

void SimulationConfig::validate() const {
    if (!(grid.a < grid.b)) throw ConfigError("grid: a must be < b");
    if (grid.m < 8 || (grid.m & (grid.m - 1)) != 0)
        throw ConfigError("grid: m must be a power of two >= 8");
    if (!(time.dt > 0.0)) throw ConfigError("time: dt must be positive");
    if (time.t_final < 0.0) throw ConfigError("time: t_final must be >= 0");
    if (time.sample_stride < 1) throw ConfigError("time: sample_stride must be >= 1");
    physics.bath().validate();
    make_stepper_config().validate();
    if (potential.type != "shifted_harmonic" && potential.type != "harmonic_pair" &&
        potential.type != "free")
        throw ConfigError("potential: unknown type '" + potential.type + "'");
    if (coupling.type != "constant" && coupling.type != "gaussians")
        throw ConfigError("coupling: unknown type '" + coupling.type + "'");
    if (initial_state.type != "gaussian" && initial_state.type != "nongaussian" &&
        initial_state.type != "uniform")
        throw ConfigError("initial_state: unknown type '" + initial_state.type + "'");
    if (initial_state.type == "gaussian" && !(initial_state.width_scale > 0.0))
        throw ConfigError("initial_state: width_scale must be positive");
    if (ensemble.n_trajectories < 1) throw ConfigError("ensemble: n_trajectories must be >= 1");
    if (ensemble.worker_count < 0) throw ConfigError("ensemble: worker_count must be >= 0");
    if (output.histogram_bins < 1) throw ConfigError("output: histogram_bins must be >= 1");
    if (qme.enabled) {
        if (!(qme.dt > 0.0)) throw ConfigError("qme: dt must be positive");
        if (qme.form != "markovian" && qme.form != "fh" && qme.form != "redfield")
            throw ConfigError("qme: unknown form '" + qme.form + "'");
        if (qme.form != "markovian" && !(qme.horizon > 0.0))
            throw ConfigError("qme: horizon must be positive for fh/redfield");
    }
}

SpatialGrid SimulationConfig::make_spatial_grid() const { return make_grid(grid.a, grid.b, grid.m); }

PotentialPair SimulationConfig::make_potentials(const SpatialGrid& g) const {
    if (potential.type == "shifted_harmonic") return shifted_harmonic(g, potential.slope);
    if (potential.type == "harmonic_pair") return harmonic_pair(g, potential.g, potential.e_d);
    PotentialPair p;
    p.u0 = Eigen::VectorXd::Zero(g.m);
    p.u1 = Eigen::VectorXd::Zero(g.m);
    return p;
}

CouplingFunction SimulationConfig::make_coupling(const SpatialGrid& g) const {
    if (coupling.type == "constant") return constant_coupling(g, coupling.value);
    return build_coupling(g, coupling.terms);
}

SpinorState SimulationConfig::make_initial_state(const SpatialGrid& g) const {
    if (initial_state.type == "gaussian")
        return gaussian_packet(g, initial_state.q0, initial_state.p0, physics.epsilon,
                               initial_state.width_scale);
    if (initial_state.type == "nongaussian") return nongaussian_packet(g, physics.epsilon);
    return uniform_packet(g);
}

StepperConfig SimulationConfig::make_stepper_config() const {
    StepperConfig cfg;
    cfg.dt = time.dt;
    cfg.epsilon = physics.epsilon;
    cfg.lambda = physics.lambda;
    const auto [c0p, c0m] =
        markov_constants(physics.bath(), physics.c0_plus_override, physics.c0_minus_override);
    cfg.c0_plus = c0p;
    cfg.c0_minus = c0m;
    cfg.mode = physics.mode;
    cfg.memory_window = physics.memory_window;
    cfg.memory_stride = physics.memory_stride;
    return cfg;
}

namespace {

[[noreturn]] void bad_key(const std::string& section, const std::string& key) {
    throw ConfigError("config: unknown key '" + section + "." + key + "'");
}

template <typename T>
void get_to(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            j.at(key).get_to(out);
        } catch (const json::exception& e) {
            throw ConfigError("config: bad value for '" + std::string(key) + "': " + e.what());
        }
    }
}

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known) bad_key(section, it.key());
    }
}

std::optional<Complex> parse_complex_opt(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    const json& v = j.at(key);
    if (v.is_number()) return Complex(v.get<double>(), 0.0);
    if (v.is_array() && v.size() == 2)
        return Complex(v.at(0).get<double>(), v.at(1).get<double>());
    throw ConfigError(std::string("config: '") + key + "' must be a number or [re, im]");
}

json complex_opt_to_json(const std::optional<Complex>& c) {
    if (!c) return nullptr;
    return json::array({c->real(), c->imag()});
}

}  // namespace

SimulationConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    SimulationConfig c;
    check_keys(j, "", {"grid", "time", "physics", "potential", "coupling", "initial_state",
                       "ensemble", "output", "qme"});
    if (j.contains("grid")) {
        const json& s = j["grid"];
        check_keys(s, "grid", {"a", "b", "m"});
        get_to(s, "a", c.grid.a);
        get_to(s, "b", c.grid.b);
        get_to(s, "m", c.grid.m);
    }
    if (j.contains("time")) {
        const json& s = j["time"];
        check_keys(s, "time", {"dt", "t_final", "sample_stride"});
        get_to(s, "dt", c.time.dt);
        get_to(s, "t_final", c.time.t_final);
        get_to(s, "sample_stride", c.time.sample_stride);
    }
    if (j.contains("physics")) {
        const json& s = j["physics"];
        check_keys(s, "physics",
                   {"epsilon", "lambda", "beta", "e_minus", "e_plus", "mu", "quadrature_points",
                    "c0_plus", "c0_minus", "mode", "memory_window", "memory_stride"});
        get_to(s, "epsilon", c.physics.epsilon);
        get_to(s, "lambda", c.physics.lambda);
        get_to(s, "beta", c.physics.beta);
        get_to(s, "e_minus", c.physics.e_minus);
        get_to(s, "e_plus", c.physics.e_plus);
        get_to(s, "mu", c.physics.mu);
        get_to(s, "quadrature_points", c.physics.quadrature_points);
        c.physics.c0_plus_override = parse_complex_opt(s, "c0_plus");
        c.physics.c0_minus_override = parse_complex_opt(s, "c0_minus");
        if (s.contains("mode")) {
            const std::string mode = s["mode"].get<std::string>();
            if (mode == "markovian")
                c.physics.mode = StepperMode::Markovian;
            else if (mode == "non_markovian")
                c.physics.mode = StepperMode::NonMarkovian;
            else
                throw ConfigError("physics: unknown mode '" + mode + "'");
        }
        get_to(s, "memory_window", c.physics.memory_window);
        get_to(s, "memory_stride", c.physics.memory_stride);
    }
    if (j.contains("potential")) {
        const json& s = j["potential"];
        check_keys(s, "potential", {"type", "slope", "g", "e_d"});
        get_to(s, "type", c.potential.type);
        get_to(s, "slope", c.potential.slope);
        get_to(s, "g", c.potential.g);
        get_to(s, "e_d", c.potential.e_d);
    }
    if (j.contains("coupling")) {
        const json& s = j["coupling"];
        check_keys(s, "coupling", {"type", "value", "terms"});
        get_to(s, "type", c.coupling.type);
        get_to(s, "value", c.coupling.value);
        if (s.contains("terms")) {
            c.coupling.terms.clear();
            for (const json& t : s["terms"]) {
                check_keys(t, "coupling.terms", {"amplitude", "center", "width", "offset"});
                GaussianTerm g;
                get_to(t, "amplitude", g.amplitude);
                get_to(t, "center", g.center);
                get_to(t, "width", g.width);
                get_to(t, "offset", g.offset);
                c.coupling.terms.push_back(g);
            }
        }
    }
    if (j.contains("initial_state")) {
        const json& s = j["initial_state"];
        check_keys(s, "initial_state", {"type", "q0", "p0", "width_scale"});
        get_to(s, "type", c.initial_state.type);
        get_to(s, "q0", c.initial_state.q0);
        get_to(s, "p0", c.initial_state.p0);
        get_to(s, "width_scale", c.initial_state.width_scale);
    }
    if (j.contains("ensemble")) {
        const json& s = j["ensemble"];
        check_keys(s, "ensemble", {"n_trajectories", "master_seed", "worker_count"});
        get_to(s, "n_trajectories", c.ensemble.n_trajectories);
        get_to(s, "master_seed", c.ensemble.master_seed);
        get_to(s, "worker_count", c.ensemble.worker_count);
    }
    if (j.contains("output")) {
        const json& s = j["output"];
        check_keys(s, "output",
                   {"directory", "write_timeseries", "write_final_samples", "write_histograms",
                    "snapshots", "histogram_bins"});
        get_to(s, "directory", c.output.directory);
        get_to(s, "write_timeseries", c.output.write_timeseries);
        get_to(s, "write_final_samples", c.output.write_final_samples);
        get_to(s, "write_histograms", c.output.write_histograms);
        get_to(s, "snapshots", c.output.snapshots);
        get_to(s, "histogram_bins", c.output.histogram_bins);
    }
    if (j.contains("qme")) {
        const json& s = j["qme"];
        check_keys(s, "qme", {"enabled", "form", "dt", "horizon"});
        get_to(s, "enabled", c.qme.enabled);
        get_to(s, "form", c.qme.form);
        get_to(s, "dt", c.qme.dt);
        get_to(s, "horizon", c.qme.horizon);
    }
    c.validate();
    return c;
}

std::string config_to_json_text(const SimulationConfig& c) {
    json j;
    j["grid"] = {{"a", c.grid.a}, {"b", c.grid.b}, {"m", c.grid.m}};
    j["time"] = {{"dt", c.time.dt},
                 {"t_final", c.time.t_final},
                 {"sample_stride", c.time.sample_stride}};
    j["physics"] = {{"epsilon", c.physics.epsilon},
                    {"lambda", c.physics.lambda},
                    {"beta", c.physics.beta},
                    {"e_minus", c.physics.e_minus},
                    {"e_plus", c.physics.e_plus},
                    {"mu", c.physics.mu},
                    {"quadrature_points", c.physics.quadrature_points},
                    {"c0_plus", complex_opt_to_json(c.physics.c0_plus_override)},
                    {"c0_minus", complex_opt_to_json(c.physics.c0_minus_override)},
                    {"mode", c.physics.mode == StepperMode::Markovian ? "markovian"
                                                                      : "non_markovian"},
                    {"memory_window", c.physics.memory_window},
                    {"memory_stride", c.physics.memory_stride}};
    j["potential"] = {{"type", c.potential.type},
                      {"slope", c.potential.slope},
                      {"g", c.potential.g},
                      {"e_d", c.potential.e_d}};
    json terms = json::array();
    for (const GaussianTerm& t : c.coupling.terms)
        terms.push_back({{"amplitude", t.amplitude},
                         {"center", t.center},
                         {"width", t.width},
                         {"offset", t.offset}});
    j["coupling"] = {{"type", c.coupling.type}, {"value", c.coupling.value}, {"terms", terms}};
    j["initial_state"] = {{"type", c.initial_state.type},
                          {"q0", c.initial_state.q0},
                          {"p0", c.initial_state.p0},
                          {"width_scale", c.initial_state.width_scale}};
    j["ensemble"] = {{"n_trajectories", c.ensemble.n_trajectories},
                     {"master_seed", c.ensemble.master_seed},
                     {"worker_count", c.ensemble.worker_count}};
    j["output"] = {{"directory", c.output.directory},
                   {"write_timeseries", c.output.write_timeseries},
                   {"write_final_samples", c.output.write_final_samples},
                   {"write_histograms", c.output.write_histograms},
                   {"snapshots", c.output.snapshots},
                   {"histogram_bins", c.output.histogram_bins}};
    j["qme"] = {{"enabled", c.qme.enabled},
                {"form", c.qme.form},
                {"dt", c.qme.dt},
                {"horizon", c.qme.horizon}};
    return j.dump(2) + "\n";
}

SimulationConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return config_from_json_text(buffer.str());
}

void save_config(const SimulationConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << config_to_json_text(config);
    if (!out) throw IoError("write failed: " + path);
}

void apply_override(SimulationConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("--set expects section.key=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    const auto dot = path.find('.');
    if (dot == std::string::npos)
        throw ConfigError("--set expects section.key=value, got '" + assignment + "'");

    // Round-trip through JSON so overrides share the schema validation.
    json j = json::parse(config_to_json_text(config));
    const std::string section = path.substr(0, dot);
    const std::string key = path.substr(dot + 1);
    if (!j.contains(section)) throw ConfigError("--set: unknown section '" + section + "'");
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;  // bare strings allowed without quotes
    }
    j[section][key] = parsed;
    config = config_from_json_text(j.dump());
}

}  // namespace ahsse
