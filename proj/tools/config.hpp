#pragma once

#include <hyperhall/errors.hpp>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace hhcli {

using nlohmann::json;

inline const std::vector<std::string> kCommands = {
    "geom-check", "group-check", "pairing",  "coboundary",    "algebra-check",
    "butterfly",  "spectrum",    "comtet-compare", "conductance", "adiabatic"};

struct DisorderConfig {
    double lambda = 0.5;
    double w_angle = 0.3;  // w = exp(i w_angle)
    std::optional<std::uint64_t> seed;  // covariance sampling, defaults to the run seed
};

struct RunConfig {
    std::string command;
    int genus = 2;
    std::vector<int> genera{2, 3};
    std::optional<double> theta;  // per-command default when unset
    std::optional<std::vector<double>> theta_grid;  // unset: command default; empty: schema error
    std::optional<int> radius;
    std::vector<int> radii;
    std::optional<DisorderConfig> disorder;
    std::optional<double> fermi;
    std::vector<double> tau_list{20, 40, 80, 160};
    std::string family = "both";
    int mesh = 64;
    double r_dom = 3.0;
    int eigen_count = 0;
    int samples = 1000;
    std::uint64_t seed = 7;
    std::optional<int> workers;  // not echoed: results do not depend on it
    std::string out = "out";

    json to_json() const {
        json j = {{"command", command}, {"genus", genus}, {"genera", genera},
                  {"radii", radii},
                  {"tau_list", tau_list}, {"family", family}, {"mesh", mesh}, {"r_dom", r_dom},
                  {"eigen_count", eigen_count}, {"samples", samples}, {"seed", seed}};
        j["theta_grid"] = theta_grid ? json(*theta_grid) : json(nullptr);
        j["theta"] = theta ? json(*theta) : json(nullptr);
        j["radius"] = radius ? json(*radius) : json(nullptr);
        j["fermi"] = fermi ? json(*fermi) : json(nullptr);
        j["disorder"] = disorder ? json{{"lambda", disorder->lambda}, {"w_angle", disorder->w_angle},
                                              {"seed", disorder->seed ? json(*disorder->seed) : json(nullptr)}} : json(nullptr);
        return j;
    }
};

namespace detail {

template <class T>
T get(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw hyperhall::SchemaError(std::string("config key '") + key + "': " + e.what());
    }
}

inline std::vector<double> theta_grid_from(const json& g) {
    if (g.is_array()) {
        std::vector<double> v;
        for (const auto& x : g) {
            if (!x.is_number()) throw hyperhall::SchemaError("theta_grid entries must be numbers");
            v.push_back(x.get<double>());
        }
        return v;
    }
    if (g.is_object()) {
        for (auto it = g.begin(); it != g.end(); ++it)
            if (it.key() != "start" && it.key() != "stop" && it.key() != "count")
                throw hyperhall::SchemaError("theta_grid: unknown key '" + it.key() + "'");
        double a = get<double>(g, "start"), b = get<double>(g, "stop");
        int n = get<int>(g, "count");
        if (n < 0) throw hyperhall::SchemaError("theta_grid.count must be >= 0");
        std::vector<double> v;
        for (int k = 0; k < n; ++k) v.push_back(n == 1 ? a : a + (b - a) * k / (n - 1));
        return v;
    }
    throw hyperhall::SchemaError("theta_grid must be a list or {start, stop, count}");
}

}  // namespace detail

/// Reads the keys present in `j` into `c`. Unknown keys are schema errors.
inline void apply_json(RunConfig& c, const json& j) {
    using detail::get;
    if (!j.is_object()) throw hyperhall::SchemaError("config must be a JSON object");
    static const std::set<std::string> known = {
        "command", "genus", "genera", "theta", "theta_grid", "radius", "radii", "disorder", "fermi",
        "tau_list", "family", "mesh", "r_dom", "eigen_count", "samples", "seed", "workers", "out"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw hyperhall::SchemaError("unknown config key '" + it.key() + "'");
    if (j.contains("command")) c.command = get<std::string>(j, "command");
    if (j.contains("genus")) {
        c.genus = get<int>(j, "genus");
        c.genera = {c.genus};
    }
    if (j.contains("genera")) c.genera = get<std::vector<int>>(j, "genera");
    if (j.contains("theta")) c.theta = get<double>(j, "theta");
    if (j.contains("theta_grid")) c.theta_grid = detail::theta_grid_from(j.at("theta_grid"));
    if (j.contains("radius")) c.radius = get<int>(j, "radius");
    if (j.contains("radii")) c.radii = get<std::vector<int>>(j, "radii");
    if (j.contains("disorder")) {
        const json& d = j.at("disorder");
        if (d.is_null()) {
            c.disorder.reset();
        } else {
            if (!d.is_object()) throw hyperhall::SchemaError("disorder must be an object");
            for (auto it = d.begin(); it != d.end(); ++it)
                if (it.key() != "lambda" && it.key() != "w_angle" && it.key() != "seed")
                    throw hyperhall::SchemaError("disorder: unknown key '" + it.key() + "'");
            DisorderConfig dc;
            if (d.contains("lambda")) dc.lambda = get<double>(d, "lambda");
            if (d.contains("w_angle")) dc.w_angle = get<double>(d, "w_angle");
            if (d.contains("seed")) dc.seed = get<std::uint64_t>(d, "seed");
            c.disorder = dc;
        }
    }
    if (j.contains("fermi")) {
        if (j.at("fermi").is_null())
            c.fermi.reset();
        else
            c.fermi = get<double>(j, "fermi");
    }
    if (j.contains("tau_list")) c.tau_list = get<std::vector<double>>(j, "tau_list");
    if (j.contains("family")) c.family = get<std::string>(j, "family");
    if (j.contains("mesh")) c.mesh = get<int>(j, "mesh");
    if (j.contains("r_dom")) c.r_dom = get<double>(j, "r_dom");
    if (j.contains("eigen_count")) c.eigen_count = get<int>(j, "eigen_count");
    if (j.contains("samples")) c.samples = get<int>(j, "samples");
    if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed");
    if (j.contains("workers")) c.workers = get<int>(j, "workers");
    if (j.contains("out")) c.out = get<std::string>(j, "out");
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw hyperhall::SchemaError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw hyperhall::SchemaError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    apply_json(c, j);
    return c;
}

/// Range checks that apply before any work starts.
inline void validate(RunConfig& c) {
    auto fail = [](const std::string& m) { throw hyperhall::SchemaError(m); };
    bool known = false;
    for (const auto& k : kCommands) known = known || k == c.command;
    if (!known) fail("unknown command '" + c.command + "'");
    if (c.genus < 2) fail("genus must be >= 2");
    if (c.genera.empty()) fail("genera must not be empty");
    for (int g : c.genera)
        if (g < 2) fail("genera entries must be >= 2");
    if (c.theta && !std::isfinite(*c.theta)) fail("theta must be finite");
    if (c.theta_grid)
        for (double t : *c.theta_grid)
            if (!std::isfinite(t)) fail("theta_grid entries must be finite");
    if (c.radius && (*c.radius < 0 || *c.radius > 6)) fail("radius must be in [0, 6]");
    for (int r : c.radii)
        if (r < 1 || r > 6) fail("radii entries must be in [1, 6]");
    if (c.disorder) {
        if (!(c.disorder->lambda > 0) || !std::isfinite(c.disorder->lambda)) fail("disorder.lambda must be > 0");
        if (!std::isfinite(c.disorder->w_angle)) fail("disorder.w_angle must be finite");
    }
    if (c.fermi && !std::isfinite(*c.fermi)) fail("fermi must be finite");
    for (double t : c.tau_list)
        if (!(t > 0) || !std::isfinite(t)) fail("tau_list entries must be positive");
    if (c.family != "two-level" && c.family != "harper" && c.family != "both")
        fail("family must be one of two-level, harper, both");
    if (c.mesh < 8 || c.mesh > 512) fail("mesh must be in [8, 512]");
    if (!(c.r_dom > 0) || c.r_dom > 20) fail("r_dom must be in (0, 20]");
    if (c.eigen_count < 0) fail("eigen_count must be >= 0");
    if (c.samples < 1) fail("samples must be >= 1");
    if (c.workers && *c.workers < 1) fail("workers must be >= 1");

    if (c.theta_grid && c.theta_grid->empty()) fail("theta_grid is empty");
    if ((c.command == "coboundary" || c.command == "spectrum" || c.command == "butterfly") && c.radius &&
        *c.radius < 1)
        fail(c.command + ": radius must be >= 1");
    if (c.command == "adiabatic") {
        if (c.tau_list.size() < 4) fail("adiabatic: tau_list needs at least four values");
        for (size_t k = 1; k < c.tau_list.size(); ++k)
            if (!(c.tau_list[k] > c.tau_list[k - 1])) fail("adiabatic: tau_list must be increasing");
    }
    if (c.command == "conductance" && c.radii.empty()) {
        if (c.radius && *c.radius < 1) fail("conductance: radius must be >= 1");
        c.radii = c.radius ? std::vector<int>{*c.radius, *c.radius + 1} : std::vector<int>{2, 3, 4};
    }
    if (c.command == "conductance")
        for (size_t k = 1; k < c.radii.size(); ++k)
            if (!(c.radii[k] > c.radii[k - 1])) fail("conductance: radii must be increasing");
}

inline int default_workers() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace hhcli
