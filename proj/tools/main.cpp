#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <new>

#include "suites.hpp"

namespace {

enum Exit { kOk = 0, kInvariantFail = 1, kSchema = 2, kResource = 3, kNonGap = 4, kOther = 5 };

std::string command_list() {
    std::string s;
    for (const auto& c : hhcli::kCommands) s += (s.empty() ? "" : ", ") + c;
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical checks for magnetic Laplacians and Harper operators on hyperbolic surfaces"};
    std::string command, config_path, out;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers, radius, genus;
    std::optional<double> theta, fermi;
    app.add_option("command", command, "one of: " + command_list())->required();
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed", seed, "RNG seed");
    app.add_option("--workers", workers, "worker threads (default: hardware threads)");
    app.add_option("--out", out, "output directory");
    app.add_option("--theta", theta, "field strength");
    app.add_option("--radius", radius, "ball radius");
    app.add_option("--genus", genus, "surface genus");
    app.add_option("--fermi", fermi, "Fermi level");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kSchema;
    }

    hhcli::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = hhcli::load_config_file(config_path);
        if (!cfg.command.empty() && cfg.command != command)
            throw hyperhall::SchemaError("config is for command '" + cfg.command + "', not '" + command + "'");
        cfg.command = command;
        if (seed) cfg.seed = *seed;
        if (workers) cfg.workers = *workers;
        if (!out.empty()) cfg.out = out;
        if (theta) cfg.theta = *theta;
        if (radius) cfg.radius = *radius;
        if (genus) {
            cfg.genus = *genus;
            cfg.genera = {*genus};
        }
        if (fermi) cfg.fermi = *fermi;
        hhcli::validate(cfg);
        if (!cfg.workers) cfg.workers = hhcli::default_workers();
    } catch (const std::exception& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kSchema;
    }

    auto t0 = std::chrono::steady_clock::now();
    try {
        auto rep = hhcli::run_command(cfg);
        rep.write(cfg.out);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (const auto& i : rep.invariants)
            std::cerr << (i.pass ? "  ok   " : "  FAIL ") << i.name << " = " << i.value << " (" << i.relation << " "
                      << i.tolerance << ")\n";
        std::cerr << command << ": " << (rep.pass() ? "pass" : "FAIL") << " in " << secs << " s, output in "
                  << cfg.out << "\n";
        return rep.pass() ? kOk : kInvariantFail;
    } catch (const hyperhall::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kSchema;
    } catch (const hyperhall::ResourceError& e) {
        std::cerr << "resource error: " << e.what() << "\n";
        return kResource;
    } catch (const std::bad_alloc&) {
        std::cerr << "resource error: out of memory\n";
        return kResource;
    } catch (const hyperhall::GapError& e) {
        std::cerr << "Fermi level not in a gap: " << e.what() << "\n";
        return kNonGap;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    }
}
