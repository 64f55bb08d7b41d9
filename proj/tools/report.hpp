#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace hhcli {

using nlohmann::json;

// value <relation> tolerance, e.g. defect < 1e-8
struct Invariant {
    std::string name;
    double value = 0;
    std::string relation;
    double tolerance = 0;
    bool pass = false;
};

struct Table {
    std::string file;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    template <class... Ts>
    void add(const Ts&... vals) {
        rows.push_back({cell(vals)...});
    }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(long v) { return std::to_string(v); }
    static std::string cell(size_t v) { return std::to_string(v); }
    static std::string cell(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
};

struct Report {
    std::string command;
    json config;
    json data = json::object();
    std::vector<Invariant> invariants;
    std::vector<Table> tables;
    std::vector<std::pair<std::string, json>> attachments;  // extra JSON files

    bool pass() const {
        for (const auto& i : invariants)
            if (!i.pass) return false;
        return true;
    }

    void less(const std::string& name, double value, double tol) {
        invariants.push_back({name, value, "<", tol, std::isfinite(value) && value < tol});
    }
    void greater(const std::string& name, double value, double tol) {
        invariants.push_back({name, value, ">", tol, std::isfinite(value) && value > tol});
    }
    void equal(const std::string& name, double value, double target) {
        invariants.push_back({name, value, "==", target, value == target});
    }
    void flag(const std::string& name, bool ok) {
        invariants.push_back({name, ok ? 1.0 : 0.0, "==", 1.0, ok});
    }

    json to_json() const {
        json inv = json::array();
        for (const auto& i : invariants)
            inv.push_back({{"name", i.name},
                           {"value", std::isfinite(i.value) ? json(i.value) : json(nullptr)},
                           {"relation", i.relation},
                           {"tolerance", i.tolerance},
                           {"pass", i.pass}});
        json files = json::array();
        for (const auto& t : tables) files.push_back(t.file);
        for (const auto& a : attachments) files.push_back(a.first);
        return {{"command", command}, {"config", config}, {"pass", pass()},
                {"invariants", inv}, {"data", data}, {"tables", files}};
    }

    /// <out>/<command>.json plus one CSV per table.
    void write(const std::filesystem::path& out) const {
        std::filesystem::create_directories(out);
        std::ofstream(out / (command + ".json")) << to_json().dump(2) << "\n";
        for (const auto& [name, j] : attachments) std::ofstream(out / name) << j.dump(1) << "\n";
        for (const auto& t : tables) {
            std::ofstream f(out / t.file);
            for (size_t c = 0; c < t.columns.size(); ++c) f << (c ? "," : "") << t.columns[c];
            f << "\n";
            for (const auto& r : t.rows) {
                for (size_t c = 0; c < r.size(); ++c) f << (c ? "," : "") << r[c];
                f << "\n";
            }
        }
    }
};

}  // namespace hhcli
