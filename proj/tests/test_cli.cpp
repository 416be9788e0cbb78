#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cone_lab/cli.hpp"

using namespace cone_lab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("cone_lab_test_" + std::to_string(std::rand()) + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& p, const std::string& text) { std::ofstream(p) << text; }

int count_lines(const std::string& p) {
    std::ifstream in(p);
    int n = 0;
    std::string line;
    while (std::getline(in, line)) n += !line.empty();
    return n;
}

std::string config(const std::string& op, const std::string& params, const std::string& store) {
    return R"({"model": {"kind": "halfplane", "a": 1.0}, "op": ")" + op + R"(", "params": )" + params + R"(, "seed": 7, "output": ")" +
           store + R"("})";
}

}  // namespace

TEST_CASE("config parsing") {
    nlohmann::json ok = {{"model", {{"kind", "halfplane"}}}, {"op", "entropy_estimate"}};
    ExperimentConfig c = parse_config(ok);
    CHECK(c.seed == 1);
    CHECK(c.workers == 1);
    CHECK_THROWS_AS(parse_config({{"op", "entropy_estimate"}}), Error);
    CHECK_THROWS_AS(parse_config({{"model", {{"kind", "halfplane"}}}, {"op", "teleport"}}), Error);
    CHECK_THROWS_AS(parse_config({{"model", {{"kind", "halfplane"}}}, {"op", "rho"}, {"workers", 0}}), Error);
    setenv("CONE_LAB_SEED", "99", 1);
    CHECK(parse_config(ok).seed == 99);
    unsetenv("CONE_LAB_SEED");
}

TEST_CASE("run appends a reproducible record") {
    TempDir d;
    std::string store = d.file("results.jsonl");
    write(d.file("entropy.json"), config("entropy_estimate", R"({"s_max": 8})", store));
    std::ostringstream out, err;
    REQUIRE(run_command(d.file("entropy.json"), out, err) == kExitPass);
    REQUIRE(run_command(d.file("entropy.json"), out, err) == kExitPass);
    REQUIRE(count_lines(store) == 2);
    std::ifstream in(store);
    std::string l1, l2;
    std::getline(in, l1);
    std::getline(in, l2);
    auto r1 = nlohmann::json::parse(l1), r2 = nlohmann::json::parse(l2);
    CHECK(r1["outputs"]["h_est"].get<double>() == doctest::Approx(1.0).epsilon(0.05));
    CHECK(r1["record_hash"] == r2["record_hash"]);
    CHECK(r1["config_hash"] == r2["config_hash"]);
    CHECK(r1["tool_version"] == kToolVersion);
    CHECK(r1["provenance"]["h_est"].contains("method"));
    CHECK(r1["provenance"]["h_est"].contains("error"));
}

TEST_CASE("malformed config exits 2 without a record") {
    TempDir d;
    write(d.file("bad.json"), "{\"model\": {\"kind\": \"halfplane\"}, \"op\": ");
    std::ostringstream out, err;
    CHECK(run_command(d.file("bad.json"), out, err) == kExitConfig);
    CHECK(!fs::exists(d.file("results.jsonl")));
    CHECK(run_command(d.file("missing.json"), out, err) == kExitConfig);
}

TEST_CASE("divergent request exits 2, solver failure exits 3") {
    TempDir d;
    std::string store = d.file("r.jsonl");
    std::ostringstream out, err;
    // sigma below the entropy: the cone mass diverges
    write(d.file("div.json"), config("crit_ratio", R"({"sigma": 0.5, "h_est": 1.0})", store));
    CHECK(run_command(d.file("div.json"), out, err) == kExitConfig);
    CHECK(!fs::exists(store));
    // one root-finder iteration cannot hit the endpoint
    write(d.file("geo.json"), R"({"model": {"kind": "warped", "epsilon": 0.1, "frequency": 1, "base_rate": 1}, "op": "geodesic",
        "params": {"x": [0, 0], "y": [3, 1], "max_iter": 1}, "output": ")" + store + R"("})");
    CHECK(run_command(d.file("geo.json"), out, err) == kExitSolver);
    CHECK(!fs::exists(store));
}

TEST_CASE("every op runs on the half-plane") {
    TempDir d;
    std::string store = d.file("r.jsonl");
    const std::vector<std::pair<std::string, std::string>> ops = {
        {"distance", R"({"x": [0, 0], "y": [4, 0]})"},
        {"geodesic", R"({"x": [0, 0], "y": [4, 0]})"},
        {"d_b", R"({"x": [0, 0], "y": [3, 0]})"},
        {"rho", R"({"x": [0, 0], "y": [0.5, 0]})"},
        {"delta_estimate", R"({"n": 200})"},
        {"separated_count", R"({"s": 2, "l": 0})"},
        {"laplace_G", R"({"sigmas": [2, 1.5], "h_est": 0.99})"},
        {"crit_ratio", R"({"sigma": 2, "h_est": 0.99})"},
        {"ps_renormalize", R"({"sigma": 1.25, "cells": 4})"},
        {"ahlfors_check", R"({"centers": 4})"},
        {"margulis_checks", R"({})"},
        {"doubling_check", R"({"n_balls": 9})"},
        {"poincare_check", R"({"n_balls": 3})"},
        {"critical_failure_demo", R"({})"},
        {"cone_ball_inclusions", R"({"samples": 100})"},
    };
    for (const auto& [op, params] : ops) {
        write(d.file(op + ".json"), config(op, params, store));
        std::ostringstream out, err;
        INFO(op << ": " << err.str());
        CHECK(run_command(d.file(op + ".json"), out, err) == kExitPass);
    }
    CHECK(count_lines(store) == static_cast<int>(ops.size()));
    std::ifstream in(store);
    std::string line;
    std::getline(in, line);
    CHECK(nlohmann::json::parse(line)["outputs"]["d"].get<double>() == doctest::Approx(std::acosh(9.0)));
}

TEST_CASE("export plot data") {
    TempDir d;
    std::string store = d.file("r.jsonl");
    write(d.file("e.json"), config("entropy_estimate", R"({"s_max": 6})", store));
    write(d.file("g.json"), config("laplace_G", R"({"sigmas": [2, 1.5], "h_est": 0.99})", store));
    std::ostringstream out, err;
    REQUIRE(run_command(d.file("e.json"), out, err) == 0);
    REQUIRE(run_command(d.file("g.json"), out, err) == 0);

    auto files = export_plot_data(store, "op=entropy_estimate", d.file("plots"));
    REQUIRE(files.size() == 1);
    std::ifstream e(files[0]);
    std::string header;
    std::getline(e, header);
    CHECK(header == "s,log_V_s,model");

    files = export_plot_data(store, "op=laplace_G,model=halfplane", d.file("plots"));
    std::ifstream g(files[0]);
    std::getline(g, header);
    CHECK(header == "sigma,G,tail_error");

    CHECK_THROWS_AS(export_plot_data(store, "op=rho", d.file("none")), Error);
    CHECK(!fs::exists(d.file("none")));
    CHECK(export_command(store, "op=rho", d.file("none"), out, err) == kExitConfig);
}

TEST_CASE("verify-all ordering") {
    auto results = verify_all({{"kind", "warped"}, {"epsilon", 3.0}, {"frequency", 1.0}, {"base_rate", 1.0}}, 1);
    REQUIRE(!results.empty());
    CHECK(results[0].name == "models");
    CHECK(!results[0].passed);
    for (std::size_t k = 1; k < results.size(); ++k) CHECK(results[k].skipped);

    auto hp = verify_all({{"kind", "halfplane"}, {"a", 1.0}}, 1);
    for (const auto& r : hp) {
        INFO(r.name << ": " << r.detail);
        CHECK(r.passed);
    }
}

TEST_CASE("hashing") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}
