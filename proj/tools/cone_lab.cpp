#include <iostream>

#include <CLI11.hpp>

#include "cone_lab/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"cone-lab: expanding cones, Hamenstadt metrics and uniformization"};
    app.require_subcommand(1);

    std::string config;
    auto* run = app.add_subcommand("run", "execute one configured op and append a record to the store");
    run->add_option("config", config, "experiment config (JSON)")->required();

    std::string model;
    auto* verify = app.add_subcommand("verify-all", "run every applicable verification suite on a model");
    verify->add_option("--model", model, "model spec (JSON)")->required();

    std::string query, out_dir = ".", store = "results.jsonl";
    auto* exp = app.add_subcommand("export", "write CSV plot data for records matching a query");
    exp->add_option("--query", query, "e.g. op=entropy_estimate,model=HalfPlane")->required();
    exp->add_option("--out", out_dir, "output directory");
    exp->add_option("--store", store, "JSON-lines result store");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : cone_lab::kExitConfig;
    }
    if (*run) return cone_lab::run_command(config, std::cout, std::cerr);
    if (*verify) return cone_lab::verify_all_command(model, std::cout, std::cerr);
    return cone_lab::export_command(store, query, out_dir, std::cout, std::cerr);
}
