#include "phasescout/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace phasescout::cli;

int main(int argc, char** argv) {
    CLI::App app{"phasescout: DMRG ground states of the extended Bose-Hubbard chain and autoencoder phase discovery"};
    app.require_subcommand(1);
    Options opt;
    std::uint64_t seed = 0;
    int jobs = 0, maxIter = 0;
    std::string kind;
    double fixed = 0.0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", opt.configPath, "configuration file (key = value)");
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "training seed");
        sub->add_option("--input-kind", kind, "es, theta or csf");
    };
    auto* sweep = app.add_subcommand("sweep", "compute and cache one ground state per grid cell");
    auto* train = app.add_subcommand("train", "train an autoencoder on a region of cached cells");
    auto* scan = app.add_subcommand("scan", "evaluate a trained autoencoder over the whole grid");
    auto* discover = app.add_subcommand("discover", "iterative unsupervised phase labeling");
    auto* observables = app.add_subcommand("observables", "write observables.csv from the cache");
    auto* fidelity = app.add_subcommand("fidelity", "ground-state fidelity along a parameter cut");
    auto* report = app.add_subcommand("report", "summarize the cache and the latest labeling");
    for (auto* s : {sweep, train, scan, discover, observables, fidelity, report}) common(s);

    train->add_option("--region", opt.regions, "training box uLo,uHi,vLo,vHi (repeatable; default origin block)");
    scan->add_option("--model", opt.modelPath, "checkpoint written by train");
    scan->add_option("--region-file", opt.regionPath, "training region written by train");
    discover->add_option("--max-iter", maxIter, "maximum training iterations")->check(CLI::PositiveNumber);
    discover->add_flag("--probe-ss", opt.probeSS, "append the supersolid probe table to the report");
    report->add_flag("--probe-ss", opt.probeSS, "append the supersolid probe table");
    fidelity->add_option("--axis", opt.axis, "U or V")->required();
    fidelity->add_option("--fixed", fixed, "value of the other parameter")->required();
    fidelity->add_option("--points", opt.points, "number of points on the cut");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }
    if (app.got_subcommand("fidelity")) opt.fixed = fixed;
    for (auto* s : app.get_subcommands()) {
        if (s->count("--jobs")) opt.jobs = jobs;
        if (s->count("--seed")) opt.seed = seed;
        if (s->count("--input-kind")) opt.inputKind = kind;
        if (s == discover && s->count("--max-iter")) opt.maxIter = maxIter;
    }

    if (sweep->parsed()) return cmd_sweep(opt, std::cout, std::cerr);
    if (train->parsed()) return cmd_train(opt, std::cout, std::cerr);
    if (scan->parsed()) return cmd_scan(opt, std::cout, std::cerr);
    if (discover->parsed()) return cmd_discover(opt, std::cout, std::cerr);
    if (observables->parsed()) return cmd_observables(opt, std::cout, std::cerr);
    if (fidelity->parsed()) return cmd_fidelity(opt, std::cout, std::cerr);
    if (report->parsed()) return cmd_report(opt, std::cout, std::cerr);
    return kExitUsage;
}
