#pragma once

#include "phasescout/cli/config.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace phasescout::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitFlagged = 2,
    kExitIncompleteCache = 3,
    kExitUsage = 64,
};

struct Options {
    std::string configPath;
    std::optional<int> jobs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> inputKind;
    std::optional<int> maxIter;
    bool probeSS = false;
    std::string axis;
    std::optional<double> fixed;
    int points = 25;
    std::vector<std::string> regions;  ///< "uLo,uHi,vLo,vHi" boxes for train
    std::string modelPath;             ///< checkpoint for scan (default <output>/model.aem)
    std::string regionPath;            ///< training region for scan (default <output>/train_region.txt)
};

/// Config file, then PHASESCOUT_CACHE, then command-line flags. Throws ConfigError.
RunConfig resolve_config(const Options& opt);

int cmd_sweep(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_train(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_scan(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_discover(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_observables(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_fidelity(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_report(const Options& opt, std::ostream& out, std::ostream& err);

/// Per-label cell count, (U, V) bounding box and median indicators.
std::string region_summary(const pipeline::SweepGrid& grid, const pipeline::LoadedCache& cache,
                           const pipeline::PhaseLabeling& labeling);

}  // namespace phasescout::cli
