#pragma once

#include "phasescout/ae/model.hpp"
#include "phasescout/ae/train.hpp"
#include "phasescout/pipeline/discover.hpp"
#include "phasescout/pipeline/grid.hpp"
#include "phasescout/pipeline/inputs.hpp"
#include "phasescout/pipeline/supersolid.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace phasescout::cli {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    pipeline::SweepGrid grid;  ///< also carries the model and DMRG settings
    ae::TrainConfig train;
    ae::ArchitectureConfig arch;
    pipeline::InputKind inputKind = pipeline::InputKind::ES;
    int maxIter = 4;
    int firstBlock = 3;
    int minRegion = 1;
    int jobs = 1;
    pipeline::SupersolidThresholds supersolid;
    std::string cachePath = "cache";
    std::string outputPath = "out";

    /// Throws ConfigError describing the first invalid setting.
    void validate() const;
    pipeline::DiscoverConfig discover_config() const;
};

RunConfig default_run_config();

/// Flat `key = value` lines, `#` comments, dotted keys. Unknown or repeated keys are errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Every key with its current value; parse_config(format_config(c)) reproduces c.
std::string format_config(const RunConfig& c);
std::vector<std::string> config_keys();

}  // namespace phasescout::cli
