#include "phasescout/cli/config.hpp"

#include "phasescout/errors.hpp"
#include "phasescout/format.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace phasescout::cli {

namespace {

struct Key {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

Key real(std::function<double&(RunConfig&)> ref) {
    return {[ref](RunConfig& c, const std::string& v) { ref(c) = parse_double(v); },
            [ref](RunConfig c) { return format_double(ref(c)); }};
}

Key integer(std::function<int&(RunConfig&)> ref) {
    return {[ref](RunConfig& c, const std::string& v) { ref(c) = parse_int(v); },
            [ref](RunConfig c) { return std::to_string(ref(c)); }};
}

Key seed(std::function<std::uint64_t&(RunConfig&)> ref) {
    return {[ref](RunConfig& c, const std::string& v) {
                std::uint64_t x = 0;
                const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
                if (v.empty() || ec != std::errc() || end != v.data() + v.size())
                    throw DomainError("seed must be a non-negative integer below 2^64: '" + v + "'");
                ref(c) = x;
            },
            [ref](RunConfig c) { return std::to_string(ref(c)); }};
}

Key boolean(std::function<bool&(RunConfig&)> ref) {
    return {[ref](RunConfig& c, const std::string& v) {
                if (v == "true" || v == "1")
                    ref(c) = true;
                else if (v == "false" || v == "0")
                    ref(c) = false;
                else
                    throw DomainError("expected true or false, got '" + v + "'");
            },
            [ref](RunConfig c) { return ref(c) ? std::string("true") : "false"; }};
}

Key text(std::function<std::string&(RunConfig&)> ref) {
    return {[ref](RunConfig& c, const std::string& v) {
                if (v.empty()) throw DomainError("empty path");
                ref(c) = v;
            },
            [ref](RunConfig c) { return ref(c); }};
}

const std::map<std::string, Key>& keys() {
    static const std::map<std::string, Key> table = {
        {"model.t", real([](RunConfig& c) -> double& { return c.grid.model.t; })},
        {"model.n_max", integer([](RunConfig& c) -> int& { return c.grid.model.nMax; })},
        {"model.L", integer([](RunConfig& c) -> int& { return c.grid.model.L; })},
        {"dmrg.chi_max", integer([](RunConfig& c) -> int& { return c.grid.dmrg.chiMax; })},
        {"dmrg.max_sweeps", integer([](RunConfig& c) -> int& { return c.grid.dmrg.maxSweeps; })},
        {"dmrg.energy_tol", real([](RunConfig& c) -> double& { return c.grid.dmrg.energyTol; })},
        {"dmrg.lanczos_iters", integer([](RunConfig& c) -> int& { return c.grid.dmrg.lanczosIters; })},
        {"dmrg.lanczos_tol", real([](RunConfig& c) -> double& { return c.grid.dmrg.lanczosTol; })},
        {"dmrg.mixer", real([](RunConfig& c) -> double& { return c.grid.dmrg.mixerStrength; })},
        {"dmrg.mixer_decay", real([](RunConfig& c) -> double& { return c.grid.dmrg.mixerDecay; })},
        {"dmrg.mixer_sweeps", integer([](RunConfig& c) -> int& { return c.grid.dmrg.mixerSweeps; })},
        {"dmrg.sv_min", real([](RunConfig& c) -> double& { return c.grid.dmrg.svMin; })},
        {"dmrg.seed", seed([](RunConfig& c) -> std::uint64_t& { return c.grid.dmrg.seed; })},
        {"grid.u_min", real([](RunConfig& c) -> double& { return c.grid.uMin; })},
        {"grid.u_max", real([](RunConfig& c) -> double& { return c.grid.uMax; })},
        {"grid.v_min", real([](RunConfig& c) -> double& { return c.grid.vMin; })},
        {"grid.v_max", real([](RunConfig& c) -> double& { return c.grid.vMax; })},
        {"grid.n_u", integer([](RunConfig& c) -> int& { return c.grid.nU; })},
        {"grid.n_v", integer([](RunConfig& c) -> int& { return c.grid.nV; })},
        {"ae.epochs", integer([](RunConfig& c) -> int& { return c.train.epochs; })},
        {"ae.batch_size", integer([](RunConfig& c) -> int& { return c.train.batchSize; })},
        {"ae.learning_rate", real([](RunConfig& c) -> double& { return c.train.learningRate; })},
        {"ae.filters", integer([](RunConfig& c) -> int& { return c.arch.filters; })},
        {"ae.kernel", integer([](RunConfig& c) -> int& { return c.arch.kernel; })},
        {"ae.pool", integer([](RunConfig& c) -> int& { return c.arch.poolSize; })},
        {"ae.shortcuts", boolean([](RunConfig& c) -> bool& { return c.arch.shortcuts; })},
        {"pipeline.input_kind",
         {[](RunConfig& c, const std::string& v) { c.inputKind = pipeline::parse_input_kind(v); },
          [](const RunConfig& c) { return pipeline::to_string(c.inputKind); }}},
        {"pipeline.max_iter", integer([](RunConfig& c) -> int& { return c.maxIter; })},
        {"pipeline.first_block", integer([](RunConfig& c) -> int& { return c.firstBlock; })},
        {"pipeline.min_region", integer([](RunConfig& c) -> int& { return c.minRegion; })},
        {"pipeline.jobs", integer([](RunConfig& c) -> int& { return c.jobs; })},
        {"probe.superfluid", real([](RunConfig& c) -> double& { return c.supersolid.superfluid; })},
        {"probe.density_wave", real([](RunConfig& c) -> double& { return c.supersolid.densityWave; })},
        {"probe.structure", real([](RunConfig& c) -> double& { return c.supersolid.structure; })},
        {"paths.cache", text([](RunConfig& c) -> std::string& { return c.cachePath; })},
        {"paths.output", text([](RunConfig& c) -> std::string& { return c.outputPath; })},
        {"seed", seed([](RunConfig& c) -> std::uint64_t& { return c.train.seed; })},
    };
    return table;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig default_run_config() {
    RunConfig c;
    c.grid.model.L = 32;
    c.grid.model.nMax = 3;
    c.grid.dmrg.chiMax = 50;
    return c;
}

void RunConfig::validate() const {
    try {
        grid.validate();
        train.validate();
        if (arch.filters < 1 || arch.kernel < 1 || arch.kernel % 2 == 0 || arch.poolSize < 1)
            throw DomainError("ae: filters and pool must be positive and the kernel odd");
        if (maxIter < 1) throw DomainError("pipeline.max_iter must be positive");
        if (firstBlock < 1 || firstBlock > grid.nU || firstBlock > grid.nV)
            throw DomainError("pipeline.first_block must fit inside the grid");
        if (minRegion < 1) throw DomainError("pipeline.min_region must be positive");
        if (jobs < 1) throw DomainError("pipeline.jobs must be positive");
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
}

pipeline::DiscoverConfig RunConfig::discover_config() const {
    pipeline::DiscoverConfig d;
    d.kind = inputKind;
    d.arch = arch;
    d.train = train;
    d.maxIterations = maxIter;
    d.firstBlock = firstBlock;
    d.minRegion = minRegion;
    d.jobs = jobs;
    return d;
}

RunConfig parse_config(const std::string& textIn) {
    RunConfig c = default_run_config();
    std::istringstream in(textIn);
    std::string line;
    std::set<std::string> seen;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "config line " + std::to_string(lineNo) + ": ";
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        const auto it = keys().find(key);
        if (it == keys().end()) throw ConfigError(where + "unknown key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError(where + "key '" + key + "' given twice");
        try {
            it->second.set(c, value);
        } catch (const DomainError& e) {
            throw ConfigError(where + key + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string format_config(const RunConfig& c) {
    std::ostringstream os;
    for (const auto& [k, key] : keys()) os << k << " = " << key.get(c) << '\n';
    return os.str();
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& kv : keys()) out.push_back(kv.first);
    return out;
}

}  // namespace phasescout::cli
