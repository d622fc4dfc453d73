#pragma once

#include "phasescout/dmrg/dmrg.hpp"
#include "phasescout/model/ebh.hpp"
#include "phasescout/model/observables.hpp"
#include "phasescout/tn/mps.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace phasescout::pipeline {

inline constexpr std::uint32_t kRecordVersion = 1;

/// Everything the anomaly pipeline needs from one ground state.
struct GroundStateRecord {
    std::uint32_t formatVersion = kRecordVersion;
    int iu = 0, iv = 0;
    model::ModelParams params;
    dmrg::DmrgConfig dmrg;
    int particles = 0;
    double energy = 0.0;
    std::vector<tn::SchmidtSpectrum> spectra;  ///< bonds 1..L-1
    tn::ThetaTensor centralTheta;              ///< site L/2
    Eigen::MatrixXd corrSF, corrDW, corrHI;
    model::ObservableSet observables;
    dmrg::ConvergenceReport convergence;

    /// Throws RecordError when a field needed by the pipeline is missing or malformed.
    void check_complete() const;
};

/// Build a record from a converged (or flagged) DMRG result.
GroundStateRecord make_record(int iu, int iv, const model::ModelParams& params, const dmrg::DmrgConfig& config,
                              const dmrg::DmrgResult& result);

/// "EBHGS1" | u32 version | u64 payload length | payload | u32 crc32(payload).
std::vector<unsigned char> encode_record(const GroundStateRecord& r);
/// Throws RecordError on bad magic, version, truncation or checksum.
GroundStateRecord decode_record(const std::vector<unsigned char>& bytes);
std::uint32_t record_checksum(const std::vector<unsigned char>& encoded);

std::string record_filename(int iu, int iv);

}  // namespace phasescout::pipeline
