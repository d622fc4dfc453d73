#pragma once

#include "phasescout/ae/tensor_buffer.hpp"
#include "phasescout/pipeline/record.hpp"

#include <string>
#include <vector>

namespace phasescout::pipeline {

enum class InputKind { ES, THETA, CSF };

std::string to_string(InputKind k);
/// Accepts es, theta, csf (case-insensitive); throws DomainError otherwise.
InputKind parse_input_kind(const std::string& s);

/// Smallest multiple of `multiple` that is >= n.
int pad_to(int n, int multiple);

/// Export shape for a kind, so every cell of a run has the same shape:
/// ES (1, P), THETA (d, P, P), CSF (L, Q), with P = pad_to(chiMax), Q = pad_to(L).
std::vector<int> input_shape(InputKind kind, int chiMax, int d, int L, int multiple = 4);

/// ES: central-bond Schmidt values, zero-padded.
/// THETA: central-site tensor as d channels of a chiLeft x chiRight image, zero-padded, max-abs normalized.
/// CSF: rows of the superfluid correlator as channels, zero-padded, max-abs normalized.
/// Throws RecordError when the record lacks the needed field.
ae::TensorBuffer extract_input(const GroundStateRecord& record, InputKind kind, int multiple = 4);

}  // namespace phasescout::pipeline
