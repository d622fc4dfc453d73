#pragma once

#include <string>

namespace phasescout {

/// Shortest decimal text that parses back to exactly `x`; locale-independent.
std::string format_double(double x);
/// Strict locale-independent parse of a whole string; throws DomainError.
double parse_double(const std::string& s);
int parse_int(const std::string& s);

}  // namespace phasescout
