#pragma once

// LP text format export/import. The writer emits variables and constraints
// in name-sorted order with shortest round-trip numbers, so two builds of
// the same model produce identical bytes.

#include <string>

#include "flexplan/milp_core.hpp"

namespace flexplan {

std::string write_lp(const MilpModel& model);

/// Parses the subset of the LP format that write_lp emits (plus free-form
/// whitespace). Throws std::runtime_error with a line number on bad input.
MilpModel read_lp(const std::string& text);

}  // namespace flexplan
