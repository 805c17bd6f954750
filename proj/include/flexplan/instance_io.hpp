#pragma once

// Planning-instance ingestion: one JSON document for scalar/structural data
// plus CSV files (step,value) for the 5-minute profiles, one file per
// bus/renewable per scenario. See docs/instance_format.md for the schema.

#include <stdexcept>
#include <string>
#include <vector>

#include "flexplan/system_model.hpp"

namespace flexplan {

/// Parse failure with file (and line, for CSV) context.
class InstanceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Loads an instance from a JSON file or a directory containing
/// instance.json. Profile paths inside the document resolve relative to the
/// document location. Throws InstanceError; the result is not yet validated.
SystemSpec load_instance(const std::string& path);

/// Strict (step,value) CSV reader used for profiles.
std::vector<double> read_profile_csv(const std::string& path);

}  // namespace flexplan
