#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "measched/simulator.hpp"

namespace measched {

inline constexpr int kDatasetFormatVersion = 1;

nlohmann::json to_json(const SimConfig& cfg);
SimConfig sim_config_from_json(const nlohmann::json& j);

/// JSON-lines dataset: one header object, then one object per trajectory.
/// See docs/formats.md.
void write_dataset(std::ostream& out, const Dataset& data, const nlohmann::json& run_config = nullptr);
void write_dataset(const std::string& path, const Dataset& data, const nlohmann::json& run_config = nullptr);

Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::string& path);

}  // namespace measched
