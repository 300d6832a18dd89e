#pragma once

#include <string>

#include "json.hpp"

#include "asmc/experiment.hpp"

namespace asmc {

inline constexpr const char* kVersion = "0.1.0";

/// Everything except wall-clock timings, so identical runs serialize to
/// identical bytes.
nlohmann::ordered_json report_json(const ExperimentResult& result);

/// One row per accepted path step (baseline row included) for every fold.
std::string traces_csv(const ExperimentResult& result);

nlohmann::ordered_json timings_json(const ExperimentResult& result);

/// Writes report.json, traces.csv and timings.json into `dir`.
void emit_report(const ExperimentResult& result, const std::string& dir);

}  // namespace asmc
