#pragma once

#include <span>
#include <string>
#include <vector>

#include "collusim/config.hpp"
#include "collusim/engine.hpp"
#include "collusim/metrics.hpp"

namespace collusim {

struct SweepRow {
  std::vector<double> axis_values;  // one per axis, cell order
  AggregateReport report;
  std::uint32_t sessions = 0;
};

std::string sessions_csv(const ExperimentConfig& cfg, std::span<const SessionResult> results);
std::string trace_csv(const ExperimentConfig& cfg, std::uint32_t session_index,
                      const SessionResult& result);
std::string summary_json(const ExperimentConfig& cfg, std::span<const SessionResult> results,
                         const AggregateReport& report);
std::string sweep_csv(const ExperimentConfig& cfg, std::span<const SweepRow> rows);

void write_file(const std::string& path, const std::string& contents);

}  // namespace collusim
