#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evgraph/cycles.hpp"
#include "evgraph/pipeline.hpp"
#include "evgraph/resources.hpp"

namespace evgraph {

inline constexpr const char* kToolVersion = "0.1.0";

// Standard report envelope. Object keys serialize sorted, so identical
// runs produce byte-identical documents.
inline nlohmann::json make_report(const std::string& command,
                                  const std::string& config_digest,
                                  nlohmann::json payload) {
  nlohmann::json j;
  j["command"] = command;
  j["config_digest"] = config_digest;
  j["tool_version"] = kToolVersion;
  j["payload"] = std::move(payload);
  return j;
}

// ---------------------------------------------------------------------------
// Sizing table reports
// ---------------------------------------------------------------------------

struct AnnotatedSizingRow {
  SizingRow row;
  bool flagged = false;
  std::vector<std::int64_t> reference_twostep;  // set when flagged
};

// The built-in design points, annotated against the reference counts they
// were published with. Rows where the cycle model and the reference
// disagree are flagged instead of silently adopting either side.
inline std::vector<AnnotatedSizingRow> builtin_sizing_report(
    std::int64_t clock_ns = 5) {
  const auto rows =
      sizing_table(reference_sizing_configs(), reference_out_dims(), clock_ns);
  const auto reference = reference_twostep_counts();
  std::vector<AnnotatedSizingRow> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    AnnotatedSizingRow a;
    a.row = rows[r];
    for (std::size_t c = 0; c < rows[r].p_twostep.size(); ++c)
      if (rows[r].p_twostep[c] != reference[r][c]) a.flagged = true;
    if (a.flagged)
      a.reference_twostep.assign(reference[r].begin(), reference[r].end());
    out.push_back(std::move(a));
  }
  return out;
}

inline nlohmann::json sizing_to_json(
    const std::vector<AnnotatedSizingRow>& rows) {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const AnnotatedSizingRow& a : rows) {
    nlohmann::json row;
    row["time_window_ms"] = a.row.time_window_ns / 1'000'000;
    row["size"] = a.row.size;
    row["throughput"] = a.row.throughput;
    row["entries"] = nlohmann::json::array();
    for (std::size_t c = 0; c < a.row.out_dims.size(); ++c) {
      nlohmann::json e;
      e["out_dim"] = a.row.out_dims[c];
      e["p_baseline"] = a.row.p_baseline[c];
      e["p_twostep"] = a.row.p_twostep[c];
      e["decrease_pct"] = a.row.decrease[c];
      row["entries"].push_back(std::move(e));
    }
    row["flagged"] = a.flagged;
    if (a.flagged) row["reference_p_twostep"] = a.reference_twostep;
    j["rows"].push_back(std::move(row));
  }
  return j;
}

inline std::string sizing_to_csv(const std::vector<AnnotatedSizingRow>& rows) {
  std::ostringstream out;
  out << "time_window_ms,size,throughput,out_dim,p_baseline,p_twostep,decrease_pct\n";
  for (const AnnotatedSizingRow& a : rows)
    for (std::size_t c = 0; c < a.row.out_dims.size(); ++c)
      out << a.row.time_window_ns / 1'000'000 << ',' << a.row.size << ','
          << a.row.throughput << ',' << a.row.out_dims[c] << ','
          << a.row.p_baseline[c] << ',' << a.row.p_twostep[c] << ','
          << a.row.decrease[c] << '\n';
  for (const AnnotatedSizingRow& a : rows)
    if (a.flagged) {
      out << "# note: " << a.row.time_window_ns / 1'000'000 << " ms / size "
          << a.row.size << ": two-step counts follow the cycle model;"
          << " the bundled reference table lists (";
      for (std::size_t c = 0; c < a.reference_twostep.size(); ++c)
        out << (c ? "," : "") << a.reference_twostep[c];
      out << ")\n";
    }
  return out.str();
}

// ---------------------------------------------------------------------------
// Command payloads
// ---------------------------------------------------------------------------

inline nlohmann::json sim_to_json(const SimResult& r) {
  nlohmann::json j;
  j["events"] = r.events;
  j["windows"] = r.windows;
  j["vertices"] = r.vertices;
  j["dropped"] = r.dropped;
  j["stages"] = nlohmann::json::array();
  for (const LayerStageStats& s : r.stages) {
    nlohmann::json stage;
    stage["stage"] = s.stage;
    stage["occupied_cells"] = s.occupied_cells;
    j["stages"].push_back(std::move(stage));
  }
  return j;
}

inline nlohmann::json compare_to_json(const CompareResult& r) {
  nlohmann::json j;
  j["violation"] = r.violation;
  j["layers"] = nlohmann::json::array();
  for (const LayerDiff& d : r.layers) {
    nlohmann::json layer;
    layer["stage"] = d.stage;
    layer["max_abs_diff"] = d.max_abs_diff;
    layer["differing_fraction"] = d.differing_fraction();
    layer["element_count"] = d.element_count;
    j["layers"].push_back(std::move(layer));
  }
  return j;
}

inline nlohmann::json explore_to_json(const ExploreResult& r) {
  nlohmann::json j;
  j["feasible"] = r.feasible;
  j["assignment"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.assignment.size(); ++i) {
    nlohmann::json layer;
    layer["variant"] = to_string(r.assignment[i]);
    layer["multipliers"] = r.multipliers[i];
    j["assignment"].push_back(std::move(layer));
  }
  j["totals"] = {{"lut", r.totals.lut}, {"dsp", r.totals.dsp},
                 {"bram", r.totals.bram}};
  j["utilization"] = {{"lut", r.util_lut}, {"dsp", r.util_dsp},
                      {"bram", r.util_bram}};
  j["max_utilization"] = r.max_utilization;
  j["binding_resource"] = r.binding_resource;
  return j;
}

}  // namespace evgraph
