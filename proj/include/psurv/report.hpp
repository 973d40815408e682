#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "psurv/stats.hpp"
#include "psurv/survivor_sim.hpp"

namespace psurv {

inline constexpr const char* kVersion = "psurv 1.0.0";

/// Shortest round-trip decimal form; identical bits print identically.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_number(std::uint64_t v) { return std::to_string(v); }

/// Rows of already formatted cells; written verbatim with a header line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  template <class... Cells>
  void add(const Cells&... cells) {
    rows.push_back({cell(cells)...});
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  template <class I, std::enable_if_t<std::is_integral_v<I>, int> = 0>
  static std::string cell(I v) {
    return std::to_string(v);
  }
};

inline void write_csv(std::ostream& os, const CsvTable& t) {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline void write_csv_file(const std::filesystem::path& path, const CsvTable& t) {
  std::ostringstream os;
  write_csv(os, t);
  write_text_file(path, os.str());
}

inline nlohmann::json to_json(const stats::TestReport& r) {
  return {{"method", r.method},
          {"statistic", r.statistic},
          {"p_value", r.p_value},
          {"sample_size", r.sample_size},
          {"degrees_of_freedom", r.degrees_of_freedom},
          {"alpha", r.alpha},
          {"pass", r.pass},
          {"notes", r.notes}};
}

inline nlohmann::json to_json(const stats::Dispersion& d) {
  return {{"index", d.index},       {"ci_lower", d.lower}, {"ci_upper", d.upper},
          {"mean", d.mean},         {"variance", d.variance},
          {"sample_size", d.sample_size}};
}

inline nlohmann::json to_json(const stats::MeanEstimate& m) {
  return {{"mean", m.mean}, {"std_error", m.std_error}, {"variance", m.variance}, {"n", m.n}};
}

/// One record as JSON lines: a header line, then one line per count
/// sample, sojourn and departure batch.
inline void write_record_jsonl(std::ostream& os, const SimulationRecord& rec,
                               std::uint64_t replication) {
  using nlohmann::json;
  os << json{{"type", "record"},
             {"replication", replication},
             {"config_digest", rec.config_digest},
             {"horizon", rec.horizon},
             {"initial_population", rec.initial_population},
             {"arrivals", rec.arrivals},
             {"departed", rec.departed},
             {"final_live", rec.final_live}}
            .dump()
     << '\n';
  for (const auto& s : rec.count_samples) {
    json j{{"type", "count_sample"}, {"replication", replication}, {"epoch", s.epoch},
           {"window_counts", s.window_counts}, {"live", s.live}, {"arrivals", s.arrivals},
           {"departed", s.departed}, {"initial", s.initial}};
    if (!s.live_attributes.empty()) j["live_attributes"] = s.live_attributes;
    os << j.dump() << '\n';
  }
  for (const auto& s : rec.sojourns) {
    json j{{"type", "sojourn"}, {"replication", replication}, {"attribute", s.attribute},
           {"arrival_epoch", s.arrival_epoch}, {"arrival_index", s.arrival_index}};
    j["deletion_epoch"] = s.deletion_epoch ? json(*s.deletion_epoch) : json(nullptr);
    os << j.dump() << '\n';
  }
  for (const auto& b : rec.batches) {
    os << json{{"type", "batch"},          {"replication", replication},
               {"trigger_index", b.trigger_index}, {"epoch", b.epoch},
               {"trigger_attribute", b.trigger_attribute}, {"departed", b.departed}}
              .dump()
       << '\n';
  }
}

}  // namespace psurv
