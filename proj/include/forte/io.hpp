#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "forte/signal.hpp"

namespace forte {

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, std::size_t line = 0);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct TraceRow {
  SensorFrame frame;
  std::optional<double> force_n;
  std::optional<int> slip_gt;
};

struct Trace {
  std::vector<TraceRow> rows;
  bool has_force = false;
  bool has_slip = false;

  std::vector<SensorFrame> frames() const;
};

/// Reads `t,ch0..ch5[,force_n][,slip_gt]`. Throws DataError naming the line.
Trace read_trace(std::istream& in);
Trace read_trace_file(const std::string& path);

void write_trace(std::ostream& out, const Trace& trace);
void write_trace_file(const std::string& path, const Trace& trace);

/// Shortest text that parses back to exactly `x`.
std::string format_double(double x);
double parse_double(const std::string& s, std::size_t line = 0);

/// `key = value` lines; `#` starts a comment. Tracks which keys were read so
/// callers can reject unknown ones.
class KeyValues {
 public:
  KeyValues() = default;
  static KeyValues parse(std::istream& in);
  static KeyValues parse_file(const std::string& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> unused() const;
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  const std::string* find(const std::string& key) const;

  std::map<std::string, std::string> values_;
  std::map<std::string, std::size_t> lines_;
  mutable std::set<std::string> used_;
};

/// Overrides pipeline parameters from keys such as `fft_window` or
/// `slip_threshold_db2`.
void apply_pipeline_config(const KeyValues& kv, PipelineConfig& cfg, const std::string& prefix = "");

}  // namespace forte
