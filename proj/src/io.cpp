#include "forte/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace forte {

DataError::DataError(const std::string& what, std::size_t line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

std::vector<SensorFrame> Trace::frames() const {
  std::vector<SensorFrame> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.frame);
  return out;
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, std::size_t line) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  double v = 0.0;
  const char* first = s.data() + b;
  if (b < e && *first == '+') ++first;
  auto res = std::from_chars(first, s.data() + e, v);
  if (b == e || res.ec != std::errc() || res.ptr != s.data() + e)
    throw DataError("not a number: '" + s + "'", line);
  return v;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

Trace read_trace(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw DataError("empty trace: missing header", 1);
  ++lineno;
  auto header = split_csv(line);
  for (auto& h : header) h = trim(h);
  if (header.size() < 1 + kNumChannels || header[0] != "t")
    throw DataError("header must start with t,ch0,...,ch5", lineno);
  for (std::size_t c = 0; c < kNumChannels; ++c)
    if (header[1 + c] != "ch" + std::to_string(c)) throw DataError("unexpected column '" + header[1 + c] + "'", lineno);
  int force_col = -1, slip_col = -1;
  for (std::size_t i = 1 + kNumChannels; i < header.size(); ++i) {
    if (header[i] == "force_n" && force_col < 0) force_col = static_cast<int>(i);
    else if (header[i] == "slip_gt" && slip_col < 0) slip_col = static_cast<int>(i);
    else throw DataError("unexpected column '" + header[i] + "'", lineno);
  }

  Trace trace;
  trace.has_force = force_col >= 0;
  trace.has_slip = slip_col >= 0;
  double prev_t = 0.0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw DataError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()),
                      lineno);
    TraceRow row;
    row.frame.t = parse_double(cells[0], lineno);
    if (!std::isfinite(row.frame.t)) throw DataError("non-finite timestamp", lineno);
    if (!trace.rows.empty() && !(row.frame.t > prev_t)) throw DataError("timestamps must strictly increase", lineno);
    prev_t = row.frame.t;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      const double v = parse_double(cells[1 + c], lineno);
      if (!(v >= -1.0 && v <= 1.0)) throw DataError("channel value outside [-1, 1]", lineno);
      row.frame.channels[c] = v;
    }
    if (force_col >= 0) {
      const std::string cell = trim(cells[static_cast<std::size_t>(force_col)]);
      if (!cell.empty()) row.force_n = parse_double(cell, lineno);
    }
    if (slip_col >= 0) {
      const std::string cell = trim(cells[static_cast<std::size_t>(slip_col)]);
      if (!cell.empty()) {
        if (cell != "0" && cell != "1") throw DataError("slip_gt must be 0 or 1", lineno);
        row.slip_gt = cell == "1" ? 1 : 0;
      }
    }
    trace.rows.push_back(row);
  }
  return trace;
}

Trace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace '" + path + "'");
  try {
    return read_trace(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_trace(std::ostream& out, const Trace& trace) {
  out << "t";
  for (std::size_t c = 0; c < kNumChannels; ++c) out << ",ch" << c;
  if (trace.has_force) out << ",force_n";
  if (trace.has_slip) out << ",slip_gt";
  out << '\n';
  for (const auto& r : trace.rows) {
    out << format_double(r.frame.t);
    for (double v : r.frame.channels) out << ',' << format_double(v);
    if (trace.has_force) {
      out << ',';
      if (r.force_n) out << format_double(*r.force_n);
    }
    if (trace.has_slip) {
      out << ',';
      if (r.slip_gt) out << *r.slip_gt;
    }
    out << '\n';
  }
}

void write_trace_file(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_trace(out, trace);
}

// ---------------------------------------------------------------------------

KeyValues KeyValues::parse(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("expected key = value", lineno);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw DataError("empty key", lineno);
    if (kv.values_.count(key)) throw DataError("duplicate key '" + key + "'", lineno);
    kv.values_[key] = value;
    kv.lines_[key] = lineno;
  }
  return kv;
}

KeyValues KeyValues::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  try {
    return parse(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

bool KeyValues::has(const std::string& key) const { return values_.count(key) > 0; }

void KeyValues::set(const std::string& key, const std::string& value) { values_[key] = value; }

const std::string* KeyValues::find(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = find(key);
  return v ? *v : fallback;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  auto it = lines_.find(key);
  try {
    return parse_double(*v, it == lines_.end() ? 0 : it->second);
  } catch (const DataError& e) {
    throw DataError(key + ": " + e.what());
  }
}

int KeyValues::get_int(const std::string& key, int fallback) const {
  const double d = get_double(key, fallback);
  if (d != std::floor(d) || std::abs(d) > 2e9) throw DataError(key + ": expected an integer");
  return static_cast<int>(d);
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (*v == "1" || *v == "true" || *v == "yes" || *v == "on") return true;
  if (*v == "0" || *v == "false" || *v == "no" || *v == "off") return false;
  throw DataError(key + ": expected a boolean");
}

std::vector<std::string> KeyValues::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) out.push_back(k);
  return out;
}

void apply_pipeline_config(const KeyValues& kv, PipelineConfig& cfg, const std::string& prefix) {
  const auto k = [&](const char* name) { return prefix + name; };
  cfg.sample_rate_hz = kv.get_double(k("sample_rate_hz"), cfg.sample_rate_hz);
  cfg.median_window = kv.get_int(k("median_window"), cfg.median_window);
  cfg.fft_window = kv.get_int(k("fft_window"), cfg.fft_window);
  cfg.overlap = kv.get_double(k("overlap"), cfg.overlap);
  cfg.band_min_hz = kv.get_double(k("band_min_hz"), cfg.band_min_hz);
  cfg.band_max_hz = kv.get_double(k("band_max_hz"), cfg.band_max_hz);
  cfg.history_length = kv.get_int(k("history_length"), cfg.history_length);
  cfg.monotonic_increment_db = kv.get_double(k("monotonic_increment_db"), cfg.monotonic_increment_db);
  cfg.group_variance_gate_db2 = kv.get_double(k("group_variance_gate_db2"), cfg.group_variance_gate_db2);
  cfg.slip_threshold_db2 = kv.get_double(k("slip_threshold_db2"), cfg.slip_threshold_db2);
  cfg.log_epsilon = kv.get_double(k("log_epsilon"), cfg.log_epsilon);
  cfg.adc_bits = kv.get_int(k("adc_bits"), cfg.adc_bits);
  cfg.baseline_seconds = kv.get_double(k("baseline_seconds"), cfg.baseline_seconds);
  cfg.window_detrend = kv.get_bool(k("window_detrend"), cfg.window_detrend);
  const std::string var = kv.get_string(k("variance_mode"), cfg.variance_mode == VarianceMode::Population ? "population" : "sample");
  if (var == "population") cfg.variance_mode = VarianceMode::Population;
  else if (var == "sample") cfg.variance_mode = VarianceMode::Sample;
  else throw DataError("variance_mode must be population or sample");
  const std::string gate = kv.get_string(k("group_gate"), cfg.group_gate == GroupGate::PerGroup ? "per_group" : "all_groups");
  if (gate == "per_group") cfg.group_gate = GroupGate::PerGroup;
  else if (gate == "all_groups") cfg.group_gate = GroupGate::AllGroups;
  else throw DataError("group_gate must be per_group or all_groups");
  cfg.validate();
}

}  // namespace forte
