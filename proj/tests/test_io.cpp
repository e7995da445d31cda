#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "forte/eval.hpp"
#include "forte/io.hpp"
#include "forte/scenario.hpp"

using namespace forte;

namespace {

const char* kHeader = "t,ch0,ch1,ch2,ch3,ch4,ch5\n";

std::size_t failing_line(const std::string& text) {
  std::istringstream in(text);
  try {
    read_trace(in);
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line " + std::to_string(e.line())) != std::string::npos);
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("format_double round trips exactly") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.9990234375) == "0.9990234375");
  CHECK(parse_double(" +2.5 ") == 2.5);
  CHECK_THROWS_AS(parse_double("2.5x"), DataError);
  CHECK_THROWS_AS(parse_double(""), DataError);
}

TEST_CASE("trace reads ground-truth columns") {
  std::istringstream in("t,ch0,ch1,ch2,ch3,ch4,ch5,force_n,slip_gt\n"
                        "0,0,0,0,0,0,0,1.5,0\n"
                        "0.0005,0.1,0.2,0.3,-0.1,-0.2,-0.3,,1\r\n");
  const Trace t = read_trace(in);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.has_force);
  CHECK(t.has_slip);
  CHECK(*t.rows[0].force_n == 1.5);
  CHECK_FALSE(t.rows[1].force_n.has_value());
  CHECK(*t.rows[1].slip_gt == 1);
  CHECK(t.rows[1].frame.channels[5] == -0.3);
}

TEST_CASE("malformed rows name their line") {
  const std::string ok = "0,0,0,0,0,0,0\n";
  CHECK(failing_line("") == 1);
  CHECK(failing_line("t,ch0,ch1\n") == 1);
  CHECK(failing_line("t,ch0,ch1,ch2,ch3,ch4,ch5,mystery\n") == 1);
  CHECK(failing_line(std::string(kHeader) + ok + "0.1,0,0,0,0,0\n") == 3);
  CHECK(failing_line(std::string(kHeader) + ok + "0.1,0,0,abc,0,0,0\n") == 3);
  CHECK(failing_line(std::string(kHeader) + ok + "0.1,0,0,1.5,0,0,0\n") == 3);
  CHECK(failing_line(std::string(kHeader) + ok + ok) == 3);
  CHECK(failing_line(std::string(kHeader) + ok + "\n0.1,0,0,0,0,0,nan\n") == 4);
  CHECK(failing_line("t,ch0,ch1,ch2,ch3,ch4,ch5,slip_gt\n0,0,0,0,0,0,0,2\n") == 2);
}

TEST_CASE("missing trace file is a data error") {
  CHECK_THROWS_AS(read_trace_file("/nonexistent/forte.csv"), DataError);
}

TEST_CASE("written traces read back identically") {
  sim::ScenarioSpec spec;
  spec.name = "A";
  spec.seed = 4;
  spec.duration_s = 3.0;
  const Trace a = sim::run_scenario(spec).trace;
  std::stringstream buf;
  write_trace(buf, a);
  const Trace b = read_trace(buf);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].frame.t == b.rows[i].frame.t);
    CHECK(a.rows[i].frame.channels == b.rows[i].frame.channels);
    CHECK(a.rows[i].force_n == b.rows[i].force_n);
    CHECK(a.rows[i].slip_gt == b.rows[i].slip_gt);
  }
  std::ostringstream again;
  write_trace(again, b);
  CHECK(again.str() == buf.str());
}

TEST_CASE("re-ingested trace gives the same pipeline output") {
  sim::ScenarioSpec spec;
  spec.name = "A";
  spec.seed = 8;
  const Trace a = sim::run_scenario(spec).trace;
  std::stringstream buf;
  write_trace(buf, a);
  const Trace b = read_trace(buf);
  ReplayOptions opt;
  std::ostringstream ta, tb;
  write_timeline(ta, replay(a, opt).timeline);
  write_timeline(tb, replay(b, opt).timeline);
  CHECK(ta.str() == tb.str());
}

TEST_CASE("key values") {
  std::istringstream in("# comment\nalpha = 0.6   # trailing\n\n  name=apple \nflag = yes\nn = 15\n");
  const auto kv = KeyValues::parse(in);
  CHECK(kv.get_double("alpha", 0) == 0.6);
  CHECK(kv.get_string("name", "") == "apple");
  CHECK(kv.get_bool("flag", false));
  CHECK(kv.get_int("n", 0) == 15);
  CHECK(kv.get_double("absent", 7.0) == 7.0);
  CHECK(kv.unused().empty());
}

TEST_CASE("key value errors") {
  std::istringstream dup("a = 1\na = 2\n");
  try {
    KeyValues::parse(dup);
    FAIL("duplicate accepted");
  } catch (const DataError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream noeq("a 1\n");
  CHECK_THROWS_AS(KeyValues::parse(noeq), DataError);
  std::istringstream bad("n = 1.5\nb = maybe\nx = seven\n");
  const auto kv = KeyValues::parse(bad);
  CHECK_THROWS_AS(kv.get_int("n", 0), DataError);
  CHECK_THROWS_AS(kv.get_bool("b", false), DataError);
  CHECK_THROWS_AS(kv.get_double("x", 0), DataError);
}

TEST_CASE("unknown keys are reported") {
  std::istringstream in("pipeline.slip_threshold_db2 = 3\npipeline.slip_treshold = 3\n");
  const auto kv = KeyValues::parse(in);
  PipelineConfig cfg;
  apply_pipeline_config(kv, cfg, "pipeline.");
  CHECK(cfg.slip_threshold_db2 == 3.0);
  CHECK(kv.unused() == std::vector<std::string>{"pipeline.slip_treshold"});
}

TEST_CASE("pipeline keys are validated") {
  std::istringstream in("fft_window = 401\n");
  const auto kv = KeyValues::parse(in);
  PipelineConfig cfg;
  CHECK_THROWS(apply_pipeline_config(kv, cfg));
  std::istringstream in2("variance_mode = sample\ngroup_gate = all_groups\nwindow_detrend = true\n");
  const auto kv2 = KeyValues::parse(in2);
  cfg = PipelineConfig{};
  apply_pipeline_config(kv2, cfg);
  CHECK(cfg.variance_mode == VarianceMode::Sample);
  CHECK(cfg.group_gate == GroupGate::AllGroups);
  CHECK(cfg.window_detrend);
}

}
