#include <gtest/gtest.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "dictdescent/config.hpp"
#include "dictdescent/errors.hpp"
#include "dictdescent/experiment.hpp"
#include "dictdescent/io.hpp"

using namespace dictdescent;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto p = fs::temp_directory_path() /
                 ("dictdescent_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Json quadratic_axes_doc() { return Json::parse(read_text_file("configs/quadratic_axes.json")); }

void write_config(const fs::path& path, const Json& doc) { write_text_file(path, dump_json(doc)); }

struct Captured {
  int code;
  std::string out, err;
};

Captured run(const fs::path& config, const fs::path& out_dir) {
  std::ostringstream o, e;
  const int code = cmd_run(config, out_dir, o, e);
  return {code, o.str(), e.str()};
}

Json power_doc() {
  Json d = Json::parse(read_text_file("configs/power_cone.json"));
  d["name"] = "power_small";
  d["space"]["n"] = 4;
  return d;
}

}  // namespace

// --------------------------------------------------------------- config

TEST(Config, BundledConfigsParseAndBuild) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator("configs")) {
    if (entry.path().extension() != ".json") continue;
    const auto cfg = load_config(entry.path());
    EXPECT_NO_THROW(build_setup(cfg)) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 6);
}

TEST(Config, UnknownKeysAreErrors) {
  auto d = quadratic_axes_doc();
  d["greedy"]["max_iters"] = 10;
  try {
    parse_config(d);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("greedy.max_iters"), std::string::npos) << e.what();
  }
  d = quadratic_axes_doc();
  d["extra"] = 1;
  EXPECT_THROW(parse_config(d), ConfigError);
}

TEST(Config, VersionAndKindsAreValidated) {
  auto d = quadratic_axes_doc();
  d["version"] = 2;
  EXPECT_THROW(parse_config(d), ConfigError);
  d = quadratic_axes_doc();
  d["energy"]["kind"] = "cubic";
  EXPECT_THROW(parse_config(d), ConfigError);
  d = quadratic_axes_doc();
  d["dictionary"]["kind"] = "coordinate-cone";
  d["dictionary"].erase("atoms");
  d["dictionary"]["c"] = 0.5;
  d["greedy"]["mode"] = "exact-union";
  EXPECT_THROW(parse_config(d), ConfigError);
}

TEST(Config, PowerExponentMismatchNamesTheField) {
  auto d = power_doc();
  d["space"]["q"] = 2.0;
  try {
    parse_config(d);
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("space.q"), std::string::npos) << msg;
    EXPECT_NE(msg.find("energy.p"), std::string::npos) << msg;
  }
  const auto dir = fresh_dir("mismatch");
  write_config(dir / "c.json", d);
  const auto r = run(dir / "c.json", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("space.q"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "power_cone_report.json"));
}

TEST(Config, DeclaredExponentBelowRelationIsRejected) {
  auto d = quadratic_axes_doc();
  d["energy"]["declared"] = {{"p", 1.0}, {"s", 1.5}};
  EXPECT_THROW(parse_config(d), InconsistentAssumptions);
  const auto dir = fresh_dir("declared");
  write_config(dir / "c.json", d);
  const auto r = run(dir / "c.json", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("exponent relation"), std::string::npos) << r.err;
}

TEST(Config, MissingFileAndBadJson) {
  const auto dir = fresh_dir("bad");
  EXPECT_EQ(run(dir / "absent.json", dir).code, 2);
  write_text_file(dir / "broken.json", "{\"version\": 1,");
  EXPECT_EQ(run(dir / "broken.json", dir).code, 2);
  EXPECT_THROW(load_config(dir / "broken.json"), ConfigError);
}

// ------------------------------------------------------------------ run

TEST(Run, QuadraticAxesEndToEnd) {
  const auto dir = fresh_dir("qaxes");
  const auto r = run("configs/quadratic_axes.json", dir);
  EXPECT_EQ(r.code, 0) << r.err;
  const auto rows = parse_trace_csv(read_text_file(dir / "quadratic_axes_trace.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_DOUBLE_EQ(rows[0].gap, 12.5);
  EXPECT_DOUBLE_EQ(rows[1].gap, 4.5);
  EXPECT_DOUBLE_EQ(rows[2].gap, 0.0);
  const auto text = read_text_file(dir / "quadratic_axes_trace.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), kTraceHeader);

  const auto report = Json::parse(read_text_file(dir / "quadratic_axes_report.json"));
  std::vector<std::string> keys;
  for (const auto& [k, v] : report.items()) keys.push_back(k);
  for (const char* k : {"config", "estimates", "norming", "checks", "rate", "verdict"})
    EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
  EXPECT_EQ(report["verdict"], "pass");
  for (const char* c : {"monotonicity", "one_step_bound", "orthogonality", "telescoping", "iterate_error"})
    EXPECT_TRUE(report["checks"].contains(c)) << c;
  for (const auto& [name, c] : report["checks"].items())
    if (c["applicable"].get<bool>()) {
      EXPECT_TRUE(c["passed"].get<bool>()) << name;
    }

  // the echoed config validates again and describes the same experiment
  const auto again = parse_config(report["config"]);
  EXPECT_EQ(again.name, "quadratic_axes");
  EXPECT_EQ(again.raw, quadratic_axes_doc());
  EXPECT_TRUE(fs::exists(dir / "quadratic_axes.svg"));
}

TEST(Run, Deterministic) {
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  ASSERT_EQ(run("configs/power_cone.json", a).code, 0);
  ASSERT_EQ(run("configs/power_cone.json", b).code, 0);
  for (const char* f : {"power_cone_trace.csv", "power_cone_report.json"})
    EXPECT_EQ(read_text_file(a / f), read_text_file(b / f)) << f;
}

TEST(Run, InvariantViolationExitsOneWithReport) {
  // a declared Lipschitz constant below the true one (1) makes the step bound too optimistic
  auto d = quadratic_axes_doc();
  d["energy"]["declared"] = {{"p", 1.0}, {"s", 2.0}, {"lip", 0.5}, {"alpha", 0.5}};
  const auto dir = fresh_dir("viol");
  write_config(dir / "c.json", d);
  const auto r = run(dir / "c.json", dir);
  EXPECT_EQ(r.code, 1);
  const auto report = Json::parse(read_text_file(dir / "quadratic_axes_report.json"));
  EXPECT_EQ(report["verdict"], "fail");
  EXPECT_FALSE(report["checks"]["one_step_bound"]["passed"].get<bool>());
}

// ---------------------------------------------------------------- sweep

TEST(Sweep, AllPass) {
  const auto in = fresh_dir("sweep_in"), out = fresh_dir("sweep_out");
  for (int k = 0; k < 3; ++k) {
    auto d = quadratic_axes_doc();
    d["name"] = "q" + std::to_string(k);
    d["output"] = {{"trace_path", "q" + std::to_string(k) + ".csv"},
                   {"report_path", "q" + std::to_string(k) + ".json"}};
    write_config(in / ("q" + std::to_string(k) + ".json"), d);
  }
  std::ostringstream o, e;
  EXPECT_EQ(cmd_sweep(in, out, 2, o, e), 0) << e.str();
  const auto summary = read_text_file(out / "sweep_summary.csv");
  std::istringstream lines(summary);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "name,verdict,fitted_kind,fitted_rate,predicted_kind,predicted_rate");
  int rows = 0;
  while (std::getline(lines, line)) {
    EXPECT_NE(line.find(",pass,"), std::string::npos) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 3);
}

TEST(Sweep, OneFailureStillReportsEveryRun) {
  const auto in = fresh_dir("sweepf_in"), out = fresh_dir("sweepf_out");
  for (int k = 0; k < 3; ++k) {
    auto d = quadratic_axes_doc();
    d["name"] = "q" + std::to_string(k);
    d["output"] = {{"trace_path", "q" + std::to_string(k) + ".csv"},
                   {"report_path", "q" + std::to_string(k) + ".json"}};
    if (k == 1) d["energy"]["declared"] = {{"p", 1.0}, {"s", 2.0}, {"lip", 0.5}, {"alpha", 0.5}};
    write_config(in / ("q" + std::to_string(k) + ".json"), d);
  }
  std::ostringstream o, e;
  EXPECT_EQ(cmd_sweep(in, out, 1, o, e), 1);
  const auto summary = read_text_file(out / "sweep_summary.csv");
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 4);
  EXPECT_NE(summary.find("q1,fail"), std::string::npos) << summary;
}

TEST(Sweep, EmptyDirectory) {
  const auto in = fresh_dir("sweep_empty");
  std::ostringstream o, e;
  EXPECT_EQ(cmd_sweep(in, in, 1, o, e), 2);
  EXPECT_EQ(cmd_sweep(in / "missing", in, 1, o, e), 2);
}

TEST(Sweep, ParallelMatchesSerial) {
  const auto in = fresh_dir("sweepp_in"), a = fresh_dir("sweepp_a"), b = fresh_dir("sweepp_b");
  for (const char* name : {"quadratic_axes", "power_cone", "quadratic_identity_full"})
    fs::copy_file(fs::path("configs") / (std::string(name) + ".json"), in / (std::string(name) + ".json"));
  std::ostringstream o1, e1, o2, e2;
  EXPECT_EQ(cmd_sweep(in, a, 1, o1, e1), 0);
  EXPECT_EQ(cmd_sweep(in, b, 3, o2, e2), 0);
  EXPECT_EQ(o1.str(), o2.str());
  for (const auto& entry : fs::directory_iterator(a))
    EXPECT_EQ(read_text_file(entry.path()), read_text_file(b / entry.path().filename()))
        << entry.path().filename();
}

// ----------------------------------------------------------------- plot

namespace {
int count_of(const std::string& s, const std::string& needle) {
  int n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}
}  // namespace

TEST(Plot, StructureAndZeroGapClipping) {
  const auto dir = fresh_dir("plot");
  ASSERT_EQ(run("configs/quadratic_axes.json", dir).code, 0);
  std::ostringstream o, e;
  EXPECT_EQ(cmd_plot(dir / "quadratic_axes_trace.csv", dir / "p.svg", o, e), 0);
  const auto svg = read_text_file(dir / "p.svg");
  EXPECT_EQ(count_of(svg, "<polyline"), 2);
  EXPECT_EQ(count_of(svg, "<path class=\"fit\""), 1);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
  EXPECT_EQ(svg.find("inf"), std::string::npos);
  // same input, same bytes
  EXPECT_EQ(cmd_plot(dir / "quadratic_axes_trace.csv", dir / "q.svg", o, e), 0);
  EXPECT_EQ(read_text_file(dir / "q.svg"), svg);
}

TEST(Plot, SingleRowWarns) {
  const auto dir = fresh_dir("plot1");
  write_text_file(dir / "t.csv", std::string(kTraceHeader) + "\n0,1,2,3,0,0,0\n");
  std::ostringstream o, e;
  EXPECT_EQ(cmd_plot(dir / "t.csv", dir / "t.svg", o, e), 0);
  EXPECT_NE(e.str().find("degenerate"), std::string::npos) << e.str();
  EXPECT_EQ(count_of(read_text_file(dir / "t.svg"), "<polyline"), 2);
}

TEST(Plot, MalformedCsv) {
  const auto dir = fresh_dir("plotbad");
  std::ostringstream o, e;
  write_text_file(dir / "a.csv", "m,energy\n0,1\n");
  EXPECT_EQ(cmd_plot(dir / "a.csv", dir / "a.svg", o, e), 2);
  write_text_file(dir / "b.csv", std::string(kTraceHeader) + "\n0,1,x,3,0,0,0\n");
  EXPECT_EQ(cmd_plot(dir / "b.csv", dir / "b.svg", o, e), 2);
  write_text_file(dir / "c.csv", std::string(kTraceHeader) + "\n0,1,2\n");
  EXPECT_EQ(cmd_plot(dir / "c.csv", dir / "c.svg", o, e), 2);
  EXPECT_EQ(cmd_plot(dir / "missing.csv", dir / "d.svg", o, e), 2);
}

// ------------------------------------------------------------ serialization

TEST(Serialization, SeventeenDigitsAndNonFinite) {
  EXPECT_EQ(format17(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format17(1.0 / 3.0)), 1.0 / 3.0);
  Json j = {{"a", 0.1}, {"b", std::numeric_limits<double>::quiet_NaN()}, {"c", 2}};
  const auto text = dump_json(j);
  EXPECT_NE(text.find("0.10000000000000001"), std::string::npos);
  EXPECT_NE(text.find("\"b\": null"), std::string::npos) << text;
  EXPECT_EQ(Json::parse(text)["c"], 2);
}

TEST(Serialization, TraceRoundTrip) {
  GreedyTrace t{{}, SpaceVector::zeros(Space::uniform(1, 2.0))};
  for (int m = 0; m < 4; ++m) {
    IterationRecord r;
    r.m = m;
    r.energy = -1.0 / (m + 3);
    r.gap = m == 3 ? 0.0 : std::pow(0.1, m);
    r.sigma = std::sqrt(m + 0.5);
    r.step_norm = 1e-300 * m;
    r.orth_residual = -1e-17;
    r.cum_step_s = std::exp(m);
    t.rows.push_back(r);
  }
  const auto back = parse_trace_csv(trace_csv(t));
  ASSERT_EQ(back.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(back[k].m, t.rows[k].m);
    EXPECT_EQ(back[k].energy, t.rows[k].energy);
    EXPECT_EQ(back[k].gap, t.rows[k].gap);
    EXPECT_EQ(back[k].sigma, t.rows[k].sigma);
    EXPECT_EQ(back[k].step_norm, t.rows[k].step_norm);
    EXPECT_EQ(back[k].orth_residual, t.rows[k].orth_residual);
    EXPECT_EQ(back[k].cum_step_s, t.rows[k].cum_step_s);
  }
}
