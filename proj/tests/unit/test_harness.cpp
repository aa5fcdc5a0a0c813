#include "roughflow/errors.hpp"
#include "roughflow/harness/cli.hpp"
#include "roughflow/harness/config.hpp"
#include "roughflow/harness/experiments.hpp"
#include "roughflow/harness/serialization.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace roughflow;
using namespace roughflow::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("roughflow_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "roughflow");
  std::ostringstream out, err;
  const int code = cli_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.m_lo = 3;
  c.m_hi = 5;
  c.level = 5;
  c.brownian_level = 8;
  c.samples = 20;
  c.experiment_subdiv = 2;
  return c;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config parsing") {
  std::istringstream in("# a comment\nseed = 7\n  field=rotation  # trailing\np = 2\nepsilons = 0.5, 0.25\n\n");
  const ExperimentConfig c = parse_config(in);
  CHECK(c.seed == 7);
  CHECK(c.field == "rotation");
  CHECK(c.p == 2);
  CHECK(c.epsilons == std::vector<double>{0.5, 0.25});
  CHECK(c.T == 1.0);
  const auto m = c.to_map();
  CHECK(m.at("seed") == "7");
  CHECK(m.count("out_dir") == 0);
  CHECK(config_schema().find("brownian_level = 14") != std::string::npos);
}

TEST_CASE("config rejection") {
  for (const char* text : {"bogus = 1\n", "seed = 1\nseed = 2\n", "seed\n", "seed = -1\n", "d = x\n",
                           "alpha = 0.6\n", "epsilons = 0.1, 0.2\n", "refine = maybe\n", "T = nan\n",
                           "m_lo = 9\nm_hi = 8\n", "brownian_level = 11\n", "transversal = torus\n",
                           "x0 = 1, 2\n", "samples = 0\n"}) {
    CAPTURE(text);
    std::istringstream in(text);
    CHECK_THROWS_AS(parse_config(in), ValidationError);
  }
  CHECK_THROWS_AS(parse_config_file("/nonexistent.cfg"), ValidationError);
  ExperimentConfig c;
  CHECK_THROWS_AS(set_config_value(c, "nope", "1"), ValidationError);
}

TEST_CASE("fnv1a64 and hex") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("rough path json round trip") {
  const auto W = brownian_rough_path(sample_brownian(2, 1.0, 6, 3), 4);
  std::stringstream ss;
  write_rough_path_json(ss, W);
  CHECK(ss.str().find("\"schema_version\": \"1.0.0\"") != std::string::npos);
  const GridRoughPath R = read_rough_path_json(ss);
  CHECK(driver_hash(R) == driver_hash(W));
  CHECK(R.times() == W.times());
  CHECK(R.cells()[3].level2 == W.cells()[3].level2);
  const auto V = brownian_rough_path(sample_brownian(2, 1.0, 6, 4), 4);
  CHECK(driver_hash(V) != driver_hash(W));
  std::istringstream bad("{\"kind\": \"rough_path\"}");
  CHECK_THROWS_AS(read_rough_path_json(bad), ValidationError);
  std::istringstream junk("not json");
  CHECK_THROWS_AS(read_rough_path_json(junk), ValidationError);
}

TEST_CASE("trajectory csv") {
  Trajectory tr;
  tr.times = {0.0, 0.5};
  tr.states = {Vector::Zero(2), Vector::Ones(2)};
  std::ostringstream a;
  write_trajectory_csv(a, tr);
  CHECK(a.str() == "t,x1,x2\n0,0,0\n0.5,1,1\n");
  tr.j1 = {Matrix::Identity(2, 2), Matrix::Identity(2, 2) * 2.0};
  std::ostringstream b;
  write_trajectory_csv(b, tr);
  CHECK(b.str().rfind("t,x1,x2,J11,J12,J21,J22\n", 0) == 0);
  CHECK(b.str().find("0.5,1,1,2,0,0,2\n") != std::string::npos);
}

TEST_CASE("manifest") {
  Manifest m("demo");
  m.set("b", 1.5).set("a", "x").set("nan", std::nan("")).set("n", 3).set("flag", true);
  Manifest row;
  row.set("k", 1);
  m.append("rows", row).append("rows", row);
  const std::string s = m.dump();
  CHECK(s.find("\"schema_version\": \"1.0.0\"") != std::string::npos);
  CHECK(s.find("\"nan\": null") != std::string::npos);
  CHECK(s.find("\"a\"") < s.find("\"b\""));
  Manifest copy = m;
  CHECK(copy.dump() == s);
}

TEST_CASE("default start point is valid on every transversal") {
  ExperimentConfig c;
  for (const char* kind : {"circle", "cantor", "finite"}) {
    const SuspensionSpace S(make_transversal(kind));
    const LeafPoint m = config_leaf_point(c, S);
    CHECK(m.z == ZPoint{});
    CHECK(m.y[0] == 0.25);
  }
  c.z0 = "0101";
  CHECK_THROWS_AS(config_leaf_point(c, SuspensionSpace(make_transversal("cantor"))), ValidationError);
}

TEST_CASE("rate function") {
  PiecewisePath h;
  h.times = {0.0, 1.0};
  h.values = {Vector::Zero(1), Vector::Ones(1)};
  CHECK(rate_function(make_cameron_martin(h)) == 0.5);
  h.values[1][0] = 2.0;
  CHECK(rate_function(make_cameron_martin(h)) == 2.0);
  h.values[1][0] = 0.0;
  CHECK(rate_function(make_cameron_martin(h)) == 0.0);
}

TEST_CASE("strictly decreasing") {
  CHECK(strictly_decreasing({3.0, 2.0, 1.0}));
  CHECK_FALSE(strictly_decreasing({3.0, 3.0, 1.0}));
  CHECK_FALSE(strictly_decreasing({1.0, std::nan(""), 0.5}));
  CHECK(strictly_decreasing({}));
}

TEST_CASE("wong-zakai with zero and constant fields") {
  ExperimentConfig c = small_config();
  c.field = "zero";
  c.leaf_field = "zero";
  const ConvergenceTable z = wong_zakai_experiment(c);
  REQUIRE(z.rows.size() == 3);
  for (const auto& r : z.rows) {
    CHECK(r.solution_sup == 0.0);
    CHECK(r.foliated_sup == 0.0);
    CHECK(r.error.empty());
  }
  c.field = "constant";
  const ConvergenceTable k = wong_zakai_experiment(c);
  for (const auto& r : k.rows) {
    CHECK(r.level1_sup > 0.0);
    CHECK(std::abs(r.solution_sup - r.level1_sup) <= 1e-12);
    CHECK(r.driver_distance > 0.0);
  }
  std::ostringstream os;
  write_convergence_csv(os, k);
  CHECK(os.str().rfind("m,driver_distance,level1_sup,solution_sup,foliated_sup,round_trip,error\n", 0) == 0);
}

TEST_CASE("support skeleton") {
  ExperimentConfig c = small_config();
  SUBCASE("exponential along h_t = t") {
    const SupportReport r = support_skeleton_demo(c, config_skeleton(c));
    CHECK(r.rde_final[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-6));
    CHECK(r.ode_distance <= 1e-6);
    CHECK(r.samples.size() == 20);
    CHECK(r.min_distance >= 0.0);
  }
  SUBCASE("h = 0 with drift") {
    c.field = "drift";
    c.p = 2;
    const fs::path dir = scratch("support");
    spit(dir / "h.csv", "t,w1\n0,0\n1,0\n");
    c.h_file = (dir / "h.csv").string();
    const SupportReport r = support_skeleton_demo(c, config_skeleton(c));
    CHECK(r.hnorm_sq == 0.0);
    CHECK(r.ode_distance <= 1e-6);
    CHECK(r.rde_final[0] == doctest::Approx(2.0));
  }
  SUBCASE("foliated translation skeleton winds floor(y0 + h_T) times") {
    c.leaf_field = "unit";
    const fs::path dir = scratch("support2");
    spit(dir / "h.csv", "t,w1\n0,0\n1,2.5\n");
    c.h_file = (dir / "h.csv").string();
    const SupportReport r = support_skeleton_demo(c, config_skeleton(c));
    REQUIRE(r.has_foliated);
    CHECK(r.foliated_final.winding == 2);  // floor(0.25 + 2.5)
    CHECK(r.foliated_final.y[0] == doctest::Approx(0.75));
  }
}

TEST_CASE("ldp experiment") {
  ExperimentConfig c = small_config();
  c.samples = 50;
  const LdpReport r = ldp_experiment(c, config_skeleton(c));
  CHECK(r.rate == 0.5);
  CHECK(r.slack == doctest::Approx(2.0 / std::sqrt(50.0)));
  REQUIRE(r.rows.size() == 3);
  for (const auto& row : r.rows) {
    CHECK(row.samples == 50);
    CHECK(row.q == doctest::Approx(row.exceed / 50.0));
  }
}

TEST_CASE("output directory precedence") {
  ::unsetenv("ROUGHFLOW_OUT");
  CHECK(resolve_out_dir("", "cfg") == "cfg");
  CHECK(resolve_out_dir("cli", "cfg") == "cli");
  ::setenv("ROUGHFLOW_OUT", "env", 1);
  CHECK(resolve_out_dir("", "cfg") == "env");
  CHECK(resolve_out_dir("cli", "cfg") == "cli");
  ::unsetenv("ROUGHFLOW_OUT");
}

TEST_CASE("cli exit codes") {
  const fs::path dir = scratch("cli_codes");
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  const Run bad = run({"solve", "--seed", "x"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("config keys") != std::string::npos);
  spit(dir / "bad.cfg", "bogus = 1\n");
  CHECK(run({"solve", "--config", (dir / "bad.cfg").string(), "--out", dir.string()}).code == 1);
  CHECK(run({"solve", "--set", "p=2", "--out", dir.string()}).code == 1);  // exponential needs p = 1
  // a driver jump of 30 takes the exponential flow past the explosion radius
  spit(dir / "jump.csv", "t,w1\n0,0\n1,30\n");
  const Run boom = run({"solve", "--set", "path_file=" + (dir / "jump.csv").string(), "--out", dir.string()});
  CHECK(boom.code == 2);
  CHECK(boom.err.find("numerical failure") != std::string::npos);
  CHECK(run({"lift", "--help"}).code == 0);
}

TEST_CASE("cli solve with zero fields writes a constant trajectory") {
  const fs::path dir = scratch("cli_zero");
  spit(dir / "zero.cfg", "field = zero\np = 2\nd = 2\nx0 = 0.5, -1\nlevel = 4\n");
  const Run r = run({"solve", "--config", (dir / "zero.cfg").string(), "--out", (dir / "o").string()});
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(dir / "o" / "trajectory.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "t,x1,x2");
  int rows = 0;
  while (std::getline(csv, line)) {
    CHECK(line.substr(line.find(',')) == ",0.5,-1");
    ++rows;
  }
  CHECK(rows > 16);
  const std::string manifest = slurp(dir / "o" / "manifest.json");
  CHECK(manifest.find("\"subdivision\"") != std::string::npos);
  CHECK(manifest.find("\"hash\"") != std::string::npos);
}

TEST_CASE("cli ldp prints the rate of h_t = t") {
  const fs::path dir = scratch("cli_ldp");
  spit(dir / "h.csv", "t,w1\n0,0\n1,1\n");
  const Run r = run({"ldp", "--set", "h_file=" + (dir / "h.csv").string(), "--set", "samples=20", "--set", "level=6",
                     "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("J = 0.5\n") != std::string::npos);
  CHECK(fs::exists(dir / "ldp.json"));
  CHECK(fs::exists(dir / "ldp.csv"));
}

TEST_CASE("cli reruns are byte-identical") {
  const fs::path dir = scratch("cli_det");
  for (const char* cmd : {"lift", "solve", "foliated-demo"}) {
    CAPTURE(cmd);
    const std::vector<std::string> extra{"--seed", "5", "--set", "level=6"};
    auto a = std::vector<std::string>{cmd, "--out", (dir / "a").string()};
    auto b = std::vector<std::string>{cmd, "--out", (dir / "b").string()};
    a.insert(a.end(), extra.begin(), extra.end());
    b.insert(b.end(), extra.begin(), extra.end());
    REQUIRE(run(a).code == 0);
    REQUIRE(run(b).code == 0);
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
      CHECK(slurp(entry.path()) == slurp(dir / "b" / entry.path().filename()));
    }
  }
  // a different seed changes the driver
  REQUIRE(run({"lift", "--seed", "6", "--set", "level=6", "--out", (dir / "c").string()}).code == 0);
  CHECK(slurp(dir / "a" / "path.csv") != slurp(dir / "c" / "path.csv"));
}

TEST_CASE("cli honours ROUGHFLOW_OUT") {
  const fs::path dir = scratch("cli_env");
  ::setenv("ROUGHFLOW_OUT", (dir / "env").string().c_str(), 1);
  const Run r = run({"lift", "--set", "level=3"});
  ::unsetenv("ROUGHFLOW_OUT");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "env" / "manifest.json"));
}

}
