#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <string>

#include "ksupp/io.hpp"

using namespace ksupp;
using io::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string("'") + KSUPP_CLI_PATH + "' " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("ksupp_cli_" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write_config(const std::string& name, const json& j) {
    const auto p = dir_ / name;
    std::ofstream(p) << j.dump(2);
    return "'" + p.string() + "'";
  }
  std::string path(const std::string& name) const { return "'" + (dir_ / name).string() + "'"; }
  json read_json(const std::string& name) const { return json::parse(io::read_file(dir_ / name)); }
  std::string read_text(const std::string& name) const { return io::read_file(dir_ / name); }

  fs::path dir_;
};

json admissible_config(const std::string& group, const json& subgroup, const json& support, double radius,
                       std::uint64_t seed = 1) {
  return {{"group", group},
          {"subgroup", subgroup},
          {"support", support},
          {"params", {{"radius", radius}, {"n_samples", 20000}, {"seed", seed}}}};
}

json ray(const std::vector<std::string>& base, const std::vector<std::string>& gen) {
  return {{"components", json::array({{{"base", base}, {"generators", json::array({gen})}}})}};
}

std::map<std::string, std::int64_t> components(const json& report) {
  std::map<std::string, std::int64_t> out;
  for (const auto& c : report["components"]) out[c["mu"].dump()] = c["multiplicity"].get<std::int64_t>();
  return out;
}

}  // namespace

TEST_F(Cli, BranchClebschGordan) {
  auto r = run("branch --group 'SU(2)xSU(2)' --subgroup diag --weight 1,1 --out " + path("b.json"));
  ASSERT_EQ(r.code, 0);
  const auto rep = read_json("b.json");
  io::validate_report(rep);
  EXPECT_EQ(components(rep), (std::map<std::string, std::int64_t>{{R"(["2"])", 1}, {R"(["0"])", 1}}));
  EXPECT_TRUE(rep["dimension_check"].get<bool>());
  EXPECT_NE(r.out.find("multiplicity"), std::string::npos);
}

TEST_F(Cli, BranchTrivialAndIdentity) {
  ASSERT_EQ(run("branch --group 'SU(2)xSU(2)' --subgroup diag --weight 0,0 --out " + path("t.json")).code, 0);
  EXPECT_EQ(components(read_json("t.json")), (std::map<std::string, std::int64_t>{{R"(["0"])", 1}}));
  ASSERT_EQ(run("branch --group 'SU(3)' --subgroup identity --weight 2,1 --out " + path("i.json")).code, 0);
  EXPECT_EQ(components(read_json("i.json")), (std::map<std::string, std::int64_t>{{R"(["2","1"])", 1}}));
}

TEST_F(Cli, BranchInputErrors) {
  EXPECT_EQ(run("branch --group 'SU(2)' --weight -1").code, 2);
  EXPECT_EQ(run("branch --group 'SU(2)' --weight 1,1").code, 2);
  EXPECT_EQ(run("branch --group 'SO(5)' --weight 1").code, 2);
  EXPECT_EQ(run("branch --group 'SU(2)' --subgroup nope --weight 1").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST_F(Cli, AfsuppDeltaSmoothAndTooSmall) {
  json cfg{{"group", "SU(2)xSU(2)"}, {"series", {{"source", "delta"}}}, {"params", {{"radius", 40}, {"seed", 1}}}};
  ASSERT_EQ(run("afsupp --config " + write_config("d.json", cfg) + " --out " + path("d.out.json")).code, 0);
  const auto rep = read_json("d.out.json");
  io::validate_report(rep);
  // Full chamber: both walls and the bisector are covered.
  const auto doc = io::afsupp_report_from_json(rep);
  for (const auto& probe : {Weight{1, 0}, Weight{0, 1}, Weight{1, 1}})
    EXPECT_TRUE(contains(doc.afsupp, to_eigen(probe.coords))) << to_string(probe);

  cfg["series"] = {{"source", "smooth"}};
  ASSERT_EQ(run("afsupp --config " + write_config("s.json", cfg) + " --out " + path("s.out.json")).code, 0);
  EXPECT_TRUE(read_json("s.out.json")["afsupp"]["directions"].empty());

  cfg["params"]["radius"] = 1.5;
  EXPECT_EQ(run("afsupp --config " + write_config("small.json", cfg) + " --out " + path("small.out.json")).code, 3);
  EXPECT_EQ(read_json("small.out.json")["kind"], "error_report");
}

TEST_F(Cli, CheckAdmissibleExitCodes) {
  const auto ok = admissible_config("SU(2)xSU(2)", "diag", ray({"0", "0"}, {"1", "0"}), 40);
  ASSERT_EQ(run("check-admissible --config " + write_config("ok.json", ok) + " --out " + path("ok.out.json")).code, 0);
  const auto rep = read_json("ok.out.json");
  io::validate_report(rep);
  EXPECT_EQ(rep["condition"]["verdict"], "Certified");
  EXPECT_EQ(rep["containment"]["verdict"], "Verified");
  for (const auto& e : rep["restricted_multiplicities"]["entries"]) EXPECT_EQ(e["multiplicity"], 1);

  const auto neg = admissible_config("SU(2)", "torus", ray({"0"}, {"1"}), 40);
  ASSERT_EQ(run("check-admissible --config " + write_config("neg.json", neg) + " --out " + path("neg.out.json")).code, 1);
  const auto nrep = read_json("neg.out.json");
  io::validate_report(nrep);
  EXPECT_EQ(nrep["condition"]["verdict"], "Failed");
  EXPECT_TRUE(nrep["advisory"].get<bool>());
  EXPECT_FALSE(nrep["restricted_multiplicities"]["growing"].empty());

  auto tight = ok;
  tight["params"]["margin"] = 0.001;
  EXPECT_EQ(run("check-admissible --config " + write_config("m.json", tight) + " --out " + path("m.out.json")).code, 2);
  const auto err = read_json("m.out.json");
  io::validate_report(err);
  EXPECT_EQ(err["error"]["kind"], "MarginTooSmall");
}

TEST_F(Cli, InconclusiveBetweenToleranceAndMargin) {
  // SU(2)^2 / factor(1): AS_K = ray (1,1) sits pi/4 from the orbit ray (0,1).
  // A margin above pi/4 leaves the angle between tolerance and margin.
  auto cfg = admissible_config("SU(2)xSU(2)", "factor(1)", ray({"0", "0"}, {"1", "1"}), 20);
  cfg["params"]["margin"] = 0.8;
  ASSERT_EQ(run("check-admissible --config " + write_config("inc.json", cfg) + " --out " + path("inc.out.json")).code, 4);
  EXPECT_EQ(read_json("inc.out.json")["condition"]["verdict"], "Inconclusive");
}

TEST_F(Cli, ConfigErrors) {
  auto cfg = admissible_config("SU(2)xSU(2)", "diag", ray({"0", "0"}, {"1", "0"}), 20);
  cfg["params"].erase("seed");
  EXPECT_EQ(run("check-admissible --config " + write_config("noseed.json", cfg)).code, 2);
  EXPECT_EQ(run("check-admissible --seed 4 --config " + write_config("noseed2.json", cfg) + " --out " + path("o.json")).code, 0);
  EXPECT_EQ(read_json("o.json")["config"]["params"]["seed"], 4);

  auto typo = cfg;
  typo["params"]["radious"] = 3;
  EXPECT_EQ(run("check-admissible --seed 1 --config " + write_config("typo.json", typo)).code, 2);
  auto negative = cfg;
  negative["params"]["radius"] = -1;
  EXPECT_EQ(run("check-admissible --seed 1 --config " + write_config("neg.json", negative)).code, 2);
  std::ofstream(dir_ / "broken.json") << "{ not json";
  EXPECT_EQ(run("check-admissible --config " + path("broken.json")).code, 2);
  EXPECT_EQ(run("check-admissible --config " + path("missing.json")).code, 2);
  auto shape = cfg;
  shape["subgroup"] = {{"group", "SU(2)"}, {"restriction", {{"1", "0", "0"}}}, {"mperp", json::array()}};
  EXPECT_EQ(run("check-admissible --seed 1 --config " + write_config("shape.json", shape)).code, 2);
}

TEST_F(Cli, FourierScan) {
  json cfg{{"group", "SU(2)"}, {"series", {{"source", "delta"}}}, {"params", {{"radius", 60}, {"seed", 1}}}};
  auto r = run("fourier-scan --config " + write_config("d.json", cfg) + " --out " + path("d.out.json") + " --csv " +
               path("d.csv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("classification: Distributional"), std::string::npos);
  io::validate_report(read_json("d.out.json"));

  cfg["series"] = {{"source", "smooth"}};
  r = run("fourier-scan --config " + write_config("s.json", cfg) + " --out " + path("s.out.json"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(read_json("s.out.json")["classification"]["kind"], "Smooth");

  json q{{"group", "SU(2)xSU(2)"},
         {"series", {{"source", "quadrature"}, {"function", {{"type", "character"}, {"weight", {"2", "1"}}}}}},
         {"params", {{"radius", 8}, {"seed", 1}, {"n_quad", 32}}}};
  r = run("fourier-scan --config " + write_config("q.json", q) + " --out " + path("q.out.json") + " --csv " + path("q.csv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(read_json("q.out.json")["series"]["entry_count"], 1);
  const auto csv = read_text("q.csv");
  ASSERT_EQ(csv.rfind("lambda_1,lambda_2,norm_lambda,value\n2,1,1.5811388300841898,", 0), 0u) << csv;
  EXPECT_NEAR(std::stod(csv.substr(csv.rfind(',') + 1)), 1.0, 1e-9);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);

  q["series"]["function"]["weight"] = {"30", "0"};
  q["params"]["n_quad"] = 8;
  q["params"]["radius"] = 30;
  EXPECT_EQ(run("fourier-scan --config " + write_config("qf.json", q)).code, 3);
}

TEST_F(Cli, CsvFormat) {
  json cfg{{"group", "SU(2)xU(1)"}, {"series", {{"source", "ray_decay"}, {"p", 1.5}}}, {"params", {{"radius", 6}, {"seed", 1}}}};
  ASSERT_EQ(run("fourier-scan --config " + write_config("c.json", cfg) + " --csv " + path("c.csv")).code, 0);
  std::istringstream in(read_text("c.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "lambda_1,lambda_2,norm_lambda,value");
  const std::regex row(R"(^(-?\d+(/\d+)?),(-?\d+(/\d+)?),([^,]+),([^,]+)$)");
  std::vector<Weight> keys;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::smatch m;
    ASSERT_TRUE(std::regex_match(line, m, row)) << line;
    keys.push_back(Weight{RVec{parse_rational(m[1].str()), parse_rational(m[3].str())}});
    const double value = std::stod(m[6].str());
    const double norm = std::stod(m[5].str());
    EXPECT_DOUBLE_EQ(value, std::pow(1 + norm, -1.5));
    ++rows;
  }
  EXPECT_GT(rows, 20u);
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
}

TEST_F(Cli, DeterministicReportsAndAtomicWrite) {
  const auto cfg = admissible_config("SU(2)xSU(2)xSU(2)", "diag", ray({"0", "0", "0"}, {"1", "0", "0"}), 16, 11);
  const auto c = write_config("det.json", cfg);
  ASSERT_EQ(run("check-admissible --config " + c + " --out " + path("a.json")).code, 0);
  ASSERT_EQ(run("check-admissible --config " + c + " --out " + path("b.json")).code, 0);
  auto strip = [&](const std::string& name) {
    const std::regex ts(R"("timestamp": "[^"]*")");
    return std::regex_replace(read_text(name), ts, "");
  };
  EXPECT_EQ(strip("a.json"), strip("b.json"));
  for (const auto& e : fs::directory_iterator(dir_))
    EXPECT_EQ(e.path().filename().string().find(".tmp."), std::string::npos) << e.path();
}

TEST(Io, ConfigRoundTrip) {
  const json j = json::parse(R"j({
    "group": "SU(2)xSU(2)",
    "subgroup": {"group": "SU(2)", "restriction": [["1", "0"]],
                 "mperp": [["0","0","0","1","0","0"], ["0","0","0","0","1","0"], ["0","0","0","0","0","1"]]},
    "support": {"components": [{"base": ["0", "0"], "generators": [["1", "0"], ["1", "1"]],
                                "multiplicity": [{"coef": 2, "exponents": [1, 0]}, {"coef": 1}]}]},
    "params": {"radius": 12, "seed": 3, "margin": 0.05}
  })j");
  const auto c = io::config_from_json(j);
  EXPECT_EQ(c.support->components[0].multiplicity({3, 1}), 7);
  const auto again = io::config_from_json(io::to_json(c));
  EXPECT_EQ(io::to_json(again), io::to_json(c));
  EXPECT_EQ(io::to_json(c)["subgroup"]["restriction"], j["subgroup"]["restriction"]);
  EXPECT_THROW(io::config_from_json(json::parse(R"j({"group": "SU(2)", "extra": 1})j")), Error);
  EXPECT_EQ(io::rational_from_json(json("3/6"), "x"), Rational(1, 2));
  EXPECT_EQ(io::to_json(Rational(-3, 6)), "-1/2");
}

TEST(Io, ReportValidationRejectsTampering) {
  auto k = io::root_system_of("SU(2)xSU(2)");
  auto [m, sub] = io::build_subgroup(k, io::SubgroupConfig{std::string("diag"), {}, {}, {}, {}});
  json rep = io::with_meta(io::to_json(io::make_branch_report(k, m, sub, Weight{2, 1})));
  EXPECT_NO_THROW(io::validate_report(rep));
  json missing = rep;
  missing.erase("dimension");
  EXPECT_THROW(io::validate_report(missing), Error);
  json wrong_type = rep;
  wrong_type["dimension_check"] = "yes";
  EXPECT_THROW(io::validate_report(wrong_type), Error);
  json no_meta = rep;
  no_meta.erase("meta");
  EXPECT_THROW(io::validate_report(no_meta), Error);
}
