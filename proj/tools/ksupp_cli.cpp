// ksupp command-line entry point.
//
//   ksupp branch --group G --subgroup PRESET --weight a,b,...
//   ksupp afsupp --config cfg.json [--out report.json] [--csv series.csv]
//   ksupp fourier-scan --config cfg.json [--out report.json] [--csv series.csv]
//   ksupp check-admissible --config cfg.json [--out report.json] [--seed N]
//
// Exit codes: 0 ok, 1 condition/containment failure, 2 input error,
// 3 insufficient data or quadrature failure, 4 inconclusive.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ksupp/io.hpp"

using namespace ksupp;
using io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitData = 3;

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::InsufficientData:
    case ErrorKind::QuadratureNotConverged: return kExitData;
    default: return kExitInput;
  }
}

struct Globals {
  std::string config_path;
  std::string out_path;
  std::string csv_path;
  std::optional<std::uint64_t> seed;
};

struct BranchArgs {
  std::string group;
  std::string subgroup;
  std::string weight;
};

io::Config load(const Globals& g, bool need_config = true) {
  io::Config c;
  if (!g.config_path.empty())
    c = io::load_config(g.config_path);
  else if (need_config)
    raise(ErrorKind::InvalidInput, "--config is required");
  if (g.seed) c.seed = g.seed;
  if (!g.config_path.empty() && !c.seed) raise(ErrorKind::InvalidInput, "params.seed is required (or pass --seed)");
  if (c.seed) c.params.seed = *c.seed;
  return c;
}

void emit(const Globals& g, const json& report) {
  const json full = io::with_meta(report);
  io::validate_report(full);
  const auto text = io::dump(full);
  if (g.out_path.empty())
    std::cout << text;
  else
    io::write_atomic(g.out_path, text);
}

void emit_csv(const Globals& g, const RootSystem& rs, const CoefficientSeries& s) {
  if (g.csv_path.empty()) return;
  std::ostringstream os;
  write_csv(os, rs, s);
  io::write_atomic(g.csv_path, os.str());
}

Weight parse_weight_list(const std::string& text) {
  RVec v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(parse_rational(item));
  if (v.empty()) raise(ErrorKind::InvalidInput, "empty --weight");
  return Weight(std::move(v));
}

int cmd_branch(const Globals& g, const BranchArgs& a) {
  io::Config c = load(g, false);
  if (!a.group.empty()) c.group = a.group;
  if (!a.subgroup.empty()) c.subgroup = io::SubgroupConfig{a.subgroup, {}, {}, {}, {}};
  if (!a.weight.empty()) c.weight = parse_weight_list(a.weight);
  if (c.group.empty()) raise(ErrorKind::InvalidInput, "branch needs --group");
  if (!c.weight) raise(ErrorKind::InvalidInput, "branch needs --weight");
  if (!c.subgroup) c.subgroup = io::SubgroupConfig{std::string("identity"), {}, {}, {}, {}};
  const auto rs_k = io::root_system_of(c.group);
  const auto [rs_m, sub] = io::build_subgroup(rs_k, *c.subgroup);
  const auto report = io::make_branch_report(rs_k, rs_m, sub, *c.weight);

  std::cout << "# " << report.group << " -> " << report.subgroup_group << " (" << report.subgroup << "), lambda = "
            << to_string(report.weight) << ", dim " << report.dimension << "\n";
  std::cout << std::left << std::setw(24) << "mu" << std::setw(14) << "multiplicity" << "dim\n";
  for (const auto& [mu, m, d] : report.components)
    std::cout << std::left << std::setw(24) << to_string(mu) << std::setw(14) << m << d << "\n";
  if (!g.out_path.empty() || !report.dimension_check) std::cout << "dimension check: " << (report.dimension_check ? "ok" : "FAILED") << "\n";
  emit(g, io::to_json(report));
  return kExitOk;
}

CoefficientSeries series_of(const io::Config& c, const RootSystem& rs) {
  if (!c.series) raise(ErrorKind::InvalidInput, "config needs a 'series'");
  return io::build_series(rs, *c.series, c.params.radius, c.n_quad);
}

int cmd_afsupp(const Globals& g) {
  const auto c = load(g);
  const auto rs = io::root_system_of(c.group);
  const auto series = series_of(c, rs);
  emit_csv(g, rs, series);
  const auto cone = estimate_afsupp(rs, series, c.params.opening, c.params.shells, c.params.q);
  std::cout << "afsupp: " << (cone.empty() ? "empty" : std::to_string(cone.sampled().directions.size()) + " directions")
            << " (" << series.entries.size() << " coefficients, radius " << c.params.radius << ")\n";
  emit(g, io::to_json(io::AfsuppReport{c, io::summarize(series), cone}));
  return kExitOk;
}

int cmd_fourier_scan(const Globals& g) {
  const auto c = load(g);
  const auto rs = io::root_system_of(c.group);
  const auto series = series_of(c, rs);
  emit_csv(g, rs, series);
  const auto cls = convergence_class(rs, series, c.params.q);
  std::cout << "classification: " << to_string(cls.kind) << "\n";
  switch (cls.kind) {
    case ConvergenceKind::Smooth: std::cout << "decay_rate: " << cls.decay_rate << "\n"; break;
    case ConvergenceKind::Distributional:
      std::cout << "growth_exponent: " << cls.growth_exponent << "\nmin_N: " << cls.min_N << "\n";
      break;
    case ConvergenceKind::Divergent: break;
  }
  std::cout << "entries: " << series.entries.size() << "\n";
  emit(g, io::to_json(io::FourierScanReport{c, io::summarize(series), cls}));
  return kExitOk;
}

int cmd_check_admissible(const Globals& g) {
  const auto c = load(g);
  if (!c.subgroup) raise(ErrorKind::InvalidInput, "config needs a 'subgroup'");
  if (!c.support) raise(ErrorKind::InvalidInput, "config needs a 'support'");
  const auto rs_k = io::root_system_of(c.group);
  const auto [rs_m, sub] = io::build_subgroup(rs_k, *c.subgroup);
  io::AdmissibilityDocument doc{c, run_pipeline(rs_k, rs_m, sub, *c.support, c.params)};
  const auto& r = doc.report;
  std::cout << "condition: " << to_string(r.condition.verdict.kind);
  if (std::isfinite(r.condition.verdict.min_angle)) std::cout << " (min angle " << r.condition.verdict.min_angle << ")";
  std::cout << "\nbounded_evidence: " << (r.poly_fit.bounded_evidence ? "true" : "false")
            << "\ncontainment: " << (r.as_m.containment.verified ? "Verified" : "Violated") << "\n";
  if (r.advisory) std::cout << "advisory: condition not certified, conclusions not claimed\n";
  emit(g, io::to_json(doc));
  return r.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ksupp: asymptotic K-support and admissibility of restrictions"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--out", g.out_path, "report path (stdout if omitted)");
  app.add_option("--csv", g.csv_path, "coefficient CSV path");
  auto* seed_opt = app.add_option("--seed", seed, "override params.seed");

  BranchArgs b;
  auto* branch_cmd = app.add_subcommand("branch", "branch one irreducible representation to a subgroup");
  branch_cmd->add_option("--group", b.group, "group descriptor, e.g. SU(2)xSU(2)");
  branch_cmd->add_option("--subgroup", b.subgroup, "preset: identity | diag | factor(i) | torus | su2xu1");
  branch_cmd->add_option("--weight", b.weight, "dominant weight, comma separated");
  auto* afsupp_cmd = app.add_subcommand("afsupp", "estimate the asymptotic Fourier support of a series");
  auto* scan_cmd = app.add_subcommand("fourier-scan", "coefficient CSV and convergence classification");
  auto* check_cmd = app.add_subcommand("check-admissible", "run the restriction pipeline");
  for (auto* s : {branch_cmd, afsupp_cmd, scan_cmd, check_cmd}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }
  if (seed_opt->count()) g.seed = seed;

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "branch") return cmd_branch(g, b);
    if (command == "afsupp") return cmd_afsupp(g);
    if (command == "fourier-scan") return cmd_fourier_scan(g);
    return cmd_check_admissible(g);
  } catch (const Error& e) {
    const int rc = exit_code_for(e.kind());
    std::cerr << "ksupp " << command << ": " << e.what() << "\n";
    if (!g.out_path.empty()) {
      try {
        io::write_atomic(g.out_path, io::dump(io::with_meta(io::error_report(command, e, rc))));
      } catch (const Error& w) {
        std::cerr << "ksupp: " << w.what() << "\n";
      }
    }
    return rc;
  } catch (const std::exception& e) {
    std::cerr << "ksupp " << command << ": " << e.what() << "\n";
    return kExitInput;
  }
}
