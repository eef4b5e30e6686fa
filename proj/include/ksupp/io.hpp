#pragma once

// JSON config and reports. Rationals are "p/q" strings; the only
// nondeterministic report field is meta.timestamp. Every report kind has a
// typed reader; validate_report re-reads a report and requires that writing
// it again reproduces the same document.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "ksupp/admissibility.hpp"

namespace ksupp::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Primitive readers

namespace detail {

[[noreturn]] inline void bad(const std::string& where, const std::string& what) {
  raise(ErrorKind::InvalidInput, where + ": " + what);
}

inline const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(where, std::string("missing field '") + key + "'");
  return *it;
}

inline const json* optional_field(const json& j, const char* key) {
  auto it = j.find(key);
  return (it == j.end() || it->is_null()) ? nullptr : &*it;
}

inline void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : keys) ok = ok || k == a;
    if (!ok) bad(where, "unknown field '" + k + "'");
  }
}

inline std::string str(const json& j, const std::string& where) {
  if (!j.is_string()) bad(where, "expected a string");
  return j.get<std::string>();
}

inline double num(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

/// Non-finite doubles are written as null; null reads back as `if_null`.
inline double num_or(const json& j, double if_null, const std::string& where) {
  return j.is_null() ? if_null : num(j, where);
}

inline json num_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::int64_t integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) bad(where, "expected an integer");
  return j.get<std::int64_t>();
}

inline std::uint64_t unsigned_integer(const json& j, const std::string& where) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
  bad(where, "expected a non-negative integer");
}

inline bool boolean(const json& j, const std::string& where) {
  if (!j.is_boolean()) bad(where, "expected a boolean");
  return j.get<bool>();
}

inline const json& array(const json& j, const std::string& where) {
  if (!j.is_array()) bad(where, "expected an array");
  return j;
}

}  // namespace detail

inline json to_json(const Rational& r) { return to_string(r); }

/// Accepts "p/q" strings and JSON integers.
inline Rational rational_from_json(const json& j, const std::string& where) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (!j.is_string()) detail::bad(where, "expected a rational \"p/q\"");
  return parse_rational(j.get<std::string>());
}

inline json to_json(const RVec& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(to_json(x));
  return a;
}

inline RVec rvec_from_json(const json& j, const std::string& where) {
  RVec v;
  for (const auto& x : detail::array(j, where)) v.push_back(rational_from_json(x, where));
  return v;
}

inline json to_json(const Weight& w) { return to_json(w.coords); }
inline Weight weight_from_json(const json& j, const std::string& where) { return Weight(rvec_from_json(j, where)); }

inline json to_json(const RMat& m) {
  json a = json::array();
  for (std::size_t i = 0; i < m.rows; ++i) a.push_back(to_json(m.row(i)));
  return a;
}

inline RMat rmat_from_json(const json& j, const std::string& where) {
  const auto& rows = detail::array(j, where);
  if (rows.empty()) detail::bad(where, "empty matrix");
  RMat m(rows.size(), detail::array(rows[0], where).size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rvec_from_json(rows[i], where);
    if (r.size() != m.cols) raise(ErrorKind::ShapeMismatch, where + ": ragged matrix rows");
    for (std::size_t c = 0; c < m.cols; ++c) m(i, c) = r[c];
  }
  return m;
}

inline json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Eigen::VectorXd vector_from_json(const json& j, const std::string& where) {
  const auto& a = detail::array(j, where);
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = detail::num(a[i], where);
  return v;
}

// ---------------------------------------------------------------------------
// Support specs

inline json to_json(const SupportSpec& s) {
  json comps = json::array();
  for (const auto& c : s.components) {
    json gens = json::array();
    for (const auto& g : c.generators) gens.push_back(to_json(g));
    json terms = json::array();
    for (const auto& t : c.multiplicity.terms) terms.push_back({{"coef", t.coef}, {"exponents", t.exponents}});
    comps.push_back({{"base", to_json(c.base)}, {"generators", gens}, {"multiplicity", terms}});
  }
  return {{"components", comps}};
}

/// "multiplicity" may be an integer constant or a list of {coef, exponents}.
inline SupportSpec support_from_json(const json& j) {
  const std::string where = "support";
  detail::only_keys(j, {"components"}, where);
  SupportSpec s;
  for (const auto& c : detail::array(detail::field(j, "components", where), where + ".components")) {
    const std::string cw = where + ".components[]";
    detail::only_keys(c, {"base", "generators", "multiplicity"}, cw);
    SupportComponent comp;
    comp.base = weight_from_json(detail::field(c, "base", cw), cw + ".base");
    if (const auto* g = detail::optional_field(c, "generators"))
      for (const auto& x : detail::array(*g, cw + ".generators")) comp.generators.push_back(weight_from_json(x, cw));
    if (const auto* m = detail::optional_field(c, "multiplicity")) {
      if (m->is_number_integer()) {
        comp.multiplicity = MultiplicityPolynomial::constant(m->get<std::int64_t>());
      } else {
        comp.multiplicity.terms.clear();
        for (const auto& t : detail::array(*m, cw + ".multiplicity")) {
          detail::only_keys(t, {"coef", "exponents"}, cw + ".multiplicity[]");
          Monomial mono;
          mono.coef = detail::integer(detail::field(t, "coef", cw), cw + ".multiplicity.coef");
          if (const auto* e = detail::optional_field(t, "exponents"))
            for (const auto& x : detail::array(*e, cw)) {
              const auto v = detail::integer(x, cw + ".multiplicity.exponents");
              if (v < 0) detail::bad(cw, "negative exponent");
              mono.exponents.push_back(static_cast<int>(v));
            }
          comp.multiplicity.terms.push_back(std::move(mono));
        }
      }
    }
    s.components.push_back(std::move(comp));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Cones

inline json to_json(const Cone& c) {
  if (c.is_exact()) {
    json comps = json::array();
    for (const auto& comp : c.exact().components) {
      json gens = json::array();
      for (const auto& g : comp) gens.push_back(to_json(g));
      comps.push_back(gens);
    }
    return {{"type", "exact"}, {"components", comps}};
  }
  const auto& s = c.sampled();
  json dirs = json::array(), dropped = json::array();
  for (const auto& d : s.directions) dirs.push_back(to_json(d));
  for (const auto& d : s.dropped) dropped.push_back(to_json(d));
  return {{"type", "sampled"},
          {"directions", dirs},
          {"tolerance", s.tolerance},
          {"sample_count", s.sample_count},
          {"seed", s.seed ? json(*s.seed) : json(nullptr)},
          {"dropped", dropped}};
}

inline Cone cone_from_json(const json& j, const Metric& metric, const std::string& where) {
  const auto type = detail::str(detail::field(j, "type", where), where + ".type");
  if (type == "exact") {
    detail::only_keys(j, {"type", "components"}, where);
    std::vector<std::vector<RVec>> comps;
    for (const auto& comp : detail::array(detail::field(j, "components", where), where)) {
      std::vector<RVec> gens;
      for (const auto& g : detail::array(comp, where)) gens.push_back(rvec_from_json(g, where));
      comps.push_back(std::move(gens));
    }
    return make_exact(metric, std::move(comps));
  }
  if (type != "sampled") detail::bad(where, "unknown cone type '" + type + "'");
  detail::only_keys(j, {"type", "directions", "tolerance", "sample_count", "seed", "dropped"}, where);
  // Directions are stored normalized; keep them verbatim so a re-write is byte-identical.
  Cone c = make_sampled(metric, {}, detail::num(detail::field(j, "tolerance", where), where + ".tolerance"),
                        detail::unsigned_integer(detail::field(j, "sample_count", where), where + ".sample_count"));
  for (const auto& d : detail::array(detail::field(j, "directions", where), where))
    c.sampled().directions.push_back(vector_from_json(d, where));
  for (const auto& d : detail::array(detail::field(j, "dropped", where), where))
    c.sampled().dropped.push_back(vector_from_json(d, where));
  if (const auto* s = detail::optional_field(j, "seed")) c.sampled().seed = detail::unsigned_integer(*s, where + ".seed");
  for (const auto& d : c.sampled().directions)
    if (d.size() != metric.dim()) raise(ErrorKind::ShapeMismatch, where + ": direction has the wrong dimension");
  return c;
}

// ---------------------------------------------------------------------------
// Config

struct SubgroupConfig {
  std::optional<std::string> preset;
  std::string group;  // explicit form only
  std::optional<RMat> restriction;
  std::vector<RVec> mperp;
  std::optional<RMat> algebra_map;
};

struct QuadratureFunction {
  std::string type;  // character | truncated_delta
  Weight weight;     // character
  double radius = 0; // truncated_delta
};

struct SeriesConfig {
  std::string source;  // delta | delta_S | smooth | exp_growth | ray_decay | planted_cone | quadrature
  double p = 0;
  std::vector<std::vector<RVec>> cone;  // delta_S, planted_cone
  std::optional<QuadratureFunction> function;
};

struct Config {
  std::string group;
  std::optional<SubgroupConfig> subgroup;
  std::optional<SupportSpec> support;
  std::optional<SeriesConfig> series;
  std::optional<Weight> weight;
  PipelineParams params;
  std::size_t n_quad = 256;
  std::optional<std::uint64_t> seed;
};

inline json to_json(const SubgroupConfig& s) {
  if (s.preset) return *s.preset;
  json j{{"group", s.group}};
  if (s.restriction) j["restriction"] = to_json(*s.restriction);
  json mp = json::array();
  for (const auto& v : s.mperp) mp.push_back(to_json(v));
  j["mperp"] = mp;
  if (s.algebra_map) j["algebra_map"] = to_json(*s.algebra_map);
  return j;
}

inline SubgroupConfig subgroup_from_json(const json& j) {
  SubgroupConfig s;
  if (j.is_string()) {
    s.preset = j.get<std::string>();
    return s;
  }
  const std::string where = "subgroup";
  detail::only_keys(j, {"group", "restriction", "mperp", "algebra_map"}, where);
  s.group = detail::str(detail::field(j, "group", where), where + ".group");
  if (const auto* r = detail::optional_field(j, "restriction")) s.restriction = rmat_from_json(*r, where + ".restriction");
  if (const auto* m = detail::optional_field(j, "mperp"))
    for (const auto& v : detail::array(*m, where + ".mperp")) s.mperp.push_back(rvec_from_json(v, where + ".mperp"));
  if (const auto* a = detail::optional_field(j, "algebra_map")) s.algebra_map = rmat_from_json(*a, where + ".algebra_map");
  if (!s.algebra_map && !s.restriction) detail::bad(where, "explicit subgroup needs 'restriction' and 'mperp', or 'algebra_map'");
  return s;
}

inline json to_json(const SeriesConfig& s) {
  json j{{"source", s.source}};
  if (s.source == "ray_decay" || s.source == "planted_cone") j["p"] = s.p;
  if (s.source == "delta_S" || s.source == "planted_cone") {
    json comps = json::array();
    for (const auto& comp : s.cone) {
      json gens = json::array();
      for (const auto& g : comp) gens.push_back(to_json(g));
      comps.push_back(gens);
    }
    j["cone"] = comps;
  }
  if (s.function) {
    json f{{"type", s.function->type}};
    if (s.function->type == "character") f["weight"] = to_json(s.function->weight);
    if (s.function->type == "truncated_delta") f["radius"] = s.function->radius;
    j["function"] = f;
  }
  return j;
}

inline SeriesConfig series_from_json(const json& j) {
  const std::string where = "series";
  detail::only_keys(j, {"source", "p", "cone", "function"}, where);
  SeriesConfig s;
  s.source = detail::str(detail::field(j, "source", where), where + ".source");
  static const std::set<std::string> sources{"delta",     "delta_S",      "smooth",    "exp_growth",
                                             "ray_decay", "planted_cone", "quadrature"};
  if (!sources.count(s.source)) detail::bad(where, "unknown source '" + s.source + "'");
  if (const auto* p = detail::optional_field(j, "p")) s.p = detail::num(*p, where + ".p");
  if (const auto* c = detail::optional_field(j, "cone"))
    for (const auto& comp : detail::array(*c, where + ".cone")) {
      std::vector<RVec> gens;
      for (const auto& g : detail::array(comp, where + ".cone")) gens.push_back(rvec_from_json(g, where + ".cone"));
      s.cone.push_back(std::move(gens));
    }
  if ((s.source == "delta_S" || s.source == "planted_cone") && s.cone.empty())
    detail::bad(where, s.source + " needs a 'cone'");
  if (const auto* f = detail::optional_field(j, "function")) {
    const std::string fw = where + ".function";
    detail::only_keys(*f, {"type", "weight", "radius"}, fw);
    QuadratureFunction qf;
    qf.type = detail::str(detail::field(*f, "type", fw), fw + ".type");
    if (qf.type == "character")
      qf.weight = weight_from_json(detail::field(*f, "weight", fw), fw + ".weight");
    else if (qf.type == "truncated_delta")
      qf.radius = detail::num(detail::field(*f, "radius", fw), fw + ".radius");
    else
      detail::bad(fw, "unknown function type '" + qf.type + "'");
    s.function = qf;
  }
  if (s.source == "quadrature" && !s.function) detail::bad(where, "quadrature needs a 'function'");
  return s;
}

inline json params_to_json(const Config& c) {
  const auto& p = c.params;
  json j{{"radius", p.radius},       {"n_samples", p.n_samples}, {"margin", p.margin},
         {"tolerance", p.tolerance}, {"opening", p.opening},     {"q", p.q},
         {"shells", p.shells},       {"threshold", p.threshold}, {"band_fraction", p.band_fraction},
         {"n_quad", c.n_quad}};
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  return j;
}

inline void params_from_json(const json& j, Config& c) {
  const std::string where = "params";
  detail::only_keys(j, {"radius", "n_samples", "seed", "margin", "tolerance", "opening", "q", "shells", "threshold",
                        "band_fraction", "n_quad"},
                    where);
  auto& p = c.params;
  auto positive = [&](const char* key, double& dst) {
    if (const auto* v = detail::optional_field(j, key)) {
      dst = detail::num(*v, where + "." + key);
      if (!(dst > 0)) detail::bad(where, std::string(key) + " must be positive");
    }
  };
  auto count = [&](const char* key, std::size_t& dst) {
    if (const auto* v = detail::optional_field(j, key)) {
      dst = detail::unsigned_integer(*v, where + "." + key);
      if (dst == 0) detail::bad(where, std::string(key) + " must be positive");
    }
  };
  positive("radius", p.radius);
  positive("margin", p.margin);
  positive("tolerance", p.tolerance);
  positive("opening", p.opening);
  positive("q", p.q);
  positive("band_fraction", p.band_fraction);
  count("n_samples", p.n_samples);
  count("shells", p.shells);
  count("threshold", p.threshold);
  count("n_quad", c.n_quad);
  if (const auto* s = detail::optional_field(j, "seed")) c.seed = detail::unsigned_integer(*s, where + ".seed");
}

inline json to_json(const Config& c) {
  json j{{"group", c.group}, {"params", params_to_json(c)}};
  if (c.subgroup) j["subgroup"] = to_json(*c.subgroup);
  if (c.support) j["support"] = to_json(*c.support);
  if (c.series) j["series"] = to_json(*c.series);
  if (c.weight) j["weight"] = to_json(*c.weight);
  return j;
}

inline Config config_from_json(const json& j) {
  detail::only_keys(j, {"group", "subgroup", "support", "series", "weight", "params"}, "config");
  Config c;
  c.group = detail::str(detail::field(j, "group", "config"), "config.group");
  if (const auto* s = detail::optional_field(j, "subgroup")) c.subgroup = subgroup_from_json(*s);
  if (const auto* s = detail::optional_field(j, "support")) c.support = support_from_json(*s);
  if (const auto* s = detail::optional_field(j, "series")) c.series = series_from_json(*s);
  if (const auto* w = detail::optional_field(j, "weight")) c.weight = weight_from_json(*w, "config.weight");
  if (const auto* p = detail::optional_field(j, "params")) params_from_json(*p, c);
  return c;
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    raise(ErrorKind::InvalidInput, origin + ": " + e.what());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::InvalidInput, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Config load_config(const std::filesystem::path& path) {
  return config_from_json(parse_json_text(read_file(path), path.string()));
}

inline RootSystem root_system_of(const std::string& group) { return build_root_system(GroupDescriptor::parse(group)); }

struct BuiltSubgroup {
  RootSystem m;
  Subgroup sub;
};

inline BuiltSubgroup build_subgroup(const RootSystem& rs_k, const SubgroupConfig& s) {
  if (s.preset) {
    auto m = build_root_system(subgroup_group(rs_k.descriptor, *s.preset));
    auto sub = preset_subgroup(rs_k, m, *s.preset);
    return {std::move(m), std::move(sub)};
  }
  auto m = root_system_of(s.group);
  const auto dk = static_cast<std::size_t>(rs_k.descriptor.algebra_dim());
  if (s.algebra_map) {
    auto sub = make_subgroup(rs_k, m, *s.algebra_map, "explicit");
    if (s.restriction && !(*s.restriction == sub.torus.matrix))
      raise(ErrorKind::InvalidInput, "subgroup.restriction disagrees with the one induced by algebra_map");
    if (!s.mperp.empty() && s.mperp != sub.mperp)
      raise(ErrorKind::InvalidInput, "subgroup.mperp disagrees with the conormal space of algebra_map");
    return {std::move(m), std::move(sub)};
  }
  if (s.restriction->rows != m.rank() || s.restriction->cols != rs_k.rank())
    raise(ErrorKind::ShapeMismatch, "subgroup.restriction must be rank(M) x rank(K)");
  for (const auto& v : s.mperp)
    if (v.size() != dk) raise(ErrorKind::ShapeMismatch, "subgroup.mperp vectors must have length dim(k)");
  Subgroup sub;
  sub.label = "explicit";
  sub.torus = {*s.restriction, rs_k.descriptor, m.descriptor};
  sub.mperp = s.mperp;
  return {std::move(m), std::move(sub)};
}

/// Coefficient series named by a config: synthetic rules, delta series, or
/// quadrature of a class function.
inline CoefficientSeries build_series(const RootSystem& rs, const SeriesConfig& s, double radius, std::size_t n_quad) {
  const Metric metric(rs);
  if (s.source == "delta") return series_delta(rs, radius);
  if (s.source == "delta_S") return series_delta_S(rs, radius, make_exact(metric, s.cone));
  if (s.source == "quadrature") {
    const auto& f = *s.function;
    if (f.type == "character") return series_quadrature_class_function(rs, character_function(rs, f.weight), radius, n_quad);
    // truncated_delta: sum of d_lambda chi_lambda over |lambda| <= f.radius.
    WeightMultiset sum;
    for (const auto& w : dominant_weights_up_to(rs, f.radius)) {
      const auto d = static_cast<std::int64_t>(dimension(rs, w));
      for (const auto& [mu, m] : weight_multiplicities(rs, w)) sum[mu] += d * m;
    }
    return series_quadrature_class_function(
        rs, [&rs, sum](std::span<const double> t) { return character_eval(rs, sum, t); }, radius, n_quad);
  }
  SyntheticSpec spec;
  spec.p = s.p;
  if (s.source == "smooth")
    spec.rule = SyntheticRule::Smooth;
  else if (s.source == "exp_growth")
    spec.rule = SyntheticRule::ExpGrowth;
  else if (s.source == "ray_decay")
    spec.rule = SyntheticRule::RayDecay;
  else {
    spec.rule = SyntheticRule::PlantedCone;
    spec.cone = make_exact(metric, s.cone);
  }
  return series_synthetic(rs, radius, spec);
}

// ---------------------------------------------------------------------------
// Reports

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json meta_json() { return {{"tool", "ksupp"}, {"format_version", 1}, {"timestamp", utc_timestamp()}}; }

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// Writes `text` to a sibling temp file, then renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::InvalidInput, "cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) raise(ErrorKind::InvalidInput, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    raise(ErrorKind::InvalidInput, "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

// branch -------------------------------------------------------------------

struct BranchReport {
  std::string group;
  std::string subgroup;
  std::string subgroup_group;
  Weight weight;
  std::uint64_t dimension = 0;
  std::vector<std::tuple<Weight, std::int64_t, std::uint64_t>> components;  // mu, multiplicity, dim_M(mu)
  bool dimension_check = false;
};

inline BranchReport make_branch_report(const RootSystem& rs_k, const RootSystem& rs_m, const Subgroup& sub,
                                       const Weight& lambda) {
  BranchReport r{rs_k.descriptor.canonical(), sub.label, rs_m.descriptor.canonical(), lambda, dimension(rs_k, lambda), {}, false};
  std::uint64_t total = 0;
  for (const auto& [mu, m] : branch(rs_k, rs_m, sub.torus, lambda)) {
    const auto d = dimension(rs_m, mu);
    r.components.emplace_back(mu, m, d);
    total += static_cast<std::uint64_t>(m) * d;
  }
  r.dimension_check = total == r.dimension;
  return r;
}

inline json to_json(const BranchReport& r) {
  json comps = json::array();
  for (const auto& [mu, m, d] : r.components) comps.push_back({{"mu", to_json(mu)}, {"multiplicity", m}, {"dimension", d}});
  return {{"kind", "branch_report"},  {"group", r.group},         {"subgroup", r.subgroup},
          {"subgroup_group", r.subgroup_group}, {"weight", to_json(r.weight)}, {"dimension", r.dimension},
          {"components", comps},      {"dimension_check", r.dimension_check}};
}

inline BranchReport branch_report_from_json(const json& j) {
  const std::string w = "branch_report";
  detail::only_keys(j, {"kind", "meta", "group", "subgroup", "subgroup_group", "weight", "dimension", "components",
                        "dimension_check"},
                    w);
  BranchReport r;
  r.group = detail::str(detail::field(j, "group", w), w);
  r.subgroup = detail::str(detail::field(j, "subgroup", w), w);
  r.subgroup_group = detail::str(detail::field(j, "subgroup_group", w), w);
  r.weight = weight_from_json(detail::field(j, "weight", w), w + ".weight");
  r.dimension = detail::unsigned_integer(detail::field(j, "dimension", w), w + ".dimension");
  for (const auto& c : detail::array(detail::field(j, "components", w), w)) {
    detail::only_keys(c, {"mu", "multiplicity", "dimension"}, w + ".components[]");
    r.components.emplace_back(weight_from_json(detail::field(c, "mu", w), w),
                              detail::integer(detail::field(c, "multiplicity", w), w),
                              detail::unsigned_integer(detail::field(c, "dimension", w), w));
  }
  r.dimension_check = detail::boolean(detail::field(j, "dimension_check", w), w);
  return r;
}

// series summaries (afsupp, fourier-scan) ----------------------------------

inline json to_json(const Provenance& p) {
  json params = json::object();
  for (const auto& [k, v] : p.params) params[k] = detail::num_json(v);
  return {{"kind", p.kind == ProvenanceKind::Synthetic ? "synthetic" : "quadrature"}, {"rule", p.rule}, {"params", params}};
}

inline Provenance provenance_from_json(const json& j) {
  const std::string w = "provenance";
  detail::only_keys(j, {"kind", "rule", "params"}, w);
  Provenance p;
  const auto kind = detail::str(detail::field(j, "kind", w), w);
  if (kind != "synthetic" && kind != "quadrature") detail::bad(w, "unknown kind '" + kind + "'");
  p.kind = kind == "synthetic" ? ProvenanceKind::Synthetic : ProvenanceKind::Quadrature;
  p.rule = detail::str(detail::field(j, "rule", w), w);
  for (const auto& [k, v] : detail::field(j, "params", w).items())
    p.params[k] = detail::num_or(v, std::numeric_limits<double>::quiet_NaN(), w);
  return p;
}

struct SeriesSummary {
  std::string group;
  double radius = 0;
  std::size_t entry_count = 0;
  Provenance provenance;
};

inline SeriesSummary summarize(const CoefficientSeries& s) {
  return {s.group.canonical(), s.radius, s.entries.size(), s.provenance};
}

inline json to_json(const SeriesSummary& s) {
  return {{"group", s.group}, {"radius", s.radius}, {"entry_count", s.entry_count}, {"provenance", to_json(s.provenance)}};
}

inline SeriesSummary series_summary_from_json(const json& j) {
  const std::string w = "series";
  detail::only_keys(j, {"group", "radius", "entry_count", "provenance"}, w);
  return {detail::str(detail::field(j, "group", w), w), detail::num(detail::field(j, "radius", w), w),
          detail::unsigned_integer(detail::field(j, "entry_count", w), w),
          provenance_from_json(detail::field(j, "provenance", w))};
}

struct AfsuppReport {
  Config config;
  SeriesSummary series;
  Cone afsupp;
};

inline json to_json(const AfsuppReport& r) {
  return {{"kind", "afsupp_report"}, {"config", to_json(r.config)}, {"series", to_json(r.series)}, {"afsupp", to_json(r.afsupp)}};
}

inline AfsuppReport afsupp_report_from_json(const json& j) {
  const std::string w = "afsupp_report";
  detail::only_keys(j, {"kind", "meta", "config", "series", "afsupp"}, w);
  AfsuppReport r;
  r.config = config_from_json(detail::field(j, "config", w));
  r.series = series_summary_from_json(detail::field(j, "series", w));
  r.afsupp = cone_from_json(detail::field(j, "afsupp", w), Metric(root_system_of(r.config.group)), w + ".afsupp");
  return r;
}

inline json to_json(const std::vector<ShellStat>& shells) {
  json a = json::array();
  for (const auto& s : shells) a.push_back({{"k", s.k}, {"r", s.r}, {"max", s.max}, {"count", s.count}});
  return a;
}

inline std::vector<ShellStat> shells_from_json(const json& j, const std::string& w) {
  std::vector<ShellStat> out;
  for (const auto& s : detail::array(j, w)) {
    detail::only_keys(s, {"k", "r", "max", "count"}, w + "[]");
    ShellStat st;
    st.k = static_cast<int>(detail::integer(detail::field(s, "k", w), w));
    st.r = detail::num(detail::field(s, "r", w), w);
    st.max = detail::num(detail::field(s, "max", w), w);
    st.count = detail::unsigned_integer(detail::field(s, "count", w), w);
    out.push_back(st);
  }
  return out;
}

inline json to_json(const ConvergenceClass& c) {
  json slopes = json::array();
  for (double s : c.diagnostics.slopes) slopes.push_back(detail::num_json(s));
  return {{"kind", to_string(c.kind)},
          {"decay_rate", detail::num_json(c.decay_rate)},
          {"growth_exponent", detail::num_json(c.growth_exponent)},
          {"min_N", c.min_N},
          {"diagnostics",
           {{"shells", to_json(c.diagnostics.shells)},
            {"slopes", slopes},
            {"fit_slope", detail::num_json(c.diagnostics.fit_slope)},
            {"residual", detail::num_json(c.diagnostics.residual)},
            {"q", c.diagnostics.q}}}};
}

inline ConvergenceClass convergence_from_json(const json& j) {
  const std::string w = "classification";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  detail::only_keys(j, {"kind", "decay_rate", "growth_exponent", "min_N", "diagnostics"}, w);
  ConvergenceClass c;
  const auto kind = detail::str(detail::field(j, "kind", w), w);
  if (kind == to_string(ConvergenceKind::Smooth))
    c.kind = ConvergenceKind::Smooth;
  else if (kind == to_string(ConvergenceKind::Distributional))
    c.kind = ConvergenceKind::Distributional;
  else if (kind == to_string(ConvergenceKind::Divergent))
    c.kind = ConvergenceKind::Divergent;
  else
    detail::bad(w, "unknown kind '" + kind + "'");
  c.decay_rate = detail::num_or(detail::field(j, "decay_rate", w), nan, w);
  c.growth_exponent = detail::num_or(detail::field(j, "growth_exponent", w), nan, w);
  c.min_N = static_cast<int>(detail::integer(detail::field(j, "min_N", w), w));
  const auto& d = detail::field(j, "diagnostics", w);
  detail::only_keys(d, {"shells", "slopes", "fit_slope", "residual", "q"}, w + ".diagnostics");
  c.diagnostics.shells = shells_from_json(detail::field(d, "shells", w), w + ".diagnostics.shells");
  for (const auto& s : detail::array(detail::field(d, "slopes", w), w)) c.diagnostics.slopes.push_back(detail::num_or(s, nan, w));
  c.diagnostics.fit_slope = detail::num_or(detail::field(d, "fit_slope", w), nan, w);
  c.diagnostics.residual = detail::num_or(detail::field(d, "residual", w), nan, w);
  c.diagnostics.q = detail::num(detail::field(d, "q", w), w);
  return c;
}

struct FourierScanReport {
  Config config;
  SeriesSummary series;
  ConvergenceClass classification;
};

inline json to_json(const FourierScanReport& r) {
  return {{"kind", "fourier_scan_report"},
          {"config", to_json(r.config)},
          {"series", to_json(r.series)},
          {"classification", to_json(r.classification)}};
}

inline FourierScanReport fourier_scan_report_from_json(const json& j) {
  const std::string w = "fourier_scan_report";
  detail::only_keys(j, {"kind", "meta", "config", "series", "classification"}, w);
  return {config_from_json(detail::field(j, "config", w)), series_summary_from_json(detail::field(j, "series", w)),
          convergence_from_json(detail::field(j, "classification", w))};
}

// check-admissible ---------------------------------------------------------

struct AdmissibilityDocument {
  Config config;
  AdmissibilityReport report;
};

inline json to_json(const AdmissibilityDocument& doc) {
  const auto& r = doc.report;
  const auto& v = r.condition.verdict;
  const auto& chk = r.condition.as_k.check;
  json witness = nullptr;
  if (v.witness) witness = {{"as_k", to_json(v.witness->first)}, {"orbit", to_json(v.witness->second)}};

  json entries = json::array();
  for (const auto& [mu, e] : r.spectrum.entries)
    entries.push_back({{"mu", to_json(mu)},
                       {"multiplicity", e.multiplicity},
                       {"inner_multiplicity", e.inner_multiplicity},
                       {"complete", e.complete}});
  json growing = json::array();
  for (const auto& mu : r.spectrum.growing()) growing.push_back(to_json(mu));

  const auto& c = r.as_m.containment;
  return {
      {"kind", "admissibility_report"},
      {"config", to_json(doc.config)},
      {"group", r.group},
      {"subgroup", r.subgroup},
      {"subgroup_group", r.subgroup_group},
      {"as_k", to_json(r.condition.as_k.cone)},
      {"as_k_crosscheck",
       {{"performed", chk.performed},
        {"note", chk.note},
        {"exact_to_estimate", detail::num_json(chk.exact_to_estimate)},
        {"estimate_to_exact", detail::num_json(chk.estimate_to_exact)},
        {"agrees", chk.agrees}}},
      {"orbit", to_json(r.condition.orbit)},
      {"condition",
       {{"verdict", to_string(v.kind)},
        {"min_angle", detail::num_json(v.min_angle)},
        {"margin", v.margin},
        {"tolerance", v.tolerance},
        {"witness", witness},
        {"reason", v.reason}}},
      {"restricted_multiplicities",
       {{"radius", r.spectrum.radius},
        {"band", r.spectrum.band},
        {"op_norm", r.spectrum.op_norm},
        {"criterion", completeness_criterion()},
        {"lambda_count", r.spectrum.lambda_count},
        {"entries", entries},
        {"growing", growing}}},
      {"poly_fit",
       {{"status", to_string(r.poly_fit.status)},
        {"bounded_evidence", r.poly_fit.bounded_evidence},
        {"degree", detail::num_json(r.poly_fit.degree)},
        {"degree_without_outer", detail::num_json(r.poly_fit.degree_without_outer)},
        {"residual", detail::num_json(r.poly_fit.residual)},
        {"shells", to_json(r.poly_fit.shells)},
        {"note", r.poly_fit.note}}},
      {"as_m", to_json(r.as_m.as_m)},
      {"target", to_json(r.as_m.target)},
      {"containment",
       {{"verdict", c.verified ? "Verified" : "Violated"},
        {"max_excess", detail::num_json(c.max_excess)},
        {"threshold", c.threshold},
        {"witness", c.witness ? to_json(*c.witness) : json(nullptr)},
        {"note", c.note}}},
      {"advisory", r.advisory},
      {"exit_code", r.exit_code()},
  };
}

inline AdmissibilityDocument admissibility_report_from_json(const json& j) {
  const std::string w = "admissibility_report";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  detail::only_keys(j, {"kind", "meta", "config", "group", "subgroup", "subgroup_group", "as_k", "as_k_crosscheck", "orbit",
                        "condition", "restricted_multiplicities", "poly_fit", "as_m", "target", "containment", "advisory",
                        "exit_code"},
                    w);
  AdmissibilityDocument doc;
  doc.config = config_from_json(detail::field(j, "config", w));
  auto& r = doc.report;
  r.group = detail::str(detail::field(j, "group", w), w);
  r.subgroup = detail::str(detail::field(j, "subgroup", w), w);
  r.subgroup_group = detail::str(detail::field(j, "subgroup_group", w), w);
  const Metric mk(root_system_of(r.group));
  const Metric mm(root_system_of(r.subgroup_group));
  r.condition.as_k.cone = cone_from_json(detail::field(j, "as_k", w), mk, w + ".as_k");
  r.condition.orbit = cone_from_json(detail::field(j, "orbit", w), mk, w + ".orbit");

  const auto& xc = detail::field(j, "as_k_crosscheck", w);
  detail::only_keys(xc, {"performed", "note", "exact_to_estimate", "estimate_to_exact", "agrees"}, w + ".as_k_crosscheck");
  auto& chk = r.condition.as_k.check;
  chk.performed = detail::boolean(detail::field(xc, "performed", w), w);
  chk.note = detail::str(detail::field(xc, "note", w), w);
  chk.exact_to_estimate = detail::num_or(detail::field(xc, "exact_to_estimate", w), nan, w);
  chk.estimate_to_exact = detail::num_or(detail::field(xc, "estimate_to_exact", w), nan, w);
  chk.agrees = detail::boolean(detail::field(xc, "agrees", w), w);

  const auto& cj = detail::field(j, "condition", w);
  detail::only_keys(cj, {"verdict", "min_angle", "margin", "tolerance", "witness", "reason"}, w + ".condition");
  auto& v = r.condition.verdict;
  const auto verdict = detail::str(detail::field(cj, "verdict", w), w);
  if (verdict == "Certified")
    v.kind = ConditionKind::Certified;
  else if (verdict == "Failed")
    v.kind = ConditionKind::Failed;
  else if (verdict == "Inconclusive")
    v.kind = ConditionKind::Inconclusive;
  else
    detail::bad(w, "unknown condition verdict '" + verdict + "'");
  v.min_angle = detail::num_or(detail::field(cj, "min_angle", w), inf, w);
  v.margin = detail::num(detail::field(cj, "margin", w), w);
  v.tolerance = detail::num(detail::field(cj, "tolerance", w), w);
  if (const auto* wt = detail::optional_field(cj, "witness"))
    v.witness = std::make_pair(vector_from_json(detail::field(*wt, "as_k", w), w), vector_from_json(detail::field(*wt, "orbit", w), w));
  v.reason = detail::str(detail::field(cj, "reason", w), w);

  const auto& sj = detail::field(j, "restricted_multiplicities", w);
  detail::only_keys(sj, {"radius", "band", "op_norm", "criterion", "lambda_count", "entries", "growing"},
                    w + ".restricted_multiplicities");
  r.spectrum.radius = detail::num(detail::field(sj, "radius", w), w);
  r.spectrum.band = detail::num(detail::field(sj, "band", w), w);
  r.spectrum.op_norm = detail::num(detail::field(sj, "op_norm", w), w);
  if (detail::str(detail::field(sj, "criterion", w), w) != completeness_criterion()) detail::bad(w, "unknown completeness criterion");
  r.spectrum.lambda_count = detail::unsigned_integer(detail::field(sj, "lambda_count", w), w);
  for (const auto& e : detail::array(detail::field(sj, "entries", w), w)) {
    detail::only_keys(e, {"mu", "multiplicity", "inner_multiplicity", "complete"}, w + ".entries[]");
    SpectrumEntry se;
    se.multiplicity = detail::integer(detail::field(e, "multiplicity", w), w);
    se.inner_multiplicity = detail::integer(detail::field(e, "inner_multiplicity", w), w);
    se.complete = detail::boolean(detail::field(e, "complete", w), w);
    r.spectrum.entries.emplace(weight_from_json(detail::field(e, "mu", w), w), se);
  }
  std::vector<Weight> growing;
  for (const auto& g : detail::array(detail::field(sj, "growing", w), w)) growing.push_back(weight_from_json(g, w));
  if (growing != r.spectrum.growing()) detail::bad(w, "'growing' is inconsistent with the entries");

  const auto& pj = detail::field(j, "poly_fit", w);
  detail::only_keys(pj, {"status", "bounded_evidence", "degree", "degree_without_outer", "residual", "shells", "note"},
                    w + ".poly_fit");
  const auto status = detail::str(detail::field(pj, "status", w), w);
  if (status == "fitted")
    r.poly_fit.status = FitStatus::Fitted;
  else if (status == "vacuous")
    r.poly_fit.status = FitStatus::Vacuous;
  else if (status == "insufficient")
    r.poly_fit.status = FitStatus::Insufficient;
  else
    detail::bad(w, "unknown poly_fit status '" + status + "'");
  r.poly_fit.bounded_evidence = detail::boolean(detail::field(pj, "bounded_evidence", w), w);
  r.poly_fit.degree = detail::num_or(detail::field(pj, "degree", w), nan, w);
  r.poly_fit.degree_without_outer = detail::num_or(detail::field(pj, "degree_without_outer", w), nan, w);
  r.poly_fit.residual = detail::num_or(detail::field(pj, "residual", w), nan, w);
  r.poly_fit.shells = shells_from_json(detail::field(pj, "shells", w), w + ".poly_fit.shells");
  r.poly_fit.note = detail::str(detail::field(pj, "note", w), w);

  r.as_m.as_m = cone_from_json(detail::field(j, "as_m", w), mm, w + ".as_m");
  r.as_m.target = cone_from_json(detail::field(j, "target", w), mm, w + ".target");
  const auto& cn = detail::field(j, "containment", w);
  detail::only_keys(cn, {"verdict", "max_excess", "threshold", "witness", "note"}, w + ".containment");
  const auto cv = detail::str(detail::field(cn, "verdict", w), w);
  if (cv != "Verified" && cv != "Violated") detail::bad(w, "unknown containment verdict '" + cv + "'");
  auto& c = r.as_m.containment;
  c.verified = cv == "Verified";
  c.max_excess = detail::num_or(detail::field(cn, "max_excess", w), nan, w);
  c.threshold = detail::num(detail::field(cn, "threshold", w), w);
  if (const auto* wt = detail::optional_field(cn, "witness")) c.witness = vector_from_json(*wt, w);
  c.note = detail::str(detail::field(cn, "note", w), w);

  r.advisory = detail::boolean(detail::field(j, "advisory", w), w);
  if (r.advisory != (v.kind != ConditionKind::Certified)) detail::bad(w, "'advisory' is inconsistent with the verdict");
  if (detail::integer(detail::field(j, "exit_code", w), w) != r.exit_code())
    detail::bad(w, "'exit_code' is inconsistent with the verdicts");
  r.params = doc.config.params;
  return doc;
}

// errors -------------------------------------------------------------------

inline json error_report(const std::string& command, const Error& e, int exit_code) {
  return {{"kind", "error_report"},
          {"command", command},
          {"error", {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}}},
          {"exit_code", exit_code}};
}

// ---------------------------------------------------------------------------

inline json with_meta(json j) {
  j["meta"] = meta_json();
  return j;
}

/// Re-reads a report through its typed reader and writes it back; throws
/// InvalidInput unless the result equals the input (meta excluded).
inline void validate_report(const json& j) {
  if (!j.is_object()) raise(ErrorKind::InvalidInput, "report: expected an object");
  const auto kind = detail::str(detail::field(j, "kind", "report"), "report.kind");
  const auto& meta = detail::field(j, "meta", "report");
  detail::only_keys(meta, {"tool", "format_version", "timestamp"}, "report.meta");
  detail::str(detail::field(meta, "timestamp", "report.meta"), "report.meta.timestamp");
  json again;
  if (kind == "branch_report")
    again = to_json(branch_report_from_json(j));
  else if (kind == "afsupp_report")
    again = to_json(afsupp_report_from_json(j));
  else if (kind == "fourier_scan_report")
    again = to_json(fourier_scan_report_from_json(j));
  else if (kind == "admissibility_report")
    again = to_json(admissibility_report_from_json(j));
  else if (kind == "error_report") {
    detail::only_keys(j, {"kind", "meta", "command", "error", "exit_code"}, "error_report");
    const auto& e = detail::field(j, "error", "error_report");
    detail::only_keys(e, {"kind", "message"}, "error_report.error");
    detail::str(detail::field(e, "kind", "error_report"), "error_report.error.kind");
    detail::str(detail::field(e, "message", "error_report"), "error_report.error.message");
    detail::integer(detail::field(j, "exit_code", "error_report"), "error_report.exit_code");
    return;
  } else
    raise(ErrorKind::InvalidInput, "report: unknown kind '" + kind + "'");
  json stripped = j;
  stripped.erase("meta");
  if (again != stripped) raise(ErrorKind::InvalidInput, "report: " + kind + " does not round-trip");
}

}  // namespace ksupp::io
