#pragma once

// Root systems, weight lattices and Weyl groups for products of SU(n) and U(1).
//
// Weights are stored in fundamental-weight (Dynkin) coordinates for every
// SU(n) factor followed by the charge of every U(1) factor, in factor order.
// The invariant form is normalized so that every root has squared length 2;
// on su(n) this is B(X, Y) = -tr(XY), i.e. the negative Killing form divided
// by 2n. U(1) factors carry the form (1) and are orthogonal to the rest.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ksupp/errors.hpp"
#include "ksupp/rational.hpp"

namespace ksupp {

enum class FactorKind { SU, U1 };

struct Factor {
  FactorKind kind = FactorKind::SU;
  int n = 2;  // SU(n); 1 for U(1)

  int rank() const { return kind == FactorKind::SU ? n - 1 : 1; }
  int weyl_order() const {
    if (kind == FactorKind::U1) return 1;
    int w = 1;
    for (int k = 2; k <= n; ++k) w *= k;
    return w;
  }
  /// Real dimension of the Lie algebra.
  int algebra_dim() const { return kind == FactorKind::SU ? n * n - 1 : 1; }
  std::string label() const { return kind == FactorKind::SU ? "SU(" + std::to_string(n) + ")" : "U(1)"; }

  bool operator==(const Factor&) const = default;
};

struct GroupDescriptor {
  std::vector<Factor> factors;
  std::string name;

  int rank() const {
    int r = 0;
    for (const auto& f : factors) r += f.rank();
    return r;
  }

  int algebra_dim() const {
    int d = 0;
    for (const auto& f : factors) d += f.algebra_dim();
    return d;
  }

  /// Canonical whitespace-free form, e.g. "SU(2)xSU(2)xU(1)".
  std::string canonical() const {
    std::string s;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      if (i) s += "x";
      s += factors[i].label();
    }
    return s;
  }

  bool operator==(const GroupDescriptor& o) const { return factors == o.factors; }

  /// Parses `SU(n)` / `U(1)` factors joined by `x`, case-insensitively.
  static GroupDescriptor parse(std::string_view text) {
    std::string s;
    for (char c : text)
      if (!std::isspace(static_cast<unsigned char>(c))) s += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (s.empty()) raise(ErrorKind::InvalidInput, "empty group descriptor");

    GroupDescriptor g;
    std::size_t pos = 0;
    while (pos < s.size()) {
      auto open = s.find('(', pos);
      auto close = s.find(')', pos);
      if (open == std::string::npos || close == std::string::npos || close < open)
        raise(ErrorKind::InvalidInput, "malformed group descriptor '" + std::string(text) + "'");
      std::string type = s.substr(pos, open - pos);
      std::string arg = s.substr(open + 1, close - open - 1);
      int n = 0;
      try {
        std::size_t used = 0;
        n = std::stoi(arg, &used);
        if (used != arg.size()) throw std::invalid_argument(arg);
      } catch (const std::exception&) {
        raise(ErrorKind::InvalidInput, "bad factor argument '" + arg + "' in '" + std::string(text) + "'");
      }
      if (type == "SU") {
        if (n < 2) raise(ErrorKind::InvalidInput, "SU(n) needs n >= 2 (rank >= 1)");
        g.factors.push_back({FactorKind::SU, n});
      } else if (type == "U" && n == 1) {
        g.factors.push_back({FactorKind::U1, 1});
      } else {
        raise(ErrorKind::UnsupportedType, "factor type '" + type + "(" + arg + ")' is not implemented");
      }
      pos = close + 1;
      if (pos < s.size()) {
        if (s[pos] != 'X') raise(ErrorKind::InvalidInput, "factors must be joined by 'x' in '" + std::string(text) + "'");
        ++pos;
        if (pos == s.size()) raise(ErrorKind::InvalidInput, "trailing 'x' in '" + std::string(text) + "'");
      }
    }
    g.name = g.canonical();
    return g;
  }
};

/// A point of the real span of the weight lattice (chamber points included).
struct Weight {
  RVec coords;

  Weight() = default;
  explicit Weight(RVec c) : coords(std::move(c)) {}
  Weight(std::initializer_list<std::int64_t> c) {
    for (auto x : c) coords.emplace_back(x);
  }

  std::size_t size() const { return coords.size(); }
  const Rational& operator[](std::size_t i) const { return coords[i]; }
  Rational& operator[](std::size_t i) { return coords[i]; }

  friend Weight operator+(const Weight& a, const Weight& b) { return Weight(a.coords + b.coords); }
  friend Weight operator-(const Weight& a, const Weight& b) { return Weight(a.coords - b.coords); }
  friend Weight operator*(const Rational& s, const Weight& a) { return Weight(s * a.coords); }
  bool operator==(const Weight& o) const { return coords == o.coords; }
  bool operator<(const Weight& o) const { return coords < o.coords; }
};

inline std::string to_string(const Weight& w) {
  std::string s = "(";
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += ",";
    s += to_string(w[i]);
  }
  return s + ")";
}

struct WeylElement {
  RMat matrix;           // acts on weight coordinates
  std::vector<int> word;  // simple reflections in application order (first applied first)
};

struct RootSystem {
  GroupDescriptor descriptor;
  std::vector<RVec> simple_roots;
  std::vector<std::size_t> simple_coord;  // coordinate holding <v, alpha_i^vee>
  std::vector<RVec> positive_roots;
  std::vector<RVec> fundamental_weights;
  RVec rho;
  RMat gram;
  std::vector<std::size_t> factor_offset;  // first coordinate of each factor

  std::size_t rank() const { return gram.rows; }
  std::size_t semisimple_rank() const { return simple_roots.size(); }

  bool is_semisimple_coord(std::size_t i) const {
    return std::find(simple_coord.begin(), simple_coord.end(), i) != simple_coord.end();
  }
};

inline RootSystem build_root_system(const GroupDescriptor& descriptor) {
  if (descriptor.factors.empty()) raise(ErrorKind::InvalidInput, "group descriptor has no factors");
  RootSystem rs;
  rs.descriptor = descriptor;
  if (rs.descriptor.name.empty()) rs.descriptor.name = descriptor.canonical();
  const std::size_t r = static_cast<std::size_t>(descriptor.rank());
  rs.gram = RMat(r, r);
  rs.rho.assign(r, Rational(0));

  std::size_t offset = 0;
  for (const auto& f : descriptor.factors) {
    rs.factor_offset.push_back(offset);
    if (f.kind == FactorKind::U1) {
      rs.gram(offset, offset) = 1;
      offset += 1;
      continue;
    }
    if (f.n < 2) raise(ErrorKind::InvalidInput, "SU(n) needs n >= 2");
    const int n = f.n;
    const std::size_t fr = static_cast<std::size_t>(n - 1);
    // Inverse Cartan matrix of A_{n-1}: <w_i, w_j> = min(i,j)(n - max(i,j))/n.
    for (std::size_t i = 0; i < fr; ++i)
      for (std::size_t j = 0; j < fr; ++j) {
        auto a = static_cast<std::int64_t>(std::min(i, j) + 1);
        auto b = static_cast<std::int64_t>(std::max(i, j) + 1);
        rs.gram(offset + i, offset + j) = Rational(a * (n - b), n);
      }
    // Simple roots are the rows of the Cartan matrix.
    std::vector<RVec> simple;
    for (std::size_t i = 0; i < fr; ++i) {
      RVec a(r, Rational(0));
      a[offset + i] = 2;
      if (i > 0) a[offset + i - 1] = -1;
      if (i + 1 < fr) a[offset + i + 1] = -1;
      simple.push_back(a);
      rs.simple_roots.push_back(a);
      rs.simple_coord.push_back(offset + i);
    }
    // Positive roots alpha_i + ... + alpha_j.
    for (std::size_t i = 0; i < fr; ++i) {
      RVec acc(r, Rational(0));
      for (std::size_t j = i; j < fr; ++j) {
        acc = acc + simple[j];
        rs.positive_roots.push_back(acc);
      }
    }
    offset += fr;
  }
  for (std::size_t i = 0; i < r; ++i) {
    RVec w(r, Rational(0));
    w[i] = 1;
    if (rs.is_semisimple_coord(i)) rs.fundamental_weights.push_back(w);
  }
  for (const auto& a : rs.positive_roots) rs.rho = rs.rho + a;
  rs.rho = Rational(1, 2) * rs.rho;
  return rs;
}

inline void check_shape(const RootSystem& rs, const Weight& v) {
  if (v.size() != rs.rank())
    raise(ErrorKind::ShapeMismatch, "weight " + to_string(v) + " has " + std::to_string(v.size()) +
                                        " coordinates, group " + rs.descriptor.canonical() + " has rank " +
                                        std::to_string(rs.rank()));
}

inline Rational inner_product(const RootSystem& rs, const RVec& v, const RVec& w) {
  Rational s = 0;
  for (std::size_t i = 0; i < rs.rank(); ++i) {
    if (v[i] == 0) continue;
    for (std::size_t j = 0; j < rs.rank(); ++j)
      if (w[j] != 0 && rs.gram(i, j) != 0) s += v[i] * rs.gram(i, j) * w[j];
  }
  return s;
}

inline Rational inner_product(const RootSystem& rs, const Weight& v, const Weight& w) {
  check_shape(rs, v);
  check_shape(rs, w);
  return inner_product(rs, v.coords, w.coords);
}

inline double norm(const RootSystem& rs, const Weight& v) { return std::sqrt(to_double(inner_product(rs, v, v))); }

/// <v, alpha_i^vee> >= 0 for every simple root; torus charges are unconstrained.
inline bool is_dominant(const RootSystem& rs, const Weight& v) {
  for (auto c : rs.simple_coord)
    if (v[c] < 0) return false;
  return true;
}

/// Weight lattice membership: integral Dynkin labels (torus charges may be rational).
inline bool is_integral(const RootSystem& rs, const Weight& v) {
  for (auto c : rs.simple_coord)
    if (!is_integer(v[c])) return false;
  return true;
}

inline RVec reflect(const RootSystem& rs, std::size_t i, RVec v) {
  Rational k = v[rs.simple_coord[i]];
  if (k == 0) return v;
  const auto& a = rs.simple_roots[i];
  for (std::size_t j = 0; j < v.size(); ++j)
    if (a[j] != 0) v[j] -= k * a[j];
  return v;
}

inline RMat simple_reflection_matrix(const RootSystem& rs, std::size_t i) {
  RMat m = RMat::identity(rs.rank());
  const auto c = rs.simple_coord[i];
  for (std::size_t j = 0; j < rs.rank(); ++j) m(j, c) -= rs.simple_roots[i][j];
  return m;
}

inline Weight apply(const WeylElement& w, const Weight& v) { return Weight(w.matrix * v.coords); }

/// Iterated simple-reflection descent. Each step strictly increases <v, rho>,
/// so it terminates without enumerating the Weyl group.
inline std::pair<Weight, WeylElement> dominant_representative(const RootSystem& rs, const Weight& v) {
  check_shape(rs, v);
  WeylElement w{RMat::identity(rs.rank()), {}};
  RVec cur = v.coords;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < rs.semisimple_rank(); ++i) {
      if (cur[rs.simple_coord[i]] < 0) {
        cur = reflect(rs, i, std::move(cur));
        w.matrix = simple_reflection_matrix(rs, i) * w.matrix;
        w.word.push_back(static_cast<int>(i));
        changed = true;
        break;
      }
    }
  }
  return {Weight(std::move(cur)), std::move(w)};
}

inline std::uint64_t weyl_group_order(const RootSystem& rs) {
  std::uint64_t order = 1;
  for (const auto& f : rs.descriptor.factors) order *= static_cast<std::uint64_t>(f.weyl_order());
  return order;
}

inline constexpr std::size_t kDefaultWeylCap = 100000;

/// Closure of the simple reflections under composition (breadth first).
inline std::vector<WeylElement> enumerate_weyl_group(const RootSystem& rs, std::size_t cap = kDefaultWeylCap) {
  const auto order = weyl_group_order(rs);
  if (order > cap)
    raise(ErrorKind::WeylGroupTooLarge,
          "|W| = " + std::to_string(order) + " exceeds cap " + std::to_string(cap) + "; use dominant_representative");
  std::vector<RMat> gens;
  for (std::size_t i = 0; i < rs.semisimple_rank(); ++i) gens.push_back(simple_reflection_matrix(rs, i));

  std::vector<WeylElement> out{{RMat::identity(rs.rank()), {}}};
  std::set<RMat> seen{out.front().matrix};
  for (std::size_t head = 0; head < out.size(); ++head) {
    for (std::size_t i = 0; i < gens.size(); ++i) {
      RMat m = gens[i] * out[head].matrix;
      if (seen.insert(m).second) {
        auto word = out[head].word;
        word.push_back(static_cast<int>(i));
        out.push_back({std::move(m), std::move(word)});
      }
    }
  }
  return out;
}

/// The Weyl orbit of v, by closure under simple reflections.
inline std::vector<Weight> weyl_orbit(const RootSystem& rs, const Weight& v) {
  check_shape(rs, v);
  std::vector<Weight> out{v};
  std::set<Weight> seen{v};
  for (std::size_t head = 0; head < out.size(); ++head)
    for (std::size_t i = 0; i < rs.semisimple_rank(); ++i) {
      Weight r(reflect(rs, i, out[head].coords));
      if (seen.insert(r).second) out.push_back(std::move(r));
    }
  return out;
}

/// Orthogonal (epsilon) coordinates of the SU(n) block of a weight: n numbers
/// summing to zero whose consecutive differences are the Dynkin labels.
inline RVec epsilon_coords(const RootSystem& rs, std::size_t factor, const RVec& v) {
  const auto& f = rs.descriptor.factors[factor];
  const auto off = rs.factor_offset[factor];
  if (f.kind == FactorKind::U1) return {v[off]};
  const int n = f.n;
  RVec eps(static_cast<std::size_t>(n), Rational(0));
  // eps_k = sum_{j >= k} lambda_j - (1/n) sum_j j lambda_j   (1-based j)
  Rational shift = 0;
  for (int j = 1; j < n; ++j) shift += Rational(j) * v[off + static_cast<std::size_t>(j - 1)];
  shift /= n;
  Rational tail = 0;
  for (int k = n; k >= 1; --k) {
    if (k < n) tail += v[off + static_cast<std::size_t>(k - 1)];
    eps[static_cast<std::size_t>(k - 1)] = tail - shift;
  }
  return eps;
}

}  // namespace ksupp
