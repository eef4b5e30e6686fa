#pragma once

// Matrix models of k = su(n_1) + ... + u(1) + ...: a fixed real basis, the
// invariant form B(X, Y) = -tr(XY) on su blocks (X.Y on u(1)), Haar sampling
// of SU(n), and subgroup embeddings M -> K given as linear maps between the
// bases.
//
// Basis of su(n), in order: h_j = i(E_jj - E_{j+1,j+1}) for j = 1..n-1, then for
// each pair j < k (lexicographic) E_jk - E_kj followed by i(E_jk + E_kj).
// The basis of u(1) is the single element i.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ksupp/errors.hpp"
#include "ksupp/rational.hpp"
#include "ksupp/repr.hpp"
#include "ksupp/rootsys.hpp"

namespace ksupp {

using cplx = std::complex<double>;

/// Block-diagonal element of k (one block per factor).
struct AlgebraElement {
  std::vector<Eigen::MatrixXcd> blocks;
};

/// Element of K as one unitary block per factor.
struct GroupElement {
  std::vector<Eigen::MatrixXcd> blocks;
};

inline std::vector<std::size_t> algebra_offsets(const GroupDescriptor& g) {
  std::vector<std::size_t> off;
  std::size_t o = 0;
  for (const auto& f : g.factors) {
    off.push_back(o);
    o += static_cast<std::size_t>(f.algebra_dim());
  }
  return off;
}

/// Exact gram matrix of the basis under B.
inline RMat algebra_gram(const GroupDescriptor& g) {
  const auto dim = static_cast<std::size_t>(g.algebra_dim());
  RMat gram(dim, dim);
  const auto off = algebra_offsets(g);
  for (std::size_t fi = 0; fi < g.factors.size(); ++fi) {
    const auto& f = g.factors[fi];
    const auto o = off[fi];
    if (f.kind == FactorKind::U1) {
      gram(o, o) = 1;
      continue;
    }
    const auto r = static_cast<std::size_t>(f.n - 1);
    for (std::size_t j = 0; j < r; ++j) {
      gram(o + j, o + j) = 2;
      if (j + 1 < r) {
        gram(o + j, o + j + 1) = -1;
        gram(o + j + 1, o + j) = -1;
      }
    }
    for (std::size_t k = o + r; k < o + static_cast<std::size_t>(f.algebra_dim()); ++k) gram(k, k) = 2;
  }
  return gram;
}

inline Eigen::MatrixXd to_eigen(const RMat& m) {
  Eigen::MatrixXd out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = to_double(m(i, j));
  return out;
}

inline Eigen::VectorXd to_eigen(const RVec& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = to_double(v[i]);
  return out;
}

inline AlgebraElement element_from_coords(const GroupDescriptor& g, const Eigen::VectorXd& x) {
  const cplx I(0, 1);
  AlgebraElement e;
  const auto off = algebra_offsets(g);
  for (std::size_t fi = 0; fi < g.factors.size(); ++fi) {
    const auto& f = g.factors[fi];
    const auto o = static_cast<Eigen::Index>(off[fi]);
    if (f.kind == FactorKind::U1) {
      Eigen::MatrixXcd b(1, 1);
      b(0, 0) = I * x(o);
      e.blocks.push_back(b);
      continue;
    }
    const int n = f.n;
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(n, n);
    Eigen::Index idx = o;
    for (int j = 0; j < n - 1; ++j, ++idx) {
      b(j, j) += I * x(idx);
      b(j + 1, j + 1) -= I * x(idx);
    }
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        const double re = x(idx++);
        const double im = x(idx++);
        b(j, k) += cplx(re, im);
        b(k, j) += cplx(-re, im);
      }
    e.blocks.push_back(b);
  }
  return e;
}

inline Eigen::VectorXd coords_from_element(const GroupDescriptor& g, const AlgebraElement& e) {
  Eigen::VectorXd x(g.algebra_dim());
  const auto off = algebra_offsets(g);
  for (std::size_t fi = 0; fi < g.factors.size(); ++fi) {
    const auto& f = g.factors[fi];
    const auto& b = e.blocks[fi];
    auto idx = static_cast<Eigen::Index>(off[fi]);
    if (f.kind == FactorKind::U1) {
      x(idx) = b(0, 0).imag();
      continue;
    }
    const int n = f.n;
    double partial = 0;
    for (int j = 0; j < n - 1; ++j) {
      partial += b(j, j).imag();
      x(idx++) = partial;
    }
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        x(idx++) = b(j, k).real();
        x(idx++) = b(j, k).imag();
      }
  }
  return x;
}

/// Exact basis coordinates of the torus element i diag(eps(lambda)).
inline RVec torus_coords(const RootSystem& rs, const RVec& lambda) {
  const auto& g = rs.descriptor;
  RVec x(static_cast<std::size_t>(g.algebra_dim()), Rational(0));
  const auto off = algebra_offsets(g);
  for (std::size_t fi = 0; fi < g.factors.size(); ++fi) {
    const auto eps = epsilon_coords(rs, fi, lambda);
    if (g.factors[fi].kind == FactorKind::U1) {
      x[off[fi]] = eps[0];
      continue;
    }
    Rational partial = 0;
    for (std::size_t j = 0; j + 1 < eps.size(); ++j) {
      partial += eps[j];
      x[off[fi] + j] = partial;
    }
  }
  return x;
}

/// Dominant weight (Dynkin labels / charges, as doubles) of the adjoint orbit
/// through X: diagonalize each block and sort the eigenvalues of -iX
/// descending.
inline Eigen::VectorXd dominant_weight_of(const RootSystem& rs, const AlgebraElement& e) {
  const auto& g = rs.descriptor;
  Eigen::VectorXd w(static_cast<Eigen::Index>(rs.rank()));
  for (std::size_t fi = 0; fi < g.factors.size(); ++fi) {
    const auto& f = g.factors[fi];
    const auto o = static_cast<Eigen::Index>(rs.factor_offset[fi]);
    if (f.kind == FactorKind::U1) {
      w(o) = e.blocks[fi](0, 0).imag();
      continue;
    }
    Eigen::MatrixXcd h = cplx(0, -1) * e.blocks[fi];
    h = 0.5 * (h + h.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();  // ascending
    const int n = f.n;
    for (int j = 0; j < n - 1; ++j) w(o + j) = ev(n - 1 - j) - ev(n - 2 - j);
  }
  return w;
}

/// Haar-distributed SU(n): Gaussian matrix, QR with phase-fixed diagonal,
/// determinant correction.
template <class Rng>
Eigen::MatrixXcd haar_special_unitary(int n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXcd z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      z(i, j) = cplx(re, im) / std::sqrt(2.0);
    }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    const cplx d = r(j, j);
    const double a = std::abs(d);
    if (a > 0) q.col(j) *= d / a;
  }
  const cplx det = q.determinant();
  q *= std::polar(1.0, -std::arg(det) / n);
  return q;
}

template <class Rng>
GroupElement haar_element(const GroupDescriptor& g, Rng& rng) {
  GroupElement k;
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  for (const auto& f : g.factors) {
    if (f.kind == FactorKind::U1) {
      Eigen::MatrixXcd b(1, 1);
      b(0, 0) = std::polar(1.0, angle(rng));
      k.blocks.push_back(b);
    } else {
      k.blocks.push_back(haar_special_unitary(f.n, rng));
    }
  }
  return k;
}

inline AlgebraElement adjoint(const GroupElement& k, const AlgebraElement& x) {
  AlgebraElement out;
  for (std::size_t i = 0; i < x.blocks.size(); ++i) out.blocks.push_back(k.blocks[i] * x.blocks[i] * k.blocks[i].adjoint());
  return out;
}

/// A closed subgroup M of K, known through its torus restriction, the conormal
/// space m-perp (basis coordinates in k) and, when available, the Lie algebra
/// embedding phi as a (dim k) x (dim m) matrix on basis coordinates.
struct Subgroup {
  std::string label;
  TorusEmbedding torus;
  std::vector<RVec> mperp;
  std::optional<RMat> algebra_map;
};

/// Restriction matrix induced by phi: the j-th M coordinate of R(lambda) is
/// B(X_lambda, phi(H_j)) for the M Cartan basis element H_j.
inline RMat restriction_from_algebra_map(const RootSystem& rs_k, const RootSystem& rs_m, const RMat& phi) {
  const auto& gk = rs_k.descriptor;
  const auto& gm = rs_m.descriptor;
  if (phi.rows != static_cast<std::size_t>(gk.algebra_dim()) || phi.cols != static_cast<std::size_t>(gm.algebra_dim()))
    raise(ErrorKind::ShapeMismatch, "algebra map must be dim(k) x dim(m)");
  const RMat gram_k = algebra_gram(gk);
  const auto koff = algebra_offsets(gk);
  const auto moff = algebra_offsets(gm);

  // Image of each M Cartan element, checked to lie in t_K.
  std::vector<RVec> images;
  for (std::size_t fi = 0; fi < gm.factors.size(); ++fi)
    for (int j = 0; j < gm.factors[fi].rank(); ++j) {
      const RVec img = phi.col(moff[fi] + static_cast<std::size_t>(j));
      for (std::size_t kf = 0; kf < gk.factors.size(); ++kf) {
        const auto r = static_cast<std::size_t>(gk.factors[kf].rank());
        for (auto c = koff[kf] + r; c < koff[kf] + static_cast<std::size_t>(gk.factors[kf].algebra_dim()); ++c)
          if (img[c] != 0) raise(ErrorKind::InvalidInput, "algebra map does not send the torus of M into the torus of K");
      }
      images.push_back(img);
    }
  RMat r(rs_m.rank(), rs_k.rank());
  for (std::size_t i = 0; i < rs_k.rank(); ++i) {
    RVec e(rs_k.rank(), Rational(0));
    e[i] = 1;
    const RVec x = gram_k * torus_coords(rs_k, e);
    for (std::size_t j = 0; j < images.size(); ++j) r(j, i) = dot(x, images[j]);
  }
  return r;
}

/// m-perp = {v in k : B(v, phi(Y)) = 0 for all Y in m}.
inline std::vector<RVec> conormal_basis(const GroupDescriptor& gk, const RMat& phi) {
  return null_space(phi.transpose() * algebra_gram(gk));
}

inline Subgroup make_subgroup(const RootSystem& rs_k, const RootSystem& rs_m, RMat phi, std::string label) {
  Subgroup s;
  s.label = std::move(label);
  s.torus = {restriction_from_algebra_map(rs_k, rs_m, phi), rs_k.descriptor, rs_m.descriptor};
  s.mperp = conormal_basis(rs_k.descriptor, phi);
  s.algebra_map = std::move(phi);
  return s;
}

/// Named subgroup presets. `subgroup_group` returns M's descriptor; the
/// matching `preset_subgroup` builds the embedding.
///   identity  : M = K
///   diag      : K = SU(n)^k, M = SU(n) embedded diagonally
///   factor(i) : M = i-th factor of K (1-based)
///   torus     : M = U(1)^rank, h_j/2 on SU factors, identity on U(1) factors
///   su2xu1    : K = SU(3), M = SU(2)xU(1) = S(U(2)xU(1)), charge diag(1,1,-2)
inline GroupDescriptor subgroup_group(const GroupDescriptor& k, const std::string& preset) {
  if (preset == "identity") return k;
  if (preset == "diag") {
    if (k.factors.size() < 2) raise(ErrorKind::InvalidInput, "diag needs at least two factors");
    for (const auto& f : k.factors)
      if (!(f == k.factors.front()) || f.kind != FactorKind::SU)
        raise(ErrorKind::InvalidInput, "diag needs K = SU(n)^k with identical factors");
    return GroupDescriptor::parse(k.factors.front().label());
  }
  if (preset.rfind("factor(", 0) == 0 && preset.back() == ')') {
    int idx = 0;
    try {
      idx = std::stoi(preset.substr(7, preset.size() - 8));
    } catch (const std::exception&) {
      raise(ErrorKind::InvalidInput, "bad factor index in '" + preset + "'");
    }
    if (idx < 1 || idx > static_cast<int>(k.factors.size()))
      raise(ErrorKind::InvalidInput, "factor index out of range in '" + preset + "'");
    return GroupDescriptor::parse(k.factors[static_cast<std::size_t>(idx - 1)].label());
  }
  if (preset == "torus") {
    std::string s;
    for (int i = 0; i < k.rank(); ++i) s += (i ? "xU(1)" : "U(1)");
    return GroupDescriptor::parse(s);
  }
  if (preset == "su2xu1") {
    if (!(k.factors.size() == 1 && k.factors[0].kind == FactorKind::SU && k.factors[0].n == 3))
      raise(ErrorKind::InvalidInput, "su2xu1 is defined for K = SU(3)");
    return GroupDescriptor::parse("SU(2)xU(1)");
  }
  raise(ErrorKind::InvalidInput, "unknown subgroup preset '" + preset + "'");
}

inline Subgroup preset_subgroup(const RootSystem& rs_k, const RootSystem& rs_m, const std::string& preset) {
  const auto& gk = rs_k.descriptor;
  const auto dk = static_cast<std::size_t>(gk.algebra_dim());
  const auto dm = static_cast<std::size_t>(rs_m.descriptor.algebra_dim());
  const auto koff = algebra_offsets(gk);
  RMat phi(dk, dm);
  if (preset == "identity") {
    phi = RMat::identity(dk);
  } else if (preset == "diag") {
    for (std::size_t fi = 0; fi < gk.factors.size(); ++fi)
      for (std::size_t j = 0; j < dm; ++j) phi(koff[fi] + j, j) = 1;
  } else if (preset.rfind("factor(", 0) == 0) {
    const auto idx = static_cast<std::size_t>(std::stoi(preset.substr(7, preset.size() - 8)) - 1);
    for (std::size_t j = 0; j < dm; ++j) phi(koff[idx] + j, j) = 1;
  } else if (preset == "torus") {
    std::size_t col = 0;
    for (std::size_t fi = 0; fi < gk.factors.size(); ++fi) {
      const auto& f = gk.factors[fi];
      for (int j = 0; j < f.rank(); ++j, ++col)
        phi(koff[fi] + static_cast<std::size_t>(j), col) = f.kind == FactorKind::SU ? Rational(1, 2) : Rational(1);
    }
  } else if (preset == "su2xu1") {
    // su(2) -> upper-left block: h -> h_1, E12 pair -> E12 pair (basis slots 2, 3 of su(3)).
    phi(0, 0) = 1;
    phi(2, 1) = 1;
    phi(3, 2) = 1;
    // u(1): i -> i diag(1, 1, -2) = h_1 + 2 h_2.
    phi(0, 3) = 1;
    phi(1, 3) = 2;
  } else {
    raise(ErrorKind::InvalidInput, "unknown subgroup preset '" + preset + "'");
  }
  return make_subgroup(rs_k, rs_m, std::move(phi), preset);
}

}  // namespace ksupp
