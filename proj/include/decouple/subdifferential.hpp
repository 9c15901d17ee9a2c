#pragma once

#include "decouple/core.hpp"
#include "decouple/sampling.hpp"

namespace decouple {

/// Best approximation of a target by a sum of one element from each piece, in the sum norm.
struct DualFit {
  double residual = kInf;
  std::vector<Point> parts;
  /// Weights on the vertices then rays of each piece, in order.
  std::vector<double> coeffs;
};

namespace detail {

inline void next_combination(std::vector<int>& c, int n, bool& done) {
  int k = static_cast<int>(c.size());
  int i = k - 1;
  while (i >= 0 && c[i] == n - k + i) --i;
  if (i < 0) {
    done = true;
    return;
  }
  ++c[i];
  for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
}

inline long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace detail

/// min || r - sum_p x_p ||_1 over x_p in piece p. The objective is piecewise linear, so the
/// minimum sits at a vertex of the arrangement; vertices are enumerated exactly.
inline DualFit l1_fit(const Point& r, const std::vector<const DualPiece*>& pieces) {
  const int n = static_cast<int>(r.size());
  std::vector<Point> cols;
  std::vector<int> group;  // -1 for rays
  std::vector<std::pair<int, int>> owner;
  int groups = 0;
  for (int p = 0; p < static_cast<int>(pieces.size()); ++p) {
    const auto& pc = *pieces[p];
    if (pc.vertices.empty()) {
      cols.push_back(Point::Zero(n));
      group.push_back(groups);
      owner.emplace_back(p, 0);
    }
    for (const auto& v : pc.vertices) {
      cols.push_back(v);
      group.push_back(groups);
      owner.emplace_back(p, 0);
    }
    ++groups;
    for (const auto& g : pc.rays) {
      cols.push_back(g);
      group.push_back(-1);
      owner.emplace_back(p, 1);
    }
  }
  const int k = static_cast<int>(cols.size());
  Eigen::MatrixXd a(n, k);
  for (int j = 0; j < k; ++j) a.col(j) = cols[j];
  const int free_rows = k - groups;
  const int planes = n + k;
  if (detail::binomial(planes, free_rows) > 2000000)
    throw Error(ErrorCode::InvalidArgument, "dual description too large for exact fitting");

  DualFit best;
  Eigen::VectorXd best_z;
  auto try_system = [&](const std::vector<int>& chosen) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    int row = 0;
    for (int g = 0; g < groups; ++g, ++row) {
      for (int j = 0; j < k; ++j)
        if (group[j] == g) m(row, j) = 1.0;
      b[row] = 1.0;
    }
    for (int c : chosen) {
      if (c < n) {
        m.row(row) = a.row(c);
        b[row] = r[c];
      } else {
        m(row, c - n) = 1.0;
      }
      ++row;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (lu.rank() < k) return;
    Eigen::VectorXd z = lu.solve(b);
    if ((m * z - b).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff())) return;
    if (z.minCoeff() < -1e-12) return;
    z = z.cwiseMax(0.0);
    double res = (r - a * z).cwiseAbs().sum();
    if (res < best.residual) {
      best.residual = res;
      best_z = z;
    }
  };
  if (free_rows == 0) {
    try_system({});
  } else {
    std::vector<int> c(free_rows);
    for (int i = 0; i < free_rows; ++i) c[i] = i;
    bool done = free_rows > planes;
    while (!done) {
      try_system(c);
      detail::next_combination(c, planes, done);
    }
  }
  if (best_z.size()) {
    best.parts.assign(pieces.size(), Point::Zero(n));
    for (int j = 0; j < k; ++j) best.parts[owner[j].first] += best_z[j] * cols[j];
    best.coeffs.assign(best_z.data(), best_z.data() + k);
  }
  return best;
}

/// Element of the piece with the given weights, as returned in DualFit::coeffs.
inline Point combine(const DualPiece& p, const std::vector<double>& w, int dim) {
  Point out = Point::Zero(dim);
  std::size_t j = 0;
  if (p.vertices.empty()) ++j;
  for (const auto& v : p.vertices) out += w[j++] * v;
  for (const auto& r : p.rays) out += w[j++] * r;
  return out;
}

/// Sum-norm distance from x* to the set; +inf when the set is empty.
inline DualFit dist_to_set(const Point& xstar, const DualSet& d) {
  DualFit best;
  for (const auto& p : d.pieces) {
    auto f = l1_fit(xstar, {&p});
    if (f.residual < best.residual) best = f;
  }
  return best;
}

/// Sum-norm distance from x* to the Minkowski sum d1 + d2.
inline DualFit dist_to_sum(const Point& xstar, const DualSet& d1, const DualSet& d2) {
  if (d1.is_empty() || d2.is_empty()) throw Error(ErrorCode::EmptySet, "empty dual set in a sum");
  DualFit best;
  for (const auto& p1 : d1.pieces)
    for (const auto& p2 : d2.pieces) {
      auto f = l1_fit(xstar, {&p1, &p2});
      if (f.residual < best.residual) best = f;
    }
  return best;
}

/// Normal cone of the box at x: each coordinate contributes -e_i at the lower face, +e_i at
/// the upper face, both when the faces coincide, nothing in the interior.
inline DualSet box_normal_cone(const Point& x, const Point& lo, const Point& hi, double tol = kDefaultTol) {
  const int n = static_cast<int>(x.size());
  if (lo.size() != n || hi.size() != n) throw Error(ErrorCode::DimensionMismatch, "box");
  std::vector<Point> rays;
  for (int i = 0; i < n; ++i) {
    if (x[i] < lo[i] - tol || x[i] > hi[i] + tol)
      throw Error(ErrorCode::NotInBox, "component " + std::to_string(i) + " outside the box");
    Point e = Point::Zero(n);
    e[i] = 1.0;
    if (x[i] <= lo[i] + tol) rays.push_back(-e);
    if (x[i] >= hi[i] - tol) rays.push_back(e);
  }
  return DualSet::cone(Point::Zero(n), std::move(rays));
}

/// Unit directions of the maximum norm: points on the boundary of the cube.
inline std::vector<Point> sphere_directions(int dim) {
  std::vector<Point> out;
  if (dim == 1) return {make_point({-1.0}), make_point({1.0})};
  if (dim <= 3) {
    const int per = dim == 2 ? 17 : 5;
    std::vector<std::size_t> idx(dim, 0);
    while (true) {
      Point p(dim);
      for (int k = 0; k < dim; ++k) p[k] = -1.0 + 2.0 * static_cast<double>(idx[k]) / (per - 1);
      if (norm(p) == 1.0) out.push_back(p);
      int k = dim - 1;
      while (k >= 0 && ++idx[k] == static_cast<std::size_t>(per)) idx[k--] = 0;
      if (k < 0) break;
    }
    return out;
  }
  for (int k = 0; k < dim; ++k)
    for (double s : {-1.0, 1.0}) {
      Point e = Point::Zero(dim);
      e[k] = s;
      out.push_back(e);
    }
  Box cube{Point::Constant(dim, -1.0), Point::Constant(dim, 1.0)};
  for (auto& p : halton_points(cube, 64 * dim, 0)) {
    double m = norm(p);
    if (m > 0) out.push_back(p / m);
  }
  return out;
}

struct SubgradientTest {
  Verdict verdict;
  std::vector<double> quotients;  // min quotient at radius r0 * 2^-j
};

/// Frechet subgradient test: liminf of (f(x+h) - f(x) - <x*, h>) / ||h|| must be >= 0.
inline SubgradientTest is_subgradient(const FnOracle& f, const Point& x, const Point& xstar,
                                      double r0 = 0.1, int levels = 7, double tol = 1e-6) {
  ExtReal fx = f(x);
  if (!fx.is_finite()) throw Error(ErrorCode::InfiniteAtBase, "f(x) is not finite");
  const auto dirs = sphere_directions(f.dim);
  SubgradientTest t;
  Point worst;
  for (int j = 0; j < levels; ++j) {
    double r = std::ldexp(r0, -j), q = kInf;
    for (const auto& u : dirs) {
      Point y = x + r * u;
      ExtReal fy = f(y);
      if (fy.is_pos_inf()) continue;
      double v = fy.is_neg_inf() ? -kInf : (fy.value() - fx.value() - r * xstar.dot(u)) / r;
      if (v < q) {
        q = v;
        if (j + 1 == levels) worst = y;
      }
    }
    t.quotients.push_back(q);
  }
  const auto n = t.quotients.size();
  const double last = t.quotients.back();
  const double prev = n >= 2 ? t.quotients[n - 2] : last;
  if (last >= -tol) {
    t.verdict = Verdict::holds("difference quotients nonnegative");
  } else if (n >= 2 && last > prev && std::abs(last) <= 0.6 * std::abs(prev)) {
    t.verdict = Verdict::holds("negative part decays with the radius");
  } else if (n >= 2 && std::abs(last) >= 0.75 * std::abs(prev)) {
    t.verdict = Verdict::fails({worst}, "quotient stays below zero");
  } else {
    t.verdict = Verdict::inconclusive(std::ldexp(r0, -(levels - 1)), "slowly decaying");
  }
  return t;
}

/// Smooth map with an optional Jacobian; central differences are used when it is absent.
struct SmoothMap {
  int in_dim = 1, out_dim = 1;
  std::function<Point(const Point&)> eval;
  std::function<Eigen::MatrixXd(const Point&)> jacobian;

  /// Jacobian oracle when present, central differences otherwise.
  Eigen::MatrixXd jac(const Point& x) const {
    Eigen::MatrixXd j;
    if (jacobian) {
      j = jacobian(x);
    } else if (eval) {
      j.resize(out_dim, in_dim);
      const double h = 1e-6;
      for (int k = 0; k < in_dim; ++k) {
        Point a = x, b = x;
        a[k] += h;
        b[k] -= h;
        j.col(k) = (eval(a) - eval(b)) / (2 * h);
      }
    }
    if (j.rows() != out_dim || j.cols() != in_dim || !j.allFinite())
      throw Error(ErrorCode::JacobianUnavailable, "no finite Jacobian at the point");
    return j;
  }
};

/// Coderivative of a smooth map: D*F(x)(y*) = J(x)^T y*.
inline Point coderivative_smooth(const SmoothMap& f, const Point& x, const Point& ystar) {
  return f.jac(x).transpose() * ystar;
}

}  // namespace decouple
