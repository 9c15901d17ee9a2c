#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace decouple {

using Point = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Default tolerance used by every comparison that is not stated exactly.
inline constexpr double kDefaultTol = 1e-9;
/// Traces beyond this magnitude are treated as divergent.
inline constexpr double kDivergence = 1e6;
/// Two consecutive trace entries closer than this count as converged.
inline constexpr double kTraceTol = 1e-3;
/// Agreement expected between sampled estimates of quantities related by an exact inequality.
inline constexpr double kSampledTol = 5e-2;

enum class ErrorCode {
  EmptyInterior,
  InfiniteAtBase,
  EmptyCoupling,
  PreconditionFailed,
  NotBoundedBelow,
  GammaSearchFailed,
  NotASubgradient,
  NotInBox,
  DimensionMismatch,
  UndefinedSum,
  SyntaxError,
  UndefinedSymbol,
  InvalidArgument,
  UnknownCase,
  AllInfinite,
  QuasiuniformEpsMinNotCertified,
  BasePointNotInIntersection,
  BaseNotInIntersection,
  EmptySet,
  JacobianUnavailable,
  NoSubgradOracle,
  InvalidBounds,
  NonSeparableObjective,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::EmptyInterior: return "EmptyInterior";
    case ErrorCode::InfiniteAtBase: return "InfiniteAtBase";
    case ErrorCode::EmptyCoupling: return "EmptyCoupling";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::NotBoundedBelow: return "NotBoundedBelow";
    case ErrorCode::GammaSearchFailed: return "GammaSearchFailed";
    case ErrorCode::NotASubgradient: return "NotASubgradient";
    case ErrorCode::NotInBox: return "NotInBox";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UndefinedSum: return "UndefinedSum";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UndefinedSymbol: return "UndefinedSymbol";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownCase: return "UnknownCase";
    case ErrorCode::AllInfinite: return "AllInfinite";
    case ErrorCode::QuasiuniformEpsMinNotCertified: return "QuasiuniformEpsMinNotCertified";
    case ErrorCode::BasePointNotInIntersection: return "BasePointNotInIntersection";
    case ErrorCode::BaseNotInIntersection: return "BaseNotInIntersection";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::JacobianUnavailable: return "JacobianUnavailable";
    case ErrorCode::NoSubgradOracle: return "NoSubgradOracle";
    case ErrorCode::InvalidBounds: return "InvalidBounds";
    case ErrorCode::NonSeparableObjective: return "NonSeparableObjective";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Real number extended with +inf and -inf. NaN is never stored.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  ExtReal(double v) : v_(v) {  // NOLINT(google-explicit-constructor)
    if (std::isnan(v)) throw Error(ErrorCode::UndefinedSum, "NaN is not an extended real");
  }
  static ExtReal pos_inf() { return ExtReal(kInf); }
  static ExtReal neg_inf() { return ExtReal(-kInf); }

  double value() const { return v_; }
  bool is_finite() const { return std::isfinite(v_); }
  bool is_pos_inf() const { return v_ == kInf; }
  bool is_neg_inf() const { return v_ == -kInf; }

  friend ExtReal operator+(ExtReal a, ExtReal b) {
    if ((a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf()))
      throw Error(ErrorCode::UndefinedSum, "(+inf) + (-inf)");
    return ExtReal(a.v_ + b.v_);
  }
  friend ExtReal operator-(ExtReal a) { return ExtReal(-a.v_); }
  friend ExtReal operator-(ExtReal a, ExtReal b) { return a + (-b); }
  friend auto operator<=>(ExtReal a, ExtReal b) { return a.v_ <=> b.v_; }
  friend bool operator==(ExtReal a, ExtReal b) { return a.v_ == b.v_; }

 private:
  double v_ = 0.0;
};

/// Infimum of a finite collection; +inf when empty.
inline ExtReal ext_inf(const std::vector<ExtReal>& xs) {
  ExtReal r = ExtReal::pos_inf();
  for (auto x : xs) r = std::min(r, x);
  return r;
}

/// Supremum of a collection of nonnegative values; 0 when empty.
inline ExtReal ext_sup_nonneg(const std::vector<ExtReal>& xs) {
  ExtReal r = 0.0;
  for (auto x : xs) r = std::max(r, x);
  return r;
}

/// Maximum norm; the product of copies of the real line carries it.
inline double norm(const Point& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }
inline double dist(const Point& a, const Point& b) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}
/// Dual of the maximum norm.
inline double dual_norm(const Point& x) { return x.cwiseAbs().sum(); }

inline Point make_point(std::initializer_list<double> xs) {
  Point p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double v : xs) p[i++] = v;
  return p;
}

inline bool lex_less(const Point& a, const Point& b) {
  for (Eigen::Index i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return a.size() < b.size();
}

/// conv(vertices) + cone(rays). A piece without vertices is treated as having the origin.
struct DualPiece {
  std::vector<Point> vertices;
  std::vector<Point> rays;
};

/// Finite union of polyhedral pieces in the dual space; no pieces means the empty set.
struct DualSet {
  int dim = 1;
  std::vector<DualPiece> pieces;

  static DualSet empty(int dim) { return {dim, {}}; }
  static DualSet point(const Point& v) { return {static_cast<int>(v.size()), {{{v}, {}}}}; }
  static DualSet cone(const Point& base, std::vector<Point> rays) {
    return {static_cast<int>(base.size()), {{{base}, std::move(rays)}}};
  }
  static DualSet finite(const std::vector<Point>& vs) {
    DualSet d{vs.empty() ? 1 : static_cast<int>(vs[0].size()), {}};
    for (const auto& v : vs) d.pieces.push_back({{v}, {}});
    return d;
  }
  bool is_empty() const { return pieces.empty(); }

  DualSet shifted(const Point& v) const {
    DualSet d = *this;
    for (auto& p : d.pieces) {
      if (p.vertices.empty()) p.vertices.push_back(Point::Zero(dim));
      for (auto& q : p.vertices) q += v;
    }
    return d;
  }
  /// Image under the linear map M.
  DualSet mapped(const Eigen::MatrixXd& m) const {
    DualSet d{static_cast<int>(m.rows()), {}};
    for (const auto& p : pieces) {
      DualPiece q;
      for (const auto& v : p.vertices) q.vertices.push_back(m * v);
      if (p.vertices.empty()) q.vertices.push_back(Point::Zero(m.rows()));
      for (const auto& r : p.rays) q.rays.push_back(m * r);
      d.pieces.push_back(std::move(q));
    }
    return d;
  }
};

using DualOracle = std::function<DualSet(const Point&)>;

struct FnOracle {
  int dim = 1;
  std::function<ExtReal(const Point&)> eval;
  std::optional<double> lower_bound_hint;
  /// Subdifferential oracle; empty when unavailable.
  DualOracle subgrad;

  ExtReal operator()(const Point& x) const {
    if (x.size() != dim) throw Error(ErrorCode::DimensionMismatch, "oracle dimension");
    return eval(x);
  }
};

/// Pointwise sum; throws UndefinedSum when the two values are opposite infinities.
inline FnOracle sum(const FnOracle& f1, const FnOracle& f2) {
  if (f1.dim != f2.dim) throw Error(ErrorCode::DimensionMismatch, "sum of oracles");
  FnOracle s;
  s.dim = f1.dim;
  s.eval = [f1, f2](const Point& x) { return f1(x) + f2(x); };
  return s;
}

struct SetOracle {
  int dim = 1;
  std::function<bool(const Point&)> contains;
  std::function<double(const Point&)> dist;
  std::function<Point(const Point&)> project;  // may be empty
  DualOracle normal_cone;                      // may be empty
};

struct Box {
  Point lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
};

enum class RegionKind { OpenBall, ClosedBall, AxisBox, WholeSpace, Explicit };

/// A subset of R^n used as the localization set U.
struct Region {
  RegionKind kind = RegionKind::WholeSpace;
  Point center;
  double radius = 0.0;
  Point lo, hi;
  std::shared_ptr<SetOracle> set;
  /// Distance to the complement; required by Explicit regions that need inner families.
  std::function<double(const Point&)> margin;
  /// Sampling window for unbounded or explicit regions.
  Box window;
  /// Point that samples are graded towards.
  std::optional<Point> anchor;

  static Region open_ball(Point c, double r) {
    Region u;
    u.kind = RegionKind::OpenBall;
    u.radius = r;
    u.window = {c.array() - r, c.array() + r};
    u.center = std::move(c);
    return u;
  }
  static Region closed_ball(Point c, double r) {
    Region u = open_ball(std::move(c), r);
    u.kind = RegionKind::ClosedBall;
    return u;
  }
  static Region box(Point lo, Point hi) {
    Region u;
    u.kind = RegionKind::AxisBox;
    u.window = {lo, hi};
    u.lo = std::move(lo);
    u.hi = std::move(hi);
    return u;
  }
  static Region whole(Box window) {
    Region u;
    u.kind = RegionKind::WholeSpace;
    u.window = std::move(window);
    return u;
  }
  static Region from_set(std::shared_ptr<SetOracle> s, Box window,
                         std::function<double(const Point&)> margin = {}) {
    Region u;
    u.kind = RegionKind::Explicit;
    u.set = std::move(s);
    u.window = std::move(window);
    u.margin = std::move(margin);
    return u;
  }

  int dim() const { return window.dim(); }

  bool contains(const Point& x) const {
    switch (kind) {
      case RegionKind::OpenBall: return decouple::dist(x, center) < radius;
      case RegionKind::ClosedBall: return decouple::dist(x, center) <= radius;
      case RegionKind::AxisBox:
        return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
      case RegionKind::WholeSpace: return true;
      case RegionKind::Explicit: return set->contains(x);
    }
    return false;
  }

  /// Distance from x to the region.
  double dist_to(const Point& x) const {
    switch (kind) {
      case RegionKind::OpenBall:
      case RegionKind::ClosedBall:
        return std::max(0.0, decouple::dist(x, center) - radius);
      case RegionKind::AxisBox: {
        Point c = x.cwiseMax(lo).cwiseMin(hi);
        return decouple::dist(x, c);
      }
      case RegionKind::WholeSpace: return 0.0;
      case RegionKind::Explicit: return set->dist(x);
    }
    return kInf;
  }

  /// Distance from x to the complement, or 0 outside the region.
  double margin_of(const Point& x) const {
    switch (kind) {
      case RegionKind::OpenBall:
      case RegionKind::ClosedBall:
        return std::max(0.0, radius - decouple::dist(x, center));
      case RegionKind::AxisBox:
        return std::max(0.0, std::min((x - lo).minCoeff(), (hi - x).minCoeff()));
      case RegionKind::WholeSpace: return kInf;
      case RegionKind::Explicit:
        if (!margin) throw Error(ErrorCode::PreconditionFailed, "explicit region has no margin");
        return margin(x);
    }
    return 0.0;
  }

  /// Open epsilon-enlargement.
  Region fattened(double eps) const {
    switch (kind) {
      case RegionKind::OpenBall:
      case RegionKind::ClosedBall: {
        Region u = open_ball(center, radius + eps);
        u.anchor = anchor;
        return u;
      }
      case RegionKind::WholeSpace: return *this;
      default: break;
    }
    auto self = std::make_shared<Region>(*this);
    auto s = std::make_shared<SetOracle>();
    s->dim = dim();
    s->contains = [self, eps](const Point& x) { return self->dist_to(x) < eps; };
    s->dist = [self, eps](const Point& x) { return std::max(0.0, self->dist_to(x) - eps); };
    Box w{window.lo.array() - eps, window.hi.array() + eps};
    Region u = from_set(s, w);
    u.anchor = anchor ? anchor : std::optional<Point>(sampling_anchor());
    return u;
  }

  Point sampling_anchor() const {
    if (anchor) return *anchor;
    if (kind == RegionKind::OpenBall || kind == RegionKind::ClosedBall) return center;
    return (window.lo + window.hi) / 2.0;
  }
};

/// One member of an increasing family of essentially interior subsets.
struct EIMember {
  Region region;
  double gap = 0.0;  // enlargement by gap stays inside the parent
  double radius = 0.0;
};

struct EIFamily {
  std::vector<EIMember> members;
};

/// Members shrink the parent by w * 2^-i on each side, i = 1..stages.
inline EIFamily ei_family_for(const Region& u, int stages) {
  if (stages < 1) throw Error(ErrorCode::InvalidArgument, "stages must be positive");
  EIFamily fam;
  switch (u.kind) {
    case RegionKind::OpenBall:
    case RegionKind::ClosedBall: {
      if (!(u.radius > 0)) throw Error(ErrorCode::EmptyInterior, "ball of radius 0");
      for (int i = 1; i <= stages; ++i) {
        double g = u.radius * std::ldexp(1.0, -i);
        EIMember m{Region::closed_ball(u.center, u.radius - g), g, u.radius - g};
        m.region.anchor = u.anchor;
        fam.members.push_back(m);
      }
      break;
    }
    case RegionKind::AxisBox: {
      Point w = (u.hi - u.lo) / 2.0;
      if (!(w.minCoeff() > 0)) throw Error(ErrorCode::EmptyInterior, "degenerate box");
      for (int i = 1; i <= stages; ++i) {
        Point g = w * std::ldexp(1.0, -i);
        EIMember m{Region::box(u.lo + g, u.hi - g), g.minCoeff(), 0.0};
        m.radius = (w - g).minCoeff();
        m.region.anchor = u.anchor;
        fam.members.push_back(m);
      }
      break;
    }
    case RegionKind::WholeSpace: {
      for (int i = 1; i <= stages; ++i) fam.members.push_back({u, 1.0, kInf});
      break;
    }
    case RegionKind::Explicit: {
      if (!u.margin) throw Error(ErrorCode::EmptyInterior, "no interior certificate");
      auto parent = std::make_shared<Region>(u);
      Point a = u.sampling_anchor();
      double scale = (u.window.hi - u.window.lo).maxCoeff() / 2.0;
      for (int i = 1; i <= stages; ++i) {
        double g = scale * std::ldexp(1.0, -i - 1);
        auto s = std::make_shared<SetOracle>();
        s->dim = u.dim();
        s->contains = [parent, g](const Point& x) {
          return parent->contains(x) && parent->margin_of(x) >= g;
        };
        s->dist = [parent, g](const Point& x) {
          return std::max(0.0, g - parent->margin_of(x)) + parent->dist_to(x);
        };
        Region r = Region::from_set(s, u.window, [parent, g](const Point& x) {
          return std::max(0.0, parent->margin_of(x) - g);
        });
        r.anchor = a;
        fam.members.push_back({r, g, 0.0});
      }
      break;
    }
  }
  return fam;
}

enum class VerdictStatus { Holds, Fails, Inconclusive };

inline const char* to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Holds: return "HOLDS";
    case VerdictStatus::Fails: return "FAILS";
    case VerdictStatus::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

/// Outcome of a one-sided numerical test. HOLDS is evidence, not proof.
struct Verdict {
  VerdictStatus status = VerdictStatus::Inconclusive;
  std::vector<Point> witness;
  double finest_resolution = 0.0;
  std::string trend;
  std::string note;

  static Verdict holds(std::string note = {}) {
    Verdict v;
    v.status = VerdictStatus::Holds;
    v.note = std::move(note);
    return v;
  }
  static Verdict fails(std::vector<Point> witness, std::string note = {}) {
    Verdict v;
    v.status = VerdictStatus::Fails;
    v.witness = std::move(witness);
    v.note = std::move(note);
    return v;
  }
  static Verdict inconclusive(double res, std::string trend, std::string note = {}) {
    Verdict v;
    v.finest_resolution = res;
    v.trend = std::move(trend);
    v.note = std::move(note);
    return v;
  }
  bool is_holds() const { return status == VerdictStatus::Holds; }
  bool is_fails() const { return status == VerdictStatus::Fails; }
};

}  // namespace decouple
