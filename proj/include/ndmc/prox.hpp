#pragma once

// Proximal operators: closed-form (weighted L1, nuclear norm), dual projection
// for isotropic 2D total variation, and a cutting-plane solver for generic
// convex functions given through a subgradient oracle.

#include <ndmc/core.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <functional>
#include <optional>
#include <vector>

namespace ndmc {

/// Answer of a convex oracle at a query point u.
///
/// For a finite-valued g, `feasible` is true, `value` = g(u) and `subgradient`
/// is any element of the subdifferential. Extended-valued functions (indicators
/// of closed convex sets) answer outside their domain with `feasible = false`,
/// `value` = c(u) > 0 for a convex constraint function c with dom g = {c <= 0},
/// and `subgradient` an element of the subdifferential of c at u.
struct Cut {
  bool feasible = true;
  double value = 0.0;
  Vec subgradient;
};

using ConvexOracle = std::function<Cut(const Vec&)>;

enum class ProxKind { L1Weighted, NuclearNorm, TV2D, NumericGeneric };

/// Parameters of a proximal map. `lambda` is the envelope tightness.
struct ProxSpec {
  ProxKind kind = ProxKind::L1Weighted;
  double lambda = 1.0;
  Vec weights;              // L1
  double alpha = 1.0;       // nuclear, TV
  Index rows = 0, cols = 0; // nuclear, TV: vectors are column-major matrices
  double tol = 1e-6;        // TV, numeric
  int max_iter = 500;       // TV, numeric
  ConvexOracle oracle;      // numeric

  void validate() const {
    require(lambda > 0.0, "ProxSpec: lambda must be positive");
    require(tol > 0.0, "ProxSpec: tolerance must be positive");
    switch (kind) {
      case ProxKind::L1Weighted:
        require((weights.array() > 0.0).all(), "ProxSpec: L1 weights must be strictly positive");
        break;
      case ProxKind::NuclearNorm:
      case ProxKind::TV2D:
        require(alpha > 0.0, "ProxSpec: alpha must be positive");
        require(rows > 0 && cols > 0, "ProxSpec: matrix shape required");
        break;
      case ProxKind::NumericGeneric:
        require(static_cast<bool>(oracle), "ProxSpec: numeric prox needs an oracle");
        break;
    }
  }
};

struct ProxResult {
  Vec point;                // minimizer p
  double objective = 0.0;   // g(p) + ||x - p||^2 / (2 lambda)
  int iterations = 0;       // 0 for closed forms
  bool converged = true;
  Vec dual;                 // TV: final dual field, usable as a warm start
};

// ---------------------------------------------------------------------------
// Weighted L1

inline ProxResult prox_l1(const Vec& x, double lambda, const Vec& weights) {
  require(lambda > 0.0, "prox_l1: lambda must be positive");
  if (x.size() != weights.size()) throw InvalidArgument("prox_l1: dimension mismatch");
  require((weights.array() > 0.0).all(), "prox_l1: weights must be strictly positive");
  ProxResult r;
  r.point.resize(x.size());
  double g = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double shrunk = std::max(std::abs(x[i]) - lambda * weights[i], 0.0);
    r.point[i] = sgn(x[i]) * shrunk;
    g += weights[i] * shrunk;
  }
  r.objective = g + (x - r.point).squaredNorm() / (2.0 * lambda);
  return r;
}

// ---------------------------------------------------------------------------
// Nuclear norm

inline double nuclear_norm(const Mat& X) {
  Eigen::JacobiSVD<Mat> svd(X);
  return svd.singularValues().sum();
}

/// Singular value soft thresholding. The returned point is column-major.
inline ProxResult prox_nuclear(const Mat& X, double lambda, double alpha) {
  require(lambda > 0.0 && alpha > 0.0, "prox_nuclear: lambda and alpha must be positive");
  if (!X.allFinite()) throw NumericalFailure("prox_nuclear: non-finite input to SVD", 0);
  Eigen::JacobiSVD<Mat> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw NumericalFailure("prox_nuclear: SVD did not converge", 0);
  const Vec shrunk = (svd.singularValues().array() - alpha * lambda).max(0.0).matrix();
  Mat P = svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
  ProxResult r;
  r.point = Eigen::Map<const Vec>(P.data(), P.size());
  r.objective = alpha * shrunk.sum() + (X - P).squaredNorm() / (2.0 * lambda);
  return r;
}

// ---------------------------------------------------------------------------
// Isotropic total variation on a rows x cols image.
//
// Forward differences with a zero difference across the last row/column,
// which is the same as symmetric (reflect) padding. The dual field stores
// the vertical component in the first rows*cols entries and the horizontal
// component in the second half.

namespace tv {

inline void gradient(const Mat& u, Mat& gv, Mat& gh) {
  const Index n = u.rows(), m = u.cols();
  gv.setZero(n, m);
  gh.setZero(n, m);
  if (n > 1) gv.topRows(n - 1) = u.bottomRows(n - 1) - u.topRows(n - 1);
  if (m > 1) gh.leftCols(m - 1) = u.rightCols(m - 1) - u.leftCols(m - 1);
}

/// Negative adjoint of `gradient`.
inline Mat divergence(const Mat& pv, const Mat& ph) {
  const Index n = pv.rows(), m = pv.cols();
  Mat d = Mat::Zero(n, m);
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < n; ++i) {
      double dv = 0.0, dh = 0.0;
      if (n > 1) {
        if (i == 0) dv = pv(i, j);
        else if (i == n - 1) dv = -pv(i - 1, j);
        else dv = pv(i, j) - pv(i - 1, j);
      }
      if (m > 1) {
        if (j == 0) dh = ph(i, j);
        else if (j == m - 1) dh = -ph(i, j - 1);
        else dh = ph(i, j) - ph(i, j - 1);
      }
      d(i, j) = dv + dh;
    }
  }
  return d;
}

inline double value(const Mat& u) {
  Mat gv, gh;
  gradient(u, gv, gh);
  return (gv.array().square() + gh.array().square()).sqrt().sum();
}

}  // namespace tv

/// Chambolle's dual projection iteration for
///   argmin_u alpha * TV(u) + ||X - u||^2 / (2 lambda)
/// with step 1/8. Stops when the largest change of the dual field drops below
/// `tol`; otherwise returns the last iterate with `converged = false`.
/// `warm_dual` (from a previous ProxResult::dual) seeds the dual field.
inline ProxResult prox_tv2d(const Mat& X, double lambda, double alpha, double tol, int max_iter,
                            const Vec* warm_dual = nullptr) {
  require(lambda > 0.0 && alpha > 0.0 && tol > 0.0, "prox_tv2d: lambda, alpha, tol must be positive");
  require(max_iter >= 0, "prox_tv2d: max_iter must be nonnegative");
  const Index n = X.rows(), m = X.cols(), npx = n * m;
  const double theta = alpha * lambda;
  constexpr double tau = 0.125;

  Mat pv = Mat::Zero(n, m), ph = Mat::Zero(n, m);
  if (warm_dual != nullptr && warm_dual->size() == 2 * npx) {
    pv = Eigen::Map<const Mat>(warm_dual->data(), n, m);
    ph = Eigen::Map<const Mat>(warm_dual->data() + npx, n, m);
  }

  ProxResult r;
  r.converged = (npx <= 1);
  Mat gv, gh;
  int it = 0;
  if (npx > 1) {
    for (it = 0; it < max_iter;) {
      const Mat w = tv::divergence(pv, ph) - X / theta;
      tv::gradient(w, gv, gh);
      double change = 0.0;
      for (Index j = 0; j < m; ++j) {
        for (Index i = 0; i < n; ++i) {
          const double norm = std::hypot(gv(i, j), gh(i, j));
          const double denom = 1.0 + tau * norm;
          const double nv = (pv(i, j) + tau * gv(i, j)) / denom;
          const double nh = (ph(i, j) + tau * gh(i, j)) / denom;
          change = std::max({change, std::abs(nv - pv(i, j)), std::abs(nh - ph(i, j))});
          pv(i, j) = nv;
          ph(i, j) = nh;
        }
      }
      ++it;
      if (change < tol) {
        r.converged = true;
        break;
      }
    }
  }
  const Mat U = X - theta * tv::divergence(pv, ph);
  r.point = Eigen::Map<const Vec>(U.data(), npx);
  r.iterations = it;
  r.objective = alpha * tv::value(U) + (X - U).squaredNorm() / (2.0 * lambda);
  r.dual.resize(2 * npx);
  Eigen::Map<Mat>(r.dual.data(), n, m) = pv;
  Eigen::Map<Mat>(r.dual.data() + npx, n, m) = ph;
  return r;
}

/// Per-pixel duality gap TV(u) + <p, grad u> of a prox_tv2d result. Since
/// X - u = alpha lambda div p with |p_ij| <= 1, the gap is zero exactly when
/// (X - u)/lambda lies in alpha * dTV(u).
inline double prox_tv2d_gap(const ProxResult& r, Index rows, Index cols) {
  const Index npx = rows * cols;
  const Mat U = Eigen::Map<const Mat>(r.point.data(), rows, cols);
  const Mat pv = Eigen::Map<const Mat>(r.dual.data(), rows, cols);
  const Mat ph = Eigen::Map<const Mat>(r.dual.data() + npx, rows, cols);
  Mat gv, gh;
  tv::gradient(U, gv, gh);
  const double pairing = (pv.array() * gv.array() + ph.array() * gh.array()).sum();
  return (tv::value(U) + pairing) / static_cast<double>(npx);
}

// ---------------------------------------------------------------------------
// Generic convex g through a subgradient oracle.
//
// Cutting-plane model of g plus the exact quadratic ||x - u||^2/(2 lambda).
// Each model subproblem is solved through its dual, a concave quadratic over
// (simplex for objective cuts) x (nonnegative orthant for constraint cuts),
// by pairwise coordinate ascent with exact line search.

namespace detail {

struct CutBundle {
  std::vector<Vec> s;        // objective cut slopes
  std::vector<double> c;     // objective cut offsets: l_j(v) = c_j + s_j.v
  std::vector<double> theta; // simplex weights
  std::vector<Vec> f;        // constraint cut slopes
  std::vector<double> d;     // constraint offsets: d_k + f_k.v <= 0
  std::vector<double> mu;    // multipliers
};

/// Solves the dual of min_v max_j l_j(v) + ||x - v||^2/(2 lambda) s.t. cuts.
/// Returns v = x - lambda (S theta + F mu).
inline Vec solve_cut_model(CutBundle& b, const Vec& x, double lambda) {
  const std::size_t m = b.s.size(), q = b.f.size();
  Vec w = Vec::Zero(x.size());
  for (std::size_t j = 0; j < m; ++j) w += b.theta[j] * b.s[j];
  for (std::size_t k = 0; k < q; ++k) w += b.mu[k] * b.f[k];
  if (m + q == 0) return x;

  std::vector<double> lv(m), cv(q);
  for (int sweep = 0; sweep < 200000; ++sweep) {
    const Vec v = x - lambda * w;
    double scale = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      lv[j] = b.c[j] + b.s[j].dot(v);
      scale = std::max(scale, std::abs(lv[j]));
    }
    for (std::size_t k = 0; k < q; ++k) {
      cv[k] = b.d[k] + b.f[k].dot(v);
      scale = std::max(scale, std::abs(cv[k]));
    }
    const double eps = 1e-15 * scale;
    bool moved = false;

    if (m > 1) {
      std::size_t up = 0, down = m;
      for (std::size_t j = 0; j < m; ++j) {
        if (lv[j] > lv[up]) up = j;
        if (b.theta[j] > 0.0 && (down == m || lv[j] < lv[down])) down = j;
      }
      if (down != m && up != down && lv[up] - lv[down] > eps) {
        const Vec dir = b.s[up] - b.s[down];
        const double curv = lambda * dir.squaredNorm();
        double step = b.theta[down];
        if (curv > 0.0) step = std::min(step, (lv[up] - lv[down]) / curv);
        b.theta[up] += step;
        b.theta[down] -= step;
        if (b.theta[down] < 1e-300) b.theta[down] = 0.0;
        w += step * dir;
        moved = step > 0.0;
      }
    }
    for (std::size_t k = 0; k < q; ++k) {
      const double fn = b.f[k].squaredNorm();
      if (fn == 0.0) continue;
      const double ck = b.d[k] + b.f[k].dot(x - lambda * w);
      if (ck > eps || (b.mu[k] > 0.0 && ck < -eps)) {
        const double next = std::max(0.0, b.mu[k] + ck / (lambda * fn));
        const double delta = next - b.mu[k];
        if (delta != 0.0) {
          b.mu[k] = next;
          w += delta * b.f[k];
          moved = true;
        }
      }
    }
    if (!moved) break;
  }
  return x - lambda * w;
}

}  // namespace detail

/// Proximal point of a convex g given through `oracle`, warm-started at x.
/// Stops when successive model minimizers differ by less than `tol` in
/// Euclidean norm; `converged = false` if `max_iter` is reached first.
inline ProxResult prox_numeric(const ConvexOracle& oracle, const Vec& x, double lambda,
                               double tol = 1e-10, int max_iter = 10000) {
  require(lambda > 0.0 && tol > 0.0, "prox_numeric: lambda and tol must be positive");
  require(static_cast<bool>(oracle), "prox_numeric: empty oracle");
  constexpr std::size_t kMaxCuts = 200;

  detail::CutBundle b;
  Vec u = x;
  ProxResult r;
  r.converged = false;
  Cut cut;
  int it = 0;
  for (it = 1; it <= max_iter; ++it) {
    cut = oracle(u);
    if (cut.subgradient.size() != x.size())
      throw InvalidArgument("prox_numeric: oracle subgradient has wrong dimension");
    if (cut.feasible) {
      if (b.s.size() >= kMaxCuts) {
        // drop the oldest inactive cut
        for (std::size_t j = 0; j < b.s.size(); ++j) {
          if (b.theta[j] == 0.0) {
            b.s.erase(b.s.begin() + static_cast<long>(j));
            b.c.erase(b.c.begin() + static_cast<long>(j));
            b.theta.erase(b.theta.begin() + static_cast<long>(j));
            break;
          }
        }
      }
      b.s.push_back(cut.subgradient);
      b.c.push_back(cut.value - cut.subgradient.dot(u));
      b.theta.push_back(b.s.size() == 1 ? 1.0 : 0.0);
    } else {
      b.f.push_back(cut.subgradient);
      b.d.push_back(cut.value - cut.subgradient.dot(u));
      b.mu.push_back(0.0);
    }
    const Vec next = detail::solve_cut_model(b, x, lambda);
    const double step = (next - u).norm();
    u = next;
    if (step < tol) {
      r.converged = true;
      break;
    }
  }
  r.iterations = std::min(it, max_iter);
  r.point = u;
  cut = oracle(u);
  r.objective = cut.feasible ? cut.value + (x - u).squaredNorm() / (2.0 * lambda) : kInf;
  return r;
}

/// Oracle for the weighted L1 norm; subgradient 0 at kinks.
inline ConvexOracle l1_oracle(Vec weights) {
  return [w = std::move(weights)](const Vec& u) {
    Cut c;
    c.value = w.dot(u.cwiseAbs());
    c.subgradient = w.cwiseProduct(u.unaryExpr([](double t) { return sgn(t); }));
    return c;
  };
}

/// Oracle for the indicator of the box [lo, hi]^n.
inline ConvexOracle box_indicator_oracle(double lo, double hi) {
  return [lo, hi](const Vec& u) {
    Cut c;
    c.subgradient = Vec::Zero(u.size());
    double worst = 0.0;
    Index at = -1;
    for (Index i = 0; i < u.size(); ++i) {
      const double excess = std::max(u[i] - hi, lo - u[i]);
      if (excess > worst) {
        worst = excess;
        at = i;
      }
    }
    if (at >= 0) {
      c.feasible = false;
      c.value = worst;
      c.subgradient[at] = u[at] > hi ? 1.0 : -1.0;
    }
    return c;
  };
}

/// Dispatches on the spec kind; `lambda` overrides spec.lambda.
inline ProxResult apply_prox(const ProxSpec& spec, const Vec& x, double lambda,
                             const Vec* warm_dual = nullptr) {
  switch (spec.kind) {
    case ProxKind::L1Weighted:
      return prox_l1(x, lambda, spec.weights);
    case ProxKind::NuclearNorm: {
      require(x.size() == spec.rows * spec.cols, "apply_prox: shape mismatch");
      return prox_nuclear(Eigen::Map<const Mat>(x.data(), spec.rows, spec.cols), lambda, spec.alpha);
    }
    case ProxKind::TV2D: {
      require(x.size() == spec.rows * spec.cols, "apply_prox: shape mismatch");
      return prox_tv2d(Eigen::Map<const Mat>(x.data(), spec.rows, spec.cols), lambda, spec.alpha,
                       spec.tol, spec.max_iter, warm_dual);
    }
    case ProxKind::NumericGeneric:
      return prox_numeric(spec.oracle, x, lambda, spec.tol, spec.max_iter);
  }
  throw InvalidArgument("apply_prox: unknown kind");
}

}  // namespace ndmc
