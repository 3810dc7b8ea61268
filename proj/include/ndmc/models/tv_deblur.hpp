#pragma once

#include <ndmc/model.hpp>

#include <fstream>
#include <map>
#include <sstream>

namespace ndmc {

/// Symmetric padding: index -1 maps to 0, n to n - 1.
inline Index reflect_index(Index k, Index n) {
  while (k < 0 || k >= n) k = k < 0 ? -k - 1 : 2 * n - k - 1;
  return k;
}

/// 5x5 uniform blur with symmetric boundary. Preserves constants.
inline Mat blur5(const Mat& x) {
  const Index n = x.rows(), m = x.cols();
  Mat out = Mat::Zero(n, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (Index b = -2; b <= 2; ++b)
        for (Index a = -2; a <= 2; ++a) s += x(reflect_index(i + a, n), reflect_index(j + b, m));
      out(i, j) = s / 25.0;
    }
  return out;
}

/// Image deblurring posterior
///   U(x) = ||H x - y||^2 / (2 sigma^2) + alpha TV(x)
/// on a rows x cols image stored column-major.
///
/// Factors: one TV term per pixel (the pixel and its lower and right
/// neighbours) and one likelihood term per pixel (the distinct pixels of its
/// reflected 5x5 window, with multiplicities folded into the weights).
class TvDeblur final : public TargetModel {
 public:
  TvDeblur(Mat y, double sigma = 0.47, double alpha = 0.03, double prox_tol = 1e-6, int prox_max_iter = 500)
      : y_(std::move(y)), sigma_(sigma), alpha_(alpha) {
    require(y_.rows() >= 8 && y_.cols() >= 8, "TvDeblur: image must be at least 8x8");
    require(sigma_ > 0.0 && alpha_ > 0.0, "TvDeblur: sigma and alpha must be positive");
    const Index n = y_.rows(), m = y_.cols();
    build_windows();

    const double s2 = sigma_ * sigma_, a = alpha_;
    const Mat yy = y_;
    split_.smooth_potential = [this](const Vec& x) { return likelihood(x); };
    split_.smooth_gradient = [this](const Vec& x, Vec& g) { likelihood_gradient(x, g); };
    split_.nonsmooth_potential = [n, m, a](const Vec& x) { return a * tv::value(Eigen::Map<const Mat>(x.data(), n, m)); };
    split_.prox.kind = ProxKind::TV2D;
    split_.prox.alpha = alpha_;
    split_.prox.rows = n;
    split_.prox.cols = m;
    split_.prox.tol = prox_tol;
    split_.prox.max_iter = prox_max_iter;

    // TV factors
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i < n; ++i) {
        if (i + 1 >= n && j + 1 >= m) continue;
        Factor f;
        f.coords.push_back(pix(i, j));
        const bool down = i + 1 < n, right = j + 1 < m;
        if (down) f.coords.push_back(pix(i + 1, j));
        if (right) f.coords.push_back(pix(i, j + 1));
        // local layout: [p, down?, right?]
        const int kd = down ? 1 : -1, kr = right ? (down ? 2 : 1) : -1;
        auto diffs = [kd, kr](const Vec& z, double& dv, double& dh) {
          dv = kd >= 0 ? z[kd] - z[0] : 0.0;
          dh = kr >= 0 ? z[kr] - z[0] : 0.0;
        };
        f.potential = [a, diffs](const Vec& z) {
          double dv, dh;
          diffs(z, dv, dh);
          return a * std::hypot(dv, dh);
        };
        f.gradient = [a, diffs, kd, kr](const Vec& z, Vec& g) {
          double dv, dh;
          diffs(z, dv, dh);
          g = Vec::Zero(z.size());
          const double r = std::hypot(dv, dh);
          if (r == 0.0) return;
          if (kd >= 0) g[kd] += a * dv / r;
          if (kr >= 0) g[kr] += a * dh / r;
          g[0] -= a * (dv + dh) / r;
        };
        BoundStrategy b;
        b.kind = BoundKind::Constant;
        b.payload = [a, diffs](const Vec&, const Vec& v, double) {
          double dv, dh;
          diffs(v, dv, dh);
          return LinearBound{a * std::hypot(dv, dh), 0.0};
        };
        b.lookahead_theta = 1.0;
        f.rate_bound = b;
        factors_.push_back(std::move(f));
      }

    // likelihood factors
    for (Index p = 0; p < n * m; ++p) {
      const Window& w = windows_[static_cast<std::size_t>(p)];
      Factor f;
      f.coords = w.coords;
      const Vec wt = w.weights;
      const double yp = yy.data()[p];
      f.potential = [wt, yp, s2](const Vec& z) {
        const double r = wt.dot(z) - yp;
        return r * r / (2.0 * s2);
      };
      f.gradient = [wt, yp, s2](const Vec& z, Vec& g) { g = wt * ((wt.dot(z) - yp) / s2); };
      f.exact_rate = [wt, yp, s2](const Vec& z, const Vec& v) {
        const double r = wt.dot(z) - yp, s = wt.dot(v);
        return RateFamily{LinearRate{r * s / s2, s * s / s2}};
      };
      factors_.push_back(std::move(f));
    }
  }

  TvDeblur(const TvDeblur&) = delete;
  TvDeblur& operator=(const TvDeblur&) = delete;

  std::string name() const override { return "tv_deblur"; }
  Index dim() const override { return y_.size(); }
  Index rows() const { return y_.rows(); }
  Index cols() const { return y_.cols(); }
  const Mat& observation() const { return y_; }

  Vec blur(const Vec& x) const {
    const Mat b = blur5(Eigen::Map<const Mat>(x.data(), rows(), cols()));
    return Eigen::Map<const Vec>(b.data(), b.size());
  }

  double likelihood(const Vec& x) const {
    const Vec r = blur(x) - Eigen::Map<const Vec>(y_.data(), y_.size());
    return r.squaredNorm() / (2.0 * sigma_ * sigma_);
  }

  /// H^T (H x - y) / sigma^2, using the folded window weights.
  void likelihood_gradient(const Vec& x, Vec& g) const {
    const Vec r = blur(x) - Eigen::Map<const Vec>(y_.data(), y_.size());
    g = Vec::Zero(x.size());
    for (std::size_t p = 0; p < windows_.size(); ++p) {
      const Window& w = windows_[p];
      for (std::size_t k = 0; k < w.coords.size(); ++k) g[w.coords[k]] += w.weights[static_cast<Index>(k)] * r[static_cast<Index>(p)];
    }
    g /= sigma_ * sigma_;
  }

  double potential(const Vec& x) const override {
    return likelihood(x) + alpha_ * tv::value(Eigen::Map<const Mat>(x.data(), rows(), cols()));
  }

  /// TV is not differentiable in the coordinates of a term whose local
  /// difference vector vanishes.
  bool nondifferentiable(Index q, const Vec& x) const override {
    const Index n = rows(), m = cols();
    const Index i = q % n, j = q / n;
    auto zero_term = [&](Index a, Index b) {
      if (a < 0 || b < 0 || (a + 1 >= n && b + 1 >= m)) return false;
      const double dv = a + 1 < n ? x[pix(a + 1, b)] - x[pix(a, b)] : 0.0;
      const double dh = b + 1 < m ? x[pix(a, b + 1)] - x[pix(a, b)] : 0.0;
      return dv == 0.0 && dh == 0.0;
    };
    return zero_term(i, j) || zero_term(i - 1, j) || zero_term(i, j - 1);
  }

  double partial(Index i, const Vec& x) const override {
    if (nondifferentiable(i, x)) return 0.0;
    Vec g;
    gradient(x, g);
    return g[i];
  }

  void gradient(const Vec& x, Vec& g) const override {
    likelihood_gradient(x, g);
    const Index n = rows(), m = cols();
    const Eigen::Map<const Mat> u(x.data(), n, m);
    Mat gv, gh;
    tv::gradient(u, gv, gh);
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i < n; ++i) {
        const double r = std::hypot(gv(i, j), gh(i, j));
        if (r == 0.0) continue;
        const double cv = alpha_ * gv(i, j) / r, ch = alpha_ * gh(i, j) / r;
        if (i + 1 < n) g[pix(i + 1, j)] += cv;
        if (j + 1 < m) g[pix(i, j + 1)] += ch;
        g[pix(i, j)] -= cv + ch;
      }
    for (Index q = 0; q < x.size(); ++q)
      if (nondifferentiable(q, x)) g[q] = 0.0;
  }

  const SmoothSplit* split() const override { return &split_; }
  const std::vector<Factor>* factors() const override { return &factors_; }

 private:
  struct Window {
    std::vector<Index> coords;
    Vec weights;
  };

  Index pix(Index i, Index j) const { return i + j * y_.rows(); }

  void build_windows() {
    const Index n = rows(), m = cols();
    windows_.resize(static_cast<std::size_t>(n * m));
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i < n; ++i) {
        std::map<Index, int> count;
        for (Index b = -2; b <= 2; ++b)
          for (Index a = -2; a <= 2; ++a) ++count[pix(reflect_index(i + a, n), reflect_index(j + b, m))];
        Window& w = windows_[static_cast<std::size_t>(pix(i, j))];
        w.weights.resize(static_cast<Index>(count.size()));
        Index k = 0;
        for (const auto& [c, cnt] : count) {
          w.coords.push_back(c);
          w.weights[k++] = cnt / 25.0;
        }
      }
  }

  Mat y_;
  double sigma_, alpha_;
  std::vector<Window> windows_;
  SmoothSplit split_;
  std::vector<Factor> factors_;
};

/// Piecewise-constant test image with intensities in [0, 1]: a bright
/// square, a mid-grey disc and a dark bar on a light background.
inline Mat test_image(Index n) {
  Mat x = Mat::Constant(n, n, 0.8);
  const double c = static_cast<double>(n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      const double u = i / c, v = j / c;
      if (u > 0.15 && u < 0.45 && v > 0.15 && v < 0.45) x(i, j) = 1.0;
      if ((u - 0.65) * (u - 0.65) + (v - 0.65) * (v - 0.65) < 0.04) x(i, j) = 0.4;
      if (u > 0.7 && u < 0.85 && v > 0.1 && v < 0.5) x(i, j) = 0.0;
    }
  return x;
}

/// Blurs `truth` and adds N(0, sigma^2) noise.
inline Mat blurred_observation(const Mat& truth, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Mat y = blur5(truth);
  for (Index k = 0; k < y.size(); ++k) y.data()[k] += normal(rng);
  return y;
}

inline ModelPtr build_tv_deblur(const Mat& y, double sigma = 0.47, double alpha = 0.03) {
  return std::make_shared<TvDeblur>(y, sigma, alpha);
}

// ---------------------------------------------------------------------------
// Portable graymap IO

/// Reads a P2 (text) or P5 (binary, 8-bit) graymap; values scaled to [0, 1].
inline Mat read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("read_pgm: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P2" && magic != "P5") throw InvalidArgument("read_pgm: not a PGM file: " + path);
  auto next_int = [&]() {
    while (in >> std::ws && in.peek() == '#') {
      std::string skip;
      std::getline(in, skip);
    }
    long v;
    if (!(in >> v)) throw InvalidArgument("read_pgm: malformed header in " + path);
    return v;
  };
  const long w = next_int(), h = next_int(), maxval = next_int();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) throw InvalidArgument("read_pgm: unsupported header in " + path);
  Mat img(h, w);
  if (magic == "P2") {
    for (long i = 0; i < h; ++i)
      for (long j = 0; j < w; ++j) img(i, j) = static_cast<double>(next_int()) / static_cast<double>(maxval);
  } else {
    in.get();
    for (long i = 0; i < h; ++i)
      for (long j = 0; j < w; ++j) {
        const int c = in.get();
        if (c == EOF) throw InvalidArgument("read_pgm: truncated data in " + path);
        img(i, j) = static_cast<double>(c) / static_cast<double>(maxval);
      }
  }
  return img;
}

/// Writes a P2 graymap, clamping values to [0, 1] and scaling to 0..255.
inline void write_pgm(const std::string& path, const Mat& img) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("write_pgm: cannot open " + path);
  out << "P2\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  for (Index i = 0; i < img.rows(); ++i) {
    for (Index j = 0; j < img.cols(); ++j) {
      const double v = std::clamp(img(i, j), 0.0, 1.0);
      out << static_cast<int>(std::lround(v * 255.0)) << (j + 1 < img.cols() ? ' ' : '\n');
    }
  }
}

}  // namespace ndmc
