#pragma once

#include <ndmc/core.hpp>

#include <string>
#include <vector>

namespace ndmc {

/// Discrete-time samples stored row by row in one flat buffer.
struct SampleChain {
  Index dim = 0;
  std::vector<double> data;
  std::vector<char> accepted;  // filled by Metropolis-adjusted steppers only
  double wall_time = 0.0;      // seconds spent sampling
  bool diverged = false;
  std::string diagnostic;

  SampleChain() = default;
  explicit SampleChain(Index d) : dim(d) {}

  std::size_t size() const { return dim == 0 ? 0 : data.size() / static_cast<std::size_t>(dim); }
  bool empty() const { return size() == 0; }

  void push(const Vec& x) {
    if (dim == 0) dim = x.size();
    if (x.size() != dim) throw InvalidArgument("SampleChain: state dimension mismatch");
    data.insert(data.end(), x.data(), x.data() + x.size());
  }

  Eigen::Map<const Vec> state(std::size_t k) const {
    return Eigen::Map<const Vec>(data.data() + k * static_cast<std::size_t>(dim), dim);
  }

  /// All values of coordinate i, in order.
  Vec coordinate(Index i) const {
    if (i < 0 || i >= dim) throw InvalidArgument("SampleChain: coordinate out of range");
    Vec out(static_cast<Index>(size()));
    for (std::size_t k = 0; k < size(); ++k) out[static_cast<Index>(k)] = data[k * dim + i];
    return out;
  }

  double acceptance_rate() const {
    if (accepted.empty()) return 1.0;
    std::size_t a = 0;
    for (char c : accepted) a += c != 0;
    return static_cast<double>(a) / static_cast<double>(accepted.size());
  }
};

}  // namespace ndmc
