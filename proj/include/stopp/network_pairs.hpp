#pragma once

#include <span>
#include <vector>

#include "stopp/geometry.hpp"
#include "stopp/parallel.hpp"

namespace stopp {

/// Pairwise shortest-path distances between a set of network locations and,
/// optionally, the geometric multiplicity count_at(d(i, j)) seen from i.
/// One Dijkstra per location; rows are computed in parallel.
class NetworkPairs {
 public:
  NetworkPairs() = default;

  NetworkPairs(const LinearNetwork& net, std::span<const NetworkLocation> locs, bool with_counts)
      : n_(locs.size()), dist_(n_ * n_, 0.0) {
    if (with_counts) counts_.assign(n_ * n_, 1);
    parallel_for(n_, [&](std::size_t i) {
      DistanceField field(net, locs[i]);
      for (std::size_t j = 0; j < n_; ++j) {
        if (j == i) continue;
        double d = field.to(locs[j]);
        dist_[i * n_ + j] = d;
        if (with_counts && std::isfinite(d)) counts_[i * n_ + j] = field.count_at(d);
      }
    });
    // Use the row of the smaller index for both orders so d(i, j) == d(j, i).
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) dist_[j * n_ + i] = dist_[i * n_ + j];
  }

  std::size_t size() const { return n_; }
  bool has_counts() const { return !counts_.empty(); }
  double distance(std::size_t i, std::size_t j) const { return dist_[i * n_ + j]; }
  /// Number of network locations at distance d(i, j) from location i.
  int count(std::size_t i, std::size_t j) const { return counts_[i * n_ + j]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> dist_;
  std::vector<int> counts_;
};

}  // namespace stopp
