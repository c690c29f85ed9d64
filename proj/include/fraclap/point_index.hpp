#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace fraclap {

// Spatial hash for merging points closer than a tolerance.
// Buckets have side 4*tol so a query only inspects the 3x3 neighbourhood.
class PointIndex {
 public:
  explicit PointIndex(double tol) : tol_(tol > 0 ? tol : 1e-300), bucket_(4.0 * (tol > 0 ? tol : 1e-12)) {}

  // Returns the index of a stored point within tol of p, or -1.
  long find(const Eigen::Vector2d& p) const {
    const auto [bx, by] = key(p);
    long best = -1;
    double best_d = tol_;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        auto it = map_.find(pack(bx + dx, by + dy));
        if (it == map_.end()) continue;
        for (long id : it->second) {
          const double d = (points_[id] - p).norm();
          if (d <= best_d) {
            best_d = d;
            best = id;
          }
        }
      }
    }
    return best;
  }

  // Inserts p unless a point within tol exists; returns the stored index.
  long insert(const Eigen::Vector2d& p) {
    const long hit = find(p);
    if (hit >= 0) return hit;
    return force_insert(p);
  }

  long force_insert(const Eigen::Vector2d& p) {
    const long id = static_cast<long>(points_.size());
    points_.push_back(p);
    const auto [bx, by] = key(p);
    map_[pack(bx, by)].push_back(id);
    return id;
  }

  const std::vector<Eigen::Vector2d>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }

 private:
  std::pair<std::int64_t, std::int64_t> key(const Eigen::Vector2d& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / bucket_)),
            static_cast<std::int64_t>(std::floor(p.y() / bucket_))};
  }
  static std::uint64_t pack(std::int64_t a, std::int64_t b) {
    return (static_cast<std::uint64_t>(a) * 0x9E3779B97F4A7C15ULL) ^ static_cast<std::uint64_t>(b);
  }

  double tol_;
  double bucket_;
  std::vector<Eigen::Vector2d> points_;
  std::unordered_map<std::uint64_t, std::vector<long>> map_;
};

}  // namespace fraclap
