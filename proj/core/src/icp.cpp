#include "scopekit/icp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scopekit/error.hpp"
#include "scopekit/kdtree.hpp"
#include "scopekit/parallel.hpp"

namespace scopekit {
namespace {

class CloudTarget final : public NearestTarget {
 public:
  explicit CloudTarget(const PointCloud& cloud) : unit_(cloud.unit) {
    coords_.reserve(cloud.size() * 3);
    for (const auto& p : cloud.points) coords_.insert(coords_.end(), {p.x(), p.y(), p.z()});
    tree_ = std::make_unique<KdTree<double>>(coords_.data(), cloud.size(), 3);
  }

  [[nodiscard]] Eigen::Vector3d closest(const Eigen::Vector3d& p) const override {
    const auto nn = tree_->knn(p.data(), 1);
    const double* q = coords_.data() + 3 * nn.front().index;
    return {q[0], q[1], q[2]};
  }
  [[nodiscard]] LengthUnit unit() const override { return unit_; }

 private:
  LengthUnit unit_;
  std::vector<double> coords_;
  std::unique_ptr<KdTree<double>> tree_;
};

class MeshTarget final : public NearestTarget {
 public:
  explicit MeshTarget(const TriMesh& mesh) : mesh_(mesh) {
    order_.resize(mesh_.faces.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    centroids_.reserve(mesh_.faces.size());
    for (const auto& f : mesh_.faces) centroids_.push_back((vertex(f[0]) + vertex(f[1]) + vertex(f[2])) / 3.0);
    nodes_.reserve(2 * mesh_.faces.size());
    build(0, order_.size());
  }

  [[nodiscard]] Eigen::Vector3d closest(const Eigen::Vector3d& p) const override {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Vector3d best_point = p;
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      if (box_distance2(n, p) >= best) continue;
      if (n.left == 0) {
        for (std::size_t i = n.begin; i < n.end; ++i) {
          const auto& f = mesh_.faces[order_[i]];
          const Eigen::Vector3d q = closest_point_on_triangle(p, vertex(f[0]), vertex(f[1]), vertex(f[2]));
          const double d = (q - p).squaredNorm();
          if (d < best) {
            best = d;
            best_point = q;
          }
        }
        continue;
      }
      const double dl = box_distance2(nodes_[n.left], p);
      const double dr = box_distance2(nodes_[n.right], p);
      if (dl <= dr) {
        stack.push_back(n.right);
        stack.push_back(n.left);
      } else {
        stack.push_back(n.left);
        stack.push_back(n.right);
      }
    }
    return best_point;
  }
  [[nodiscard]] LengthUnit unit() const override { return mesh_.unit; }

 private:
  struct Node {
    Eigen::Vector3d lo, hi;
    std::size_t begin = 0, end = 0;
    std::size_t left = 0, right = 0;  // left == 0 marks a leaf
  };

  [[nodiscard]] const Eigen::Vector3d& vertex(int i) const { return mesh_.vertices[static_cast<std::size_t>(i)]; }

  static double box_distance2(const Node& n, const Eigen::Vector3d& p) {
    const Eigen::Vector3d d = (n.lo - p).cwiseMax(p - n.hi).cwiseMax(0.0);
    return d.squaredNorm();
  }

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({});
    Node n;
    n.begin = begin;
    n.end = end;
    n.lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    n.hi = -n.lo;
    Eigen::Vector3d clo = n.lo, chi = n.hi;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& f = mesh_.faces[order_[i]];
      for (int v : f) {
        n.lo = n.lo.cwiseMin(vertex(v));
        n.hi = n.hi.cwiseMax(vertex(v));
      }
      clo = clo.cwiseMin(centroids_[order_[i]]);
      chi = chi.cwiseMax(centroids_[order_[i]]);
    }
    if (end - begin > 4) {
      int axis = 0;
      (chi - clo).maxCoeff(&axis);
      const std::size_t mid = begin + (end - begin) / 2;
      std::nth_element(order_.begin() + static_cast<long>(begin), order_.begin() + static_cast<long>(mid),
                       order_.begin() + static_cast<long>(end), [&](std::size_t a, std::size_t b) {
                         const double ca = centroids_[a][axis];
                         const double cb = centroids_[b][axis];
                         return ca != cb ? ca < cb : a < b;
                       });
      n.left = build(begin, mid);
      n.right = build(mid, end);
    }
    nodes_[id] = n;
    return id;
  }

  TriMesh mesh_;
  std::vector<std::size_t> order_;
  std::vector<Eigen::Vector3d> centroids_;
  std::vector<Node> nodes_;
};

}  // namespace

std::unique_ptr<NearestTarget> make_cloud_target(const PointCloud& target) {
  target.validate();
  if (target.size() < 3) fail(ErrorCode::kTooFewPoints, "target cloud needs at least 3 points");
  return std::make_unique<CloudTarget>(target);
}

std::unique_ptr<NearestTarget> make_mesh_target(const TriMesh& target) {
  target.validate();
  if (target.faces.empty() || target.vertices.size() < 3) fail(ErrorCode::kTooFewPoints, "target mesh is empty");
  return std::make_unique<MeshTarget>(target);
}

IcpResult icp(const PointCloud& source, const NearestTarget& target, const Pose& init, const IcpOptions& opts) {
  source.validate();
  if (source.size() < 3) fail(ErrorCode::kTooFewPoints, "source cloud needs at least 3 points");
  if (opts.max_iterations < 1 || !(opts.rmse_delta_cm > 0.0) || opts.max_increases < 1) {
    fail(ErrorCode::kInvalidArgument, "invalid ICP options");
  }
  if (target.unit() != source.unit) fail(ErrorCode::kInvalidArgument, "source and target units differ");

  const std::size_t n = source.size();
  const double cm = to_centimeters(source.unit);
  std::vector<Eigen::Vector3d> moved(n), matched(n);
  std::vector<double> dist(n);
  IcpResult out;
  Pose T = init;
  int increases = 0;

  const auto correspond = [&](const Pose& pose) {
    parallel_for(0, n, [&](std::size_t i) {
      moved[i] = pose * source.points[i];
      matched[i] = target.closest(moved[i]);
      dist[i] = (matched[i] - moved[i]).norm();
    });
    double ss = 0.0;
    for (double d : dist) ss += d * d;
    return std::sqrt(ss / static_cast<double>(n));
  };

  for (int it = 0; it < opts.max_iterations; ++it) {
    const double rmse = correspond(T);
    out.rmse_cm.push_back(rmse * cm);
    out.transform = T;
    out.rmse = rmse;
    out.distances = dist;
    if (rmse == 0.0) {
      out.converged = true;
      break;
    }
    if (out.rmse_cm.size() >= 2) {
      const double prev = out.rmse_cm[out.rmse_cm.size() - 2];
      const double cur = out.rmse_cm.back();
      if (std::abs(cur - prev) < opts.rmse_delta_cm) {
        out.converged = true;
        break;
      }
      increases = cur > prev ? increases + 1 : 0;
      if (increases >= opts.max_increases) fail(ErrorCode::kDiverged, "ICP RMSE kept increasing");
    }
    if (it + 1 == opts.max_iterations) break;
    const Similarity step = fit_similarity(moved, matched, false);
    const Pose composed = Pose(step.R, step.t) * T;
    T = Pose(nearest_rotation(composed.rotation_matrix()), composed.translation());
  }
  return out;
}

IcpResult icp(const PointCloud& source, const PointCloud& target, const Pose& init, const IcpOptions& opts) {
  return icp(source, *make_cloud_target(convert_units(target, source.unit)), init, opts);
}

IcpResult icp(const PointCloud& source, const TriMesh& target, const Pose& init, const IcpOptions& opts) {
  return icp(source, *make_mesh_target(convert_units(target, source.unit)), init, opts);
}

Pose initial_alignment(std::span<const Eigen::Vector3d> source, std::span<const Eigen::Vector3d> target) {
  if (source.size() != target.size()) fail(ErrorCode::kInvalidArgument, "alignment pairs must match one to one");
  if (source.size() < 2) fail(ErrorCode::kTooFewPoints, "alignment needs at least two point pairs");
  if (source.size() >= 3) {
    const Similarity s = fit_similarity(source, target, false);
    return {s.R, s.t};
  }
  const Eigen::Vector3d u = source[1] - source[0];
  const Eigen::Vector3d v = target[1] - target[0];
  if (u.norm() < 1e-12 || v.norm() < 1e-12) fail(ErrorCode::kDegenerateGeometry, "alignment segment has zero length");
  const Eigen::Matrix3d R = Eigen::Quaterniond::FromTwoVectors(u, v).toRotationMatrix();
  const Eigen::Vector3d t = 0.5 * (target[0] + target[1]) - R * (0.5 * (source[0] + source[1]));
  return {R, t};
}

}  // namespace scopekit
