#include "scopekit/homography.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "scopekit/error.hpp"

namespace scopekit {

Homography Homography::from_matrix(const Eigen::Matrix3d& M) {
  const double scale = M.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !M.allFinite()) fail(ErrorCode::kDegenerateGeometry, "homography is zero or non-finite");
  if (std::abs(M(2, 2)) < 1e-12 * scale) fail(ErrorCode::kDegenerateGeometry, "homography has h33 = 0");
  Homography h;
  h.H = M / M(2, 2);
  if (std::abs(h.H.determinant()) < 1e-12) fail(ErrorCode::kDegenerateGeometry, "homography is singular");
  return h;
}

Homography Homography::translation(double tx, double ty) {
  Homography h;
  h.H(0, 2) = tx;
  h.H(1, 2) = ty;
  return h;
}

Eigen::Vector2d Homography::operator()(const Eigen::Vector2d& p) const {
  const Eigen::Vector3d q = H * p.homogeneous();
  return q.hnormalized();
}

Homography Homography::inverse() const { return from_matrix(H.inverse()); }

Homography Homography::operator*(const Homography& b) const { return from_matrix(H * b.H); }

namespace {

Eigen::Matrix3d normalizer(std::span<const Eigen::Vector2d> pts) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double d = 0.0;
  for (const auto& p : pts) d += (p - c).norm();
  d /= static_cast<double>(pts.size());
  if (!(d > 0.0)) fail(ErrorCode::kDegenerateGeometry, "coincident points");
  const double s = M_SQRT2 / d;
  Eigen::Matrix3d T;
  T << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return T;
}

bool collinear(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const Eigen::Vector2d u = b - a;
  const Eigen::Vector2d v = c - a;
  const double cross = u.x() * v.y() - u.y() * v.x();
  return std::abs(cross) <= 1e-9 * std::max(1.0, u.squaredNorm() + v.squaredNorm());
}

bool degenerate_sample(const std::array<const PointMatch*, 4>& s) {
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        if (collinear(s[i]->src, s[j]->src, s[k]->src) || collinear(s[i]->dst, s[j]->dst, s[k]->dst)) return true;
      }
    }
  }
  return false;
}

}  // namespace

Homography fit_homography_dlt(std::span<const PointMatch> matches) {
  const std::size_t n = matches.size();
  if (n < 4) fail(ErrorCode::kInsufficientMatches, "homography needs at least 4 matches");
  std::vector<Eigen::Vector2d> src(n), dst(n);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = matches[i].src;
    dst[i] = matches[i].dst;
  }
  const Eigen::Matrix3d Ts = normalizer(src);
  const Eigen::Matrix3d Td = normalizer(dst);
  Eigen::MatrixXd A(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d p = Ts * src[i].homogeneous();
    const Eigen::Vector3d q = Td * dst[i].homogeneous();
    const auto r = static_cast<Eigen::Index>(2 * i);
    A.row(r) << 0, 0, 0, -q.z() * p.x(), -q.z() * p.y(), -q.z() * p.z(), q.y() * p.x(), q.y() * p.y(), q.y() * p.z();
    A.row(r + 1) << q.z() * p.x(), q.z() * p.y(), q.z() * p.z(), 0, 0, 0, -q.x() * p.x(), -q.x() * p.y(), -q.x() * p.z();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d Hn;
  Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const auto& sv = svd.singularValues();
  if (sv(7) <= 1e-12 * sv(0)) fail(ErrorCode::kDegenerateGeometry, "degenerate point configuration");
  return Homography::from_matrix(Td.inverse() * Hn * Ts);
}

double transfer_error(const Homography& h, const PointMatch& m) { return (h(m.src) - m.dst).norm(); }

namespace {

struct Consensus {
  std::vector<std::size_t> inliers;
  double cost = std::numeric_limits<double>::infinity();
};

Consensus score(const Homography& h, std::span<const PointMatch> matches, double threshold) {
  Consensus c;
  c.cost = 0.0;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const double e = transfer_error(h, matches[i]);
    if (e < threshold) {
      c.inliers.push_back(i);
      c.cost += e * e;
    }
  }
  return c;
}

bool better(const Consensus& a, const Consensus& b) {
  if (a.inliers.size() != b.inliers.size()) return a.inliers.size() > b.inliers.size();
  return a.cost < b.cost;
}

}  // namespace

RansacResult ransac_homography(std::span<const PointMatch> matches, const RansacOptions& opts) {
  const std::size_t n = matches.size();
  if (n < 4) fail(ErrorCode::kInsufficientMatches, "homography needs at least 4 matches");
  if (!(opts.threshold > 0.0) || !(opts.confidence > 0.0 && opts.confidence < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "invalid RANSAC options");
  }

  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  Consensus best;
  best.cost = std::numeric_limits<double>::infinity();
  std::size_t bound = opts.max_iterations;
  std::size_t it = 0;
  for (; it < bound; ++it) {
    std::array<std::size_t, 4> idx{};
    for (int k = 0; k < 4; ++k) {
      bool fresh = false;
      while (!fresh) {
        idx[static_cast<std::size_t>(k)] = pick(rng);
        fresh = std::find(idx.begin(), idx.begin() + k, idx[static_cast<std::size_t>(k)]) == idx.begin() + k;
      }
    }
    std::array<const PointMatch*, 4> sample{};
    std::array<PointMatch, 4> subset{};
    for (std::size_t k = 0; k < 4; ++k) {
      sample[k] = &matches[idx[k]];
      subset[k] = matches[idx[k]];
    }
    if (degenerate_sample(sample)) continue;
    Homography h;
    try {
      h = fit_homography_dlt(subset);
    } catch (const Error&) {
      continue;
    }
    Consensus c = score(h, matches, opts.threshold);
    if (c.inliers.size() >= 4 && (best.inliers.empty() || better(c, best))) {
      best = std::move(c);
      const double w = static_cast<double>(best.inliers.size()) / static_cast<double>(n);
      const double p_fail = 1.0 - std::pow(w, 4.0);
      if (p_fail <= 0.0) {
        bound = std::min(bound, it + 1);
      } else {
        const double needed = std::log(1.0 - opts.confidence) / std::log(p_fail);
        if (needed < static_cast<double>(bound)) bound = std::max(it + 1, static_cast<std::size_t>(std::ceil(needed)));
      }
    }
  }
  if (best.inliers.size() < 4) fail(ErrorCode::kNoConsensus, "no consensus homography");

  RansacResult out;
  out.iterations = it;
  std::vector<std::size_t> inliers = best.inliers;
  for (int round = 0; round < 10; ++round) {
    std::vector<PointMatch> subset;
    subset.reserve(inliers.size());
    for (std::size_t i : inliers) subset.push_back(matches[i]);
    Homography h;
    try {
      h = fit_homography_dlt(subset);
    } catch (const Error&) {
      fail(ErrorCode::kNoConsensus, "inlier set is degenerate");
    }
    out.homography = h;
    Consensus c = score(h, matches, opts.threshold);
    if (c.inliers == inliers || c.inliers.size() < 4) break;
    inliers = std::move(c.inliers);
  }
  out.inliers = std::move(inliers);
  return out;
}

}  // namespace scopekit
