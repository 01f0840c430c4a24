#include "scopekit/stitch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <queue>

#include <Eigen/Cholesky>

#include "scopekit/error.hpp"
#include "scopekit/parallel.hpp"

namespace scopekit {
namespace {

constexpr long kMaxCanvasPixels = 64L * 1024 * 1024;

double feather_weight(double x, double y, int w, int h) {
  return std::min({x + 1.0, w - x, y + 1.0, h - y});
}

struct Bounds {
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();
};

}  // namespace

Panorama stitch_with_homographies(const std::vector<ImageBuffer>& frames,
                                  const std::vector<Homography>& to_reference) {
  if (frames.empty()) fail(ErrorCode::kInvalidArgument, "no frames to stitch");
  if (frames.size() != to_reference.size()) fail(ErrorCode::kDimensionMismatch, "one homography per frame required");
  const int channels = frames.front().channels();
  Bounds b;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const ImageBuffer& f = frames[k];
    if (f.empty()) fail(ErrorCode::kBadSize, "empty frame");
    if (f.channels() != channels) fail(ErrorCode::kDimensionMismatch, "frames differ in channel count");
    const double W = f.width() - 1.0;
    const double H = f.height() - 1.0;
    for (const Eigen::Vector2d& c : {Eigen::Vector2d(0, 0), Eigen::Vector2d(W, 0), Eigen::Vector2d(0, H), Eigen::Vector2d(W, H)}) {
      const Eigen::Vector2d p = to_reference[k](c);
      if (!p.allFinite()) fail(ErrorCode::kBadSize, "frame corner maps to infinity");
      b.x0 = std::min(b.x0, p.x());
      b.y0 = std::min(b.y0, p.y());
      b.x1 = std::max(b.x1, p.x());
      b.y1 = std::max(b.y1, p.y());
    }
  }
  const double ox = std::floor(b.x0 + 1e-9);
  const double oy = std::floor(b.y0 + 1e-9);
  const double cw = std::ceil(b.x1 - 1e-9) - ox + 1.0;
  const double ch = std::ceil(b.y1 - 1e-9) - oy + 1.0;
  if (!(cw * ch <= static_cast<double>(kMaxCanvasPixels))) fail(ErrorCode::kBadSize, "stitched canvas too large");
  const int width = static_cast<int>(cw);
  const int height = static_cast<int>(ch);

  Panorama pano;
  pano.image = ImageBuffer(width, height, channels, 0.0);
  pano.coverage = Mask(width, height, 0);
  std::vector<Homography> canvas_to_frame;
  const Homography shift = Homography::translation(-ox, -oy);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    pano.frames.push_back(k);
    pano.frame_to_canvas.push_back(shift * to_reference[k]);
    canvas_to_frame.push_back(pano.frame_to_canvas.back().inverse());
  }

  parallel_for(0, static_cast<std::size_t>(height), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    std::vector<double> first(static_cast<std::size_t>(channels));
    std::vector<double> acc(static_cast<std::size_t>(channels));
    std::vector<double> sample(static_cast<std::size_t>(channels));
    for (int x = 0; x < width; ++x) {
      double wsum = 0.0;
      bool any = false;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t k = 0; k < frames.size(); ++k) {
        const ImageBuffer& f = frames[k];
        const Eigen::Vector2d p = canvas_to_frame[k](Eigen::Vector2d(x, y));
        bool ok = true;
        for (int c = 0; c < channels && ok; ++c) {
          const auto v = bilinear_sample(f, p.x(), p.y(), c);
          ok = v.has_value();
          if (ok) sample[static_cast<std::size_t>(c)] = *v;
        }
        if (!ok) continue;
        const double w = feather_weight(p.x(), p.y(), f.width(), f.height());
        if (!any) {
          first = sample;
          any = true;
        }
        for (int c = 0; c < channels; ++c) {
          acc[static_cast<std::size_t>(c)] += w * (sample[static_cast<std::size_t>(c)] - first[static_cast<std::size_t>(c)]);
        }
        wsum += w;
      }
      if (!any) continue;
      pano.coverage(x, y) = 1;
      for (int c = 0; c < channels; ++c) {
        pano.image.at(x, y, c) = first[static_cast<std::size_t>(c)] + acc[static_cast<std::size_t>(c)] / wsum;
      }
    }
  });
  return pano;
}

namespace {

struct Correspondences {
  std::size_t a, b;
  std::vector<PointMatch> matches;  // src in a, dst in b
};

Eigen::Matrix<double, 8, 1> to_params(const Homography& h) {
  Eigen::Matrix<double, 8, 1> p;
  p << h.H(0, 0), h.H(0, 1), h.H(0, 2), h.H(1, 0), h.H(1, 1), h.H(1, 2), h.H(2, 0), h.H(2, 1);
  return p;
}

Eigen::Matrix3d from_params(const double* p) {
  Eigen::Matrix3d H;
  H << p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], 1.0;
  return H;
}

// Point in reference coordinates and its derivative with respect to the
// eight parameters of the frame homography.
Eigen::Vector2d map_with_jacobian(const double* p, const Eigen::Vector2d& x, Eigen::Matrix<double, 2, 8>* J) {
  const double w = p[6] * x.x() + p[7] * x.y() + 1.0;
  const double u = (p[0] * x.x() + p[1] * x.y() + p[2]) / w;
  const double v = (p[3] * x.x() + p[4] * x.y() + p[5]) / w;
  if (J) {
    J->setZero();
    (*J)(0, 0) = x.x() / w;
    (*J)(0, 1) = x.y() / w;
    (*J)(0, 2) = 1.0 / w;
    (*J)(1, 3) = x.x() / w;
    (*J)(1, 4) = x.y() / w;
    (*J)(1, 5) = 1.0 / w;
    (*J)(0, 6) = -u * x.x() / w;
    (*J)(0, 7) = -u * x.y() / w;
    (*J)(1, 6) = -v * x.x() / w;
    (*J)(1, 7) = -v * x.y() / w;
  }
  return {u, v};
}

// Levenberg-Marquardt on sum |H_a(p) - H_b(q)|^2 with the reference fixed.
void refine_homographies(std::vector<Homography>& to_ref, std::size_t ref_slot,
                         const std::vector<Correspondences>& corr, const std::map<std::size_t, std::size_t>& slot,
                         int iterations) {
  const std::size_t n = to_ref.size();
  if (n < 2) return;
  const auto var = [&](std::size_t s) -> long { return s == ref_slot ? -1 : static_cast<long>(s < ref_slot ? s : s - 1); };
  const auto dim = static_cast<Eigen::Index>(8 * (n - 1));
  Eigen::VectorXd params(static_cast<Eigen::Index>(8 * n));
  for (std::size_t s = 0; s < n; ++s) params.segment<8>(static_cast<Eigen::Index>(8 * s)) = to_params(to_ref[s]);

  const auto cost_of = [&](const Eigen::VectorXd& P) {
    double c = 0.0;
    for (const auto& e : corr) {
      const double* pa = P.data() + 8 * slot.at(e.a);
      const double* pb = P.data() + 8 * slot.at(e.b);
      for (const auto& m : e.matches) {
        c += (map_with_jacobian(pa, m.src, nullptr) - map_with_jacobian(pb, m.dst, nullptr)).squaredNorm();
      }
    }
    return c;
  };

  double lambda = 1e-3;
  double cost = cost_of(params);
  for (int it = 0; it < iterations && cost > 0.0; ++it) {
    Eigen::MatrixXd JtJ = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd Jtr = Eigen::VectorXd::Zero(dim);
    for (const auto& e : corr) {
      const std::size_t sa = slot.at(e.a);
      const std::size_t sb = slot.at(e.b);
      const long va = var(sa);
      const long vb = var(sb);
      for (const auto& m : e.matches) {
        Eigen::Matrix<double, 2, 8> Ja, Jb;
        const Eigen::Vector2d r = map_with_jacobian(params.data() + 8 * sa, m.src, &Ja) -
                                  map_with_jacobian(params.data() + 8 * sb, m.dst, &Jb);
        Jb = -Jb;
        const std::array<std::pair<long, const Eigen::Matrix<double, 2, 8>*>, 2> blocks{{{va, &Ja}, {vb, &Jb}}};
        for (const auto& [vi, Ji] : blocks) {
          if (vi < 0) continue;
          Jtr.segment<8>(8 * vi) += Ji->transpose() * r;
          for (const auto& [vj, Jj] : blocks) {
            if (vj < 0) continue;
            JtJ.block<8, 8>(8 * vi, 8 * vj) += Ji->transpose() * *Jj;
          }
        }
      }
    }
    bool improved = false;
    for (int attempt = 0; attempt < 10 && !improved; ++attempt) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * (JtJ.diagonal().array() + 1e-12).matrix();
      const Eigen::VectorXd delta = A.ldlt().solve(-Jtr);
      if (!delta.allFinite()) break;
      Eigen::VectorXd trial = params;
      for (std::size_t s = 0; s < n; ++s) {
        const long v = var(s);
        if (v >= 0) trial.segment<8>(static_cast<Eigen::Index>(8 * s)) += delta.segment<8>(8 * v);
      }
      const double c = cost_of(trial);
      if (c < cost) {
        params = trial;
        const double rel = (cost - c) / cost;
        cost = c;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (rel < 1e-12) it = iterations;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  for (std::size_t s = 0; s < n; ++s) {
    if (s == ref_slot) continue;
    try {
      to_ref[s] = Homography::from_matrix(from_params(params.data() + 8 * s));
    } catch (const Error&) {
      return;
    }
  }
}

}  // namespace

StitchResult stitch(const std::vector<ImageBuffer>& frames, const StitchOptions& opts) {
  const std::size_t n = frames.size();
  if (n == 0) fail(ErrorCode::kInvalidArgument, "no frames to stitch");
  StitchResult result;
  if (n == 1) {
    result.panoramas.push_back(stitch_with_homographies(frames, {Homography{}}));
    return result;
  }

  std::vector<std::optional<FeatureSet>> features(n);
  parallel_for(0, n, [&](std::size_t i) {
    try {
      features[i] = detect_and_describe(frames[i], opts.detector);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoFeatures) throw;
    }
  });

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (features[i] && features[j]) pairs.emplace_back(i, j);
    }
  }
  std::vector<std::vector<Match>> pair_matches(pairs.size());
  parallel_for(0, pairs.size(), [&](std::size_t p) {
    pair_matches[p] = match_features(*features[pairs[p].first], *features[pairs[p].second], opts.ratio);
  });

  // Keep a pair when either side ranks the other among its top candidates.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> ranking(n);  // (count, pair index)
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    ranking[pairs[p].first].emplace_back(pair_matches[p].size(), p);
    ranking[pairs[p].second].emplace_back(pair_matches[p].size(), p);
  }
  std::vector<bool> candidate(pairs.size(), false);
  for (auto& r : ranking) {
    std::stable_sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; k < std::min(opts.candidates, r.size()); ++k) candidate[r[k].second] = true;
  }

  std::vector<std::optional<Correspondences>> verified(pairs.size());
  std::vector<std::optional<PairEdge>> edges(pairs.size());
  parallel_for(0, pairs.size(), [&](std::size_t p) {
    const auto& ms = pair_matches[p];
    if (!candidate[p] || ms.size() < std::max<std::size_t>(4, opts.min_inliers)) return;
    const FeatureSet& fa = *features[pairs[p].first];
    const FeatureSet& fb = *features[pairs[p].second];
    std::vector<PointMatch> pts;
    pts.reserve(ms.size());
    for (const Match& m : ms) {
      const Keypoint& ka = fa.keypoints[m.query];
      const Keypoint& kb = fb.keypoints[m.train];
      pts.push_back({{ka.x, ka.y}, {kb.x, kb.y}});
    }
    RansacOptions ro = opts.ransac;
    ro.seed = opts.ransac.seed + static_cast<std::uint64_t>(p);
    try {
      RansacResult rr = ransac_homography(pts, ro);
      const double needed = 8.0 + 0.3 * static_cast<double>(pts.size());
      if (rr.inliers.size() < opts.min_inliers || static_cast<double>(rr.inliers.size()) <= needed) return;
      Correspondences c{pairs[p].first, pairs[p].second, {}};
      for (std::size_t i : rr.inliers) c.matches.push_back(pts[i]);
      edges[p] = PairEdge{pairs[p].first, pairs[p].second, pts.size(), rr.inliers.size(), rr.homography};
      verified[p] = std::move(c);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoConsensus && e.code() != ErrorCode::kInsufficientMatches &&
          e.code() != ErrorCode::kDegenerateGeometry) {
        throw;
      }
    }
  });

  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency(n);  // (neighbour, edge)
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (!edges[p]) continue;
    result.edges.push_back(*edges[p]);
    adjacency[pairs[p].first].emplace_back(pairs[p].second, p);
    adjacency[pairs[p].second].emplace_back(pairs[p].first, p);
  }
  for (auto& a : adjacency) std::sort(a.begin(), a.end());

  std::vector<bool> seen(n, false);
  for (std::size_t root = 0; root < n; ++root) {
    if (seen[root]) continue;
    std::map<std::size_t, Homography> to_ref{{root, Homography{}}};
    std::vector<std::size_t> used_edges;
    std::queue<std::size_t> queue;
    queue.push(root);
    seen[root] = true;
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop();
      for (const auto& [j, p] : adjacency[i]) {
        if (std::find(used_edges.begin(), used_edges.end(), p) == used_edges.end()) used_edges.push_back(p);
        if (seen[j]) continue;
        seen[j] = true;
        const PairEdge& e = *edges[p];
        // e.homography maps frame e.a into frame e.b.
        to_ref[j] = e.a == i ? to_ref[i] * e.homography.inverse() : to_ref[i] * e.homography;
        queue.push(j);
      }
    }
    std::vector<ImageBuffer> members;
    std::vector<Homography> hs;
    std::map<std::size_t, std::size_t> slot;
    std::vector<std::size_t> ids;
    for (const auto& [idx, h] : to_ref) {
      slot[idx] = ids.size();
      ids.push_back(idx);
      members.push_back(frames[idx]);
      hs.push_back(h);
    }
    if (opts.refine && ids.size() > 1) {
      std::vector<Correspondences> corr;
      std::sort(used_edges.begin(), used_edges.end());
      for (std::size_t p : used_edges) corr.push_back(*verified[p]);
      refine_homographies(hs, slot.at(root), corr, slot, opts.refine_iterations);
    }
    Panorama pano = stitch_with_homographies(members, hs);
    pano.frames = ids;
    result.panoramas.push_back(std::move(pano));
  }
  return result;
}

}  // namespace scopekit
