#pragma once

#include <cstddef>
#include <vector>

#include "scopekit/features.hpp"
#include "scopekit/homography.hpp"
#include "scopekit/imaging.hpp"

namespace scopekit {

struct Panorama {
  ImageBuffer image;
  Mask coverage;                            // pixels reached by at least one frame
  std::vector<std::size_t> frames;          // input indices, ascending
  std::vector<Homography> frame_to_canvas;  // parallel to `frames`
};

/// Accepted pairwise registration: `homography` maps pixels of frame `a` into frame `b`.
struct PairEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t matches = 0;
  std::size_t inliers = 0;
  Homography homography;
};

struct StitchOptions {
  DetectorOptions detector;
  double ratio = kLoweRatio;
  /// Candidate partners per frame, ranked by ratio-test match count.
  std::size_t candidates = 6;
  RansacOptions ransac;
  std::size_t min_inliers = 12;
  /// Jointly refine the chained homographies on all inlier correspondences.
  bool refine = true;
  int refine_iterations = 20;
};

struct StitchResult {
  /// One panorama per connected component of the match graph, ordered by
  /// smallest member index.
  std::vector<Panorama> panoramas;
  std::vector<PairEdge> edges;
  [[nodiscard]] bool disconnected() const { return panoramas.size() > 1; }
};

/// Feathered composite of frames placed by `to_reference` (frame pixel ->
/// reference pixel). Each frame's weight falls off linearly towards its border;
/// the canvas spans the transformed frame corners. Frames must share a channel
/// count. Throws DimensionMismatch or BadSize.
Panorama stitch_with_homographies(const std::vector<ImageBuffer>& frames,
                                  const std::vector<Homography>& to_reference);

/// Feature matching, RANSAC registration of candidate pairs, chaining to the
/// lowest-index frame of each component, optional refinement and blending.
StitchResult stitch(const std::vector<ImageBuffer>& frames, const StitchOptions& opts = {});

}  // namespace scopekit
