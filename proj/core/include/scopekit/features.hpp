#pragma once

#include <cstddef>
#include <vector>

#include "scopekit/imaging.hpp"

namespace scopekit {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 1.0;        // Gaussian sigma in pixels
  double orientation = 0.0;  // radians
  double response = 0.0;
};

inline constexpr int kDescriptorSize = 128;

/// Keypoints with L2-normalized 4x4x8 gradient-histogram descriptors, ordered
/// by decreasing response.
struct FeatureSet {
  std::vector<Keypoint> keypoints;
  std::vector<float> descriptors;  // keypoints.size() x kDescriptorSize

  [[nodiscard]] std::size_t size() const { return keypoints.size(); }
  [[nodiscard]] bool empty() const { return keypoints.empty(); }
  [[nodiscard]] const float* descriptor(std::size_t i) const { return descriptors.data() + i * kDescriptorSize; }
};

enum class Detector { kDoG, kHarris };

struct DetectorOptions {
  Detector detector = Detector::kDoG;
  std::size_t max_features = 2000;
  /// DoG: minimum |D| of an extremum (intensity units).
  double contrast_threshold = 0.004;
  /// DoG: principal-curvature ratio limit for edge rejection.
  double edge_ratio = 10.0;
  /// Harris: k in det - k tr^2, and the response floor relative to the maximum.
  double harris_k = 0.04;
  double harris_relative_threshold = 0.01;
  double harris_sigma = 1.5;
  int border = 4;
};

/// Detects keypoints on the luma of `img` and describes them. Throws NoFeatures.
FeatureSet detect_and_describe(const ImageBuffer& img, const DetectorOptions& opts = {});

/// Computes orientation and descriptors for given keypoint positions/scales.
FeatureSet describe(const ImageBuffer& img, std::vector<Keypoint> keypoints);

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

struct KnnResult {
  /// Per query: up to k neighbours sorted by (distance, index).
  std::vector<std::vector<Neighbor>> neighbors;
  /// Set when k exceeded the size of the searched set.
  bool k_clamped = false;
};

/// Exact k nearest neighbours of each descriptor of `a` among those of `b`,
/// via a k-d tree. Throws EmptySet.
KnnResult match_knn(const FeatureSet& a, const FeatureSet& b, std::size_t k);

struct Match {
  std::size_t query = 0;
  std::size_t train = 0;
  double distance = 0.0;
};

inline constexpr double kLoweRatio = 0.8;

/// Keeps best neighbours whose distance is below ratio x the second best.
std::vector<Match> ratio_filter(const KnnResult& knn, double ratio = kLoweRatio);

/// match_knn with k = 2 followed by ratio_filter.
std::vector<Match> match_features(const FeatureSet& a, const FeatureSet& b, double ratio = kLoweRatio);

}  // namespace scopekit
