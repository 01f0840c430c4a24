#pragma once

#include <vector>

#include "scopekit/geometry.hpp"
#include "scopekit/warp_loss.hpp"

namespace scopekit {

struct AlignOptions {
  /// Quasi-Newton iterations per pyramid level.
  int max_iters = 60;
  /// Stop a level once the accepted step is shorter than this (se(3) units).
  double step_tolerance = 1e-7;
  /// Stop a level once the relative loss decrease falls below this.
  double loss_tolerance = 1e-10;
  /// Central-difference half steps: rotation (rad) then translation (m).
  Vector6d fd_eps = Vector6d::Constant(1e-4);
  int pyramid_levels = 3;
  bool brightness_alignment = true;

  /// Throws InvalidArgument for non-positive iteration counts, levels or epsilons.
  void validate() const;
};

struct AlignStep {
  int level = 0;  // 0 is full resolution
  int iteration = 0;
  Pose pose;
  LossReport report;
};

struct AlignResult {
  Pose pose;
  /// Accepted iterates, coarse to fine; the loss never increases within a level.
  std::vector<AlignStep> trace;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  LossReport final_report;
  /// No iterate improved on `init` at full resolution; `pose` is then `init`.
  bool no_descent = false;
  /// Every level stopped on a tolerance rather than the iteration cap.
  bool converged = false;
};

/// 2x2 box downsampling (odd trailing rows/columns are dropped).
ImageBuffer downsample2(const ImageBuffer& img);
/// 2x2 averaging of the valid depths; a coarse pixel is valid when any child is.
DepthMap downsample2(const DepthMap& depth);

/// Refines the reference-to-source pose by minimizing total_loss over a left
/// se(3) perturbation of `init`, coarse to fine. Gradients are central finite
/// differences; steps come from a BFGS direction with backtracking (Armijo)
/// line search. Throws InsufficientValidDepth when fewer than 10% of the
/// reference pixels have valid depth.
AlignResult refine_pose(const ImageBuffer& ref, const ImageBuffer& src, const DepthMap& depth_ref,
                        const CameraIntrinsics& K, const Pose& init, const LossWeights& weights,
                        const AlignOptions& opts = {});

}  // namespace scopekit
