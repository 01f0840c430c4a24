#pragma once

#include <Eigen/Core>

#include "scopekit/imaging.hpp"
#include "scopekit/warp_loss.hpp"

namespace scopekit {

struct SfsOptions {
  /// Unit vector towards the light; defaults to the optical axis.
  Eigen::Vector3d light{0.0, 0.0, 1.0};
  /// Upper bound on sweep rounds (four directional sweeps each).
  int iterations = 200;
  int newton_steps = 30;
};

/// Relative depth from a single shaded image under a Lambertian model. The
/// luma is min-max normalized so the brightest pixels face the light; from
/// those, an upwind discretization of E sqrt(1 + p^2 + q^2) = lz - lx p - ly q
/// is solved per pixel by Newton iterations inside Gauss-Seidel sweeps.
/// Depth grows away from the camera and is at least 1. Throws NonUnitLight.
DepthMap tsai_shah_sfs(const ImageBuffer& img, const SfsOptions& opts = {});

}  // namespace scopekit
