#pragma once

#include <Eigen/Dense>

#include <threadtrack/error.hpp>

namespace threadtrack {

struct PixelPoint {
    double u = 0.0;  ///< column, from the left edge
    double v = 0.0;  ///< row, from the top edge
    friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

/// Rectified pinhole pair: identical intrinsics, the right camera displaced
/// along +x by the baseline, rows aligned. Points are expressed in the left
/// camera frame (x right, y down, z forward).
struct StereoRig {
    double focal_px = 700.0;
    PixelPoint principal_point{640.0, 360.0};
    double baseline_m = 0.063;
    int image_width = 1280;
    int image_height = 720;

    void validate() const {
        if (focal_px <= 0.0 || baseline_m <= 0.0 || image_width <= 0 ||
            image_height <= 0)
            throw DomainError("stereo rig parameters must be positive");
    }

    bool in_image(const PixelPoint& p, double margin = 0.0) const {
        return p.u >= margin && p.u <= image_width - 1 - margin &&
               p.v >= margin && p.v <= image_height - 1 - margin;
    }
};

struct StereoProjection {
    PixelPoint left;
    PixelPoint right;
};

/// Projects a 3D point into both images. Throws BehindCameraError for z <= 0.
StereoProjection project(const StereoRig& rig, const Eigen::Vector3d& p);

/// Recovers the 3D point from a rectified correspondence. The row coordinates
/// are averaged; disparity must be positive.
Eigen::Vector3d triangulate(const StereoRig& rig, const PixelPoint& left,
                            const PixelPoint& right);

/// 3D displacement equivalent to shifting the projections of `base` by the
/// given per-image pixel displacements.
Eigen::Vector3d triangulate_displacement(const StereoRig& rig,
                                         const Eigen::Vector3d& base,
                                         const Eigen::Vector2d& d_left,
                                         const Eigen::Vector2d& d_right);

}  // namespace threadtrack
