#include <threadtrack/stereo.hpp>

namespace threadtrack {

StereoProjection project(const StereoRig& rig, const Eigen::Vector3d& p) {
    if (!(p.z() > 0.0))
        throw BehindCameraError("point at or behind the camera plane");
    const double inv_z = 1.0 / p.z();
    StereoProjection proj;
    proj.left.u = rig.focal_px * p.x() * inv_z + rig.principal_point.u;
    proj.left.v = rig.focal_px * p.y() * inv_z + rig.principal_point.v;
    proj.right.u =
        rig.focal_px * (p.x() - rig.baseline_m) * inv_z + rig.principal_point.u;
    proj.right.v = proj.left.v;  // rectified rows match exactly
    return proj;
}

Eigen::Vector3d triangulate(const StereoRig& rig, const PixelPoint& left,
                            const PixelPoint& right) {
    const double disparity = left.u - right.u;
    if (!(disparity > 0.0))
        throw TriangulationError("non-positive disparity");
    const double z = rig.focal_px * rig.baseline_m / disparity;
    const double v = 0.5 * (left.v + right.v);
    return {(left.u - rig.principal_point.u) * z / rig.focal_px,
            (v - rig.principal_point.v) * z / rig.focal_px, z};
}

Eigen::Vector3d triangulate_displacement(const StereoRig& rig,
                                         const Eigen::Vector3d& base,
                                         const Eigen::Vector2d& d_left,
                                         const Eigen::Vector2d& d_right) {
    const StereoProjection proj = project(rig, base);
    const PixelPoint left{proj.left.u + d_left.x(), proj.left.v + d_left.y()};
    const PixelPoint right{proj.right.u + d_right.x(),
                           proj.right.v + d_right.y()};
    return triangulate(rig, left, right) - base;
}

}  // namespace threadtrack
