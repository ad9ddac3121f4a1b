#include "blobtree/camera.hpp"

namespace blobtree {

void validate_camera(const Camera& cam) {
    if (!(cam.nearZ > 0.0f) || !(cam.nearZ < cam.farZ))
        throw std::invalid_argument("camera requires 0 < near < far");
    if (!(cam.fovDegrees > 0.0f) || !(cam.fovDegrees < 180.0f))
        throw std::invalid_argument("camera fov must lie in (0, 180) degrees");
    if (cam.width <= 0 || cam.height <= 0)
        throw std::invalid_argument("camera image size must be positive");
    if (length_sq(cam.target - cam.position) <= 0.0f)
        throw std::invalid_argument("camera target must differ from its position");
}

CameraFrame::CameraFrame(const Camera& cam) : cam_(cam) {
    validate_camera(cam);
    forward_ = normalize(cam.target - cam.position);
    right_ = normalize(cross(forward_, cam.up));
    if (length_sq(right_) <= 0.0f)
        throw std::invalid_argument("camera up vector is parallel to the view direction");
    upv_ = cross(right_, forward_);
    tanHalf_ = std::tan(cam.fovDegrees * static_cast<float>(M_PI) / 360.0f);
    aspect_ = static_cast<float>(cam.width) / static_cast<float>(cam.height);
    invNear_ = 1.0f / cam.nearZ;
    invDepthRange_ = 1.0f / (1.0f / cam.nearZ - 1.0f / cam.farZ);
}

Ray CameraFrame::ray_at(float px, float py) const {
    float sx = (2.0f * px / static_cast<float>(cam_.width) - 1.0f) * tanHalf_ * aspect_;
    float sy = (1.0f - 2.0f * py / static_cast<float>(cam_.height)) * tanHalf_;
    Ray r;
    r.origin = cam_.position;
    r.dir = normalize(forward_ + right_ * sx + upv_ * sy);
    r.dirDotForward = dot(r.dir, forward_);
    return r;
}

} // namespace blobtree
