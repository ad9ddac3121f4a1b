#pragma once

#include <stdexcept>

#include "blobtree/math.hpp"

namespace blobtree {

inline constexpr int kTileSize = 8;

struct Camera {
    Vec3 position{0, 0, -5};
    Vec3 target{0, 0, 0};
    Vec3 up{0, 1, 0};
    float fovDegrees = 45.0f; // vertical
    float nearZ = 0.1f;
    float farZ = 100.0f;
    int width = 512;
    int height = 512;
};

void validate_camera(const Camera& cam);

struct Ray {
    Vec3 origin;
    Vec3 dir; // unit
    float dirDotForward = 1.0f;

    float t_from_view_z(float vz) const { return vz / dirDotForward; }
    float view_z_from_t(float t) const { return t * dirDotForward; }
};

// Pinhole camera with precomputed basis. Depth is remapped to NDC with the
// perspective mapping z = (1/near - 1/vz) / (1/near - 1/far), vz measured
// along the view axis.
class CameraFrame {
public:
    explicit CameraFrame(const Camera& cam);

    const Camera& camera() const { return cam_; }
    Vec3 forward() const { return forward_; }

    // Ray through the center of pixel (x, y), y growing downward.
    Ray pixel_ray(int x, int y) const { return ray_at(x + 0.5f, y + 0.5f); }
    Ray ray_at(float px, float py) const;

    float view_z(Vec3 worldPoint) const { return dot(worldPoint - cam_.position, forward_); }
    float ndc_from_view_z(float vz) const {
        return (invNear_ - 1.0f / vz) * invDepthRange_;
    }
    float view_z_from_ndc(float z) const {
        return 1.0f / (invNear_ - z / invDepthRange_);
    }

    int tiles_x() const { return (cam_.width + kTileSize - 1) / kTileSize; }
    int tiles_y() const { return (cam_.height + kTileSize - 1) / kTileSize; }

private:
    Camera cam_;
    Vec3 forward_, right_, upv_;
    float tanHalf_, aspect_;
    float invNear_, invDepthRange_; // 1/near, 1/(1/near - 1/far)
};

} // namespace blobtree
