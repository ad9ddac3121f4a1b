#include "blobtree/abuffer.hpp"

#include <algorithm>
#include <cmath>

#include "blobtree/image_io.hpp"

namespace blobtree {

size_t TileABuffer::fragment_count() const {
    size_t n = 0;
    for (const auto& t : tiles) n += t.size();
    return n;
}

namespace {

std::optional<std::pair<float, float>> ray_sphere(const Ray& ray, Vec3 center, float radius) {
    Vec3 oc = ray.origin - center;
    float b = dot(oc, ray.dir);
    float c = length_sq(oc) - radius * radius;
    float disc = b * b - c;
    if (disc < 0.0f) return std::nullopt;
    float s = std::sqrt(disc);
    return std::make_pair(-b - s, -b + s);
}

std::optional<std::pair<float, float>> ray_oriented_box(const Ray& ray,
                                                        const VolumeOfInterest& v) {
    Quat inv = conjugate(v.rotation);
    Vec3 o = rotate(inv, ray.origin - v.center);
    Vec3 d = rotate(inv, ray.dir);
    float tMin = -kFieldInfinity, tMax = kFieldInfinity;
    const float oArr[3] = {o.x, o.y, o.z};
    const float dArr[3] = {d.x, d.y, d.z};
    const float hArr[3] = {v.halfExtents.x, v.halfExtents.y, v.halfExtents.z};
    for (int i = 0; i < 3; ++i) {
        if (std::fabs(dArr[i]) < 1e-12f) {
            if (std::fabs(oArr[i]) > hArr[i]) return std::nullopt;
            continue;
        }
        float inv_d = 1.0f / dArr[i];
        float t0 = (-hArr[i] - oArr[i]) * inv_d;
        float t1 = (hArr[i] - oArr[i]) * inv_d;
        if (t0 > t1) std::swap(t0, t1);
        tMin = std::max(tMin, t0);
        tMax = std::min(tMax, t1);
        if (tMin > tMax) return std::nullopt;
    }
    return std::make_pair(tMin, tMax);
}

std::optional<std::pair<float, float>> ray_capsule(const Ray& ray, const VolumeOfInterest& v) {
    // The capsule is convex, so the intersection is a single interval whose
    // ends lie on the cylinder body or on one of the cap spheres.
    Vec3 ba = v.axisEnd - v.center;
    Vec3 oa = ray.origin - v.center;
    float baba = dot(ba, ba);
    float bard = dot(ba, ray.dir);
    float baoa = dot(ba, oa);
    float r = v.radius;

    float tEnter = kFieldInfinity, tExit = -kFieldInfinity;
    bool any = false;
    auto consider = [&](float t, float y) {
        (void)y;
        tEnter = std::min(tEnter, t);
        tExit = std::max(tExit, t);
        any = true;
    };

    float a = baba - bard * bard;
    if (a > 1e-12f * baba) {
        float b = baba * dot(oa, ray.dir) - baoa * bard;
        float c = baba * dot(oa, oa) - baoa * baoa - r * r * baba;
        float disc = b * b - a * c;
        if (disc >= 0.0f) {
            float s = std::sqrt(disc);
            for (float t : {(-b - s) / a, (-b + s) / a}) {
                float y = baoa + t * bard;
                if (y >= 0.0f && y <= baba) consider(t, y);
            }
        }
    }
    for (int cap = 0; cap < 2; ++cap) {
        Vec3 centre = cap == 0 ? v.center : v.axisEnd;
        auto hit = ray_sphere(ray, centre, r);
        if (!hit) continue;
        for (float t : {hit->first, hit->second}) {
            float y = baoa + t * bard;
            if ((cap == 0 && y <= 0.0f) || (cap == 1 && y >= baba)) consider(t, y);
        }
    }
    if (!any) return std::nullopt;
    return std::make_pair(tEnter, tExit);
}

struct BoundingSphere {
    Vec3 center;
    float radius;
};

BoundingSphere bounding_sphere(const VolumeOfInterest& v) {
    switch (v.family) {
        case VolumeOfInterest::Family::Sphere:
            return {v.center, v.radius};
        case VolumeOfInterest::Family::OrientedBox:
            return {v.center, length(v.halfExtents)};
        case VolumeOfInterest::Family::Capsule: {
            Vec3 mid = (v.center + v.axisEnd) * 0.5f;
            return {mid, length(v.axisEnd - v.center) * 0.5f + v.radius};
        }
    }
    return {v.center, v.radius};
}

struct TileCone {
    Vec3 axis;
    float cosHalf, sinHalf;
};

// Circular cone from the camera through the tile's pixel square, widened by
// a small margin so the cull stays conservative.
TileCone tile_cone(const CameraFrame& frame, int tx, int ty) {
    float x0 = static_cast<float>(tx * kTileSize);
    float y0 = static_cast<float>(ty * kTileSize);
    float x1 = x0 + kTileSize, y1 = y0 + kTileSize;
    Vec3 dirs[8] = {
        frame.ray_at(x0, y0).dir, frame.ray_at(x1, y0).dir,
        frame.ray_at(x0, y1).dir, frame.ray_at(x1, y1).dir,
        frame.ray_at(0.5f * (x0 + x1), y0).dir, frame.ray_at(0.5f * (x0 + x1), y1).dir,
        frame.ray_at(x0, 0.5f * (y0 + y1)).dir, frame.ray_at(x1, 0.5f * (y0 + y1)).dir,
    };
    Vec3 axis{0, 0, 0};
    for (const Vec3& d : dirs) axis += d;
    axis = normalize(axis);
    float c = 1.0f;
    for (const Vec3& d : dirs) c = std::min(c, dot(axis, d));
    c = std::max(c - 1e-3f, -1.0f);
    return {axis, c, std::sqrt(std::max(1.0f - c * c, 0.0f))};
}

bool cone_may_touch_sphere(const TileCone& cone, Vec3 apex, const BoundingSphere& s) {
    Vec3 v = s.center - apex;
    float x = dot(v, cone.axis);
    float yy = length_sq(v) - x * x;
    float y = std::sqrt(std::max(yy, 0.0f));
    return cone.cosHalf * y - cone.sinHalf * x <= s.radius;
}

} // namespace

std::optional<std::pair<float, float>> ray_volume_intersect(const Ray& ray,
                                                            const VolumeOfInterest& volume) {
    switch (volume.family) {
        case VolumeOfInterest::Family::Sphere:
            return ray_sphere(ray, volume.center, volume.radius);
        case VolumeOfInterest::Family::OrientedBox:
            return ray_oriented_box(ray, volume);
        case VolumeOfInterest::Family::Capsule:
            return ray_capsule(ray, volume);
    }
    return std::nullopt;
}

void insert_sorted(std::vector<Fragment>& list, const Fragment& fragment) {
    auto pos = std::upper_bound(list.begin(), list.end(), fragment,
                                [](const Fragment& a, const Fragment& b) {
                                    if (a.zEntry != b.zEntry) return a.zEntry < b.zEntry;
                                    return a.primitiveWord < b.primitiveWord;
                                });
    list.insert(pos, fragment);
}

TileABuffer rasterize_volumes(std::span<const VolumeOfInterest> volumes,
                              const CameraFrame& frame) {
    const Camera& cam = frame.camera();
    TileABuffer buffer;
    buffer.tilesX = frame.tiles_x();
    buffer.tilesY = frame.tiles_y();
    buffer.tiles.resize(static_cast<size_t>(buffer.tilesX) * buffer.tilesY);

    std::vector<TileCone> cones(buffer.tiles.size());
    for (int ty = 0; ty < buffer.tilesY; ++ty)
        for (int tx = 0; tx < buffer.tilesX; ++tx)
            cones[static_cast<size_t>(ty) * buffer.tilesX + tx] = tile_cone(frame, tx, ty);

    for (const VolumeOfInterest& volume : volumes) {
        BoundingSphere bs = bounding_sphere(volume);
        float vz = frame.view_z(bs.center);
        if (vz + bs.radius < cam.nearZ || vz - bs.radius > cam.farZ) continue;

        for (int ty = 0; ty < buffer.tilesY; ++ty) {
            for (int tx = 0; tx < buffer.tilesX; ++tx) {
                size_t tileIndex = static_cast<size_t>(ty) * buffer.tilesX + tx;
                if (!cone_may_touch_sphere(cones[tileIndex], cam.position, bs)) continue;

                float entry = kFieldInfinity, exit = -kFieldInfinity;
                bool anyHit = false;
                int xEnd = std::min((tx + 1) * kTileSize, cam.width);
                int yEnd = std::min((ty + 1) * kTileSize, cam.height);
                for (int y = ty * kTileSize; y < yEnd; ++y) {
                    for (int x = tx * kTileSize; x < xEnd; ++x) {
                        Ray ray = frame.pixel_ray(x, y);
                        auto hit = ray_volume_intersect(ray, volume);
                        if (!hit) continue;
                        float vz0 = ray.view_z_from_t(hit->first);
                        float vz1 = ray.view_z_from_t(hit->second);
                        if (vz1 < cam.nearZ || vz0 > cam.farZ) continue;
                        vz0 = std::max(vz0, cam.nearZ);
                        vz1 = std::min(vz1, cam.farZ);
                        entry = std::min(entry, frame.ndc_from_view_z(vz0));
                        exit = std::max(exit, frame.ndc_from_view_z(vz1));
                        anyHit = true;
                    }
                }
                if (anyHit) {
                    Fragment frag{volume.primitiveWord, entry, exit};
                    insert_sorted(buffer.tiles[tileIndex], frag);
                }
            }
        }
    }
    return buffer;
}

void write_tile_counts_pgm(const TileABuffer& buffer, const char* path) {
    std::vector<uint16_t> counts(buffer.tiles.size());
    for (size_t i = 0; i < buffer.tiles.size(); ++i)
        counts[i] = static_cast<uint16_t>(std::min<size_t>(buffer.tiles[i].size(), 65535));
    write_pgm16(path, buffer.tilesX, buffer.tilesY, counts);
}

} // namespace blobtree
