#include <doctest.h>

#include <random>

#include "blobtree/abuffer.hpp"
#include "helpers.hpp"

using namespace blobtree;
using namespace testutil;

namespace {

// Independent interval oracle: containment test bisected to 1e-6 around a
// dense scan.
std::optional<std::pair<float, float>> interval_by_bisection(const Ray& ray,
                                                             const VolumeOfInterest& v,
                                                             float tMax) {
    const int n = 20000;
    auto inside = [&](float t) { return v.contains(ray.origin + ray.dir * t); };
    int firstIn = -1, lastIn = -1;
    for (int i = 0; i <= n; ++i) {
        if (inside(tMax * i / n)) {
            if (firstIn < 0) firstIn = i;
            lastIn = i;
        }
    }
    if (firstIn < 0) return std::nullopt;
    auto bisect = [&](float lo, float hi, bool wantInsideHi) {
        for (int i = 0; i < 60; ++i) {
            float mid = 0.5f * (lo + hi);
            if (inside(mid) == wantInsideHi) hi = mid;
            else lo = mid;
        }
        return 0.5f * (lo + hi);
    };
    float enter = firstIn == 0 ? 0.0f
                               : bisect(tMax * (firstIn - 1) / n, tMax * firstIn / n, true);
    float exit = lastIn == n ? tMax : bisect(tMax * lastIn / n, tMax * (lastIn + 1) / n, false);
    return std::make_pair(enter, exit);
}

Camera test_camera(int w = 64, int h = 64) {
    Camera cam;
    cam.position = {0, 0, -5};
    cam.target = {0, 0, 0};
    cam.nearZ = 0.1f;
    cam.farZ = 50.0f;
    cam.width = w;
    cam.height = h;
    return cam;
}

} // namespace

TEST_CASE("ray/sphere interval") {
    Ray ray{{0, 0, -5}, {0, 0, 1}, 1.0f};
    VolumeOfInterest v;
    v.family = VolumeOfInterest::Family::Sphere;
    v.center = {0, 0, 0};
    v.radius = 1.0f;
    auto hit = ray_volume_intersect(ray, v);
    REQUIRE(hit);
    CHECK(hit->first == doctest::Approx(4.0));
    CHECK(hit->second == doctest::Approx(6.0));

    v.center = {0, 10, 0};
    CHECK(!ray_volume_intersect(ray, v));
}

TEST_CASE("ray/oriented box interval matches bisection") {
    VolumeOfInterest v;
    v.family = VolumeOfInterest::Family::OrientedBox;
    v.center = {0.2f, -0.1f, 0.5f};
    v.halfExtents = {1.0f, 0.5f, 0.8f};
    v.rotation = quat_from_axis_angle({0, 0, 1}, 0.7853982f);
    Ray ray{{0, 0, -5}, normalize(Vec3{0.05f, -0.02f, 1.0f}), 1.0f};

    auto analytic = ray_volume_intersect(ray, v);
    auto oracle = interval_by_bisection(ray, v, 20.0f);
    REQUIRE(analytic);
    REQUIRE(oracle);
    CHECK(analytic->first == doctest::Approx(oracle->first).epsilon(1e-5));
    CHECK(analytic->second == doctest::Approx(oracle->second).epsilon(1e-5));
}

TEST_CASE("ray/capsule interval matches bisection") {
    std::mt19937 rng(83);
    for (int iter = 0; iter < 40; ++iter) {
        VolumeOfInterest v;
        v.family = VolumeOfInterest::Family::Capsule;
        v.center = random_point(rng, 1.0f);
        v.axisEnd = v.center + random_point(rng, 1.5f);
        if (length(v.axisEnd - v.center) < 0.1f) continue;
        std::uniform_real_distribution<float> ru(0.2f, 0.8f);
        v.radius = ru(rng);

        Ray ray{{0, 0, -6}, normalize(Vec3{0.3f * ru(rng), 0.3f * ru(rng), 1.0f}), 1.0f};
        auto analytic = ray_volume_intersect(ray, v);
        auto oracle = interval_by_bisection(ray, v, 25.0f);
        REQUIRE(analytic.has_value() == oracle.has_value());
        if (analytic) {
            CHECK(analytic->first == doctest::Approx(oracle->first).epsilon(1e-4));
            CHECK(analytic->second == doctest::Approx(oracle->second).epsilon(1e-4));
        }
    }
}

TEST_CASE("sorted fragment insertion") {
    std::vector<Fragment> list;
    insert_sorted(list, {1, 0.2f, 0.4f});
    CHECK(list.size() == 1);
    insert_sorted(list, {2, 0.9f, 1.0f});
    insert_sorted(list, {3, 0.5f, 0.6f});
    CHECK(list[0].zEntry == 0.2f);
    CHECK(list[1].zEntry == 0.5f);
    CHECK(list[2].zEntry == 0.9f);

    std::mt19937 rng(89);
    std::uniform_real_distribution<float> u(0, 1);
    std::vector<Fragment> incremental, all;
    for (int i = 0; i < 1000; ++i) {
        Fragment f{static_cast<uint32_t>(i), u(rng), u(rng) + 1.0f};
        insert_sorted(incremental, f);
        all.push_back(f);
    }
    std::sort(all.begin(), all.end(), [](const Fragment& a, const Fragment& b) {
        if (a.zEntry != b.zEntry) return a.zEntry < b.zEntry;
        return a.primitiveWord < b.primitiveWord;
    });
    REQUIRE(incremental.size() == all.size());
    for (size_t i = 0; i < all.size(); ++i) {
        CHECK(incremental[i].primitiveWord == all[i].primitiveWord);
        CHECK(incremental[i].zEntry == all[i].zEntry);
    }
}

TEST_CASE("rasterization: screen-filling sphere covers every tile once") {
    CameraFrame frame(test_camera());
    VolumeOfInterest v;
    v.family = VolumeOfInterest::Family::Sphere;
    v.center = {0, 0, 0};
    v.radius = 3.5f; // fills the view at this fov
    v.primitiveWord = 7;
    auto buffer = rasterize_volumes(std::vector<VolumeOfInterest>{v}, frame);
    CHECK(buffer.tilesX == 8);
    CHECK(buffer.tilesY == 8);
    for (const auto& tile : buffer.tiles) {
        REQUIRE(tile.size() == 1);
        CHECK(tile[0].primitiveWord == 7);
        CHECK(tile[0].zEntry <= tile[0].zExit);
        CHECK(tile[0].zEntry >= 0.0f);
        CHECK(tile[0].zExit <= 1.0f);
    }
}

TEST_CASE("rasterization: off-screen volume registers nothing") {
    CameraFrame frame(test_camera());
    VolumeOfInterest v;
    v.family = VolumeOfInterest::Family::Sphere;
    v.center = {100, 0, 0};
    v.radius = 1.0f;
    auto buffer = rasterize_volumes(std::vector<VolumeOfInterest>{v}, frame);
    CHECK(buffer.fragment_count() == 0);

    // behind the camera
    v.center = {0, 0, -20};
    buffer = rasterize_volumes(std::vector<VolumeOfInterest>{v}, frame);
    CHECK(buffer.fragment_count() == 0);
}

TEST_CASE("rasterization: same tile lists stay depth sorted") {
    CameraFrame frame(test_camera());
    VolumeOfInterest nearV, farV;
    nearV.family = farV.family = VolumeOfInterest::Family::Sphere;
    nearV.center = {0, 0, 0};
    nearV.radius = 0.8f;
    nearV.primitiveWord = 1;
    farV.center = {0, 0, 5};
    farV.radius = 0.8f;
    farV.primitiveWord = 2;
    std::vector<VolumeOfInterest> volumes{farV, nearV}; // reversed on purpose
    auto buffer = rasterize_volumes(volumes, frame);
    const auto& center = buffer.at(4, 4);
    REQUIRE(center.size() == 2);
    CHECK(center[0].primitiveWord == 1);
    CHECK(center[1].primitiveWord == 2);
    CHECK(center[0].zEntry < center[1].zEntry);
}

TEST_CASE("rasterization: per-ray conservativeness on random volumes") {
    CameraFrame frame(test_camera(96, 96));
    const Camera& cam = frame.camera();
    std::mt19937 rng(97);
    std::uniform_real_distribution<float> ru(0.3f, 1.2f);

    std::vector<VolumeOfInterest> volumes;
    for (int i = 0; i < 12; ++i) {
        VolumeOfInterest v;
        int fam = i % 3;
        v.primitiveWord = static_cast<uint32_t>(i);
        if (fam == 0) {
            v.family = VolumeOfInterest::Family::Sphere;
            v.center = random_point(rng, 2.0f);
            v.radius = ru(rng);
        } else if (fam == 1) {
            v.family = VolumeOfInterest::Family::OrientedBox;
            v.center = random_point(rng, 2.0f);
            v.halfExtents = {ru(rng), ru(rng), ru(rng)};
            v.rotation = random_quat(rng);
        } else {
            v.family = VolumeOfInterest::Family::Capsule;
            v.center = random_point(rng, 2.0f);
            v.axisEnd = v.center + random_point(rng, 1.0f) + Vec3{0.2f, 0.2f, 0.2f};
            v.radius = ru(rng);
        }
        volumes.push_back(v);
    }
    auto buffer = rasterize_volumes(volumes, frame);

    // every pixel-ray intersection lies inside a registered fragment interval
    for (int y = 0; y < cam.height; y += 3) {
        for (int x = 0; x < cam.width; x += 3) {
            Ray ray = frame.pixel_ray(x, y);
            for (const auto& v : volumes) {
                auto hit = ray_volume_intersect(ray, v);
                if (!hit) continue;
                float vz0 = ray.view_z_from_t(hit->first);
                float vz1 = ray.view_z_from_t(hit->second);
                if (vz1 < cam.nearZ || vz0 > cam.farZ) continue;
                float z0 = frame.ndc_from_view_z(std::max(vz0, cam.nearZ));
                float z1 = frame.ndc_from_view_z(std::min(vz1, cam.farZ));
                const auto& tile = buffer.at(x / kTileSize, y / kTileSize);
                bool covered = false;
                for (const Fragment& f : tile) {
                    if (f.primitiveWord == v.primitiveWord && f.zEntry <= z0 + 1e-6f &&
                        f.zExit >= z1 - 1e-6f) {
                        covered = true;
                        break;
                    }
                }
                CHECK(covered);
            }
        }
    }
}
