#pragma once

#include <bit>
#include <cstdint>
#include <memory>
#include <random>

#include "blobtree/scene.hpp"
#include "blobtree/traversal.hpp"

namespace testutil {

using namespace blobtree;

inline int64_t ulp_distance(float a, float b) {
    if (a == b) return 0;
    if (std::isnan(a) || std::isnan(b)) return INT64_MAX;
    if (std::isinf(a) || std::isinf(b)) return INT64_MAX;
    auto remap = [](float v) -> int64_t {
        int32_t i = std::bit_cast<int32_t>(v);
        return i < 0 ? -static_cast<int64_t>(i & 0x7FFFFFFF) : static_cast<int64_t>(i);
    };
    int64_t d = remap(a) - remap(b);
    return d < 0 ? -d : d;
}

inline Vec3 random_point(std::mt19937& rng, float range) {
    std::uniform_real_distribution<float> u(-range, range);
    return {u(rng), u(rng), u(rng)};
}

inline Quat random_quat(std::mt19937& rng) {
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    Quat q{u(rng), u(rng), u(rng), u(rng)};
    if (length(q) < 1e-3f) q = Quat{1, 0, 0, 0};
    return normalize(q);
}

inline PrimitiveParams random_primitive(std::mt19937& rng, float posRange = 2.5f) {
    std::uniform_real_distribution<float> size(0.3f, 1.4f);
    std::uniform_int_distribution<int> kind(0, 5);
    Transform frame{random_point(rng, posRange), random_quat(rng)};
    switch (kind(rng)) {
        case 0: return PrimitiveParams::sphere(size(rng), frame);
        case 1: {
            float a = size(rng), b = size(rng), c = size(rng);
            return PrimitiveParams::ellipsoid({a, b, c}, frame);
        }
        case 2: {
            float major = size(rng);
            return PrimitiveParams::torus(major, 0.4f * major, frame);
        }
        case 3: return PrimitiveParams::box({size(rng), size(rng), size(rng)}, frame);
        case 4: {
            float r0 = size(rng);
            return PrimitiveParams::sphere_cone(r0, 0.5f * r0, 1.2f * r0, frame);
        }
        default: {
            // random positive definite quadratic form around a random center
            std::uniform_real_distribution<float> lam(0.5f, 2.2f);
            Quat rq = random_quat(rng);
            float l[3] = {lam(rng), lam(rng), lam(rng)};
            Vec3 ax = rotate(rq, Vec3{1, 0, 0});
            Vec3 ay = rotate(rq, Vec3{0, 1, 0});
            Vec3 az = rotate(rq, Vec3{0, 0, 1});
            auto A = [&](int i, int j) {
                const Vec3 cols[3] = {ax, ay, az};
                auto at = [&](const Vec3& v, int n) { return n == 0 ? v.x : n == 1 ? v.y : v.z; };
                float s = 0;
                for (int n = 0; n < 3; ++n) s += l[n] * at(cols[n], i) * at(cols[n], j);
                return s;
            };
            Vec3 m = random_point(rng, 0.4f);
            std::uniform_real_distribution<float> isoDist(0.3f, 1.2f);
            float iso = isoDist(rng);
            float a11 = A(0, 0), a22 = A(1, 1), a33 = A(2, 2);
            float a12 = A(0, 1), a13 = A(0, 2), a23 = A(1, 2);
            // b = -2 A m, c = m^T A m - iso
            float bx = -2.0f * (a11 * m.x + 0.5f * a12 * m.y + 0.5f * a13 * m.z);
            float by = -2.0f * (a22 * m.y + 0.5f * a12 * m.x + 0.5f * a23 * m.z);
            float bz = -2.0f * (a33 * m.z + 0.5f * a13 * m.x + 0.5f * a23 * m.y);
            float mAm = a11 * m.x * m.x + a22 * m.y * m.y + a33 * m.z * m.z + a12 * m.x * m.y +
                        a13 * m.x * m.z + a23 * m.y * m.z;
            return PrimitiveParams::quadric({a11, a22, a33, a12, a13, a23, bx, by, bz, mAm - iso},
                                            frame);
        }
    }
}

inline OperatorParams random_operator(std::mt19937& rng, bool compactOrSharpOnly = false) {
    std::uniform_real_distribution<float> ku(0.1f, 0.9f);
    std::uniform_real_distribution<float> du(1.0f, 2.2f);
    std::uniform_int_distribution<int> pick(0, compactOrSharpOnly ? 5 : 8);
    float k = ku(rng);
    float d = k * du(rng);
    switch (pick(rng)) {
        case 0: return OperatorParams::sharp(OperatorKind::CsgUnion);
        case 1: return OperatorParams::sharp(OperatorKind::CsgIntersect);
        case 2: return OperatorParams::sharp(OperatorKind::CsgDiff);
        case 3: return OperatorParams::compact(OperatorKind::CompactUnion, k, d);
        case 4: return OperatorParams::compact(OperatorKind::CompactIntersect, k, d);
        case 5: return OperatorParams::compact(OperatorKind::CompactDiff, k, d);
        case 6: return OperatorParams::smooth(OperatorKind::SmoothUnion, k);
        case 7: return OperatorParams::smooth(OperatorKind::SmoothIntersect, k);
        default: return OperatorParams::smooth(OperatorKind::SmoothDiff, k);
    }
}

// Stack depth of a classic bottom-up post-order evaluation.
inline uint32_t eval_stack_depth(const SceneNode& node) {
    if (node.isPrimitive) return 1;
    return std::max(eval_stack_depth(*node.left), eval_stack_depth(*node.right) + 1);
}

inline std::unique_ptr<SceneNode> random_tree_rec(std::mt19937& rng, uint32_t primCount,
                                                  bool compactOrSharpOnly) {
    if (primCount == 1) return SceneNode::make_primitive(random_primitive(rng));
    // left-heavy bias keeps evaluation stacks shallow
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    uint32_t maxLeft = primCount - 1;
    uint32_t minLeft = 1;
    uint32_t left;
    if (u(rng) < 0.75f) {
        left = std::max(minLeft, static_cast<uint32_t>(std::ceil(primCount * 0.5f)));
        left += static_cast<uint32_t>(u(rng) * (maxLeft - left + 1));
        left = std::min(left, maxLeft);
    } else {
        left = minLeft + static_cast<uint32_t>(u(rng) * maxLeft);
        left = std::min(left, maxLeft);
    }
    auto l = random_tree_rec(rng, left, compactOrSharpOnly);
    auto r = random_tree_rec(rng, primCount - left, compactOrSharpOnly);
    return SceneNode::make_operator(random_operator(rng, compactOrSharpOnly), std::move(l),
                                    std::move(r));
}

inline std::unique_ptr<SceneNode> random_tree(std::mt19937& rng, uint32_t primCount,
                                              bool compactOrSharpOnly = false,
                                              uint32_t maxStackDepth = 20) {
    for (;;) {
        auto tree = random_tree_rec(rng, primCount, compactOrSharpOnly);
        if (eval_stack_depth(*tree) <= maxStackDepth) return tree;
    }
}

// Left comb of unions over a list of primitives.
inline std::unique_ptr<SceneNode> union_comb(std::vector<std::unique_ptr<SceneNode>> leaves) {
    auto node = std::move(leaves[0]);
    for (size_t i = 1; i < leaves.size(); ++i)
        node = SceneNode::make_operator(OperatorParams::sharp(OperatorKind::CsgUnion),
                                        std::move(node), std::move(leaves[i]));
    return node;
}

} // namespace testutil
