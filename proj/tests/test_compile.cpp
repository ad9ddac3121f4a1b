#include <doctest.h>

#include <random>

#include "blobtree/linear_tree.hpp"
#include "helpers.hpp"

using namespace blobtree;
using namespace testutil;

namespace {

std::unique_ptr<SceneNode> sphere_at(float x, float r = 0.5f) {
    return SceneNode::make_primitive(PrimitiveParams::sphere(r, Transform{{x, 0, 0}, Quat{}}));
}

} // namespace

TEST_CASE("blob packing round-trips bit-exactly") {
    CHECK(pack_blob(Blob{false, 0, 0, false, 0}) == 0u);
    Blob zero = unpack_blob(0);
    CHECK(!zero.isPrimitive);
    CHECK(zero.nodeOp == 0);
    CHECK(zero.ignoreMode == 0);
    CHECK(!zero.isLeft);
    CHECK(zero.ancestor == 0);

    std::mt19937 rng(3);
    std::uniform_int_distribution<uint32_t> word;
    for (int i = 0; i < 100000; ++i) {
        uint32_t w = word(rng);
        CHECK(pack_blob(unpack_blob(w)) == w);
    }

    Blob b{true, 31, 3, true, kAncestorSentinel};
    CHECK(unpack_blob(pack_blob(b)).ancestor == kAncestorSentinel);

    CHECK_THROWS_AS(pack_blob(Blob{false, 32, 0, false, 0}), std::invalid_argument);
    CHECK_THROWS_AS(pack_blob(Blob{false, 0, 0, false, kAncestorSentinel + 1}),
                    std::invalid_argument);
}

TEST_CASE("compile: single primitive") {
    auto tree = compile(*sphere_at(0));
    CHECK(tree.node_count() == 1);
    Blob b = tree.blob_at(tree.rootWord);
    CHECK(b.isPrimitive);
    CHECK(b.ancestor == kAncestorSentinel);
    CHECK(b.isLeft);
    CHECK(tree.primitiveWords.size() == 1);
}

TEST_CASE("compile: binary union layout") {
    auto root = SceneNode::make_operator(OperatorParams::sharp(OperatorKind::CsgUnion),
                                         sphere_at(-1), sphere_at(1));
    auto tree = compile(*root);
    REQUIRE(tree.node_count() == 3);
    CHECK(tree.nodes[0].isPrimitive);
    CHECK(tree.nodes[1].isPrimitive);
    CHECK(!tree.nodes[2].isPrimitive);

    Blob s0 = tree.blob_at(tree.nodes[0].word);
    Blob s1 = tree.blob_at(tree.nodes[1].word);
    Blob op = tree.blob_at(tree.nodes[2].word);
    CHECK(s0.isLeft);
    CHECK(!s1.isLeft);
    CHECK(s0.ancestor == tree.nodes[2].word);
    CHECK(s1.ancestor == tree.nodes[2].word);
    CHECK(op.ancestor == kAncestorSentinel);
    CHECK(op.ignoreMode == kNeverIgnore);
}

TEST_CASE("compile: left comb order and ignore modes") {
    auto comb = SceneNode::make_operator(
        OperatorParams::sharp(OperatorKind::CsgDiff),
        SceneNode::make_operator(
            OperatorParams::sharp(OperatorKind::CsgIntersect),
            SceneNode::make_operator(OperatorParams::sharp(OperatorKind::CsgUnion), sphere_at(0),
                                     sphere_at(1)),
            sphere_at(2)),
        sphere_at(3));
    auto tree = compile(*comb);
    REQUIRE(tree.node_count() == 7);
    // post-order: P0 P1 op1 P2 op2 P3 op3
    bool expectPrim[7] = {true, true, false, true, false, true, false};
    for (int i = 0; i < 7; ++i) CHECK(tree.nodes[i].isPrimitive == expectPrim[i]);
    CHECK(tree.blob_at(tree.nodes[2].word).ignoreMode == kNeverIgnore);
    CHECK(tree.blob_at(tree.nodes[4].word).ignoreMode == kIgnoreIfAnyAbsent);
    CHECK(tree.blob_at(tree.nodes[6].word).ignoreMode == kIgnoreIfLeftAbsent);
}

TEST_CASE("compile rejects missing operands") {
    SceneNode bad;
    bad.isPrimitive = false;
    bad.op = OperatorParams::sharp(OperatorKind::CsgUnion);
    bad.left = sphere_at(0);
    CHECK_THROWS_AS(compile(bad), std::invalid_argument);
}

TEST_CASE("post-order validity before and after fast rewrite") {
    std::mt19937 rng(17);
    for (int iter = 0; iter < 50; ++iter) {
        auto scene = random_tree(rng, 2 + iter % 30);
        auto tree = compile(*scene);
        for (const NodeRecord& rec : tree.nodes) {
            Blob b = tree.blob_at(rec.word);
            if (rec.word == tree.rootWord) CHECK(b.ancestor == kAncestorSentinel);
            else CHECK(b.ancestor > rec.word);
        }
        auto parents = tree;
        compute_fast_indices(tree);
        for (size_t i = 0; i < tree.nodes.size(); ++i) {
            Blob fast = tree.blob_at(tree.nodes[i].word);
            Blob parent = parents.blob_at(parents.nodes[i].word);
            if (tree.nodes[i].word == tree.rootWord) {
                CHECK(fast.ancestor == kAncestorSentinel);
            } else {
                CHECK(fast.ancestor > tree.nodes[i].word);
                // fast indices only increase
                CHECK(fast.ancestor >= parent.ancestor);
            }
        }
    }
}

TEST_CASE("fast indices: simple jumps") {
    // both leaves of a 3-node tree point at the root
    auto tree3 = compile(*SceneNode::make_operator(OperatorParams::sharp(OperatorKind::CsgUnion),
                                                   sphere_at(-1), sphere_at(1)));
    compute_fast_indices(tree3);
    CHECK(tree3.blob_at(tree3.nodes[0].word).ancestor == tree3.rootWord);
    CHECK(tree3.blob_at(tree3.nodes[1].word).ancestor == tree3.rootWord);

    // left comb of three primitives: the leftmost leaf skips the inner union
    auto comb = SceneNode::make_operator(
        OperatorParams::sharp(OperatorKind::CsgUnion),
        SceneNode::make_operator(OperatorParams::sharp(OperatorKind::CsgUnion), sphere_at(0),
                                 sphere_at(1)),
        sphere_at(2));
    auto tree = compile(*comb);
    compute_fast_indices(tree);
    CHECK(tree.blob_at(tree.nodes[0].word).ancestor == tree.rootWord);
    // the right leaf of the inner union cannot skip its parent
    CHECK(tree.blob_at(tree.nodes[1].word).ancestor == tree.nodes[2].word);
}

TEST_CASE("fast indices: cut at intersections and differences") {
    // chain of unions under an intersection, intersection under a union root
    auto chain = SceneNode::make_operator(
        OperatorParams::sharp(OperatorKind::CsgUnion),
        SceneNode::make_operator(
            OperatorParams::sharp(OperatorKind::CsgIntersect),
            SceneNode::make_operator(
                OperatorParams::sharp(OperatorKind::CsgUnion),
                SceneNode::make_operator(OperatorParams::sharp(OperatorKind::CsgUnion),
                                         sphere_at(0), sphere_at(1)),
                sphere_at(2)),
            sphere_at(3)),
        sphere_at(4));
    auto tree = compile(*chain);
    compute_fast_indices(tree);
    // ordinals: P0 P1 U1 P2 U2 P3 I P4 root
    uint32_t intersectWord = tree.nodes[6].word;
    REQUIRE(static_cast<OperatorKind>(tree.nodes[6].nodeOp) == OperatorKind::CsgIntersect);
    // the left-chain chase from P0 skips U1 and U2 but stops at the intersection
    CHECK(tree.blob_at(tree.nodes[0].word).ancestor == intersectWord);
    CHECK(tree.blob_at(tree.nodes[2].word).ancestor == intersectWord);

    // right chains must not bypass difference nodes
    auto diffChain = SceneNode::make_operator(
        OperatorParams::sharp(OperatorKind::CsgDiff), sphere_at(0),
        SceneNode::make_operator(OperatorParams::sharp(OperatorKind::CsgDiff), sphere_at(1),
                                 sphere_at(2)));
    auto dtree = compile(*diffChain);
    compute_fast_indices(dtree);
    // inner diff is a right child of the root diff; its own right chain stops there
    uint32_t innerDiff = dtree.nodes[3].word;
    REQUIRE(static_cast<OperatorKind>(dtree.nodes[3].nodeOp) == OperatorKind::CsgDiff);
    CHECK(dtree.blob_at(dtree.nodes[2].word).ancestor == innerDiff);
    CHECK(dtree.blob_at(innerDiff).ancestor == dtree.rootWord);
}

TEST_CASE("roi propagation") {
    // root compact union d=0.4 with a nested compact union d=0.25
    auto nested = SceneNode::make_operator(
        OperatorParams::compact(OperatorKind::CompactUnion, 0.3f, 0.4f),
        SceneNode::make_operator(OperatorParams::compact(OperatorKind::CompactUnion, 0.2f, 0.25f),
                                 sphere_at(0), sphere_at(1)),
        sphere_at(2));
    auto tree = compile(*nested);
    auto upper = propagate_roi(tree);
    // ordinals: P0 P1 inner P2 root
    CHECK(upper[4] == 0.0f);
    CHECK(upper[2] == doctest::Approx(0.4));
    CHECK(upper[3] == doctest::Approx(0.4));
    CHECK(upper[0] == doctest::Approx(0.4)); // max(0.4, 0.25)
    CHECK(upper[1] == doctest::Approx(0.4));

    // all-sharp tree: every node keeps the root range
    std::vector<std::unique_ptr<SceneNode>> leaves;
    for (int i = 0; i < 6; ++i) leaves.push_back(sphere_at(static_cast<float>(i)));
    auto sharp = union_comb(std::move(leaves));
    auto stree = compile(*sharp);
    for (float u : propagate_roi(stree)) CHECK(u == 0.0f);

    // bounded smooth operators pass the parent range and taint the tree
    auto smooth = SceneNode::make_operator(OperatorParams::smooth(OperatorKind::SmoothUnion, 0.3f),
                                           sphere_at(0), sphere_at(1));
    auto smtree = compile(*smooth);
    CHECK(smtree.hasUnboundedBlend);
    CHECK(!tree.hasUnboundedBlend);
    for (float u : propagate_roi(smtree)) CHECK(u == 0.0f);
}

TEST_CASE("volumes of interest: families and sizes") {
    auto doc = SceneNode::make_operator(
        OperatorParams::compact(OperatorKind::CompactUnion, 0.4f, 0.4f),
        SceneNode::make_primitive(PrimitiveParams::sphere(1.0f)),
        SceneNode::make_primitive(PrimitiveParams::torus(2.0f, 0.5f, Transform{{5, 0, 0}, Quat{}})));
    auto tree = compile(*doc);
    auto upper = propagate_roi(tree);
    auto volumes = build_volumes_of_interest(tree, upper);
    REQUIRE(volumes.size() == 2);
    CHECK(volumes[0].family == VolumeOfInterest::Family::Sphere);
    CHECK(volumes[0].radius == doctest::Approx(1.4).epsilon(1e-4));
    CHECK(volumes[1].family == VolumeOfInterest::Family::Sphere);
    CHECK(volumes[1].radius == doctest::Approx(2.9).epsilon(1e-4)); // R + r + 0.4
    CHECK(volumes[1].center.x == doctest::Approx(5.0));

    // surface reach of a torus from its center plus the range offset
    auto lone = compile(*SceneNode::make_primitive(PrimitiveParams::torus(2.0f, 0.5f)));
    std::vector<float> tu{0.1f};
    auto tvol = build_volumes_of_interest(lone, tu);
    CHECK(tvol[0].radius == doctest::Approx(2.6).epsilon(1e-4));

    Quat rot = quat_from_axis_angle({0, 0, 1}, 0.7f);
    auto boxScene =
        SceneNode::make_primitive(PrimitiveParams::box({1, 2, 1}, Transform{{0, 0, 0}, rot}));
    auto btree = compile(*boxScene);
    std::vector<float> bu{0.5f};
    auto bvol = build_volumes_of_interest(btree, bu);
    CHECK(bvol[0].family == VolumeOfInterest::Family::OrientedBox);
    CHECK(bvol[0].halfExtents.x == doctest::Approx(1.5).epsilon(1e-4));
    CHECK(bvol[0].halfExtents.y == doctest::Approx(2.5).epsilon(1e-4));
}

TEST_CASE("volumes of interest contain the dilated field region") {
    std::mt19937 rng(29);
    std::uniform_real_distribution<float> uu(0.0f, 0.6f);
    for (int iter = 0; iter < 60; ++iter) {
        auto prim = random_primitive(rng, 1.5f);
        auto tree = compile(*SceneNode::make_primitive(prim));
        float upper = uu(rng);
        std::vector<float> rois{upper};
        auto volumes = build_volumes_of_interest(tree, rois);
        REQUIRE(volumes.size() == 1);
        for (int i = 0; i < 10000; ++i) {
            Vec3 p = random_point(rng, 5.0f);
            if (eval_primitive(prim, p) <= upper) CHECK(volumes[0].contains(p));
        }
    }
}

TEST_CASE("compile/decode identity against recursive evaluation") {
    std::mt19937 rng(37);
    for (int iter = 0; iter < 40; ++iter) {
        auto scene = random_tree(rng, 2 + iter % 24);
        auto tree = compile(*scene);
        for (int i = 0; i < 25; ++i) {
            Vec3 p = random_point(rng, 4.0f);
            float a = eval_scene(*scene, p);
            float b = eval_full(tree, p);
            CHECK(ulp_distance(a, b) <= 1);
        }
    }
}

TEST_CASE("in-place primitive parameter update") {
    auto tree = compile(*sphere_at(0, 1.0f));
    CHECK(eval_full(tree, {2, 0, 0}) == doctest::Approx(1.0));
    update_primitive_params(tree, tree.primitiveWords[0],
                            PrimitiveParams::sphere(1.5f, Transform{{0, 0, 0}, Quat{}}));
    CHECK(eval_full(tree, {2, 0, 0}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(
        update_primitive_params(tree, tree.primitiveWords[0], PrimitiveParams::box({1, 1, 1})),
        std::invalid_argument);
}
