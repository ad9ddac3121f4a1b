#include <doctest.h>

#include <random>

#include "blobtree/scene_io.hpp"
#include "helpers.hpp"

using namespace blobtree;
using namespace testutil;

TEST_CASE("parse: minimal single-sphere document") {
    auto doc = parse_scene(R"({
        "camera": {"position": [0,0,-5], "target": [0,0,0]},
        "root": {"prim": "sphere", "r": 1.0}
    })");
    REQUIRE(doc.root);
    CHECK(doc.root->isPrimitive);
    CHECK(count_primitives(*doc.root) == 1);
    CHECK(doc.camera.position.z == doctest::Approx(-5.0));
    CHECK(eval_scene(*doc.root, {2, 0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("parse: operator arity and field errors carry the node path") {
    CHECK_THROWS_WITH_AS(
        parse_scene(R"({"root": {"op": "csg_union", "left": {"prim": "sphere", "r": 1}}})"),
        doctest::Contains("root"), SceneError);
    CHECK_THROWS_WITH_AS(parse_scene(R"({"root": {"prim": "wedge"}})"),
                         doctest::Contains("unknown primitive"), SceneError);
    CHECK_THROWS_WITH_AS(parse_scene(R"({"root": {"op": "warp"}})"),
                         doctest::Contains("unknown operator"), SceneError);
    CHECK_THROWS_AS(parse_scene(R"({"root": {"prim": "sphere", "r": -2}})"), SceneError);
    // nested path shows up in the message
    CHECK_THROWS_WITH_AS(parse_scene(R"({
        "root": {"op": "csg_union",
                 "left": {"prim": "sphere", "r": 1},
                 "right": {"op": "csg_diff",
                           "left": {"prim": "sphere"},
                           "right": {"prim": "sphere", "r": 1}}}
    })"),
                         doctest::Contains("root.right.left"), SceneError);
}

TEST_CASE("parse: compact range validation and default") {
    // d defaults to k
    auto doc = parse_scene(R"({
        "root": {"op": "compact_union", "k": 0.5,
                 "left": {"prim": "sphere", "r": 1},
                 "right": {"prim": "sphere", "r": 1}}
    })");
    CHECK(doc.root->op.range == doctest::Approx(0.5));
    // d <= k/6 is rejected
    CHECK_THROWS_WITH_AS(parse_scene(R"({
        "root": {"op": "compact_union", "k": 0.6, "d": 0.1,
                 "left": {"prim": "sphere", "r": 1},
                 "right": {"prim": "sphere", "r": 1}}
    })"),
                         doctest::Contains("k/6"), SceneError);
    CHECK_THROWS_AS(parse_scene(R"({
        "root": {"op": "smooth_union", "k": -1,
                 "left": {"prim": "sphere", "r": 1},
                 "right": {"prim": "sphere", "r": 1}}
    })"),
                    SceneError);
}

TEST_CASE("parse: invalid transform") {
    CHECK_THROWS_WITH_AS(
        parse_scene(R"({"root": {"prim": "sphere", "r": 1, "rotate_quat": [0.9, 0, 0, 0]}})"),
        doctest::Contains("unit length"), SceneError);
    CHECK_THROWS_AS(
        parse_scene(R"({"root": {"prim": "sphere", "r": 1, "translate": [1, 2]}})"), SceneError);
}

TEST_CASE("serialize/parse round trip preserves the field") {
    std::mt19937 rng(113);
    for (int iter = 0; iter < 10; ++iter) {
        SceneDocument doc;
        doc.camera = Camera{};
        doc.root = random_tree(rng, 6);
        std::string text = serialize_scene(doc);
        SceneDocument back = parse_scene(text);
        for (int i = 0; i < 50; ++i) {
            Vec3 p = random_point(rng, 3.0f);
            CHECK(ulp_distance(eval_scene(*doc.root, p), eval_scene(*back.root, p)) == 0);
        }
        // a second round trip is textually identical
        CHECK(serialize_scene(back) == text);
    }
}

TEST_CASE("generator: counts and determinism") {
    auto doc = generate_synthetic("grid", 2, "tri", "sharp", 9);
    CHECK(count_primitives(*doc.root) == 24);
    CHECK(count_nodes(*doc.root) == 47); // 24 primitives + 23 operators

    auto one = generate_synthetic("grid", 1, "hex", "smooth", 9);
    CHECK(count_primitives(*one.root) == 6);

    auto cells = generate_synthetic("cells", 16, "hex", "sharp", 9);
    CHECK(count_primitives(*cells.root) == 96);

    auto a = serialize_scene(generate_synthetic("grid", 2, "mixed", "smooth", 1234));
    auto b = serialize_scene(generate_synthetic("grid", 2, "mixed", "smooth", 1234));
    CHECK(a == b);
    auto c = serialize_scene(generate_synthetic("grid", 2, "mixed", "smooth", 99));
    CHECK(a != c);

    CHECK_THROWS_AS(generate_synthetic("spiral", 2, "tri", "sharp", 1), SceneError);
    CHECK_THROWS_AS(generate_synthetic("grid", 2, "blob", "sharp", 1), SceneError);
    CHECK_THROWS_AS(generate_synthetic("grid", 2, "tri", "fuzzy", 1), SceneError);
}

TEST_CASE("generated scenes compile and render sanely") {
    auto doc = generate_synthetic("grid", 2, "mixed", "smooth", 41);
    auto tree = compile(*doc.root);
    compute_fast_indices(tree);
    CHECK(!tree.hasUnboundedBlend); // smooth mode uses compact blends
    auto rois = propagate_roi(tree);
    for (uint32_t w : tree.primitiveWords) {
        float u = rois[tree.ordinal_of_word(w)];
        CHECK(u >= 0.0f);
    }
}
