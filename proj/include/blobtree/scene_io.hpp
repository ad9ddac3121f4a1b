#pragma once

#include <string>

#include "blobtree/camera.hpp"
#include "blobtree/scene.hpp"

namespace blobtree {

struct SceneError : std::runtime_error {
    explicit SceneError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SceneDocument {
    Camera camera{};
    std::unique_ptr<SceneNode> root;
};

// JSON scene documents. Operators: {"op": name, "k": .., "d": .., "left": ..,
// "right": ..} with d defaulting to k; primitives: {"prim": name, shape
// fields, "translate": [x,y,z], "rotate_quat": [w,x,y,z]}. Parse errors carry
// the node path.
SceneDocument parse_scene(const std::string& text);
SceneDocument load_scene_file(const std::string& path);
std::string serialize_scene(const SceneDocument& doc);

// Procedural test scenes: a lattice of small subobjects (a few primitives
// blended together) merged by a left-heavy comb of sharp unions.
//   preset "grid":  gridN^3 subobjects
//   preset "cells": exactly gridN subobjects on a near-cubic lattice
// subobjectKind: "tri" (3 primitives), "hex" (6), "mixed" (3-6);
// blendMode: "sharp" or "smooth" (compact smooth union inside subobjects).
SceneDocument generate_synthetic(const std::string& preset, uint32_t gridN,
                                 const std::string& subobjectKind, const std::string& blendMode,
                                 uint64_t seed);

} // namespace blobtree
