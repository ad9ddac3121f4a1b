#pragma once

#include <memory>
#include <utility>

#include "blobtree/field.hpp"

namespace blobtree {

// Source construction tree: primitives at the leaves, binary operators
// everywhere else. This is the authoring-side structure; rendering works on
// the compiled LinearTree.
struct SceneNode {
    bool isPrimitive = true;
    PrimitiveParams primitive{};
    OperatorParams op{};
    std::unique_ptr<SceneNode> left;
    std::unique_ptr<SceneNode> right;

    static std::unique_ptr<SceneNode> make_primitive(PrimitiveParams p) {
        auto n = std::make_unique<SceneNode>();
        n->isPrimitive = true;
        n->primitive = std::move(p);
        return n;
    }

    static std::unique_ptr<SceneNode> make_operator(OperatorParams op,
                                                    std::unique_ptr<SceneNode> left,
                                                    std::unique_ptr<SceneNode> right) {
        auto n = std::make_unique<SceneNode>();
        n->isPrimitive = false;
        n->op = op;
        n->left = std::move(left);
        n->right = std::move(right);
        return n;
    }

    std::unique_ptr<SceneNode> clone() const;
};

// Recursive reference evaluation of the source tree.
FieldValue eval_scene(const SceneNode& node, Point3 p);

uint32_t count_primitives(const SceneNode& node);
uint32_t count_nodes(const SceneNode& node);

} // namespace blobtree
