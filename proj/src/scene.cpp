#include "blobtree/scene.hpp"

namespace blobtree {

std::unique_ptr<SceneNode> SceneNode::clone() const {
    auto n = std::make_unique<SceneNode>();
    n->isPrimitive = isPrimitive;
    n->primitive = primitive;
    n->op = op;
    if (left) n->left = left->clone();
    if (right) n->right = right->clone();
    return n;
}

FieldValue eval_scene(const SceneNode& node, Point3 p) {
    if (node.isPrimitive) return eval_primitive(node.primitive, p);
    return eval_operator(node.op, eval_scene(*node.left, p), eval_scene(*node.right, p));
}

uint32_t count_primitives(const SceneNode& node) {
    if (node.isPrimitive) return 1;
    return count_primitives(*node.left) + count_primitives(*node.right);
}

uint32_t count_nodes(const SceneNode& node) {
    if (node.isPrimitive) return 1;
    return 1 + count_nodes(*node.left) + count_nodes(*node.right);
}

} // namespace blobtree
