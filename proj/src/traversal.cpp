#include "blobtree/traversal.hpp"

#include <cstring>

namespace blobtree {

namespace {

inline uint8_t absent_side_mask(bool fromLeft) {
    // Entering from the left means the right operand is absent, and the
    // other way round.
    return fromLeft ? kIgnoreIfRightAbsent : kIgnoreIfLeftAbsent;
}

struct DirectEvalVisitor {
    const LinearTree& tree;
    Point3 p;

    FieldValue primitive(const Blob& b, uint32_t word) const {
        return eval_primitive_raw(b.nodeOp, tree.params_at(word), p);
    }
    FieldValue combine(FieldValue left, FieldValue right, const Blob& b, uint32_t word) const {
        return eval_operator_raw(b.nodeOp, tree.params_at(word), left, right);
    }
    FieldValue pass(FieldValue v, const Blob& b, uint32_t, bool fromLeft) const {
        return (b.ignoreMode & absent_side_mask(fromLeft)) ? kFieldInfinity : v;
    }
};

uint32_t param_float_count(const Blob& b) {
    if (b.isPrimitive)
        return kTransformFloatCount + shape_float_count(static_cast<PrimitiveKind>(b.nodeOp));
    return is_sharp(static_cast<OperatorKind>(b.nodeOp)) ? 0 : 2;
}

struct ViewBuildVisitor {
    const LinearTree& tree;
    PrunedView& view;
    uint32_t capacity; // 2n-1

    void append(Blob blob, uint32_t word, bool copyParams) {
        if (view.blobs.size() >= capacity) throw ViewOverflow{};
        uint32_t offset = 0;
        uint32_t floats = copyParams ? param_float_count(blob) : 0;
        if (floats > 0 && view.cache.size() + floats <= kParamCacheCapacityFloats) {
            offset = static_cast<uint32_t>(view.cache.size());
            const float* src = tree.params_at(word);
            view.cache.insert(view.cache.end(), src, src + floats);
        } else if (floats > 0) {
            offset = kViewMainMemoryBit | (4 * (word + 1));
        }
        view.blobs.push_back(blob);
        view.paramOffsets.push_back(offset);
    }

    uint8_t primitive(const Blob& b, uint32_t word) {
        append(b, word, true);
        ++view.primitiveCount;
        return 1;
    }

    uint8_t combine(uint8_t left, uint8_t right, const Blob& b, uint32_t word) {
        uint8_t children = static_cast<uint8_t>((left << 1) | right);
        uint8_t opType =
            ((~children & b.ignoreMode) & 0x3) == 0 ? children : static_cast<uint8_t>(0);
        Blob stored = b;
        bool used = opType != 0;
        if (opType != 0x3) stored.nodeOp = opType; // reserved code rewrite
        append(stored, word, opType == 0x3);
        return used ? 1 : 0;
    }

    uint8_t pass(uint8_t usage, const Blob& b, uint32_t, bool fromLeft) {
        // Selector nodes are not retained; they only gate the usage bit.
        if (b.ignoreMode & absent_side_mask(fromLeft)) return 0;
        return usage;
    }
};

} // namespace

FieldValue eval_direct_sparse(const LinearTree& tree, std::span<const uint32_t> active, Point3 p) {
    if (active.empty()) return kFieldInfinity;
    DirectEvalVisitor vis{tree, p};
    return sparse_traverse<FieldValue>(tree, active, vis);
}

PrunedView build_pruned_view(const LinearTree& tree, std::span<const uint32_t> active) {
    PrunedView view;
    view.source = &tree;
    if (active.empty()) return view;
    uint32_t capacity = static_cast<uint32_t>(2 * active.size() - 1);
    view.blobs.reserve(capacity);
    view.paramOffsets.reserve(capacity);
    ViewBuildVisitor vis{tree, view, capacity};
    uint8_t rootUsage = sparse_traverse<uint8_t>(tree, active, vis);
    view.rootUsed = rootUsage != 0;
    return view;
}

FieldValue eval_pruned(const PrunedView& view, Point3 p) {
    if (!view.rootUsed) return kFieldInfinity;
    FixedStack<FieldValue> stack;
    const size_t n = view.blobs.size();
    for (size_t i = 0; i < n; ++i) {
        const Blob& b = view.blobs[i];
        uint32_t offset = view.paramOffsets[i];
        const float* params = (offset & kViewMainMemoryBit)
                                  ? &view.source->data[offset & ~kViewMainMemoryBit]
                                  : view.cache.data() + offset;
        FieldValue value;
        if (b.isPrimitive) {
            value = eval_primitive_raw(b.nodeOp, params, p);
        } else {
            FieldValue right = stack.top();
            stack.pop();
            FieldValue left = stack.top();
            stack.pop();
            value = eval_operator_raw(b.nodeOp, params, left, right);
        }
        stack.push(value);
    }
    return stack.top();
}

FieldValue eval_full(const LinearTree& tree, Point3 p) {
    std::vector<FieldValue> stack;
    stack.reserve(64);
    for (const NodeRecord& rec : tree.nodes) {
        if (rec.isPrimitive) {
            stack.push_back(eval_primitive_raw(rec.nodeOp, tree.params_at(rec.word), p));
        } else {
            FieldValue right = stack.back();
            stack.pop_back();
            FieldValue left = stack.back();
            stack.pop_back();
            stack.push_back(eval_operator_raw(rec.nodeOp, tree.params_at(rec.word), left, right));
        }
    }
    return stack.back();
}

} // namespace blobtree
