#pragma once

#include <span>
#include <stdexcept>

#include "blobtree/linear_tree.hpp"

namespace blobtree {

inline constexpr uint32_t kTraversalStackCapacity = 22;
inline constexpr uint32_t kMaxOverlapLimit = 96;
inline constexpr uint32_t kParamCacheCapacityBytes = 3072;
inline constexpr uint32_t kParamCacheCapacityFloats = kParamCacheCapacityBytes / 4;

struct TraversalOverflow : std::runtime_error {
    TraversalOverflow() : std::runtime_error("traversal stack overflow") {}
};

struct ViewOverflow : std::runtime_error {
    ViewOverflow() : std::runtime_error("pruned view node array overflow") {}
};

template <typename T>
class FixedStack {
public:
    bool empty() const { return count_ == 0; }
    uint32_t size() const { return count_; }
    const T& top() const { return items_[count_ - 1]; }
    T& top() { return items_[count_ - 1]; }
    void push(const T& v) {
        if (count_ >= kTraversalStackCapacity) throw TraversalOverflow{};
        items_[count_++] = v;
    }
    void pop() { --count_; }

private:
    T items_[kTraversalStackCapacity];
    uint32_t count_ = 0;
};

// A stacked node may not be dereferenced past the next unprocessed active
// primitive; the root sentinel compares greater than every node index.
inline bool shadow(const Blob& blob, uint32_t nextPrimitiveWord) {
    return blob.ancestor > nextPrimitiveWord;
}

// Detects operators with both operands active. Condition A: the stack top
// points exactly at the dereferenced node. Condition B covers fast-pointer
// configurations: a left child (or the root) whose ancestor reaches at least
// as far as the stacked one.
inline bool pop_required(uint32_t opWord, const Blob& stackedBlob, const Blob& nodeBlob) {
    if (opWord == stackedBlob.ancestor) return true;
    return nodeBlob.ancestor >= stackedBlob.ancestor &&
           (!ancestor_valid(nodeBlob.ancestor) || nodeBlob.isLeft);
}

// Sparse bottom-up traversal over the active primitives (ascending node word
// indices). The visitor sees each active primitive once, each operator with
// two active operands once (in storage order), and a pass event for every
// dereferenced node whose other subtree holds no active primitive.
//
// Visitor requirements:
//   Payload primitive(const Blob&, uint32_t word)
//   Payload combine(Payload left, Payload right, const Blob&, uint32_t word)
//   Payload pass(Payload v, const Blob&, uint32_t word, bool fromLeft)
//
// Works with parent or fast ancestor indices; active must be non-empty.
template <typename Payload, typename Visitor>
Payload sparse_traverse(const LinearTree& tree, std::span<const uint32_t> active, Visitor&& vis) {
    struct Entry {
        Blob blob;
        Payload data;
    };
    FixedStack<Entry> stack;
    const size_t n = active.size();

    for (size_t i = 0; i < n; ++i) {
        uint32_t word = active[i];
        Blob nodeBlob = tree.blob_at(word);
        Payload nodeData = vis.primitive(nodeBlob, word);
        if (!stack.empty())
            nodeBlob.ancestor = std::min(nodeBlob.ancestor, stack.top().blob.ancestor);

        for (;;) {
            bool shadowed = (i + 1 < n) && shadow(nodeBlob, active[i + 1]);
            bool lastDone =
                (i + 1 == n) && (stack.empty() && !ancestor_valid(nodeBlob.ancestor));
            if (shadowed || lastDone) break;
            if (!ancestor_valid(nodeBlob.ancestor))
                throw std::logic_error("traversal walked past the root");

            uint32_t opWord = nodeBlob.ancestor;
            bool fromLeft = nodeBlob.isLeft;
            nodeBlob = tree.blob_at(opWord);

            bool combined = false;
            if (!stack.empty()) {
                const Entry& c = stack.top();
                if (pop_required(opWord, c.blob, nodeBlob)) {
                    nodeData = vis.combine(c.data, nodeData, nodeBlob, opWord);
                    stack.pop();
                    combined = true;
                }
            }
            if (!combined) nodeData = vis.pass(nodeData, nodeBlob, opWord, fromLeft);

            if (!stack.empty())
                nodeBlob.ancestor = std::min(nodeBlob.ancestor, stack.top().blob.ancestor);
        }
        stack.push({nodeBlob, nodeData});
    }

    Payload result = stack.top().data;
    stack.pop();
    if (!stack.empty()) throw std::logic_error("traversal left values on the stack");
    return result;
}

// Direct sparse field evaluation. Dereferenced single-operand intersections
// (and differences entered from the right) contribute +inf, which the
// operator algebra then propagates or discards. Empty active set gives +inf.
FieldValue eval_direct_sparse(const LinearTree& tree, std::span<const uint32_t> active, Point3 p);

// ---------------------------------------------------------------------------
// Pruned tree view

// Compacted per-tile copy of the active part of the tree: the active
// primitives plus every operator with two active operands, in storage order
// (2n-1 entries). Operators whose operands are present but unused are
// rewritten to the reserved codes; parameters live in a bounded local cache
// with spill-over offsets addressing the source tree (high bit set).
struct PrunedView {
    const LinearTree* source = nullptr;
    std::vector<Blob> blobs;
    std::vector<uint32_t> paramOffsets;
    std::vector<float> cache;
    uint32_t primitiveCount = 0;
    bool rootUsed = false; // 0 usage at the root: no iso-crossing in the volume

    uint32_t cache_bytes() const { return static_cast<uint32_t>(cache.size() * 4); }
    uint32_t node_count() const { return static_cast<uint32_t>(blobs.size()); }
};

inline constexpr uint32_t kViewMainMemoryBit = 0x80000000u;

PrunedView build_pruned_view(const LinearTree& tree, std::span<const uint32_t> active);

// Plain bottom-up stack evaluation of a view (storage order, pop two / push
// one per operator). Returns +inf when the view's root is unused.
FieldValue eval_pruned(const PrunedView& view, Point3 p);

// Classic full post-order walk over every node; the reference evaluator.
// Uses an unbounded stack.
FieldValue eval_full(const LinearTree& tree, Point3 p);

} // namespace blobtree
