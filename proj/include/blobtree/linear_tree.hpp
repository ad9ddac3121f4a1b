#pragma once

#include <span>
#include <vector>

#include "blobtree/scene.hpp"

namespace blobtree {

// ---------------------------------------------------------------------------
// Blob: packed 32-bit node header.
//
// Bit layout, MSB to LSB: isPrimitive(1) nodeop(5) ignoreMode(2) isLeft(1)
// ancestor(23). The all-ones ancestor value is the root sentinel; it compares
// greater than every real node index, which the shadowing test relies on.

inline constexpr uint32_t kAncestorSentinel = 0x7FFFFFu;

struct Blob {
    bool isPrimitive = false;
    uint8_t nodeOp = 0;     // PrimitiveKind or operator code, 5 bits
    uint8_t ignoreMode = 0; // 2 bits
    bool isLeft = false;
    uint32_t ancestor = kAncestorSentinel; // node word index, 23 bits
};

inline bool ancestor_valid(uint32_t a) { return a != kAncestorSentinel; }

// Bit-exact inverse pair; pack throws std::invalid_argument when a field
// exceeds its bit budget (nodeop >= 32 or a non-sentinel ancestor >= 2^23-1).
uint32_t pack_blob(const Blob& b);
Blob unpack_blob(uint32_t word);

// ---------------------------------------------------------------------------
// LinearTree: post-order array of 128-bit words.
//
// `data` holds 4 floats per word. A node starts at word index w: the blob
// header occupies the first 32 bits of data[4w] (the remaining 96 bits pad
// the word), parameters start at data[4(w+1)]. Primitive parameters are
// [translate(3), rotation(4), shape...]; smooth/compact operators store
// [k, d]; sharp CSG stores nothing. Node word indices fit 23 bits.

struct NodeRecord {
    uint32_t word = 0;                       // word index of the node header
    uint32_t parentWord = kAncestorSentinel; // original parent, sentinel at root
    int32_t leftChild = -1;                  // child ordinals, -1 for primitives
    int32_t rightChild = -1;
    bool isPrimitive = false;
    uint8_t nodeOp = 0;
};

class LinearTree {
public:
    std::vector<float> data;
    std::vector<NodeRecord> nodes;        // post-order ordinals
    std::vector<uint32_t> primitiveWords; // ascending node word indices
    uint32_t rootWord = 0;
    bool hasUnboundedBlend = false; // bounded smooth kinds present: volumes of
                                    // interest are unsound, oracle rendering only

    Blob blob_at(uint32_t word) const;
    void set_blob(uint32_t word, const Blob& b);
    const float* params_at(uint32_t word) const { return &data[4 * (word + 1)]; }
    uint32_t word_count() const { return static_cast<uint32_t>(data.size() / 4); }
    uint32_t node_count() const { return static_cast<uint32_t>(nodes.size()); }
    uint32_t ordinal_of_word(uint32_t word) const;
};

// Words occupied by a node record including its header word.
uint32_t primitive_word_count(PrimitiveKind kind);
uint32_t operator_word_count(OperatorKind kind);

// Post-order linearization with parent ancestor indices. Throws on trees
// exceeding the 23-bit word index space.
LinearTree compile(const SceneNode& root);

// Replace parent indices by fast ancestor indices: chase the parent chain
// while the child direction is unchanged, stopping at the root, at any
// intersection-like node, and at difference-like nodes on right-child chains
// (left-child chains for the ignore-if-right-absent mode).
void compute_fast_indices(LinearTree& tree);

// Per-node field range upper bound (range is (-inf, upper]), indexed by node
// ordinal. The root gets 0; compact operators propagate max(d, parent upper)
// to both children, everything else passes the parent value through.
std::vector<float> propagate_roi(const LinearTree& tree);

// Rewrite the parameter words of a primitive node in place; the tree layout
// is untouched, so no relinearization happens. Must not overlap a render.
void update_primitive_params(LinearTree& tree, uint32_t word, const PrimitiveParams& params);

// ---------------------------------------------------------------------------
// Volumes of interest

// Bounding solid of a primitive's 0 iso-volume dilated by the range-of-
// interest upper bound (plus an optional margin).
struct VolumeOfInterest {
    enum class Family : uint8_t { Sphere, OrientedBox, Capsule };
    Family family = Family::Sphere;
    uint32_t primitiveWord = 0;
    Vec3 center{};        // sphere/box center, capsule segment start
    float radius = 0.0f;  // sphere/capsule radius
    Vec3 halfExtents{};   // oriented box
    Quat rotation{};      // oriented box frame
    Vec3 axisEnd{};       // capsule segment end

    bool contains(Point3 p) const;
};

// One volume per primitive, in primitiveWords order. `roiUpper` is the output
// of propagate_roi. `margin` adds a fixed dilation on top of the ROI bound
// (the renderer passes its hit epsilon so grazing hits stay covered).
std::vector<VolumeOfInterest> build_volumes_of_interest(const LinearTree& tree,
                                                        std::span<const float> roiUpper,
                                                        float margin = 0.0f);

} // namespace blobtree
