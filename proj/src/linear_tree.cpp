#include "blobtree/linear_tree.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace blobtree {

uint32_t pack_blob(const Blob& b) {
    if (b.nodeOp >= 32) throw std::invalid_argument("nodeop exceeds 5 bits");
    if (b.ignoreMode >= 4) throw std::invalid_argument("ignore mode exceeds 2 bits");
    if (b.ancestor > kAncestorSentinel)
        throw std::invalid_argument("ancestor exceeds 23 bits");
    return (static_cast<uint32_t>(b.isPrimitive) << 31) |
           (static_cast<uint32_t>(b.nodeOp) << 26) |
           (static_cast<uint32_t>(b.ignoreMode) << 24) |
           (static_cast<uint32_t>(b.isLeft) << 23) | b.ancestor;
}

Blob unpack_blob(uint32_t word) {
    Blob b;
    b.isPrimitive = (word >> 31) != 0;
    b.nodeOp = static_cast<uint8_t>((word >> 26) & 0x1F);
    b.ignoreMode = static_cast<uint8_t>((word >> 24) & 0x3);
    b.isLeft = ((word >> 23) & 0x1) != 0;
    b.ancestor = word & kAncestorSentinel;
    return b;
}

Blob LinearTree::blob_at(uint32_t word) const {
    return unpack_blob(std::bit_cast<uint32_t>(data[4 * word]));
}

void LinearTree::set_blob(uint32_t word, const Blob& b) {
    data[4 * word] = std::bit_cast<float>(pack_blob(b));
}

uint32_t LinearTree::ordinal_of_word(uint32_t word) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), word,
                               [](const NodeRecord& n, uint32_t w) { return n.word < w; });
    if (it == nodes.end() || it->word != word)
        throw std::out_of_range("no node starts at this word");
    return static_cast<uint32_t>(it - nodes.begin());
}

uint32_t primitive_word_count(PrimitiveKind kind) {
    uint32_t floats = kTransformFloatCount + shape_float_count(kind);
    return 1 + (floats + 3) / 4;
}

uint32_t operator_word_count(OperatorKind kind) {
    return is_sharp(kind) ? 1 : 2;
}

namespace {

void write_primitive_params(std::vector<float>& data, uint32_t word, const PrimitiveParams& p) {
    float* out = &data[4 * (word + 1)];
    out[0] = p.frame.translate.x;
    out[1] = p.frame.translate.y;
    out[2] = p.frame.translate.z;
    out[3] = p.frame.rotation.w;
    out[4] = p.frame.rotation.x;
    out[5] = p.frame.rotation.y;
    out[6] = p.frame.rotation.z;
    for (uint32_t i = 0; i < shape_float_count(p.kind); ++i)
        out[kTransformFloatCount + i] = p.shape[i];
}

struct CompileCursor {
    LinearTree* tree;
    uint32_t nextWord = 0;

    // Emits the subtree in post-order, returns the node's ordinal.
    uint32_t emit(const SceneNode& node, bool isLeft) {
        if (!node.isPrimitive && (!node.left || !node.right))
            throw std::invalid_argument("operator node must have two children");

        int32_t leftOrd = -1, rightOrd = -1;
        if (!node.isPrimitive) {
            leftOrd = static_cast<int32_t>(emit(*node.left, true));
            rightOrd = static_cast<int32_t>(emit(*node.right, false));
        }

        uint32_t word = nextWord;
        uint32_t words = node.isPrimitive ? primitive_word_count(node.primitive.kind)
                                          : operator_word_count(node.op.kind);
        nextWord += words;
        if (nextWord >= kAncestorSentinel)
            throw std::invalid_argument("tree exceeds the 23-bit node index space");
        tree->data.resize(4 * nextWord, 0.0f);

        Blob blob;
        blob.isPrimitive = node.isPrimitive;
        blob.isLeft = isLeft;
        blob.ancestor = kAncestorSentinel; // parent fixed up by the caller
        if (node.isPrimitive) {
            validate_primitive(node.primitive);
            blob.nodeOp = static_cast<uint8_t>(node.primitive.kind);
            blob.ignoreMode = kNeverIgnore;
            write_primitive_params(tree->data, word, node.primitive);
        } else {
            validate_operator(node.op);
            blob.nodeOp = static_cast<uint8_t>(node.op.kind);
            blob.ignoreMode = ignore_mode_for(node.op.kind);
            if (!is_sharp(node.op.kind)) {
                float* out = &tree->data[4 * (word + 1)];
                out[0] = node.op.blend;
                out[1] = node.op.range;
            }
        }
        tree->set_blob(word, blob);

        NodeRecord rec;
        rec.word = word;
        rec.isPrimitive = node.isPrimitive;
        rec.nodeOp = blob.nodeOp;
        rec.leftChild = leftOrd;
        rec.rightChild = rightOrd;
        uint32_t ordinal = static_cast<uint32_t>(tree->nodes.size());
        tree->nodes.push_back(rec);

        if (!node.isPrimitive) {
            // children now know their parent's word
            for (int32_t child : {leftOrd, rightOrd}) {
                NodeRecord& c = tree->nodes[static_cast<size_t>(child)];
                c.parentWord = word;
                Blob cb = tree->blob_at(c.word);
                cb.ancestor = word;
                tree->set_blob(c.word, cb);
            }
        } else {
            tree->primitiveWords.push_back(word);
        }
        if (!node.isPrimitive && is_smooth(node.op.kind)) tree->hasUnboundedBlend = true;
        return ordinal;
    }
};

} // namespace

LinearTree compile(const SceneNode& root) {
    LinearTree tree;
    CompileCursor cursor{&tree};
    uint32_t rootOrdinal = cursor.emit(root, /*isLeft=*/true);
    tree.rootWord = tree.nodes[rootOrdinal].word;
    return tree;
}

void compute_fast_indices(LinearTree& tree) {
    for (const NodeRecord& rec : tree.nodes) {
        if (!ancestor_valid(rec.parentWord)) continue; // root keeps the sentinel
        bool chainLeft = tree.blob_at(rec.word).isLeft;
        uint8_t cutMask = chainLeft ? kIgnoreIfRightAbsent : kIgnoreIfLeftAbsent;
        uint32_t target = rec.parentWord;
        for (;;) {
            Blob a = tree.blob_at(target);
            if (a.isLeft != chainLeft) break;      // jump direction would change
            if ((a.ignoreMode & cutMask) != 0) break; // never bypass intersect/diff
            uint32_t next = tree.nodes[tree.ordinal_of_word(target)].parentWord;
            if (!ancestor_valid(next)) break;      // reached the root
            target = next;
        }
        Blob b = tree.blob_at(rec.word);
        b.ancestor = target;
        tree.set_blob(rec.word, b);
    }
}

std::vector<float> propagate_roi(const LinearTree& tree) {
    std::vector<float> upper(tree.nodes.size(), 0.0f);
    for (size_t i = tree.nodes.size(); i-- > 0;) {
        const NodeRecord& rec = tree.nodes[i];
        if (rec.isPrimitive) continue;
        float childUpper = upper[i];
        OperatorKind kind = static_cast<OperatorKind>(rec.nodeOp);
        if (is_compact(kind)) {
            float d = tree.params_at(rec.word)[1];
            childUpper = std::max(childUpper, d);
        }
        upper[static_cast<size_t>(rec.leftChild)] = childUpper;
        upper[static_cast<size_t>(rec.rightChild)] = childUpper;
    }
    return upper;
}

void update_primitive_params(LinearTree& tree, uint32_t word, const PrimitiveParams& params) {
    Blob b = tree.blob_at(word);
    if (!b.isPrimitive || b.nodeOp != static_cast<uint8_t>(params.kind))
        throw std::invalid_argument("in-place update must keep the primitive kind");
    validate_primitive(params);
    write_primitive_params(tree.data, word, params);
}

// ---------------------------------------------------------------------------
// Volumes of interest

bool VolumeOfInterest::contains(Point3 p) const {
    switch (family) {
        case Family::Sphere:
            return length(p - center) <= radius;
        case Family::OrientedBox: {
            Vec3 local = abs(rotate(conjugate(rotation), p - center));
            return local.x <= halfExtents.x && local.y <= halfExtents.y &&
                   local.z <= halfExtents.z;
        }
        case Family::Capsule: {
            Vec3 ab = axisEnd - center;
            float t = std::clamp(dot(p - center, ab) / std::max(length_sq(ab), 1e-20f), 0.0f, 1.0f);
            return length(p - (center + ab * t)) <= radius;
        }
    }
    return false;
}

std::vector<VolumeOfInterest> build_volumes_of_interest(const LinearTree& tree,
                                                        std::span<const float> roiUpper,
                                                        float margin) {
    std::vector<VolumeOfInterest> volumes;
    volumes.reserve(tree.primitiveWords.size());
    constexpr float kSlack = 1e-5f;
    for (uint32_t word : tree.primitiveWords) {
        uint32_t ordinal = tree.ordinal_of_word(word);
        float u = roiUpper[ordinal] + margin + kSlack;
        const float* params = tree.params_at(word);
        Vec3 t{params[0], params[1], params[2]};
        Quat q{params[3], params[4], params[5], params[6]};
        const float* shape = params + kTransformFloatCount;

        VolumeOfInterest v;
        v.primitiveWord = word;
        switch (static_cast<PrimitiveKind>(tree.blob_at(word).nodeOp)) {
            case PrimitiveKind::Sphere:
                v.family = VolumeOfInterest::Family::Sphere;
                v.center = t;
                v.radius = shape[0] + u;
                break;
            case PrimitiveKind::Ellipsoid: {
                // The first-order field under-estimates distance off-axis by
                // at most rmax/rmin, so the dilation is scaled accordingly.
                v.family = VolumeOfInterest::Family::OrientedBox;
                v.center = t;
                v.rotation = q;
                float rmin = std::min(shape[0], std::min(shape[1], shape[2]));
                float rmax = std::max(shape[0], std::max(shape[1], shape[2]));
                float d = u * (rmax / rmin);
                v.halfExtents = Vec3{shape[0] + d, shape[1] + d, shape[2] + d};
                break;
            }
            case PrimitiveKind::Torus:
                v.family = VolumeOfInterest::Family::Sphere;
                v.center = t;
                v.radius = shape[0] + shape[1] + u;
                break;
            case PrimitiveKind::Box:
                v.family = VolumeOfInterest::Family::OrientedBox;
                v.center = t;
                v.rotation = q;
                v.halfExtents = Vec3{shape[0] + u, shape[1] + u, shape[2] + u};
                break;
            case PrimitiveKind::SphereCone:
                v.family = VolumeOfInterest::Family::Capsule;
                v.center = t;
                v.axisEnd = t + rotate(q, Vec3{0, shape[2], 0});
                v.radius = std::max(shape[0], shape[1]) + u;
                break;
            case PrimitiveKind::Quadric: {
                // Normalized field value can be as low as half the Euclidean
                // excess, scaled by the eigenvalue ratio.
                QuadricInfo info = analyze_quadric(
                    {shape[0], shape[1], shape[2], shape[3], shape[4], shape[5], shape[6],
                     shape[7], shape[8], shape[9]});
                v.family = VolumeOfInterest::Family::Sphere;
                v.center = t + rotate(q, info.center);
                float r0 = std::sqrt(std::max(info.isoLevel, 0.0f) / info.lambdaMin);
                v.radius = r0 + 2.0f * u * (info.lambdaMax / info.lambdaMin);
                break;
            }
        }
        volumes.push_back(v);
    }
    return volumes;
}

} // namespace blobtree
