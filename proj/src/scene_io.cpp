#include "blobtree/scene_io.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace blobtree {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw SceneError(path + ": " + msg);
}

float get_number(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) fail(path, std::string("missing field '") + key + "'");
    if (!j[key].is_number()) fail(path, std::string("field '") + key + "' must be a number");
    return j[key].get<float>();
}

float get_number_or(const json& j, const char* key, float fallback) {
    return j.contains(key) ? j[key].get<float>() : fallback;
}

Vec3 get_vec3(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) fail(path, std::string("missing field '") + key + "'");
    const json& v = j[key];
    if (!v.is_array() || v.size() != 3) fail(path, std::string("'") + key + "' must be [x,y,z]");
    return {v[0].get<float>(), v[1].get<float>(), v[2].get<float>()};
}

Vec3 get_vec3_or(const json& j, const char* key, Vec3 fallback, const std::string& path) {
    if (!j.contains(key)) return fallback;
    return get_vec3(j, key, path);
}

Transform parse_transform(const json& j, const std::string& path) {
    Transform t;
    t.translate = get_vec3_or(j, "translate", Vec3{}, path);
    if (j.contains("rotate_quat")) {
        const json& q = j["rotate_quat"];
        if (!q.is_array() || q.size() != 4) fail(path, "'rotate_quat' must be [w,x,y,z]");
        Quat quat{q[0].get<float>(), q[1].get<float>(), q[2].get<float>(), q[3].get<float>()};
        if (std::fabs(length(quat) - 1.0f) > 1e-6f)
            fail(path, "'rotate_quat' must be unit length (tolerance 1e-6)");
        t.rotation = quat;
    }
    return t;
}

std::unique_ptr<SceneNode> parse_node(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "node must be an object");

    if (j.contains("prim")) {
        std::string name = j["prim"].get<std::string>();
        PrimitiveKind kind;
        if (!primitive_kind_from_name(name.c_str(), kind))
            fail(path, "unknown primitive kind '" + name + "'");
        Transform frame = parse_transform(j, path);
        try {
            switch (kind) {
                case PrimitiveKind::Sphere:
                    return SceneNode::make_primitive(
                        PrimitiveParams::sphere(get_number(j, "r", path), frame));
                case PrimitiveKind::Ellipsoid:
                    return SceneNode::make_primitive(
                        PrimitiveParams::ellipsoid(get_vec3(j, "radii", path), frame));
                case PrimitiveKind::Torus:
                    return SceneNode::make_primitive(PrimitiveParams::torus(
                        get_number(j, "major", path), get_number(j, "minor", path), frame));
                case PrimitiveKind::Box:
                    return SceneNode::make_primitive(
                        PrimitiveParams::box(get_vec3(j, "half_extents", path), frame));
                case PrimitiveKind::SphereCone:
                    return SceneNode::make_primitive(PrimitiveParams::sphere_cone(
                        get_number(j, "r0", path), get_number(j, "r1", path),
                        get_number(j, "h", path), frame));
                case PrimitiveKind::Quadric: {
                    const json& a = j.contains("a") ? j["a"] : json{};
                    const json& b = j.contains("b") ? j["b"] : json{};
                    if (!a.is_array() || a.size() != 6)
                        fail(path, "quadric 'a' must hold [axx,ayy,azz,axy,axz,ayz]");
                    if (!b.is_array() || b.size() != 3) fail(path, "quadric 'b' must hold [bx,by,bz]");
                    std::array<float, 10> coeffs{};
                    for (int i = 0; i < 6; ++i) coeffs[static_cast<size_t>(i)] = a[i].get<float>();
                    for (int i = 0; i < 3; ++i)
                        coeffs[static_cast<size_t>(6 + i)] = b[i].get<float>();
                    coeffs[9] = get_number(j, "c", path);
                    return SceneNode::make_primitive(PrimitiveParams::quadric(coeffs, frame));
                }
            }
        } catch (const std::invalid_argument& e) {
            fail(path, e.what());
        }
    }

    if (j.contains("op")) {
        std::string name = j["op"].get<std::string>();
        OperatorKind kind;
        if (!operator_kind_from_name(name.c_str(), kind))
            fail(path, "unknown operator kind '" + name + "'");
        if (!j.contains("left") || !j.contains("right"))
            fail(path, "operator '" + name + "' needs both 'left' and 'right'");
        OperatorParams op;
        try {
            if (is_sharp(kind)) {
                op = OperatorParams::sharp(kind);
            } else {
                float k = get_number(j, "k", path);
                if (is_smooth(kind)) {
                    op = OperatorParams::smooth(kind, k);
                } else {
                    float d = get_number_or(j, "d", k); // default range closes at k
                    op = OperatorParams::compact(kind, k, d);
                }
            }
        } catch (const std::invalid_argument& e) {
            fail(path, e.what());
        }
        auto left = parse_node(j["left"], path + ".left");
        auto right = parse_node(j["right"], path + ".right");
        return SceneNode::make_operator(op, std::move(left), std::move(right));
    }

    fail(path, "node needs either 'prim' or 'op'");
}

json node_to_json(const SceneNode& node) {
    json j;
    if (node.isPrimitive) {
        const PrimitiveParams& p = node.primitive;
        j["prim"] = primitive_kind_name(p.kind);
        switch (p.kind) {
            case PrimitiveKind::Sphere: j["r"] = p.shape[0]; break;
            case PrimitiveKind::Ellipsoid:
                j["radii"] = {p.shape[0], p.shape[1], p.shape[2]};
                break;
            case PrimitiveKind::Torus:
                j["major"] = p.shape[0];
                j["minor"] = p.shape[1];
                break;
            case PrimitiveKind::Box:
                j["half_extents"] = {p.shape[0], p.shape[1], p.shape[2]};
                break;
            case PrimitiveKind::SphereCone:
                j["r0"] = p.shape[0];
                j["r1"] = p.shape[1];
                j["h"] = p.shape[2];
                break;
            case PrimitiveKind::Quadric:
                j["a"] = {p.shape[0], p.shape[1], p.shape[2], p.shape[3], p.shape[4], p.shape[5]};
                j["b"] = {p.shape[6], p.shape[7], p.shape[8]};
                j["c"] = p.shape[9];
                break;
        }
        j["translate"] = {p.frame.translate.x, p.frame.translate.y, p.frame.translate.z};
        const Quat& q = p.frame.rotation;
        j["rotate_quat"] = {q.w, q.x, q.y, q.z};
    } else {
        j["op"] = operator_kind_name(node.op.kind);
        if (!is_sharp(node.op.kind)) {
            j["k"] = node.op.blend;
            if (is_compact(node.op.kind)) j["d"] = node.op.range;
        }
        j["left"] = node_to_json(*node.left);
        j["right"] = node_to_json(*node.right);
    }
    return j;
}

} // namespace

SceneDocument parse_scene(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SceneError(std::string("json: ") + e.what());
    }
    SceneDocument doc;
    if (j.contains("camera")) {
        const json& c = j["camera"];
        doc.camera.position = get_vec3(c, "position", "camera");
        doc.camera.target = get_vec3(c, "target", "camera");
        doc.camera.up = get_vec3_or(c, "up", Vec3{0, 1, 0}, "camera");
        doc.camera.fovDegrees = get_number_or(c, "fov_deg", 45.0f);
        doc.camera.nearZ = get_number_or(c, "near", 0.1f);
        doc.camera.farZ = get_number_or(c, "far", 100.0f);
        doc.camera.width = static_cast<int>(get_number_or(c, "width", 512));
        doc.camera.height = static_cast<int>(get_number_or(c, "height", 512));
        try {
            validate_camera(doc.camera);
        } catch (const std::invalid_argument& e) {
            fail("camera", e.what());
        }
    }
    if (!j.contains("root")) throw SceneError("document needs a 'root' node");
    doc.root = parse_node(j["root"], "root");
    return doc;
}

SceneDocument load_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SceneError("cannot open scene file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scene(buf.str());
}

std::string serialize_scene(const SceneDocument& doc) {
    json j;
    j["camera"] = {
        {"position", {doc.camera.position.x, doc.camera.position.y, doc.camera.position.z}},
        {"target", {doc.camera.target.x, doc.camera.target.y, doc.camera.target.z}},
        {"up", {doc.camera.up.x, doc.camera.up.y, doc.camera.up.z}},
        {"fov_deg", doc.camera.fovDegrees},
        {"near", doc.camera.nearZ},
        {"far", doc.camera.farZ},
        {"width", doc.camera.width},
        {"height", doc.camera.height},
    };
    j["root"] = node_to_json(*doc.root);
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Synthetic scenes

namespace {

struct LatticeDims {
    uint32_t nx, ny, nz;
};

LatticeDims near_cubic(uint32_t count) {
    uint32_t nx = 1, ny = 1, nz = 1;
    while (nx * ny * nz < count) {
        if (nx <= ny && nx <= nz) ++nx;
        else if (ny <= nz) ++ny;
        else ++nz;
    }
    return {nx, ny, nz};
}

std::unique_ptr<SceneNode> random_primitive(std::mt19937& rng, Vec3 center, float scale) {
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    std::uniform_real_distribution<float> size(0.45f * scale, 0.9f * scale);
    std::uniform_real_distribution<float> offs(-0.8f * scale, 0.8f * scale);
    Vec3 pos = center + Vec3{offs(rng), offs(rng), offs(rng)};
    Quat rot = quat_from_axis_angle(
        Vec3{unit(rng) - 0.5f, unit(rng) + 0.1f, unit(rng) - 0.5f},
        unit(rng) * 6.2831853f);
    Transform frame{pos, rot};

    switch (static_cast<int>(unit(rng) * 5.0f)) {
        case 0: return SceneNode::make_primitive(PrimitiveParams::sphere(size(rng), frame));
        case 1:
            return SceneNode::make_primitive(PrimitiveParams::box(
                Vec3{size(rng) * 0.8f, size(rng) * 0.8f, size(rng) * 0.8f}, frame));
        case 2: {
            float major = size(rng);
            return SceneNode::make_primitive(
                PrimitiveParams::torus(major, 0.35f * major, frame));
        }
        case 3:
            return SceneNode::make_primitive(PrimitiveParams::ellipsoid(
                Vec3{size(rng), 0.7f * size(rng), 0.85f * size(rng)}, frame));
        default: {
            float r0 = size(rng) * 0.7f;
            float r1 = r0 * 0.45f;
            float h = r0 * 1.6f;
            return SceneNode::make_primitive(PrimitiveParams::sphere_cone(r0, r1, h, frame));
        }
    }
}

std::unique_ptr<SceneNode> build_subobject(std::mt19937& rng, Vec3 center, float scale,
                                           uint32_t primCount, bool smoothBlend) {
    auto node = random_primitive(rng, center, scale);
    for (uint32_t i = 1; i < primCount; ++i) {
        OperatorParams op = smoothBlend
                                ? OperatorParams::compact(OperatorKind::CompactUnion,
                                                          0.5f * scale, 0.5f * scale)
                                : OperatorParams::sharp(OperatorKind::CsgUnion);
        node = SceneNode::make_operator(op, std::move(node), random_primitive(rng, center, scale));
    }
    return node;
}

} // namespace

SceneDocument generate_synthetic(const std::string& preset, uint32_t gridN,
                                 const std::string& subobjectKind, const std::string& blendMode,
                                 uint64_t seed) {
    if (gridN < 1) throw SceneError("gridN must be at least 1");
    uint32_t cellCount;
    if (preset == "grid") cellCount = gridN * gridN * gridN;
    else if (preset == "cells") cellCount = gridN;
    else throw SceneError("unknown preset '" + preset + "' (grid, cells)");

    bool smoothBlend;
    if (blendMode == "sharp") smoothBlend = false;
    else if (blendMode == "smooth") smoothBlend = true;
    else throw SceneError("unknown blend mode '" + blendMode + "' (sharp, smooth)");

    std::mt19937 rng(static_cast<uint32_t>(seed ^ (seed >> 32)));
    std::uniform_int_distribution<uint32_t> mixedCount(3, 6);

    LatticeDims dims = near_cubic(cellCount);
    const float cell = 2.0f;
    const float scale = 0.42f; // primitive size unit inside a cell
    Vec3 origin{-0.5f * cell * (dims.nx - 1), -0.5f * cell * (dims.ny - 1),
                -0.5f * cell * (dims.nz - 1)};

    std::unique_ptr<SceneNode> root;
    uint32_t placed = 0;
    for (uint32_t z = 0; z < dims.nz && placed < cellCount; ++z) {
        for (uint32_t y = 0; y < dims.ny && placed < cellCount; ++y) {
            for (uint32_t x = 0; x < dims.nx && placed < cellCount; ++x, ++placed) {
                Vec3 center = origin + Vec3{cell * x, cell * y, cell * z};
                uint32_t primCount;
                if (subobjectKind == "tri") primCount = 3;
                else if (subobjectKind == "hex") primCount = 6;
                else if (subobjectKind == "mixed") primCount = mixedCount(rng);
                else throw SceneError("unknown subobject kind '" + subobjectKind +
                                      "' (tri, hex, mixed)");
                auto sub = build_subobject(rng, center, scale, primCount, smoothBlend);
                if (!root) root = std::move(sub);
                else
                    root = SceneNode::make_operator(OperatorParams::sharp(OperatorKind::CsgUnion),
                                                    std::move(root), std::move(sub));
            }
        }
    }

    SceneDocument doc;
    doc.root = std::move(root);

    float spanX = cell * dims.nx, spanY = cell * dims.ny, spanZ = cell * dims.nz;
    float diag = std::sqrt(spanX * spanX + spanY * spanY + spanZ * spanZ);
    Vec3 dir = normalize(Vec3{0.9f, 0.55f, -1.25f});
    doc.camera.target = Vec3{0, 0, 0};
    doc.camera.position = dir * (1.35f * diag + 1.0f);
    doc.camera.up = Vec3{0, 1, 0};
    doc.camera.fovDegrees = 45.0f;
    doc.camera.nearZ = 0.1f;
    doc.camera.farZ = 3.0f * diag + 4.0f;
    doc.camera.width = 512;
    doc.camera.height = 512;
    return doc;
}

} // namespace blobtree
