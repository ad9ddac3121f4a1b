#include "blobtree/field.hpp"

#include <cstring>

namespace blobtree {

// ---------------------------------------------------------------------------
// Primitive bookkeeping

uint32_t shape_float_count(PrimitiveKind kind) {
    switch (kind) {
        case PrimitiveKind::Sphere: return 1;
        case PrimitiveKind::Ellipsoid: return 3;
        case PrimitiveKind::Torus: return 2;
        case PrimitiveKind::Box: return 3;
        case PrimitiveKind::SphereCone: return 3;
        case PrimitiveKind::Quadric: return 10;
    }
    return 0;
}

const char* primitive_kind_name(PrimitiveKind kind) {
    switch (kind) {
        case PrimitiveKind::Sphere: return "sphere";
        case PrimitiveKind::Ellipsoid: return "ellipsoid";
        case PrimitiveKind::Torus: return "torus";
        case PrimitiveKind::Box: return "box";
        case PrimitiveKind::SphereCone: return "sphere_cone";
        case PrimitiveKind::Quadric: return "quadric";
    }
    return "?";
}

bool primitive_kind_from_name(const char* name, PrimitiveKind& out) {
    for (uint32_t i = 0; i < kPrimitiveKindCount; ++i) {
        PrimitiveKind k = static_cast<PrimitiveKind>(i);
        if (std::strcmp(name, primitive_kind_name(k)) == 0) {
            out = k;
            return true;
        }
    }
    return false;
}

PrimitiveParams PrimitiveParams::sphere(float r, Transform frame) {
    PrimitiveParams p;
    p.kind = PrimitiveKind::Sphere;
    p.frame = frame;
    p.shape[0] = r;
    validate_primitive(p);
    return p;
}

PrimitiveParams PrimitiveParams::ellipsoid(Vec3 radii, Transform frame) {
    PrimitiveParams p;
    p.kind = PrimitiveKind::Ellipsoid;
    p.frame = frame;
    p.shape[0] = radii.x;
    p.shape[1] = radii.y;
    p.shape[2] = radii.z;
    validate_primitive(p);
    return p;
}

PrimitiveParams PrimitiveParams::torus(float major, float minor, Transform frame) {
    PrimitiveParams p;
    p.kind = PrimitiveKind::Torus;
    p.frame = frame;
    p.shape[0] = major;
    p.shape[1] = minor;
    validate_primitive(p);
    return p;
}

PrimitiveParams PrimitiveParams::box(Vec3 halfExtents, Transform frame) {
    PrimitiveParams p;
    p.kind = PrimitiveKind::Box;
    p.frame = frame;
    p.shape[0] = halfExtents.x;
    p.shape[1] = halfExtents.y;
    p.shape[2] = halfExtents.z;
    validate_primitive(p);
    return p;
}

PrimitiveParams PrimitiveParams::sphere_cone(float r0, float r1, float h, Transform frame) {
    PrimitiveParams p;
    p.kind = PrimitiveKind::SphereCone;
    p.frame = frame;
    p.shape[0] = r0;
    p.shape[1] = r1;
    p.shape[2] = h;
    validate_primitive(p);
    return p;
}

PrimitiveParams PrimitiveParams::quadric(const std::array<float, 10>& coeffs, Transform frame) {
    PrimitiveParams p;
    p.kind = PrimitiveKind::Quadric;
    p.frame = frame;
    p.shape = coeffs;
    validate_primitive(p);
    return p;
}

namespace {

// Closed-form eigenvalues of a symmetric 3x3 matrix (trigonometric form),
// returned ascending. Double precision internally.
void symmetric_eigenvalues(double a11, double a22, double a33,
                           double a12, double a13, double a23,
                           double out[3]) {
    double p1 = a12 * a12 + a13 * a13 + a23 * a23;
    if (p1 == 0.0) {
        out[0] = a11;
        out[1] = a22;
        out[2] = a33;
        std::sort(out, out + 3);
        return;
    }
    double q = (a11 + a22 + a33) / 3.0;
    double p2 = (a11 - q) * (a11 - q) + (a22 - q) * (a22 - q) + (a33 - q) * (a33 - q) + 2.0 * p1;
    double p = std::sqrt(p2 / 6.0);
    double b11 = (a11 - q) / p, b22 = (a22 - q) / p, b33 = (a33 - q) / p;
    double b12 = a12 / p, b13 = a13 / p, b23 = a23 / p;
    double detB = b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13) +
                  b13 * (b12 * b23 - b22 * b13);
    double r = std::clamp(detB / 2.0, -1.0, 1.0);
    double phi = std::acos(r) / 3.0;
    double e1 = q + 2.0 * p * std::cos(phi);
    double e3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    double e2 = 3.0 * q - e1 - e3;
    out[0] = e3;
    out[1] = e2;
    out[2] = e1;
    std::sort(out, out + 3);
}

} // namespace

QuadricInfo analyze_quadric(const std::array<float, 10>& c) {
    QuadricInfo info{};
    double a11 = c[0], a22 = c[1], a33 = c[2];
    double a12 = c[3], a13 = c[4], a23 = c[5];
    double bx = c[6], by = c[7], bz = c[8], cc = c[9];

    double eig[3];
    symmetric_eigenvalues(a11, a22, a33, a12, a13, a23, eig);
    info.lambdaMin = static_cast<float>(eig[0]);
    info.lambdaMax = static_cast<float>(eig[2]);
    info.positiveDefinite = eig[0] > 0.0;
    if (!info.positiveDefinite) return info;

    // center m = -A^{-1} b / 2 via Cramer's rule
    double det = a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13) +
                 a13 * (a12 * a23 - a22 * a13);
    double rx = -bx / 2.0, ry = -by / 2.0, rz = -bz / 2.0;
    double mx = (rx * (a22 * a33 - a23 * a23) - a12 * (ry * a33 - a23 * rz) +
                 a13 * (ry * a23 - a22 * rz)) / det;
    double my = (a11 * (ry * a33 - a23 * rz) - rx * (a12 * a33 - a23 * a13) +
                 a13 * (a12 * rz - ry * a13)) / det;
    double mz = (a11 * (a22 * rz - ry * a23) - a12 * (a12 * rz - ry * a13) +
                 rx * (a12 * a23 - a22 * a13)) / det;
    info.center = Vec3{static_cast<float>(mx), static_cast<float>(my), static_cast<float>(mz)};

    // f0(p) = (p-m)^T A (p-m) + (c - m^T A m); interior iso level s = m^T A m - c
    double mAm = mx * (a11 * mx + a12 * my + a13 * mz) + my * (a12 * mx + a22 * my + a23 * mz) +
                 mz * (a13 * mx + a23 * my + a33 * mz);
    info.isoLevel = static_cast<float>(mAm - cc);
    info.hasInterior = info.isoLevel > 0.0f;
    return info;
}

void validate_primitive(const PrimitiveParams& p) {
    if (!is_finite(p.frame.translate))
        throw std::invalid_argument("primitive translation must be finite");
    float qlen = length(p.frame.rotation);
    if (std::fabs(qlen - 1.0f) > 1e-6f)
        throw std::invalid_argument("primitive rotation must be a unit quaternion");
    auto positive = [](float v) { return std::isfinite(v) && v > 0.0f; };
    switch (p.kind) {
        case PrimitiveKind::Sphere:
            if (!positive(p.shape[0])) throw std::invalid_argument("sphere radius must be > 0");
            break;
        case PrimitiveKind::Ellipsoid:
            if (!positive(p.shape[0]) || !positive(p.shape[1]) || !positive(p.shape[2]))
                throw std::invalid_argument("ellipsoid radii must be > 0");
            break;
        case PrimitiveKind::Torus:
            if (!positive(p.shape[0]) || !positive(p.shape[1]))
                throw std::invalid_argument("torus radii must be > 0");
            if (p.shape[1] >= p.shape[0])
                throw std::invalid_argument("torus minor radius must be below the major radius");
            break;
        case PrimitiveKind::Box:
            if (!positive(p.shape[0]) || !positive(p.shape[1]) || !positive(p.shape[2]))
                throw std::invalid_argument("box half extents must be > 0");
            break;
        case PrimitiveKind::SphereCone:
            if (!positive(p.shape[0]) || !positive(p.shape[1]) || !positive(p.shape[2]))
                throw std::invalid_argument("sphere-cone radii and height must be > 0");
            if (std::fabs(p.shape[0] - p.shape[1]) >= p.shape[2])
                throw std::invalid_argument("sphere-cone height must exceed the radius difference");
            break;
        case PrimitiveKind::Quadric: {
            QuadricInfo info = analyze_quadric(p.shape);
            if (!info.positiveDefinite)
                throw std::invalid_argument("quadric matrix must be positive definite");
            if (!info.hasInterior)
                throw std::invalid_argument("quadric must enclose a non-empty volume");
            break;
        }
    }
}

// ---------------------------------------------------------------------------
// Primitive distance kernels (local frame)

namespace {

inline float sd_sphere(Vec3 p, float r) { return length(p) - r; }

inline float sd_ellipsoid(Vec3 p, Vec3 r) {
    // first-order approximation: k0 (k0 - 1) / k1
    float k0 = length(Vec3{p.x / r.x, p.y / r.y, p.z / r.z});
    float k1 = length(Vec3{p.x / (r.x * r.x), p.y / (r.y * r.y), p.z / (r.z * r.z)});
    if (k1 <= 0.0f) return -std::min(r.x, std::min(r.y, r.z));
    return k0 * (k0 - 1.0f) / k1;
}

inline float sd_torus(Vec3 p, float major, float minor) {
    float qx = std::sqrt(p.x * p.x + p.z * p.z) - major;
    return std::sqrt(qx * qx + p.y * p.y) - minor;
}

inline float sd_box(Vec3 p, Vec3 h) {
    Vec3 q = abs(p) - h;
    Vec3 outer = cwise_max(q, Vec3{0, 0, 0});
    return length(outer) + std::min(max_component(q), 0.0f);
}

inline float sd_sphere_cone(Vec3 p, float r0, float r1, float h) {
    float qx = std::sqrt(p.x * p.x + p.z * p.z);
    float qy = p.y;
    float b = (r0 - r1) / h;
    float a = std::sqrt(1.0f - b * b);
    float k = qx * (-b) + qy * a;
    if (k < 0.0f) return std::sqrt(qx * qx + qy * qy) - r0;
    if (k > a * h) {
        float dy = qy - h;
        return std::sqrt(qx * qx + dy * dy) - r1;
    }
    return qx * a + qy * b - r0;
}

inline float sd_quadric(Vec3 p, const float* c) {
    float gx = 2.0f * (c[0] * p.x) + c[3] * p.y + c[4] * p.z + c[6];
    float gy = 2.0f * (c[1] * p.y) + c[3] * p.x + c[5] * p.z + c[7];
    float gz = 2.0f * (c[2] * p.z) + c[4] * p.x + c[5] * p.y + c[8];
    float f0 = c[0] * p.x * p.x + c[1] * p.y * p.y + c[2] * p.z * p.z +
               c[3] * p.x * p.y + c[4] * p.x * p.z + c[5] * p.y * p.z +
               c[6] * p.x + c[7] * p.y + c[8] * p.z + c[9];
    float gradLen = std::sqrt(gx * gx + gy * gy + gz * gz);
    return f0 / std::max(gradLen, 1e-4f);
}

} // namespace

FieldValue eval_primitive_raw(uint8_t kind, const float* params, Point3 point) {
    Vec3 t{params[0], params[1], params[2]};
    Quat q{params[3], params[4], params[5], params[6]};
    Vec3 local = rotate(conjugate(q), point - t);
    const float* shape = params + kTransformFloatCount;
    float v = 0.0f;
    switch (static_cast<PrimitiveKind>(kind)) {
        case PrimitiveKind::Sphere: v = sd_sphere(local, shape[0]); break;
        case PrimitiveKind::Ellipsoid: v = sd_ellipsoid(local, {shape[0], shape[1], shape[2]}); break;
        case PrimitiveKind::Torus: v = sd_torus(local, shape[0], shape[1]); break;
        case PrimitiveKind::Box: v = sd_box(local, {shape[0], shape[1], shape[2]}); break;
        case PrimitiveKind::SphereCone: v = sd_sphere_cone(local, shape[0], shape[1], shape[2]); break;
        case PrimitiveKind::Quadric: v = sd_quadric(local, shape); break;
    }
    return std::isnan(v) ? 0.0f : v;
}

FieldValue eval_primitive(const PrimitiveParams& p, Point3 point) {
    float params[kTransformFloatCount + 10];
    params[0] = p.frame.translate.x;
    params[1] = p.frame.translate.y;
    params[2] = p.frame.translate.z;
    params[3] = p.frame.rotation.w;
    params[4] = p.frame.rotation.x;
    params[5] = p.frame.rotation.y;
    params[6] = p.frame.rotation.z;
    for (uint32_t i = 0; i < shape_float_count(p.kind); ++i)
        params[kTransformFloatCount + i] = p.shape[i];
    return eval_primitive_raw(static_cast<uint8_t>(p.kind), params, point);
}

// ---------------------------------------------------------------------------
// Operators

const char* operator_kind_name(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::CsgUnion: return "csg_union";
        case OperatorKind::CsgIntersect: return "csg_intersect";
        case OperatorKind::CsgDiff: return "csg_diff";
        case OperatorKind::SmoothUnion: return "smooth_union";
        case OperatorKind::SmoothIntersect: return "smooth_intersect";
        case OperatorKind::SmoothDiff: return "smooth_diff";
        case OperatorKind::CompactUnion: return "compact_union";
        case OperatorKind::CompactIntersect: return "compact_intersect";
        case OperatorKind::CompactDiff: return "compact_diff";
    }
    return "?";
}

bool operator_kind_from_name(const char* name, OperatorKind& out) {
    for (uint8_t i = 3; i <= 11; ++i) {
        OperatorKind k = static_cast<OperatorKind>(i);
        if (std::strcmp(name, operator_kind_name(k)) == 0) {
            out = k;
            return true;
        }
    }
    return false;
}

bool is_sharp(OperatorKind kind) {
    return kind == OperatorKind::CsgUnion || kind == OperatorKind::CsgIntersect ||
           kind == OperatorKind::CsgDiff;
}

bool is_smooth(OperatorKind kind) {
    return kind == OperatorKind::SmoothUnion || kind == OperatorKind::SmoothIntersect ||
           kind == OperatorKind::SmoothDiff;
}

bool is_compact(OperatorKind kind) {
    return kind == OperatorKind::CompactUnion || kind == OperatorKind::CompactIntersect ||
           kind == OperatorKind::CompactDiff;
}

bool is_union_like(OperatorKind kind) {
    return kind == OperatorKind::CsgUnion || kind == OperatorKind::SmoothUnion ||
           kind == OperatorKind::CompactUnion;
}

bool is_intersect_like(OperatorKind kind) {
    return kind == OperatorKind::CsgIntersect || kind == OperatorKind::SmoothIntersect ||
           kind == OperatorKind::CompactIntersect;
}

bool is_diff_like(OperatorKind kind) {
    return kind == OperatorKind::CsgDiff || kind == OperatorKind::SmoothDiff ||
           kind == OperatorKind::CompactDiff;
}

uint8_t ignore_mode_for(OperatorKind kind) {
    if (is_intersect_like(kind)) return kIgnoreIfAnyAbsent;
    if (is_diff_like(kind)) return kIgnoreIfLeftAbsent;
    return kNeverIgnore;
}

OperatorParams OperatorParams::sharp(OperatorKind kind) {
    OperatorParams op;
    op.kind = kind;
    validate_operator(op);
    return op;
}

OperatorParams OperatorParams::smooth(OperatorKind kind, float k) {
    OperatorParams op;
    op.kind = kind;
    op.blend = k;
    validate_operator(op);
    return op;
}

OperatorParams OperatorParams::compact(OperatorKind kind, float k, float rangeUpper) {
    OperatorParams op;
    op.kind = kind;
    op.blend = k;
    op.range = rangeUpper;
    validate_operator(op);
    return op;
}

void validate_operator(const OperatorParams& op) {
    if (is_sharp(op.kind)) return;
    if (!(op.blend > 0.0f) || !std::isfinite(op.blend))
        throw std::invalid_argument("blend parameter k must be > 0");
    if (is_compact(op.kind)) {
        if (!std::isfinite(op.range) || !(op.range > op.blend / 6.0f))
            throw std::invalid_argument("operator range d must exceed k/6");
    }
}

FieldValue csg_op(OperatorKind kind, FieldValue f0, FieldValue f1) {
    if (is_union_like(kind)) return std::min(f0, f1);
    if (is_intersect_like(kind)) return std::max(f0, f1);
    return std::max(f0, -f1);
}

FieldValue smooth_disp(FieldValue f0, FieldValue f1, float k) {
    if (!(k > 0.0f)) return 0.0f;
    float ad = std::fabs(f0 - f1);
    if (!(ad < k)) return 0.0f; // also catches NaN from inf - inf
    float t = 1.0f - ad / k;
    return (k / 6.0f) * t * t * t;
}

FieldValue smooth_op(OperatorKind kind, FieldValue f0, FieldValue f1, float k) {
    float v;
    if (is_union_like(kind))
        v = std::min(f0, f1) - smooth_disp(f0, f1, k);
    else if (is_intersect_like(kind))
        v = std::max(f0, f1) + smooth_disp(f0, f1, k);
    else
        v = std::max(f0, -f1) + smooth_disp(f0, -f1, k);
    return std::isnan(v) ? 0.0f : v;
}

float blend_range(float x, float k, float d) {
    float v = k * std::max(1.0f - 6.0f * x / (6.0f * d - k), 0.0f);
    return std::isnan(v) ? 0.0f : v;
}

FieldValue compact_op(OperatorKind kind, FieldValue f0, FieldValue f1, float k, float d) {
    if (f0 > d || f1 > d) return csg_op(kind, f0, f1);
    float g = smooth_op(kind, f0, f1, k);
    float kp;
    if (is_union_like(kind))
        kp = blend_range(g, k, d);
    else if (is_intersect_like(kind))
        kp = std::min(blend_range(g, k, d), k);
    else
        kp = std::min(blend_range(std::fabs(g), k, d), k);
    return smooth_op(kind, f0, f1, kp);
}

FieldValue eval_operator_raw(uint8_t nodeop, const float* params, FieldValue f0, FieldValue f1) {
    switch (nodeop) {
        case kOpReturnInfinity: return kFieldInfinity;
        case kOpReturnRight: return f1;
        case kOpReturnLeft: return f0;
        default: break;
    }
    OperatorKind kind = static_cast<OperatorKind>(nodeop);
    if (is_sharp(kind)) return csg_op(kind, f0, f1);
    float k = params[0];
    if (is_smooth(kind)) return smooth_op(kind, f0, f1, k);
    return compact_op(kind, f0, f1, k, params[1]);
}

FieldValue eval_operator(const OperatorParams& op, FieldValue f0, FieldValue f1) {
    float params[2] = {op.blend, op.range};
    return eval_operator_raw(static_cast<uint8_t>(op.kind), params, f0, f1);
}

} // namespace blobtree
