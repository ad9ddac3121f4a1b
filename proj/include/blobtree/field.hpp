#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "blobtree/math.hpp"

namespace blobtree {

// Field values are approximate signed distances: negative inside, and for
// well-behaved primitives the magnitude is a lower bound on the Euclidean
// distance to the surface. +infinity stands for "no surface in range" and
// flows through the operators as an ignore value; NaN never escapes a
// public operation (it is filtered to 0).
using FieldValue = float;

inline constexpr float kFieldInfinity = std::numeric_limits<float>::infinity();

// ---------------------------------------------------------------------------
// Primitives

enum class PrimitiveKind : uint8_t {
    Sphere = 0,
    Ellipsoid = 1,
    Torus = 2,
    Box = 3,
    SphereCone = 4, // cone with spherical caps (round cone)
    Quadric = 5,
};

inline constexpr uint32_t kPrimitiveKindCount = 6;

// Number of shape scalars per kind (excluding the rigid transform).
uint32_t shape_float_count(PrimitiveKind kind);

const char* primitive_kind_name(PrimitiveKind kind);
bool primitive_kind_from_name(const char* name, PrimitiveKind& out);

struct Transform {
    Vec3 translate{0, 0, 0};
    Quat rotation{}; // unit length, tolerance 1e-6 at construction
};

// Shape scalar layout per kind:
//   Sphere:     [r]
//   Ellipsoid:  [rx, ry, rz]
//   Torus:      [R, r]              (major, minor; ring lies in local xz)
//   Box:        [hx, hy, hz]        (half extents)
//   SphereCone: [r0, r1, h]         (base radius at origin, tip radius at (0,h,0))
//   Quadric:    [axx, ayy, azz, axy, axz, ayz, bx, by, bz, c]
//               f0(p) = p^T A p + b.p + c, evaluated as f0/|grad f0|.
//               A must be positive definite with a non-empty interior.
struct PrimitiveParams {
    PrimitiveKind kind = PrimitiveKind::Sphere;
    Transform frame{};
    std::array<float, 10> shape{};

    static PrimitiveParams sphere(float r, Transform frame = {});
    static PrimitiveParams ellipsoid(Vec3 radii, Transform frame = {});
    static PrimitiveParams torus(float major, float minor, Transform frame = {});
    static PrimitiveParams box(Vec3 halfExtents, Transform frame = {});
    static PrimitiveParams sphere_cone(float r0, float r1, float h, Transform frame = {});
    static PrimitiveParams quadric(const std::array<float, 10>& coeffs, Transform frame = {});
};

// Throws std::invalid_argument on degenerate parameters (non-positive
// radii/extents, non-unit rotation, indefinite quadric).
void validate_primitive(const PrimitiveParams& p);

// Derived quantities of a quadric in its local frame: the quadratic form
// written as (p-center)^T A (p-center) = isoLevel on the 0 iso-surface.
struct QuadricInfo {
    Vec3 center{};
    float isoLevel = 0.0f;
    float lambdaMin = 0.0f;
    float lambdaMax = 0.0f;
    bool positiveDefinite = false;
    bool hasInterior = false;
};
QuadricInfo analyze_quadric(const std::array<float, 10>& coeffs);

// Approximate signed distance of a primitive at p (world space). Exact
// (1-Lipschitz) for sphere, torus, box and sphere-cone; first-order for
// ellipsoid and quadric.
FieldValue eval_primitive(const PrimitiveParams& p, Point3 point);

// Same evaluation from a raw parameter block laid out as
// [tx,ty,tz, qw,qx,qy,qz, shape...]; this is the layout used by the
// linearized tree and the pruned-view parameter cache.
FieldValue eval_primitive_raw(uint8_t kind, const float* params, Point3 point);

inline constexpr uint32_t kTransformFloatCount = 7;

// ---------------------------------------------------------------------------
// Operators

// Codes 0..2 of the operator nodeop space are reserved for rewritten nodes
// in pruned tree views: 0 returns +inf, 1 returns the right operand,
// 2 returns the left operand.
inline constexpr uint8_t kOpReturnInfinity = 0;
inline constexpr uint8_t kOpReturnRight = 1;
inline constexpr uint8_t kOpReturnLeft = 2;

enum class OperatorKind : uint8_t {
    CsgUnion = 3,
    CsgIntersect = 4,
    CsgDiff = 5,
    SmoothUnion = 6,
    SmoothIntersect = 7,
    SmoothDiff = 8,
    CompactUnion = 9,
    CompactIntersect = 10,
    CompactDiff = 11,
};

const char* operator_kind_name(OperatorKind kind);
bool operator_kind_from_name(const char* name, OperatorKind& out);

bool is_sharp(OperatorKind kind);
bool is_smooth(OperatorKind kind);   // bounded smooth, non-compact
bool is_compact(OperatorKind kind);
bool is_union_like(OperatorKind kind);
bool is_intersect_like(OperatorKind kind);
bool is_diff_like(OperatorKind kind);

// Behavior when an operand is absent from an active set.
inline constexpr uint8_t kNeverIgnore = 0b00;
inline constexpr uint8_t kIgnoreIfRightAbsent = 0b01;
inline constexpr uint8_t kIgnoreIfLeftAbsent = 0b10;
inline constexpr uint8_t kIgnoreIfAnyAbsent = 0b11;

uint8_t ignore_mode_for(OperatorKind kind);

struct OperatorParams {
    OperatorKind kind = OperatorKind::CsgUnion;
    float blend = 0.0f; // k > 0 for smooth/compact kinds
    float range = 0.0f; // d_o, compact kinds only; must satisfy d_o > k/6

    static OperatorParams sharp(OperatorKind kind);
    static OperatorParams smooth(OperatorKind kind, float k);
    static OperatorParams compact(OperatorKind kind, float k, float rangeUpper);
};

void validate_operator(const OperatorParams& op);

// Sharp CSG: min / max / max(f0,-f1).
FieldValue csg_op(OperatorKind kind, FieldValue f0, FieldValue f1);

// Polynomial C2 displacement, (k/6) * max(1 - |f0-f1|/k, 0)^3. Zero whenever
// |f0 - f1| >= k, and zero for non-positive k; never negative, never NaN.
FieldValue smooth_disp(FieldValue f0, FieldValue f1, float k);

// Bounded smooth operators: union = min - disp, intersect = max + disp,
// diff = max(f0,-f1) + disp(f0,-f1,k).
FieldValue smooth_op(OperatorKind kind, FieldValue f0, FieldValue f1, float k);

// Blend transition k * max(1 - 6x/(6d - k), 0); NaN filtered to 0.
float blend_range(float x, float k, float d);

// Compact operators: exact CSG fallback when either operand exceeds the
// operator range d, otherwise a second smooth pass with the blend parameter
// driven through blend_range by the first pass. Intersection and difference
// clamp the resulting blend at k; the difference feeds the transition with
// the magnitude of the first pass.
FieldValue compact_op(OperatorKind kind, FieldValue f0, FieldValue f1, float k, float d);

// Dispatch on the packed nodeop code, reserved codes included. `params`
// points at [k, d] for smooth/compact kinds and may be null for sharp CSG
// and reserved codes.
FieldValue eval_operator_raw(uint8_t nodeop, const float* params, FieldValue f0, FieldValue f1);

FieldValue eval_operator(const OperatorParams& op, FieldValue f0, FieldValue f1);

} // namespace blobtree
