#pragma once

#include <cstdint>
#include <optional>

#include "blobtree/abuffer.hpp"
#include "blobtree/traversal.hpp"

namespace blobtree {

struct RenderConfig {
    float lipschitz = 1.45f; // global field Lipschitz bound used for stepping
    float relax = 1.7f;      // overrelaxation factor, [1, 2)
    float minStep = 0.005f;
    float hitEpsilon = 0.5f * 0.005f * 1.45f;
    uint32_t maxOverlap = kMaxOverlapLimit;
    uint32_t maxNewPerFetch = 6;
    float fetchWindow = 0.0f; // scene units; <= 0 selects (far - near) / 20
    enum class NormalsMode { DepthDifferential, CentralDifference };
    NormalsMode normalsMode = NormalsMode::DepthDifferential;
    uint32_t threads = 0; // 0: BLOBTREE_THREADS env var, else hardware

    static float default_hit_epsilon(float minStep, float lipschitz) {
        return 0.5f * minStep * lipschitz;
    }
};

void validate_config(const RenderConfig& cfg);

struct GBuffer {
    int width = 0, height = 0;
    int tilesX = 0, tilesY = 0;
    std::vector<uint8_t> hit;
    std::vector<float> depth; // ray parameter t at the hit, scene units
    std::vector<Vec3> normal;
    std::vector<uint32_t> evalCount; // field evaluations spent on the pixel's ray
    std::vector<uint32_t> tileMaxOverlap;
    std::vector<uint32_t> tileCacheBytes;
    std::vector<uint8_t> tileError;

    void init(int w, int h);
    size_t pixel(int x, int y) const { return static_cast<size_t>(y) * width + x; }
};

struct RenderStats {
    uint64_t fieldEvals = 0;
    uint64_t retainedNodeVisits = 0; // sum of pruned-view sizes over evaluations
    uint64_t primitiveEvals = 0;     // sum of per-evaluation primitive counts
    uint64_t treeNodeCount = 0;
    uint32_t maxOverlap = 0;
    uint32_t maxCacheBytes = 0;

    uint64_t full_tree_equivalent_visits() const { return fieldEvals * treeNodeCount; }
    double mean_retained_per_eval() const {
        return fieldEvals ? static_cast<double>(retainedNodeVisits) / fieldEvals : 0.0;
    }
};

// ---------------------------------------------------------------------------
// Subfrustum fetch heuristic

struct ActiveFragment {
    uint32_t word = 0;
    float zEntry = 0.0f, zExit = 0.0f;
};

struct TileFetchState {
    std::span<const Fragment> list; // sorted by entry depth
    size_t cursor = 0;
    std::vector<ActiveFragment> actives; // insertion-sorted by node word
    float zEnd = 0.0f;
};

struct FetchInterval {
    float zBegin = 0.0f, zEnd = 0.0f;
};

// One turn of the active-primitive tracking loop: expire fragments behind the
// previous interval, skip empty space, then fetch while (next entry does not
// open a gap) and (next entry stays within the fetch window) and (at most
// maxNewPerFetch new fragments) and (active count below maxOverlap). Returns
// nothing when the tile is exhausted.
std::optional<FetchInterval> fetch_interval(TileFetchState& state, const CameraFrame& frame,
                                            const RenderConfig& cfg);

// ---------------------------------------------------------------------------
// Sphere tracing

struct TraceResult {
    bool hit = false;
    float t = 0.0f;
};

// Overrelaxed sphere tracing over [t0, t1]. On overshoot (consecutive safe
// spheres fail to overlap) the first non-intersecting sphere is saved for
// reuse and relaxation stays off until the march reaches it again. Steps are
// clamped below by minStep and the final step lands exactly on t1, so a
// crossing inside the interval cannot be skipped.
template <typename FieldFn>
TraceResult sphere_trace_interval(FieldFn&& field, float t0, float t1, const RenderConfig& cfg,
                                  uint32_t& evalCount) {
    TraceResult result;
    if (t0 > t1) return result;
    const float invL = 1.0f / cfg.lipschitz;

    float t = t0;
    float f = field(t);
    ++evalCount;
    if (f <= cfg.hitEpsilon) return {true, t};

    bool relaxOn = true;
    bool savedValid = false;
    float savedT = 0.0f, savedF = 0.0f;

    for (;;) {
        float r = f * invL;
        if (!std::isfinite(r)) return result; // empty field: nothing to cross
        float step = relaxOn ? cfg.relax * r : r;
        step = std::max(step, cfg.minStep);
        float tn = t + step;

        bool reused = false;
        float fn = 0.0f;
        if (savedValid && tn >= savedT) {
            if (savedT >= t + cfg.minStep && savedT <= t1) {
                tn = savedT;
                fn = savedF;
                reused = true;
            }
            savedValid = false;
            relaxOn = true;
        }
        if (tn > t1) {
            if (t >= t1) return result;
            tn = t1;
            reused = false;
        }
        if (!reused) {
            fn = field(tn);
            ++evalCount;
        }

        // A relaxed step whose sphere fails to overlap the previous one (or
        // that lands inside the solid) may have skipped a crossing; the hit
        // test only applies to trusted steps.
        bool overshoot = !reused && relaxOn &&
                         ((tn - t) * cfg.lipschitz >= f + std::fabs(fn) ||
                          fn < -cfg.hitEpsilon);
        if (overshoot) {
            // save this sphere, back off to the safe boundary of the previous
            // one and march unrelaxed until the saved sphere is reached
            savedT = tn;
            savedF = fn;
            savedValid = true;
            relaxOn = false;
            float tb = t + std::max(r, cfg.minStep);
            if (tb >= savedT) {
                t = savedT;
                f = savedF;
                savedValid = false;
                relaxOn = true;
            } else if (tb > t1) {
                return result;
            } else {
                t = tb;
                f = field(tb);
                ++evalCount;
            }
            if (f <= cfg.hitEpsilon) return {true, t};
            continue;
        }
        if (fn <= cfg.hitEpsilon) return {true, tn};
        if (tn >= t1) return result;
        t = tn;
        f = fn;
    }
}

// ---------------------------------------------------------------------------
// Tile pipeline and reference renderer

// Synchronized per-tile processing: fetch interval, build one pruned view for
// the whole tile, sphere-trace every unfinished pixel ray over it, repeat
// until the fragment list is exhausted or all rays found a crossing. Tiles
// run in parallel; stack or view overflow marks the tile as failed and the
// render continues.
GBuffer render_tiles(const LinearTree& tree, const TileABuffer& abuffer,
                     const CameraFrame& frame, const RenderConfig& cfg,
                     RenderStats* stats = nullptr);

// Brute-force reference: sphere-traces every pixel over the full [near, far]
// range evaluating the complete tree at every step, with identical stepping
// constants. No acceleration structure is involved.
GBuffer oracle_render(const LinearTree& tree, const CameraFrame& frame,
                      const RenderConfig& cfg, RenderStats* stats = nullptr);

// Fills the normal plane of a G-buffer. Depth-differential mode reconstructs
// positions from neighboring depths; pixels without usable neighbors (and
// all pixels in central-difference mode) use a 6-tap field gradient.
void compute_normals(const LinearTree& tree, GBuffer& gbuffer, const CameraFrame& frame,
                     RenderConfig::NormalsMode mode);

uint32_t resolve_thread_count(uint32_t requested);

} // namespace blobtree
