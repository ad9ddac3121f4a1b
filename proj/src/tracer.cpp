#include "blobtree/tracer.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace blobtree {

void validate_config(const RenderConfig& cfg) {
    if (!(cfg.relax >= 1.0f && cfg.relax < 2.0f))
        throw std::invalid_argument("relaxation factor must lie in [1, 2)");
    if (!(cfg.lipschitz >= 1.0f))
        throw std::invalid_argument("lipschitz bound must be at least 1");
    if (!(cfg.minStep > 0.0f)) throw std::invalid_argument("min step must be > 0");
    if (!(cfg.hitEpsilon > 0.0f)) throw std::invalid_argument("hit epsilon must be > 0");
    if (cfg.maxOverlap == 0 || cfg.maxOverlap > kMaxOverlapLimit)
        throw std::invalid_argument("max overlap must lie in [1, 96]");
}

void GBuffer::init(int w, int h) {
    width = w;
    height = h;
    tilesX = (w + kTileSize - 1) / kTileSize;
    tilesY = (h + kTileSize - 1) / kTileSize;
    size_t n = static_cast<size_t>(w) * h;
    hit.assign(n, 0);
    depth.assign(n, 0.0f);
    normal.assign(n, Vec3{});
    evalCount.assign(n, 0);
    size_t tiles = static_cast<size_t>(tilesX) * tilesY;
    tileMaxOverlap.assign(tiles, 0);
    tileCacheBytes.assign(tiles, 0);
    tileError.assign(tiles, 0);
}

uint32_t resolve_thread_count(uint32_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BLOBTREE_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<uint32_t>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// ---------------------------------------------------------------------------
// Active primitive tracking

std::optional<FetchInterval> fetch_interval(TileFetchState& state, const CameraFrame& frame,
                                            const RenderConfig& cfg) {
    size_t sizeBefore = state.actives.size();
    std::erase_if(state.actives,
                  [&](const ActiveFragment& a) { return a.zExit <= state.zEnd; });
    bool expired = state.actives.size() != sizeBefore;

    bool hasNext = state.cursor < state.list.size();
    if (state.actives.empty() && !hasNext) return std::nullopt;

    float zBegin = state.zEnd;
    if (hasNext) zBegin = std::max(state.zEnd, state.list[state.cursor].zEntry);

    float window = cfg.fetchWindow;
    if (!(window > 0.0f))
        window = (frame.camera().farZ - frame.camera().nearZ) / 20.0f;
    float zBeginView = frame.view_z_from_ndc(zBegin);

    float maxExit = -kFieldInfinity;
    for (const ActiveFragment& a : state.actives) maxExit = std::max(maxExit, a.zExit);

    uint32_t fetched = 0;
    while (state.cursor < state.list.size()) {
        const Fragment& cand = state.list[state.cursor];
        if (!state.actives.empty()) {
            if (cand.zEntry > maxExit) break; // would process empty space
            if (fetched >= cfg.maxNewPerFetch) break;
            if (state.actives.size() >= cfg.maxOverlap) break;
            if (frame.view_z_from_ndc(cand.zEntry) - zBeginView >= window) break;
        }
        ActiveFragment af{cand.primitiveWord, cand.zEntry, cand.zExit};
        auto pos = std::lower_bound(state.actives.begin(), state.actives.end(), af.word,
                                    [](const ActiveFragment& a, uint32_t w) { return a.word < w; });
        state.actives.insert(pos, af);
        maxExit = std::max(maxExit, cand.zExit);
        ++state.cursor;
        ++fetched;
    }

    float zEndNew = maxExit;
    if (state.cursor < state.list.size())
        zEndNew = std::min(state.list[state.cursor].zEntry, maxExit);

    // Saturated fetch with nothing expiring would stall; push the interval to
    // the earliest active exit so the next turn can make room.
    if (zEndNew <= zBegin && fetched == 0 && !expired) {
        float minExit = kFieldInfinity;
        for (const ActiveFragment& a : state.actives) minExit = std::min(minExit, a.zExit);
        zEndNew = minExit;
    }

    state.zEnd = zEndNew;
    return FetchInterval{zBegin, zEndNew};
}

// ---------------------------------------------------------------------------
// Tile pipeline

namespace {

struct TilePixels {
    Ray rays[kTileSize * kTileSize];
    size_t pixelIndex[kTileSize * kTileSize];
    bool found[kTileSize * kTileSize];
    int count = 0;
};

template <typename Fn>
void parallel_for_index(uint32_t count, uint32_t threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (uint32_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<uint32_t> next{0};
    auto worker = [&]() {
        for (;;) {
            uint32_t i = next.fetch_add(1);
            if (i >= count) break;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    uint32_t spawn = std::min(threads, count) - 1;
    pool.reserve(spawn);
    for (uint32_t i = 0; i < spawn; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

} // namespace

GBuffer render_tiles(const LinearTree& tree, const TileABuffer& abuffer,
                     const CameraFrame& frame, const RenderConfig& cfg, RenderStats* stats) {
    validate_config(cfg);
    const Camera& cam = frame.camera();
    GBuffer g;
    g.init(cam.width, cam.height);

    uint32_t threads = resolve_thread_count(cfg.threads);
    uint32_t tileCount = static_cast<uint32_t>(g.tilesX) * g.tilesY;

    std::mutex statsMutex;
    RenderStats total;
    total.treeNodeCount = tree.node_count();

    parallel_for_index(tileCount, threads, [&](uint32_t tileIndex) {
        int tx = static_cast<int>(tileIndex) % g.tilesX;
        int ty = static_cast<int>(tileIndex) / g.tilesX;
        const std::vector<Fragment>& frags = abuffer.at(tx, ty);
        if (frags.empty()) return;

        TilePixels pix;
        int yEnd = std::min((ty + 1) * kTileSize, cam.height);
        int xEnd = std::min((tx + 1) * kTileSize, cam.width);
        for (int y = ty * kTileSize; y < yEnd; ++y) {
            for (int x = tx * kTileSize; x < xEnd; ++x) {
                pix.rays[pix.count] = frame.pixel_ray(x, y);
                pix.pixelIndex[pix.count] = g.pixel(x, y);
                pix.found[pix.count] = false;
                ++pix.count;
            }
        }

        RenderStats st;
        TileFetchState fetch;
        fetch.list = frags;
        std::vector<uint32_t> activeWords;
        activeWords.reserve(cfg.maxOverlap);
        int remaining = pix.count;

        try {
            while (remaining > 0) {
                auto interval = fetch_interval(fetch, frame, cfg);
                if (!interval) break;

                uint32_t overlap = static_cast<uint32_t>(fetch.actives.size());
                g.tileMaxOverlap[tileIndex] = std::max(g.tileMaxOverlap[tileIndex], overlap);
                st.maxOverlap = std::max(st.maxOverlap, overlap);

                activeWords.clear();
                for (const ActiveFragment& a : fetch.actives) activeWords.push_back(a.word);
                PrunedView view = build_pruned_view(tree, activeWords);
                g.tileCacheBytes[tileIndex] =
                    std::max(g.tileCacheBytes[tileIndex], view.cache_bytes());
                st.maxCacheBytes = std::max(st.maxCacheBytes, view.cache_bytes());
                if (!view.rootUsed) continue;
                if (interval->zEnd <= interval->zBegin) continue;

                float vz0 = frame.view_z_from_ndc(interval->zBegin);
                float vz1 = frame.view_z_from_ndc(interval->zEnd);
                for (int i = 0; i < pix.count; ++i) {
                    if (pix.found[i]) continue;
                    const Ray& ray = pix.rays[i];
                    float t0 = ray.t_from_view_z(vz0);
                    float t1 = ray.t_from_view_z(vz1);
                    uint32_t evals = 0;
                    auto fieldAt = [&](float t) {
                        return eval_pruned(view, ray.origin + ray.dir * t);
                    };
                    TraceResult res = sphere_trace_interval(fieldAt, t0, t1, cfg, evals);
                    g.evalCount[pix.pixelIndex[i]] += evals;
                    st.fieldEvals += evals;
                    st.retainedNodeVisits += static_cast<uint64_t>(evals) * view.node_count();
                    st.primitiveEvals += static_cast<uint64_t>(evals) * view.primitiveCount;
                    if (res.hit) {
                        g.hit[pix.pixelIndex[i]] = 1;
                        g.depth[pix.pixelIndex[i]] = res.t;
                        pix.found[i] = true;
                        --remaining;
                    }
                }
            }
        } catch (const std::runtime_error&) {
            g.tileError[tileIndex] = 1;
        }

        std::lock_guard<std::mutex> lock(statsMutex);
        total.fieldEvals += st.fieldEvals;
        total.retainedNodeVisits += st.retainedNodeVisits;
        total.primitiveEvals += st.primitiveEvals;
        total.maxOverlap = std::max(total.maxOverlap, st.maxOverlap);
        total.maxCacheBytes = std::max(total.maxCacheBytes, st.maxCacheBytes);
    });

    if (stats) *stats = total;
    return g;
}

GBuffer oracle_render(const LinearTree& tree, const CameraFrame& frame, const RenderConfig& cfg,
                      RenderStats* stats) {
    validate_config(cfg);
    const Camera& cam = frame.camera();
    GBuffer g;
    g.init(cam.width, cam.height);

    uint32_t threads = resolve_thread_count(cfg.threads);
    uint64_t primCount = tree.primitiveWords.size();

    std::mutex statsMutex;
    RenderStats total;
    total.treeNodeCount = tree.node_count();

    parallel_for_index(static_cast<uint32_t>(cam.height), threads, [&](uint32_t row) {
        int y = static_cast<int>(row);
        RenderStats st;
        for (int x = 0; x < cam.width; ++x) {
            Ray ray = frame.pixel_ray(x, y);
            float t0 = ray.t_from_view_z(cam.nearZ);
            float t1 = ray.t_from_view_z(cam.farZ);
            uint32_t evals = 0;
            auto fieldAt = [&](float t) { return eval_full(tree, ray.origin + ray.dir * t); };
            TraceResult res = sphere_trace_interval(fieldAt, t0, t1, cfg, evals);
            size_t px = g.pixel(x, y);
            g.evalCount[px] = evals;
            st.fieldEvals += evals;
            st.retainedNodeVisits += static_cast<uint64_t>(evals) * tree.node_count();
            st.primitiveEvals += static_cast<uint64_t>(evals) * primCount;
            if (res.hit) {
                g.hit[px] = 1;
                g.depth[px] = res.t;
            }
        }
        std::lock_guard<std::mutex> lock(statsMutex);
        total.fieldEvals += st.fieldEvals;
        total.retainedNodeVisits += st.retainedNodeVisits;
        total.primitiveEvals += st.primitiveEvals;
    });

    if (stats) *stats = total;
    return g;
}

// ---------------------------------------------------------------------------
// Normals

namespace {

Vec3 gradient_normal(const LinearTree& tree, Vec3 p, float h) {
    float dx = eval_full(tree, {p.x + h, p.y, p.z}) - eval_full(tree, {p.x - h, p.y, p.z});
    float dy = eval_full(tree, {p.x, p.y + h, p.z}) - eval_full(tree, {p.x, p.y - h, p.z});
    float dz = eval_full(tree, {p.x, p.y, p.z + h}) - eval_full(tree, {p.x, p.y, p.z - h});
    return normalize(Vec3{dx, dy, dz});
}

} // namespace

void compute_normals(const LinearTree& tree, GBuffer& g, const CameraFrame& frame,
                     RenderConfig::NormalsMode mode) {
    auto hitAt = [&](int x, int y) {
        return x >= 0 && x < g.width && y >= 0 && y < g.height && g.hit[g.pixel(x, y)] != 0;
    };
    auto positionAt = [&](int x, int y) {
        Ray r = frame.pixel_ray(x, y);
        return r.origin + r.dir * g.depth[g.pixel(x, y)];
    };

    parallel_for_index(static_cast<uint32_t>(g.height), resolve_thread_count(0), [&](uint32_t row) {
        int y = static_cast<int>(row);
        for (int x = 0; x < g.width; ++x) {
            size_t px = g.pixel(x, y);
            if (!g.hit[px]) {
                g.normal[px] = Vec3{};
                continue;
            }
            Vec3 p = positionAt(x, y);
            float h = std::max(1e-3f, 1e-4f * g.depth[px]);

            if (mode == RenderConfig::NormalsMode::CentralDifference) {
                g.normal[px] = gradient_normal(tree, p, h);
                continue;
            }

            bool l = hitAt(x - 1, y), r = hitAt(x + 1, y);
            bool u = hitAt(x, y - 1), d = hitAt(x, y + 1);
            Vec3 ddx, ddy;
            bool okX = true, okY = true;
            if (l && r) ddx = positionAt(x + 1, y) - positionAt(x - 1, y);
            else if (r) ddx = positionAt(x + 1, y) - p;
            else if (l) ddx = p - positionAt(x - 1, y);
            else okX = false;
            if (u && d) ddy = positionAt(x, y + 1) - positionAt(x, y - 1);
            else if (d) ddy = positionAt(x, y + 1) - p;
            else if (u) ddy = p - positionAt(x, y - 1);
            else okY = false;

            Vec3 n{};
            if (okX && okY) {
                n = cross(ddx, ddy);
                float len = length(n);
                if (len > 1e-12f) {
                    n = n / len;
                    if (dot(n, frame.pixel_ray(x, y).dir) > 0.0f) n = -n;
                } else {
                    okX = false;
                }
            }
            if (!(okX && okY)) n = gradient_normal(tree, p, h);
            g.normal[px] = n;
        }
    });
}

} // namespace blobtree
