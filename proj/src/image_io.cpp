#include "blobtree/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace blobtree {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

} // namespace

void write_ppm(const std::string& path, int width, int height,
               const std::vector<uint8_t>& rgb) {
    auto out = open_out(path);
    out << "P6\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
}

void write_pgm16(const std::string& path, int width, int height,
                 const std::vector<uint16_t>& gray) {
    auto out = open_out(path);
    out << "P5\n" << width << " " << height << "\n65535\n";
    for (uint16_t v : gray) {
        uint8_t bytes[2] = {static_cast<uint8_t>(v >> 8), static_cast<uint8_t>(v & 0xFF)};
        out.write(reinterpret_cast<const char*>(bytes), 2);
    }
}

std::vector<uint16_t> read_pgm16(const std::string& path, int& width, int& height) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::string magic;
    int maxval = 0;
    in >> magic >> width >> height >> maxval;
    if (magic != "P5" || maxval != 65535)
        throw std::runtime_error("expected 16-bit P5 graymap: " + path);
    in.get(); // single whitespace after header
    std::vector<uint16_t> data(static_cast<size_t>(width) * height);
    for (uint16_t& v : data) {
        uint8_t bytes[2];
        in.read(reinterpret_cast<char*>(bytes), 2);
        v = static_cast<uint16_t>((bytes[0] << 8) | bytes[1]);
    }
    if (!in) throw std::runtime_error("truncated graymap: " + path);
    return data;
}

namespace {

constexpr uint16_t kDepthQuantMax = 65535;

uint16_t quantize_depth(float t, float tMax) {
    float v = std::clamp(t / tMax, 0.0f, 1.0f);
    return static_cast<uint16_t>(std::lround(v * kDepthQuantMax));
}

std::vector<uint8_t> shade_color(const GBuffer& g) {
    std::vector<uint8_t> rgb(static_cast<size_t>(g.width) * g.height * 3, 0);
    Vec3 light = normalize(Vec3{0.4f, 0.7f, -0.6f});
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            size_t px = g.pixel(x, y);
            size_t o = px * 3;
            int tile = (y / kTileSize) * g.tilesX + (x / kTileSize);
            if (g.tileError[static_cast<size_t>(tile)]) {
                rgb[o] = 255;
                rgb[o + 2] = 255; // magenta marks failed tiles
                continue;
            }
            if (!g.hit[px]) {
                rgb[o] = rgb[o + 1] = rgb[o + 2] = 24;
                continue;
            }
            float d = std::max(dot(g.normal[px], light), 0.0f);
            uint8_t v = static_cast<uint8_t>(std::lround(40 + 215 * d));
            rgb[o] = rgb[o + 1] = rgb[o + 2] = v;
        }
    }
    return rgb;
}

} // namespace

void write_gbuffer(const std::string& dir, const GBuffer& g, const CameraFrame& frame) {
    std::filesystem::create_directories(dir);
    const Camera& cam = frame.camera();
    float tMax = 2.0f * cam.farZ;

    std::vector<uint16_t> depth(g.depth.size(), 0);
    std::vector<uint16_t> hits(g.hit.size(), 0);
    for (size_t i = 0; i < g.depth.size(); ++i) {
        hits[i] = g.hit[i] ? 65535 : 0;
        depth[i] = g.hit[i] ? quantize_depth(g.depth[i], tMax) : 0;
    }
    write_pgm16(dir + "/depth16.pgm", g.width, g.height, depth);
    write_pgm16(dir + "/hits.pgm", g.width, g.height, hits);

    std::vector<uint8_t> normals(static_cast<size_t>(g.width) * g.height * 3, 0);
    for (size_t i = 0; i < g.normal.size(); ++i) {
        normals[3 * i + 0] = static_cast<uint8_t>(std::lround((g.normal[i].x * 0.5f + 0.5f) * 255));
        normals[3 * i + 1] = static_cast<uint8_t>(std::lround((g.normal[i].y * 0.5f + 0.5f) * 255));
        normals[3 * i + 2] = static_cast<uint8_t>(std::lround((g.normal[i].z * 0.5f + 0.5f) * 255));
    }
    write_ppm(dir + "/normal.ppm", g.width, g.height, normals);
    write_ppm(dir + "/color.ppm", g.width, g.height, shade_color(g));

    std::ofstream meta(dir + "/meta.txt");
    meta << "width " << g.width << "\nheight " << g.height << "\n"
         << "depth_scale_t_max " << tMax << "\n"
         << "near " << cam.nearZ << "\nfar " << cam.farZ << "\n";
}

GBuffer load_gbuffer(const std::string& dir) {
    std::ifstream meta(dir + "/meta.txt");
    if (!meta) throw std::runtime_error("missing meta.txt in " + dir);
    float tMax = 0.0f;
    std::string key;
    float value;
    int width = 0, height = 0;
    while (meta >> key >> value) {
        if (key == "depth_scale_t_max") tMax = value;
        if (key == "width") width = static_cast<int>(value);
        if (key == "height") height = static_cast<int>(value);
    }
    if (width <= 0 || height <= 0 || tMax <= 0.0f)
        throw std::runtime_error("malformed meta.txt in " + dir);

    int w = 0, h = 0;
    std::vector<uint16_t> depth = read_pgm16(dir + "/depth16.pgm", w, h);
    std::vector<uint16_t> hits = read_pgm16(dir + "/hits.pgm", w, h);
    GBuffer g;
    g.init(width, height);
    for (size_t i = 0; i < depth.size(); ++i) {
        g.hit[i] = hits[i] ? 1 : 0;
        g.depth[i] = static_cast<float>(depth[i]) / kDepthQuantMax * tMax;
    }
    return g;
}

void write_stats_images(const std::string& dir, const GBuffer& g) {
    std::filesystem::create_directories(dir);
    std::vector<uint16_t> evals(g.evalCount.size());
    uint32_t evalMax = 0;
    for (size_t i = 0; i < g.evalCount.size(); ++i) {
        evals[i] = static_cast<uint16_t>(std::min<uint32_t>(g.evalCount[i], 65535));
        evalMax = std::max(evalMax, g.evalCount[i]);
    }
    write_pgm16(dir + "/evals.pgm", g.width, g.height, evals);

    std::vector<uint16_t> overlap(g.tileMaxOverlap.size());
    for (size_t i = 0; i < overlap.size(); ++i)
        overlap[i] = static_cast<uint16_t>(std::min<uint32_t>(g.tileMaxOverlap[i], 65535));
    write_pgm16(dir + "/overlap.pgm", g.tilesX, g.tilesY, overlap);

    std::vector<uint16_t> cache(g.tileCacheBytes.size());
    for (size_t i = 0; i < cache.size(); ++i)
        cache[i] = static_cast<uint16_t>(std::min<uint32_t>(g.tileCacheBytes[i], 65535));
    write_pgm16(dir + "/cache.pgm", g.tilesX, g.tilesY, cache);

    std::ofstream scales(dir + "/scales.txt");
    scales << "evals raw counts, clamp 65535, observed max " << evalMax << "\n"
           << "overlap raw per-tile counts\n"
           << "cache raw per-tile bytes\n";
}

CompareReport compare_gbuffers(const GBuffer& a, const GBuffer& b, float depthTolerance) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("buffers differ in size");
    CompareReport report;
    report.pixels = a.hit.size();

    double sumSq = 0.0;
    size_t matched = 0;
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            size_t i = a.pixel(x, y);
            report.hitsA += a.hit[i] != 0;
            report.hitsB += b.hit[i] != 0;
            if ((a.hit[i] != 0) != (b.hit[i] != 0)) {
                ++report.hitMismatches;
                if (report.mismatchSample.size() < 16) report.mismatchSample.push_back({x, y});
                continue;
            }
            if (a.hit[i]) {
                double dz = static_cast<double>(a.depth[i]) - b.depth[i];
                sumSq += dz * dz;
                ++matched;
                report.depthMax = std::max(report.depthMax, std::fabs(dz));
                if (std::fabs(dz) > depthTolerance) {
                    ++report.depthOutliers;
                    if (report.mismatchSample.size() < 16) report.mismatchSample.push_back({x, y});
                }
            }
        }
    }
    report.hitAgreement =
        report.pixels ? 1.0 - static_cast<double>(report.hitMismatches) / report.pixels : 1.0;
    report.depthRms = matched ? std::sqrt(sumSq / matched) : 0.0;
    return report;
}

std::string format_report(const CompareReport& r) {
    std::ostringstream out;
    out << "pixels " << r.pixels << ", hits " << r.hitsA << "/" << r.hitsB
        << ", hit agreement " << r.hitAgreement << ", matched depth rms " << r.depthRms
        << ", max " << r.depthMax << ", outliers " << r.depthOutliers;
    if (!r.mismatchSample.empty()) {
        out << ", first mismatches:";
        for (auto& [x, y] : r.mismatchSample) out << " (" << x << "," << y << ")";
    }
    return out.str();
}

} // namespace blobtree
