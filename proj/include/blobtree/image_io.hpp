#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blobtree/tracer.hpp"

namespace blobtree {

// Binary netpbm output: P6 for color, P5 with maxval 65535 (big-endian
// samples) for depth and diagnostics.
void write_ppm(const std::string& path, int width, int height,
               const std::vector<uint8_t>& rgb);
void write_pgm16(const std::string& path, int width, int height,
                 const std::vector<uint16_t>& gray);
std::vector<uint16_t> read_pgm16(const std::string& path, int& width, int& height);

// G-buffer directory dump: depth16.pgm, hits.pgm, normal.ppm, color.ppm,
// evals.pgm plus meta.txt carrying the fixed depth scale. Raw data is never
// rescaled silently; the scale lives in the sidecar.
void write_gbuffer(const std::string& dir, const GBuffer& gbuffer, const CameraFrame& frame);
GBuffer load_gbuffer(const std::string& dir);

void write_stats_images(const std::string& dir, const GBuffer& gbuffer);

struct CompareReport {
    size_t pixels = 0;
    size_t hitsA = 0, hitsB = 0;
    size_t hitMismatches = 0;
    double hitAgreement = 1.0;
    double depthRms = 0.0;
    double depthMax = 0.0;
    size_t depthOutliers = 0; // matched hits with |dz| > tolerance
    std::vector<std::pair<int, int>> mismatchSample;
};

// Dimension mismatch throws; everything else is reported, not judged.
CompareReport compare_gbuffers(const GBuffer& a, const GBuffer& b, float depthTolerance);

std::string format_report(const CompareReport& report);

} // namespace blobtree
