#pragma once

#include <optional>
#include <vector>

#include "blobtree/camera.hpp"
#include "blobtree/linear_tree.hpp"

namespace blobtree {

// One registered overlap between a primitive volume of interest and a screen
// tile: conservative entry/exit depth in NDC over the tile's pixel rays.
struct Fragment {
    uint32_t primitiveWord = 0;
    float zEntry = 0.0f;
    float zExit = 0.0f;
};

struct TileABuffer {
    int tilesX = 0, tilesY = 0;
    std::vector<std::vector<Fragment>> tiles; // sorted by zEntry, ties by word

    const std::vector<Fragment>& at(int tx, int ty) const {
        return tiles[static_cast<size_t>(ty) * tilesX + tx];
    }
    size_t fragment_count() const;
};

// Analytic ray/volume interval in ray parameter t (unclipped; tEnter may be
// negative). Empty optional when disjoint.
std::optional<std::pair<float, float>> ray_volume_intersect(const Ray& ray,
                                                            const VolumeOfInterest& volume);

// Keeps the list ordered by (zEntry, primitiveWord).
void insert_sorted(std::vector<Fragment>& list, const Fragment& fragment);

// Software replacement for imposter rasterization: every volume is tested
// against the pixel rays of each candidate tile (64 per full tile);
// per-tile depth is aggregated conservatively (min entry, max exit over the
// hitting rays), converted to NDC and clipped to [near, far].
TileABuffer rasterize_volumes(std::span<const VolumeOfInterest> volumes,
                              const CameraFrame& frame);

// Debug dump of per-tile fragment counts as a 16-bit graymap.
void write_tile_counts_pgm(const TileABuffer& buffer, const char* path);

} // namespace blobtree
