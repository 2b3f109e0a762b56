#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "kinflow/vec2.hpp"

namespace kinflow {

/// Uniform spatial hash over particle positions.  With cell edge equal to the
/// interaction diameter 2R, every pair closer than 2R lands in the same or an
/// adjacent cell, so a 3x3 stencil sweep sees every interacting partner.
///
/// gather() returns candidate indices in ascending order.  Summing pair
/// contributions in that canonical order makes grid-accelerated forces
/// bitwise equal to an all-pairs loop over ascending j: the pairs the grid
/// prunes are beyond 2R and contribute exact zeros.
class NeighborGrid {
public:
    explicit NeighborGrid(double cell_size) : cell_(cell_size) {
        if (!(cell_size > 0.0) || !std::isfinite(cell_size))
            throw std::invalid_argument("NeighborGrid: cell size must be positive");
        inv_cell_ = 1.0 / cell_size;
    }

    void build(std::span<const PhasePoint> pts) {
        cells_.clear();
        for (std::uint32_t i = 0; i < pts.size(); ++i)
            cells_[key_of(pts[i].x)].push_back(i);
        size_ = pts.size();
    }

    /// All indices in the 3x3 cell neighborhood of pos, ascending.
    void gather(Vec2 pos, std::vector<std::uint32_t>& out) const {
        out.clear();
        const std::int64_t cx = coord(pos.x);
        const std::int64_t cy = coord(pos.y);
        for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                const auto it = cells_.find(pack(cx + dx, cy + dy));
                if (it == cells_.end()) continue;
                out.insert(out.end(), it->second.begin(), it->second.end());
            }
        std::sort(out.begin(), out.end());
    }

    double cell_size() const { return cell_; }
    std::size_t occupied_cells() const { return cells_.size(); }
    std::size_t indexed_points() const { return size_; }

    /// Cell contents keyed by packed coordinates, for validation.
    const std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>& cells() const {
        return cells_;
    }

    std::uint64_t key_of(Vec2 pos) const { return pack(coord(pos.x), coord(pos.y)); }

private:
    std::int64_t coord(double x) const {
        return static_cast<std::int64_t>(std::floor(x * inv_cell_));
    }

    static std::uint64_t pack(std::int64_t cx, std::int64_t cy) {
        const std::uint64_t ux = static_cast<std::uint32_t>(cx + (1LL << 31));
        const std::uint64_t uy = static_cast<std::uint32_t>(cy + (1LL << 31));
        return (ux << 32) | uy;
    }

    double cell_;
    double inv_cell_ = 0.0;
    std::size_t size_ = 0;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

} // namespace kinflow
