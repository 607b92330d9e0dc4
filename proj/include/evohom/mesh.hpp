#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace evohom {

struct CellIndex {
    int i = 0;
    int j = 0;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

enum class Direction { PlusX, MinusX, PlusY, MinusY };

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/**
 * Periodic equidistant n x n tensor-product mesh of the unit square.
 *
 * Cell (i,j) spans (i h, (i+1) h) x (j h, (j+1) h) with h = 1/n. After
 * periodic identification every cell owns its bottom and its left edge, and
 * its lower-left vertex, so there are n^2 cells, 2 n^2 edges and n^2 vertices.
 * Linear indices are i + n j for cells and vertices; bottom edges come first
 * (index i + n j), followed by left edges (n^2 + i + n j).
 */
class Mesh {
public:
    explicit Mesh(int n) : n_(n)
    {
        if (n < 1) {
            throw std::invalid_argument("Mesh: number of cells per dimension must be >= 1, got " +
                                        std::to_string(n));
        }
        h_ = 1.0 / static_cast<double>(n);
    }

    [[nodiscard]] int cells_per_dim() const noexcept { return n_; }
    [[nodiscard]] double h() const noexcept { return h_; }
    [[nodiscard]] std::size_t cell_count() const noexcept { return sq(n_); }
    [[nodiscard]] std::size_t edge_count() const noexcept { return 2 * sq(n_); }
    [[nodiscard]] std::size_t vertex_count() const noexcept { return sq(n_); }

    [[nodiscard]] int wrap(int i) const noexcept { return ((i % n_) + n_) % n_; }

    [[nodiscard]] std::size_t cell_id(CellIndex c) const noexcept
    {
        return static_cast<std::size_t>(c.i) + static_cast<std::size_t>(n_) * static_cast<std::size_t>(c.j);
    }
    [[nodiscard]] CellIndex cell_index(std::size_t id) const noexcept
    {
        return {static_cast<int>(id % static_cast<std::size_t>(n_)),
                static_cast<int>(id / static_cast<std::size_t>(n_))};
    }

    [[nodiscard]] std::size_t bottom_edge_id(CellIndex c) const noexcept { return cell_id(c); }
    [[nodiscard]] std::size_t left_edge_id(CellIndex c) const noexcept { return sq(n_) + cell_id(c); }
    [[nodiscard]] std::size_t top_edge_id(CellIndex c) const noexcept
    {
        return bottom_edge_id({c.i, wrap(c.j + 1)});
    }
    [[nodiscard]] std::size_t right_edge_id(CellIndex c) const noexcept
    {
        return left_edge_id({wrap(c.i + 1), c.j});
    }

    [[nodiscard]] Point2 cell_origin(CellIndex c) const noexcept { return {c.i * h_, c.j * h_}; }
    [[nodiscard]] Point2 cell_centre(CellIndex c) const noexcept
    {
        return {(c.i + 0.5) * h_, (c.j + 0.5) * h_};
    }

    /// Maps a point of [0,1)^2 to its half-open owning cell.
    [[nodiscard]] CellIndex cell_containing(Point2 p) const
    {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw std::invalid_argument("Mesh::cell_containing: non-finite coordinates");
        }
        return {locate(p.x), locate(p.y)};
    }

    /// Reference coordinates (xi, eta) in [0,1]^2 of a point relative to a cell.
    [[nodiscard]] Point2 to_reference(CellIndex c, Point2 p) const noexcept
    {
        return {p.x * n_ - c.i, p.y * n_ - c.j};
    }

    [[nodiscard]] CellIndex periodic_neighbor(CellIndex c, Direction d) const noexcept
    {
        switch (d) {
        case Direction::PlusX: return {wrap(c.i + 1), c.j};
        case Direction::MinusX: return {wrap(c.i - 1), c.j};
        case Direction::PlusY: return {c.i, wrap(c.j + 1)};
        case Direction::MinusY: return {c.i, wrap(c.j - 1)};
        }
        return c;
    }

private:
    static std::size_t sq(int n) noexcept { return static_cast<std::size_t>(n) * static_cast<std::size_t>(n); }

    int locate(double x) const noexcept
    {
        const int i = static_cast<int>(std::floor(x * n_));
        return std::clamp(i, 0, n_ - 1);
    }

    int n_;
    double h_;
};

inline Mesh build_mesh(int n) { return Mesh(n); }

/// Reduces a coordinate modulo 1 into [0,1).
inline double reduce_periodic(double x) noexcept
{
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
}

} // namespace evohom
