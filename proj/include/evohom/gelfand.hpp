#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "evohom/mesh.hpp"

namespace evohom {

using Complex = std::complex<double>;

namespace detail {

inline void check_grid(int N, int m, std::size_t size, const char* what)
{
    if (N < 1 || m < 1) {
        throw std::invalid_argument(std::string(what) + ": N and m must be positive");
    }
    const auto side = static_cast<std::size_t>(N) * static_cast<std::size_t>(m);
    if (size != side * side) {
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(side * side) + " values, got " +
                                    std::to_string(size));
    }
}

} // namespace detail

/**
 * A (0,N)^2-periodic function sampled at x = (ix/m, iy/m), ix, iy < N m.
 * Sample ix belongs to block ix / m and intra-block position ix % m.
 */
struct BlockGridFunction {
    int N = 1;
    int m = 1;
    std::vector<Complex> values; ///< index ix + N m iy

    static BlockGridFunction zeros(int N, int m)
    {
        return {N, m, std::vector<Complex>(static_cast<std::size_t>(N * m) * static_cast<std::size_t>(N * m))};
    }

    static BlockGridFunction sample(int N, int m, const std::function<Complex(Point2)>& f)
    {
        auto g = zeros(N, m);
        for (int iy = 0; iy < N * m; ++iy) {
            for (int ix = 0; ix < N * m; ++ix) {
                g.at(ix, iy) = f({static_cast<double>(ix) / m, static_cast<double>(iy) / m});
            }
        }
        return g;
    }

    [[nodiscard]] int side() const noexcept { return N * m; }
    [[nodiscard]] Complex& at(int ix, int iy) { return values[static_cast<std::size_t>(ix + side() * iy)]; }
    [[nodiscard]] const Complex& at(int ix, int iy) const { return values[static_cast<std::size_t>(ix + side() * iy)]; }

    /// Value at block (kx, ky), intra-block sample (yx, yy).
    [[nodiscard]] const Complex& block(int kx, int ky, int yx, int yy) const { return at(kx * m + yx, ky * m + yy); }
    [[nodiscard]] Complex& block(int kx, int ky, int yx, int yy) { return at(kx * m + yx, ky * m + yy); }

    /// Discrete L^2((0,N)^2) norm, each sample weighted by its area 1/m^2.
    [[nodiscard]] double norm() const
    {
        double s = 0.0;
        for (const auto& v : values) {
            s += std::norm(v);
        }
        return std::sqrt(s) / m;
    }
};

/// Fibres F(theta_k, y) with theta_k = 2 pi k / N, k in {0..N-1}^2, y on the m x m intra-block grid.
struct FibreDecomposition {
    int N = 1;
    int m = 1;
    std::vector<Complex> values; ///< index (kx + N ky) m^2 + yx + m yy

    static FibreDecomposition zeros(int N, int m)
    {
        return {N, m, std::vector<Complex>(static_cast<std::size_t>(N * m) * static_cast<std::size_t>(N * m))};
    }

    [[nodiscard]] Complex& at(int kx, int ky, int yx, int yy)
    {
        return values[static_cast<std::size_t>((kx + N * ky) * m * m + yx + m * yy)];
    }
    [[nodiscard]] const Complex& at(int kx, int ky, int yx, int yy) const
    {
        return values[static_cast<std::size_t>((kx + N * ky) * m * m + yx + m * yy)];
    }

    [[nodiscard]] double theta(int k) const noexcept { return 2.0 * std::numbers::pi * k / N; }

    /// Counting measure over the frequencies, area 1/m^2 per sample.
    [[nodiscard]] double norm() const
    {
        double s = 0.0;
        for (const auto& v : values) {
            s += std::norm(v);
        }
        return std::sqrt(s) / m;
    }
};

/// Samples of a function on (0,1)^2 at (i/n, j/n).
struct UnitSquareGrid {
    int n = 1;
    std::vector<Complex> values; ///< index i + n j

    static UnitSquareGrid sample(int n, const std::function<Complex(Point2)>& f)
    {
        UnitSquareGrid g{n, std::vector<Complex>(static_cast<std::size_t>(n) * static_cast<std::size_t>(n))};
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                g.values[static_cast<std::size_t>(i + n * j)] = f({static_cast<double>(i) / n, static_cast<double>(j) / n});
            }
        }
        return g;
    }

    [[nodiscard]] double norm() const
    {
        double s = 0.0;
        for (const auto& v : values) {
            s += std::norm(v);
        }
        return std::sqrt(s) / n;
    }
};

namespace detail {

/// out(k) = scale * sum_j in(j) e^{sign 2 pi i j k / N}, applied along one block axis for every other index.
inline std::vector<Complex> block_dft(const std::vector<Complex>& in, int N, int m, bool along_x, double sign,
                                      double scale)
{
    std::vector<Complex> tw(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k) {
        tw[static_cast<std::size_t>(k)] = std::polar(1.0, sign * 2.0 * std::numbers::pi * k / N);
    }
    // index layout (kx + N ky) m^2 + yx + m yy for both input and output
    std::vector<Complex> out(in.size());
    const auto mm = static_cast<std::size_t>(m * m);
    for (int other = 0; other < N; ++other) {
        for (int k = 0; k < N; ++k) {
            for (std::size_t y = 0; y < mm; ++y) {
                Complex s = 0.0;
                for (int j = 0; j < N; ++j) {
                    const int bx = along_x ? j : other;
                    const int by = along_x ? other : j;
                    s += in[static_cast<std::size_t>(bx + N * by) * mm + y] * tw[static_cast<std::size_t>((j * k) % N)];
                }
                const int ox = along_x ? k : other;
                const int oy = along_x ? other : k;
                out[static_cast<std::size_t>(ox + N * oy) * mm + y] = scale * s;
            }
        }
    }
    return out;
}

} // namespace detail

/// V_N f(theta, y) = (1/N) sum_k f(y + k) e^{-i theta . k}, as two one-axis sums over the blocks.
inline FibreDecomposition forward(const BlockGridFunction& f)
{
    detail::check_grid(f.N, f.m, f.values.size(), "forward");
    const int N = f.N, m = f.m;
    auto r = FibreDecomposition::zeros(N, m);
    for (int ky = 0; ky < N; ++ky) {
        for (int kx = 0; kx < N; ++kx) {
            for (int yy = 0; yy < m; ++yy) {
                for (int yx = 0; yx < m; ++yx) {
                    r.at(kx, ky, yx, yy) = f.block(kx, ky, yx, yy);
                }
            }
        }
    }
    r.values = detail::block_dft(r.values, N, m, true, -1.0, 1.0);
    r.values = detail::block_dft(r.values, N, m, false, -1.0, 1.0 / N);
    return r;
}

/// Adjoint of forward: f(y + k) = (1/N) sum_theta F(theta, y) e^{i theta . k}.
inline BlockGridFunction inverse(const FibreDecomposition& F)
{
    detail::check_grid(F.N, F.m, F.values.size(), "inverse");
    const int N = F.N, m = F.m;
    auto v = detail::block_dft(F.values, N, m, true, 1.0, 1.0);
    v = detail::block_dft(v, N, m, false, 1.0, 1.0 / N);
    auto f = BlockGridFunction::zeros(N, m);
    const auto mm = static_cast<std::size_t>(m * m);
    for (int ky = 0; ky < N; ++ky) {
        for (int kx = 0; kx < N; ++kx) {
            for (int yy = 0; yy < m; ++yy) {
                for (int yx = 0; yx < m; ++yx) {
                    f.block(kx, ky, yx, yy) = v[static_cast<std::size_t>(kx + N * ky) * mm +
                                                static_cast<std::size_t>(yx + m * yy)];
                }
            }
        }
    }
    return f;
}

/// T_N f = (1/N) f(x / N) on (0,N)^2; needs n = N m samples per axis of f.
inline BlockGridFunction scale_T_N(const UnitSquareGrid& f, int N)
{
    if (N < 1 || f.n % N != 0) {
        throw std::invalid_argument("scale_T_N: sample count " + std::to_string(f.n) + " is not a multiple of N=" +
                                    std::to_string(N));
    }
    BlockGridFunction g{N, f.n / N, f.values};
    for (auto& v : g.values) {
        v /= static_cast<double>(N);
    }
    return g;
}

/// G_N = V_N T_N.
inline FibreDecomposition gelfand(const UnitSquareGrid& f, int N) { return forward(scale_T_N(f, N)); }

} // namespace evohom
