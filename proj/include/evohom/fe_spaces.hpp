#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evohom/lagrange.hpp"
#include "evohom/mesh.hpp"
#include "evohom/quadrature.hpp"

namespace evohom {

using Vec2 = std::array<double, 2>;
using ScalarFunction = std::function<double(Point2)>;
using VectorFunction = std::function<Vec2(Point2)>;

/// Coefficients of a discrete U = (u, v) at one time instant.
struct FieldPair {
    Eigen::VectorXd u;
    Eigen::VectorXd v;

    static FieldPair zeros(Eigen::Index dim_u, Eigen::Index dim_v)
    {
        return {Eigen::VectorXd::Zero(dim_u), Eigen::VectorXd::Zero(dim_v)};
    }
};

namespace detail {

inline void check_length(Eigen::Index got, std::size_t expected, const char* what)
{
    if (static_cast<std::size_t>(got) != expected) {
        throw std::invalid_argument(std::string(what) + ": coefficient length " + std::to_string(got) +
                                    " does not match space dimension " + std::to_string(expected));
    }
}

} // namespace detail

/**
 * Periodic H1-conforming space of continuous, cellwise tensor-degree-p
 * polynomials. Local basis: tensor Lagrange polynomials on Gauss-Lobatto
 * points, local index a + (p+1) b with a the x-index. Global nodes form a
 * periodic (p n) x (p n) lattice.
 */
class ScalarSpace {
public:
    ScalarSpace(Mesh mesh, int p) : mesh_(mesh), p_(p)
    {
        if (p < 1 || p > 10) {
            throw std::invalid_argument("ScalarSpace: degree must be in [1, 10]");
        }
        basis_ = LagrangeBasis1D(gauss_lobatto_points(p));
        const int n = mesh_.cells_per_dim();
        const std::size_t nloc = local_dim();
        dofs_.resize(mesh_.cell_count() * nloc);
        for (std::size_t c = 0; c < mesh_.cell_count(); ++c) {
            const auto ci = mesh_.cell_index(c);
            for (int b = 0; b <= p; ++b) {
                for (int a = 0; a <= p; ++a) {
                    const int gx = (ci.i * p + a) % (p * n);
                    const int gy = (ci.j * p + b) % (p * n);
                    dofs_[c * nloc + static_cast<std::size_t>(a + (p + 1) * b)] = gx + p * n * gy;
                }
            }
        }
    }

    [[nodiscard]] const Mesh& mesh() const noexcept { return mesh_; }
    [[nodiscard]] int degree() const noexcept { return p_; }
    [[nodiscard]] std::size_t local_dim() const noexcept { return static_cast<std::size_t>((p_ + 1) * (p_ + 1)); }
    [[nodiscard]] std::size_t global_dim() const noexcept
    {
        const auto m = static_cast<std::size_t>(p_ * mesh_.cells_per_dim());
        return m * m;
    }
    [[nodiscard]] const LagrangeBasis1D& basis_1d() const noexcept { return basis_; }

    /// Global indices of the local basis functions of a cell.
    [[nodiscard]] const int* cell_dofs(std::size_t cell) const noexcept { return &dofs_[cell * local_dim()]; }

    /// Physical coordinates of a global Lagrange node.
    [[nodiscard]] Point2 node_point(std::size_t dof) const noexcept
    {
        const int m = p_ * mesh_.cells_per_dim();
        const int gx = static_cast<int>(dof % static_cast<std::size_t>(m));
        const int gy = static_cast<int>(dof / static_cast<std::size_t>(m));
        const auto& x = basis_.nodes();
        const double h = mesh_.h();
        return {(gx / p_ + x[static_cast<std::size_t>(gx % p_)]) * h, (gy / p_ + x[static_cast<std::size_t>(gy % p_)]) * h};
    }

    /// Reference shape values at (xi, eta); out has local_dim() entries.
    void shape_values(double xi, double eta, double* out) const
    {
        std::array<double, 16> bx{};
        std::array<double, 16> by{};
        basis_.values(xi, bx.data());
        basis_.values(eta, by.data());
        const int m = p_ + 1;
        for (int b = 0; b < m; ++b) {
            for (int a = 0; a < m; ++a) {
                out[a + m * b] = bx[static_cast<std::size_t>(a)] * by[static_cast<std::size_t>(b)];
            }
        }
    }

    /// Physical gradients at reference point; gx, gy have local_dim() entries.
    void shape_gradients(double xi, double eta, double* gx, double* gy) const
    {
        std::array<double, 16> bx{}, by{}, dx{}, dy{};
        basis_.values(xi, bx.data());
        basis_.values(eta, by.data());
        basis_.derivatives(xi, dx.data());
        basis_.derivatives(eta, dy.data());
        const int m = p_ + 1;
        const double inv_h = 1.0 / mesh_.h();
        for (int b = 0; b < m; ++b) {
            for (int a = 0; a < m; ++a) {
                gx[a + m * b] = dx[static_cast<std::size_t>(a)] * by[static_cast<std::size_t>(b)] * inv_h;
                gy[a + m * b] = bx[static_cast<std::size_t>(a)] * dy[static_cast<std::size_t>(b)] * inv_h;
            }
        }
    }

    [[nodiscard]] double eval_in_cell(const Eigen::VectorXd& coeffs, std::size_t cell, double xi, double eta) const
    {
        std::array<double, 256> phi{};
        shape_values(xi, eta, phi.data());
        const int* dofs = cell_dofs(cell);
        double s = 0.0;
        for (std::size_t k = 0; k < local_dim(); ++k) {
            s += coeffs[dofs[k]] * phi[k];
        }
        return s;
    }

    [[nodiscard]] Vec2 eval_grad_in_cell(const Eigen::VectorXd& coeffs, std::size_t cell, double xi, double eta) const
    {
        std::array<double, 256> gx{}, gy{};
        shape_gradients(xi, eta, gx.data(), gy.data());
        const int* dofs = cell_dofs(cell);
        Vec2 g{0.0, 0.0};
        for (std::size_t k = 0; k < local_dim(); ++k) {
            g[0] += coeffs[dofs[k]] * gx[k];
            g[1] += coeffs[dofs[k]] * gy[k];
        }
        return g;
    }

private:
    Mesh mesh_;
    int p_;
    LagrangeBasis1D basis_;
    std::vector<int> dofs_;
};

/**
 * Periodic H(div)-conforming Raviart-Thomas space RT_k, k = p-1.
 *
 * Nodal tensor basis: the x-component functions are L_a(xi) G_b(eta) with L
 * Lagrange on k+2 Gauss-Lobatto points and G Lagrange on k+1 Gauss-Legendre
 * points (y-component analogous). The coefficient of an edge function is the
 * Cartesian normal component at an edge Gauss point, so it is shared verbatim
 * by both neighbouring cells, including across the periodic seam. The cell
 * map is an axis-aligned scaling, so component values carry over unchanged
 * and div picks up a factor 1/h.
 *
 * Global numbering: vertical-edge dofs (left edge of cell c, index
 * c (k+1) + b), then horizontal-edge dofs, then x-interior and y-interior
 * dofs per cell.
 */
class VectorSpace {
public:
    VectorSpace(Mesh mesh, int p) : mesh_(mesh), p_(p)
    {
        if (p < 1 || p > 10) {
            throw std::invalid_argument("VectorSpace: degree must be in [1, 10]");
        }
        const int k = p - 1;
        normal_ = LagrangeBasis1D(gauss_lobatto_points(k + 1));
        tangential_ = LagrangeBasis1D(gauss_legendre_1d(k + 1).nodes);

        const std::size_t cells = mesh_.cell_count();
        const std::size_t ne = static_cast<std::size_t>(k + 1);
        const std::size_t nint = static_cast<std::size_t>(k * (k + 1));
        const std::size_t off_h = cells * ne;
        const std::size_t off_ix = 2 * cells * ne;
        const std::size_t off_iy = off_ix + cells * nint;
        global_dim_ = off_iy + cells * nint;

        const std::size_t nloc = local_dim();
        dofs_.resize(cells * nloc);
        const int m_n = k + 2; // Lobatto count
        const int m_t = k + 1; // Gauss count
        for (std::size_t c = 0; c < cells; ++c) {
            const auto ci = mesh_.cell_index(c);
            const std::size_t right = mesh_.cell_id(mesh_.periodic_neighbor(ci, Direction::PlusX));
            const std::size_t top = mesh_.cell_id(mesh_.periodic_neighbor(ci, Direction::PlusY));
            int* out = &dofs_[c * nloc];
            // x-component: a over Lobatto (normal direction), b over Gauss
            for (int b = 0; b < m_t; ++b) {
                for (int a = 0; a < m_n; ++a) {
                    std::size_t g = 0;
                    if (a == 0) {
                        g = c * ne + static_cast<std::size_t>(b);
                    } else if (a == m_n - 1) {
                        g = right * ne + static_cast<std::size_t>(b);
                    } else {
                        g = off_ix + c * nint + static_cast<std::size_t>((a - 1) + k * b);
                    }
                    out[a + m_n * b] = static_cast<int>(g);
                }
            }
            // y-component: a over Gauss, b over Lobatto
            const int base = m_n * m_t;
            for (int b = 0; b < m_n; ++b) {
                for (int a = 0; a < m_t; ++a) {
                    std::size_t g = 0;
                    if (b == 0) {
                        g = off_h + c * ne + static_cast<std::size_t>(a);
                    } else if (b == m_n - 1) {
                        g = off_h + top * ne + static_cast<std::size_t>(a);
                    } else {
                        g = off_iy + c * nint + static_cast<std::size_t>(a + m_t * (b - 1));
                    }
                    out[base + a + m_t * b] = static_cast<int>(g);
                }
            }
        }
    }

    [[nodiscard]] const Mesh& mesh() const noexcept { return mesh_; }
    [[nodiscard]] int degree() const noexcept { return p_; }
    [[nodiscard]] int rt_index() const noexcept { return p_ - 1; }
    [[nodiscard]] std::size_t local_dim() const noexcept { return static_cast<std::size_t>(2 * p_ * (p_ + 1)); }
    [[nodiscard]] std::size_t x_local_dim() const noexcept { return local_dim() / 2; }
    [[nodiscard]] std::size_t global_dim() const noexcept { return global_dim_; }
    [[nodiscard]] const int* cell_dofs(std::size_t cell) const noexcept { return &dofs_[cell * local_dim()]; }

    /// Non-zero component (0 = x, 1 = y) of a local basis function.
    [[nodiscard]] int component(std::size_t local) const noexcept { return local < x_local_dim() ? 0 : 1; }

    /// Values of the non-zero component and the physical divergence of each local function.
    void shape_values(double xi, double eta, double* val, double* div) const
    {
        const int m_n = p_ + 1;
        const int m_t = p_;
        std::array<double, 16> nx{}, ny{}, dnx{}, dny{}, tx{}, ty{};
        normal_.values(xi, nx.data());
        normal_.values(eta, ny.data());
        normal_.derivatives(xi, dnx.data());
        normal_.derivatives(eta, dny.data());
        tangential_.values(xi, tx.data());
        tangential_.values(eta, ty.data());
        const double inv_h = 1.0 / mesh_.h();
        for (int b = 0; b < m_t; ++b) {
            for (int a = 0; a < m_n; ++a) {
                const auto ia = static_cast<std::size_t>(a);
                const auto ib = static_cast<std::size_t>(b);
                val[a + m_n * b] = nx[ia] * ty[ib];
                if (div != nullptr) {
                    div[a + m_n * b] = dnx[ia] * ty[ib] * inv_h;
                }
            }
        }
        const int base = m_n * m_t;
        for (int b = 0; b < m_n; ++b) {
            for (int a = 0; a < m_t; ++a) {
                const auto ia = static_cast<std::size_t>(a);
                const auto ib = static_cast<std::size_t>(b);
                val[base + a + m_t * b] = tx[ia] * ny[ib];
                if (div != nullptr) {
                    div[base + a + m_t * b] = tx[ia] * dny[ib] * inv_h;
                }
            }
        }
    }

    [[nodiscard]] Vec2 eval_in_cell(const Eigen::VectorXd& coeffs, std::size_t cell, double xi, double eta) const
    {
        std::array<double, 256> val{};
        shape_values(xi, eta, val.data(), nullptr);
        const int* dofs = cell_dofs(cell);
        Vec2 v{0.0, 0.0};
        for (std::size_t k = 0; k < local_dim(); ++k) {
            v[static_cast<std::size_t>(component(k))] += coeffs[dofs[k]] * val[k];
        }
        return v;
    }

    [[nodiscard]] double eval_div_in_cell(const Eigen::VectorXd& coeffs, std::size_t cell, double xi, double eta) const
    {
        std::array<double, 256> val{}, div{};
        shape_values(xi, eta, val.data(), div.data());
        const int* dofs = cell_dofs(cell);
        double d = 0.0;
        for (std::size_t k = 0; k < local_dim(); ++k) {
            d += coeffs[dofs[k]] * div[k];
        }
        return d;
    }

private:
    Mesh mesh_;
    int p_;
    LagrangeBasis1D normal_;
    LagrangeBasis1D tangential_;
    std::size_t global_dim_ = 0;
    std::vector<int> dofs_;
};

inline ScalarSpace build_scalar_space(const Mesh& mesh, int p) { return ScalarSpace(mesh, p); }
inline VectorSpace build_vector_space(const Mesh& mesh, int p) { return VectorSpace(mesh, p); }

namespace detail {

struct Located {
    std::size_t cell;
    double xi;
    double eta;
};

inline Located locate(const Mesh& mesh, Point2 p)
{
    const auto c = mesh.cell_containing(p);
    const auto r = mesh.to_reference(c, p);
    return {mesh.cell_id(c), r.x, r.y};
}

} // namespace detail

inline double eval_scalar(const ScalarSpace& space, const Eigen::VectorXd& coeffs, Point2 p)
{
    detail::check_length(coeffs.size(), space.global_dim(), "eval_scalar");
    const auto loc = detail::locate(space.mesh(), p);
    return space.eval_in_cell(coeffs, loc.cell, loc.xi, loc.eta);
}

inline Vec2 eval_scalar_grad(const ScalarSpace& space, const Eigen::VectorXd& coeffs, Point2 p)
{
    detail::check_length(coeffs.size(), space.global_dim(), "eval_scalar_grad");
    const auto loc = detail::locate(space.mesh(), p);
    return space.eval_grad_in_cell(coeffs, loc.cell, loc.xi, loc.eta);
}

inline Vec2 eval_vector(const VectorSpace& space, const Eigen::VectorXd& coeffs, Point2 p)
{
    detail::check_length(coeffs.size(), space.global_dim(), "eval_vector");
    const auto loc = detail::locate(space.mesh(), p);
    return space.eval_in_cell(coeffs, loc.cell, loc.xi, loc.eta);
}

inline double eval_div(const VectorSpace& space, const Eigen::VectorXd& coeffs, Point2 p)
{
    detail::check_length(coeffs.size(), space.global_dim(), "eval_div");
    const auto loc = detail::locate(space.mesh(), p);
    return space.eval_div_in_cell(coeffs, loc.cell, loc.xi, loc.eta);
}

/// Lagrange interpolation at the global nodes.
inline Eigen::VectorXd interpolate_scalar(const ScalarSpace& space, const ScalarFunction& f)
{
    Eigen::VectorXd c(static_cast<Eigen::Index>(space.global_dim()));
    for (std::size_t i = 0; i < space.global_dim(); ++i) {
        c[static_cast<Eigen::Index>(i)] = f(space.node_point(i));
    }
    return c;
}

/**
 * Canonical Raviart-Thomas interpolant: matches the normal moments against
 * P_k on every edge and the interior moments against Q_{k-1,k} x Q_{k,k-1}.
 * Edge moments depend only on the edge trace, so neighbouring cells agree on
 * the shared coefficients.
 */
inline Eigen::VectorXd project_vector(const VectorSpace& space, const VectorFunction& f)
{
    const int k = space.rt_index();
    const std::size_t nloc = space.local_dim();
    const auto rule = gauss_legendre_1d(k + 6);
    const std::size_t nq = rule.size();
    const Mesh& mesh = space.mesh();
    const double h = mesh.h();

    // Functional i applied to a vector field given by a sampler in reference coordinates.
    auto functionals = [&](auto&& sample) {
        Eigen::VectorXd out(static_cast<Eigen::Index>(nloc));
        Eigen::Index row = 0;
        // edges: left (xi=0) / right (xi=1) on x-comp, bottom / top on y-comp
        for (int side = 0; side < 2; ++side) {
            for (int beta = 0; beta <= k; ++beta) {
                double s = 0.0;
                for (std::size_t q = 0; q < nq; ++q) {
                    s += rule.weights[q] * sample(static_cast<double>(side), rule.nodes[q])[0] *
                         shifted_legendre(beta, rule.nodes[q]);
                }
                out[row++] = s;
            }
        }
        for (int side = 0; side < 2; ++side) {
            for (int alpha = 0; alpha <= k; ++alpha) {
                double s = 0.0;
                for (std::size_t q = 0; q < nq; ++q) {
                    s += rule.weights[q] * sample(rule.nodes[q], static_cast<double>(side))[1] *
                         shifted_legendre(alpha, rule.nodes[q]);
                }
                out[row++] = s;
            }
        }
        // interiors
        for (int comp = 0; comp < 2; ++comp) {
            const int ax = comp == 0 ? k - 1 : k;
            const int ay = comp == 0 ? k : k - 1;
            for (int beta = 0; beta <= ay; ++beta) {
                for (int alpha = 0; alpha <= ax; ++alpha) {
                    double s = 0.0;
                    for (std::size_t qy = 0; qy < nq; ++qy) {
                        for (std::size_t qx = 0; qx < nq; ++qx) {
                            const double xi = rule.nodes[qx];
                            const double eta = rule.nodes[qy];
                            s += rule.weights[qx] * rule.weights[qy] * sample(xi, eta)[static_cast<std::size_t>(comp)] *
                                 shifted_legendre(alpha, xi) * shifted_legendre(beta, eta);
                        }
                    }
                    out[row++] = s;
                }
            }
        }
        return out;
    };

    // Dof-functional matrix of the local basis (identical on every cell).
    Eigen::MatrixXd dmat(static_cast<Eigen::Index>(nloc), static_cast<Eigen::Index>(nloc));
    std::vector<double> val(nloc);
    for (std::size_t j = 0; j < nloc; ++j) {
        const int comp = space.component(j);
        auto sample = [&](double xi, double eta) {
            space.shape_values(xi, eta, val.data(), nullptr);
            Vec2 v{0.0, 0.0};
            v[static_cast<std::size_t>(comp)] = val[j];
            return v;
        };
        dmat.col(static_cast<Eigen::Index>(j)) = functionals(sample);
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(dmat);

    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.global_dim()));
    for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
        const auto origin = mesh.cell_origin(mesh.cell_index(c));
        auto sample = [&](double xi, double eta) { return f({origin.x + xi * h, origin.y + eta * h}); };
        const Eigen::VectorXd local = lu.solve(functionals(sample));
        const int* dofs = space.cell_dofs(c);
        for (std::size_t j = 0; j < nloc; ++j) {
            coeffs[dofs[j]] = local[static_cast<Eigen::Index>(j)];
        }
    }
    return coeffs;
}

} // namespace evohom
