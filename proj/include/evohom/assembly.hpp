#pragma once

#include <cstddef>
#include <iomanip>
#include <limits>
#include <ostream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "evohom/coefficients.hpp"
#include "evohom/fe_spaces.hpp"
#include "evohom/quadrature.hpp"

namespace evohom {

using SparseOperator = Eigen::SparseMatrix<double>;

/// Spatial blocks of (d_t M0 + M1 + A) on V_u x V_v.
struct BlockSystem {
    SparseOperator Mu0;   ///< s0-weighted mass on V_u
    SparseOperator Mu1;   ///< s1-weighted mass on V_u
    SparseOperator Mu;    ///< unweighted mass on V_u (norms)
    SparseOperator Mv;    ///< mass on V_v
    SparseOperator Bdiv;  ///< (div psi_j, phi_i), dim_u x dim_v
    SparseOperator Bgrad; ///< (grad phi_j, psi_i), dim_v x dim_u

    [[nodiscard]] Eigen::Index dim_u() const noexcept { return Mu.rows(); }
    [[nodiscard]] Eigen::Index dim_v() const noexcept { return Mv.rows(); }
};

namespace detail {

/// Reference-cell element matrices, scaled to a physical cell of size h.
struct ElementMatrices {
    Eigen::MatrixXd mass_u;  // (phi_a, phi_b)
    Eigen::MatrixXd mass_v;  // (psi_a, psi_b)
    Eigen::MatrixXd div;     // (div psi_j, phi_i): rows u, cols v
    Eigen::MatrixXd grad;    // (grad phi_j, psi_i): rows v, cols u
};

inline ElementMatrices element_matrices(const ScalarSpace& su, const VectorSpace& sv)
{
    const auto rule = gauss_legendre_1d(std::max(su.degree(), sv.degree()) + 1);
    const double h = su.mesh().h();
    const double area = h * h;
    const auto nu = static_cast<Eigen::Index>(su.local_dim());
    const auto nv = static_cast<Eigen::Index>(sv.local_dim());
    ElementMatrices e{Eigen::MatrixXd::Zero(nu, nu), Eigen::MatrixXd::Zero(nv, nv), Eigen::MatrixXd::Zero(nu, nv),
                      Eigen::MatrixXd::Zero(nv, nu)};
    std::vector<double> phi(static_cast<std::size_t>(nu)), gx(static_cast<std::size_t>(nu)),
        gy(static_cast<std::size_t>(nu));
    std::vector<double> psi(static_cast<std::size_t>(nv)), dpsi(static_cast<std::size_t>(nv));
    for (std::size_t qy = 0; qy < rule.size(); ++qy) {
        for (std::size_t qx = 0; qx < rule.size(); ++qx) {
            const double xi = rule.nodes[qx];
            const double eta = rule.nodes[qy];
            const double w = rule.weights[qx] * rule.weights[qy] * area;
            su.shape_values(xi, eta, phi.data());
            su.shape_gradients(xi, eta, gx.data(), gy.data());
            sv.shape_values(xi, eta, psi.data(), dpsi.data());
            for (Eigen::Index a = 0; a < nu; ++a) {
                for (Eigen::Index b = 0; b < nu; ++b) {
                    e.mass_u(a, b) += w * phi[static_cast<std::size_t>(a)] * phi[static_cast<std::size_t>(b)];
                }
            }
            for (Eigen::Index a = 0; a < nv; ++a) {
                const int ca = sv.component(static_cast<std::size_t>(a));
                for (Eigen::Index b = 0; b < nv; ++b) {
                    if (sv.component(static_cast<std::size_t>(b)) == ca) {
                        e.mass_v(a, b) += w * psi[static_cast<std::size_t>(a)] * psi[static_cast<std::size_t>(b)];
                    }
                }
            }
            for (Eigen::Index i = 0; i < nu; ++i) {
                for (Eigen::Index j = 0; j < nv; ++j) {
                    e.div(i, j) += w * dpsi[static_cast<std::size_t>(j)] * phi[static_cast<std::size_t>(i)];
                }
            }
            for (Eigen::Index i = 0; i < nv; ++i) {
                const double* g = sv.component(static_cast<std::size_t>(i)) == 0 ? gx.data() : gy.data();
                for (Eigen::Index j = 0; j < nu; ++j) {
                    e.grad(i, j) += w * psi[static_cast<std::size_t>(i)] * g[j];
                }
            }
        }
    }
    return e;
}

inline SparseOperator scatter(std::size_t rows, std::size_t cols, std::size_t cells, const Eigen::MatrixXd& local,
                              auto&& row_dofs, auto&& col_dofs, auto&& cell_scale)
{
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(cells * static_cast<std::size_t>(local.size()));
    for (std::size_t c = 0; c < cells; ++c) {
        const double s = cell_scale(c);
        if (s == 0.0) {
            continue;
        }
        const int* r = row_dofs(c);
        const int* k = col_dofs(c);
        for (Eigen::Index j = 0; j < local.cols(); ++j) {
            for (Eigen::Index i = 0; i < local.rows(); ++i) {
                if (local(i, j) != 0.0) {
                    trip.emplace_back(r[i], k[j], s * local(i, j));
                }
            }
        }
    }
    SparseOperator m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

} // namespace detail

/// (s phi_j, phi_i) for a cellwise constant coefficient aligned with the FE mesh.
inline SparseOperator assemble_weighted_mass_u(const ScalarSpace& space, const CoefficientField& s)
{
    const auto e = detail::element_matrices(space, VectorSpace(space.mesh(), space.degree()));
    const Mesh& mesh = space.mesh();
    auto dofs = [&](std::size_t c) { return space.cell_dofs(c); };
    return detail::scatter(space.global_dim(), space.global_dim(), mesh.cell_count(), e.mass_u, dofs, dofs,
                           [&](std::size_t c) { return s.on_cell(mesh, c); });
}

inline SparseOperator assemble_mass_v(const VectorSpace& space)
{
    const ScalarSpace su(space.mesh(), space.degree());
    const auto e = detail::element_matrices(su, space);
    auto dofs = [&](std::size_t c) { return space.cell_dofs(c); };
    return detail::scatter(space.global_dim(), space.global_dim(), space.mesh().cell_count(), e.mass_v, dofs, dofs,
                           [](std::size_t) { return 1.0; });
}

/// Entries (div psi_j, phi_i); dim_u x dim_v.
inline SparseOperator assemble_div_block(const VectorSpace& sv, const ScalarSpace& su)
{
    const auto e = detail::element_matrices(su, sv);
    return detail::scatter(
        su.global_dim(), sv.global_dim(), su.mesh().cell_count(), e.div, [&](std::size_t c) { return su.cell_dofs(c); },
        [&](std::size_t c) { return sv.cell_dofs(c); }, [](std::size_t) { return 1.0; });
}

/// Entries (grad phi_j, psi_i); dim_v x dim_u.
inline SparseOperator assemble_grad_block(const ScalarSpace& su, const VectorSpace& sv)
{
    const auto e = detail::element_matrices(su, sv);
    return detail::scatter(
        sv.global_dim(), su.global_dim(), su.mesh().cell_count(), e.grad, [&](std::size_t c) { return sv.cell_dofs(c); },
        [&](std::size_t c) { return su.cell_dofs(c); }, [](std::size_t) { return 1.0; });
}

inline BlockSystem assemble_blocks(const ScalarSpace& su, const VectorSpace& sv, const CoefficientField& s0,
                                   const CoefficientField& s1)
{
    if (su.mesh().cells_per_dim() != sv.mesh().cells_per_dim()) {
        throw std::invalid_argument("assemble_blocks: spaces live on different meshes");
    }
    const auto e = detail::element_matrices(su, sv);
    const Mesh& mesh = su.mesh();
    const std::size_t cells = mesh.cell_count();
    auto udofs = [&](std::size_t c) { return su.cell_dofs(c); };
    auto vdofs = [&](std::size_t c) { return sv.cell_dofs(c); };
    auto one = [](std::size_t) { return 1.0; };
    BlockSystem b;
    b.Mu0 = detail::scatter(su.global_dim(), su.global_dim(), cells, e.mass_u, udofs, udofs,
                            [&](std::size_t c) { return s0.on_cell(mesh, c); });
    b.Mu1 = detail::scatter(su.global_dim(), su.global_dim(), cells, e.mass_u, udofs, udofs,
                            [&](std::size_t c) { return s1.on_cell(mesh, c); });
    b.Mu = detail::scatter(su.global_dim(), su.global_dim(), cells, e.mass_u, udofs, udofs, one);
    b.Mv = detail::scatter(sv.global_dim(), sv.global_dim(), cells, e.mass_v, vdofs, vdofs, one);
    b.Bdiv = detail::scatter(su.global_dim(), sv.global_dim(), cells, e.div, udofs, vdofs, one);
    b.Bgrad = detail::scatter(sv.global_dim(), su.global_dim(), cells, e.grad, vdofs, udofs, one);
    return b;
}

/// (f, phi_i) with a tensor Gauss rule of p+3 points per direction.
inline Eigen::VectorXd assemble_load(const ScalarSpace& space, const ScalarFunction& f)
{
    const auto rule = gauss_legendre_1d(space.degree() + 3);
    const Mesh& mesh = space.mesh();
    const double h = mesh.h();
    const std::size_t nloc = space.local_dim();
    std::vector<double> phi(nloc);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.global_dim()));
    Eigen::VectorXd local(static_cast<Eigen::Index>(nloc));
    for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
        const auto o = mesh.cell_origin(mesh.cell_index(c));
        local.setZero();
        for (std::size_t qy = 0; qy < rule.size(); ++qy) {
            for (std::size_t qx = 0; qx < rule.size(); ++qx) {
                const double fx = f({o.x + rule.nodes[qx] * h, o.y + rule.nodes[qy] * h});
                if (fx == 0.0) {
                    continue;
                }
                const double w = rule.weights[qx] * rule.weights[qy] * h * h * fx;
                space.shape_values(rule.nodes[qx], rule.nodes[qy], phi.data());
                for (std::size_t a = 0; a < nloc; ++a) {
                    local[static_cast<Eigen::Index>(a)] += w * phi[a];
                }
            }
        }
        const int* dofs = space.cell_dofs(c);
        for (std::size_t a = 0; a < nloc; ++a) {
            out[dofs[a]] += local[static_cast<Eigen::Index>(a)];
        }
    }
    return out;
}

/// (g, psi_i) for a vector load.
inline Eigen::VectorXd assemble_load_v(const VectorSpace& space, const VectorFunction& g)
{
    const auto rule = gauss_legendre_1d(space.degree() + 3);
    const Mesh& mesh = space.mesh();
    const double h = mesh.h();
    const std::size_t nloc = space.local_dim();
    std::vector<double> psi(nloc);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.global_dim()));
    for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
        const auto o = mesh.cell_origin(mesh.cell_index(c));
        const int* dofs = space.cell_dofs(c);
        for (std::size_t qy = 0; qy < rule.size(); ++qy) {
            for (std::size_t qx = 0; qx < rule.size(); ++qx) {
                const Vec2 gv = g({o.x + rule.nodes[qx] * h, o.y + rule.nodes[qy] * h});
                const double w = rule.weights[qx] * rule.weights[qy] * h * h;
                space.shape_values(rule.nodes[qx], rule.nodes[qy], psi.data(), nullptr);
                for (std::size_t a = 0; a < nloc; ++a) {
                    out[dofs[a]] += w * gv[static_cast<std::size_t>(space.component(a))] * psi[a];
                }
            }
        }
    }
    return out;
}

/// Coordinate-format text dump: a "rows cols nnz" header, then "row col value" lines.
inline void write_coordinate(std::ostream& os, const SparseOperator& m)
{
    os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
        for (SparseOperator::InnerIterator it(m, k); it; ++it) {
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
        }
    }
}

} // namespace evohom
