#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include "evohom/assembly.hpp"
#include "evohom/coefficients.hpp"
#include "evohom/fe_spaces.hpp"
#include "evohom/lagrange.hpp"
#include "evohom/linear_solver.hpp"
#include "evohom/quadrature.hpp"

namespace evohom {

/// Lagrange basis in time on the weighted Radau nodes of a slab [0, tau].
class SlabBasis {
public:
    SlabBasis(int q, double rho, double tau) : q_(q), rho_(rho), tau_(tau), rule_(weighted_gauss_radau(q, rho, tau))
    {
        lagrange_ = LagrangeBasis1D(rule_.nodes);
        const std::size_t n = size();
        left_.resize(n);
        deriv_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            left_[i] = lagrange_.value(i, 0.0);
            for (std::size_t k = 0; k < n; ++k) {
                deriv_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
                    lagrange_.derivative(i, rule_.nodes[k]);
            }
        }
    }

    [[nodiscard]] int degree() const noexcept { return q_; }
    [[nodiscard]] double rho() const noexcept { return rho_; }
    [[nodiscard]] double tau() const noexcept { return tau_; }
    [[nodiscard]] std::size_t size() const noexcept { return rule_.nodes.size(); }
    [[nodiscard]] const std::vector<double>& nodes() const noexcept { return rule_.nodes; }
    [[nodiscard]] const std::vector<double>& weights() const noexcept { return rule_.weights; }
    [[nodiscard]] const QuadratureRule& rule() const noexcept { return rule_; }

    /// l_i(0+)
    [[nodiscard]] double left(std::size_t i) const { return left_.at(i); }
    /// l_i'(s_k)
    [[nodiscard]] double derivative_at_node(std::size_t k, std::size_t i) const
    {
        return deriv_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
    }
    /// l_i(s) for local time s in [0, tau].
    [[nodiscard]] double value(std::size_t i, double s) const { return lagrange_.value(i, s); }

private:
    int q_;
    double rho_;
    double tau_;
    QuadratureRule rule_;
    LagrangeBasis1D lagrange_;
    std::vector<double> left_;
    Eigen::MatrixXd deriv_;
};

struct TimeMatrices {
    Eigen::MatrixXd K;  ///< K(j,i) = Q(l_i' l_j) + l_i(0) l_j(0)
    Eigen::MatrixXd Mt; ///< Mt(j,i) = Q(l_i l_j)
    Eigen::VectorXd J;  ///< J(j) = l_j(0)
};

inline TimeMatrices time_matrices(const SlabBasis& b)
{
    const auto n = static_cast<Eigen::Index>(b.size());
    TimeMatrices t{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
    for (Eigen::Index j = 0; j < n; ++j) {
        t.J[j] = b.left(static_cast<std::size_t>(j));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double k = 0.0;
            double m = 0.0;
            for (Eigen::Index r = 0; r < n; ++r) {
                const double w = b.weights()[static_cast<std::size_t>(r)];
                const double lj = r == j ? 1.0 : 0.0;
                const double li = r == i ? 1.0 : 0.0;
                k += w * b.derivative_at_node(static_cast<std::size_t>(r), static_cast<std::size_t>(i)) * lj;
                m += w * li * lj;
            }
            t.K(j, i) = k + t.J[i] * t.J[j];
            t.Mt(j, i) = m;
        }
    }
    return t;
}

namespace detail {

struct Block {
    const SparseOperator* m;
    Eigen::Index row;
    Eigen::Index col;
    double scale;
};

inline SparseOperator compose(Eigen::Index rows, Eigen::Index cols, const std::vector<Block>& blocks)
{
    std::vector<Eigen::Triplet<double>> trip;
    std::size_t nnz = 0;
    for (const auto& b : blocks) {
        nnz += static_cast<std::size_t>(b.m->nonZeros());
    }
    trip.reserve(nnz);
    for (const auto& b : blocks) {
        if (b.scale == 0.0) {
            continue;
        }
        for (Eigen::Index k = 0; k < b.m->outerSize(); ++k) {
            for (SparseOperator::InnerIterator it(*b.m, k); it; ++it) {
                trip.emplace_back(b.row + it.row(), b.col + it.col(), b.scale * it.value());
            }
        }
    }
    SparseOperator out(rows, cols);
    out.setFromTriplets(trip.begin(), trip.end());
    out.makeCompressed();
    return out;
}

} // namespace detail

/// blockdiag(Mu0, Mv)
inline SparseOperator operator_M0(const BlockSystem& b)
{
    const Eigen::Index d = b.dim_u() + b.dim_v();
    return detail::compose(d, d, {{&b.Mu0, 0, 0, 1.0}, {&b.Mv, b.dim_u(), b.dim_u(), 1.0}});
}

/// [[Mu1, Bdiv], [Bgrad, 0]] = M1 + A
inline SparseOperator operator_M1_plus_A(const BlockSystem& b)
{
    const Eigen::Index du = b.dim_u();
    const Eigen::Index d = du + b.dim_v();
    return detail::compose(d, d, {{&b.Mu1, 0, 0, 1.0}, {&b.Bdiv, 0, du, 1.0}, {&b.Bgrad, du, 0, 1.0}});
}

/// blockdiag(Mu, Mv): the unweighted inner product of H.
inline SparseOperator operator_H(const BlockSystem& b)
{
    const Eigen::Index d = b.dim_u() + b.dim_v();
    return detail::compose(d, d, {{&b.Mu, 0, 0, 1.0}, {&b.Mv, b.dim_u(), b.dim_u(), 1.0}});
}

inline Eigen::VectorXd stack(const FieldPair& f)
{
    Eigen::VectorXd x(f.u.size() + f.v.size());
    x << f.u, f.v;
    return x;
}

inline FieldPair unstack(const Eigen::VectorXd& x, Eigen::Index du)
{
    return {x.head(du), x.tail(x.size() - du)};
}

/// S = K (x) M0 + Mt (x) (M1 + A), unknowns ordered node by node.
inline SparseOperator build_slab_system(const BlockSystem& blocks, const SlabBasis& basis)
{
    const auto t = time_matrices(basis);
    const SparseOperator m0 = operator_M0(blocks);
    const SparseOperator l = operator_M1_plus_A(blocks);
    const Eigen::Index d = m0.rows();
    const auto n = static_cast<Eigen::Index>(basis.size());
    std::vector<detail::Block> parts;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            parts.push_back({&m0, j * d, i * d, t.K(j, i)});
            parts.push_back({&l, j * d, i * d, t.Mt(j, i)});
        }
    }
    return detail::compose(n * d, n * d, parts);
}

enum class SlabStrategy {
    Diagonalised, ///< one (complex) spatial solve per time eigenvalue
    Monolithic,   ///< a single factorization of the full slab matrix
};

/**
 * Solves S U = R for one slab, R_j = w_j F_j + l_j(0) M0 U_prev. The spatial
 * factorizations are computed once and reused for every slab.
 */
class SlabSolver {
public:
    SlabSolver(const BlockSystem& blocks, const SlabBasis& basis, SlabStrategy strategy = SlabStrategy::Diagonalised,
               DirectSolverOptions solver_options = {})
        : basis_(basis), strategy_(strategy), du_(blocks.dim_u()), dim_(blocks.dim_u() + blocks.dim_v())
    {
        m0_ = operator_M0(blocks);
        const auto t = time_matrices(basis_);
        j_ = t.J;
        if (strategy_ == SlabStrategy::Monolithic) {
            monolithic_ = std::make_unique<SparseDirectSolver<double>>(build_slab_system(blocks, basis_),
                                                                       "slab system", solver_options);
            return;
        }
        const Eigen::Index n = t.K.rows();
        Eigen::MatrixXd kt = t.K;
        for (Eigen::Index j = 0; j < n; ++j) {
            kt.row(j) /= basis_.weights()[static_cast<std::size_t>(j)];
        }
        const Eigen::EigenSolver<Eigen::MatrixXd> eig(kt);
        if (eig.info() != Eigen::Success) {
            throw SolveError("slab solver: eigen-decomposition of the time matrix failed");
        }
        lambda_ = eig.eigenvalues();
        v_ = eig.eigenvectors();
        kind_.assign(static_cast<std::size_t>(n), Kind::Real);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto li = lambda_[i];
            if (std::abs(li.imag()) <= 1e-13 * std::abs(li)) {
                lambda_[i] = li.real();
                v_.col(i) = v_.col(i).real().cast<std::complex<double>>();
                continue;
            }
            if (i + 1 >= n || std::abs(lambda_[i + 1] - std::conj(li)) > 1e-10 * std::abs(li)) {
                throw SolveError("slab solver: unpaired complex time eigenvalue");
            }
            kind_[static_cast<std::size_t>(i)] = Kind::Complex;
            kind_[static_cast<std::size_t>(i + 1)] = Kind::Conjugate;
            lambda_[i + 1] = std::conj(li);
            v_.col(i + 1) = v_.col(i).conjugate();
            ++i;
        }
        const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v_);
        const auto& sv = svd.singularValues();
        if (!(sv[sv.size() - 1] > 1e-10 * sv[0])) {
            throw SolveError("slab solver: time matrix is not stably diagonalisable; use the monolithic strategy");
        }
        vinv_ = v_.inverse();

        const SparseOperator l = operator_M1_plus_A(blocks);
        real_.resize(static_cast<std::size_t>(n));
        complex_.resize(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            const std::string label = "slab system (time mode " + std::to_string(i) + ")";
            if (kind_[k] == Kind::Real) {
                const SparseOperator a = lambda_[i].real() * m0_ + l;
                real_[k] = std::make_unique<SparseDirectSolver<double>>(a, label, solver_options);
            } else if (kind_[k] == Kind::Complex) {
                const Eigen::SparseMatrix<std::complex<double>> a =
                    m0_.cast<std::complex<double>>() * lambda_[i] + l.cast<std::complex<double>>();
                complex_[k] = std::make_unique<SparseDirectSolver<std::complex<double>>>(a, label, solver_options);
            }
        }
    }

    [[nodiscard]] const SlabBasis& basis() const noexcept { return basis_; }
    [[nodiscard]] SlabStrategy strategy() const noexcept { return strategy_; }
    [[nodiscard]] const Eigen::VectorXcd& time_eigenvalues() const noexcept { return lambda_; }

    /// loads[j] is the assembled load (F(t_j), Phi) at the j-th Radau node.
    [[nodiscard]] std::vector<FieldPair> solve(const FieldPair& prev_trace, const std::vector<FieldPair>& loads) const
    {
        const std::size_t n = basis_.size();
        if (loads.size() != n) {
            throw std::invalid_argument("slab solve: expected " + std::to_string(n) + " load samples");
        }
        const Eigen::VectorXd prev = stack(prev_trace);
        if (prev.size() != dim_) {
            throw std::invalid_argument("slab solve: previous trace has wrong dimension");
        }
        const Eigen::VectorXd m0prev = m0_ * prev;
        // R_j / w_j
        std::vector<Eigen::VectorXd> r(n);
        for (std::size_t j = 0; j < n; ++j) {
            const Eigen::VectorXd f = stack(loads[j]);
            if (f.size() != dim_) {
                throw std::invalid_argument("slab solve: load sample has wrong dimension");
            }
            const double w = basis_.weights()[j];
            r[j] = (w * f + j_[static_cast<Eigen::Index>(j)] * m0prev) / w;
        }
        std::vector<FieldPair> out(n);
        if (strategy_ == SlabStrategy::Monolithic) {
            Eigen::VectorXd rhs(static_cast<Eigen::Index>(n) * dim_);
            for (std::size_t j = 0; j < n; ++j) {
                rhs.segment(static_cast<Eigen::Index>(j) * dim_, dim_) = basis_.weights()[j] * r[j];
            }
            const Eigen::VectorXd x = monolithic_->solve(rhs);
            for (std::size_t j = 0; j < n; ++j) {
                out[j] = unstack(x.segment(static_cast<Eigen::Index>(j) * dim_, dim_), du_);
            }
            return out;
        }
        std::vector<Eigen::VectorXcd> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (kind_[i] == Kind::Conjugate) {
                y[i] = y[i - 1].conjugate();
                continue;
            }
            Eigen::VectorXcd rt = Eigen::VectorXcd::Zero(dim_);
            for (std::size_t j = 0; j < n; ++j) {
                rt += vinv_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * r[j];
            }
            if (kind_[i] == Kind::Real) {
                y[i] = real_[i]->solve(rt.real()).cast<std::complex<double>>();
            } else {
                y[i] = complex_[i]->solve(rt);
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            Eigen::VectorXd x = Eigen::VectorXd::Zero(dim_);
            for (std::size_t i = 0; i < n; ++i) {
                x += (v_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) * y[i]).real();
            }
            out[j] = unstack(x, du_);
        }
        return out;
    }

private:
    enum class Kind { Real, Complex, Conjugate };

    SlabBasis basis_;
    SlabStrategy strategy_;
    Eigen::Index du_;
    Eigen::Index dim_;
    SparseOperator m0_;
    Eigen::VectorXd j_;
    Eigen::VectorXcd lambda_;
    Eigen::MatrixXcd v_;
    Eigen::MatrixXcd vinv_;
    std::vector<Kind> kind_;
    std::vector<std::unique_ptr<SparseDirectSolver<double>>> real_;
    std::vector<std::unique_ptr<SparseDirectSolver<std::complex<double>>>> complex_;
    std::unique_ptr<SparseDirectSolver<double>> monolithic_;
};

inline std::vector<FieldPair> solve_slab(const SlabSolver& solver, const FieldPair& prev_trace,
                                         const std::vector<FieldPair>& loads)
{
    return solver.solve(prev_trace, loads);
}

struct Discretisation {
    int n = 4;          ///< cells per axis
    int p = 2;          ///< spatial degree
    int q = 1;          ///< temporal degree
    double tau = 0.125; ///< slab length
};

/// Number of slabs T / tau; throws unless it is an integer.
inline int slab_count(double T, double tau)
{
    if (!(tau > 0.0) || !(T > 0.0)) {
        throw std::invalid_argument("slab_count: T and tau must be positive");
    }
    const double r = T / tau;
    const double m = std::round(r);
    if (m < 1.0 || std::abs(r - m) > 1e-9 * r) {
        throw std::invalid_argument("slab_count: T/tau = " + std::to_string(r) + " is not an integer");
    }
    return static_cast<int>(m);
}

/// Nodal values of a piecewise polynomial in time, slab by slab.
class DiscreteSolution {
public:
    DiscreteSolution(Discretisation disc, SlabBasis basis, int slabs, Eigen::Index du, Eigen::Index dv)
        : disc_(disc), basis_(std::move(basis)), slabs_(slabs), du_(du), dv_(dv),
          final_{Eigen::VectorXd::Zero(du), Eigen::VectorXd::Zero(dv)}
    {
    }

    [[nodiscard]] const Discretisation& discretisation() const noexcept { return disc_; }
    [[nodiscard]] const SlabBasis& basis() const noexcept { return basis_; }
    [[nodiscard]] int slab_count() const noexcept { return slabs_; }
    [[nodiscard]] double tau() const noexcept { return basis_.tau(); }
    [[nodiscard]] double slab_start(int m) const noexcept { return m * basis_.tau(); }
    [[nodiscard]] Eigen::Index dim_u() const noexcept { return du_; }
    [[nodiscard]] Eigen::Index dim_v() const noexcept { return dv_; }
    [[nodiscard]] bool stores_slabs() const noexcept { return static_cast<int>(nodal_.size()) == slabs_; }
    [[nodiscard]] const FieldPair& final_trace() const noexcept { return final_; }

    [[nodiscard]] const std::vector<FieldPair>& slab(int m) const
    {
        check(m);
        return nodal_[static_cast<std::size_t>(m)];
    }

    [[nodiscard]] FieldPair left_trace(int m) const { return value(m, 0.0); }

    [[nodiscard]] FieldPair right_trace(int m) const { return slab(m).back(); }

    /// Value at local time s in [0, tau] of slab m (s = 0 gives the right-sided limit).
    [[nodiscard]] FieldPair value(int m, double s) const { return combine(slab(m), basis_, s); }

    static FieldPair combine(const std::vector<FieldPair>& nodal, const SlabBasis& basis, double s)
    {
        FieldPair r{Eigen::VectorXd::Zero(nodal.front().u.size()), Eigen::VectorXd::Zero(nodal.front().v.size())};
        for (std::size_t i = 0; i < nodal.size(); ++i) {
            const double l = basis.value(i, s);
            r.u += l * nodal[i].u;
            r.v += l * nodal[i].v;
        }
        return r;
    }

    void append(std::vector<FieldPair> nodal, bool keep)
    {
        final_ = nodal.back();
        ++appended_;
        if (keep) {
            nodal_.push_back(std::move(nodal));
        }
    }

private:
    void check(int m) const
    {
        if (m < 0 || m >= slabs_) {
            throw std::out_of_range("slab index " + std::to_string(m) + " out of range [0, " + std::to_string(slabs_) +
                                    ")");
        }
        if (static_cast<std::size_t>(m) >= nodal_.size()) {
            throw std::logic_error("slab " + std::to_string(m) + " was not stored");
        }
    }

    Discretisation disc_;
    SlabBasis basis_;
    int slabs_;
    Eigen::Index du_;
    Eigen::Index dv_;
    std::vector<std::vector<FieldPair>> nodal_;
    FieldPair final_;
    int appended_ = 0;
};

inline FieldPair left_trace(const DiscreteSolution& s, int m) { return s.left_trace(m); }
inline FieldPair right_trace(const DiscreteSolution& s, int m) { return s.right_trace(m); }

/// Assembled load at absolute time t for slab m, node i (a left limit at the slab's right end).
using NodeLoadFunction = std::function<FieldPair(int m, std::size_t i, double t)>;
/// Called after each slab with its nodal values.
using SlabVisitor = std::function<void(int m, const std::vector<FieldPair>& nodal)>;

struct RunOptions {
    SlabStrategy strategy = SlabStrategy::Diagonalised;
    DirectSolverOptions solver;
    bool keep_slabs = true;
    std::optional<FieldPair> x0;
    NodeLoadFunction loads;
    SlabVisitor visitor;
};

/// Discrete spaces and operators of one problem at one resolution.
struct SpatialProblem {
    Mesh mesh;
    ScalarSpace su;
    VectorSpace sv;
    BlockSystem blocks;

    SpatialProblem(const ProblemData& problem, int n, int p)
        : mesh(n), su(mesh, p), sv(mesh, p), blocks(assemble_blocks(su, sv, problem.s0, problem.s1))
    {
    }
};

/// Load (F(t), Phi) assembled from the problem's source.
inline FieldPair assemble_source(const SpatialProblem& sp, const SpaceTimeSource& src, double t)
{
    FieldPair f{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sp.su.global_dim())),
                Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sp.sv.global_dim()))};
    if (src.f_u) {
        f.u = assemble_load(sp.su, [&](Point2 x) { return src.f_u(t, x); });
    }
    if (src.f_v) {
        f.v = assemble_load_v(sp.sv, [&](Point2 x) { return src.f_v(t, x); });
    }
    return f;
}

/// Solves all M = T / tau slabs sequentially from x0 (zero by default).
inline DiscreteSolution run(const ProblemData& problem, const SpatialProblem& sp, const Discretisation& disc,
                            const RunOptions& opt = {})
{
    if (sp.mesh.cells_per_dim() != disc.n || sp.su.degree() != disc.p) {
        throw std::invalid_argument("run: spatial problem does not match the discretisation");
    }
    const int slabs = slab_count(problem.T, disc.tau);
    SlabBasis basis(disc.q, problem.rho, disc.tau);
    const SlabSolver solver(sp.blocks, basis, opt.strategy, opt.solver);
    const Eigen::Index du = sp.blocks.dim_u();
    const Eigen::Index dv = sp.blocks.dim_v();
    DiscreteSolution sol(disc, basis, slabs, du, dv);

    FieldPair prev{Eigen::VectorXd::Zero(du), Eigen::VectorXd::Zero(dv)};
    if (opt.x0) {
        if (opt.x0->u.size() != du || opt.x0->v.size() != dv) {
            throw std::invalid_argument("run: initial value has wrong dimension");
        }
        prev = *opt.x0;
    }
    std::vector<FieldPair> loads(basis.size());
    for (int m = 0; m < slabs; ++m) {
        const double t0 = m * disc.tau;
        for (std::size_t i = 0; i < basis.size(); ++i) {
            double t = t0 + basis.nodes()[i];
            if (i + 1 == basis.size()) {
                // the last node closes (t0, t0 + tau]: take the left limit there
                t = std::nextafter(t0 + disc.tau, t0);
            }
            loads[i] = opt.loads ? opt.loads(m, i, t) : assemble_source(sp, problem.source, t);
        }
        std::vector<FieldPair> nodal;
        try {
            nodal = solver.solve(prev, loads);
        } catch (const SolveError& e) {
            throw SolveError("slab " + std::to_string(m) + ": " + e.what());
        }
        prev = nodal.back();
        if (opt.visitor) {
            opt.visitor(m, nodal);
        }
        sol.append(std::move(nodal), opt.keep_slabs);
    }
    return sol;
}

inline DiscreteSolution run(const ProblemData& problem, const Discretisation& disc, const RunOptions& opt = {})
{
    const SpatialProblem sp(problem, disc.n, disc.p);
    return run(problem, sp, disc, opt);
}

} // namespace evohom
