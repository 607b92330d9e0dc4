#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "evohom/slab_solver.hpp"

namespace evohom {

/// A point in time given as slab index and local time s in [0, tau]; s = 0 is the right-sided limit.
struct TimeSample {
    int slab = 0;
    double s = 0.0;
};

using DifferenceSampler = std::function<FieldPair(const TimeSample&)>;

/// Left trace and Radau nodes of every slab, plus `extra` evenly spaced interior points per slab.
inline std::vector<TimeSample> sup_samples(const SlabBasis& basis, int slabs, int extra = 0)
{
    if (extra < 0) {
        throw std::invalid_argument("sup_samples: extra must be nonnegative");
    }
    std::vector<TimeSample> out;
    for (int m = 0; m < slabs; ++m) {
        std::vector<double> s{0.0};
        s.insert(s.end(), basis.nodes().begin(), basis.nodes().end());
        for (int k = 1; k <= extra; ++k) {
            s.push_back(basis.tau() * k / (extra + 1));
        }
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        for (double x : s) {
            out.push_back({m, x});
        }
    }
    return out;
}

inline double quadratic_form(const SparseOperator& M, const FieldPair& a)
{
    const Eigen::VectorXd x = stack(a);
    if (x.size() != M.rows()) {
        throw std::invalid_argument("quadratic_form: dimension mismatch");
    }
    return x.dot(M * x);
}

/// sqrt of max over the samples of <M0 a, a>.
inline double e_sup(const DifferenceSampler& a, const SparseOperator& M0, const std::vector<TimeSample>& samples)
{
    if (samples.empty()) {
        throw std::invalid_argument("e_sup: empty sample set");
    }
    double sup = 0.0;
    for (const auto& t : samples) {
        sup = std::max(sup, quadratic_form(M0, a(t)));
    }
    return std::sqrt(sup);
}

/// Weight e^{2 rho (T - t_{m-1})} of slab m in E_Q, T = slabs * tau.
inline double slab_weight(const SlabBasis& basis, int slabs, int m)
{
    return std::exp(2.0 * basis.rho() * basis.tau() * (slabs - m));
}

/// sqrt of sum_m e^{2 rho (T - t_{m-1})} sum_i w_i <H a, a>(t_{m,i}).
inline double e_q(const DifferenceSampler& a, const SparseOperator& H, const SlabBasis& basis, int slabs)
{
    double sum = 0.0;
    for (int m = 0; m < slabs; ++m) {
        double slab = 0.0;
        for (std::size_t i = 0; i < basis.size(); ++i) {
            slab += basis.weights()[i] * quadratic_form(H, a({m, basis.nodes()[i]}));
        }
        sum += slab_weight(basis, slabs, m) * slab;
    }
    return std::sqrt(sum);
}

inline DifferenceSampler sampler(const DiscreteSolution& sol)
{
    return [&sol](const TimeSample& t) { return sol.value(t.slab, t.s); };
}

inline double e_sup(const DiscreteSolution& sol, const BlockSystem& blocks, int extra = 0)
{
    return e_sup(sampler(sol), operator_M0(blocks), sup_samples(sol.basis(), sol.slab_count(), extra));
}

inline double e_q(const DiscreteSolution& sol, const BlockSystem& blocks)
{
    return e_q(sampler(sol), operator_H(blocks), sol.basis(), sol.slab_count());
}

/// ln(e_coarse / e_fine) / ln(refinement).
inline double eoc(double e_coarse, double e_fine, double refinement = 2.0)
{
    if (!(e_coarse > 0.0) || !(e_fine > 0.0)) {
        throw std::invalid_argument("eoc: errors must be positive");
    }
    if (!(refinement > 1.0)) {
        throw std::invalid_argument("eoc: refinement factor must exceed 1");
    }
    return std::log(e_coarse / e_fine) / std::log(refinement);
}

/// A space-time field given in closed form.
struct ExactField {
    std::function<double(double, Point2)> u;
    std::function<Vec2(double, Point2)> v;
};

namespace detail {

/// (H-norm squared, M0-norm squared) of the discrete state minus the exact field at time t.
inline std::pair<double, double> exact_difference(const SpatialProblem& sp, const FieldPair& a, const ExactField& ex,
                                                  const CoefficientField& s0, double t)
{
    const auto rule = gauss_legendre_1d(sp.su.degree() + 3);
    const Mesh& mesh = sp.mesh;
    const double area = mesh.h() * mesh.h();
    double hs = 0.0, ms = 0.0;
    for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
        const CellIndex ci = mesh.cell_index(c);
        const Point2 o = mesh.cell_origin(ci);
        const double w0 = s0.on_cell(mesh, c);
        for (std::size_t b = 0; b < rule.size(); ++b) {
            for (std::size_t k = 0; k < rule.size(); ++k) {
                const Point2 x{o.x + rule.nodes[k] * mesh.h(), o.y + rule.nodes[b] * mesh.h()};
                const double w = area * rule.weights[k] * rule.weights[b];
                const double du = sp.su.eval_in_cell(a.u, c, rule.nodes[k], rule.nodes[b]) - ex.u(t, x);
                const Vec2 vh = sp.sv.eval_in_cell(a.v, c, rule.nodes[k], rule.nodes[b]);
                const Vec2 ve = ex.v(t, x);
                const double dv = (vh[0] - ve[0]) * (vh[0] - ve[0]) + (vh[1] - ve[1]) * (vh[1] - ve[1]);
                hs += w * (du * du + dv);
                ms += w * (w0 * du * du + dv);
            }
        }
    }
    return {hs, ms};
}

} // namespace detail

/// E_Q of (exact - discrete) with spatial Gauss quadrature at the Radau nodes.
inline double e_q_exact(const DiscreteSolution& sol, const SpatialProblem& sp, const ExactField& ex)
{
    const SlabBasis& b = sol.basis();
    const auto one = CoefficientField::constant(1.0);
    double sum = 0.0;
    for (int m = 0; m < sol.slab_count(); ++m) {
        double slab = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double t = sol.slab_start(m) + b.nodes()[i];
            slab += b.weights()[i] * detail::exact_difference(sp, sol.slab(m)[i], ex, one, t).first;
        }
        sum += slab_weight(b, sol.slab_count(), m) * slab;
    }
    return std::sqrt(sum);
}

/// E_sup of (exact - discrete) over sup_samples, weighted with s0.
inline double e_sup_exact(const DiscreteSolution& sol, const SpatialProblem& sp, const ExactField& ex,
                          const CoefficientField& s0, int extra = 0)
{
    double sup = 0.0;
    for (const auto& t : sup_samples(sol.basis(), sol.slab_count(), extra)) {
        const double time = sol.slab_start(t.slab) + t.s;
        sup = std::max(sup, detail::exact_difference(sp, sol.value(t.slab, t.s), ex, s0, time).second);
    }
    return std::sqrt(sup);
}

struct ErrorReport {
    double e_sup = 0.0;
    double e_q = 0.0;
    int N = 0;
    double h = 0.0;
    double tau = 0.0;
    int p = 0;
    int q = 0;
    double rho = 0.0;
    double T = 0.0;
    std::string target;
};

/**
 * Streams a reference solution slab by slab and accumulates E_sup and E_Q of
 * (reference - coarse) at the coarse run's sample times.
 *
 * Spatial integrals run over the reference cells with a Gauss rule exact for
 * products of both discrete spaces, so they are exact for nested meshes.
 * The M0 weighting uses `weight` in place of the coarse s0.
 */
class ReferenceComparison {
public:
    ReferenceComparison(const DiscreteSolution& coarse, const SpatialProblem& coarse_space, CoefficientField weight,
                        const SpatialProblem& ref_space, const SlabBasis& ref_basis, int ref_slabs,
                        std::string target = "reference")
        : coarse_(coarse), cs_(coarse_space), rs_(ref_space), ref_basis_(ref_basis), ref_slabs_(ref_slabs),
          weight_(std::move(weight)), target_(std::move(target))
    {
        const int nc = cs_.mesh.cells_per_dim();
        const int nr = rs_.mesh.cells_per_dim();
        if (nr % nc != 0) {
            throw std::invalid_argument("compare: reference mesh n=" + std::to_string(nr) +
                                        " does not refine coarse mesh n=" + std::to_string(nc));
        }
        ratio_ = nr / nc;
        const double r = coarse_.tau() / ref_basis_.tau();
        time_ratio_ = static_cast<int>(std::lround(r));
        if (time_ratio_ < 1 || std::abs(r - time_ratio_) > 1e-9 * r) {
            throw std::invalid_argument("compare: reference slab length does not divide the coarse slab length");
        }
        if (ref_slabs_ != coarse_.slab_count() * time_ratio_) {
            throw std::invalid_argument("compare: reference and coarse runs cover different time intervals");
        }
        if (cs_.blocks.dim_u() != coarse_.dim_u() || rs_.blocks.dim_u() == 0) {
            throw std::invalid_argument("compare: coarse solution does not match its spaces");
        }
        build_tables();
        schedule();
    }

    /// Feed reference slab k; usable as a RunOptions visitor.
    void visit(int k, const std::vector<FieldPair>& nodal)
    {
        if (k < 0 || k >= ref_slabs_) {
            throw std::out_of_range("compare: reference slab index out of range");
        }
        for (const auto& job : jobs_[static_cast<std::size_t>(k)]) {
            const FieldPair ref = DiscreteSolution::combine(nodal, ref_basis_, job.s_ref);
            const FieldPair crs = coarse_.value(job.sample.slab, job.sample.s);
            const auto [h, m0] = integrate(ref, crs);
            records_.push_back({job.sample, coarse_.slab_start(job.sample.slab) + job.sample.s, h, m0});
            sup_ = std::max(sup_, m0);
            if (job.weight > 0.0) {
                q_ += job.weight * h;
            }
            ++done_;
        }
    }

    [[nodiscard]] bool complete() const noexcept { return done_ == total_; }

    /// Squared norms of the difference at one sample.
    struct Record {
        TimeSample sample;
        double time;
        double h_norm2;
        double m0_norm2;
    };

    /// Every evaluated sample in visiting order.
    [[nodiscard]] const std::vector<Record>& records() const noexcept { return records_; }

    [[nodiscard]] ErrorReport report() const
    {
        if (!complete()) {
            throw std::logic_error("compare: reference stream incomplete (" + std::to_string(done_) + " of " +
                                   std::to_string(total_) + " samples)");
        }
        ErrorReport r;
        r.e_sup = std::sqrt(sup_);
        r.e_q = std::sqrt(q_);
        r.h = cs_.mesh.h();
        r.tau = coarse_.tau();
        r.p = coarse_.discretisation().p;
        r.q = coarse_.discretisation().q;
        r.rho = coarse_.basis().rho();
        r.T = coarse_.tau() * coarse_.slab_count();
        r.target = target_;
        return r;
    }

private:
    struct Job {
        TimeSample sample;
        double s_ref;
        double weight; // E_Q weight, 0 for sup-only samples
    };

    void schedule()
    {
        jobs_.assign(static_cast<std::size_t>(ref_slabs_), {});
        const SlabBasis& cb = coarse_.basis();
        const double tr = ref_basis_.tau();
        for (int m = 0; m < coarse_.slab_count(); ++m) {
            auto add = [&](double s, double w) {
                int local = s <= 0.0 ? 0 : static_cast<int>(std::ceil(s / tr - 1e-9)) - 1;
                local = std::clamp(local, 0, time_ratio_ - 1);
                const int k = m * time_ratio_ + local;
                jobs_[static_cast<std::size_t>(k)].push_back({{m, s}, s - local * tr, w});
                ++total_;
            };
            add(0.0, 0.0);
            for (std::size_t i = 0; i < cb.size(); ++i) {
                add(cb.nodes()[i], slab_weight(cb, coarse_.slab_count(), m) * cb.weights()[i]);
            }
        }
    }

    void build_tables()
    {
        const int g = std::max(rs_.su.degree(), cs_.su.degree()) + 1;
        rule_ = gauss_legendre_1d(g);
        const std::size_t np = rule_.size() * rule_.size();
        const std::size_t rlu = rs_.su.local_dim(), rlv = rs_.sv.local_dim();
        const std::size_t clu = cs_.su.local_dim(), clv = cs_.sv.local_dim();
        ref_u_.assign(np * rlu, 0.0);
        ref_v_.assign(np * rlv, 0.0);
        const auto offsets = static_cast<std::size_t>(ratio_ * ratio_);
        crs_u_.assign(offsets * np * clu, 0.0);
        crs_v_.assign(offsets * np * clv, 0.0);
        for (std::size_t b = 0; b < rule_.size(); ++b) {
            for (std::size_t a = 0; a < rule_.size(); ++a) {
                const std::size_t pt = a + rule_.size() * b;
                rs_.su.shape_values(rule_.nodes[a], rule_.nodes[b], &ref_u_[pt * rlu]);
                rs_.sv.shape_values(rule_.nodes[a], rule_.nodes[b], &ref_v_[pt * rlv], nullptr);
                for (int oy = 0; oy < ratio_; ++oy) {
                    for (int ox = 0; ox < ratio_; ++ox) {
                        const auto o = static_cast<std::size_t>(ox + ratio_ * oy);
                        const double xi = (ox + rule_.nodes[a]) / ratio_;
                        const double eta = (oy + rule_.nodes[b]) / ratio_;
                        cs_.su.shape_values(xi, eta, &crs_u_[(o * np + pt) * clu]);
                        cs_.sv.shape_values(xi, eta, &crs_v_[(o * np + pt) * clv], nullptr);
                    }
                }
            }
        }
        cell_weight_.resize(rs_.mesh.cell_count());
        for (std::size_t c = 0; c < rs_.mesh.cell_count(); ++c) {
            cell_weight_[c] = weight_(rs_.mesh.cell_centre(rs_.mesh.cell_index(c)));
        }
    }

    /// Returns (H-norm squared, M0-norm squared) of ref - crs.
    [[nodiscard]] std::pair<double, double> integrate(const FieldPair& ref, const FieldPair& crs) const
    {
        const Mesh& rm = rs_.mesh;
        const std::size_t nq = rule_.size();
        const std::size_t np = nq * nq;
        const std::size_t rlu = rs_.su.local_dim(), rlv = rs_.sv.local_dim();
        const std::size_t clu = cs_.su.local_dim(), clv = cs_.sv.local_dim();
        const std::size_t rxv = rs_.sv.x_local_dim(), cxv = cs_.sv.x_local_dim();
        const double area = rm.h() * rm.h();
        double h_sum = 0.0, m_sum = 0.0;
        for (std::size_t c = 0; c < rm.cell_count(); ++c) {
            const CellIndex ci = rm.cell_index(c);
            const CellIndex cc{ci.i / ratio_, ci.j / ratio_};
            const std::size_t ccell = cs_.mesh.cell_id(cc);
            const auto o = static_cast<std::size_t>((ci.i % ratio_) + ratio_ * (ci.j % ratio_));
            const int* rdu = rs_.su.cell_dofs(c);
            const int* rdv = rs_.sv.cell_dofs(c);
            const int* cdu = cs_.su.cell_dofs(ccell);
            const int* cdv = cs_.sv.cell_dofs(ccell);
            double cell_u = 0.0, cell_v = 0.0;
            for (std::size_t pt = 0; pt < np; ++pt) {
                const double w = rule_.weights[pt % nq] * rule_.weights[pt / nq];
                double du = 0.0;
                const double* phi = &ref_u_[pt * rlu];
                for (std::size_t k = 0; k < rlu; ++k) {
                    du += ref.u[rdu[k]] * phi[k];
                }
                phi = &crs_u_[(o * np + pt) * clu];
                for (std::size_t k = 0; k < clu; ++k) {
                    du -= crs.u[cdu[k]] * phi[k];
                }
                double dx = 0.0, dy = 0.0;
                phi = &ref_v_[pt * rlv];
                for (std::size_t k = 0; k < rlv; ++k) {
                    (k < rxv ? dx : dy) += ref.v[rdv[k]] * phi[k];
                }
                phi = &crs_v_[(o * np + pt) * clv];
                for (std::size_t k = 0; k < clv; ++k) {
                    (k < cxv ? dx : dy) -= crs.v[cdv[k]] * phi[k];
                }
                cell_u += w * du * du;
                cell_v += w * (dx * dx + dy * dy);
            }
            h_sum += area * (cell_u + cell_v);
            m_sum += area * (cell_weight_[c] * cell_u + cell_v);
        }
        return {h_sum, m_sum};
    }

    const DiscreteSolution& coarse_;
    const SpatialProblem& cs_;
    const SpatialProblem& rs_;
    SlabBasis ref_basis_;
    int ref_slabs_;
    CoefficientField weight_;
    std::string target_;
    int ratio_ = 1;
    int time_ratio_ = 1;
    QuadratureRule rule_;
    std::vector<double> ref_u_, ref_v_, crs_u_, crs_v_, cell_weight_;
    std::vector<std::vector<Job>> jobs_;
    std::vector<Record> records_;
    std::size_t total_ = 0;
    std::size_t done_ = 0;
    double sup_ = 0.0;
    double q_ = 0.0;
};

/// Compares two stored solutions; the reference must be nested in the coarse run.
inline ErrorReport compare_solutions(const DiscreteSolution& coarse, const SpatialProblem& coarse_space,
                                     const CoefficientField& weight, const DiscreteSolution& reference,
                                     const SpatialProblem& ref_space, std::string target = "reference")
{
    ReferenceComparison cmp(coarse, coarse_space, weight, ref_space, reference.basis(), reference.slab_count(),
                            std::move(target));
    for (int k = 0; k < reference.slab_count(); ++k) {
        cmp.visit(k, reference.slab(k));
    }
    return cmp.report();
}

/// One row of the study table: errors against the rough and the homogenised reference.
struct ErrorRow {
    int N = 0;
    ErrorReport rough;
    ErrorReport hom;
};

class ErrorTable {
public:
    static constexpr const char* header = "N,E_sup_rough,eoc,E_Q_rough,eoc,E_sup_hom,eoc,E_Q_hom,eoc";

    void add(ErrorRow row)
    {
        if (!rows_.empty() && row.N <= rows_.back().N) {
            throw std::invalid_argument("ErrorTable: rows must have increasing N");
        }
        rows_.push_back(std::move(row));
    }

    [[nodiscard]] const std::vector<ErrorRow>& rows() const noexcept { return rows_; }

    /// The four error columns of row r in table order.
    [[nodiscard]] std::array<double, 4> errors(std::size_t r) const
    {
        const auto& x = rows_.at(r);
        return {x.rough.e_sup, x.rough.e_q, x.hom.e_sup, x.hom.e_q};
    }

    /// eoc of column c between rows r-1 and r; empty for the first row.
    [[nodiscard]] std::optional<double> eoc_at(std::size_t r, std::size_t c) const
    {
        if (r == 0 || r >= rows_.size()) {
            return std::nullopt;
        }
        return eoc(errors(r - 1)[c], errors(r)[c], static_cast<double>(rows_[r].N) / rows_[r - 1].N);
    }

    [[nodiscard]] std::string to_csv() const
    {
        std::string out = std::string(header) + "\n";
        char buf[64];
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            out += std::to_string(rows_[r].N);
            const auto e = errors(r);
            for (std::size_t c = 0; c < 4; ++c) {
                std::snprintf(buf, sizeof buf, ",%.3e,", e[c]);
                out += buf;
                if (const auto k = eoc_at(r, c)) {
                    std::snprintf(buf, sizeof buf, "%.2f", *k);
                    out += buf;
                }
            }
            out += "\n";
        }
        return out;
    }

private:
    std::vector<ErrorRow> rows_;
};

} // namespace evohom
