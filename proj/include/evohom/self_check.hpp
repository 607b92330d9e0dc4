#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "evohom/error_metrics.hpp"
#include "evohom/gelfand.hpp"
#include "evohom/quadrature.hpp"
#include "evohom/slab_solver.hpp"

namespace evohom {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Weighted Radau rules against the closed-form moments, q <= 3, rho in {0,1,5}, tau = 1/64..1.
inline CheckResult check_quadrature_exactness()
{
    double worst = 0.0, endpoint = 0.0;
    for (int q = 0; q <= 3; ++q) {
        for (double rho : {0.0, 1.0, 5.0}) {
            for (double tau = 1.0 / 64; tau <= 1.0; tau *= 2) {
                const auto rule = weighted_gauss_radau(q, rho, tau);
                const auto mu = exponential_moments(rho, tau, 2 * q);
                for (int k = 0; k <= 2 * q; ++k) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < rule.size(); ++i) {
                        s += rule.weights[i] * std::pow(rule.nodes[i], k);
                    }
                    worst = std::max(worst, std::abs(s - mu[static_cast<std::size_t>(k)]) / mu[static_cast<std::size_t>(k)]);
                }
                endpoint = std::max(endpoint, std::abs(rule.nodes.back() - tau));
            }
        }
    }
    std::ostringstream os;
    os << "max relative moment error " << worst << ", endpoint offset " << endpoint;
    return {"quadrature exactness", worst <= 1e-12 && endpoint <= 1e-14, os.str()};
}

/// B_div + B_grad^T = 0 entrywise.
inline CheckResult check_skew_adjointness()
{
    double worst = 0.0;
    for (auto [n, p] : {std::pair{2, 1}, {2, 2}, {4, 2}, {8, 2}}) {
        const Mesh mesh(n);
        const ScalarSpace su(mesh, p);
        const VectorSpace sv(mesh, p);
        const SparseOperator sum = assemble_div_block(sv, su) + SparseOperator(assemble_grad_block(su, sv).transpose());
        for (Eigen::Index k = 0; k < sum.outerSize(); ++k) {
            for (SparseOperator::InnerIterator it(sum, k); it; ++it) {
                worst = std::max(worst, std::abs(it.value()));
            }
        }
    }
    std::ostringstream os;
    os << "max |B_div + B_grad^T| = " << worst;
    return {"skew-adjointness", worst <= 1e-12, os.str()};
}

/// Round trip and Parseval of the block transform on random data, N in {2,3,4,8}, m = 8.
inline CheckResult check_gelfand_unitarity(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    double round = 0.0, parseval = 0.0;
    for (int N : {2, 3, 4, 8}) {
        auto f = BlockGridFunction::zeros(N, 8);
        for (auto& v : f.values) {
            v = {g(rng), g(rng)};
        }
        const auto F = forward(f);
        const auto back = inverse(F);
        for (std::size_t i = 0; i < f.values.size(); ++i) {
            round = std::max(round, std::abs(back.values[i] - f.values[i]));
        }
        parseval = std::max(parseval, std::abs(F.norm() - f.norm()) / f.norm());
        UnitSquareGrid h{N * 8, f.values};
        parseval = std::max(parseval, std::abs(gelfand(h, N).norm() - h.norm()) / h.norm());
    }
    std::ostringstream os;
    os << "round trip " << round << ", Parseval " << parseval;
    return {"transform unitarity", round <= 1e-12 && parseval <= 1e-12, os.str()};
}

/**
 * Homogenised problem with f = 1 on (0,1), constant in space: u solves
 * u'/2 + u/2 = 1, so u = 2(1 - e^{-t}) and v = 0.
 */
inline CheckResult check_ode_reduction()
{
    ProblemData prob = homogenised_problem(1.0, 1.0);
    prob.source = {[](double t, Point2) { return (t > 0.0 && t < 1.0) ? 1.0 : 0.0; }, {}};
    std::vector<double> err;
    double vmax = 0.0;
    for (int k : {8, 16, 32, 64}) {
        const auto sol = run(prob, {2, 2, 1, 1.0 / k});
        double e = 0.0;
        for (int m = 0; m < sol.slab_count(); ++m) {
            const double t = (m + 1.0) / k;
            const auto& r = sol.right_trace(m);
            e = std::max(e, (r.u.array() - 2.0 * (1.0 - std::exp(-t))).abs().maxCoeff());
            for (const auto& x : sol.slab(m)) {
                vmax = std::max(vmax, x.v.cwiseAbs().maxCoeff());
            }
        }
        err.push_back(e);
    }
    double order = 1e300;
    std::ostringstream os;
    os << "right-trace errors";
    for (double e : err) {
        os << " " << e;
    }
    for (std::size_t i = 1; i < err.size(); ++i) {
        order = std::min(order, eoc(err[i - 1], err[i]));
    }
    os << ", min order " << order << ", max |v| " << vmax;
    return {"ODE reduction", order >= 2.7 && vmax <= 1e-10, os.str()};
}

/**
 * Smooth solution of the homogenised system (s0 = s1 = 1/2):
 * u = t^2 sin(2 pi x) sin(2 pi y), v = t^2 (cos(2 pi x) sin(2 pi y), sin(2 pi x) cos(2 pi y)).
 */
struct ManufacturedCase {
    ProblemData problem;
    ExactField exact;
};

inline ManufacturedCase manufactured_case(double T = 1.0, double rho = 1.0)
{
    constexpr double w = 2.0 * std::numbers::pi;
    ManufacturedCase c;
    c.problem = homogenised_problem(rho, T);
    c.exact.u = [](double t, Point2 x) { return t * t * std::sin(w * x.x) * std::sin(w * x.y); };
    c.exact.v = [](double t, Point2 x) {
        return Vec2{t * t * std::cos(w * x.x) * std::sin(w * x.y), t * t * std::sin(w * x.x) * std::cos(w * x.y)};
    };
    // f_u = u_t/2 + u/2 + div v, f_v = v_t + grad u
    c.problem.source.f_u = [](double t, Point2 x) {
        return (t + 0.5 * t * t - 2.0 * w * t * t) * std::sin(w * x.x) * std::sin(w * x.y);
    };
    c.problem.source.f_v = [](double t, Point2 x) {
        const double a = 2.0 * t + w * t * t;
        return Vec2{a * std::cos(w * x.x) * std::sin(w * x.y), a * std::sin(w * x.x) * std::cos(w * x.y)};
    };
    return c;
}

/// E_Q errors of the manufactured case at h = tau = 1/k.
inline std::vector<double> manufactured_errors(const std::vector<int>& ks, int p = 2, int q = 1)
{
    const auto mc = manufactured_case();
    std::vector<double> out;
    for (int k : ks) {
        const SpatialProblem sp(mc.problem, k, p);
        const auto sol = run(mc.problem, sp, {k, p, q, 1.0 / k});
        out.push_back(e_q_exact(sol, sp, mc.exact));
    }
    return out;
}

inline CheckResult check_manufactured_rates()
{
    const std::vector<int> ks{8, 16, 32, 64};
    const auto err = manufactured_errors(ks);
    bool ok = true;
    std::ostringstream os;
    os << "E_Q";
    for (double e : err) {
        os << " " << e;
    }
    os << ", eoc";
    for (std::size_t i = 1; i < err.size(); ++i) {
        const double r = eoc(err[i - 1], err[i]);
        ok = ok && r >= 1.7 && r <= 2.3;
        os << " " << r;
    }
    return {"manufactured rates", ok, os.str()};
}

/// E_Q(U) <= 1.1 E_Q(F) / c for random discrete F on the rough problem.
inline CheckResult check_stability(std::uint64_t seed, int samples = 10)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    const auto prob = rough_problem(4, 1.0, 1.5);
    const Discretisation d{8, 2, 1, 0.125};
    const SpatialProblem sp(prob, d.n, d.p);
    const SparseOperator H = operator_H(sp.blocks);
    const Eigen::Index du = sp.blocks.dim_u(), dv = sp.blocks.dim_v();
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const SlabBasis basis(d.q, prob.rho, d.tau);
        const int slabs = slab_count(prob.T, d.tau);
        DiscreteSolution F(d, basis, slabs, du, dv);
        for (int m = 0; m < slabs; ++m) {
            std::vector<FieldPair> nodal;
            for (std::size_t i = 0; i < basis.size(); ++i) {
                FieldPair f = FieldPair::zeros(du, dv);
                for (auto& x : f.u) {
                    x = g(rng);
                }
                for (auto& x : f.v) {
                    x = g(rng);
                }
                nodal.push_back(std::move(f));
            }
            F.append(std::move(nodal), true);
        }
        RunOptions opt;
        opt.loads = [&](int m, std::size_t i, double) {
            return unstack(H * stack(F.slab(m)[i]), du);
        };
        const auto U = run(prob, sp, d, opt);
        worst = std::max(worst, e_q(U, sp.blocks) * prob.c / e_q(F, sp.blocks));
    }
    std::ostringstream os;
    os << "max c E_Q(U) / E_Q(F) = " << worst << " over " << samples << " samples";
    return {"stability", worst <= 1.1, os.str()};
}

/// The quick property suite.
inline std::vector<CheckResult> run_property_checks(std::uint64_t seed)
{
    return {check_quadrature_exactness(), check_skew_adjointness(), check_gelfand_unitarity(seed),
            check_ode_reduction(), check_stability(seed)};
}

} // namespace evohom
