#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "evohom/slab_solver.hpp"

using namespace evohom;

namespace {

ProblemData constant_problem(double s0, double s1, SpaceTimeSource src, double T, double rho = 1.0)
{
    ProblemData d;
    d.s0 = CoefficientField::constant(s0);
    d.s1 = CoefficientField::constant(s1);
    d.source = std::move(src);
    d.T = T;
    d.rho = rho;
    return d;
}

SpaceTimeSource unit_pulse()
{
    return {[](double t, Point2) { return (t > 0.0 && t < 1.0) ? 1.0 : 0.0; }, {}};
}

double legendre(int k, double x)
{
    double p0 = 1.0, p1 = x;
    if (k == 0) {
        return 1.0;
    }
    for (int j = 1; j < k; ++j) {
        const double p2 = ((2 * j + 1) * x * p1 - j * p0) / (j + 1);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

double legendre_derivative(int k, double x)
{
    // P_k' = sum over j = k-1, k-3, ... of (2j+1) P_j
    double d = 0.0;
    for (int j = k - 1; j >= 0; j -= 2) {
        d += (2 * j + 1) * legendre(j, x);
    }
    return d;
}

/**
 * Scalar weighted dG(q) for a u' + b u = f(t) in a Legendre basis, using the
 * same quadrature rule. Returns the values at the Radau nodes of every slab.
 */
std::vector<std::vector<double>> scalar_dg(double a, double b, const std::function<double(double)>& f, double u0,
                                           int q, double rho, double tau, int slabs)
{
    const auto rule = weighted_gauss_radau(q, rho, tau);
    const int n = q + 1;
    auto xi = [&](double s) { return 2.0 * s / tau - 1.0; };
    std::vector<std::vector<double>> out;
    double prev = u0;
    for (int m = 0; m < slabs; ++m) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
        for (int k = 0; k < n; ++k) {
            for (int l = 0; l < n; ++l) {
                for (std::size_t j = 0; j < rule.size(); ++j) {
                    const double s = rule.nodes[j];
                    A(k, l) += rule.weights[j] *
                               (a * legendre_derivative(l, xi(s)) * 2.0 / tau + b * legendre(l, xi(s))) *
                               legendre(k, xi(s));
                }
                A(k, l) += a * legendre(l, -1.0) * legendre(k, -1.0);
            }
            for (std::size_t j = 0; j < rule.size(); ++j) {
                // data at the closing node is taken from inside the slab
                const double t = j + 1 == rule.size() ? std::nextafter((m + 1) * tau, m * tau) : m * tau + rule.nodes[j];
                r[k] += rule.weights[j] * f(t) * legendre(k, xi(rule.nodes[j]));
            }
            r[k] += a * prev * legendre(k, -1.0);
        }
        const Eigen::VectorXd c = A.partialPivLu().solve(r);
        std::vector<double> nodal;
        for (std::size_t j = 0; j < rule.size(); ++j) {
            double v = 0.0;
            for (int l = 0; l < n; ++l) {
                v += c[l] * legendre(l, xi(rule.nodes[j]));
            }
            nodal.push_back(v);
        }
        prev = nodal.back();
        out.push_back(nodal);
    }
    return out;
}

double spread(const Eigen::VectorXd& x) { return x.maxCoeff() - x.minCoeff(); }

} // namespace

TEST(SlabBasis, PartitionOfUnity)
{
    for (int q : {0, 1, 2, 3}) {
        const SlabBasis b(q, 1.0, 0.25);
        double left = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            left += b.left(i);
        }
        EXPECT_NEAR(left, 1.0, 1e-13);
        for (double s : {0.0, 0.07, 0.2}) {
            double sum = 0.0;
            for (std::size_t i = 0; i < b.size(); ++i) {
                sum += b.value(i, s);
            }
            EXPECT_NEAR(sum, 1.0, 1e-13);
        }
        for (std::size_t k = 0; k < b.size(); ++k) {
            double d = 0.0;
            for (std::size_t i = 0; i < b.size(); ++i) {
                d += b.derivative_at_node(k, i);
            }
            EXPECT_NEAR(d, 0.0, 1e-10);
        }
        EXPECT_DOUBLE_EQ(b.nodes().back(), 0.25);
    }
}

TEST(TimeMatrices, PiecewiseConstant)
{
    const SlabBasis b(0, 1.0, 0.5);
    const auto t = time_matrices(b);
    ASSERT_EQ(t.K.rows(), 1);
    EXPECT_DOUBLE_EQ(t.K(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(t.Mt(0, 0), b.weights()[0]);
    EXPECT_DOUBLE_EQ(t.J[0], 1.0);
}

TEST(SlabSystem, ScalarImplicitEulerForm)
{
    const auto prob = constant_problem(1.0, 1.0, {}, 1.0);
    const SpatialProblem sp(prob, 1, 1);
    const SlabBasis b(0, 1.0, 0.5);
    const Eigen::MatrixXd s(build_slab_system(sp.blocks, b));
    ASSERT_EQ(s.rows(), 3);
    EXPECT_NEAR(s(0, 0), 1.0 + b.weights()[0], 1e-15);
    EXPECT_NEAR(s(0, 1), 0.0, 1e-15);
    EXPECT_NEAR(s(0, 2), 0.0, 1e-15);
}

TEST(SlabSystem, DimensionAndSparsity)
{
    const auto prob = rough_problem(2);
    const SlabBasis b(1, 1.0, 0.25);
    {
        const SpatialProblem sp(prob, 2, 2);
        EXPECT_EQ(build_slab_system(sp.blocks, b).rows(), 96);
    }
    auto ratios = [&](const ProblemData& data) {
        std::vector<double> r;
        for (int n : {2, 4, 8, 16}) {
            const SpatialProblem sp(data, n, 2);
            r.push_back(static_cast<double>(build_slab_system(sp.blocks, b).nonZeros()) / (n * n));
        }
        return r;
    };
    // n = 2 wraps the stencil onto itself; from n = 4 on the count per cell is fixed
    const auto hom = ratios(homogenised_problem());
    EXPECT_LE(hom[0], hom[1]);
    EXPECT_EQ(hom[1], hom[2]);
    EXPECT_EQ(hom[2], hom[3]);
    // the s0 = 0 cells drop some time-coupling entries; the count stays linear in the cell count
    const auto rough = ratios(prob);
    EXPECT_LE(rough[3], hom[3]);
    EXPECT_NEAR(rough[3] / rough[1], 1.0, 0.01);
}

TEST(SlabSolver, ZeroDataGivesZero)
{
    const auto prob = rough_problem(2);
    const SpatialProblem sp(prob, 4, 2);
    const SlabSolver s(sp.blocks, SlabBasis(1, 1.0, 0.25));
    const FieldPair z{Eigen::VectorXd::Zero(sp.blocks.dim_u()), Eigen::VectorXd::Zero(sp.blocks.dim_v())};
    const auto r = solve_slab(s, z, {z, z});
    for (const auto& f : r) {
        EXPECT_EQ(f.u.cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(f.v.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(SlabSolver, StrategiesAgree)
{
    for (int q : {0, 1, 2, 3}) {
        const auto prob = rough_problem(2);
        const SpatialProblem sp(prob, 4, 2);
        const SlabBasis basis(q, 1.0, 0.25);
        const SlabSolver diag(sp.blocks, basis, SlabStrategy::Diagonalised);
        const SlabSolver mono(sp.blocks, basis, SlabStrategy::Monolithic);
        std::vector<FieldPair> loads;
        for (std::size_t i = 0; i < basis.size(); ++i) {
            loads.push_back(assemble_source(sp, prob.source, 0.1 + basis.nodes()[i]));
        }
        FieldPair prev{Eigen::VectorXd::LinSpaced(sp.blocks.dim_u(), -1.0, 1.0),
                       Eigen::VectorXd::LinSpaced(sp.blocks.dim_v(), 0.5, -0.5)};
        const auto a = diag.solve(prev, loads);
        const auto b = mono.solve(prev, loads);
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_LE((a[i].u - b[i].u).norm(), 1e-10 * b[i].u.norm()) << "q=" << q;
            EXPECT_LE((a[i].v - b[i].v).norm(), 1e-10 * b[i].v.norm()) << "q=" << q;
        }
    }
}

TEST(SlabSolver, MatchesScalarDgOracle)
{
    const double tau = 1.0 / 16;
    for (int q : {0, 1, 2}) {
        const auto prob = constant_problem(0.5, 0.5, unit_pulse(), 1.5);
        const auto sol = run(prob, {2, 2, q, tau});
        const auto ref = scalar_dg(0.5, 0.5, [](double t) { return (t > 0.0 && t < 1.0) ? 1.0 : 0.0; }, 0.0, q,
                                   1.0, tau, sol.slab_count());
        double err = 0.0;
        for (int m = 0; m < sol.slab_count(); ++m) {
            for (std::size_t i = 0; i < sol.basis().size(); ++i) {
                const auto& u = sol.slab(m)[i].u;
                err = std::max(err, (u.array() - ref[static_cast<std::size_t>(m)][i]).abs().maxCoeff());
                EXPECT_LE(spread(u), 1e-10);
                EXPECT_LE(sol.slab(m)[i].v.cwiseAbs().maxCoeff(), 1e-10);
            }
        }
        EXPECT_LE(err, 1e-12) << "q=" << q;
    }
}

TEST(SlabSolver, ExponentialDecaySuperconvergence)
{
    // u' + u = 0, u(0) = 1, one slab
    std::vector<double> err;
    for (double tau : {0.1, 0.05, 0.025}) {
        const auto prob = constant_problem(1.0, 1.0, {}, tau);
        const SpatialProblem sp(prob, 2, 1);
        RunOptions opt;
        opt.x0 = FieldPair{Eigen::VectorXd::Ones(sp.blocks.dim_u()), Eigen::VectorXd::Zero(sp.blocks.dim_v())};
        const auto sol = run(prob, sp, {2, 1, 1, tau}, opt);
        err.push_back(std::abs(sol.right_trace(0).u[0] - std::exp(-tau)));
    }
    EXPECT_LT(err[0], 1e-4);
    EXPECT_GT(std::log2(err[0] / err[1]), 3.5); // local error O(tau^4)
    EXPECT_GT(std::log2(err[1] / err[2]), 3.5);
}

TEST(SlabSolver, OdeReductionAgainstClosedForm)
{
    const auto prob = constant_problem(0.5, 0.5, unit_pulse(), 1.5);
    std::vector<double> err;
    for (int k : {8, 16, 32, 64}) {
        const double tau = 1.0 / k;
        const auto sol = run(prob, {2, 2, 1, tau});
        double e = 0.0;
        for (int m = 0; m < sol.slab_count(); ++m) {
            const double t = (m + 1) * tau;
            if (t < 1.0 - 1e-12) {
                e = std::max(e, std::abs(sol.right_trace(m).u[0] - 2.0 * (1.0 - std::exp(-t))));
            }
        }
        err.push_back(e);
    }
    EXPECT_LE(err[2], 1e-3);
    for (std::size_t i = 0; i + 1 < err.size(); ++i) {
        EXPECT_GE(std::log2(err[i] / err[i + 1]), 2.7) << i;
    }
}

TEST(SlabSolver, Causality)
{
    const SpaceTimeSource late{[](double t, Point2 x) { return t > 0.7 ? source_f(0.5, x) : 0.0; }, {}};
    auto prob = rough_problem(2);
    prob.source = late;
    const auto sol = run(prob, {4, 2, 1, 0.125});
    for (int m = 0; m < sol.slab_count(); ++m) {
        if ((m + 1) * 0.125 < 0.7) {
            for (const auto& f : sol.slab(m)) {
                EXPECT_LE(f.u.cwiseAbs().maxCoeff(), 1e-12);
                EXPECT_LE(f.v.cwiseAbs().maxCoeff(), 1e-12);
            }
        }
    }
    EXPECT_GT(sol.final_trace().u.norm(), 0.0);
}

TEST(SlabSolver, TracesAndSensitivity)
{
    const auto prob = rough_problem(2);
    const SpatialProblem sp(prob, 4, 2);
    const auto sol0 = run(prob, sp, {4, 2, 0, 0.25});
    EXPECT_EQ((sol0.left_trace(1).u - sol0.right_trace(1).u).norm(), 0.0);

    const auto sol = run(prob, sp, {4, 2, 1, 0.25});
    const auto& b = sol.basis();
    const auto lt = sol.left_trace(2);
    const Eigen::VectorXd manual = b.left(0) * sol.slab(2)[0].u + b.left(1) * sol.slab(2)[1].u;
    EXPECT_LE((lt.u - manual).norm(), 1e-14 * manual.norm());
    EXPECT_EQ((sol.right_trace(2).u - sol.slab(2)[1].u).norm(), 0.0);
    EXPECT_THROW((void)sol.right_trace(sol.slab_count()), std::out_of_range);
    EXPECT_THROW((void)left_trace(sol, -1), std::out_of_range);

    const SlabSolver solver(sp.blocks, b);
    std::vector<FieldPair> loads;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double t = i + 1 == b.size() ? std::nextafter(1.0, 0.0) : 0.75 + b.nodes()[i];
        loads.push_back(assemble_source(sp, prob.source, t));
    }
    const auto again = solver.solve(sol.right_trace(2), loads);
    EXPECT_LE((again[1].u - sol.slab(3)[1].u).norm(), 1e-12 * sol.slab(3)[1].u.norm());
    FieldPair perturbed = sol.right_trace(2);
    perturbed.u[3] += 1e-3;
    const auto moved = solver.solve(perturbed, loads);
    EXPECT_GT((moved[1].u - again[1].u).norm(), 1e-8);
}

TEST(SlabSolver, RoughSmokeRun)
{
    const auto prob = rough_problem(2);
    const auto sol = run(prob, {4, 2, 1, 0.25});
    EXPECT_EQ(sol.slab_count(), 6);
    const double n = sol.final_trace().u.norm();
    EXPECT_TRUE(std::isfinite(n));
    EXPECT_GT(n, 0.0);
}

TEST(SlabSolver, StreamingWithoutStorage)
{
    const auto prob = rough_problem(2);
    RunOptions opt;
    opt.keep_slabs = false;
    int seen = 0;
    opt.visitor = [&](int m, const std::vector<FieldPair>& nodal) {
        EXPECT_EQ(m, seen);
        EXPECT_EQ(nodal.size(), 2u);
        ++seen;
    };
    const auto sol = run(prob, {4, 2, 1, 0.25}, opt);
    EXPECT_EQ(seen, 6);
    EXPECT_FALSE(sol.stores_slabs());
    EXPECT_THROW((void)sol.slab(0), std::logic_error);
    const auto full = run(prob, {4, 2, 1, 0.25});
    EXPECT_EQ((sol.final_trace().u - full.final_trace().u).norm(), 0.0);
}

TEST(SlabSolver, RejectsBadInput)
{
    EXPECT_THROW((void)slab_count(1.5, 0.4), std::invalid_argument);
    EXPECT_EQ(slab_count(1.5, 0.125), 12);
    const auto prob = rough_problem(2);
    const SpatialProblem sp(prob, 4, 2);
    EXPECT_THROW((void)run(prob, sp, {8, 2, 1, 0.25}), std::invalid_argument);
    const SlabSolver s(sp.blocks, SlabBasis(1, 1.0, 0.25));
    const FieldPair z{Eigen::VectorXd::Zero(sp.blocks.dim_u()), Eigen::VectorXd::Zero(sp.blocks.dim_v())};
    EXPECT_THROW((void)s.solve(z, {z}), std::invalid_argument);
}
