#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "evohom/assembly.hpp"

using namespace evohom;

namespace {

double max_abs(const SparseOperator& m)
{
    double r = 0.0;
    for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
        for (SparseOperator::InnerIterator it(m, k); it; ++it) {
            r = std::max(r, std::abs(it.value()));
        }
    }
    return r;
}

struct Spaces {
    Mesh mesh;
    ScalarSpace su;
    VectorSpace sv;
    Spaces(int n, int p) : mesh(n), su(mesh, p), sv(mesh, p) {}
};

constexpr double pi = std::numbers::pi;

} // namespace

TEST(Assembly, SingleCellMass)
{
    const Spaces s(1, 1);
    const auto m = assemble_weighted_mass_u(s.su, CoefficientField::constant(1.0));
    ASSERT_EQ(m.rows(), 1);
    EXPECT_NEAR(Eigen::MatrixXd(m)(0, 0), 1.0, 1e-15);
    const auto zero = assemble_weighted_mass_u(s.su, CoefficientField::constant(0.0));
    EXPECT_EQ(zero.nonZeros(), 0);
}

TEST(Assembly, PartitionOfUnity)
{
    for (int p : {1, 2, 3}) {
        const Spaces s(4, p);
        const auto m = assemble_weighted_mass_u(s.su, CoefficientField::constant(1.0));
        const Eigen::VectorXd one = Eigen::VectorXd::Ones(m.rows());
        EXPECT_NEAR(one.dot(m * one), 1.0, 1e-13);
        const auto load = assemble_load(s.su, [](Point2) { return 1.0; });
        EXPECT_NEAR((m * one - load).cwiseAbs().maxCoeff(), 0.0, 1e-14);
    }
}

TEST(Assembly, MassVOnConstantField)
{
    const Spaces s(3, 2);
    const auto mv = assemble_mass_v(s.sv);
    const Eigen::VectorXd x = project_vector(s.sv, [](Point2) { return Vec2{1.0, 0.0}; });
    EXPECT_NEAR(x.dot(mv * x), 1.0, 1e-13);
    const SparseOperator asym = SparseOperator(mv.transpose()) - mv;
    EXPECT_LE(max_abs(asym), 1e-14);
}

TEST(Assembly, MassVPositiveDefinite)
{
    const Spaces s(2, 2);
    const Eigen::MatrixXd mv(assemble_mass_v(s.sv));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mv);
    EXPECT_GT(eig.eigenvalues().minCoeff(), 1e-6);
    const Eigen::LLT<Eigen::MatrixXd> llt(mv);
    EXPECT_EQ(llt.info(), Eigen::Success);
}

TEST(Assembly, CheckerboardMassIsSingularAndSumsToUnweighted)
{
    const Spaces s(8, 2);
    const auto eps = assemble_weighted_mass_u(s.su, CoefficientField::checkerboard(4));
    const auto comp = assemble_weighted_mass_u(s.su, CoefficientField::checkerboard_complement(4));
    const auto full = assemble_weighted_mass_u(s.su, CoefficientField::constant(1.0));
    EXPECT_LE(max_abs(SparseOperator(eps + comp - full)), 1e-15);

    const Eigen::VectorXd one = Eigen::VectorXd::Ones(eps.rows());
    EXPECT_NEAR(one.dot(eps * one), 0.5, 1e-13);

    // a u-field vanishing outside the interior of an odd cell has zero eps-mass
    const Eigen::MatrixXd dense(eps);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
    EXPECT_NEAR(eig.eigenvalues().minCoeff(), 0.0, 1e-14);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-14);

    EXPECT_THROW((void)assemble_weighted_mass_u(ScalarSpace(Mesh(6), 2), CoefficientField::checkerboard(4)),
                 AlignmentError);
}

TEST(Assembly, SkewAdjointness)
{
    for (auto [n, p] : {std::pair{2, 1}, {2, 2}, {4, 2}, {8, 2}, {3, 3}}) {
        const Spaces s(n, p);
        const auto bdiv = assemble_div_block(s.sv, s.su);
        const auto bgrad = assemble_grad_block(s.su, s.sv);
        ASSERT_EQ(bdiv.rows(), static_cast<Eigen::Index>(s.su.global_dim()));
        ASSERT_EQ(bdiv.cols(), static_cast<Eigen::Index>(s.sv.global_dim()));
        const SparseOperator sum = bdiv + SparseOperator(bgrad.transpose());
        EXPECT_LE(max_abs(sum), 1e-13) << "n=" << n << " p=" << p;

        std::mt19937_64 rng(static_cast<unsigned>(n * 10 + p));
        std::normal_distribution<double> g;
        Eigen::VectorXd xu(bdiv.rows()), xv(bdiv.cols());
        for (auto& v : xu) {
            v = g(rng);
        }
        for (auto& v : xv) {
            v = g(rng);
        }
        const double a = xu.dot(bdiv * xv);
        const double b = xv.dot(bgrad * xu);
        EXPECT_LE(std::abs(a + b), 1e-11 * (std::abs(a) + std::abs(b)) + 1e-14 * xu.norm() * xv.norm());
    }
}

TEST(Assembly, DivergenceAndGradientKernels)
{
    const Spaces s(4, 2);
    const auto bdiv = assemble_div_block(s.sv, s.su);
    const auto bgrad = assemble_grad_block(s.su, s.sv);
    const Eigen::VectorXd vconst = project_vector(s.sv, [](Point2) { return Vec2{0.3, -0.7}; });
    EXPECT_LE((bdiv * vconst).cwiseAbs().maxCoeff(), 1e-14);
    const Eigen::VectorXd uconst = Eigen::VectorXd::Constant(bdiv.rows(), 2.5);
    EXPECT_LE((bgrad * uconst).cwiseAbs().maxCoeff(), 1e-14);

    const Eigen::VectorXd vs = project_vector(s.sv, [](Point2 x) { return Vec2{std::sin(2 * pi * x.x), 0.0}; });
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(bdiv.rows());
    EXPECT_NEAR(one.dot(bdiv * vs), 0.0, 1e-13);
}

TEST(Assembly, GradientAgainstEdgeBasisFunction)
{
    // Oracle: reference-cell quadrature of grad(I_h sin 2 pi x) . psi on the
    // two cells sharing one vertical edge.
    const Spaces s(4, 2);
    const auto bgrad = assemble_grad_block(s.su, s.sv);
    const Eigen::VectorXd u = interpolate_scalar(s.su, [](Point2 x) { return std::sin(2 * pi * x.x); });
    const Eigen::VectorXd row = bgrad * u;

    const auto rule = gauss_legendre_1d(8);
    const Mesh& mesh = s.mesh;
    const double h = mesh.h();
    const int* dofs_right = s.sv.cell_dofs(mesh.cell_id({1, 1}));
    // local dof 0 of the x-component is the left edge of the cell
    const int target = dofs_right[0];
    double expected = 0.0;
    for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
        const int* dofs = s.sv.cell_dofs(c);
        for (std::size_t a = 0; a < s.sv.local_dim(); ++a) {
            if (dofs[a] != target) {
                continue;
            }
            std::vector<double> psi(s.sv.local_dim());
            for (std::size_t qy = 0; qy < rule.size(); ++qy) {
                for (std::size_t qx = 0; qx < rule.size(); ++qx) {
                    s.sv.shape_values(rule.nodes[qx], rule.nodes[qy], psi.data(), nullptr);
                    const auto g = s.su.eval_grad_in_cell(u, c, rule.nodes[qx], rule.nodes[qy]);
                    expected += rule.weights[qx] * rule.weights[qy] * h * h * psi[a] *
                                g[static_cast<std::size_t>(s.sv.component(a))];
                }
            }
        }
    }
    EXPECT_NE(expected, 0.0);
    EXPECT_NEAR(row[target], expected, 1e-12);
}

TEST(Assembly, IntegrationByPartsAgainstAnalytic)
{
    // (div v, u) with u = cos(2 pi x), v = (sin(2 pi x), 0): integral of 2 pi cos^2 = pi
    std::vector<double> err;
    for (int n : {4, 8}) {
        const Spaces s(n, 3);
        const auto bdiv = assemble_div_block(s.sv, s.su);
        const Eigen::VectorXd u = interpolate_scalar(s.su, [](Point2 x) { return std::cos(2 * pi * x.x); });
        const Eigen::VectorXd v = project_vector(s.sv, [](Point2 x) { return Vec2{std::sin(2 * pi * x.x), 0.0}; });
        err.push_back(std::abs(u.dot(bdiv * v) - pi));
    }
    EXPECT_LT(err[1], 2e-5);
    EXPECT_GT(std::log2(err[0] / err[1]), 3.5);
}

TEST(Assembly, BlocksMatchIndividualAssemblers)
{
    const Spaces s(4, 2);
    const auto b = assemble_blocks(s.su, s.sv, CoefficientField::checkerboard(2),
                                   CoefficientField::checkerboard_complement(2));
    EXPECT_EQ(max_abs(SparseOperator(b.Mu0 - assemble_weighted_mass_u(s.su, CoefficientField::checkerboard(2)))), 0.0);
    EXPECT_EQ(max_abs(SparseOperator(b.Mv - assemble_mass_v(s.sv))), 0.0);
    EXPECT_EQ(max_abs(SparseOperator(b.Bdiv - assemble_div_block(s.sv, s.su))), 0.0);
    EXPECT_EQ(max_abs(SparseOperator(b.Bgrad - assemble_grad_block(s.su, s.sv))), 0.0);
    EXPECT_EQ(b.dim_u(), 64);
    EXPECT_EQ(b.dim_v(), 128);

    const auto again = assemble_blocks(s.su, s.sv, CoefficientField::checkerboard(2),
                                       CoefficientField::checkerboard_complement(2));
    std::ostringstream a1, a2;
    write_coordinate(a1, b.Bdiv);
    write_coordinate(a2, again.Bdiv);
    EXPECT_EQ(a1.str(), a2.str());
}

TEST(Assembly, StudyLoad)
{
    for (int N : {2, 4}) {
        const Spaces s(2 * N, 2);
        const auto l = assemble_load(s.su, [](Point2 x) { return source_f(0.5, x); });
        EXPECT_NEAR(l.sum(), 0.25, 1e-14);
        const auto z = assemble_load(s.su, [](Point2 x) { return source_f(1.2, x); });
        EXPECT_EQ(z.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Assembly, VectorLoadMatchesMass)
{
    const Spaces s(4, 2);
    const auto mv = assemble_mass_v(s.sv);
    const VectorFunction g = [](Point2) { return Vec2{1.0, 2.0}; };
    const Eigen::VectorXd x = project_vector(s.sv, g);
    EXPECT_LE((assemble_load_v(s.sv, g) - mv * x).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Assembly, CoordinateDump)
{
    const Spaces s(1, 1);
    std::ostringstream os;
    write_coordinate(os, assemble_mass_v(s.sv));
    std::istringstream is(os.str());
    int r = 0, c = 0, nnz = 0;
    is >> r >> c >> nnz;
    EXPECT_EQ(r, 2);
    EXPECT_EQ(c, 2);
    EXPECT_EQ(nnz, 2);
    int i = 0, j = 0;
    double v = 0.0;
    is >> i >> j >> v;
    EXPECT_EQ(i, 0);
    EXPECT_EQ(j, 0);
    EXPECT_NEAR(v, 1.0, 1e-15);
}
