#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "evohom/fe_spaces.hpp"

using namespace evohom;

namespace {

constexpr double pi = std::numbers::pi;

Eigen::VectorXd random_vector(std::size_t n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = uni(rng);
    }
    return v;
}

} // namespace

TEST(ScalarSpace, Dimensions)
{
    EXPECT_EQ(build_scalar_space(Mesh(1), 1).global_dim(), 1u);
    EXPECT_EQ(build_scalar_space(Mesh(2), 2).global_dim(), 16u);
    EXPECT_EQ(build_scalar_space(Mesh(4), 1).global_dim(), 16u);
    EXPECT_THROW(build_scalar_space(Mesh(2), 0), std::invalid_argument);
}

TEST(ScalarSpace, DistinctGlobalNodesMatchDimension)
{
    for (auto [n, p] : std::vector<std::pair<int, int>>{{1, 1}, {2, 2}, {3, 3}, {4, 1}}) {
        const auto space = build_scalar_space(Mesh(n), p);
        std::set<int> seen;
        for (std::size_t c = 0; c < space.mesh().cell_count(); ++c) {
            for (std::size_t k = 0; k < space.local_dim(); ++k) {
                seen.insert(space.cell_dofs(c)[k]);
            }
        }
        EXPECT_EQ(seen.size(), space.global_dim());
    }
}

TEST(ScalarSpace, ConstantInterpolant)
{
    const auto space = build_scalar_space(Mesh(3), 2);
    const auto c = interpolate_scalar(space, [](Point2) { return 1.0; });
    for (Point2 p : {Point2{0.1, 0.2}, Point2{0.5, 0.99}, Point2{0.0, 0.0}}) {
        EXPECT_NEAR(eval_scalar(space, c, p), 1.0, 1e-14);
        const auto g = eval_scalar_grad(space, c, p);
        EXPECT_NEAR(g[0], 0.0, 1e-12);
        EXPECT_NEAR(g[1], 0.0, 1e-12);
    }
    const auto single = build_scalar_space(Mesh(1), 1);
    EXPECT_NEAR(eval_scalar(single, Eigen::VectorXd::Ones(1), {0.37, 0.81}), 1.0, 1e-15);
}

TEST(ScalarSpace, QuadraticReproduction)
{
    const auto space = build_scalar_space(Mesh(4), 2);
    const auto c = interpolate_scalar(space, [](Point2 p) { return p.x * (1.0 - p.x); });
    EXPECT_NEAR(eval_scalar(space, c, {0.3, 0.6}), 0.21, 1e-12);
    EXPECT_NEAR(eval_scalar_grad(space, c, {0.3, 0.6})[0], 1.0 - 2 * 0.3, 1e-12);
}

TEST(ScalarSpace, TensorPolynomialReproductionAwayFromSeam)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int p = 1; p <= 4; ++p) {
        const int n = 4;
        const auto space = build_scalar_space(Mesh(n), p);
        const auto poly = [p](Point2 x) { return std::pow(x.x, p) * std::pow(x.y, p) - 2.0 * std::pow(x.y, p - 1) + 0.5; };
        const auto c = interpolate_scalar(space, poly);
        // cells not touching x=1 or y=1, where the seam identification applies
        for (int k = 0; k < 100; ++k) {
            const Point2 pt{uni(rng) * (n - 1.0) / n, uni(rng) * (n - 1.0) / n};
            EXPECT_NEAR(eval_scalar(space, c, pt), poly(pt), 1e-12);
        }
    }
}

TEST(ScalarSpace, InterpolationMatchesAtNodes)
{
    const auto space = build_scalar_space(Mesh(16), 2);
    const auto f = [](Point2 p) { return std::sin(2 * pi * p.x) * std::sin(2 * pi * p.y); };
    const auto c = interpolate_scalar(space, f);
    double worst = 0.0;
    for (std::size_t i = 0; i < space.global_dim(); ++i) {
        worst = std::max(worst, std::abs(eval_scalar(space, c, space.node_point(i)) - f(space.node_point(i))));
    }
    EXPECT_LT(worst, 1e-14);
}

TEST(ScalarSpace, PeriodicSeams)
{
    std::mt19937_64 rng(11);
    const auto space = build_scalar_space(Mesh(3), 3);
    for (std::size_t basis = 0; basis < space.global_dim(); ++basis) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.global_dim()));
        e[static_cast<Eigen::Index>(basis)] = 1.0;
        for (double zeta : {0.0, 0.13, 0.5, 0.77}) {
            EXPECT_NEAR(eval_scalar(space, e, {0.0, zeta}), eval_scalar(space, e, {1.0 - 1e-12, zeta}), 1e-9);
            EXPECT_NEAR(eval_scalar(space, e, {zeta, 0.0}), eval_scalar(space, e, {zeta, 1.0 - 1e-12}), 1e-9);
        }
    }
}

TEST(ScalarSpace, CoefficientLengthChecked)
{
    const auto space = build_scalar_space(Mesh(2), 2);
    EXPECT_THROW((void)eval_scalar(space, Eigen::VectorXd::Zero(3), {0.1, 0.1}), std::invalid_argument);
}

TEST(VectorSpace, Dimensions)
{
    EXPECT_EQ(build_vector_space(Mesh(1), 1).global_dim(), 2u);
    EXPECT_EQ(build_vector_space(Mesh(2), 2).global_dim(), 32u);
    EXPECT_EQ(build_vector_space(Mesh(2), 1).global_dim(), 8u);
    EXPECT_EQ(build_vector_space(Mesh(3), 3).global_dim(), 2u * 9u * 9u);
}

TEST(VectorSpace, EveryGlobalDofIsUsed)
{
    for (auto [n, p] : std::vector<std::pair<int, int>>{{1, 1}, {2, 2}, {3, 3}}) {
        const auto space = build_vector_space(Mesh(n), p);
        std::set<int> seen;
        for (std::size_t c = 0; c < space.mesh().cell_count(); ++c) {
            for (std::size_t k = 0; k < space.local_dim(); ++k) {
                seen.insert(space.cell_dofs(c)[k]);
            }
        }
        EXPECT_EQ(seen.size(), space.global_dim());
    }
}

TEST(VectorSpace, ConstantFieldAndZero)
{
    const auto space = build_vector_space(Mesh(3), 2);
    const auto c = project_vector(space, [](Point2) { return Vec2{1.0, 0.0}; });
    for (Point2 p : {Point2{0.1, 0.2}, Point2{0.7, 0.95}}) {
        const auto v = eval_vector(space, c, p);
        EXPECT_NEAR(v[0], 1.0, 1e-13);
        EXPECT_NEAR(v[1], 0.0, 1e-13);
        EXPECT_NEAR(eval_div(space, c, p), 0.0, 1e-11);
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.global_dim()));
    const auto v = eval_vector(space, zero, {0.4, 0.4});
    EXPECT_EQ(v[0], 0.0);
    EXPECT_EQ(v[1], 0.0);
}

TEST(VectorSpace, LinearNormalFieldHasUnitDivergenceAwayFromSeam)
{
    for (int p = 1; p <= 3; ++p) {
        const int n = 4;
        const auto space = build_vector_space(Mesh(n), p);
        const auto c = project_vector(space, [](Point2 x) { return Vec2{x.x, 0.0}; });
        for (double x : {0.3, 0.45, 0.6, 0.7}) {
            EXPECT_NEAR(eval_div(space, c, {x, 0.3}), 1.0, 1e-11);
            EXPECT_NEAR(eval_vector(space, c, {x, 0.3})[0], x, 1e-12);
        }
    }
}

TEST(VectorSpace, ReproducesQpMinusOneFieldsAwayFromSeam)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int p = 1; p <= 3; ++p) {
        const int n = 4;
        const auto space = build_vector_space(Mesh(n), p);
        const int d = p - 1;
        const auto field = [d](Point2 x) {
            return Vec2{std::pow(x.x, d) * std::pow(x.y, d) + 0.3, std::pow(x.x, d) - 2.0 * std::pow(x.y, d)};
        };
        const auto c = project_vector(space, field);
        for (int k = 0; k < 50; ++k) {
            const Point2 pt{(1.0 + uni(rng) * (n - 2.0)) / n, (1.0 + uni(rng) * (n - 2.0)) / n};
            const auto v = eval_vector(space, c, pt);
            EXPECT_NEAR(v[0], field(pt)[0], 1e-12);
            EXPECT_NEAR(v[1], field(pt)[1], 1e-12);
        }
    }
}

TEST(VectorSpace, EdgeMomentsMatchAnalyticIntegrals)
{
    const int n = 8;
    const auto space = build_vector_space(Mesh(n), 2);
    const auto c = project_vector(space, [](Point2 x) { return Vec2{std::sin(2 * pi * x.y), 0.0}; });
    const auto gl = gauss_legendre_1d(6);
    const double h = 1.0 / n;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            // zeroth and first moments of the normal trace on the vertical edge x = i h
            const double y0 = j * h;
            const double y1 = y0 + h;
            double m0 = 0.0;
            double m1 = 0.0;
            for (std::size_t q = 0; q < gl.size(); ++q) {
                const double y = y0 + gl.nodes[q] * h;
                const double vx = eval_vector(space, c, {i * h, y})[0];
                m0 += gl.weights[q] * h * vx;
                m1 += gl.weights[q] * h * vx * y;
            }
            const double w = 2 * pi;
            const double a0 = (std::cos(w * y0) - std::cos(w * y1)) / w;
            const double a1 = (y0 * std::cos(w * y0) - y1 * std::cos(w * y1)) / w +
                              (std::sin(w * y1) - std::sin(w * y0)) / (w * w);
            EXPECT_NEAR(m0, a0, 1e-12);
            EXPECT_NEAR(m1, a1, 1e-12);
        }
    }
}

TEST(VectorSpace, NormalTraceContinuityForRandomCoefficients)
{
    std::mt19937_64 rng(17);
    for (int p = 1; p <= 3; ++p) {
        const int n = 3;
        const auto space = build_vector_space(Mesh(n), p);
        const Mesh& mesh = space.mesh();
        const auto coeffs = random_vector(space.global_dim(), rng);
        const auto gl = gauss_legendre_1d(p);
        double worst = 0.0;
        for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
            const auto ci = mesh.cell_index(c);
            const auto right = mesh.cell_id(mesh.periodic_neighbor(ci, Direction::PlusX));
            const auto top = mesh.cell_id(mesh.periodic_neighbor(ci, Direction::PlusY));
            for (double s : gl.nodes) {
                const double jump_x =
                    space.eval_in_cell(coeffs, c, 1.0, s)[0] - space.eval_in_cell(coeffs, right, 0.0, s)[0];
                const double jump_y =
                    space.eval_in_cell(coeffs, c, s, 1.0)[1] - space.eval_in_cell(coeffs, top, s, 0.0)[1];
                worst = std::max({worst, std::abs(jump_x), std::abs(jump_y)});
            }
        }
        EXPECT_LE(worst, 1e-10);
    }
}

TEST(VectorSpace, DivergenceLiesInQpMinusOne)
{
    std::mt19937_64 rng(23);
    for (int p = 1; p <= 3; ++p) {
        const auto space = build_vector_space(Mesh(2), p);
        const auto coeffs = random_vector(space.global_dim(), rng);
        // Fit div on a p x p Gauss grid with Q_{p-1} Lagrange, then check at off-grid points.
        const LagrangeBasis1D fit(gauss_legendre_1d(p).nodes);
        std::mt19937_64 pts(1);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (std::size_t c = 0; c < space.mesh().cell_count(); ++c) {
            for (int t = 0; t < 10; ++t) {
                const double xi = uni(pts);
                const double eta = uni(pts);
                double interp = 0.0;
                for (std::size_t a = 0; a < fit.size(); ++a) {
                    for (std::size_t b = 0; b < fit.size(); ++b) {
                        interp += space.eval_div_in_cell(coeffs, c, fit.nodes()[a], fit.nodes()[b]) * fit.value(a, xi) *
                                  fit.value(b, eta);
                    }
                }
                EXPECT_NEAR(interp, space.eval_div_in_cell(coeffs, c, xi, eta), 1e-11);
            }
        }
    }
}

TEST(VectorSpace, SpansContainQpMinusOneAndLieInQp)
{
    // Each local function is a tensor polynomial of degree <= p per variable, and the
    // local space has dimension 2 p (p+1) = dim RT_{p-1}.
    for (int p = 1; p <= 4; ++p) {
        const auto space = build_vector_space(Mesh(1), p);
        EXPECT_EQ(space.local_dim(), static_cast<std::size_t>(2 * p * (p + 1)));
    }
}
