#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

namespace evohom {

/// Nodes and positive weights of a one-dimensional rule.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int exactness_degree = 0;

    [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }

    template <class F>
    [[nodiscard]] double integrate(F&& g) const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            s += weights[i] * g(nodes[i]);
        }
        return s;
    }
};

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// Golub-Welsch: nodes/weights from recurrence coefficients of the monic
// orthogonal polynomials, p_{k+1} = (x - a_k) p_k - b_k p_{k-1}, b_0 = mass.
inline QuadratureRule golub_welsch(const std::vector<double>& a, const std::vector<double>& b)
{
    const auto n = static_cast<Eigen::Index>(a.size());
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        jacobi(k, k) = a[static_cast<std::size_t>(k)];
        if (k + 1 < n) {
            const double off = std::sqrt(b[static_cast<std::size_t>(k + 1)]);
            jacobi(k, k + 1) = off;
            jacobi(k + 1, k) = off;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    if (eig.info() != Eigen::Success) {
        throw QuadratureError("golub_welsch: eigenvalue computation did not converge");
    }
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        const double v0 = eig.eigenvectors()(0, k);
        rule.nodes[static_cast<std::size_t>(k)] = eig.eigenvalues()(k);
        rule.weights[static_cast<std::size_t>(k)] = b[0] * v0 * v0;
    }
    return rule;
}

inline void map_symmetric_to_unit(QuadratureRule& rule)
{
    for (auto& x : rule.nodes) {
        x = 0.5 * (x + 1.0);
    }
    for (auto& w : rule.weights) {
        w *= 0.5;
    }
}

} // namespace detail

/// Gauss-Legendre rule with k nodes on [0,1], exact up to degree 2k-1.
inline QuadratureRule gauss_legendre_1d(int k)
{
    if (k < 1) {
        throw std::invalid_argument("gauss_legendre_1d: node count must be >= 1");
    }
    std::vector<double> a(static_cast<std::size_t>(k), 0.0);
    std::vector<double> b(static_cast<std::size_t>(k), 0.0);
    b[0] = 2.0;
    for (int j = 1; j < k; ++j) {
        b[static_cast<std::size_t>(j)] = static_cast<double>(j * j) / (4.0 * j * j - 1.0);
    }
    auto rule = detail::golub_welsch(a, b);
    detail::map_symmetric_to_unit(rule);
    rule.exactness_degree = 2 * k - 1;
    return rule;
}

/// Gauss-Lobatto points (p+1 of them, endpoints included) on [0,1].
inline std::vector<double> gauss_lobatto_points(int p)
{
    if (p < 1) {
        throw std::invalid_argument("gauss_lobatto_points: degree must be >= 1");
    }
    std::vector<double> pts{0.0};
    if (p >= 2) {
        // interior points: zeros of P_p', i.e. Gauss-Jacobi(1,1)
        const int m = p - 1;
        std::vector<double> a(static_cast<std::size_t>(m), 0.0);
        std::vector<double> b(static_cast<std::size_t>(m), 0.0);
        b[0] = 4.0 / 3.0;
        for (int j = 1; j < m; ++j) {
            b[static_cast<std::size_t>(j)] = static_cast<double>(j) * (j + 2) / ((2.0 * j + 1.0) * (2.0 * j + 3.0));
        }
        auto rule = detail::golub_welsch(a, b);
        std::sort(rule.nodes.begin(), rule.nodes.end());
        for (double x : rule.nodes) {
            pts.push_back(0.5 * (x + 1.0));
        }
    }
    pts.push_back(1.0);
    return pts;
}

/**
 * Moments mu_k = int_0^tau s^k exp(-2 rho s) ds for k = 0..k_max.
 *
 * With beta = 2 rho tau the scaled moments int_0^1 x^k e^{-beta x} dx are
 * gamma_lower(k+1, beta) / beta^{k+1}; for beta < 1 the alternating Taylor
 * series is used instead since the incomplete gamma underflows there.
 */
inline std::vector<double> exponential_moments(double rho, double tau, int k_max)
{
    if (k_max < 0) {
        throw std::invalid_argument("exponential_moments: k_max must be >= 0");
    }
    if (!(rho >= 0.0) || !(tau > 0.0) || !std::isfinite(rho) || !std::isfinite(tau)) {
        throw std::invalid_argument("exponential_moments: need rho >= 0 and tau > 0");
    }
    const double beta = 2.0 * rho * tau;
    std::vector<double> mu(static_cast<std::size_t>(k_max) + 1);
    for (int k = 0; k <= k_max; ++k) {
        double scaled = 0.0;
        if (beta == 0.0) {
            scaled = 1.0 / (k + 1.0);
        } else if (beta < 1.0) {
            double term = 1.0;
            for (int j = 0; j < 200; ++j) {
                const double contrib = term / (k + j + 1.0);
                scaled += contrib;
                if (std::abs(contrib) <= 1e-18 * std::abs(scaled)) {
                    break;
                }
                term *= -beta / (j + 1.0);
            }
        } else {
            scaled = boost::math::tgamma_lower(static_cast<double>(k + 1), beta) / std::pow(beta, k + 1.0);
        }
        const double value = scaled * std::pow(tau, k + 1.0);
        if (!std::isfinite(value)) {
            throw std::overflow_error("exponential_moments: overflow for rho*tau = " + std::to_string(rho * tau));
        }
        mu[static_cast<std::size_t>(k)] = value;
    }
    return mu;
}

/**
 * Right-sided Gauss-Radau rule for the weight exp(-2 rho s) on (0, tau].
 *
 * Returns q+1 nodes with the last one equal to tau and weights that already
 * contain all interval scaling, so sum_i w_i g(s_i) = int_0^tau g e^{-2 rho s}
 * for deg g <= 2q.
 *
 * The recurrence coefficients of the weighted orthogonal polynomials come
 * from a discretised Stieltjes procedure on a fine Gauss-Legendre rule; the
 * last diagonal entry of the Jacobi matrix is then modified so that the right
 * endpoint becomes an eigenvalue.
 */
inline QuadratureRule weighted_gauss_radau(int q, double rho, double tau)
{
    if (q < 0) {
        throw std::invalid_argument("weighted_gauss_radau: q must be >= 0");
    }
    if (!(rho >= 0.0) || !(tau > 0.0) || !std::isfinite(rho) || !std::isfinite(tau)) {
        throw std::invalid_argument("weighted_gauss_radau: need rho >= 0 and tau > 0");
    }
    const double beta = 2.0 * rho * tau;
    const int fine = std::max(64, 2 * q + 16 + static_cast<int>(std::ceil(2.0 * beta)));
    const auto base = gauss_legendre_1d(fine);

    const std::size_t m = base.size();
    std::vector<double> w(m);
    for (std::size_t i = 0; i < m; ++i) {
        w[i] = base.weights[i] * std::exp(-beta * base.nodes[i]);
    }

    // Stieltjes procedure on the discrete measure sum_i w_i delta_{x_i}.
    const auto n = static_cast<std::size_t>(q) + 1;
    std::vector<double> a(n, 0.0);
    std::vector<double> b(n, 0.0);
    std::vector<double> p_prev(m, 0.0);
    std::vector<double> p_cur(m, 1.0);
    std::vector<double> p1_values; // pi_k(1) for k = 0..q
    double pi_prev_at_1 = 0.0;
    double pi_cur_at_1 = 1.0;
    double norm_prev = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        double norm = 0.0;
        double xnorm = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double pw = w[i] * p_cur[i] * p_cur[i];
            norm += pw;
            xnorm += pw * base.nodes[i];
        }
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw QuadratureError("weighted_gauss_radau: Stieltjes procedure broke down at degree " +
                                  std::to_string(k));
        }
        a[k] = xnorm / norm;
        b[k] = (k == 0) ? norm : norm / norm_prev;
        p1_values.push_back(pi_cur_at_1);
        if (k + 1 < n) {
            std::vector<double> p_next(m);
            for (std::size_t i = 0; i < m; ++i) {
                p_next[i] = (base.nodes[i] - a[k]) * p_cur[i] - b[k] * p_prev[i];
            }
            const double next_at_1 = (1.0 - a[k]) * pi_cur_at_1 - b[k] * pi_prev_at_1;
            pi_prev_at_1 = pi_cur_at_1;
            pi_cur_at_1 = next_at_1;
            p_prev = std::move(p_cur);
            p_cur = std::move(p_next);
        }
        norm_prev = norm;
    }
    // Radau modification: choose the last diagonal entry so that x = 1 is a node.
    const double pi_q = p1_values[n - 1];
    const double pi_qm1 = (n >= 2) ? p1_values[n - 2] : 0.0;
    a[n - 1] = 1.0 - ((n >= 2) ? b[n - 1] * pi_qm1 / pi_q : 0.0);

    auto rule = detail::golub_welsch(a, b);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](auto l, auto r) { return rule.nodes[l] < rule.nodes[r]; });

    QuadratureRule out;
    out.exactness_degree = 2 * q;
    for (std::size_t i : order) {
        if (!(rule.weights[i] > 0.0) || !std::isfinite(rule.nodes[i])) {
            throw QuadratureError("weighted_gauss_radau: invalid node/weight produced");
        }
        out.nodes.push_back(tau * rule.nodes[i]);
        out.weights.push_back(tau * rule.weights[i]);
    }
    if (std::abs(out.nodes.back() - tau) > 1e-12 * tau) {
        throw QuadratureError("weighted_gauss_radau: right endpoint was not recovered as a node");
    }
    out.nodes.back() = tau;
    return out;
}

/// Thread-safe memo of weighted Radau rules keyed by (q, rho, tau).
inline const QuadratureRule& cached_weighted_gauss_radau(int q, double rho, double tau)
{
    static std::mutex mutex;
    static std::map<std::tuple<int, double, double>, QuadratureRule> cache;
    std::lock_guard lock(mutex);
    auto key = std::make_tuple(q, rho, tau);
    auto it = cache.find(key);
    if (it == cache.end()) {
        it = cache.emplace(key, weighted_gauss_radau(q, rho, tau)).first;
    }
    return it->second;
}

} // namespace evohom
