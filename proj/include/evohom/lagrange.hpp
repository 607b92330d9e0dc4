#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace evohom {

/// One-dimensional Lagrange basis on a set of distinct nodes.
class LagrangeBasis1D {
public:
    LagrangeBasis1D() = default;

    explicit LagrangeBasis1D(std::vector<double> nodes) : nodes_(std::move(nodes))
    {
        if (nodes_.empty()) {
            throw std::invalid_argument("LagrangeBasis1D: need at least one node");
        }
        denominators_.resize(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            double d = 1.0;
            for (std::size_t j = 0; j < nodes_.size(); ++j) {
                if (j != i) {
                    d *= nodes_[i] - nodes_[j];
                }
            }
            if (d == 0.0) {
                throw std::invalid_argument("LagrangeBasis1D: nodes must be distinct");
            }
            denominators_[i] = d;
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] const std::vector<double>& nodes() const noexcept { return nodes_; }

    [[nodiscard]] double value(std::size_t i, double x) const noexcept
    {
        double v = 1.0;
        for (std::size_t j = 0; j < nodes_.size(); ++j) {
            if (j != i) {
                v *= x - nodes_[j];
            }
        }
        return v / denominators_[i];
    }

    [[nodiscard]] double derivative(std::size_t i, double x) const noexcept
    {
        double sum = 0.0;
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            if (k == i) {
                continue;
            }
            double prod = 1.0;
            for (std::size_t j = 0; j < nodes_.size(); ++j) {
                if (j != i && j != k) {
                    prod *= x - nodes_[j];
                }
            }
            sum += prod;
        }
        return sum / denominators_[i];
    }

    void values(double x, double* out) const noexcept
    {
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            out[i] = value(i, x);
        }
    }

    void derivatives(double x, double* out) const noexcept
    {
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            out[i] = derivative(i, x);
        }
    }

private:
    std::vector<double> nodes_;
    std::vector<double> denominators_;
};

/// Shifted Legendre polynomial P_k(2x-1) on [0,1].
inline double shifted_legendre(int k, double x) noexcept
{
    const double t = 2.0 * x - 1.0;
    double p0 = 1.0;
    if (k == 0) {
        return p0;
    }
    double p1 = t;
    for (int j = 1; j < k; ++j) {
        const double p2 = ((2.0 * j + 1.0) * t * p1 - j * p0) / (j + 1.0);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

} // namespace evohom
