#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "evohom/fe_spaces.hpp"
#include "evohom/mesh.hpp"

namespace evohom {

class AlignmentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/**
 * Cellwise constant coefficient on an N x N background mesh: value_even on
 * background cells (i,j) with i+j even, value_odd otherwise. A constant field
 * is stored with N = 0.
 */
class CoefficientField {
public:
    static CoefficientField constant(double value) { return CoefficientField(0, value, value); }

    /// The checkerboard indicator eps_N (1 on even cells).
    static CoefficientField checkerboard(int N) { return checkerboard(N, 1.0, 0.0); }

    /// 1 - eps_N.
    static CoefficientField checkerboard_complement(int N) { return checkerboard(N, 0.0, 1.0); }

    static CoefficientField checkerboard(int N, double value_even, double value_odd)
    {
        if (N < 2 || N % 2 != 0) {
            throw std::invalid_argument("checkerboard: N must be a positive even integer, got " + std::to_string(N));
        }
        return CoefficientField(N, value_even, value_odd);
    }

    [[nodiscard]] bool is_constant() const noexcept { return N_ == 0; }
    [[nodiscard]] int background_cells() const noexcept { return N_; }
    [[nodiscard]] double value_even() const noexcept { return even_; }
    [[nodiscard]] double value_odd() const noexcept { return odd_; }

    /// Pointwise value; points are reduced modulo 1 and located in half-open background cells.
    [[nodiscard]] double operator()(Point2 p) const
    {
        if (is_constant()) {
            return even_;
        }
        const auto c = Mesh(N_).cell_containing({reduce_periodic(p.x), reduce_periodic(p.y)});
        return ((c.i + c.j) % 2 == 0) ? even_ : odd_;
    }

    /// Value on a whole FE cell; throws if the cell straddles a coefficient jump.
    [[nodiscard]] double on_cell(const Mesh& mesh, std::size_t cell) const
    {
        if (is_constant()) {
            return even_;
        }
        if (mesh.cells_per_dim() % N_ != 0) {
            throw AlignmentError("coefficient background mesh N=" + std::to_string(N_) +
                                 " is not aligned with FE mesh n=" + std::to_string(mesh.cells_per_dim()));
        }
        return (*this)(mesh.cell_centre(mesh.cell_index(cell)));
    }

    [[nodiscard]] std::string describe() const
    {
        if (is_constant()) {
            return "constant(" + std::to_string(even_) + ")";
        }
        return "checkerboard(N=" + std::to_string(N_) + ", even=" + std::to_string(even_) +
               ", odd=" + std::to_string(odd_) + ")";
    }

private:
    CoefficientField(int N, double even, double odd) : N_(N), even_(even), odd_(odd) {}

    int N_;
    double even_;
    double odd_;
};

/// eps_N(x,y): 1 if the background cell (floor(xN), floor(yN)) has even index sum.
inline int epsilon_N(Point2 p, int N)
{
    if (N < 2 || N % 2 != 0) {
        throw std::invalid_argument("epsilon_N: N must be a positive even integer, got " + std::to_string(N));
    }
    const auto c = Mesh(N).cell_containing(p);
    return (c.i + c.j) % 2 == 0 ? 1 : 0;
}

/// Mean of the field over one period. Even N gives equal numbers of both colours.
inline double homogenised_average(const CoefficientField& s)
{
    return s.is_constant() ? s.value_even() : 0.5 * (s.value_even() + s.value_odd());
}

/// The load of the study: 1 on (0,1) x [1/4,3/4]^2, 0 elsewhere.
inline double source_f(double t, Point2 p)
{
    const bool active = t > 0.0 && t < 1.0;
    const bool window = std::max(std::abs(2.0 * p.x - 1.0), std::abs(2.0 * p.y - 1.0)) <= 0.5;
    return (active && window) ? 1.0 : 0.0;
}

/// Right-hand side F = (f_u, f_v); an empty f_v means a zero second component.
struct SpaceTimeSource {
    std::function<double(double, Point2)> f_u;
    std::function<Vec2(double, Point2)> f_v;
};

struct AdmissibilityConstants {
    double rho0 = 0.0;
    double c = 0.0;
};

/// c = min over cells of rho0 s0 + s1 for the chosen rho0; throws if c <= 0.
inline AdmissibilityConstants admissibility_constants(const CoefficientField& s0, const CoefficientField& s1,
                                                      double rho0 = 1.0)
{
    if (!(rho0 >= 0.0)) {
        throw std::invalid_argument("admissibility_constants: rho0 must be >= 0");
    }
    int grid = 1;
    for (int N : {s0.background_cells(), s1.background_cells()}) {
        if (N > 0) {
            grid = std::lcm(grid, N);
        }
    }
    const Mesh mesh(grid);
    double c = std::numeric_limits<double>::infinity();
    for (std::size_t cell = 0; cell < mesh.cell_count(); ++cell) {
        const Point2 x = mesh.cell_centre(mesh.cell_index(cell));
        c = std::min(c, rho0 * s0(x) + s1(x));
    }
    if (!(c > 0.0)) {
        throw std::domain_error("admissibility_constants: rho0 s0 + s1 >= c > 0 fails (min = " + std::to_string(c) +
                                ")");
    }
    return {rho0, c};
}

/// Coefficients, load and weighting of one evolutionary problem.
struct ProblemData {
    CoefficientField s0 = CoefficientField::constant(0.5);
    CoefficientField s1 = CoefficientField::constant(0.5);
    double rho0 = 1.0;
    double c = 1.0;
    SpaceTimeSource source;
    double T = 1.5;
    double rho = 1.0;

    /// True when rho does not exceed rho0.
    [[nodiscard]] bool rho_below_admissible() const noexcept { return rho <= rho0; }
};

inline SpaceTimeSource study_source() { return {source_f, {}}; }

/// Rough problem: s0 = eps_N, s1 = 1 - eps_N.
inline ProblemData rough_problem(int N, double rho = 1.0, double T = 1.5)
{
    ProblemData d;
    d.s0 = CoefficientField::checkerboard(N);
    d.s1 = CoefficientField::checkerboard_complement(N);
    const auto ac = admissibility_constants(d.s0, d.s1, 1.0);
    d.rho0 = ac.rho0;
    d.c = ac.c;
    d.source = study_source();
    d.T = T;
    d.rho = rho;
    return d;
}

/// Homogenised problem: s0 = s1 = 1/2.
inline ProblemData homogenised_problem(double rho = 1.0, double T = 1.5)
{
    ProblemData d;
    d.s0 = CoefficientField::constant(0.5);
    d.s1 = CoefficientField::constant(0.5);
    const auto ac = admissibility_constants(d.s0, d.s1, 1.0);
    d.rho0 = ac.rho0;
    d.c = ac.c;
    d.source = study_source();
    d.T = T;
    d.rho = rho;
    return d;
}

} // namespace evohom
