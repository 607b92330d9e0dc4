#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/UmfPackSupport>

namespace evohom {

class SolveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FillOrdering { Automatic, Amd, Metis };

struct DirectSolverOptions {
    FillOrdering ordering = FillOrdering::Amd;
    bool symmetric_pattern = false; ///< force UMFPACK's symmetric strategy
    int refinement_steps = 0;       ///< iterative refinement steps per solve
};

/// Sparse LU factorization backed by UMFPACK, factored once and reused.
template <class Scalar>
class SparseDirectSolver {
public:
    using Matrix = Eigen::SparseMatrix<Scalar>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    SparseDirectSolver() = default;
    explicit SparseDirectSolver(const Matrix& a, const std::string& label = "system",
                                DirectSolverOptions options = {})
        : options_(options)
    {
        factor(a, label);
    }

    SparseDirectSolver(const SparseDirectSolver&) = delete;
    SparseDirectSolver& operator=(const SparseDirectSolver&) = delete;

    void factor(const Matrix& a, const std::string& label = "system")
    {
        if (a.rows() != a.cols()) {
            throw std::invalid_argument(label + ": matrix is not square");
        }
        label_ = label;
        matrix_ = a;
        matrix_.makeCompressed();
        auto& control = lu_.umfpackControl();
        switch (options_.ordering) {
        case FillOrdering::Automatic:
            control(UMFPACK_ORDERING) = UMFPACK_ORDERING_CHOLMOD;
            break;
        case FillOrdering::Amd:
            control(UMFPACK_ORDERING) = UMFPACK_ORDERING_AMD;
            break;
        case FillOrdering::Metis:
            control(UMFPACK_ORDERING) = UMFPACK_ORDERING_METIS;
            break;
        }
        control(UMFPACK_STRATEGY) = options_.symmetric_pattern ? UMFPACK_STRATEGY_SYMMETRIC : UMFPACK_STRATEGY_AUTO;
        control(UMFPACK_IRSTEP) = options_.refinement_steps;
        lu_.compute(matrix_);
        if (lu_.info() != Eigen::Success) {
            throw SolveError(label + ": sparse factorization failed (singular or numerically rank deficient)");
        }
        rows_ = a.rows();
        norm_ = 0.0;
        Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(rows_);
        for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k) {
            for (typename Matrix::InnerIterator it(matrix_, k); it; ++it) {
                row_sums[it.row()] += std::abs(it.value());
            }
        }
        if (rows_ > 0) {
            norm_ = row_sums.maxCoeff();
        }
    }

    [[nodiscard]] Vector solve(const Vector& b) const
    {
        if (b.size() != rows_) {
            throw std::invalid_argument(label_ + ": right-hand side has wrong length");
        }
        Vector x = lu_.solve(b);
        if (lu_.info() != Eigen::Success || !x.allFinite()) {
            throw SolveError(label_ + ": sparse solve failed");
        }
        // backward-error guard: a faulty BLAS underneath UMFPACK shows up here
        const double r = (b - matrix_ * x).cwiseAbs().maxCoeff();
        const double scale = norm_ * x.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff();
        if (r > residual_tolerance * scale) {
            throw SolveError(label_ + ": sparse solve is inaccurate (relative residual " +
                             std::to_string(scale > 0.0 ? r / scale : r) + "); check the BLAS library");
        }
        return x;
    }

    [[nodiscard]] Eigen::Index rows() const noexcept { return rows_; }

    static constexpr double residual_tolerance = 1e-9;

private:
    DirectSolverOptions options_;
    Matrix matrix_; // UMFPACK's solve reads the factored matrix again
    mutable Eigen::UmfPackLU<Matrix> lu_;
    Eigen::Index rows_ = 0;
    double norm_ = 0.0;
    std::string label_;
};

} // namespace evohom
