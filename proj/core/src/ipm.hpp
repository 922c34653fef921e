#pragma once

// Primal-dual interior point method for
//
//     minimize    1/2 x'Qx + c'x        (Q diagonal, Q >= 0)
//     subject to  rl <= A x <= ru
//                 xl <=  x  <= xu
//
// Rows get explicit slack variables w = Ax; the Newton step is computed from
// the quasidefinite augmented system
//
//     [ -(Q + Sx + rho)   A'            ] [dx]
//     [  A                Sw^-1 + delta ] [dy]
//
// factored by a sparse LDL' in a fill-reducing order. Mehrotra
// predictor-corrector with separate primal/dual step lengths for LPs.

#include <cstddef>
#include <vector>

namespace nvpax::detail {

struct QpProblem {
    int columns = 0;
    std::vector<double> q;  ///< diagonal Hessian, size columns (may be empty = 0)
    std::vector<double> c;
    std::vector<double> xl, xu;
    // CSR rows
    std::vector<int> row_start{0};
    std::vector<int> col;
    std::vector<double> val;
    std::vector<double> rl, ru;

    int rows() const noexcept { return static_cast<int>(rl.size()); }
    void add_row(const std::vector<int>& cols, const std::vector<double>& coefs, double lo, double hi);
};

struct IpmOptions {
    double tolerance = 1e-12;         ///< target relative residuals and gap
    double accept_tolerance = 1e-7;   ///< accepted if the target stalls
    int max_iterations = 150;
    bool verbose = false;             ///< per-iteration log on stderr
};

enum class IpmStatus { Optimal, Stalled, Diverged };

struct IpmResult {
    IpmStatus status = IpmStatus::Stalled;
    std::vector<double> x;
    std::vector<double> y;  ///< row multipliers (positive = lower side active)
    std::vector<double> z;  ///< reduced costs (zl - zu)
    int iterations = 0;
    bool polished = false;  ///< final point came from the active-set refinement
    double primal_residual = 0.0;  ///< relative, scaled problem
    double dual_residual = 0.0;
    double gap = 0.0;
};

IpmResult solve_ipm(const QpProblem& problem, const IpmOptions& options = {});

}  // namespace nvpax::detail
