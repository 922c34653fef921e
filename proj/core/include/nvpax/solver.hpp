#pragma once

// LP/QP solves over a ConstraintSystem. Backed by a sparse primal-dual
// interior point method; fixed columns and redundant rows are removed before
// the solve. A solve that fails to converge is followed by an elastic
// feasibility LP that separates infeasible instances from numerical trouble.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nvpax/constraints.hpp"

namespace nvpax {

enum class SolveStatus { Optimal, Infeasible, NumericalFailure };

std::string_view to_string(SolveStatus status) noexcept;

enum class Sense { Minimize, Maximize };

struct SolverOptions {
    double tolerance = 1e-12;        ///< relative KKT target
    double accept_tolerance = 1e-7;  ///< fallback acceptance when progress stalls
    int max_iterations = 200;
    bool verbose = false;  ///< per-iteration solver log on stderr
};

/// Pins column `column` to `value` for this solve only.
struct FixedColumn {
    int column = 0;
    double value = 0.0;
};

/// One scalar variable appended after the system columns.
struct AuxColumn {
    double lower = -kInfinity;
    double upper = kInfinity;
    double cost = 0.0;
};

/// lower <= sum_k coefficients[k] * x[columns[k]] + aux_coefficient * t <= upper
struct ExtraRow {
    std::vector<int> columns;
    std::vector<double> coefficients;
    double aux_coefficient = 0.0;
    double lower = -kInfinity;
    double upper = kInfinity;
};

struct LinearProgram {
    Sense sense = Sense::Minimize;
    std::vector<double> cost;  ///< per system column; empty means zero
    /// Per system column lower bounds, applied on top of the system bounds; empty means none.
    std::vector<double> lower;
    std::optional<AuxColumn> aux;
    std::vector<ExtraRow> extra_rows;
    std::vector<FixedColumn> fixed;
};

/// minimize sum_i quadratic[i] * x_i^2 + linear[i] * x_i, quadratic >= 0.
struct QuadraticProgram {
    std::vector<double> quadratic;
    std::vector<double> linear;
    std::vector<FixedColumn> fixed;
};

struct SolveResult {
    SolveStatus status = SolveStatus::NumericalFailure;
    std::vector<double> point;  ///< system columns, clamped into column bounds
    double aux = 0.0;
    double objective = 0.0;
    int iterations = 0;
    double wall_ms = 0.0;
    double max_row_violation = 0.0;  ///< absolute, at the returned point
    std::string message;

    bool ok() const noexcept { return status == SolveStatus::Optimal; }
};

SolveResult solve_lp(const ConstraintSystem& system, const LinearProgram& program, const SolverOptions& options = {});
SolveResult solve_qp(const ConstraintSystem& system, const QuadraticProgram& program,
                     const SolverOptions& options = {});

}  // namespace nvpax
