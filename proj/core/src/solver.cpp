#include "nvpax/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "ipm.hpp"
#include "nvpax/errors.hpp"

namespace nvpax {

std::string_view to_string(SolveStatus status) noexcept {
    switch (status) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::NumericalFailure: return "numerical failure";
    }
    return "unknown";
}

namespace {

struct Row {
    std::vector<int> cols;  ///< full column space (aux = last column)
    std::vector<double> coefs;
    double lo = -kInfinity;
    double hi = kInfinity;
    std::string label;
};

/// Problem in the full column space: system columns then the optional aux.
/// Objective is 1/2 x'Qx + c'x with Q diagonal.
struct Model {
    int n = 0;
    std::vector<double> lo, hi, q, c;
    std::vector<Row> rows;
};

std::string row_label(const RowTag& tag) {
    switch (tag.kind) {
        case RowKind::NodeCapacity: return "node capacity '" + tag.id + "'";
        case RowKind::TenantBudget: return "tenant budget '" + tag.id + "'";
        case RowKind::Generic: break;
    }
    return "row '" + tag.id + "'";
}

Model base_model(const ConstraintSystem& system, int extra_columns, const std::vector<FixedColumn>& fixed,
                 const std::vector<double>& lower = {}) {
    Model m;
    const int n = static_cast<int>(system.column_count());
    m.n = n + extra_columns;
    m.lo.assign(system.column_lower().begin(), system.column_lower().end());
    m.hi.assign(system.column_upper().begin(), system.column_upper().end());
    m.lo.resize(static_cast<std::size_t>(m.n), -kInfinity);
    m.hi.resize(static_cast<std::size_t>(m.n), kInfinity);
    m.q.assign(static_cast<std::size_t>(m.n), 0.0);
    m.c.assign(static_cast<std::size_t>(m.n), 0.0);
    if (!lower.empty()) {
        if (lower.size() != static_cast<std::size_t>(n)) throw Error("lower bound override size mismatch");
        for (int j = 0; j < n; ++j) m.lo[j] = std::max(m.lo[j], lower[j]);
    }
    for (const auto& f : fixed) {
        if (f.column < 0 || f.column >= n) {
            throw Error("fixed column index out of range");
        }
        m.lo[f.column] = f.value;
        m.hi[f.column] = f.value;
    }
    for (const auto& r : system.rows()) {
        m.rows.push_back({r.columns, r.coefficients, r.lower, r.upper, row_label(r.tag)});
    }
    return m;
}

double bound_scale(double lo, double hi) {
    double s = 0.0;
    if (std::isfinite(lo)) s = std::max(s, std::abs(lo));
    if (std::isfinite(hi)) s = std::max(s, std::abs(hi));
    return s;
}

std::string describe_unreachable(const Row& row, double lo, double hi, double min_act, double max_act) {
    std::ostringstream msg;
    msg.precision(10);
    if (lo > max_act) {
        msg << row.label << " needs at least " << lo << " but the free columns reach at most " << max_act;
    } else {
        msg << row.label << " allows at most " << hi << " but the free columns need at least " << min_act;
    }
    return msg.str();
}

struct Presolved {
    bool infeasible = false;
    std::string message;
    std::vector<int> to_reduced;  ///< -1 for fixed columns
    std::vector<int> to_full;
    std::vector<double> value;    ///< values of fixed columns
    std::vector<int> kept_rows;
    std::vector<double> row_lo, row_hi;  ///< bounds net of fixed columns
};

/// Removes fixed columns, fixes columns forced by tight rows, drops redundant
/// rows, and reports rows that column bounds alone make unreachable.
Presolved presolve(Model& model) {
    Presolved p;
    const FeasibilityTolerance tol;
    for (int j = 0; j < model.n; ++j) {
        if (model.lo[j] > model.hi[j]) {
            if (model.lo[j] - model.hi[j] > tol.at(bound_scale(model.lo[j], model.hi[j]))) {
                p.infeasible = true;
                p.message = "column " + std::to_string(j) + " has lower bound above upper bound";
                return p;
            }
            model.hi[j] = model.lo[j];
        }
    }
    // Columns narrower than this are fixed at their lower bound.
    auto narrow = [](double lo, double hi) {
        return std::isfinite(hi) && hi - lo <= 1e-11 * std::max(1.0, std::abs(hi));
    };
    std::vector<char> fixed(static_cast<std::size_t>(model.n));
    for (int j = 0; j < model.n; ++j) {
        if (narrow(model.lo[j], model.hi[j])) {
            model.hi[j] = model.lo[j];
            fixed[j] = 1;
        }
    }
    const std::size_t m = model.rows.size();
    std::vector<char> done(m, 0);
    std::vector<double> row_lo(m), row_hi(m);

    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t r = 0; r < m; ++r) {
            if (done[r]) continue;
            const Row& row = model.rows[r];
            CompensatedSum fixed_part, min_sum, max_sum;
            int free_count = 0;
            for (std::size_t k = 0; k < row.cols.size(); ++k) {
                const int j = row.cols[k];
                const double a = row.coefs[k];
                if (a == 0.0) continue;
                if (fixed[j]) {
                    fixed_part.add(a * model.lo[j]);
                    continue;
                }
                ++free_count;
                min_sum.add(a > 0 ? a * model.lo[j] : a * model.hi[j]);
                max_sum.add(a > 0 ? a * model.hi[j] : a * model.lo[j]);
            }
            const double min_act = min_sum.value();
            const double max_act = max_sum.value();
            const double lo = row.lo - fixed_part.value();
            const double hi = row.hi - fixed_part.value();
            const double t = tol.at(bound_scale(row.lo, row.hi));
            if (lo - max_act > t || min_act - hi > t) {
                p.infeasible = true;
                p.message = describe_unreachable(row, lo, hi, min_act, max_act);
                return p;
            }
            if (free_count == 0 || (lo <= min_act && hi >= max_act)) {
                done[r] = 1;
                continue;
            }
            if (free_count == 1) {
                // Singleton row: fold into the column bounds.
                std::size_t k = 0;
                while (row.coefs[k] == 0.0 || fixed[row.cols[k]]) ++k;
                const int j = row.cols[k];
                const double a = row.coefs[k];
                double clo = model.lo[j], chi = model.hi[j];
                if (std::isfinite(lo)) (a > 0 ? clo : chi) = a > 0 ? std::max(clo, lo / a) : std::min(chi, lo / a);
                if (std::isfinite(hi)) (a > 0 ? chi : clo) = a > 0 ? std::min(chi, hi / a) : std::max(clo, hi / a);
                if (clo >= chi) {
                    clo = chi = std::clamp(0.5 * (clo + chi), model.lo[j], model.hi[j]);
                    fixed[j] = 1;
                } else if (narrow(clo, chi)) {
                    chi = clo;
                    fixed[j] = 1;
                }
                model.lo[j] = clo;
                model.hi[j] = chi;
                done[r] = 1;
                changed = true;
                continue;
            }
            const bool force_max = std::isfinite(max_act) && lo >= max_act - t;
            const bool force_min = std::isfinite(min_act) && hi <= min_act + t;
            if (force_max || force_min) {
                for (std::size_t k = 0; k < row.cols.size(); ++k) {
                    const int j = row.cols[k];
                    const double a = row.coefs[k];
                    if (a == 0.0 || fixed[j]) continue;
                    const double v = ((a > 0) == force_max) ? model.hi[j] : model.lo[j];
                    model.lo[j] = model.hi[j] = v;
                    fixed[j] = 1;
                }
                done[r] = 1;
                changed = true;
                continue;
            }
            row_lo[r] = lo <= min_act ? -kInfinity : lo;
            row_hi[r] = hi >= max_act ? kInfinity : hi;
        }
    }
    p.to_reduced.assign(static_cast<std::size_t>(model.n), -1);
    p.value.assign(static_cast<std::size_t>(model.n), 0.0);
    for (int j = 0; j < model.n; ++j) {
        if (fixed[j]) {
            p.value[j] = model.lo[j];
        } else {
            p.to_reduced[j] = static_cast<int>(p.to_full.size());
            p.to_full.push_back(j);
        }
    }
    for (std::size_t r = 0; r < m; ++r) {
        if (!done[r]) {
            p.kept_rows.push_back(static_cast<int>(r));
            p.row_lo.push_back(row_lo[r]);
            p.row_hi.push_back(row_hi[r]);
        }
    }
    return p;
}

detail::QpProblem reduced_problem(const Model& model, const Presolved& p) {
    detail::QpProblem qp;
    qp.columns = static_cast<int>(p.to_full.size());
    qp.q.resize(qp.columns);
    qp.c.resize(qp.columns);
    qp.xl.resize(qp.columns);
    qp.xu.resize(qp.columns);
    for (int k = 0; k < qp.columns; ++k) {
        const int j = p.to_full[k];
        qp.q[k] = model.q[j];
        qp.c[k] = model.c[j];
        qp.xl[k] = model.lo[j];
        qp.xu[k] = model.hi[j];
    }
    std::vector<int> cols;
    std::vector<double> coefs;
    for (std::size_t i = 0; i < p.kept_rows.size(); ++i) {
        const Row& row = model.rows[static_cast<std::size_t>(p.kept_rows[i])];
        cols.clear();
        coefs.clear();
        for (std::size_t k = 0; k < row.cols.size(); ++k) {
            const int red = p.to_reduced[row.cols[k]];
            if (red >= 0 && row.coefs[k] != 0.0) {
                cols.push_back(red);
                coefs.push_back(row.coefs[k]);
            }
        }
        // Fixed columns may have appeared after this row's bounds were netted.
        CompensatedSum late_fixed;
        for (std::size_t k = 0; k < row.cols.size(); ++k) {
            if (p.to_reduced[row.cols[k]] < 0) {
                late_fixed.add(row.coefs[k] * p.value[row.cols[k]]);
            }
        }
        const double shift = late_fixed.value();
        const double lo = std::isfinite(p.row_lo[i]) ? row.lo - shift : -kInfinity;
        const double hi = std::isfinite(p.row_hi[i]) ? row.hi - shift : kInfinity;
        qp.add_row(cols, coefs, lo, hi);
    }
    return qp;
}

double max_row_violation(const Model& model, const std::vector<double>& x) {
    double worst = 0.0;
    for (const Row& row : model.rows) {
        CompensatedSum s;
        for (std::size_t k = 0; k < row.cols.size(); ++k) {
            s.add(row.coefs[k] * x[row.cols[k]]);
        }
        const double v = s.value();
        worst = std::max({worst, row.lo - v, v - row.hi});
    }
    return worst;
}

bool rows_within_tolerance(const Model& model, const std::vector<double>& x) {
    const FeasibilityTolerance tol;
    for (const Row& row : model.rows) {
        CompensatedSum s;
        for (std::size_t k = 0; k < row.cols.size(); ++k) {
            s.add(row.coefs[k] * x[row.cols[k]]);
        }
        const double v = s.value();
        if (row.lo - v > tol.at(row.lo) || v - row.hi > tol.at(row.hi)) {
            return false;
        }
    }
    return true;
}

/// Minimizes the bound-scaled total row violation over the column box. Returns
/// a description of the violated rows, or an empty string when every row can
/// be met (the original failure was then numerical).
std::optional<std::string> elastic_check(const Model& model, const SolverOptions& options) {
    detail::QpProblem qp;
    const int n = model.n;
    const int m = static_cast<int>(model.rows.size());
    qp.columns = n + 2 * m;
    qp.c.assign(static_cast<std::size_t>(qp.columns), 0.0);
    qp.xl = model.lo;
    qp.xu = model.hi;
    qp.xl.resize(static_cast<std::size_t>(qp.columns), 0.0);
    qp.xu.resize(static_cast<std::size_t>(qp.columns), kInfinity);
    for (int j = 0; j < n; ++j) {
        // Unbounded columns cannot make a box-feasible row infeasible; cap them
        // so the elastic problem stays bounded.
        if (!std::isfinite(qp.xl[j])) qp.xl[j] = -1e12;
        if (!std::isfinite(qp.xu[j])) qp.xu[j] = 1e12;
    }
    for (int r = 0; r < m; ++r) {
        const Row& row = model.rows[static_cast<std::size_t>(r)];
        const double scale = std::max(1.0, bound_scale(row.lo, row.hi));
        qp.c[n + 2 * r] = 1.0 / scale;
        qp.c[n + 2 * r + 1] = 1.0 / scale;
        std::vector<int> cols = row.cols;
        std::vector<double> coefs = row.coefs;
        cols.push_back(n + 2 * r);
        coefs.push_back(1.0);
        cols.push_back(n + 2 * r + 1);
        coefs.push_back(-1.0);
        qp.add_row(cols, coefs, row.lo, row.hi);
    }
    detail::IpmOptions io{options.tolerance, options.accept_tolerance, options.max_iterations, options.verbose};
    const auto res = detail::solve_ipm(qp, io);
    if (res.status != detail::IpmStatus::Optimal) {
        return std::nullopt;
    }
    const FeasibilityTolerance tol;
    std::ostringstream msg;
    msg.precision(10);
    bool any = false;
    for (int r = 0; r < m; ++r) {
        const Row& row = model.rows[static_cast<std::size_t>(r)];
        const double excess = res.x[n + 2 * r] + res.x[n + 2 * r + 1];
        if (excess > tol.at(bound_scale(row.lo, row.hi))) {
            msg << (any ? "; " : "") << row.label << " violated by at least " << excess;
            any = true;
        }
    }
    return any ? msg.str() : std::string();
}

SolveResult solve_model(Model model, const SolverOptions& options, int system_columns) {
    const auto start = std::chrono::steady_clock::now();
    SolveResult result;
    auto finish = [&](SolveResult& r) {
        r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        return r;
    };
    const Model original = model;
    Presolved p = presolve(model);
    if (p.infeasible) {
        result.status = SolveStatus::Infeasible;
        result.message = p.message;
        return finish(result);
    }

    std::vector<double> x = p.value;
    if (!p.to_full.empty()) {
        const auto qp = reduced_problem(model, p);
        detail::IpmOptions io{options.tolerance, options.accept_tolerance, options.max_iterations, options.verbose};
        const auto res = detail::solve_ipm(qp, io);
        result.iterations = res.iterations;
        if (res.status != detail::IpmStatus::Optimal) {
            const auto elastic = elastic_check(original, options);
            if (elastic && !elastic->empty()) {
                result.status = SolveStatus::Infeasible;
                result.message = *elastic;
            } else {
                result.status = SolveStatus::NumericalFailure;
                std::ostringstream msg;
                msg << "interior point method did not converge (primal " << res.primal_residual << ", dual "
                    << res.dual_residual << ", gap " << res.gap << ")";
                result.message = msg.str();
            }
            return finish(result);
        }
        for (int k = 0; k < qp.columns; ++k) {
            const int j = p.to_full[k];
            x[j] = std::clamp(res.x[k], original.lo[j], original.hi[j]);
        }
    }
    result.max_row_violation = max_row_violation(original, x);
    if (!rows_within_tolerance(original, x)) {
        result.status = SolveStatus::NumericalFailure;
        std::ostringstream msg;
        msg << "solution violates a row by " << result.max_row_violation;
        result.message = msg.str();
        return finish(result);
    }
    CompensatedSum obj;
    for (int j = 0; j < original.n; ++j) {
        obj.add(0.5 * original.q[j] * x[j] * x[j] + original.c[j] * x[j]);
    }
    result.objective = obj.value();
    result.status = SolveStatus::Optimal;
    result.point.assign(x.begin(), x.begin() + system_columns);
    if (original.n > system_columns) {
        result.aux = x[system_columns];
    }
    return finish(result);
}

}  // namespace

SolveResult solve_lp(const ConstraintSystem& system, const LinearProgram& program, const SolverOptions& options) {
    const int n = static_cast<int>(system.column_count());
    const bool aux = program.aux.has_value();
    if (!program.cost.empty() && program.cost.size() != system.column_count()) {
        throw Error("LP cost vector does not match column count");
    }
    Model m = base_model(system, aux ? 1 : 0, program.fixed, program.lower);
    const double sign = program.sense == Sense::Maximize ? -1.0 : 1.0;
    for (int j = 0; j < n && !program.cost.empty(); ++j) {
        m.c[j] = sign * program.cost[j];
    }
    if (aux) {
        m.lo[n] = program.aux->lower;
        m.hi[n] = program.aux->upper;
        m.c[n] = sign * program.aux->cost;
    }
    for (std::size_t r = 0; r < program.extra_rows.size(); ++r) {
        const auto& e = program.extra_rows[r];
        if (e.columns.size() != e.coefficients.size()) {
            throw Error("extra row has mismatched column/coefficient lengths");
        }
        Row row{e.columns, e.coefficients, e.lower, e.upper, "extra row " + std::to_string(r)};
        for (int c : row.cols) {
            if (c < 0 || c >= n) throw Error("extra row references column out of range");
        }
        if (e.aux_coefficient != 0.0) {
            if (!aux) throw Error("extra row uses the aux column but none is declared");
            row.cols.push_back(n);
            row.coefs.push_back(e.aux_coefficient);
        }
        m.rows.push_back(std::move(row));
    }
    auto result = solve_model(std::move(m), options, n);
    result.objective *= sign;
    return result;
}

SolveResult solve_qp(const ConstraintSystem& system, const QuadraticProgram& program, const SolverOptions& options) {
    const std::size_t n = system.column_count();
    if ((!program.quadratic.empty() && program.quadratic.size() != n) ||
        (!program.linear.empty() && program.linear.size() != n)) {
        throw Error("QP objective vectors do not match column count");
    }
    Model m = base_model(system, 0, program.fixed);
    for (std::size_t j = 0; j < n; ++j) {
        if (!program.quadratic.empty()) {
            if (program.quadratic[j] < 0.0) throw Error("QP quadratic coefficients must be non-negative");
            m.q[j] = 2.0 * program.quadratic[j];
        }
        if (!program.linear.empty()) m.c[j] = program.linear[j];
    }
    return solve_model(std::move(m), options, static_cast<int>(n));
}

}  // namespace nvpax
