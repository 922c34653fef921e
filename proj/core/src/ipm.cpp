#include "ipm.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace nvpax::detail {

void QpProblem::add_row(const std::vector<int>& cols, const std::vector<double>& coefs, double lo, double hi) {
    col.insert(col.end(), cols.begin(), cols.end());
    val.insert(val.end(), coefs.begin(), coefs.end());
    row_start.push_back(static_cast<int>(col.size()));
    rl.push_back(lo);
    ru.push_back(hi);
}

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vec = Eigen::VectorXd;

constexpr double kPrimalReg = 1e-10;
constexpr double kDualReg = 1e-10;
constexpr double kStepFraction = 0.995;

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

/// Column scaling from bound magnitudes, then row scaling to unit max-norm,
/// then a second pass for columns without finite bounds.
struct Scaling {
    std::vector<double> col;
    std::vector<double> row;
    double objective = 1.0;
};

Scaling compute_scaling(const QpProblem& p) {
    const int n = p.columns;
    const int m = p.rows();
    Scaling s;
    s.col.assign(static_cast<std::size_t>(n), 1.0);
    s.row.assign(static_cast<std::size_t>(m), 1.0);
    std::vector<char> bounded(static_cast<std::size_t>(n), 0);
    for (int j = 0; j < n; ++j) {
        double mag = 0.0;
        if (std::isfinite(p.xl[j])) mag = std::max(mag, std::abs(p.xl[j]));
        if (std::isfinite(p.xu[j])) mag = std::max(mag, std::abs(p.xu[j]));
        if (mag > 0.0) {
            s.col[j] = mag;
            bounded[j] = 1;
        }
    }
    auto row_pass = [&] {
        for (int i = 0; i < m; ++i) {
            double mx = 0.0;
            for (int k = p.row_start[i]; k < p.row_start[i + 1]; ++k) {
                mx = std::max(mx, std::abs(p.val[k]) * s.col[p.col[k]]);
            }
            s.row[i] = mx > 0.0 ? 1.0 / mx : 1.0;
        }
    };
    row_pass();
    std::vector<double> cmax(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < m; ++i) {
        for (int k = p.row_start[i]; k < p.row_start[i + 1]; ++k) {
            const int j = p.col[k];
            cmax[j] = std::max(cmax[j], std::abs(p.val[k]) * s.row[i] * s.col[j]);
        }
    }
    bool changed = false;
    for (int j = 0; j < n; ++j) {
        if (!bounded[j] && cmax[j] > 0.0) {
            s.col[j] /= cmax[j];
            changed = true;
        }
    }
    if (changed) {
        row_pass();
    }
    double omax = 0.0;
    for (int j = 0; j < n; ++j) {
        omax = std::max(omax, std::abs(p.c[j]) * s.col[j]);
        if (!p.q.empty()) {
            omax = std::max(omax, std::abs(p.q[j]) * s.col[j] * s.col[j]);
        }
    }
    s.objective = omax > 0.0 ? 1.0 / omax : 1.0;
    return s;
}

class InteriorPoint {
public:
    InteriorPoint(const QpProblem& p, const IpmOptions& opt) : opt_(opt) {
        scaling_ = compute_scaling(p);
        n_ = p.columns;
        m_ = p.rows();
        N_ = n_ + m_;
        has_q_ = false;

        lo_.resize(N_);
        hi_.resize(N_);
        q_.assign(static_cast<std::size_t>(n_), 0.0);
        c_.resize(n_);
        for (int j = 0; j < n_; ++j) {
            const double d = scaling_.col[j];
            lo_[j] = p.xl[j] / d;
            hi_[j] = p.xu[j] / d;
            c_[j] = p.c[j] * d * scaling_.objective;
            if (!p.q.empty()) {
                q_[j] = p.q[j] * d * d * scaling_.objective;
                has_q_ = has_q_ || q_[j] > 0.0;
            }
        }
        fixed_.assign(static_cast<std::size_t>(N_), 0);
        for (int i = 0; i < m_; ++i) {
            const double r = scaling_.row[i];
            lo_[n_ + i] = p.rl[i] * r;
            hi_[n_ + i] = p.ru[i] * r;
            if (p.rl[i] == p.ru[i]) {
                fixed_[n_ + i] = 1;
            }
        }
        row_start_ = p.row_start;
        col_ = p.col;
        val_.resize(p.val.size());
        for (int i = 0; i < m_; ++i) {
            for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) {
                val_[k] = p.val[k] * scaling_.row[i] * scaling_.col[col_[k]];
            }
        }
        has_l_.resize(N_);
        has_u_.resize(N_);
        for (int v = 0; v < N_; ++v) {
            has_l_[v] = !fixed_[v] && std::isfinite(lo_[v]);
            has_u_[v] = !fixed_[v] && std::isfinite(hi_[v]);
        }
        build_pattern();
    }

    IpmResult run() {
        initialize();
        Iterate best;
        double best_merit = std::numeric_limits<double>::infinity();
        int small_steps = 0;
        int last_improvement = 0;
        bool converged = false;
        bool diverged = false;

        for (int it = 0; it <= opt_.max_iterations; ++it) {
            residuals();
            double merit = std::max({pres_, dres_, gap_});
            if (!std::isfinite(pres_) || !std::isfinite(dres_) || !std::isfinite(gap_)) {
                merit = std::numeric_limits<double>::infinity();
            }
            if (opt_.verbose) {
                std::fprintf(stderr, "ipm %3d  pres %.3e  dres %.3e  gap %.3e  mu %.3e\n", it, pres_, dres_, gap_, mu_);
            }
            if (!std::isfinite(merit)) {
                break;
            }
            if (merit < 0.5 * best_merit) {
                last_improvement = it;
            }
            if (merit < best_merit) {
                best_merit = merit;
                best = save(it);
            }
            if (pres_ <= opt_.tolerance && dres_ <= opt_.tolerance && gap_ <= opt_.tolerance) {
                converged = true;
                break;
            }
            if (it == opt_.max_iterations || small_steps >= 5 || it - last_improvement > 30) {
                break;
            }
            if (diverging()) {
                diverged = true;
                break;
            }
            if (!factorize()) {
                break;
            }

            // Predictor.
            std::fill(tau_l_.begin(), tau_l_.end(), 0.0);
            std::fill(tau_u_.begin(), tau_u_.end(), 0.0);
            newton_direction();
            double ap = 0.0, ad = 0.0;
            step_lengths(ap, ad, 1.0);
            if (has_q_) ap = ad = std::min(ap, ad);
            double mu_aff = 0.0;
            for (int v = 0; v < N_; ++v) {
                if (has_l_[v]) mu_aff += (sl(v) + ap * dv_[v]) * (zl_[v] + ad * dzl_[v]);
                if (has_u_[v]) mu_aff += (su(v) - ap * dv_[v]) * (zu_[v] + ad * dzu_[v]);
            }
            mu_aff /= std::max(1, ncomp_);
            const double sigma = mu_ > 0.0 ? std::clamp(std::pow(mu_aff / mu_, 3.0), 0.0, 1.0) : 0.0;

            // Corrector with second-order term.
            for (int v = 0; v < N_; ++v) {
                if (has_l_[v]) tau_l_[v] = sigma * mu_ - dv_[v] * dzl_[v];
                if (has_u_[v]) tau_u_[v] = sigma * mu_ + dv_[v] * dzu_[v];
            }
            newton_direction();
            step_lengths(ap, ad, kStepFraction);
            if (has_q_) ap = ad = std::min(ap, ad);
            small_steps = (ap < 1e-8 && ad < 1e-8) ? small_steps + 1 : 0;

            for (int v = 0; v < N_; ++v) {
                if (!fixed_[v]) {
                    x_[v] += ap * dv_[v];
                }
                if (has_l_[v]) zl_[v] += ad * dzl_[v];
                if (has_u_[v]) zu_[v] += ad * dzu_[v];
            }
            for (int i = 0; i < m_; ++i) {
                y_[i] += ad * dy_[i];
            }
        }

        restore(best);
        IpmResult result = snapshot(best.iteration);
        if (diverged) {
            result.status = IpmStatus::Diverged;
        } else if (converged || best_merit <= opt_.accept_tolerance) {
            result.status = IpmStatus::Optimal;
            if (polish()) {
                const int iterations = result.iterations;
                result = snapshot(iterations);
                result.status = IpmStatus::Optimal;
                result.polished = true;
            }
        } else {
            result.status = IpmStatus::Stalled;
        }
        return result;
    }

private:
    struct Iterate {
        int iteration = 0;
        std::vector<double> x, y, zl, zu;
        double pres = 0.0, dres = 0.0, gap = 0.0;
    };

    Iterate save(int it) const { return {it, x_, y_, zl_, zu_, pres_, dres_, gap_}; }

    void restore(const Iterate& s) {
        if (s.x.empty()) return;
        x_ = s.x;
        y_ = s.y;
        zl_ = s.zl;
        zu_ = s.zu;
        pres_ = s.pres;
        dres_ = s.dres;
        gap_ = s.gap;
    }

    double sl(int v) const { return x_[v] - lo_[v]; }
    double su(int v) const { return hi_[v] - x_[v]; }

    /// Guesses the active set from the current iterate and solves the
    /// equality-constrained QP on it, correcting the guess from primal and
    /// dual sign violations for a few rounds. Kept only once the point is
    /// primal and dual feasible. Needs a positive Hessian on free columns.
    bool polish() {
        if (!has_q_) return false;
        std::vector<char> where(static_cast<std::size_t>(N_), kFree);
        for (int v = 0; v < N_; ++v) {
            const bool low = has_l_[v] && sl(v) < zl_[v];
            const bool up = has_u_[v] && su(v) < zu_[v];
            if (fixed_[v]) {
                where[v] = kAtLower;
            } else if (low && (!up || zl_[v] >= zu_[v])) {
                where[v] = kAtLower;
            } else if (up) {
                where[v] = kAtUpper;
            }
        }
        for (int round = 0; round < 25; ++round) {
            const int outcome = polish_round(where);
            if (outcome == 0) return true;
            if (outcome < 0) return false;
        }
        return false;
    }

    static constexpr char kFree = 0;
    static constexpr char kAtLower = 1;
    static constexpr char kAtUpper = 2;

    /// One equality-constrained solve on the active set `where`. Returns 0 and
    /// commits the point when it is optimal, 1 after updating `where` from the
    /// violations found, and -1 when the solve itself fails.
    int polish_round(std::vector<char>& where) {
        constexpr double kPrimalTol = 1e-9;
        constexpr double kDualTol = 1e-9;
        std::vector<int> xmap(static_cast<std::size_t>(n_), -1);
        int nf = 0;
        for (int j = 0; j < n_; ++j) {
            if (where[j] == kFree) {
                if (q_[j] <= 0.0) return -1;
                xmap[j] = nf++;
            }
        }
        std::vector<int> rmap(static_cast<std::size_t>(m_), -1);
        int ma = 0;
        for (int i = 0; i < m_; ++i) {
            if (where[n_ + i] != kFree) rmap[i] = nf + ma++;
        }
        const int dim = nf + ma;

        std::vector<double> x(static_cast<std::size_t>(n_));
        for (int j = 0; j < n_; ++j) {
            x[j] = where[j] == kAtLower ? lo_[j] : where[j] == kAtUpper ? hi_[j] : 0.0;
        }
        Vec sol = Vec::Zero(dim);
        if (dim > 0) {
            std::vector<Eigen::Triplet<double, int>> trip;
            Vec rhs = Vec::Zero(dim);
            for (int j = 0; j < n_; ++j) {
                if (xmap[j] >= 0) {
                    trip.emplace_back(xmap[j], xmap[j], -q_[j]);
                    rhs[xmap[j]] = c_[j];
                }
            }
            for (int i = 0; i < m_; ++i) {
                if (rmap[i] < 0) continue;
                const int v = n_ + i;
                double b = where[v] == kAtUpper ? hi_[v] : lo_[v];
                for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) {
                    const int j = col_[k];
                    if (xmap[j] >= 0) {
                        trip.emplace_back(rmap[i], xmap[j], val_[k]);
                    } else {
                        b -= val_[k] * x[j];
                    }
                }
                trip.emplace_back(rmap[i], rmap[i], kDualReg);
                rhs[rmap[i]] = b;
            }
            SpMat K(dim, dim);
            K.setFromTriplets(trip.begin(), trip.end());
            Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
            ldlt.compute(K);
            if (ldlt.info() != Eigen::Success) return -1;

            // Refine against the unregularized matrix.
            SpMat exact = K;
            for (int i = 0; i < ma; ++i) exact.coeffRef(nf + i, nf + i) = 0.0;
            SpMat full = exact.selfadjointView<Eigen::Lower>();
            sol = ldlt.solve(rhs);
            for (int pass = 0; pass < 10; ++pass) {
                Vec r = rhs - full * sol;
                if (r.lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) break;
                sol += ldlt.solve(r);
            }
            if (!sol.allFinite()) return -1;
        }

        bool changed = false;
        auto below = [&](double v, double b) { return v < b - kPrimalTol * (1.0 + std::abs(b)); };
        auto above = [&](double v, double b) { return v > b + kPrimalTol * (1.0 + std::abs(b)); };
        for (int j = 0; j < n_; ++j) {
            if (xmap[j] < 0) continue;
            x[j] = sol[xmap[j]];
            if (has_l_[j] && below(x[j], lo_[j])) {
                where[j] = kAtLower;
                changed = true;
            } else if (has_u_[j] && above(x[j], hi_[j])) {
                where[j] = kAtUpper;
                changed = true;
            }
        }
        std::vector<double> y(static_cast<std::size_t>(m_), 0.0);
        std::vector<double> w(static_cast<std::size_t>(m_), 0.0);
        std::vector<double> rc(static_cast<std::size_t>(n_));
        for (int j = 0; j < n_; ++j) rc[j] = q_[j] * x[j] + c_[j];
        for (int i = 0; i < m_; ++i) {
            const int v = n_ + i;
            double ax = 0.0;
            for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) ax += val_[k] * x[col_[k]];
            w[i] = ax;
            if (rmap[i] >= 0) {
                y[i] = sol[rmap[i]];
                for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) rc[col_[k]] -= val_[k] * y[i];
                if (!fixed_[v] && ((where[v] == kAtLower && y[i] < -kDualTol) || (where[v] == kAtUpper && y[i] > kDualTol))) {
                    where[v] = kFree;
                    changed = true;
                }
            } else if (std::isfinite(lo_[v]) && below(ax, lo_[v])) {
                where[v] = kAtLower;
                changed = true;
            } else if (std::isfinite(hi_[v]) && above(ax, hi_[v])) {
                where[v] = kAtUpper;
                changed = true;
            }
        }
        for (int j = 0; j < n_; ++j) {
            if ((where[j] == kAtLower && rc[j] < -kDualTol) || (where[j] == kAtUpper && rc[j] > kDualTol)) {
                where[j] = kFree;
                changed = true;
            }
        }
        if (changed) return 1;

        for (int j = 0; j < n_; ++j) {
            x_[j] = x[j];
            zl_[j] = where[j] == kAtLower ? rc[j] : 0.0;
            zu_[j] = where[j] == kAtUpper ? -rc[j] : 0.0;
        }
        for (int i = 0; i < m_; ++i) {
            const int v = n_ + i;
            x_[v] = fixed_[v] ? lo_[v] : w[i];
            y_[i] = y[i];
            zl_[v] = y[i] > 0.0 ? y[i] : 0.0;
            zu_[v] = y[i] < 0.0 ? -y[i] : 0.0;
        }
        return 0;
    }

    void build_pattern() {
        std::vector<Eigen::Triplet<double, int>> trip;
        trip.reserve(static_cast<std::size_t>(N_) + val_.size());
        for (int v = 0; v < N_; ++v) {
            trip.emplace_back(v, v, 0.0);
        }
        for (int i = 0; i < m_; ++i) {
            for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) {
                trip.emplace_back(n_ + i, col_[k], val_[k]);
            }
        }
        K_.resize(N_, N_);
        K_.setFromTriplets(trip.begin(), trip.end());
        K_.makeCompressed();
        diag_pos_.resize(N_);
        for (int v = 0; v < N_; ++v) {
            diag_pos_[v] = K_.outerIndexPtr()[v];
        }
        ldlt_.analyzePattern(K_);
    }

    void push_inside(int v) {
        const bool l = std::isfinite(lo_[v]);
        const bool u = std::isfinite(hi_[v]);
        double margin = 1.0;
        if (l && u) {
            margin = std::min(0.25 * (hi_[v] - lo_[v]), 1.0);
        }
        if (l) x_[v] = std::max(x_[v], lo_[v] + margin);
        if (u) x_[v] = std::min(x_[v], hi_[v] - margin);
    }

    void initialize() {
        x_.assign(static_cast<std::size_t>(N_), 0.0);
        for (int j = 0; j < n_; ++j) {
            push_inside(j);
        }
        for (int i = 0; i < m_; ++i) {
            double ax = 0.0;
            for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) {
                ax += val_[k] * x_[col_[k]];
            }
            const int v = n_ + i;
            if (fixed_[v]) {
                x_[v] = lo_[v];
            } else {
                x_[v] = ax;
                push_inside(v);
            }
        }
        y_.assign(static_cast<std::size_t>(m_), 0.0);
        zl_.assign(static_cast<std::size_t>(N_), 0.0);
        zu_.assign(static_cast<std::size_t>(N_), 0.0);
        ncomp_ = 0;
        for (int v = 0; v < N_; ++v) {
            if (has_l_[v]) {
                zl_[v] = 1.0;
                ++ncomp_;
            }
            if (has_u_[v]) {
                zu_[v] = 1.0;
                ++ncomp_;
            }
        }
        rd_.assign(static_cast<std::size_t>(N_), 0.0);
        rp_.assign(static_cast<std::size_t>(m_), 0.0);
        dv_.assign(static_cast<std::size_t>(N_), 0.0);
        dy_.assign(static_cast<std::size_t>(m_), 0.0);
        dzl_.assign(static_cast<std::size_t>(N_), 0.0);
        dzu_.assign(static_cast<std::size_t>(N_), 0.0);
        tau_l_.assign(static_cast<std::size_t>(N_), 0.0);
        tau_u_.assign(static_cast<std::size_t>(N_), 0.0);
        sigma_.assign(static_cast<std::size_t>(N_), 0.0);
        g_.assign(static_cast<std::size_t>(N_), 0.0);
    }

    void residuals() {
        // rd_x = Qx + c - A'y - zl + zu ; rd_w = y - zl + zu ; rp = Ax - w
        for (int j = 0; j < n_; ++j) {
            rd_[j] = q_[j] * x_[j] + c_[j] - zl_[j] + zu_[j];
        }
        double wmax = 0.0;
        for (int i = 0; i < m_; ++i) {
            double ax = 0.0;
            for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) {
                ax += val_[k] * x_[col_[k]];
                rd_[col_[k]] -= val_[k] * y_[i];
            }
            const int v = n_ + i;
            rp_[i] = ax - x_[v];
            wmax = std::max({wmax, std::abs(ax), std::abs(x_[v])});
            rd_[v] = fixed_[v] ? 0.0 : y_[i] - zl_[v] + zu_[v];
        }
        double comp = 0.0;
        for (int v = 0; v < N_; ++v) {
            if (has_l_[v]) comp += sl(v) * zl_[v];
            if (has_u_[v]) comp += su(v) * zu_[v];
        }
        mu_ = ncomp_ > 0 ? comp / ncomp_ : 0.0;
        double pobj = 0.0;
        double xmax = 0.0;
        for (int j = 0; j < n_; ++j) {
            pobj += 0.5 * q_[j] * x_[j] * x_[j] + c_[j] * x_[j];
            xmax = std::max(xmax, std::abs(x_[j]));
        }
        pres_ = inf_norm(rp_) / (1.0 + std::max(wmax, xmax));
        dres_ = inf_norm(rd_) / (1.0 + inf_norm(c_));
        gap_ = comp / (1.0 + std::abs(pobj));
    }

    bool diverging() const {
        return inf_norm(x_) > 1e12 || inf_norm(y_) > 1e13;
    }

    bool factorize() {
        double* values = K_.valuePtr();
        for (int v = 0; v < N_; ++v) {
            double s = 0.0;
            if (has_l_[v]) s += zl_[v] / sl(v);
            if (has_u_[v]) s += zu_[v] / su(v);
            sigma_[v] = s;
            if (v < n_) {
                values[diag_pos_[v]] = -(q_[v] + s + kPrimalReg);
            } else {
                values[diag_pos_[v]] = (fixed_[v] || s <= 0.0 ? 0.0 : 1.0 / s) + kDualReg;
            }
        }
        ldlt_.factorize(K_);
        return ldlt_.info() == Eigen::Success;
    }

    /// K_true * sol, where K_true drops the regularization.
    Vec apply_true(const Vec& sol) const {
        Vec out = Vec::Zero(N_);
        for (int j = 0; j < n_; ++j) {
            out[j] = -(q_[j] + sigma_[j]) * sol[j];
        }
        for (int i = 0; i < m_; ++i) {
            const int v = n_ + i;
            double acc = (fixed_[v] || sigma_[v] <= 0.0) ? 0.0 : sol[v] / sigma_[v];
            for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) {
                acc += val_[k] * sol[col_[k]];
                out[col_[k]] += val_[k] * sol[v];
            }
            out[v] = acc;
        }
        return out;
    }

    void newton_direction() {
        // g = -rd + (tau_l/sl - zl) - (tau_u/su - zu)
        for (int v = 0; v < N_; ++v) {
            double g = -rd_[v];
            if (has_l_[v]) g += tau_l_[v] / sl(v) - zl_[v];
            if (has_u_[v]) g -= tau_u_[v] / su(v) - zu_[v];
            g_[v] = g;
        }
        Vec rhs(N_);
        for (int j = 0; j < n_; ++j) {
            rhs[j] = -g_[j];
        }
        for (int i = 0; i < m_; ++i) {
            const int v = n_ + i;
            rhs[v] = -rp_[i];
            if (!fixed_[v] && sigma_[v] > 0.0) {
                rhs[v] += g_[v] / sigma_[v];
            }
        }
        Vec sol = ldlt_.solve(rhs);
        for (int pass = 0; pass < 3; ++pass) {
            Vec r = rhs - apply_true(sol);
            if (r.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) {
                break;
            }
            sol += ldlt_.solve(r);
        }
        for (int j = 0; j < n_; ++j) {
            dv_[j] = sol[j];
        }
        for (int i = 0; i < m_; ++i) {
            const int v = n_ + i;
            dy_[i] = sol[v];
            dv_[v] = (fixed_[v] || sigma_[v] <= 0.0) ? 0.0 : (g_[v] - dy_[i]) / sigma_[v];
        }
        for (int v = 0; v < N_; ++v) {
            if (has_l_[v]) dzl_[v] = (tau_l_[v] - sl(v) * zl_[v] - zl_[v] * dv_[v]) / sl(v);
            if (has_u_[v]) dzu_[v] = (tau_u_[v] - su(v) * zu_[v] + zu_[v] * dv_[v]) / su(v);
        }
    }

    void step_lengths(double& ap, double& ad, double fraction) const {
        double pmax = 1.0 / fraction;
        double dmax = 1.0 / fraction;
        for (int v = 0; v < N_; ++v) {
            if (has_l_[v] && dv_[v] < 0.0) pmax = std::min(pmax, -sl(v) / dv_[v]);
            if (has_u_[v] && dv_[v] > 0.0) pmax = std::min(pmax, su(v) / dv_[v]);
            if (has_l_[v] && dzl_[v] < 0.0) dmax = std::min(dmax, -zl_[v] / dzl_[v]);
            if (has_u_[v] && dzu_[v] < 0.0) dmax = std::min(dmax, -zu_[v] / dzu_[v]);
        }
        ap = std::min(1.0, fraction * pmax);
        ad = std::min(1.0, fraction * dmax);
    }

    IpmResult snapshot(int it) const {
        IpmResult r;
        r.iterations = it;
        r.primal_residual = pres_;
        r.dual_residual = dres_;
        r.gap = gap_;
        r.x.resize(static_cast<std::size_t>(n_));
        r.z.resize(static_cast<std::size_t>(n_));
        for (int j = 0; j < n_; ++j) {
            const double d = scaling_.col[j];
            r.x[j] = x_[j] * d;
            r.z[j] = (zl_[j] - zu_[j]) / (d * scaling_.objective);
        }
        r.y.resize(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i) {
            r.y[i] = y_[i] * scaling_.row[i] / scaling_.objective;
        }
        return r;
    }

    IpmOptions opt_;
    Scaling scaling_;
    int n_ = 0, m_ = 0, N_ = 0, ncomp_ = 0;
    bool has_q_ = false;
    std::vector<double> lo_, hi_, q_, c_;
    std::vector<char> fixed_, has_l_, has_u_;
    std::vector<int> row_start_, col_;
    std::vector<double> val_;

    std::vector<double> x_, y_, zl_, zu_;
    std::vector<double> rd_, rp_, dv_, dy_, dzl_, dzu_, tau_l_, tau_u_, sigma_, g_;
    double mu_ = 0.0, pres_ = 0.0, dres_ = 0.0, gap_ = 0.0;

    SpMat K_;
    std::vector<int> diag_pos_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

}  // namespace

IpmResult solve_ipm(const QpProblem& problem, const IpmOptions& options) {
    InteriorPoint ipm(problem, options);
    return ipm.run();
}

}  // namespace nvpax::detail
