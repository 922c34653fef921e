#pragma once

// Sparse linear inequality system over device allocations: device bounds as
// column bounds, one capacity row per PDN node, one budget row per tenant.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nvpax/pdn.hpp"

namespace nvpax {

enum class RowKind { NodeCapacity, TenantBudget, Generic };

struct RowTag {
    RowKind kind = RowKind::Generic;
    std::string id;
};

/// lower <= sum_k coefficients[k] * x[columns[k]] <= upper
struct ConstraintRow {
    std::vector<int> columns;
    std::vector<double> coefficients;
    double lower = -kInfinity;
    double upper = kInfinity;
    RowTag tag;
};

class ConstraintSystem {
public:
    ConstraintSystem() = default;
    ConstraintSystem(std::vector<std::string> column_ids, std::vector<double> lower, std::vector<double> upper);

    std::size_t column_count() const noexcept { return column_ids_.size(); }
    std::size_t row_count() const noexcept { return rows_.size(); }
    std::size_t nonzeros() const noexcept;

    std::span<const std::string> column_ids() const noexcept { return column_ids_; }
    std::span<const double> column_lower() const noexcept { return lower_; }
    std::span<const double> column_upper() const noexcept { return upper_; }
    std::span<const ConstraintRow> rows() const noexcept { return rows_; }
    const ConstraintRow& row(std::size_t r) const { return rows_.at(r); }

    /// Row indices touching column c (ascending).
    std::span<const int> column_rows(std::size_t c) const { return column_rows_.at(c); }

    /// Appends a row. Generic rows with arbitrary coefficients are accepted
    /// here as an extension point; build_constraints() never emits them.
    void add_row(ConstraintRow row);

    /// Activity of row r at point x, with compensated summation.
    double row_activity(std::size_t r, std::span<const double> x) const;

    /// Plain-text dump, one row per line.
    std::string to_text() const;

private:
    std::vector<std::string> column_ids_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<ConstraintRow> rows_;
    std::vector<std::vector<int>> column_rows_;
};

/// One row per PDN node (upper bound C_j) plus one per tenant with a finite
/// bound. Columns follow the topology's device order.
ConstraintSystem build_constraints(const PdnTopology& topology);

struct FeasibilityIssue {
    RowTag tag;
    std::string message;
    double required = 0.0;  ///< the aggregate that cannot fit
    double limit = 0.0;
};

/// Necessary (not sufficient) feasibility conditions: minimum load of every
/// node fits its capacity, and every tenant budget is reachable from device
/// bounds. Violations are returned as data.
std::vector<FeasibilityIssue> check_necessary_feasibility(const PdnTopology& topology);

/// Violation threshold for a bound b: max(absolute, relative * |b|).
struct FeasibilityTolerance {
    double absolute = 1e-6;
    double relative = 1e-9;

    double at(double bound) const noexcept;
};

enum class ViolationKind { DeviceLower, DeviceUpper, NodeCapacity, TenantMinimum, TenantMaximum };

std::string_view to_string(ViolationKind kind) noexcept;

struct Violation {
    ViolationKind kind;
    std::string subject;  ///< device, node or tenant id
    double value = 0.0;
    double bound = 0.0;
    double excess = 0.0;  ///< always positive
};

/// Every device bound, node capacity and tenant budget violated by more than
/// the tolerance. `allocation` is aligned with the topology's device order.
std::vector<Violation> verify_allocation(std::span<const double> allocation, const PdnTopology& topology,
                                         FeasibilityTolerance tolerance = {});

/// Id-keyed variant. Throws TopologyError on unknown or missing device ids.
std::vector<Violation> verify_allocation(const std::map<std::string, double>& allocation,
                                         const PdnTopology& topology, FeasibilityTolerance tolerance = {});

/// Compensated (Neumaier) running sum.
class CompensatedSum {
public:
    void add(double v) noexcept;
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace nvpax
