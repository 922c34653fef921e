#include "nvpax/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nvpax/errors.hpp"

namespace nvpax {

void CompensatedSum::add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
        comp_ += (sum_ - t) + v;
    } else {
        comp_ += (v - t) + sum_;
    }
    sum_ = t;
}

ConstraintSystem::ConstraintSystem(std::vector<std::string> column_ids, std::vector<double> lower,
                                   std::vector<double> upper)
    : column_ids_(std::move(column_ids)),
      lower_(std::move(lower)),
      upper_(std::move(upper)),
      column_rows_(column_ids_.size()) {
    if (lower_.size() != column_ids_.size() || upper_.size() != column_ids_.size()) {
        throw Error("column bound vectors do not match column count");
    }
}

std::size_t ConstraintSystem::nonzeros() const noexcept {
    std::size_t nnz = 0;
    for (const auto& r : rows_) {
        nnz += r.columns.size();
    }
    return nnz;
}

void ConstraintSystem::add_row(ConstraintRow row) {
    if (row.columns.size() != row.coefficients.size()) {
        throw Error("row '" + row.tag.id + "' has mismatched column/coefficient lengths");
    }
    const int r = static_cast<int>(rows_.size());
    for (int c : row.columns) {
        if (c < 0 || static_cast<std::size_t>(c) >= column_ids_.size()) {
            throw Error("row '" + row.tag.id + "' references column out of range");
        }
        column_rows_[static_cast<std::size_t>(c)].push_back(r);
    }
    rows_.push_back(std::move(row));
}

double ConstraintSystem::row_activity(std::size_t r, std::span<const double> x) const {
    const auto& row = rows_.at(r);
    CompensatedSum sum;
    for (std::size_t k = 0; k < row.columns.size(); ++k) {
        sum.add(row.coefficients[k] * x[static_cast<std::size_t>(row.columns[k])]);
    }
    return sum.value();
}

std::string ConstraintSystem::to_text() const {
    std::ostringstream out;
    out.precision(12);
    out << "columns " << column_count() << " rows " << row_count() << " nnz " << nonzeros() << "\n";
    for (std::size_t c = 0; c < column_count(); ++c) {
        out << "  col " << column_ids_[c] << " [" << lower_[c] << ", " << upper_[c] << "]\n";
    }
    for (const auto& row : rows_) {
        const char* kind = row.tag.kind == RowKind::NodeCapacity   ? "node"
                           : row.tag.kind == RowKind::TenantBudget ? "tenant"
                                                                   : "generic";
        out << "  " << kind << " " << row.tag.id << ": " << row.lower << " <=";
        for (std::size_t k = 0; k < row.columns.size(); ++k) {
            out << (k ? " + " : " ");
            if (row.coefficients[k] != 1.0) {
                out << row.coefficients[k] << "*";
            }
            out << column_ids_[static_cast<std::size_t>(row.columns[k])];
        }
        out << " <= " << row.upper << "\n";
    }
    return out.str();
}

ConstraintSystem build_constraints(const PdnTopology& topology) {
    std::vector<std::string> ids;
    std::vector<double> lo;
    std::vector<double> hi;
    for (const auto& d : topology.devices()) {
        ids.push_back(d.id);
        lo.push_back(d.lower);
        hi.push_back(d.upper);
    }
    ConstraintSystem system(std::move(ids), std::move(lo), std::move(hi));

    for (std::size_t j = 0; j < topology.node_count(); ++j) {
        const auto& node = topology.node(j);
        ConstraintRow row;
        row.columns = topology.subtree_devices(j);
        row.coefficients.assign(row.columns.size(), 1.0);
        row.upper = node.capacity;
        row.tag = {RowKind::NodeCapacity, node.id};
        system.add_row(std::move(row));
    }
    for (const auto& tenant : topology.tenants()) {
        if (tenant.b_min <= 0.0 && !std::isfinite(tenant.b_max)) {
            continue;
        }
        ConstraintRow row;
        row.columns = tenant.devices;
        row.coefficients.assign(row.columns.size(), 1.0);
        row.lower = tenant.b_min > 0.0 ? tenant.b_min : -kInfinity;
        row.upper = tenant.b_max;
        row.tag = {RowKind::TenantBudget, tenant.id};
        system.add_row(std::move(row));
    }
    return system;
}

std::vector<FeasibilityIssue> check_necessary_feasibility(const PdnTopology& topology) {
    std::vector<FeasibilityIssue> issues;
    std::vector<double> min_load(topology.node_count(), 0.0);
    for (int j : topology.post_order()) {
        const auto& node = topology.node(static_cast<std::size_t>(j));
        double load = 0.0;
        for (int d : node.devices) {
            load += topology.device(static_cast<std::size_t>(d)).lower;
        }
        for (int c : node.children) {
            load += min_load[static_cast<std::size_t>(c)];
        }
        min_load[static_cast<std::size_t>(j)] = load;
        if (load > node.capacity) {
            issues.push_back({{RowKind::NodeCapacity, node.id},
                              "minimum load exceeds capacity at node '" + node.id + "'", load, node.capacity});
        }
    }
    for (const auto& tenant : topology.tenants()) {
        double lo = 0.0;
        double hi = 0.0;
        for (int d : tenant.devices) {
            lo += topology.device(static_cast<std::size_t>(d)).lower;
            hi += topology.device(static_cast<std::size_t>(d)).upper;
        }
        if (tenant.b_min > hi) {
            issues.push_back({{RowKind::TenantBudget, tenant.id},
                              "tenant minimum exceeds device maximums for '" + tenant.id + "'", tenant.b_min, hi});
        }
        if (tenant.b_max < lo) {
            issues.push_back({{RowKind::TenantBudget, tenant.id},
                              "tenant maximum below device minimums for '" + tenant.id + "'", lo, tenant.b_max});
        }
    }
    return issues;
}

double FeasibilityTolerance::at(double bound) const noexcept {
    return std::max(absolute, relative * std::abs(bound));
}

std::string_view to_string(ViolationKind kind) noexcept {
    switch (kind) {
        case ViolationKind::DeviceLower: return "device lower limit";
        case ViolationKind::DeviceUpper: return "device upper limit";
        case ViolationKind::NodeCapacity: return "node capacity";
        case ViolationKind::TenantMinimum: return "tenant minimum";
        case ViolationKind::TenantMaximum: return "tenant maximum";
    }
    return "unknown";
}

std::vector<Violation> verify_allocation(std::span<const double> allocation, const PdnTopology& topology,
                                         FeasibilityTolerance tolerance) {
    if (allocation.size() != topology.device_count()) {
        throw TopologyError("allocation covers " + std::to_string(allocation.size()) + " devices, topology has " +
                            std::to_string(topology.device_count()));
    }
    std::vector<Violation> out;
    for (std::size_t i = 0; i < allocation.size(); ++i) {
        const auto& d = topology.device(i);
        const double a = allocation[i];
        if (!std::isfinite(a) || d.lower - a > tolerance.at(d.lower)) {
            out.push_back({ViolationKind::DeviceLower, d.id, a, d.lower, d.lower - a});
        }
        if (a - d.upper > tolerance.at(d.upper)) {
            out.push_back({ViolationKind::DeviceUpper, d.id, a, d.upper, a - d.upper});
        }
    }

    std::vector<CompensatedSum> sums(topology.node_count());
    for (int j : topology.post_order()) {
        const auto& node = topology.node(static_cast<std::size_t>(j));
        auto& sum = sums[static_cast<std::size_t>(j)];
        for (int d : node.devices) {
            sum.add(allocation[static_cast<std::size_t>(d)]);
        }
        for (int c : node.children) {
            sum.add(sums[static_cast<std::size_t>(c)].value());
        }
    }
    for (std::size_t j = 0; j < topology.node_count(); ++j) {
        const auto& node = topology.node(j);
        const double load = sums[j].value();
        if (load - node.capacity > tolerance.at(node.capacity)) {
            out.push_back({ViolationKind::NodeCapacity, node.id, load, node.capacity, load - node.capacity});
        }
    }

    for (const auto& tenant : topology.tenants()) {
        CompensatedSum sum;
        for (int d : tenant.devices) {
            sum.add(allocation[static_cast<std::size_t>(d)]);
        }
        const double load = sum.value();
        if (tenant.b_min - load > tolerance.at(tenant.b_min)) {
            out.push_back({ViolationKind::TenantMinimum, tenant.id, load, tenant.b_min, tenant.b_min - load});
        }
        if (std::isfinite(tenant.b_max) && load - tenant.b_max > tolerance.at(tenant.b_max)) {
            out.push_back({ViolationKind::TenantMaximum, tenant.id, load, tenant.b_max, load - tenant.b_max});
        }
    }
    return out;
}

std::vector<Violation> verify_allocation(const std::map<std::string, double>& allocation,
                                         const PdnTopology& topology, FeasibilityTolerance tolerance) {
    std::vector<double> dense(topology.device_count(), std::numeric_limits<double>::quiet_NaN());
    for (const auto& [id, value] : allocation) {
        dense[topology.device_index(id)] = value;
    }
    for (std::size_t i = 0; i < dense.size(); ++i) {
        if (std::isnan(dense[i])) {
            throw TopologyError("allocation is missing device '" + topology.device(i).id + "'");
        }
    }
    return verify_allocation(std::span<const double>(dense), topology, tolerance);
}

}  // namespace nvpax
