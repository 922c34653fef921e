#pragma once

// Comparison policies: static equal share and greedy hierarchical
// proportional sharing. Neither is aware of tenant budgets.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nvpax/allocator.hpp"
#include "nvpax/pdn.hpp"

namespace nvpax {

/// a_i = clamp(C_root / n, l_i, u_i). Unused power is not redistributed and
/// the result is not repaired against node capacities. Throws Error for n = 0.
std::vector<double> static_alloc(const PdnTopology& topology);

/// Per-node aggregates of the greedy allocator, indexed like topology nodes.
struct GreedyNodeAggregates {
    std::vector<double> min_load;      ///< L_v: sum of device minimums in the subtree
    std::vector<double> extra_demand;  ///< E_v: sum of d_i - l_i in the subtree
    std::vector<double> extra_room;    ///< X_v = max(0, C_v - L_v)
    std::vector<double> weight;        ///< W_v = min(E_v, X_v)
};

/// Bottom-up pass. `demand` must already be clipped to [l, u].
GreedyNodeAggregates greedy_aggregate(const PdnTopology& topology, std::span<const double> demand);

/// Top-down proportional split of W_root starting from a = l. Child nodes are
/// served before attached devices, each group in declaration order.
std::vector<double> greedy_distribute(const PdnTopology& topology, std::span<const double> demand,
                                      const GreedyNodeAggregates& aggregates);

/// Clip, aggregate and distribute.
std::vector<double> greedy_alloc(const PdnTopology& topology, std::span<const double> requests);

enum class Policy { Nvpax, Static, Greedy };

std::string_view to_string(Policy policy) noexcept;
/// Accepts "nvpax", "static" and "greedy". Throws Error otherwise.
Policy parse_policy(std::string_view name);

/// Runs one policy on a preprocessed frame and returns the final allocation.
std::vector<double> allocate(Policy policy, const PdnTopology& topology, const DemandFrame& frame,
                             const RunConfig& config = {});

}  // namespace nvpax
