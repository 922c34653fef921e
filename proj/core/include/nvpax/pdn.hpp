#pragma once

// Power distribution network (PDN) data model: devices, the capacity tree,
// tenant SLAs, and the per-frame request preprocessing.

#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nvpax {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Default idle threshold in watts: a device measured strictly below it is idle.
inline constexpr double kDefaultIdleThresholdW = 150.0;

enum class DeviceState { Active, Idle };

/// One controllable power consumer. Power values are in watts.
struct Device {
    std::string id;
    double lower = 0.0;  ///< minimum allowed power limit
    double upper = 0.0;  ///< maximum allowed power limit
    int priority = 1;    ///< higher value = more important
    /// Scale used by the normalized objectives. Defaults to `upper`.
    std::optional<double> weight;

    double scale() const noexcept { return weight.value_or(upper); }
};

/// A capacity node as declared in a topology document. Children and devices
/// are referenced by id; structure is only checked by validate_topology().
struct PdnNode {
    std::string id;
    std::optional<double> capacity;
    std::vector<std::string> children;
    std::vector<std::string> devices;
};

/// Aggregate minimum/maximum power budget over a device set. The set may span
/// several subtrees.
struct TenantSla {
    std::string id;
    std::vector<std::string> devices;
    double b_min = 0.0;
    double b_max = kInfinity;
};

/// Unvalidated topology as read from a file or assembled by a generator.
struct TopologySpec {
    std::vector<PdnNode> nodes;
    std::vector<Device> devices;
    std::vector<TenantSla> tenants;
};

enum class IssueKind {
    EmptyTopology,
    DuplicateNodeId,
    DuplicateDeviceId,
    DuplicateTenantId,
    DuplicateDevicePlacement,
    UnknownChild,
    UnknownDeviceInNode,
    UnknownDeviceInTenant,
    UnplacedDevice,
    NotATree,
    InvalidDeviceBounds,
    InvalidWeight,
    InvalidPriority,
    MissingCapacity,
    NonPositiveCapacity,
    EmptyTenant,
    InvalidTenantBounds,
};

struct ValidationIssue {
    IssueKind kind;
    std::string subject;  ///< id of the offending node, device or tenant
    std::string message;
};

using ValidationReport = std::vector<ValidationIssue>;

std::string_view to_string(IssueKind kind) noexcept;

/// Returns every structural violation found; an empty report means valid.
/// With `require_capacities` false, missing node capacities are tolerated
/// (skeletons awaiting compute_oversubscribed_capacities).
ValidationReport validate_topology(const TopologySpec& spec, bool require_capacities = true);

/// Validated, indexed, immutable topology.
///
/// Devices are indexed in lexicographic id order. Nodes are indexed in
/// pre-order from the root (index 0), visiting children in declaration order.
class PdnTopology {
public:
    struct Node {
        std::string id;
        double capacity = 0.0;
        int parent = -1;
        std::vector<int> children;  ///< declaration order
        std::vector<int> devices;   ///< directly attached, declaration order
    };

    struct Tenant {
        std::string id;
        std::vector<int> devices;  ///< sorted device indices
        double b_min = 0.0;
        double b_max = kInfinity;
    };

    /// Validates and indexes `spec`; throws TopologyError listing every issue.
    static PdnTopology build(const TopologySpec& spec);

    std::size_t device_count() const noexcept { return devices_.size(); }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t tenant_count() const noexcept { return tenants_.size(); }

    std::span<const Device> devices() const noexcept { return devices_; }
    const Device& device(std::size_t i) const { return devices_.at(i); }
    std::span<const Node> nodes() const noexcept { return nodes_; }
    const Node& node(std::size_t j) const { return nodes_.at(j); }
    const Node& root() const { return nodes_.front(); }
    std::span<const Tenant> tenants() const noexcept { return tenants_; }
    const Tenant& tenant(std::size_t k) const { return tenants_.at(k); }

    std::optional<std::size_t> find_device(std::string_view id) const;
    std::optional<std::size_t> find_node(std::string_view id) const;
    std::size_t device_index(std::string_view id) const;  ///< throws TopologyError
    std::size_t node_index(std::string_view id) const;    ///< throws TopologyError

    /// Node the device is attached to.
    int device_node(std::size_t i) const { return device_node_.at(i); }
    /// Tenants whose device set contains device i.
    std::span<const int> device_tenants(std::size_t i) const { return device_tenants_.at(i); }

    /// Sorted device indices in the subtree rooted at node j.
    std::vector<int> subtree_devices(std::size_t j) const;
    /// Node indices with children before parents.
    std::vector<int> post_order() const;
    /// Number of nodes on the path from the device's attach node to the root.
    int device_depth(std::size_t i) const;

    bool has_tenant_minimums() const noexcept;

    /// Round-trips back to a document form (capacities filled in).
    TopologySpec to_spec() const;

private:
    std::vector<Device> devices_;
    std::vector<Node> nodes_;
    std::vector<Tenant> tenants_;
    std::vector<int> device_node_;
    std::vector<std::vector<int>> device_tenants_;
    std::unordered_map<std::string, std::size_t> device_lookup_;
    std::unordered_map<std::string, std::size_t> node_lookup_;
};

/// Device ids in the subtree rooted at `node_id`. Throws TopologyError for an
/// unknown node.
std::set<std::string> subtree_devices(const PdnTopology& topology, std::string_view node_id);

/// Clamps a raw request into the device interval [l, u].
double clip_request(double raw, double lower, double upper) noexcept;

/// Idle iff the measured power is strictly below the threshold.
DeviceState classify_state(double measured_w, double idle_threshold_w) noexcept;

/// Fills in every missing node capacity bottom-up. Leaf nodes get the sum of
/// their devices' upper limits; any node with child nodes gets
/// `factor * (sum of child capacities + upper limits of directly attached devices)`.
/// Capacities already present are kept. Throws TopologyError on an empty tree,
/// a malformed skeleton, or a factor outside (0, 1].
TopologySpec compute_oversubscribed_capacities(TopologySpec skeleton, double factor);

/// Per-device requests and states for one control step, aligned with device indices.
struct DemandFrame {
    std::vector<double> request;
    std::vector<DeviceState> state;

    std::size_t size() const noexcept { return request.size(); }
};

/// Clips measured power into [l, u], classifies idle devices against the
/// threshold, and sets idle requests to l.
DemandFrame preprocess_frame(const PdnTopology& topology, std::span<const double> measured_w,
                             double idle_threshold_w = kDefaultIdleThresholdW);

/// Builds a frame from explicit requests with every device active.
DemandFrame all_active(const PdnTopology& topology, std::span<const double> requests_w);

}  // namespace nvpax
