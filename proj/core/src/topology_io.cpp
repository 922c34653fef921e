#include "nvpax/topology_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nvpax/errors.hpp"

namespace nvpax {

using nlohmann::json;

namespace {

double number_or(const json& obj, const char* key, double fallback) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return fallback;
    }
    if (!it->is_number()) {
        throw TopologyError(std::string("field '") + key + "' must be a number");
    }
    return it->get<double>();
}

std::vector<std::string> string_list(const json& obj, const char* key) {
    std::vector<std::string> out;
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return out;
    }
    if (!it->is_array()) {
        throw TopologyError(std::string("field '") + key + "' must be an array");
    }
    for (const auto& v : *it) {
        out.push_back(v.get<std::string>());
    }
    return out;
}

void parse_node(const json& obj, std::vector<PdnNode>& out) {
    if (!obj.is_object() || !obj.contains("id")) {
        throw TopologyError("node entry must be an object with an 'id'");
    }
    PdnNode node;
    node.id = obj.at("id").get<std::string>();
    if (auto it = obj.find("capacity"); it != obj.end() && !it->is_null()) {
        node.capacity = it->get<double>();
    }
    node.devices = string_list(obj, "devices");
    std::vector<const json*> nested;
    if (auto it = obj.find("children"); it != obj.end() && !it->is_null()) {
        for (const auto& child : *it) {
            if (child.is_string()) {
                node.children.push_back(child.get<std::string>());
            } else {
                node.children.push_back(child.at("id").get<std::string>());
                nested.push_back(&child);
            }
        }
    }
    out.push_back(std::move(node));
    for (const json* child : nested) {
        parse_node(*child, out);
    }
}

}  // namespace

TopologySpec parse_topology_json(const std::string& text) {
    TopologySpec spec;
    try {
        const json doc = json::parse(text);
        for (const auto& n : doc.value("nodes", json::array())) {
            parse_node(n, spec.nodes);
        }
        for (const auto& d : doc.value("devices", json::array())) {
            Device dev;
            dev.id = d.at("id").get<std::string>();
            dev.lower = number_or(d, "l", 0.0);
            dev.upper = number_or(d, "u", 0.0);
            dev.priority = d.value("priority", 1);
            if (auto it = d.find("weight"); it != d.end() && !it->is_null()) {
                dev.weight = it->get<double>();
            }
            spec.devices.push_back(std::move(dev));
        }
        for (const auto& t : doc.value("tenants", json::array())) {
            TenantSla tenant;
            tenant.id = t.at("id").get<std::string>();
            tenant.devices = string_list(t, "devices");
            tenant.b_min = number_or(t, "b_min", 0.0);
            tenant.b_max = number_or(t, "b_max", kInfinity);
            spec.tenants.push_back(std::move(tenant));
        }
    } catch (const json::exception& e) {
        throw TopologyError(std::string("malformed topology document: ") + e.what());
    }
    return spec;
}

std::string topology_to_json(const TopologySpec& spec, int indent) {
    json doc;
    doc["nodes"] = json::array();
    for (const auto& n : spec.nodes) {
        json node{{"id", n.id}, {"children", n.children}, {"devices", n.devices}};
        if (n.capacity) {
            node["capacity"] = *n.capacity;
        }
        doc["nodes"].push_back(std::move(node));
    }
    doc["devices"] = json::array();
    for (const auto& d : spec.devices) {
        json dev{{"id", d.id}, {"l", d.lower}, {"u", d.upper}, {"priority", d.priority}};
        if (d.weight) {
            dev["weight"] = *d.weight;
        }
        doc["devices"].push_back(std::move(dev));
    }
    doc["tenants"] = json::array();
    for (const auto& t : spec.tenants) {
        json tenant{{"id", t.id}, {"devices", t.devices}, {"b_min", t.b_min}};
        if (std::isfinite(t.b_max)) {
            tenant["b_max"] = t.b_max;
        }
        doc["tenants"].push_back(std::move(tenant));
    }
    return doc.dump(indent) + "\n";
}

TopologySpec read_topology_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw TopologyError("cannot open topology file '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_topology_json(buf.str());
}

PdnTopology load_topology(const std::filesystem::path& path, double factor) {
    auto spec = read_topology_spec(path);
    const bool missing = std::any_of(spec.nodes.begin(), spec.nodes.end(),
                                     [](const PdnNode& n) { return !n.capacity; });
    if (missing) {
        spec = compute_oversubscribed_capacities(std::move(spec), factor);
    }
    return PdnTopology::build(spec);
}

void write_topology(const std::filesystem::path& path, const TopologySpec& spec) {
    std::ofstream out(path);
    if (!out) {
        throw TopologyError("cannot write topology file '" + path.string() + "'");
    }
    out << topology_to_json(spec);
}

}  // namespace nvpax
