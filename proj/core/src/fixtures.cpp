#include "nvpax/fixtures.hpp"

#include "nvpax/errors.hpp"

namespace nvpax {

namespace {

void add_server(FixtureCase& fc, const std::string& id, double capacity, const std::string& prefix, int count,
                double demand) {
    PdnNode server{id, capacity, {}, {}};
    for (int k = 0; k < count; ++k) {
        const std::string dev = prefix + "-" + std::to_string(k);
        server.devices.push_back(dev);
        fc.spec.devices.push_back({dev, 0.0, demand, 1, std::nullopt});
        fc.demand.push_back(demand);
    }
    fc.spec.nodes.push_back(std::move(server));
}

}  // namespace

FixtureCase bottleneck_fixture() {
    FixtureCase fc;
    fc.spec.nodes.push_back({"dc", 10000.0, {"rack-a", "rack-b", "rack-c"}, {}});
    fc.spec.nodes.push_back({"rack-a", 6000.0, {"server-a1", "server-a2"}, {}});
    fc.spec.nodes.push_back({"rack-b", 6000.0, {"server-b1"}, {}});
    fc.spec.nodes.push_back({"rack-c", 6000.0, {"server-c1"}, {}});
    add_server(fc, "server-a1", 2500.0, "a1", 6, 750.0);
    add_server(fc, "server-a2", 2500.0, "a2", 3, 150.0);
    add_server(fc, "server-b1", 6000.0, "b1", 10, 350.0);
    add_server(fc, "server-c1", 6000.0, "c1", 10, 350.0);
    return fc;
}

std::vector<std::string> fixture_names() { return {"bottleneck"}; }

FixtureCase fixture_by_name(const std::string& name) {
    if (name == "bottleneck") {
        return bottleneck_fixture();
    }
    throw Error("unknown fixture '" + name + "'");
}

}  // namespace nvpax
