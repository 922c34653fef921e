#include "nvpax/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include "nvpax/errors.hpp"

namespace nvpax {

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view cell, std::size_t line, std::string_view what) {
    cell = trim(cell);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw TraceError("invalid " + std::string(what) + " '" + std::string(cell) + "'", line);
    }
    return v;
}

}  // namespace

std::vector<TraceFrame> parse_trace(std::istream& in, const PdnTopology& topology) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw TraceError("empty trace");
    const auto header = split(line);
    if (trim(header[0]) != "timestamp") throw TraceError("first column must be 'timestamp'", line_no);
    std::vector<std::size_t> column_device;
    std::vector<bool> seen(topology.device_count(), false);
    for (std::size_t c = 1; c < header.size(); ++c) {
        const auto id = trim(header[c]);
        const auto idx = topology.find_device(id);
        if (!idx) throw TraceError("unknown device column '" + std::string(id) + "'", line_no);
        if (seen[*idx]) throw TraceError("duplicate device column '" + std::string(id) + "'", line_no);
        seen[*idx] = true;
        column_device.push_back(*idx);
    }

    std::vector<TraceFrame> frames;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw TraceError("expected " + std::to_string(header.size()) + " cells, found " +
                                 std::to_string(cells.size()),
                             line_no);
        }
        TraceFrame f;
        f.timestamp = parse_number(cells[0], line_no, "timestamp");
        f.power.assign(topology.device_count(), 0.0);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            if (trim(cells[c]).empty()) continue;
            const double w = parse_number(cells[c], line_no, "power reading");
            if (w < 0.0) throw TraceError("negative power reading", line_no);
            f.power[column_device[c - 1]] = w;
        }
        frames.push_back(std::move(f));
    }
    std::stable_sort(frames.begin(), frames.end(),
                     [](const TraceFrame& a, const TraceFrame& b) { return a.timestamp < b.timestamp; });
    return frames;
}

std::vector<TraceFrame> load_trace(const std::filesystem::path& path, const PdnTopology& topology) {
    std::ifstream in(path);
    if (!in) throw TraceError("cannot open trace '" + path.string() + "'");
    return parse_trace(in, topology);
}

void write_trace(std::ostream& out, const PdnTopology& topology, const std::vector<TraceFrame>& frames) {
    out << "timestamp";
    for (const auto& d : topology.devices()) out << ',' << d.id;
    out << '\n' << std::setprecision(17);
    for (const auto& f : frames) {
        if (f.power.size() != topology.device_count()) throw TraceError("frame size does not match device count");
        out << f.timestamp;
        for (double w : f.power) out << ',' << w;
        out << '\n';
    }
}

void save_trace(const std::filesystem::path& path, const PdnTopology& topology, const std::vector<TraceFrame>& frames) {
    std::ofstream out(path);
    if (!out) throw TraceError("cannot write trace '" + path.string() + "'");
    write_trace(out, topology, frames);
}

void SyntheticTraceConfig::validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(idle_probability)) throw Error("idle probability must lie in [0, 1]");
    if (!in_unit(switch_rate)) throw Error("switch rate must lie in [0, 1]");
    if (!in_unit(active_low) || !in_unit(active_high) || active_low > active_high) {
        throw Error("active power range must satisfy 0 <= low <= high <= 1");
    }
    if (!(correlation >= 0.0 && correlation < 1.0)) throw Error("correlation must lie in [0, 1)");
    if (!(interval_s > 0.0)) throw Error("interval must be positive");
    if (!(idle_power_w >= 0.0)) throw Error("idle power must be non-negative");
}

std::vector<TraceFrame> generate_trace(const PdnTopology& topology, const SyntheticTraceConfig& config) {
    config.validate();
    const std::size_t n = topology.device_count();
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double mid = 0.5 * (config.active_low + config.active_high);
    const double sigma = 0.25 * (config.active_high - config.active_low);
    const double rho = config.correlation;
    const double innovation = sigma * std::sqrt(1.0 - rho * rho);

    std::vector<bool> idle(n);
    std::vector<double> level(n);
    for (std::size_t i = 0; i < n; ++i) {
        idle[i] = unit(rng) < config.idle_probability;
        level[i] = std::clamp(mid + sigma * gauss(rng), config.active_low, config.active_high);
    }

    std::vector<TraceFrame> frames(config.frames);
    for (std::size_t k = 0; k < config.frames; ++k) {
        auto& f = frames[k];
        f.timestamp = config.start_timestamp + static_cast<double>(k) * config.interval_s;
        f.power.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (k > 0) {
                if (unit(rng) < config.switch_rate) idle[i] = unit(rng) < config.idle_probability;
                level[i] = std::clamp(rho * level[i] + (1.0 - rho) * mid + innovation * gauss(rng), config.active_low,
                                      config.active_high);
            }
            const double u = topology.device(i).upper;
            f.power[i] = idle[i] ? std::min(config.idle_power_w, u) : level[i] * u;
        }
    }
    return frames;
}

}  // namespace nvpax
