#include "seccost/catalogue.hpp"

#include <time.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "seccost/timeutil.hpp"

namespace seccost {

std::string to_string(MetricUnit u) {
    switch (u) {
    case MetricUnit::Milliseconds: return "ms";
    case MetricUnit::Percent: return "%";
    case MetricUnit::Megabytes: return "MB";
    case MetricUnit::Kilobytes: return "KB";
    case MetricUnit::CostUnit: return "CU";
    }
    throw std::invalid_argument("unknown metric unit");
}

std::vector<MetricDef> builtin_catalogue() {
    return {
        {MetricId::M1, "duration", MetricUnit::Milliseconds, SamplerKind::WallClock},
        {MetricId::M2, "cpu-usage", MetricUnit::Percent, SamplerKind::CpuProbe},
        {MetricId::M3, "ram-usage", MetricUnit::Megabytes, SamplerKind::RamProbe},
        {MetricId::M4, "packet-size", MetricUnit::Kilobytes, SamplerKind::WireBytes},
    };
}

SystemResourceSource::SystemResourceSource(std::string proc_status_path)
    : proc_status_path_(std::move(proc_status_path)) {
    // Probe once at construction so an unusable platform fails loudly here.
    take_probe();
}

ResourceProbe SystemResourceSource::take_probe() {
    timespec cpu{};
    if (clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &cpu) != 0)
        throw std::runtime_error("process CPU clock unavailable on this platform");

    std::ifstream status(proc_status_path_);
    if (!status)
        throw std::runtime_error("process status unavailable: " + proc_status_path_);
    double rss_mb = -1.0;
    std::string line;
    while (std::getline(status, line)) {
        if (line.rfind("VmRSS:", 0) == 0) {
            long kb = 0;
            if (sscanf(line.c_str(), "VmRSS: %ld kB", &kb) == 1) rss_mb = kb / 1024.0;
            break;
        }
    }
    if (rss_mb < 0.0)
        throw std::runtime_error("VmRSS not reported by " + proc_status_path_);

    ResourceProbe p;
    p.cpu_time_ms = cpu.tv_sec * 1e3 + cpu.tv_nsec / 1e6;
    p.rss_mb = rss_mb;
    p.taken_at_ns = monotonic_ns();

    // taken_at must be strictly increasing across successive probes.
    std::lock_guard lock(mu_);
    if (p.taken_at_ns <= last_taken_at_ns_) p.taken_at_ns = last_taken_at_ns_ + 1;
    last_taken_at_ns_ = p.taken_at_ns;
    return p;
}

unsigned SystemResourceSource::core_count() const {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

FakeResourceSource::FakeResourceSource(double cpu_ms, double rss_mb, int64_t start_ns,
                                       int64_t time_step_ns, double cpu_step_ms, unsigned cores)
    : cpu_ms_(cpu_ms), rss_mb_(rss_mb), next_ns_(start_ns), time_step_ns_(time_step_ns),
      cpu_step_ms_(cpu_step_ms), cores_(cores) {}

void FakeResourceSource::push(const ResourceProbe& p) {
    std::lock_guard lock(mu_);
    scripted_.push_back(p);
}

ResourceProbe FakeResourceSource::take_probe() {
    std::lock_guard lock(mu_);
    if (!scripted_.empty()) {
        ResourceProbe p = scripted_.front();
        scripted_.pop_front();
        return p;
    }
    ResourceProbe p{cpu_ms_, rss_mb_, next_ns_};
    next_ns_ += time_step_ns_;
    cpu_ms_ += cpu_step_ms_;
    return p;
}

std::map<MetricId, double> measure_task(const ResourceProbe& before, const ResourceProbe& after,
                                        uint64_t wire_bytes, unsigned core_count) {
    if (after.taken_at_ns <= before.taken_at_ns)
        throw std::invalid_argument("probes must be strictly ordered in time");
    if (core_count == 0)
        throw std::invalid_argument("core_count must be positive");

    double m1 = (after.taken_at_ns - before.taken_at_ns) / 1e6;
    double m2 = 100.0 * (after.cpu_time_ms - before.cpu_time_ms) / m1;
    m2 = std::clamp(m2, 0.0, 100.0 * core_count);
    double m3 = std::max(after.rss_mb - before.rss_mb, 0.0);
    double m4 = static_cast<double>(wire_bytes) / 1024.0;
    return {{MetricId::M1, m1}, {MetricId::M2, m2}, {MetricId::M3, m3}, {MetricId::M4, m4}};
}

void NormalizationSpec::validate() const {
    for (const auto& [id, mm] : bounds)
        if (mm.first > mm.second)
            throw std::invalid_argument("min exceeds max for metric " + to_string(id));
    bool any_positive = false;
    for (const auto& [id, w] : weights) {
        if (w < 0.0)
            throw std::invalid_argument("negative weight for metric " + to_string(id));
        if (w > 0.0) any_positive = true;
    }
    if (!any_positive)
        throw std::invalid_argument("at least one weight must be positive");
}

NormalizationSpec fit_minmax(const std::vector<std::map<MetricId, double>>& population) {
    if (population.empty())
        throw std::invalid_argument("cannot fit bounds on an empty population");
    NormalizationSpec spec;
    for (const auto& run : population) {
        for (const auto& [id, v] : run) {
            auto it = spec.bounds.find(id);
            if (it == spec.bounds.end()) {
                spec.bounds[id] = {v, v};
                spec.weights[id] = 1.0;
            } else {
                it->second.first = std::min(it->second.first, v);
                it->second.second = std::max(it->second.second, v);
            }
        }
    }
    spec.validate();
    return spec;
}

double to_cost_unit(const std::map<MetricId, double>& values, const NormalizationSpec& spec) {
    double sum = 0.0;
    for (const auto& [id, v] : values) {
        auto mm = spec.bounds.find(id);
        if (mm == spec.bounds.end())
            throw std::invalid_argument("no normalization bounds for metric " + to_string(id));
        auto [lo, hi] = mm->second;
        double norm = hi > lo ? (v - lo) / (hi - lo) : 0.0;
        auto w = spec.weights.find(id);
        sum += (w != spec.weights.end() ? w->second : 1.0) * norm;
    }
    return sum;
}

void NormalizationSpec::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    out << "scheme minmax\n";
    for (const auto& [id, mm] : bounds) {
        double w = weights.count(id) ? weights.at(id) : 1.0;
        out << to_string(id) << ' ' << format_double(mm.first) << ' ' << format_double(mm.second)
            << ' ' << format_double(w) << '\n';
    }
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

NormalizationSpec NormalizationSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open for reading: " + path);
    NormalizationSpec spec;
    std::string line;
    bool saw_scheme = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (!saw_scheme) {
            if (line != "scheme minmax")
                throw std::runtime_error("unsupported normalization scheme: " + line);
            saw_scheme = true;
            continue;
        }
        std::istringstream row(line);
        std::string id, lo, hi, w;
        if (!(row >> id >> lo >> hi >> w))
            throw std::runtime_error("bad normalization line: " + line);
        MetricId metric = metric_from_string(id);
        spec.bounds[metric] = {parse_double(lo), parse_double(hi)};
        spec.weights[metric] = parse_double(w);
    }
    spec.validate();
    return spec;
}

} // namespace seccost
