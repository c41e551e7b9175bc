#include "seccost/model.hpp"

#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "seccost/timeutil.hpp"

namespace seccost {

SampleStore::SampleStore(SampleStore&& other) noexcept
    : samples_(std::move(other.samples_)), by_time_(std::move(other.by_time_)),
      closed_(other.closed_) {}

void CostSample::validate() const {
    interaction.validate();
    component.validate();
    task.validate();
    if (!(value >= 0.0) || !std::isfinite(value))
        throw std::invalid_argument("cost sample value must be finite and >= 0, got " +
                                    std::to_string(value));
}

void CostQuery::validate() const {
    if (t_start_ms > t_end_ms)
        throw std::invalid_argument("query window start must not exceed end");
}

bool CostQuery::matches(const CostSample& s) const {
    if (s.t_utc_ms < t_start_ms || s.t_utc_ms >= t_end_ms) return false;
    if (!interactions.empty() && !interactions.count(s.interaction)) return false;
    if (!components.empty() && !components.count(s.component.name)) return false;
    if (category && s.task.category != *category) return false;
    if (!metrics.empty() && !metrics.count(s.metric)) return false;
    return true;
}

void SampleStore::append(const CostSample& s) {
    s.validate();
    std::unique_lock lock(mu_);
    if (closed_)
        throw std::runtime_error("sample store is closed");
    samples_.push_back(s);
    by_time_.emplace(s.t_utc_ms, samples_.size() - 1);
}

size_t SampleStore::size() const {
    std::shared_lock lock(mu_);
    return samples_.size();
}

void SampleStore::close() {
    std::unique_lock lock(mu_);
    closed_ = true;
}

bool SampleStore::closed() const {
    std::shared_lock lock(mu_);
    return closed_;
}

std::vector<CostSample> SampleStore::snapshot() const {
    std::shared_lock lock(mu_);
    return samples_;
}

double SampleStore::total_cost(const CostQuery& q) const {
    q.validate();
    std::shared_lock lock(mu_);
    CompensatedSum sum;
    auto lo = by_time_.lower_bound(q.t_start_ms);
    auto hi = by_time_.lower_bound(q.t_end_ms);
    for (auto it = lo; it != hi; ++it) {
        const CostSample& s = samples_[it->second];
        if (q.matches(s)) sum.add(s.value);
    }
    return sum.value();
}

CostBreakdown SampleStore::cost_breakdown(const CostQuery& q) const {
    q.validate();
    std::shared_lock lock(mu_);
    CostBreakdown b;
    CompensatedSum total;
    std::map<InteractionId, CompensatedSum> by_i;
    std::map<std::tuple<InteractionId, ComponentId>, CompensatedSum> by_ij;
    std::map<std::tuple<InteractionId, ComponentId, TaskKind>, CompensatedSum> by_ijk;
    std::map<std::tuple<InteractionId, ComponentId, TaskKind, MetricId>, CompensatedSum> by_ijkl;

    auto lo = by_time_.lower_bound(q.t_start_ms);
    auto hi = by_time_.lower_bound(q.t_end_ms);
    for (auto it = lo; it != hi; ++it) {
        const CostSample& s = samples_[it->second];
        if (!q.matches(s)) continue;
        total.add(s.value);
        by_i[s.interaction].add(s.value);
        by_ij[{s.interaction, s.component}].add(s.value);
        by_ijk[{s.interaction, s.component, s.task}].add(s.value);
        by_ijkl[{s.interaction, s.component, s.task, s.metric}].add(s.value);
    }
    b.total = total.value();
    for (auto& [k, v] : by_i) b.per_interaction[k] = v.value();
    for (auto& [k, v] : by_ij) b.per_component[k] = v.value();
    for (auto& [k, v] : by_ijk) b.per_task[k] = v.value();
    for (auto& [k, v] : by_ijkl) b.per_metric[k] = v.value();
    return b;
}

std::vector<std::pair<int64_t, double>> SampleStore::time_series(const CostQuery& q,
                                                                 int64_t bucket_ms) const {
    q.validate();
    if (bucket_ms <= 0)
        throw std::invalid_argument("bucket_ms must be positive");
    if (q.t_end_ms == INT64_MAX)
        throw std::invalid_argument("time_series requires a bounded window");

    std::vector<std::pair<int64_t, double>> buckets;
    std::vector<CompensatedSum> sums;
    for (int64_t t = q.t_start_ms; t < q.t_end_ms; t += bucket_ms) {
        buckets.emplace_back(t, 0.0);
        sums.emplace_back();
    }

    std::shared_lock lock(mu_);
    auto lo = by_time_.lower_bound(q.t_start_ms);
    auto hi = by_time_.lower_bound(q.t_end_ms);
    for (auto it = lo; it != hi; ++it) {
        const CostSample& s = samples_[it->second];
        if (!q.matches(s)) continue;
        size_t idx = static_cast<size_t>((s.t_utc_ms - q.t_start_ms) / bucket_ms);
        sums[idx].add(s.value);
    }
    for (size_t i = 0; i < buckets.size(); ++i) buckets[i].second = sums[i].value();
    return buckets;
}

std::string sample_to_line(const CostSample& s) {
    std::ostringstream out;
    out << s.interaction.value << '\t' << s.component.name << '\t' << s.component.endpoint.ip
        << '\t' << s.component.endpoint.port << '\t' << s.task.name << '\t'
        << to_string(s.task.category) << '\t' << to_string(s.metric) << '\t'
        << to_iso8601_ms(s.t_utc_ms) << '\t' << format_double(s.value);
    return out.str();
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

} // namespace

CostSample sample_from_line(const std::string& line) {
    auto f = split_tabs(line);
    if (f.size() != 9)
        throw std::invalid_argument("sample line must have 9 fields, got " +
                                    std::to_string(f.size()));
    CostSample s;
    s.interaction = InteractionId(f[0]);
    s.component = ComponentId{f[1], {f[2], static_cast<uint16_t>(std::stoi(f[3]))}};
    s.task = TaskKind{f[4], task_category_from_string(f[5])};
    s.metric = metric_from_string(f[6]);
    s.t_utc_ms = from_iso8601_ms(f[7]);
    s.value = parse_double(f[8]);
    return s;
}

void SampleStore::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    std::shared_lock lock(mu_);
    for (const auto& s : samples_) out << sample_to_line(s) << '\n';
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

SampleStore SampleStore::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open for reading: " + path);
    SampleStore store;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        store.append(sample_from_line(line));
    }
    return store;
}

} // namespace seccost
