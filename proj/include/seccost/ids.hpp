#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace seccost {

// Index i of the cost aggregation: one token per executed interaction.
struct InteractionId {
    std::string value;

    InteractionId() = default;
    explicit InteractionId(std::string v) : value(std::move(v)) { validate(); }

    void validate() const {
        if (value.empty())
            throw std::invalid_argument("interaction id must be non-empty");
        if (value.size() > 64)
            throw std::invalid_argument("interaction id exceeds 64 chars: " + value);
        for (char c : value)
            if (c <= 0x20 || c == 0x7f)
                throw std::invalid_argument("interaction id contains whitespace/control char");
    }

    auto operator<=>(const InteractionId&) const = default;
};

struct Endpoint {
    std::string ip;   // IPv4 dotted quad
    uint16_t port = 0;

    auto operator<=>(const Endpoint&) const = default;

    std::string str() const { return ip + ":" + std::to_string(port); }
};

// Throws if ip is not a dotted quad or port is outside 1-65535.
void validate_endpoint(const Endpoint& ep);

// Index j: a named component with its network endpoint.
struct ComponentId {
    std::string name;
    Endpoint endpoint;

    auto operator<=>(const ComponentId&) const = default;

    void validate() const {
        if (name.empty())
            throw std::invalid_argument("component name must be non-empty");
        for (char c : name)
            if (c <= 0x20 || c == 0x7f)
                throw std::invalid_argument("component name contains whitespace/control char");
        validate_endpoint(endpoint);
    }
};

enum class TaskCategory { SecurityRelated, UseCaseRelated };

std::string to_string(TaskCategory c);
TaskCategory task_category_from_string(const std::string& s);

// Index k: a named task with its fixed category.
struct TaskKind {
    std::string name;
    TaskCategory category = TaskCategory::UseCaseRelated;

    auto operator<=>(const TaskKind&) const = default;

    void validate() const {
        if (name.empty())
            throw std::invalid_argument("task name must be non-empty");
        for (char c : name)
            if (c <= 0x20 || c == 0x7f)
                throw std::invalid_argument("task name contains whitespace/control char");
    }
};

// Index l: the metric used to measure a task.
enum class MetricId { M1 = 1, M2 = 2, M3 = 3, M4 = 4 };

inline constexpr MetricId kAllMetrics[] = {MetricId::M1, MetricId::M2, MetricId::M3,
                                           MetricId::M4};

std::string to_string(MetricId id);
MetricId metric_from_string(const std::string& s);

} // namespace seccost
