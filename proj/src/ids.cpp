#include "seccost/ids.hpp"

#include <arpa/inet.h>

namespace seccost {

void validate_endpoint(const Endpoint& ep) {
    in_addr addr{};
    if (inet_pton(AF_INET, ep.ip.c_str(), &addr) != 1)
        throw std::invalid_argument("not an IPv4 dotted quad: " + ep.ip);
    if (ep.port == 0)
        throw std::invalid_argument("port must be in 1-65535");
}

std::string to_string(TaskCategory c) {
    return c == TaskCategory::SecurityRelated ? "security-related" : "use-case-related";
}

TaskCategory task_category_from_string(const std::string& s) {
    if (s == "security-related") return TaskCategory::SecurityRelated;
    if (s == "use-case-related") return TaskCategory::UseCaseRelated;
    throw std::invalid_argument("unknown task category: " + s);
}

std::string to_string(MetricId id) {
    switch (id) {
    case MetricId::M1: return "M1";
    case MetricId::M2: return "M2";
    case MetricId::M3: return "M3";
    case MetricId::M4: return "M4";
    }
    throw std::invalid_argument("unknown metric id");
}

MetricId metric_from_string(const std::string& s) {
    if (s == "M1") return MetricId::M1;
    if (s == "M2") return MetricId::M2;
    if (s == "M3") return MetricId::M3;
    if (s == "M4") return MetricId::M4;
    throw std::invalid_argument("unknown metric id: " + s);
}

} // namespace seccost
