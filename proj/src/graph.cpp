#include <algorithm>
#include <set>
#include <sstream>

#include "seccost/harness.hpp"

namespace seccost {

std::map<Endpoint, std::string> endpoint_names_from_manifest(const nlohmann::json& manifest) {
    std::map<Endpoint, std::string> names;
    if (!manifest.is_object() || !manifest.contains("endpoints")) return names;
    for (const auto& e : manifest.at("endpoints")) {
        Endpoint ep{e.at("ip").get<std::string>(), e.at("port").get<uint16_t>()};
        names[ep] = e.at("component").get<std::string>();
    }
    return names;
}

namespace {

// The ephemeral side of a proxied connection is identified by what it sent:
// only the registrar sends REGISTER, only the requester sends ORCH_REQUEST or
// MEASURE_REQUEST. Names come from the interaction's traces.
std::map<Endpoint, std::string> resolve_ephemeral(const std::vector<MessageRecord>& records,
                                                  const std::map<Endpoint, std::string>& known,
                                                  const std::string& registrar,
                                                  const std::string& requester) {
    std::map<Endpoint, std::string> resolved;
    for (const auto& r : records) {
        if (known.count(r.sender) || resolved.count(r.sender)) continue;
        if (r.message_type == "REGISTER" && !registrar.empty())
            resolved[r.sender] = registrar;
        else if ((r.message_type == "ORCH_REQUEST" || r.message_type == "MEASURE_REQUEST") &&
                 !requester.empty())
            resolved[r.sender] = requester;
    }
    return resolved;
}

std::string escape_label(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

} // namespace

std::string export_graph(const std::vector<MessageRecord>& records,
                         const std::vector<TaskTrace>& traces, const InteractionId& interaction,
                         const std::map<Endpoint, std::string>& endpoint_names) {
    std::vector<MessageRecord> relevant;
    for (const auto& r : records)
        if (r.interaction == interaction && !r.is_diagnostic() && r.message_type != "UNKNOWN")
            relevant.push_back(r);
    std::vector<TaskTrace> performed;
    for (const auto& t : traces)
        if (t.interaction == interaction) performed.push_back(t);
    if (relevant.empty() && performed.empty())
        throw std::invalid_argument("unknown interaction: " + interaction.value);

    std::string registrar, requester;
    for (const auto& t : performed) {
        if (t.task.name == "register") registrar = t.component.name;
        if (t.task.name == "discover" || t.task.name == "request-temperature")
            requester = t.component.name;
    }
    auto ephemeral = resolve_ephemeral(relevant, endpoint_names, registrar, requester);
    auto resolve = [&](const Endpoint& ep) -> std::string {
        auto k = endpoint_names.find(ep);
        if (k != endpoint_names.end()) return k->second;
        auto e = ephemeral.find(ep);
        if (e != ephemeral.end()) return e->second;
        return "";
    };

    std::set<std::string> nodes;
    std::set<std::tuple<std::string, std::string, std::string>> edges;
    for (const auto& r : relevant) {
        std::string from = resolve(r.sender);
        std::string to = resolve(r.receiver);
        if (from.empty() || to.empty()) continue;
        nodes.insert(from);
        nodes.insert(to);
        edges.insert({from, to, r.message_type});
    }
    for (const auto& t : performed) nodes.insert(t.component.name);

    // Task list per node, distinct names in first-start order.
    std::sort(performed.begin(), performed.end(), [](const TaskTrace& a, const TaskTrace& b) {
        return a.start_monotonic_ns < b.start_monotonic_ns;
    });
    std::map<std::string, std::vector<std::pair<std::string, TaskCategory>>> node_tasks;
    for (const auto& t : performed) {
        auto& list = node_tasks[t.component.name];
        bool seen = false;
        for (const auto& [name, category] : list)
            if (name == t.task.name) seen = true;
        if (!seen) list.emplace_back(t.task.name, t.task.category);
    }

    std::ostringstream out;
    out << "digraph \"" << escape_label(interaction.value) << "\" {\n";
    out << "  rankdir=LR;\n";
    out << "  node [shape=box];\n";
    for (const auto& node : nodes) {
        out << "  \"" << escape_label(node) << "\" [label=\"" << escape_label(node);
        for (const auto& [task, category] : node_tasks[node])
            out << "\\n" << escape_label(task)
                << (category == TaskCategory::SecurityRelated ? " [S]" : " [U]");
        out << "\"];\n";
    }
    for (const auto& [from, to, type] : edges)
        out << "  \"" << escape_label(from) << "\" -> \"" << escape_label(to) << "\" [label=\""
            << escape_label(type) << "\"];\n";
    out << "}\n";
    return out.str();
}

} // namespace seccost
