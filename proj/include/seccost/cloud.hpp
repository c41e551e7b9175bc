#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "seccost/channel.hpp"
#include "seccost/ids.hpp"
#include "seccost/tracer.hpp"

namespace seccost {

struct ServiceRegistration {
    std::string service_name;
    ComponentId provider;
    int64_t registered_at_utc_ms = 0;

    void validate() const;
};

struct AccessRule {
    std::string consumer;     // component name
    std::string service_name;

    auto operator<=>(const AccessRule&) const = default;
};

// One active registration per (service, provider); re-registration refreshes
// the timestamp. Search is deterministic: first provider in key order.
class Registry {
public:
    void register_service(const ServiceRegistration& reg);
    std::optional<ServiceRegistration> search(const std::string& service_name) const;
    size_t size() const;

private:
    mutable std::mutex mu_;
    std::map<std::pair<std::string, std::string>, ServiceRegistration> entries_;
};

class Acl {
public:
    Acl() = default;
    explicit Acl(std::set<AccessRule> rules) : rules_(std::move(rules)) {}
    void add(AccessRule rule) { rules_.insert(std::move(rule)); }
    bool allows(const std::string& consumer, const std::string& service_name) const;

private:
    std::set<AccessRule> rules_;
};

// ACL check recorded as one "authorise" task on the framework component.
bool authorise(const Acl& acl, const std::string& consumer, const std::string& service_name,
               Tracer& tracer, const InteractionId& interaction);

struct OrchestrationResult {
    bool ok = false;
    Endpoint provider;           // valid when ok
    std::string error;           // reason when not ok
};

// Figure-3 ordering: authorisation strictly before the registry search; on
// denial the registry is not consulted. The search is traced as "lookup".
OrchestrationResult orchestrate(Registry& registry, const Acl& acl, const std::string& consumer,
                                const std::string& service_name, Tracer& tracer,
                                const InteractionId& interaction);

// The IoT framework stand-in: one listening service handling REGISTER and
// ORCH_REQUEST (plus the secure handshake), request/response per connection.
class CloudService {
public:
    CloudService(const Endpoint& listen, ChannelConfig channel, Registry& registry, Acl acl,
                 Tracer& tracer);
    // Takes an already-bound listener so callers can learn the port first.
    CloudService(Socket listener, ChannelConfig channel, Registry& registry, Acl acl,
                 Tracer& tracer);
    ~CloudService();
    CloudService(const CloudService&) = delete;
    CloudService& operator=(const CloudService&) = delete;

    Endpoint endpoint() const { return endpoint_; }
    void stop();

private:
    void accept_loop();
    void serve(Socket client);
    Frame handle(const Frame& request);

    ChannelConfig channel_;
    Registry& registry_;
    Acl acl_;
    Tracer& tracer_;
    Socket listener_;
    Endpoint endpoint_;
    std::atomic<bool> stopping_{false};
    std::thread acceptor_;
    std::mutex sessions_mu_;
    std::vector<std::thread> sessions_;
    std::set<int> live_fds_;
};

// REGISTER payload: "<service> <ip> <port>"; ORCH_REQUEST payload: "<service>";
// ORCH_RESPONSE payload: "<ip> <port>".
std::string encode_registration_payload(const std::string& service, const Endpoint& provider);
std::pair<std::string, Endpoint> parse_registration_payload(const std::string& payload);
std::string encode_endpoint_payload(const Endpoint& ep);
Endpoint parse_endpoint_payload(const std::string& payload);

} // namespace seccost
