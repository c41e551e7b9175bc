#include "seccost/cloud.hpp"

#include <sys/socket.h>

#include <cstdio>
#include <sstream>

#include "seccost/timeutil.hpp"

namespace seccost {

void ServiceRegistration::validate() const {
    if (service_name.empty())
        throw std::invalid_argument("service name must be non-empty");
    provider.validate();
}

void Registry::register_service(const ServiceRegistration& reg) {
    reg.validate();
    std::lock_guard lock(mu_);
    entries_[{reg.service_name, reg.provider.name}] = reg;
}

std::optional<ServiceRegistration> Registry::search(const std::string& service_name) const {
    std::lock_guard lock(mu_);
    auto it = entries_.lower_bound({service_name, ""});
    if (it == entries_.end() || it->first.first != service_name) return std::nullopt;
    return it->second;
}

size_t Registry::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

bool Acl::allows(const std::string& consumer, const std::string& service_name) const {
    return rules_.count(AccessRule{consumer, service_name}) > 0;
}

bool authorise(const Acl& acl, const std::string& consumer, const std::string& service_name,
               Tracer& tracer, const InteractionId& interaction) {
    OpenTask task = tracer.begin_task(interaction, "authorise");
    bool allowed = acl.allows(consumer, service_name);
    tracer.end_task(task, 0);
    return allowed;
}

OrchestrationResult orchestrate(Registry& registry, const Acl& acl, const std::string& consumer,
                                const std::string& service_name, Tracer& tracer,
                                const InteractionId& interaction) {
    if (!authorise(acl, consumer, service_name, tracer, interaction))
        return {false, {}, "not authorised"};

    OpenTask task = tracer.begin_task(interaction, "lookup");
    auto hit = registry.search(service_name);
    tracer.end_task(task, 0);
    if (!hit) return {false, {}, "no provider"};
    return {true, hit->provider.endpoint, ""};
}

namespace {

// Ports are zero-padded so payload sizes do not depend on which ephemeral
// port the kernel handed out; paired secure/insecure runs must exchange
// byte-identical plaintext frames.
std::string pad_port(uint16_t port) {
    char buf[8];
    snprintf(buf, sizeof buf, "%05u", port);
    return buf;
}

} // namespace

std::string encode_registration_payload(const std::string& service, const Endpoint& provider) {
    return service + " " + provider.ip + " " + pad_port(provider.port);
}

std::pair<std::string, Endpoint> parse_registration_payload(const std::string& payload) {
    std::istringstream in(payload);
    std::string service, ip;
    int port = 0;
    if (!(in >> service >> ip >> port) || port < 0 || port > 65535)
        throw std::invalid_argument("malformed registration payload: " + payload);
    return {service, Endpoint{ip, static_cast<uint16_t>(port)}};
}

std::string encode_endpoint_payload(const Endpoint& ep) {
    return ep.ip + " " + pad_port(ep.port);
}

Endpoint parse_endpoint_payload(const std::string& payload) {
    std::istringstream in(payload);
    std::string ip;
    int port = 0;
    if (!(in >> ip >> port) || port < 1 || port > 65535)
        throw std::invalid_argument("malformed endpoint payload: " + payload);
    return Endpoint{ip, static_cast<uint16_t>(port)};
}

CloudService::CloudService(const Endpoint& listen, ChannelConfig channel, Registry& registry,
                           Acl acl, Tracer& tracer)
    : CloudService(listen_on(listen), std::move(channel), registry, std::move(acl), tracer) {}

CloudService::CloudService(Socket listener, ChannelConfig channel, Registry& registry, Acl acl,
                           Tracer& tracer)
    : channel_(std::move(channel)), registry_(registry), acl_(std::move(acl)), tracer_(tracer) {
    channel_.validate();
    listener_ = std::move(listener);
    endpoint_ = listener_.local_endpoint();
    acceptor_ = std::thread(&CloudService::accept_loop, this);
}

CloudService::~CloudService() { stop(); }

void CloudService::accept_loop() {
    while (!stopping_.load()) {
        auto client = accept_on(listener_);
        if (!client) break;
        std::lock_guard lock(sessions_mu_);
        if (stopping_.load()) break;
        sessions_.emplace_back(&CloudService::serve, this, std::move(*client));
    }
}

void CloudService::serve(Socket client) {
    int fd = client.fd();
    {
        std::lock_guard lock(sessions_mu_);
        live_fds_.insert(fd);
    }
    ServerSession session(std::move(client), channel_, tracer_, tracer_.component().name);
    try {
        while (auto request = session.next_request()) {
            Frame response = handle(*request);
            session.respond(std::move(response));
        }
    } catch (const std::exception&) {
        // Refused channel, authentication failure, or transport error: the
        // session already answered where the protocol requires it.
    }
    std::lock_guard lock(sessions_mu_);
    live_fds_.erase(fd); // socket closes after this, so stop() never hits a stale fd
}

Frame CloudService::handle(const Frame& request) {
    const std::string& type = request.header.message_type;
    const std::string interaction = request.header.interaction;
    try {
        if (type == "REGISTER") {
            auto [service, provider_ep] = parse_registration_payload(request.payload);
            ServiceRegistration reg{service,
                                    ComponentId{request.header.sender, provider_ep},
                                    wall_utc_ms()};
            registry_.register_service(reg);
            return Frame{{"REGISTER_OK", interaction, "", false}, "ok"};
        }
        if (type == "ORCH_REQUEST") {
            auto result = orchestrate(registry_, acl_, request.header.sender, request.payload,
                                      tracer_, InteractionId(interaction));
            if (!result.ok) return Frame{{"ERROR", interaction, "", false}, result.error};
            return Frame{{"ORCH_RESPONSE", interaction, "", false},
                         encode_endpoint_payload(result.provider)};
        }
        return Frame{{"ERROR", interaction, "", false}, "unexpected message type: " + type};
    } catch (const std::invalid_argument& e) {
        return Frame{{"ERROR", interaction, "", false}, e.what()};
    }
}

void CloudService::stop() {
    if (stopping_.exchange(true)) return;
    listener_.shutdown_both();
    listener_.close();
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> sessions;
    {
        std::lock_guard lock(sessions_mu_);
        sessions.swap(sessions_);
        for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    for (auto& t : sessions)
        if (t.joinable()) t.join();
}

} // namespace seccost
