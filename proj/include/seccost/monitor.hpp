#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "seccost/ids.hpp"
#include "seccost/net.hpp"

namespace seccost {

// One intercepted wire message. byte_count covers the whole frame including
// the 4-byte length prefix and, on the secure channel, all crypto overhead.
struct MessageRecord {
    int64_t timestamp_utc_ms = 0;
    Endpoint sender;
    Endpoint receiver;
    uint64_t byte_count = 0;
    InteractionId interaction;
    std::string message_type;
    bool encrypted = false;

    // Truncated-frame diagnostics; exempt from the byte_count >= 5 invariant.
    bool is_diagnostic() const { return message_type == "PARTIAL_FRAME"; }

    void validate() const;
};

struct ProxyBinding {
    Endpoint listen;
    Endpoint upstream;
    std::string component_name;

    void validate() const;
};

class RecordStore {
public:
    RecordStore() = default;
    RecordStore(RecordStore&& other) noexcept : records_(std::move(other.records_)) {}
    RecordStore& operator=(RecordStore&&) = delete;
    RecordStore(const RecordStore&) = delete;
    RecordStore& operator=(const RecordStore&) = delete;

    void append(const MessageRecord& r);
    size_t size() const;
    std::vector<MessageRecord> snapshot() const;

    void save(const std::string& path) const;
    static RecordStore load(const std::string& path);

private:
    mutable std::mutex mu_;
    std::vector<MessageRecord> records_;
};

// Sum of byte_count over an interaction's records, in KB.
double packet_cost(const std::vector<MessageRecord>& records, const InteractionId& interaction);

// Transparent byte-level forwarder. Forwarding is never gated on parsing: a
// shadow parser consumes a copy of each direction's stream and emits one
// MessageRecord per complete length-prefixed frame.
class Proxy {
public:
    Proxy(ProxyBinding binding, RecordStore& sink);
    ~Proxy();
    Proxy(const Proxy&) = delete;
    Proxy& operator=(const Proxy&) = delete;

    // Actual listen endpoint (resolves port 0 bindings).
    Endpoint listen_endpoint() const { return listen_endpoint_; }

    // Stops accepting, drains in-flight connections, then returns. Idempotent.
    void stop();

private:
    struct Connection;

    void accept_loop();
    void pump(std::shared_ptr<Connection> conn, bool client_to_upstream);

    ProxyBinding binding_;
    RecordStore& sink_;
    Socket listener_;
    Endpoint listen_endpoint_;
    std::atomic<bool> stopping_{false};
    std::mutex stop_mu_;
    std::thread acceptor_;
    std::mutex conns_mu_;
    std::vector<std::shared_ptr<Connection>> conns_;
    std::vector<std::thread> pumps_;
};

std::string record_to_line(const MessageRecord& r);
MessageRecord record_from_line(const std::string& line);

} // namespace seccost
