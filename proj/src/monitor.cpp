#include "seccost/monitor.hpp"

#include <fstream>
#include <sstream>

#include "seccost/frame.hpp"
#include "seccost/timeutil.hpp"

namespace seccost {

void MessageRecord::validate() const {
    if (!is_diagnostic() && byte_count < kLengthPrefixBytes + 1)
        throw std::invalid_argument("record byte_count below minimum frame size");
    if (sender == receiver)
        throw std::invalid_argument("record sender equals receiver");
}

void ProxyBinding::validate() const {
    if (listen == upstream)
        throw std::invalid_argument("proxy listen endpoint equals upstream");
    if (component_name.empty())
        throw std::invalid_argument("proxy component name must be non-empty");
    validate_endpoint(upstream);
}

void RecordStore::append(const MessageRecord& r) {
    r.validate();
    std::lock_guard lock(mu_);
    records_.push_back(r);
}

size_t RecordStore::size() const {
    std::lock_guard lock(mu_);
    return records_.size();
}

std::vector<MessageRecord> RecordStore::snapshot() const {
    std::lock_guard lock(mu_);
    return records_;
}

double packet_cost(const std::vector<MessageRecord>& records, const InteractionId& interaction) {
    uint64_t bytes = 0;
    for (const auto& r : records)
        if (r.interaction == interaction) bytes += r.byte_count;
    return static_cast<double>(bytes) / 1024.0;
}

namespace {

// Incremental length-prefixed frame splitter for one stream direction.
// Feed() returns complete frame bodies; once the stream stops looking like
// our protocol the splitter goes quiet rather than emitting garbage records.
class FrameSplitter {
public:
    void feed(const char* data, size_t len, std::vector<std::string>& complete) {
        if (broken_) return;
        buf_.append(data, len);
        while (true) {
            if (buf_.size() < kLengthPrefixBytes) return;
            uint32_t body_len = (uint32_t(uint8_t(buf_[0])) << 24) |
                                (uint32_t(uint8_t(buf_[1])) << 16) |
                                (uint32_t(uint8_t(buf_[2])) << 8) | uint32_t(uint8_t(buf_[3]));
            if (body_len == 0 || body_len > kMaxFrameBody) {
                broken_ = true;
                buf_.clear();
                return;
            }
            if (buf_.size() < kLengthPrefixBytes + body_len) return;
            complete.push_back(buf_.substr(kLengthPrefixBytes, body_len));
            buf_.erase(0, kLengthPrefixBytes + body_len);
        }
    }

    // Bytes of an unfinished frame still buffered at stream end.
    size_t pending() const { return broken_ ? 0 : buf_.size(); }

private:
    std::string buf_;
    bool broken_ = false;
};

} // namespace

struct Proxy::Connection {
    Socket client;
    Socket upstream;
    Endpoint client_ep;
    Endpoint upstream_ep;
};

Proxy::Proxy(ProxyBinding binding, RecordStore& sink) : binding_(std::move(binding)), sink_(sink) {
    binding_.validate();
    listener_ = listen_on(binding_.listen); // bind failure surfaces here
    listen_endpoint_ = listener_.local_endpoint();
    acceptor_ = std::thread(&Proxy::accept_loop, this);
}

Proxy::~Proxy() { stop(); }

void Proxy::accept_loop() {
    while (!stopping_.load()) {
        auto client = accept_on(listener_);
        if (!client) break;
        Socket upstream;
        try {
            upstream = connect_to(binding_.upstream);
        } catch (const std::exception&) {
            // Upstream unreachable: refuse the client by closing immediately.
            continue;
        }
        auto conn = std::make_shared<Connection>();
        conn->client_ep = client->peer_endpoint();
        conn->upstream_ep = upstream.peer_endpoint();
        conn->client = std::move(*client);
        conn->upstream = std::move(upstream);

        std::lock_guard lock(conns_mu_);
        if (stopping_.load()) break;
        conns_.push_back(conn);
        pumps_.emplace_back(&Proxy::pump, this, conn, true);
        pumps_.emplace_back(&Proxy::pump, this, conn, false);
    }
}

void Proxy::pump(std::shared_ptr<Connection> conn, bool client_to_upstream) {
    Socket& from = client_to_upstream ? conn->client : conn->upstream;
    Socket& to = client_to_upstream ? conn->upstream : conn->client;
    Endpoint sender = client_to_upstream ? conn->client_ep : conn->upstream_ep;
    Endpoint receiver = client_to_upstream ? conn->upstream_ep : conn->client_ep;

    FrameSplitter splitter;
    std::vector<std::string> complete;
    char buf[16 * 1024];
    try {
        while (true) {
            size_t n = recv_some(from, buf, sizeof buf);
            if (n == 0) break;
            send_all(to, buf, n); // forward first, record second
            complete.clear();
            splitter.feed(buf, n, complete);
            for (const auto& body : complete) {
                MessageRecord r;
                r.timestamp_utc_ms = wall_utc_ms();
                r.sender = sender;
                r.receiver = receiver;
                r.byte_count = kLengthPrefixBytes + body.size();
                if (auto header = try_parse_header(body)) {
                    r.message_type = header->message_type;
                    r.encrypted = header->encrypted;
                    if (!header->interaction.empty())
                        r.interaction = InteractionId(header->interaction);
                    else
                        r.interaction = InteractionId("-");
                } else {
                    r.message_type = "UNKNOWN";
                    r.interaction = InteractionId("-");
                }
                sink_.append(r);
            }
        }
    } catch (const std::exception&) {
        // Peer reset or forward failed; fall through to teardown.
    }

    if (splitter.pending() > 0) {
        MessageRecord diag;
        diag.timestamp_utc_ms = wall_utc_ms();
        diag.sender = sender;
        diag.receiver = receiver;
        diag.byte_count = splitter.pending();
        diag.interaction = InteractionId("-");
        diag.message_type = "PARTIAL_FRAME";
        sink_.append(diag);
    }

    // Propagate the half-close so the opposite pump drains and exits.
    to.shutdown_both();
    from.shutdown_both();
}

void Proxy::stop() {
    std::lock_guard stop_lock(stop_mu_);
    if (stopping_.exchange(true)) return; // double stop is a no-op
    listener_.shutdown_both();
    listener_.close();
    if (acceptor_.joinable()) acceptor_.join();

    // Drain: pumps run until their streams hit EOF, flushing in-flight frames.
    std::vector<std::thread> pumps;
    {
        std::lock_guard lock(conns_mu_);
        pumps.swap(pumps_);
    }
    for (auto& t : pumps)
        if (t.joinable()) t.join();
    std::lock_guard lock(conns_mu_);
    conns_.clear();
}

std::string record_to_line(const MessageRecord& r) {
    std::ostringstream out;
    out << to_iso8601_ms(r.timestamp_utc_ms) << '\t' << r.sender.ip << '\t' << r.sender.port
        << '\t' << r.receiver.ip << '\t' << r.receiver.port << '\t' << r.byte_count << '\t'
        << r.interaction.value << '\t' << r.message_type << '\t' << (r.encrypted ? '1' : '0');
    return out.str();
}

MessageRecord record_from_line(const std::string& line) {
    std::vector<std::string> f;
    size_t start = 0;
    while (true) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            f.push_back(line.substr(start));
            break;
        }
        f.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    if (f.size() != 9)
        throw std::invalid_argument("record line must have 9 fields, got " +
                                    std::to_string(f.size()));
    MessageRecord r;
    r.timestamp_utc_ms = from_iso8601_ms(f[0]);
    r.sender = Endpoint{f[1], static_cast<uint16_t>(std::stoi(f[2]))};
    r.receiver = Endpoint{f[3], static_cast<uint16_t>(std::stoi(f[4]))};
    r.byte_count = std::stoull(f[5]);
    r.interaction = InteractionId(f[6]);
    r.message_type = f[7];
    r.encrypted = f[8] == "1";
    return r;
}

void RecordStore::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    std::lock_guard lock(mu_);
    for (const auto& r : records_) out << record_to_line(r) << '\n';
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

RecordStore RecordStore::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open for reading: " + path);
    RecordStore store;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        store.append(record_from_line(line));
    }
    return store;
}

} // namespace seccost
