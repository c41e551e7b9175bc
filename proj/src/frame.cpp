#include "seccost/frame.hpp"

#include <array>
#include <stdexcept>

namespace seccost {

namespace {

const std::array<const char*, 9> kMessageTypes = {
    "REGISTER", "REGISTER_OK", "ORCH_REQUEST", "ORCH_RESPONSE", "MEASURE_REQUEST",
    "MEASURE_RESPONSE", "HELLO", "HELLO_OK", "ERROR"};

} // namespace

bool is_known_message_type(const std::string& type) {
    for (const char* t : kMessageTypes)
        if (type == t) return true;
    return false;
}

std::string encode_frame_body(const Frame& f) {
    if (!is_known_message_type(f.header.message_type))
        throw std::invalid_argument("unknown message type: " + f.header.message_type);
    std::string body;
    body.reserve(f.payload.size() + 96);
    body += "type=" + f.header.message_type + "\n";
    body += "interaction=" + f.header.interaction + "\n";
    body += "sender=" + f.header.sender + "\n";
    body += "encrypted=";
    body += f.header.encrypted ? '1' : '0';
    body += "\n\n";
    body += f.payload;
    if (body.size() > kMaxFrameBody)
        throw std::invalid_argument("frame body exceeds maximum size");
    return body;
}

std::string encode_frame(const Frame& f) {
    std::string body = encode_frame_body(f);
    uint32_t len = static_cast<uint32_t>(body.size());
    std::string wire;
    wire.reserve(kLengthPrefixBytes + body.size());
    wire.push_back(static_cast<char>((len >> 24) & 0xff));
    wire.push_back(static_cast<char>((len >> 16) & 0xff));
    wire.push_back(static_cast<char>((len >> 8) & 0xff));
    wire.push_back(static_cast<char>(len & 0xff));
    wire += body;
    return wire;
}

namespace {

// Parses "key=value" lines up to the blank line; returns payload offset.
bool parse_header_lines(const std::string& body, FrameHeader& header, size_t& payload_at) {
    size_t pos = 0;
    bool saw_type = false, saw_interaction = false, saw_sender = false, saw_encrypted = false;
    while (pos < body.size()) {
        size_t nl = body.find('\n', pos);
        if (nl == std::string::npos) return false;
        if (nl == pos) { // blank line: header ends
            payload_at = nl + 1;
            return saw_type && saw_interaction && saw_sender && saw_encrypted;
        }
        std::string line = body.substr(pos, nl - pos);
        size_t eq = line.find('=');
        if (eq == std::string::npos) return false;
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        if (key == "type") {
            header.message_type = value;
            saw_type = true;
        } else if (key == "interaction") {
            header.interaction = value;
            saw_interaction = true;
        } else if (key == "sender") {
            header.sender = value;
            saw_sender = true;
        } else if (key == "encrypted") {
            if (value != "0" && value != "1") return false;
            header.encrypted = value == "1";
            saw_encrypted = true;
        } else {
            return false; // closed header schema
        }
        pos = nl + 1;
    }
    return false;
}

} // namespace

Frame decode_frame_body(const std::string& body) {
    Frame f;
    size_t payload_at = 0;
    if (!parse_header_lines(body, f.header, payload_at))
        throw std::invalid_argument("malformed frame header");
    if (!is_known_message_type(f.header.message_type))
        throw std::invalid_argument("unknown message type: " + f.header.message_type);
    f.payload = body.substr(payload_at);
    return f;
}

std::optional<FrameHeader> try_parse_header(const std::string& body) {
    FrameHeader header;
    size_t payload_at = 0;
    if (!parse_header_lines(body, header, payload_at)) return std::nullopt;
    if (!is_known_message_type(header.message_type)) return std::nullopt;
    return header;
}

} // namespace seccost
