#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace seccost {

// Wire format: 4-byte big-endian body length, then the body. The body starts
// with a cleartext key-value header terminated by a blank line, followed by
// the payload (cleartext or ciphertext, depending on the channel):
//
//   type=MEASURE_REQUEST\n
//   interaction=WL1-r001\n
//   sender=C2\n
//   encrypted=1\n
//   \n
//   <payload bytes>
//
// The header stays readable on the secure channel so the monitor can
// correlate without holding keys; the secure channel authenticates it as
// associated data.
struct FrameHeader {
    std::string message_type;
    std::string interaction;
    std::string sender;
    bool encrypted = false;
};

struct Frame {
    FrameHeader header;
    std::string payload;
};

inline constexpr size_t kLengthPrefixBytes = 4;
inline constexpr size_t kMaxFrameBody = 1u << 20;

bool is_known_message_type(const std::string& type);

// Header + payload section, without the length prefix.
std::string encode_frame_body(const Frame& f);

// Full wire bytes including the length prefix.
std::string encode_frame(const Frame& f);

// Parses a frame body. Throws on missing header terminator, unknown
// message type, or malformed fields.
Frame decode_frame_body(const std::string& body);

// Best-effort header peek used by the monitor: never throws, returns nullopt
// when the body does not parse as a frame of ours.
std::optional<FrameHeader> try_parse_header(const std::string& body);

} // namespace seccost
