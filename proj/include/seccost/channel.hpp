#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "seccost/frame.hpp"
#include "seccost/net.hpp"
#include "seccost/tracer.hpp"

namespace seccost {

// Fixed per-message growth of a sealed payload: 12-byte nonce + 16-byte tag.
inline constexpr size_t kAeadOverheadBytes = 28;
inline constexpr size_t kPskBytes = 32;
inline constexpr size_t kHandshakeNonceBytes = 16;

enum class ChannelMode { Insecure, Secure };

struct ChannelConfig {
    ChannelMode mode = ChannelMode::Insecure;
    std::vector<uint8_t> psk; // 32 bytes, Secure only

    void validate() const;
};

ChannelConfig insecure_channel();
ChannelConfig secure_channel(std::vector<uint8_t> psk);

std::vector<uint8_t> psk_from_hex(const std::string& hex);
std::string psk_to_hex(const std::vector<uint8_t>& psk);

// Handshake verification failed, wrong key, or protocol mismatch.
struct ChannelRefused : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ciphertext failed authentication.
struct SealError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Post-handshake AEAD state for one side of a secure channel. Sealed layout:
// nonce(12) || ciphertext || tag(16); the frame header travels as associated
// data so it is authenticated but stays readable on the wire.
class Sealer {
public:
    Sealer(std::vector<uint8_t> key, std::string send_prefix, std::string recv_prefix);

    std::string seal(const std::string& payload, const std::string& aad);
    std::string unseal(const std::string& sealed, const std::string& aad);

private:
    std::vector<uint8_t> key_;
    std::string send_prefix_;
    std::string recv_prefix_;
    uint64_t send_counter_ = 0;
};

// Derives the client/server sealers from the pre-shared key and the two
// handshake nonces; both sides must arrive at the same pair.
Sealer make_client_sealer(const std::vector<uint8_t>& psk, const std::string& client_nonce,
                          const std::string& server_nonce);
Sealer make_server_sealer(const std::vector<uint8_t>& psk, const std::string& client_nonce,
                          const std::string& server_nonce);

// Size the frame would have on the plaintext channel; used for wire-byte
// attribution so secure and insecure runs account payloads identically.
uint64_t plaintext_frame_bytes(const Frame& f);

// Client side of a channel. On Secure, open() performs the HELLO/HELLO_OK
// nonce exchange (one "handshake" trace) and refuses on a bad confirmation
// tag; sealing and opening frames emit "encrypt"/"decrypt" traces.
class ClientChannel {
public:
    static ClientChannel open(const ChannelConfig& cfg, const Endpoint& peer, Tracer& tracer,
                              const InteractionId& interaction, const std::string& sender_name);

    // Full wire bytes for the frame, sealed when secure.
    std::string prepare(Frame f);
    void send_wire(const std::string& wire);

    // Next frame body; nullopt on orderly close.
    std::optional<std::string> recv_body();

    // Parses (and on secure, unseals) a received body.
    Frame open_body(const std::string& body);

    bool secure() const { return sealer_ != nullptr; }
    const std::string& sender_name() const { return sender_name_; }
    void close() { socket_.close(); }

private:
    ClientChannel(Socket s, Tracer& tracer, InteractionId interaction, std::string sender_name)
        : socket_(std::move(s)), tracer_(&tracer), interaction_(std::move(interaction)),
          sender_name_(std::move(sender_name)) {}

    Socket socket_;
    Tracer* tracer_;
    InteractionId interaction_;
    std::string sender_name_;
    std::unique_ptr<Sealer> sealer_;
};

// Server side of one accepted connection. next_request() transparently runs
// the handshake when the first frame is HELLO and enforces the channel mode.
class ServerSession {
public:
    ServerSession(Socket s, const ChannelConfig& cfg, Tracer& tracer, std::string server_name);

    // Next decoded request; nullopt at end of stream. On an authentication
    // failure an ERROR frame is sent before SealError propagates.
    std::optional<Frame> next_request();

    void respond(Frame f);

    bool secure_established() const { return sealer_ != nullptr; }

private:
    void handle_hello(const Frame& hello);

    Socket socket_;
    ChannelConfig cfg_;
    Tracer* tracer_;
    std::string server_name_;
    std::unique_ptr<Sealer> sealer_;
    InteractionId last_interaction_{"-"};
};

} // namespace seccost
