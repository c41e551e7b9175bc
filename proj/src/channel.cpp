#include "seccost/channel.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <cstring>

namespace seccost {

void ChannelConfig::validate() const {
    if (mode == ChannelMode::Secure && psk.size() != kPskBytes)
        throw std::invalid_argument("secure channel requires a 32-byte pre-shared key");
}

ChannelConfig insecure_channel() { return ChannelConfig{ChannelMode::Insecure, {}}; }

ChannelConfig secure_channel(std::vector<uint8_t> psk) {
    ChannelConfig cfg{ChannelMode::Secure, std::move(psk)};
    cfg.validate();
    return cfg;
}

std::vector<uint8_t> psk_from_hex(const std::string& hex) {
    if (hex.size() != 2 * kPskBytes)
        throw std::invalid_argument("psk hex must be 64 chars");
    std::vector<uint8_t> out(kPskBytes);
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw std::invalid_argument("bad hex digit in psk");
    };
    for (size_t i = 0; i < kPskBytes; ++i)
        out[i] = static_cast<uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    return out;
}

std::string psk_to_hex(const std::vector<uint8_t>& psk) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(psk.size() * 2);
    for (uint8_t b : psk) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

namespace {

std::string random_bytes(size_t n) {
    std::string out(n, '\0');
    if (RAND_bytes(reinterpret_cast<unsigned char*>(out.data()), static_cast<int>(n)) != 1)
        throw std::runtime_error("system RNG unavailable");
    return out;
}

std::string hmac_sha256(const std::vector<uint8_t>& key, const std::string& msg) {
    unsigned char mac[EVP_MAX_MD_SIZE];
    unsigned int mac_len = 0;
    if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
              reinterpret_cast<const unsigned char*>(msg.data()), msg.size(), mac, &mac_len))
        throw std::runtime_error("HMAC failure");
    return std::string(reinterpret_cast<char*>(mac), mac_len);
}

constexpr size_t kGcmNonceBytes = 12;
constexpr size_t kGcmTagBytes = 16;

std::string gcm_seal(const std::vector<uint8_t>& key, const std::string& nonce,
                     const std::string& aad, const std::string& plaintext) {
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    if (!ctx) throw std::runtime_error("cipher ctx alloc failed");
    std::string out;
    out.resize(plaintext.size() + kGcmTagBytes);
    int len = 0;
    bool ok = EVP_EncryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, key.data(),
                                 reinterpret_cast<const unsigned char*>(nonce.data())) == 1;
    if (ok && !aad.empty())
        ok = EVP_EncryptUpdate(ctx, nullptr, &len,
                               reinterpret_cast<const unsigned char*>(aad.data()),
                               static_cast<int>(aad.size())) == 1;
    int ct_len = 0;
    if (ok && !plaintext.empty()) {
        ok = EVP_EncryptUpdate(ctx, reinterpret_cast<unsigned char*>(out.data()), &len,
                               reinterpret_cast<const unsigned char*>(plaintext.data()),
                               static_cast<int>(plaintext.size())) == 1;
        ct_len = len;
    }
    if (ok)
        ok = EVP_EncryptFinal_ex(ctx, reinterpret_cast<unsigned char*>(out.data()) + ct_len,
                                 &len) == 1;
    if (ok)
        ok = EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_GET_TAG, kGcmTagBytes,
                                 out.data() + plaintext.size()) == 1;
    EVP_CIPHER_CTX_free(ctx);
    if (!ok) throw std::runtime_error("AEAD seal failed");
    return out;
}

std::string gcm_unseal(const std::vector<uint8_t>& key, const std::string& nonce,
                       const std::string& aad, const std::string& sealed) {
    if (sealed.size() < kGcmTagBytes) throw SealError("ciphertext shorter than tag");
    size_t ct_len = sealed.size() - kGcmTagBytes;
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    if (!ctx) throw std::runtime_error("cipher ctx alloc failed");
    std::string out;
    out.resize(ct_len);
    int len = 0;
    bool ok = EVP_DecryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, key.data(),
                                 reinterpret_cast<const unsigned char*>(nonce.data())) == 1;
    if (ok && !aad.empty())
        ok = EVP_DecryptUpdate(ctx, nullptr, &len,
                               reinterpret_cast<const unsigned char*>(aad.data()),
                               static_cast<int>(aad.size())) == 1;
    int pt_len = 0;
    if (ok && ct_len > 0) {
        ok = EVP_DecryptUpdate(ctx, reinterpret_cast<unsigned char*>(out.data()), &len,
                               reinterpret_cast<const unsigned char*>(sealed.data()),
                               static_cast<int>(ct_len)) == 1;
        pt_len = len;
    }
    if (ok)
        ok = EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG, kGcmTagBytes,
                                 const_cast<char*>(sealed.data()) + ct_len) == 1;
    if (ok)
        ok = EVP_DecryptFinal_ex(ctx, reinterpret_cast<unsigned char*>(out.data()) + pt_len,
                                 &len) == 1;
    EVP_CIPHER_CTX_free(ctx);
    if (!ok) throw SealError("ciphertext failed authentication");
    return out;
}

std::string derive(const std::vector<uint8_t>& psk, const std::string& label,
                   const std::string& client_nonce, const std::string& server_nonce) {
    return hmac_sha256(psk, label + client_nonce + server_nonce);
}

const char* kSessionLabel = "session-key";
const char* kConfirmLabel = "confirm-tag";
const char* kClientPrefix = "CSEQ";
const char* kServerPrefix = "SSEQ";

} // namespace

Sealer::Sealer(std::vector<uint8_t> key, std::string send_prefix, std::string recv_prefix)
    : key_(std::move(key)), send_prefix_(std::move(send_prefix)),
      recv_prefix_(std::move(recv_prefix)) {
    if (key_.size() != 32) throw std::invalid_argument("sealer key must be 32 bytes");
    if (send_prefix_.size() != 4 || recv_prefix_.size() != 4)
        throw std::invalid_argument("nonce prefixes must be 4 bytes");
}

std::string Sealer::seal(const std::string& payload, const std::string& aad) {
    std::string nonce = send_prefix_;
    uint64_t c = send_counter_++;
    for (int shift = 56; shift >= 0; shift -= 8)
        nonce.push_back(static_cast<char>((c >> shift) & 0xff));
    std::string sealed = gcm_seal(key_, nonce, aad, payload);
    return nonce + sealed;
}

std::string Sealer::unseal(const std::string& sealed, const std::string& aad) {
    if (sealed.size() < kGcmNonceBytes + kGcmTagBytes)
        throw SealError("sealed payload too short");
    std::string nonce = sealed.substr(0, kGcmNonceBytes);
    if (nonce.compare(0, 4, recv_prefix_) != 0)
        throw SealError("sealed payload from wrong direction");
    return gcm_unseal(key_, nonce, aad, sealed.substr(kGcmNonceBytes));
}

Sealer make_client_sealer(const std::vector<uint8_t>& psk, const std::string& client_nonce,
                          const std::string& server_nonce) {
    std::string key = derive(psk, kSessionLabel, client_nonce, server_nonce);
    return Sealer(std::vector<uint8_t>(key.begin(), key.end()), kClientPrefix, kServerPrefix);
}

Sealer make_server_sealer(const std::vector<uint8_t>& psk, const std::string& client_nonce,
                          const std::string& server_nonce) {
    std::string key = derive(psk, kSessionLabel, client_nonce, server_nonce);
    return Sealer(std::vector<uint8_t>(key.begin(), key.end()), kServerPrefix, kClientPrefix);
}

uint64_t plaintext_frame_bytes(const Frame& f) {
    Frame plain = f;
    plain.header.encrypted = false;
    return encode_frame(plain).size();
}

namespace {

// Splits an encoded body into header section (incl. blank line) and payload.
std::pair<std::string, std::string> split_body(const std::string& body) {
    size_t sep = body.find("\n\n");
    if (sep == std::string::npos)
        throw std::invalid_argument("frame body lacks header terminator");
    return {body.substr(0, sep + 2), body.substr(sep + 2)};
}

} // namespace

ClientChannel ClientChannel::open(const ChannelConfig& cfg, const Endpoint& peer, Tracer& tracer,
                                  const InteractionId& interaction,
                                  const std::string& sender_name) {
    cfg.validate();
    Socket s = connect_to(peer);
    ClientChannel chan(std::move(s), tracer, interaction, sender_name);
    if (cfg.mode == ChannelMode::Insecure) return chan;

    OpenTask task = tracer.begin_task(interaction, "handshake");
    std::string client_nonce = random_bytes(kHandshakeNonceBytes);
    Frame hello;
    hello.header = {"HELLO", interaction.value, sender_name, false};
    hello.payload = client_nonce;
    send_frame_body(chan.socket_, encode_frame_body(hello));

    auto body = recv_frame_body(chan.socket_);
    if (!body) throw ChannelRefused("peer closed during handshake");
    Frame reply = decode_frame_body(*body);
    if (reply.header.message_type != "HELLO_OK")
        throw ChannelRefused("handshake rejected: " + reply.payload);
    if (reply.payload.size() != kHandshakeNonceBytes + 32)
        throw ChannelRefused("malformed HELLO_OK payload");
    std::string server_nonce = reply.payload.substr(0, kHandshakeNonceBytes);
    std::string confirm = reply.payload.substr(kHandshakeNonceBytes);
    std::string expected = derive(cfg.psk, kConfirmLabel, client_nonce, server_nonce);
    if (confirm.size() != expected.size() ||
        CRYPTO_memcmp(confirm.data(), expected.data(), expected.size()) != 0)
        throw ChannelRefused("handshake confirmation mismatch (wrong pre-shared key?)");

    chan.sealer_ =
        std::make_unique<Sealer>(make_client_sealer(cfg.psk, client_nonce, server_nonce));
    tracer.end_task(task, 0);
    return chan;
}

std::string ClientChannel::prepare(Frame f) {
    f.header.sender = sender_name_;
    f.header.interaction = interaction_.value;
    if (!sealer_) {
        f.header.encrypted = false;
        return encode_frame(f);
    }
    f.header.encrypted = true;
    Frame sealed_frame = f;
    std::string header_section = split_body(encode_frame_body(Frame{f.header, ""})).first;
    OpenTask task = tracer_->begin_task(interaction_, "encrypt");
    sealed_frame.payload = sealer_->seal(f.payload, header_section);
    tracer_->end_task(task, kAeadOverheadBytes);
    return encode_frame(sealed_frame);
}

void ClientChannel::send_wire(const std::string& wire) { send_all(socket_, wire); }

std::optional<std::string> ClientChannel::recv_body() { return recv_frame_body(socket_); }

Frame ClientChannel::open_body(const std::string& body) {
    Frame f = decode_frame_body(body);
    if (!f.header.encrypted) return f;
    if (!sealer_) throw SealError("received sealed frame on plaintext channel");
    auto [header_section, sealed] = split_body(body);
    OpenTask task = tracer_->begin_task(interaction_, "decrypt");
    f.payload = sealer_->unseal(sealed, header_section);
    f.header.encrypted = false;
    tracer_->end_task(task, 0);
    return f;
}

ServerSession::ServerSession(Socket s, const ChannelConfig& cfg, Tracer& tracer,
                             std::string server_name)
    : socket_(std::move(s)), cfg_(cfg), tracer_(&tracer), server_name_(std::move(server_name)) {
    cfg_.validate();
}

void ServerSession::handle_hello(const Frame& hello) {
    InteractionId interaction(hello.header.interaction);
    OpenTask task = tracer_->begin_task(interaction, "handshake");
    if (hello.payload.size() != kHandshakeNonceBytes)
        throw ChannelRefused("malformed HELLO payload");
    std::string client_nonce = hello.payload;
    std::string server_nonce = random_bytes(kHandshakeNonceBytes);
    std::string confirm = derive(cfg_.psk, kConfirmLabel, client_nonce, server_nonce);
    Frame reply;
    reply.header = {"HELLO_OK", hello.header.interaction, server_name_, false};
    reply.payload = server_nonce + confirm;
    send_frame_body(socket_, encode_frame_body(reply));
    sealer_ = std::make_unique<Sealer>(make_server_sealer(cfg_.psk, client_nonce, server_nonce));
    last_interaction_ = interaction;
    tracer_->end_task(task, 0);
}

std::optional<Frame> ServerSession::next_request() {
    while (true) {
        auto body = recv_frame_body(socket_);
        if (!body) return std::nullopt;
        Frame f = decode_frame_body(*body);

        if (f.header.message_type == "HELLO") {
            if (cfg_.mode != ChannelMode::Secure) {
                respond(Frame{{"ERROR", f.header.interaction, server_name_, false},
                              "handshake on plaintext channel"});
                throw ChannelRefused("unexpected HELLO on plaintext channel");
            }
            handle_hello(f);
            continue;
        }

        if (cfg_.mode == ChannelMode::Secure && !sealer_) {
            respond(Frame{{"ERROR", f.header.interaction, server_name_, false},
                          "secure channel required"});
            throw ChannelRefused("request before handshake on secure channel");
        }

        last_interaction_ = InteractionId(f.header.interaction);
        if (f.header.encrypted) {
            auto [header_section, sealed] = split_body(*body);
            OpenTask task = tracer_->begin_task(last_interaction_, "decrypt");
            try {
                f.payload = sealer_->unseal(sealed, header_section);
            } catch (const SealError&) {
                tracer_->end_task(task, 0);
                respond(Frame{{"ERROR", f.header.interaction, server_name_, false},
                              "authentication failure"});
                throw;
            }
            f.header.encrypted = false;
            tracer_->end_task(task, 0);
        }
        return f;
    }
}

void ServerSession::respond(Frame f) {
    f.header.sender = server_name_;
    if (sealer_ && f.header.message_type != "ERROR") {
        f.header.encrypted = true;
        std::string header_section = split_body(encode_frame_body(Frame{f.header, ""})).first;
        OpenTask task = tracer_->begin_task(last_interaction_, "encrypt");
        f.payload = sealer_->seal(f.payload, header_section);
        tracer_->end_task(task, kAeadOverheadBytes);
        send_frame_body(socket_, encode_frame_body(f));
        return;
    }
    f.header.encrypted = false;
    send_frame_body(socket_, encode_frame_body(f));
}

} // namespace seccost
