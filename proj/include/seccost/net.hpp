#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "seccost/ids.hpp"

namespace seccost {

// Move-only owner of a connected or listening TCP socket.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket();
    Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void shutdown_both() noexcept;
    void close() noexcept;

    Endpoint local_endpoint() const;
    Endpoint peer_endpoint() const;

private:
    int fd_ = -1;
};

// Binds and listens on ip:port; port 0 asks the kernel for a free one. The
// actual endpoint is readable via local_endpoint().
Socket listen_on(const Endpoint& ep, int backlog = 16);

// Blocks until a client connects; empty optional when the listener was shut down.
std::optional<Socket> accept_on(Socket& listener);

Socket connect_to(const Endpoint& ep);

void send_all(Socket& s, const void* data, size_t len);
inline void send_all(Socket& s, const std::string& bytes) {
    send_all(s, bytes.data(), bytes.size());
}

// Up to len bytes; 0 on orderly shutdown.
size_t recv_some(Socket& s, void* buf, size_t len);

// Exactly len bytes, or false on clean EOF at a message boundary (0 bytes
// read); throws on EOF mid-read or socket error.
bool recv_exact(Socket& s, void* buf, size_t len);

// One length-prefixed frame body; nullopt on clean EOF before any byte.
std::optional<std::string> recv_frame_body(Socket& s);
void send_frame_body(Socket& s, const std::string& body);

} // namespace seccost
