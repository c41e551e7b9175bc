#include "seccost/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <system_error>

#include "seccost/frame.hpp"

namespace seccost {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
    throw std::system_error(errno, std::generic_category(), what);
}

sockaddr_in to_sockaddr(const Endpoint& ep) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    if (inet_pton(AF_INET, ep.ip.c_str(), &addr.sin_addr) != 1)
        throw std::invalid_argument("not an IPv4 address: " + ep.ip);
    return addr;
}

Endpoint from_sockaddr(const sockaddr_in& addr) {
    char ip[INET_ADDRSTRLEN] = {0};
    inet_ntop(AF_INET, &addr.sin_addr, ip, sizeof ip);
    return Endpoint{ip, ntohs(addr.sin_port)};
}

} // namespace

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

void Socket::shutdown_both() noexcept {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::close() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Endpoint Socket::local_endpoint() const {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    if (getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
        throw_errno("getsockname");
    return from_sockaddr(addr);
}

Endpoint Socket::peer_endpoint() const {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    if (getpeername(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
        throw_errno("getpeername");
    return from_sockaddr(addr);
}

Socket listen_on(const Endpoint& ep, int backlog) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw_errno("socket");
    Socket s(fd);
    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = to_sockaddr(ep);
    if (bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw_errno("bind " + ep.str());
    if (listen(fd, backlog) != 0) throw_errno("listen " + ep.str());
    return s;
}

std::optional<Socket> accept_on(Socket& listener) {
    while (true) {
        int fd = ::accept(listener.fd(), nullptr, nullptr);
        if (fd >= 0) {
            int one = 1;
            setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            return Socket(fd);
        }
        if (errno == EINTR) continue;
        return std::nullopt; // listener shut down or closed
    }
}

Socket connect_to(const Endpoint& ep) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw_errno("socket");
    Socket s(fd);
    sockaddr_in addr = to_sockaddr(ep);
    if (connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw_errno("connect " + ep.str());
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return s;
}

void send_all(Socket& s, const void* data, size_t len) {
    const char* p = static_cast<const char*>(data);
    while (len > 0) {
        ssize_t n = ::send(s.fd(), p, len, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_errno("send");
        }
        p += n;
        len -= static_cast<size_t>(n);
    }
}

size_t recv_some(Socket& s, void* buf, size_t len) {
    while (true) {
        ssize_t n = ::recv(s.fd(), buf, len, 0);
        if (n >= 0) return static_cast<size_t>(n);
        if (errno == EINTR) continue;
        throw_errno("recv");
    }
}

bool recv_exact(Socket& s, void* buf, size_t len) {
    char* p = static_cast<char*>(buf);
    size_t got = 0;
    while (got < len) {
        size_t n = recv_some(s, p + got, len - got);
        if (n == 0) {
            if (got == 0) return false;
            throw std::runtime_error("connection closed mid-frame");
        }
        got += n;
    }
    return true;
}

std::optional<std::string> recv_frame_body(Socket& s) {
    unsigned char prefix[kLengthPrefixBytes];
    if (!recv_exact(s, prefix, sizeof prefix)) return std::nullopt;
    uint32_t len = (uint32_t(prefix[0]) << 24) | (uint32_t(prefix[1]) << 16) |
                   (uint32_t(prefix[2]) << 8) | uint32_t(prefix[3]);
    if (len == 0 || len > kMaxFrameBody)
        throw std::runtime_error("invalid frame length: " + std::to_string(len));
    std::string body(len, '\0');
    if (!recv_exact(s, body.data(), len))
        throw std::runtime_error("connection closed before frame body");
    return body;
}

void send_frame_body(Socket& s, const std::string& body) {
    if (body.empty() || body.size() > kMaxFrameBody)
        throw std::invalid_argument("frame body size out of range");
    uint32_t len = static_cast<uint32_t>(body.size());
    unsigned char prefix[kLengthPrefixBytes] = {
        static_cast<unsigned char>((len >> 24) & 0xff),
        static_cast<unsigned char>((len >> 16) & 0xff),
        static_cast<unsigned char>((len >> 8) & 0xff),
        static_cast<unsigned char>(len & 0xff),
    };
    send_all(s, prefix, sizeof prefix);
    send_all(s, body.data(), body.size());
}

} // namespace seccost
