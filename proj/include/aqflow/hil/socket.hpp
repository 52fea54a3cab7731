#pragma once

// Minimal blocking TCP wrapper for the frame protocol. One listener,
// one peer; framed reads pull the 9-byte header first, then the payload.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>
#include <utility>

#include "aqflow/hil/protocol.hpp"

namespace aqflow::hil {

class SocketError : public GridError {
public:
    explicit SocketError(const std::string& msg)
        : GridError("socket: " + msg + " (" + std::strerror(errno) + ")") {}
};

class TcpStream {
public:
    TcpStream() = default;
    explicit TcpStream(int fd) : fd_(fd) {}
    TcpStream(TcpStream&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    TcpStream& operator=(TcpStream&& o) noexcept {
        if (this != &o) {
            close();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;
    ~TcpStream() { close(); }

    bool open() const { return fd_ >= 0; }

    void close() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    static TcpStream connect(const std::string& host, uint16_t port) {
        addrinfo hints{};
        hints.ai_family = AF_INET;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        const std::string service = std::to_string(port);
        if (getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || !res)
            throw SocketError("resolve " + host);
        int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
        if (fd < 0) {
            freeaddrinfo(res);
            throw SocketError("socket");
        }
        if (::connect(fd, res->ai_addr, res->ai_addrlen) != 0) {
            const int saved = errno;
            freeaddrinfo(res);
            ::close(fd);
            errno = saved;
            throw SocketError("connect " + host + ":" + service);
        }
        freeaddrinfo(res);
        int one = 1;
        setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        return TcpStream(fd);
    }

    void write_all(const uint8_t* data, size_t len) {
        while (len > 0) {
            const ssize_t n = ::send(fd_, data, len, MSG_NOSIGNAL);
            if (n <= 0) throw SocketError("send");
            data += n;
            len -= static_cast<size_t>(n);
        }
    }

    // Returns false on clean EOF before any byte; throws on mid-read EOF.
    bool read_all(uint8_t* data, size_t len) {
        size_t got = 0;
        while (got < len) {
            const ssize_t n = ::recv(fd_, data + got, len - got, 0);
            if (n == 0) {
                if (got == 0) return false;
                throw ProtocolError("peer closed mid-frame");
            }
            if (n < 0) throw SocketError("recv");
            got += static_cast<size_t>(n);
        }
        return true;
    }

    void write_frame(const Frame& f) {
        const std::vector<uint8_t> bytes = encode_frame(f);
        write_all(bytes.data(), bytes.size());
    }

    // Reads one frame. Returns false on clean EOF. Throws ProtocolError
    // on a malformed header; the caller decides whether to reply 0xFF.
    bool read_frame(Frame& out) {
        uint8_t hdr[kHeaderSize];
        if (!read_all(hdr, kHeaderSize)) return false;
        if (hdr[0] != kMagic0 || hdr[1] != kMagic1) throw ProtocolError("bad magic");
        if (!valid_frame_type(hdr[2])) throw ProtocolError("unknown frame type");
        const size_t count = detail::get_u16(hdr + 7);
        std::vector<uint8_t> buf(hdr, hdr + kHeaderSize);
        buf.resize(kHeaderSize + 4 * count);
        if (count > 0 && !read_all(buf.data() + kHeaderSize, 4 * count))
            throw ProtocolError("peer closed mid-frame");
        out = decode_frame(buf);
        return true;
    }

private:
    int fd_ = -1;
};

class TcpListener {
public:
    explicit TcpListener(uint16_t port) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) throw SocketError("socket");
        int one = 1;
        setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_ANY);
        addr.sin_port = htons(port);
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
            ::close(fd_);
            throw SocketError("bind port " + std::to_string(port));
        }
        if (::listen(fd_, 1) != 0) {
            ::close(fd_);
            throw SocketError("listen");
        }
    }
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;
    ~TcpListener() {
        if (fd_ >= 0) ::close(fd_);
    }

    uint16_t port() const {
        sockaddr_in addr{};
        socklen_t len = sizeof addr;
        if (getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
            throw SocketError("getsockname");
        return ntohs(addr.sin_port);
    }

    TcpStream accept() {
        const int fd = ::accept(fd_, nullptr, nullptr);
        if (fd < 0) throw SocketError("accept");
        int one = 1;
        setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        return TcpStream(fd);
    }

private:
    int fd_ = -1;
};

}  // namespace aqflow::hil
