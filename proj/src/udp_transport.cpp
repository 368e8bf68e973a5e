#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "wheelcomm/transport.hpp"
#include "wheelcomm/wire.hpp"

namespace wheelcomm {

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

sockaddr_in make_address(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw TransportError("invalid IPv4 address '" + host + "'");
    return addr;
}

}  // namespace

UdpTransport::UdpTransport(std::uint32_t self_id, std::uint16_t bind_port, std::vector<UdpPeer> peers,
                           std::string bind_host)
    : self_(self_id) {
    const auto addr = make_address(bind_host, bind_port);
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw TransportError(errno_text("socket"));
    if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        const auto msg = errno_text("bind");
        ::close(fd_);
        throw TransportError(msg);
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
    for (auto& p : peers) add_peer(p);
}

UdpTransport::~UdpTransport() {
    stop_receiver();
    if (fd_ >= 0) ::close(fd_);
}

void UdpTransport::add_peer(const UdpPeer& peer) {
    make_address(peer.host, peer.port);  // validate early
    peers_[peer.id] = peer;
}

SendOutcome UdpTransport::send(Datagram d, Tick /*now*/) {
    if (d.bytes.size() > kMaxDatagram) throw TransportError("datagram exceeds maximum size");
    std::vector<const UdpPeer*> targets;
    if (d.destination == kAnyEndpoint) {
        for (const auto& [id, p] : peers_)
            if (id != self_) targets.push_back(&p);
    } else {
        auto it = peers_.find(d.destination);
        if (it == peers_.end()) throw TransportError("unknown destination " + std::to_string(d.destination));
        targets.push_back(&it->second);
    }
    SendOutcome outcome;
    for (const auto* p : targets) {
        const auto addr = make_address(p->host, p->port);
        const auto n = ::sendto(fd_, d.bytes.data(), d.bytes.size(), 0, reinterpret_cast<const sockaddr*>(&addr),
                                sizeof(addr));
        if (n < 0) throw TransportError(errno_text("sendto"));
        ++outcome.scheduled;
    }
    return outcome;
}

std::optional<Datagram> UdpTransport::read_one(int timeout_ms) {
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, timeout_ms);
    if (ready < 0) {
        if (errno == EINTR) return std::nullopt;
        throw TransportError(errno_text("poll"));
    }
    if (ready == 0) return std::nullopt;
    Bytes buf(kMaxDatagram);
    const auto n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n < 0) {
        // ICMP errors from earlier sends surface here; they do not affect receiving.
        if (errno == ECONNREFUSED || errno == EAGAIN) return std::nullopt;
        throw TransportError(errno_text("recv"));
    }
    buf.resize(static_cast<std::size_t>(n));
    return Datagram{0, self_, std::move(buf)};
}

std::vector<Datagram> UdpTransport::poll(std::uint32_t /*endpoint*/, Tick /*now*/) {
    std::vector<Datagram> out;
    if (receiver_.joinable()) {
        std::lock_guard lock(mu_);
        out.assign(std::make_move_iterator(inbox_.begin()), std::make_move_iterator(inbox_.end()));
        inbox_.clear();
        return out;
    }
    while (auto d = read_one(0)) out.push_back(std::move(*d));
    return out;
}

std::optional<Datagram> UdpTransport::receive(std::chrono::milliseconds timeout) {
    if (!receiver_.joinable()) return read_one(static_cast<int>(timeout.count()));
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        {
            std::lock_guard lock(mu_);
            if (!inbox_.empty()) {
                auto d = std::move(inbox_.front());
                inbox_.pop_front();
                return d;
            }
        }
        if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
}

void UdpTransport::start_receiver() {
    if (receiver_.joinable()) return;
    receiver_ = std::jthread([this](std::stop_token stop) {
        while (!stop.stop_requested()) {
            std::optional<Datagram> d;
            try {
                d = read_one(10);
            } catch (const TransportError&) {
                return;
            }
            if (!d) continue;
            std::lock_guard lock(mu_);
            inbox_.push_back(std::move(*d));
        }
    });
}

void UdpTransport::stop_receiver() {
    if (!receiver_.joinable()) return;
    receiver_.request_stop();
    receiver_.join();
}

}  // namespace wheelcomm
