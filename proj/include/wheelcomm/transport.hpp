#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "wheelcomm/bytes.hpp"
#include "wheelcomm/random.hpp"

namespace wheelcomm {

inline constexpr std::uint16_t kDefaultPort = 7447;
inline constexpr std::uint32_t kAnyEndpoint = 0xFFFFFFFFu;

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Datagram {
    std::uint32_t source = 0;
    std::uint32_t destination = 0;  // kAnyEndpoint fans out to every other endpoint
    Bytes bytes;
    friend bool operator==(const Datagram&, const Datagram&) = default;
};

struct SendOutcome {
    std::size_t scheduled = 0;
    std::size_t dropped = 0;
    Tick deliver_at = -1;  // last scheduled copy
};

/// Datagram hand-off between pub/sub engines. No delivery guarantees.
class Transport {
public:
    virtual ~Transport() = default;
    virtual SendOutcome send(Datagram d, Tick now) = 0;
    virtual std::vector<Datagram> poll(std::uint32_t endpoint, Tick now) = 0;
};

struct LinkParams {
    Tick base_latency = 2;
    Tick jitter = 1;  // uniform integer in [-jitter, +jitter]
    double drop_prob = 0.001;
    bool allow_reorder = false;
    std::uint64_t bandwidth_bps = 0;  // 0 = unlimited

    static LinkParams ideal() { return LinkParams{0, 0, 0.0, false, 0}; }
    /// Throws std::invalid_argument on negative latency/jitter or drop_prob outside [0, 1].
    void validate() const;
};

struct ChannelStats {
    std::uint64_t sent = 0;  // copies offered to the channel
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t in_flight = 0;
};

/// Seeded lossy channel owned by the simulation loop.
///
/// A copy is dropped with probability drop_prob, otherwise delivered at
/// now + latency + U(-jitter, +jitter) (never before now). Without
/// allow_reorder, copies between one source/destination pair keep send order.
class SimChannel : public Transport {
public:
    SimChannel(LinkParams link, std::uint64_t seed);

    /// Endpoints reached by kAnyEndpoint sends.
    void attach(std::uint32_t endpoint);

    /// Throws TransportError if the datagram exceeds the maximum datagram size.
    SendOutcome send(Datagram d, Tick now) override;
    /// Everything due at `now`, ordered by delivery tick.
    std::vector<Datagram> poll(Tick now);
    std::vector<Datagram> poll(std::uint32_t endpoint, Tick now) override;

    const ChannelStats& stats() const noexcept { return stats_; }
    const LinkParams& link() const noexcept { return link_; }

private:
    Tick schedule(const Datagram& d, Tick now);

    LinkParams link_;
    Rng rng_;
    std::vector<std::uint32_t> endpoints_;
    std::map<std::pair<Tick, std::uint64_t>, Datagram> in_flight_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, Tick> last_delivery_;
    std::map<std::uint32_t, double> tx_free_at_;
    std::uint64_t send_counter_ = 0;
    ChannelStats stats_;
};

struct UdpPeer {
    std::uint32_t id = 0;
    std::string host = "127.0.0.1";
    std::uint16_t port = kDefaultPort;
};

/// UDP socket endpoint. Datagrams pass through byte for byte; the source id
/// of received datagrams is unknown (0) and must be read from the payload.
///
/// With start_receiver() a background thread drains the socket into a locked
/// hand-off queue; otherwise poll() reads the socket directly.
class UdpTransport : public Transport {
public:
    /// Binds 127.0.0.1:`bind_port` (0 picks an ephemeral port).
    UdpTransport(std::uint32_t self_id, std::uint16_t bind_port, std::vector<UdpPeer> peers = {},
                 std::string bind_host = "127.0.0.1");
    ~UdpTransport() override;

    UdpTransport(const UdpTransport&) = delete;
    UdpTransport& operator=(const UdpTransport&) = delete;

    std::uint16_t local_port() const noexcept { return port_; }
    std::uint32_t id() const noexcept { return self_; }
    void add_peer(const UdpPeer& peer);

    /// Throws TransportError for an unknown destination, an unresolvable host
    /// or a failing sendto().
    SendOutcome send(Datagram d, Tick now) override;
    std::vector<Datagram> poll(std::uint32_t endpoint, Tick now) override;
    /// Waits up to `timeout` for one datagram.
    std::optional<Datagram> receive(std::chrono::milliseconds timeout);

    void start_receiver();
    void stop_receiver();

private:
    std::optional<Datagram> read_one(int timeout_ms);

    std::uint32_t self_;
    int fd_ = -1;
    std::uint16_t port_ = 0;
    std::map<std::uint32_t, UdpPeer> peers_;
    std::jthread receiver_;
    std::mutex mu_;
    std::deque<Datagram> inbox_;
};

}  // namespace wheelcomm
