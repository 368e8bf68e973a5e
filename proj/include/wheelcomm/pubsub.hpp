#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wheelcomm/random.hpp"
#include "wheelcomm/wire.hpp"

namespace wheelcomm {

enum class Reliability { BestEffort, Reliable };

struct QosPolicy {
    Reliability reliability = Reliability::Reliable;
    std::size_t history_depth = 128;
    Tick heartbeat_period = 50;

    /// Throws std::invalid_argument if history_depth < 1 or heartbeat_period < 1.
    void validate() const;
};

inline constexpr std::uint32_t kBroadcast = 0xFFFFFFFFu;
/// Upper bound on seqs listed in one ACKNACK or GAP.
inline constexpr std::size_t kMaxRepairList = 256;

struct Outgoing {
    std::uint32_t destination = kBroadcast;
    WirePacket packet;
};

class PubSubError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ReaderProxy {
    std::uint32_t reader_id = 0;
    std::uint64_t first_relevant = 1;  // first seq published after the reader matched
    std::uint64_t highest_acked = 0;
    std::set<std::uint64_t> pending_repair;  // retransmitted, not yet acknowledged
};

struct HistoryEntry {
    std::uint64_t seq = 0;
    Bytes payload;
};

/// Sequence-numbered writer with a KEEP_LAST history and one proxy per
/// matched reader. Volatile durability: a late joiner starts at the next seq.
class Writer {
public:
    Writer(std::uint32_t writer_id, std::string topic, QosPolicy qos, std::size_t max_payload = kMaxPayload);

    /// Stores the payload under next_seq and emits one DATA per proxy.
    /// Throws PubSubError if the payload exceeds max_payload.
    std::uint64_t publish(Bytes payload, std::vector<Outgoing>& out);

    /// Retransmits every requested seq still in history; the rest are answered
    /// with a GAP. Throws PubSubError for an unknown reader.
    std::vector<Outgoing> on_acknack(std::uint32_t reader_id, std::uint64_t ack_floor,
                                     std::span<const std::uint64_t> missing);

    /// One HEARTBEAT per proxy, range clipped to what that reader may ask for.
    /// Empty for best-effort writers.
    std::vector<Outgoing> on_heartbeat_timer() const;

    /// HEARTBEAT over the whole history: (first, last) or (next_seq, next_seq - 1).
    WirePacket heartbeat() const;

    void add_proxy(std::uint32_t reader_id);
    bool remove_proxy(std::uint32_t reader_id);
    bool has_proxy(std::uint32_t reader_id) const { return proxies_.contains(reader_id); }
    const std::map<std::uint32_t, ReaderProxy>& proxies() const noexcept { return proxies_; }

    std::uint32_t id() const noexcept { return id_; }
    const std::string& topic() const noexcept { return topic_; }
    const QosPolicy& qos() const noexcept { return qos_; }
    std::uint64_t next_seq() const noexcept { return next_seq_; }
    const std::deque<HistoryEntry>& history() const noexcept { return history_; }
    std::size_t history_bytes() const noexcept;

    std::uint64_t retransmissions() const noexcept { return retransmissions_; }
    std::uint64_t gaps_reported() const noexcept { return gaps_reported_; }

private:
    WirePacket data_packet(const HistoryEntry& e) const;

    std::uint32_t id_;
    std::string topic_;
    QosPolicy qos_;
    std::size_t max_payload_;
    std::uint64_t next_seq_ = 1;
    std::deque<HistoryEntry> history_;
    std::map<std::uint32_t, ReaderProxy> proxies_;
    std::uint64_t retransmissions_ = 0;
    std::uint64_t gaps_reported_ = 0;
};

struct Delivery {
    std::uint32_t writer_id = 0;
    std::uint64_t seq = 0;
    Bytes payload;
};

struct ReaderOutput {
    std::vector<Delivery> delivered;
    std::vector<std::uint64_t> lost;  // seqs given up on (GAP or skipped)
    std::optional<Outgoing> acknack;
};

/// Per-topic reader. Reliable: in order, exactly once, holding out-of-order
/// DATA until repaired or declared lost. BestEffort: in order, no duplicates,
/// gaps skipped immediately.
///
/// A reliable reader synchronises with each writer on that writer's first
/// HEARTBEAT; DATA received earlier is buffered.
class Reader {
public:
    Reader(std::uint32_t reader_id, std::string topic, Reliability reliability,
           std::size_t reorder_limit = 4096);

    ReaderOutput on_packet(const WirePacket& pkt);

    std::uint32_t id() const noexcept { return id_; }
    const std::string& topic() const noexcept { return topic_; }
    Reliability reliability() const noexcept { return reliability_; }

    /// Next in-order seq expected from `writer_id`, or nullopt before sync.
    std::optional<std::uint64_t> expected_seq(std::uint32_t writer_id) const;
    std::size_t buffered(std::uint32_t writer_id) const;
    std::uint64_t delivered_count() const noexcept { return delivered_; }
    std::uint64_t duplicates() const noexcept { return duplicates_; }
    std::uint64_t lost_count() const noexcept { return lost_; }

private:
    struct Link {
        bool synced = false;
        std::uint64_t expected = 0;
        std::map<std::uint64_t, Bytes> buffer;
        std::set<std::uint64_t> gapped;
    };

    void on_data(Link& link, std::uint32_t writer, DataBody data, ReaderOutput& out);
    void on_heartbeat(Link& link, std::uint32_t writer, const HeartbeatBody& hb, ReaderOutput& out);
    void on_gap(Link& link, std::uint32_t writer, const GapBody& gap, ReaderOutput& out);
    void flush(Link& link, std::uint32_t writer, ReaderOutput& out);

    std::uint32_t id_;
    std::string topic_;
    Reliability reliability_;
    std::size_t reorder_limit_;
    std::map<std::uint32_t, Link> links_;
    std::uint64_t delivered_ = 0;
    std::uint64_t duplicates_ = 0;
    std::uint64_t lost_ = 0;
};

struct PeerInfo {
    std::vector<std::string> topics;
    Tick deadline = 0;
};

struct TopicDelivery {
    std::string topic;
    Delivery delivery;
};

/// One node's engine: its writers, readers and peer table. Driven by
/// on_timer() and on_datagram(); callers serialise access.
class Participant {
public:
    explicit Participant(std::uint32_t node_id, Tick announce_period = 100);

    Writer& create_writer(const std::string& topic, QosPolicy qos);
    Reader& create_reader(const std::string& topic, Reliability reliability);
    Writer* writer(const std::string& topic);
    Reader* reader(const std::string& topic);

    /// DATA fan-out to the matched readers of `topic`.
    std::vector<Outgoing> publish(const std::string& topic, Bytes payload);

    WirePacket announce() const;
    /// Adds or refreshes the peer (deadline = now + 3 announce periods) and
    /// matches writers to the topics it subscribes to.
    void on_announce(const AnnounceBody& body, Tick now);

    /// Emits due ANNOUNCE and HEARTBEAT packets and expires silent peers.
    std::vector<Outgoing> on_timer(Tick now);

    /// Decodes and dispatches one datagram. Undecodable datagrams are counted
    /// and dropped. An ACKNACK from a known peer also refreshes its deadline.
    std::vector<Outgoing> on_datagram(ByteView bytes, Tick now, std::vector<TopicDelivery>& delivered);
    std::vector<Outgoing> on_packet(const WirePacket& pkt, Tick now, std::vector<TopicDelivery>& delivered);

    std::uint32_t id() const noexcept { return id_; }
    Tick announce_period() const noexcept { return announce_period_; }
    const std::map<std::uint32_t, PeerInfo>& peers() const noexcept { return peers_; }
    std::uint64_t decode_failures() const noexcept { return decode_failures_; }
    std::uint64_t rejected_packets() const noexcept { return rejected_; }
    std::uint64_t lost_total() const noexcept { return lost_total_; }

private:
    void drop_peer(std::uint32_t node);

    std::uint32_t id_;
    Tick announce_period_;
    Tick next_announce_ = 0;
    std::map<std::string, Writer> writers_;
    std::map<std::string, Tick> next_heartbeat_;
    std::map<std::string, Reader> readers_;
    std::map<std::uint32_t, PeerInfo> peers_;
    std::uint64_t decode_failures_ = 0;
    std::uint64_t rejected_ = 0;
    std::uint64_t lost_total_ = 0;
};

}  // namespace wheelcomm
