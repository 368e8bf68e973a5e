#include "wheelcomm/pubsub.hpp"

#include <algorithm>

namespace wheelcomm {

namespace {

// Lost seqs are listed individually up to this many per event; beyond it only
// the counters move.
constexpr std::uint64_t kMaxListedLoss = 65536;

}  // namespace

void QosPolicy::validate() const {
    if (history_depth < 1) throw std::invalid_argument("history_depth must be >= 1");
    if (heartbeat_period < 1) throw std::invalid_argument("heartbeat_period must be >= 1 ms");
}

// ---- Writer ---------------------------------------------------------------

Writer::Writer(std::uint32_t writer_id, std::string topic, QosPolicy qos, std::size_t max_payload)
    : id_(writer_id), topic_(std::move(topic)), qos_(qos), max_payload_(max_payload) {
    qos_.validate();
}

WirePacket Writer::data_packet(const HistoryEntry& e) const {
    return WirePacket{id_, topic_, DataBody{e.seq, e.payload}};
}

std::uint64_t Writer::publish(Bytes payload, std::vector<Outgoing>& out) {
    if (payload.size() > max_payload_)
        throw PubSubError("payload of " + std::to_string(payload.size()) + " bytes exceeds " +
                          std::to_string(max_payload_));
    const auto seq = next_seq_++;
    history_.push_back(HistoryEntry{seq, std::move(payload)});
    while (history_.size() > qos_.history_depth) history_.pop_front();
    for (const auto& [reader, proxy] : proxies_) out.push_back(Outgoing{reader, data_packet(history_.back())});
    return seq;
}

std::vector<Outgoing> Writer::on_acknack(std::uint32_t reader_id, std::uint64_t ack_floor,
                                         std::span<const std::uint64_t> missing) {
    auto it = proxies_.find(reader_id);
    if (it == proxies_.end()) throw PubSubError("ACKNACK from unknown reader " + std::to_string(reader_id));
    auto& proxy = it->second;
    if (ack_floor > 0) proxy.highest_acked = std::max(proxy.highest_acked, std::min(ack_floor - 1, next_seq_ - 1));
    proxy.pending_repair.erase(proxy.pending_repair.begin(), proxy.pending_repair.lower_bound(ack_floor));

    std::vector<std::uint64_t> wanted(missing.begin(), missing.end());
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

    std::vector<Outgoing> out;
    std::vector<std::uint64_t> unavailable;
    const std::uint64_t first = history_.empty() ? next_seq_ : history_.front().seq;
    for (auto seq : wanted) {
        if (seq == 0 || seq >= next_seq_) continue;
        if (seq >= first) {
            out.push_back(Outgoing{reader_id, data_packet(history_[seq - first])});
            proxy.pending_repair.insert(seq);
            ++retransmissions_;
        } else {
            unavailable.push_back(seq);
        }
    }
    for (std::size_t i = 0; i < unavailable.size(); i += kMaxRepairList) {
        const auto end = std::min(unavailable.size(), i + kMaxRepairList);
        GapBody gap{std::vector<std::uint64_t>(unavailable.begin() + static_cast<std::ptrdiff_t>(i),
                                               unavailable.begin() + static_cast<std::ptrdiff_t>(end))};
        out.push_back(Outgoing{reader_id, WirePacket{id_, topic_, std::move(gap)}});
    }
    gaps_reported_ += unavailable.size();
    return out;
}

WirePacket Writer::heartbeat() const {
    const std::uint64_t first = history_.empty() ? next_seq_ : history_.front().seq;
    return WirePacket{id_, topic_, HeartbeatBody{first, next_seq_ - 1}};
}

std::vector<Outgoing> Writer::on_heartbeat_timer() const {
    std::vector<Outgoing> out;
    if (qos_.reliability != Reliability::Reliable) return out;
    const std::uint64_t last = next_seq_ - 1;
    const std::uint64_t hist_first = history_.empty() ? next_seq_ : history_.front().seq;
    for (const auto& [reader, proxy] : proxies_) {
        const auto first = std::min(std::max(hist_first, proxy.first_relevant), last + 1);
        out.push_back(Outgoing{reader, WirePacket{id_, topic_, HeartbeatBody{first, last}}});
    }
    return out;
}

void Writer::add_proxy(std::uint32_t reader_id) {
    if (proxies_.contains(reader_id)) return;
    proxies_.emplace(reader_id, ReaderProxy{reader_id, next_seq_, next_seq_ - 1, {}});
}

bool Writer::remove_proxy(std::uint32_t reader_id) { return proxies_.erase(reader_id) > 0; }

std::size_t Writer::history_bytes() const noexcept {
    std::size_t total = 0;
    for (const auto& e : history_) total += e.payload.size();
    return total;
}

// ---- Reader ---------------------------------------------------------------

Reader::Reader(std::uint32_t reader_id, std::string topic, Reliability reliability, std::size_t reorder_limit)
    : id_(reader_id), topic_(std::move(topic)), reliability_(reliability), reorder_limit_(reorder_limit) {}

std::optional<std::uint64_t> Reader::expected_seq(std::uint32_t writer_id) const {
    auto it = links_.find(writer_id);
    if (it == links_.end() || !it->second.synced) return std::nullopt;
    return it->second.expected;
}

std::size_t Reader::buffered(std::uint32_t writer_id) const {
    auto it = links_.find(writer_id);
    return it == links_.end() ? 0 : it->second.buffer.size();
}

ReaderOutput Reader::on_packet(const WirePacket& pkt) {
    ReaderOutput out;
    if (pkt.topic != topic_) return out;
    auto& link = links_[pkt.sender_id];
    switch (pkt.kind()) {
        case PacketKind::Data: on_data(link, pkt.sender_id, std::get<DataBody>(pkt.body), out); break;
        case PacketKind::Heartbeat: on_heartbeat(link, pkt.sender_id, std::get<HeartbeatBody>(pkt.body), out); break;
        case PacketKind::Gap: on_gap(link, pkt.sender_id, std::get<GapBody>(pkt.body), out); break;
        default: break;
    }
    return out;
}

void Reader::on_data(Link& link, std::uint32_t writer, DataBody data, ReaderOutput& out) {
    if (reliability_ == Reliability::BestEffort) {
        if (!link.synced) {
            link.synced = true;
            link.expected = data.seq;
        }
        if (data.seq < link.expected) {
            ++duplicates_;
            return;
        }
        const auto skipped = data.seq - link.expected;
        lost_ += skipped;
        for (auto s = link.expected; s < data.seq && s - link.expected < kMaxListedLoss; ++s) out.lost.push_back(s);
        out.delivered.push_back(Delivery{writer, data.seq, std::move(data.payload)});
        ++delivered_;
        link.expected = data.seq + 1;
        return;
    }

    if ((link.synced && data.seq < link.expected) || link.buffer.contains(data.seq)) {
        ++duplicates_;
        return;
    }
    if (link.buffer.size() >= reorder_limit_) return;  // repaired later
    link.gapped.erase(data.seq);
    link.buffer.emplace(data.seq, std::move(data.payload));
    if (link.synced) flush(link, writer, out);
}

void Reader::on_heartbeat(Link& link, std::uint32_t writer, const HeartbeatBody& hb, ReaderOutput& out) {
    if (reliability_ != Reliability::Reliable) return;
    if (!link.synced) {
        link.synced = true;
        link.expected = hb.first;
        link.buffer.erase(link.buffer.begin(), link.buffer.lower_bound(hb.first));
    } else if (hb.first > link.expected) {
        // Everything below hb.first that is not buffered is gone for good.
        while (link.expected < hb.first) {
            auto head = link.buffer.begin();
            if (head != link.buffer.end() && head->first == link.expected) {
                out.delivered.push_back(Delivery{writer, head->first, std::move(head->second)});
                ++delivered_;
                link.buffer.erase(head);
                ++link.expected;
                continue;
            }
            const auto stop = head != link.buffer.end() && head->first < hb.first ? head->first : hb.first;
            lost_ += stop - link.expected;
            for (auto s = link.expected; s < stop && s - link.expected < kMaxListedLoss; ++s) out.lost.push_back(s);
            link.expected = stop;
        }
    }
    link.gapped.erase(link.gapped.begin(), link.gapped.lower_bound(link.expected));
    flush(link, writer, out);

    if (hb.last < link.expected) return;
    AckNackBody nack{link.expected, {}};
    for (auto s = link.expected; s <= hb.last && nack.missing.size() < kMaxRepairList; ++s)
        if (!link.buffer.contains(s) && !link.gapped.contains(s)) nack.missing.push_back(s);
    if (nack.missing.empty()) return;
    out.acknack = Outgoing{writer, WirePacket{id_, topic_, std::move(nack)}};
}

void Reader::on_gap(Link& link, std::uint32_t writer, const GapBody& gap, ReaderOutput& out) {
    if (reliability_ != Reliability::Reliable || !link.synced) return;
    for (auto s : gap.seqs)
        if (s >= link.expected && !link.buffer.contains(s)) link.gapped.insert(s);
    flush(link, writer, out);
}

void Reader::flush(Link& link, std::uint32_t writer, ReaderOutput& out) {
    while (true) {
        auto head = link.buffer.begin();
        if (head != link.buffer.end() && head->first == link.expected) {
            out.delivered.push_back(Delivery{writer, head->first, std::move(head->second)});
            ++delivered_;
            link.buffer.erase(head);
        } else if (link.gapped.erase(link.expected) > 0) {
            out.lost.push_back(link.expected);
            ++lost_;
        } else {
            break;
        }
        ++link.expected;
    }
}

// ---- Participant ----------------------------------------------------------

Participant::Participant(std::uint32_t node_id, Tick announce_period)
    : id_(node_id), announce_period_(announce_period) {
    if (announce_period < 1) throw std::invalid_argument("announce period must be >= 1 ms");
}

Writer& Participant::create_writer(const std::string& topic, QosPolicy qos) {
    if (writers_.contains(topic)) throw PubSubError("writer for '" + topic + "' already exists");
    auto& w = writers_.emplace(topic, Writer(id_, topic, qos)).first->second;
    next_heartbeat_[topic] = qos.heartbeat_period;
    for (const auto& [node, info] : peers_)
        if (std::find(info.topics.begin(), info.topics.end(), topic) != info.topics.end()) w.add_proxy(node);
    return w;
}

Reader& Participant::create_reader(const std::string& topic, Reliability reliability) {
    if (readers_.contains(topic)) throw PubSubError("reader for '" + topic + "' already exists");
    return readers_.emplace(topic, Reader(id_, topic, reliability)).first->second;
}

Writer* Participant::writer(const std::string& topic) {
    auto it = writers_.find(topic);
    return it == writers_.end() ? nullptr : &it->second;
}

Reader* Participant::reader(const std::string& topic) {
    auto it = readers_.find(topic);
    return it == readers_.end() ? nullptr : &it->second;
}

std::vector<Outgoing> Participant::publish(const std::string& topic, Bytes payload) {
    auto* w = writer(topic);
    if (w == nullptr) throw PubSubError("no writer for '" + topic + "'");
    std::vector<Outgoing> out;
    w->publish(std::move(payload), out);
    return out;
}

WirePacket Participant::announce() const {
    AnnounceBody body{id_, {}};
    for (const auto& [topic, r] : readers_) body.topics.push_back(topic);
    return WirePacket{id_, "", std::move(body)};
}

void Participant::on_announce(const AnnounceBody& body, Tick now) {
    if (body.node_id == id_) return;
    peers_[body.node_id] = PeerInfo{body.topics, now + 3 * announce_period_};
    for (auto& [topic, w] : writers_) {
        if (std::find(body.topics.begin(), body.topics.end(), topic) != body.topics.end())
            w.add_proxy(body.node_id);
        else
            w.remove_proxy(body.node_id);
    }
}

void Participant::drop_peer(std::uint32_t node) {
    peers_.erase(node);
    for (auto& [topic, w] : writers_) w.remove_proxy(node);
}

std::vector<Outgoing> Participant::on_timer(Tick now) {
    std::vector<Outgoing> out;
    if (now >= next_announce_) {
        out.push_back(Outgoing{kBroadcast, announce()});
        while (next_announce_ <= now) next_announce_ += announce_period_;
    }
    for (auto& [topic, w] : writers_) {
        auto& due = next_heartbeat_[topic];
        if (now < due) continue;
        auto hbs = w.on_heartbeat_timer();
        out.insert(out.end(), std::make_move_iterator(hbs.begin()), std::make_move_iterator(hbs.end()));
        while (due <= now) due += w.qos().heartbeat_period;
    }
    std::vector<std::uint32_t> expired;
    for (const auto& [node, info] : peers_)
        if (info.deadline <= now) expired.push_back(node);
    for (auto node : expired) drop_peer(node);
    return out;
}

std::vector<Outgoing> Participant::on_datagram(ByteView bytes, Tick now, std::vector<TopicDelivery>& delivered) {
    WirePacket pkt;
    try {
        pkt = decode(bytes);
    } catch (const DecodeError&) {
        ++decode_failures_;
        return {};
    }
    return on_packet(pkt, now, delivered);
}

std::vector<Outgoing> Participant::on_packet(const WirePacket& pkt, Tick now, std::vector<TopicDelivery>& delivered) {
    std::vector<Outgoing> out;
    switch (pkt.kind()) {
        case PacketKind::Announce:
            on_announce(std::get<AnnounceBody>(pkt.body), now);
            break;
        case PacketKind::AckNack: {
            auto* w = writer(pkt.topic);
            if (w == nullptr || !w->has_proxy(pkt.sender_id)) {
                ++rejected_;
                break;
            }
            if (auto peer = peers_.find(pkt.sender_id); peer != peers_.end())
                peer->second.deadline = std::max(peer->second.deadline, now + 3 * announce_period_);
            const auto& nack = std::get<AckNackBody>(pkt.body);
            out = w->on_acknack(pkt.sender_id, nack.ack_floor, nack.missing);
            break;
        }
        default: {
            auto* r = reader(pkt.topic);
            if (r == nullptr) {
                ++rejected_;
                break;
            }
            const auto lost_before = r->lost_count();
            auto result = r->on_packet(pkt);
            lost_total_ += r->lost_count() - lost_before;
            for (auto& d : result.delivered) delivered.push_back(TopicDelivery{pkt.topic, std::move(d)});
            if (result.acknack) out.push_back(std::move(*result.acknack));
            break;
        }
    }
    return out;
}

}  // namespace wheelcomm
