#include <algorithm>
#include <cmath>

#include "wheelcomm/transport.hpp"
#include "wheelcomm/wire.hpp"

namespace wheelcomm {

void LinkParams::validate() const {
    if (base_latency < 0) throw std::invalid_argument("link latency must be >= 0");
    if (jitter < 0) throw std::invalid_argument("link jitter must be >= 0");
    if (!(drop_prob >= 0.0 && drop_prob <= 1.0)) throw std::invalid_argument("drop_prob must be in [0, 1]");
}

SimChannel::SimChannel(LinkParams link, std::uint64_t seed) : link_(link), rng_(seed) { link_.validate(); }

void SimChannel::attach(std::uint32_t endpoint) {
    if (std::find(endpoints_.begin(), endpoints_.end(), endpoint) == endpoints_.end()) endpoints_.push_back(endpoint);
}

Tick SimChannel::schedule(const Datagram& d, Tick now) {
    double start = static_cast<double>(now);
    if (link_.bandwidth_bps > 0) {
        auto& free_at = tx_free_at_[d.source];
        start = std::max(start, free_at);
        const double airtime_ms = static_cast<double>(d.bytes.size()) * 8.0 * 1000.0 /
                                  static_cast<double>(link_.bandwidth_bps);
        free_at = start + airtime_ms;
        start = free_at;
    }
    ++stats_.sent;
    if (draw_unit(rng_) < link_.drop_prob) {
        ++stats_.dropped;
        return -1;
    }
    Tick at = static_cast<Tick>(std::ceil(start)) + link_.base_latency;
    if (link_.jitter > 0) at += draw_int(rng_, -link_.jitter, link_.jitter);
    at = std::max(at, now);

    std::uint64_t order = 0;
    if (link_.allow_reorder) {
        order = rng_();
    } else {
        auto& last = last_delivery_[{d.source, d.destination}];
        at = std::max(at, last);
        last = at;
        order = send_counter_;
    }
    ++send_counter_;
    // Keys must be unique even when a random tie-breaker collides.
    while (in_flight_.contains({at, order})) ++order;
    in_flight_.emplace(std::make_pair(at, order), d);
    ++stats_.in_flight;
    return at;
}

SendOutcome SimChannel::send(Datagram d, Tick now) {
    if (d.bytes.size() > kMaxDatagram)
        throw TransportError("datagram of " + std::to_string(d.bytes.size()) + " bytes exceeds maximum");
    SendOutcome outcome;
    auto account = [&](Tick at) {
        if (at < 0) {
            ++outcome.dropped;
        } else {
            ++outcome.scheduled;
            outcome.deliver_at = at;
        }
    };
    if (d.destination != kAnyEndpoint) {
        account(schedule(d, now));
        return outcome;
    }
    for (auto ep : endpoints_) {
        if (ep == d.source) continue;
        Datagram copy{d.source, ep, d.bytes};
        account(schedule(copy, now));
    }
    return outcome;
}

std::vector<Datagram> SimChannel::poll(Tick now) {
    std::vector<Datagram> out;
    auto it = in_flight_.begin();
    while (it != in_flight_.end() && it->first.first <= now) {
        out.push_back(std::move(it->second));
        it = in_flight_.erase(it);
    }
    stats_.delivered += out.size();
    stats_.in_flight -= out.size();
    return out;
}

std::vector<Datagram> SimChannel::poll(std::uint32_t endpoint, Tick now) {
    std::vector<Datagram> out;
    for (auto it = in_flight_.begin(); it != in_flight_.end() && it->first.first <= now;) {
        if (it->second.destination == endpoint) {
            out.push_back(std::move(it->second));
            it = in_flight_.erase(it);
        } else {
            ++it;
        }
    }
    stats_.delivered += out.size();
    stats_.in_flight -= out.size();
    return out;
}

}  // namespace wheelcomm
