#include "drrg/transport.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "drrg/errors.hpp"

namespace drrg {

namespace {

constexpr std::array<std::string_view, kPhaseCount> kPhaseNames{
    "DrrProbe", "DrrConnect", "Convergecast", "Broadcast", "GossipMax",
    "GossipSample", "GossipAve", "DataSpread", "Baseline",
};

}  // namespace

std::string_view to_string(Phase phase) { return kPhaseNames[static_cast<std::size_t>(phase)]; }

Phase phase_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kPhaseCount; ++i) {
        if (kPhaseNames[i] == name) return kAllPhases[i];
    }
    throw std::invalid_argument("unknown phase '" + std::string(name) + "'");
}

Payload::Payload(std::initializer_list<Field> fields) {
    if (fields.size() > kCapacity) throw ModelViolation("payload exceeds field capacity");
    for (const Field& f : fields) fields_[size_++] = f;
}

PhaseMeter MeterSnapshot::total() const {
    PhaseMeter t;
    for (const auto& p : phases) {
        t.rounds += p.rounds;
        t.messages_sent += p.messages_sent;
        t.messages_delivered += p.messages_delivered;
    }
    return t;
}

bool delta_in_analysis_range(double delta, std::size_t n) {
    if (n < 3) return false;
    return delta > 1.0 / std::log2(static_cast<double>(n)) && delta < 1.0 / 8.0;
}

NetworkSim::NetworkSim(std::size_t n, SimConfig config)
    : n_(n), config_(config), rng_(stream_seed(config.seed, 0x6E6574u)) {
    if (n == 0) throw std::invalid_argument("network needs at least one node");
    if (!(config.delta >= 0.0 && config.delta < 1.0)) throw std::invalid_argument("delta must lie in [0, 1)");
    if (config.payload_field_limit == 0 || config.payload_field_limit > Payload::kCapacity) {
        throw std::invalid_argument("payload field limit out of range");
    }
    initiated_in_.assign(n, 0);
    forward_round_.assign(n, 0);
    forward_delivered_.assign(n, 0);
    forward_hops_.assign(n, 0);
}

NetworkSim::NetworkSim(std::shared_ptr<const Graph> overlay, SimConfig config)
    : NetworkSim(overlay ? overlay->size() : 0, config) {
    overlay_ = std::move(overlay);
}

RoundHandle NetworkSim::begin_round(Phase phase) {
    if (open_) throw UsageError("begin_round called while a round is open");
    open_ = true;
    chain_max_ = 0;
    return RoundHandle(phase, ++round_id_);
}

void NetworkSim::end_round(const RoundHandle& handle) {
    check_handle(handle);
    const std::uint64_t length = routes_over_chord() ? std::max(1u, chain_max_) : 1u;
    meters_.phases[static_cast<std::size_t>(handle.phase())].rounds += length;
    rounds_total_ += length;
    open_ = false;
}

void NetworkSim::check_handle(const RoundHandle& handle) const {
    if (!open_ || handle.id() != round_id_) throw UsageError("round handle is not the open round");
}

void NetworkSim::check_payload(const Payload& payload) const {
    if (payload.size() > config_.payload_field_limit) {
        throw ModelViolation("payload has " + std::to_string(payload.size()) + " fields, limit is " +
                             std::to_string(config_.payload_field_limit));
    }
}

void NetworkSim::claim_initiation(NodeId src) {
    if (initiated_in_[src] == round_id_) {
        throw ModelViolation("node " + std::to_string(src) + " initiated a second call in round " +
                             std::to_string(round_id_));
    }
    initiated_in_[src] = round_id_;
}

bool NetworkSim::transmit(Phase phase) {
    auto& meter = meters_.phases[static_cast<std::size_t>(phase)];
    ++meter.messages_sent;
    ++sent_total_;
    bool dropped = config_.debug_drop_every != 0 && sent_total_ % config_.debug_drop_every == 0;
    if (config_.delta > 0.0 && rng_.bernoulli(config_.delta)) dropped = true;
    if (dropped) return false;
    ++meter.messages_delivered;
    ++delivered_total_;
    return true;
}

bool NetworkSim::send(const RoundHandle& handle, const Message& msg, CallKind kind) {
    check_handle(handle);
    check_payload(msg.payload);
    if (msg.src >= n_ || msg.dst >= n_) throw std::out_of_range("message endpoint out of range");
    if (kind == CallKind::Initiate) claim_initiation(msg.src);
    return transmit(handle.phase());
}

RouteOutcome NetworkSim::route_path(Phase phase, NodeId src, NodeId dst) {
    if (src == dst) return {true, 0, 0};
    if (!routes_over_chord()) return {transmit(phase), 1, 1};
    const unsigned hops = chord_route(*overlay_, src, dst).hops;
    for (unsigned h = 1; h <= hops; ++h) {
        if (!transmit(phase)) return {false, h, h};
    }
    return {true, hops, hops};
}

RouteOutcome NetworkSim::route(const RoundHandle& handle, const Message& msg, CallKind kind, unsigned after_hops) {
    check_handle(handle);
    check_payload(msg.payload);
    if (msg.src >= n_ || msg.dst >= n_) throw std::out_of_range("message endpoint out of range");
    if (kind == CallKind::Initiate) claim_initiation(msg.src);
    const RouteOutcome out = route_path(handle.phase(), msg.src, msg.dst);
    note_chain(after_hops + out.hops);
    return out;
}

TwoHopOutcome NetworkSim::two_hop_root_send(const RoundHandle& handle, NodeId src, NodeId target,
                                            std::span<const NodeId> root_of, const Payload& payload,
                                            bool batchable) {
    if (root_of.size() != n_) throw std::invalid_argument("root_of must cover every node");
    const RouteOutcome first = route(handle, Message{src, target, payload}, CallKind::Initiate);
    const NodeId root = root_of[target];
    if (!first.delivered || root == target) return {first.delivered, root, first.messages, first.hops};

    RouteOutcome forward{};
    if (config_.forward_batching && batchable && forward_round_[target] == round_id_) {
        forward = {forward_delivered_[target] != 0, 0, forward_hops_[target]};
    } else {
        forward = route_path(handle.phase(), target, root);
        if (config_.forward_batching && batchable) {
            forward_round_[target] = round_id_;
            forward_delivered_[target] = forward.delivered ? 1 : 0;
            forward_hops_[target] = forward.hops;
        }
    }
    const unsigned hops = first.hops + forward.hops;
    note_chain(hops);
    return {forward.delivered, root, first.messages + forward.messages, hops};
}

NodeId NetworkSim::sample_peer(NodeId src, Rng& rng) const {
    if (routes_over_chord()) return static_cast<NodeId>(rng.below(n_));
    if (n_ == 1) return src;
    auto peer = static_cast<NodeId>(rng.below(n_ - 1));
    if (peer >= src) ++peer;
    return peer;
}

}  // namespace drrg
