#pragma once
#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "drrg/rng.hpp"
#include "drrg/topology.hpp"

namespace drrg {

enum class Phase : std::uint8_t {
    DrrProbe,
    DrrConnect,
    Convergecast,
    Broadcast,
    GossipMax,
    GossipSample,
    GossipAve,
    DataSpread,
    Baseline,
};

inline constexpr std::size_t kPhaseCount = 9;
inline constexpr std::array<Phase, kPhaseCount> kAllPhases{
    Phase::DrrProbe,  Phase::DrrConnect, Phase::Convergecast, Phase::Broadcast, Phase::GossipMax,
    Phase::GossipSample, Phase::GossipAve, Phase::DataSpread, Phase::Baseline,
};

std::string_view to_string(Phase phase);
// Inverse of to_string; throws std::invalid_argument for unknown names.
Phase phase_from_string(std::string_view name);

enum class FieldKind : std::uint8_t { Node, Rank, Value, Count };

struct Field {
    FieldKind kind;
    double value;
};

inline Field node_field(NodeId id) { return {FieldKind::Node, static_cast<double>(id)}; }
inline Field rank_field(double r) { return {FieldKind::Rank, r}; }
inline Field value_field(double v) { return {FieldKind::Value, v}; }
inline Field count_field(double c) { return {FieldKind::Count, c}; }

// Fixed-capacity record of scalar fields. Capacity exceeds the default field
// limit so that oversized payloads can be built and then rejected by send().
class Payload {
public:
    static constexpr std::size_t kCapacity = 8;

    Payload() = default;
    Payload(std::initializer_list<Field> fields);

    std::size_t size() const noexcept { return size_; }
    const Field& operator[](std::size_t i) const { return fields_[i]; }

private:
    std::array<Field, kCapacity> fields_{};
    std::size_t size_ = 0;
};

struct Message {
    NodeId src;
    NodeId dst;
    Payload payload;
};

// How a transmission relates to the one-call-per-round limit. Only Initiate
// consumes the sender's call for the round.
enum class CallKind : std::uint8_t {
    Initiate,  // fresh call to a chosen partner
    Reply,     // answer within a call established this round
    Forward,   // non-root relaying to its root
    TreeLink,  // over a parent/child link set up in Phase I
    Neighbor,  // direct neighbor exchange on a sparse graph
};

struct PhaseMeter {
    std::uint64_t rounds = 0;
    std::uint64_t messages_sent = 0;
    std::uint64_t messages_delivered = 0;

    bool operator==(const PhaseMeter&) const = default;
};

struct MeterSnapshot {
    std::array<PhaseMeter, kPhaseCount> phases{};

    const PhaseMeter& operator[](Phase p) const { return phases[static_cast<std::size_t>(p)]; }
    PhaseMeter& operator[](Phase p) { return phases[static_cast<std::size_t>(p)]; }
    PhaseMeter total() const;

    bool operator==(const MeterSnapshot&) const = default;
};

struct SimConfig {
    double delta = 0.0;
    std::uint64_t seed = 0;
    std::size_t payload_field_limit = 4;
    // Non-root relays merge all messages received in a round into one
    // forward. When false each received message is forwarded separately.
    bool forward_batching = true;
    // Fault hook for the validation suite: drop every k-th message
    // regardless of delta. 0 disables.
    std::uint64_t debug_drop_every = 0;
};

// True when 1/log2(n) < delta < 1/8, the range the analysis assumes.
bool delta_in_analysis_range(double delta, std::size_t n);

class NetworkSim;

class RoundHandle {
public:
    Phase phase() const noexcept { return phase_; }
    std::uint64_t id() const noexcept { return id_; }

private:
    friend class NetworkSim;
    RoundHandle(Phase phase, std::uint64_t id) : phase_(phase), id_(id) {}
    Phase phase_;
    std::uint64_t id_;
};

struct RouteOutcome {
    bool delivered;
    unsigned messages;
    unsigned hops;
};

struct TwoHopOutcome {
    bool delivered_to_root;
    NodeId root;
    unsigned messages;
    unsigned hops;  // network steps until arrival at the root
};

// Round-synchronous random phone call network. Owns the delivery RNG and the
// per-phase meters; protocols draw their own choices from a separate Rng.
//
// When an overlay graph of kind Chord is attached, transmissions between
// non-adjacent nodes are routed greedily over fingers: every hop is a metered
// message that can be lost, and the round lasts as many network steps as the
// longest chain of hops in it. Without an overlay (or with any other kind)
// every node can address every other node directly.
class NetworkSim {
public:
    NetworkSim(std::size_t n, SimConfig config);
    NetworkSim(std::shared_ptr<const Graph> overlay, SimConfig config);

    std::size_t size() const noexcept { return n_; }
    const SimConfig& config() const noexcept { return config_; }
    double delta() const noexcept { return config_.delta; }
    std::uint64_t round() const noexcept { return rounds_total_; }
    bool round_open() const noexcept { return open_; }
    const Graph* overlay() const noexcept { return overlay_.get(); }
    bool routes_over_chord() const noexcept { return overlay_ && overlay_->kind() == GraphKind::Chord; }

    RoundHandle begin_round(Phase phase);
    void end_round(const RoundHandle& handle);

    // One direct transmission. Throws ModelViolation on a second Initiate by
    // the same source in a round or on an oversized payload.
    bool send(const RoundHandle& handle, const Message& msg, CallKind kind = CallKind::Initiate);

    // Point-to-point transmission over the overlay (one hop unless routed
    // over Chord). A self-addressed message costs nothing and always arrives.
    // `after_hops` places the message later in a causal chain within the
    // round (a reply to a routed inquiry), which extends the round's length.
    RouteOutcome route(const RoundHandle& handle, const Message& msg, CallKind kind = CallKind::Initiate,
                       unsigned after_hops = 0);

    // Gossip step on the forest overlay: src calls `target`; if the target is
    // not a root it forwards to root_of[target]. With forward batching, all
    // messages reaching one relay in a round share a single forward.
    // `batchable` = false forces a dedicated forward (e.g. inquiries that
    // need individual replies).
    TwoHopOutcome two_hop_root_send(const RoundHandle& handle, NodeId src, NodeId target,
                                    std::span<const NodeId> root_of, const Payload& payload,
                                    bool batchable = true);

    // Uniform peer for a gossip call: any node but src on directly addressed
    // networks, a uniform ring id (src included) on Chord.
    NodeId sample_peer(NodeId src, Rng& rng) const;

    MeterSnapshot snapshot() const { return meters_; }
    // Independent running totals used to audit the per-phase ledger.
    std::uint64_t total_sent() const noexcept { return sent_total_; }
    std::uint64_t total_delivered() const noexcept { return delivered_total_; }
    std::uint64_t total_rounds() const noexcept { return rounds_total_; }

private:
    void check_handle(const RoundHandle& handle) const;
    void check_payload(const Payload& payload) const;
    void claim_initiation(NodeId src);
    bool transmit(Phase phase);
    void note_chain(unsigned hops) { chain_max_ = std::max(chain_max_, hops); }
    RouteOutcome route_path(Phase phase, NodeId src, NodeId dst);

    std::size_t n_;
    SimConfig config_;
    std::shared_ptr<const Graph> overlay_;
    Rng rng_;
    MeterSnapshot meters_;
    bool open_ = false;
    std::uint64_t round_id_ = 0;
    std::uint64_t rounds_total_ = 0;
    std::uint64_t sent_total_ = 0;
    std::uint64_t delivered_total_ = 0;
    unsigned chain_max_ = 0;
    std::vector<std::uint64_t> initiated_in_;
    // Per relay: round of its current batched forward and that forward's fate.
    std::vector<std::uint64_t> forward_round_;
    std::vector<std::uint8_t> forward_delivered_;
    std::vector<unsigned> forward_hops_;
};

// Ends the round when it goes out of scope.
class ScopedRound {
public:
    ScopedRound(NetworkSim& sim, Phase phase) : sim_(sim), handle_(sim.begin_round(phase)) {}
    ~ScopedRound() {
        if (sim_.round_open()) sim_.end_round(handle_);
    }
    ScopedRound(const ScopedRound&) = delete;
    ScopedRound& operator=(const ScopedRound&) = delete;

    const RoundHandle& handle() const noexcept { return handle_; }
    operator const RoundHandle&() const noexcept { return handle_; }

private:
    NetworkSim& sim_;
    RoundHandle handle_;
};

}  // namespace drrg
