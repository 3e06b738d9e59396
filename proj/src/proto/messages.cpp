#include "srps/messages.hpp"

#include "srps/wire.hpp"

namespace srps::proto {

using crypto::ByteWriter;

std::string_view to_string(AccusationKind k) {
    switch (k) {
        case AccusationKind::Drop: return "drop";
        case AccusationKind::Change: return "change";
        case AccusationKind::Fabricate: return "fabricate";
        case AccusationKind::DuplicateReply: return "duplicate-reply";
    }
    return "?";
}

std::string_view message_name(const Message& m) {
    struct V {
        std::string_view operator()(const Hello&) const { return "hello"; }
        std::string_view operator()(const HelloReply&) const { return "hello-reply"; }
        std::string_view operator()(const NeighborList&) const { return "neighbor-list"; }
        std::string_view operator()(const KeyDisclosure&) const { return "key"; }
        std::string_view operator()(const Rdp&) const { return "rdp"; }
        std::string_view operator()(const Rrp&) const { return "rrp"; }
        std::string_view operator()(const Challenge&) const { return "challenge"; }
        std::string_view operator()(const ChallengeResponse&) const { return "challenge-response"; }
        std::string_view operator()(const FakeRouteReport&) const { return "fake-route-report"; }
        std::string_view operator()(const RenewalCommit&) const { return "renewal-commit"; }
        std::string_view operator()(const RenewalValue&) const { return "renewal-value"; }
        std::string_view operator()(const RenewalProof&) const { return "renewal-proof"; }
        std::string_view operator()(const RouteError&) const { return "route-error"; }
        std::string_view operator()(const Alert&) const { return "alert"; }
        std::string_view operator()(const Data&) const { return "data"; }
        std::string_view operator()(const RepairRequest&) const { return "repair-request"; }
        std::string_view operator()(const RepairUpdate&) const { return "repair-update"; }
    };
    return std::visit(V{}, m);
}

std::uint32_t wire_size(const Message& m, std::uint32_t data_size) {
    struct V {
        std::uint32_t data_size;
        std::uint32_t operator()(const Hello&) const { return wire::kHello; }
        std::uint32_t operator()(const HelloReply&) const { return wire::kHello + 4; }
        std::uint32_t operator()(const NeighborList& n) const {
            return std::uint32_t(4 + 4 * n.neighbors.size());
        }
        std::uint32_t operator()(const KeyDisclosure&) const { return wire::kKeyDisclosure; }
        std::uint32_t operator()(const Rdp&) const { return wire::kRdp; }
        std::uint32_t operator()(const Rrp&) const { return wire::kRrp; }
        std::uint32_t operator()(const Challenge& c) const { return std::uint32_t(wire::kChallenge + c.ct.size()); }
        std::uint32_t operator()(const ChallengeResponse& c) const {
            return std::uint32_t(wire::kChallenge + c.ct.size());
        }
        std::uint32_t operator()(const FakeRouteReport&) const { return 6 * 4; }
        std::uint32_t operator()(const RenewalCommit& c) const { return std::uint32_t(wire::kRenewal + c.ct.size()); }
        std::uint32_t operator()(const RenewalValue&) const { return wire::kRenewal; }
        std::uint32_t operator()(const RenewalProof&) const { return wire::kRenewal; }
        std::uint32_t operator()(const RouteError&) const { return wire::kRouteError; }
        std::uint32_t operator()(const Alert&) const { return wire::kAlert; }
        std::uint32_t operator()(const Data&) const { return data_size; }
        std::uint32_t operator()(const RepairRequest&) const { return 5 * 4 + 8; }
        std::uint32_t operator()(const RepairUpdate&) const { return 4 * 4 + 8; }
    };
    return std::visit(V{data_size}, m);
}

crypto::Bytes encode_e2e(const RdpCore& c) {
    ByteWriter w;
    w.u8('Q').u32(c.src).u32(c.dst).u32(c.sn).raw(c.snv_value).u32(c.snv_index);
    return w.bytes();
}

crypto::Bytes encode_e2e(const RrpCore& c) {
    ByteWriter w;
    w.u8('R').u32(c.src).u32(c.dst).u32(c.sn).raw(c.snv_value).u32(c.snv_index);
    return w.bytes();
}

crypto::Bytes encode_core(const RdpCore& c) {
    ByteWriter w;
    w.raw(encode_e2e(c)).raw(c.e2e_mac);
    return w.bytes();
}

crypto::Bytes encode_core(const RrpCore& c) {
    ByteWriter w;
    w.raw(encode_e2e(c)).raw(c.e2e_mac);
    return w.bytes();
}

crypto::Bytes encode_nbr(NodeId from, NodeId to, const Rdp& r) {
    ByteWriter w;
    w.u32(from).u32(to).raw(encode_core(r.core)).u32(r.prev_hop).u32(r.key_index);
    return w.bytes();
}

crypto::Bytes encode_nbr(NodeId from, NodeId to, const Rrp& r) {
    ByteWriter w;
    w.u32(from).u32(to).raw(encode_core(r.core)).u32(r.prev_hop).u32(r.echo).u32(r.key_index);
    return w.bytes();
}

crypto::Bytes encode_alert(const Alert& a) {
    ByteWriter w;
    w.u8('A').u32(a.guard).u32(a.accused).u8(static_cast<std::uint8_t>(a.kind)).u32(a.target);
    return w.bytes();
}

crypto::Bytes encode_data(const Data& d) {
    ByteWriter w;
    w.u8('X').u32(d.src).u32(d.dst).u32(d.seq).u32(d.payload_size);
    return w.bytes();
}

}  // namespace srps::proto
