#include "irs/packet.hpp"

#include <cstdio>
#include <cstring>

namespace irs {

namespace {

constexpr std::size_t kEth = 14;
constexpr std::size_t kIp = 20;
constexpr std::size_t kSeq = 8;

std::uint8_t ip_proto(Protocol p) noexcept {
    switch (p) {
    case Protocol::Tcp: return 6;
    case Protocol::Udp: return 17;
    case Protocol::Sctp: return 132;
    case Protocol::Other: return 47;
    }
    return 47;
}

std::size_t l4_len(Protocol p) noexcept {
    switch (p) {
    case Protocol::Tcp: return 20;
    case Protocol::Udp: return 8;
    case Protocol::Sctp: return 12;
    case Protocol::Other: return 4;
    }
    return 4;
}

void put16(std::uint8_t* at, std::uint16_t v) noexcept {
    at[0] = static_cast<std::uint8_t>(v >> 8);
    at[1] = static_cast<std::uint8_t>(v);
}

void put32(std::uint8_t* at, std::uint32_t v) noexcept {
    put16(at, static_cast<std::uint16_t>(v >> 16));
    put16(at + 2, static_cast<std::uint16_t>(v));
}

std::uint16_t get16(const std::uint8_t* at) noexcept { return static_cast<std::uint16_t>(at[0] << 8 | at[1]); }
std::uint32_t get32(const std::uint8_t* at) noexcept {
    return static_cast<std::uint32_t>(get16(at)) << 16 | get16(at + 2);
}

} // namespace

const char* to_string(Protocol p) noexcept {
    switch (p) {
    case Protocol::Tcp: return "tcp";
    case Protocol::Udp: return "udp";
    case Protocol::Sctp: return "sctp";
    case Protocol::Other: return "other";
    }
    return "other";
}

std::optional<Protocol> protocol_from_string(const std::string& text) noexcept {
    if (text == "tcp") return Protocol::Tcp;
    if (text == "udp") return Protocol::Udp;
    if (text == "sctp") return Protocol::Sctp;
    if (text == "other") return Protocol::Other;
    return std::nullopt;
}

std::string ipv4_to_string(std::uint32_t ip) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", ip >> 24, (ip >> 16) & 0xFF, (ip >> 8) & 0xFF, ip & 0xFF);
    return buf;
}

std::optional<std::uint32_t> ipv4_from_string(const std::string& text) noexcept {
    unsigned a, b, c, d;
    char tail;
    if (std::sscanf(text.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &tail) != 4 || a > 255 || b > 255 || c > 255 ||
        d > 255) {
        return std::nullopt;
    }
    return a << 24 | b << 16 | c << 8 | d;
}

std::string FiveTuple::to_string() const {
    return ipv4_to_string(src_ip) + ":" + std::to_string(src_port) + "->" + ipv4_to_string(dst_ip) + ":" +
           std::to_string(dst_port) + "/" + irs::to_string(protocol);
}

std::size_t min_frame_len(Protocol p) noexcept {
    const std::size_t need = kEth + kIp + l4_len(p) + kSeq;
    return need < kMinFrame ? kMinFrame : need;
}

std::vector<std::uint8_t> build_packet(const FiveTuple& tuple, std::uint64_t seq, std::size_t total_len) {
    const std::size_t len = total_len < min_frame_len(tuple.protocol) ? min_frame_len(tuple.protocol) : total_len;
    std::vector<std::uint8_t> f(len, 0);
    // dst mac, src mac: locally administered
    const std::uint8_t dst_mac[6] = {0x02, 0, 0, 0, 0, 0x02};
    const std::uint8_t src_mac[6] = {0x02, 0, 0, 0, 0, 0x01};
    std::memcpy(f.data(), dst_mac, 6);
    std::memcpy(f.data() + 6, src_mac, 6);
    put16(f.data() + 12, 0x0800);
    std::uint8_t* ip = f.data() + kEth;
    ip[0] = 0x45;
    put16(ip + 2, static_cast<std::uint16_t>(len - kEth));
    ip[8] = 64;
    ip[9] = ip_proto(tuple.protocol);
    put32(ip + 12, tuple.src_ip);
    put32(ip + 16, tuple.dst_ip);
    std::uint8_t* l4 = ip + kIp;
    if (tuple.protocol != Protocol::Other) {
        put16(l4, tuple.src_port);
        put16(l4 + 2, tuple.dst_port);
    }
    std::uint8_t* stamp = l4 + l4_len(tuple.protocol);
    put32(stamp, static_cast<std::uint32_t>(seq >> 32));
    put32(stamp + 4, static_cast<std::uint32_t>(seq));
    return f;
}

std::optional<FiveTuple> parse_tuple(std::span<const std::uint8_t> f) noexcept {
    if (f.size() < kEth + kIp + 4 || get16(f.data() + 12) != 0x0800) {
        return std::nullopt;
    }
    const std::uint8_t* ip = f.data() + kEth;
    FiveTuple t;
    switch (ip[9]) {
    case 6: t.protocol = Protocol::Tcp; break;
    case 17: t.protocol = Protocol::Udp; break;
    case 132: t.protocol = Protocol::Sctp; break;
    default: t.protocol = Protocol::Other; break;
    }
    t.src_ip = get32(ip + 12);
    t.dst_ip = get32(ip + 16);
    if (t.protocol != Protocol::Other) {
        t.src_port = get16(ip + kIp);
        t.dst_port = get16(ip + kIp + 2);
    }
    return t;
}

std::optional<std::uint64_t> parse_sequence(std::span<const std::uint8_t> f) noexcept {
    auto t = parse_tuple(f);
    if (!t) {
        return std::nullopt;
    }
    const std::size_t at = kEth + kIp + l4_len(t->protocol);
    if (f.size() < at + kSeq) {
        return std::nullopt;
    }
    return static_cast<std::uint64_t>(get32(f.data() + at)) << 32 | get32(f.data() + at + 4);
}

std::uint32_t rss_hash(const FiveTuple& t) noexcept {
    return (t.src_ip >> 16) + (t.src_ip & 0xFFFF) + (t.dst_ip >> 16) + (t.dst_ip & 0xFFFF) + t.src_port + t.dst_port +
           ip_proto(t.protocol);
}

} // namespace irs
