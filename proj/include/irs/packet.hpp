#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace irs {

// Values match the 82599 FTQF protocol field.
enum class Protocol : std::uint8_t { Tcp = 0, Udp = 1, Sctp = 2, Other = 3 };

const char* to_string(Protocol p) noexcept;
std::optional<Protocol> protocol_from_string(const std::string& text) noexcept;

struct FiveTuple {
    std::uint32_t src_ip = 0;
    std::uint32_t dst_ip = 0;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    Protocol protocol = Protocol::Udp;

    [[nodiscard]] std::string to_string() const;
    friend bool operator==(const FiveTuple&, const FiveTuple&) = default;
};

std::string ipv4_to_string(std::uint32_t ip);
std::optional<std::uint32_t> ipv4_from_string(const std::string& text) noexcept;

inline constexpr std::size_t kMinFrame = 60;
inline constexpr std::size_t kMaxFrame = 2048;

/// Smallest frame that fits the headers for `p` plus an 8-byte sequence stamp.
std::size_t min_frame_len(Protocol p) noexcept;

/// Ethernet + IPv4 + L4 header, then the sequence stamp, then zero padding to
/// `total_len` (clamped up to min_frame_len).
std::vector<std::uint8_t> build_packet(const FiveTuple& tuple, std::uint64_t seq, std::size_t total_len);

std::optional<FiveTuple> parse_tuple(std::span<const std::uint8_t> frame) noexcept;
std::optional<std::uint64_t> parse_sequence(std::span<const std::uint8_t> frame) noexcept;

/// Sum of the tuple's 16-bit halves. Indexes the 128-entry redirection table.
std::uint32_t rss_hash(const FiveTuple& tuple) noexcept;

} // namespace irs
