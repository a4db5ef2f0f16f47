#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace irs::regmap {

enum class Access : std::uint8_t {
    ReadOnly,
    ReadWrite,
    Restricted, // reachable only through typed operations
    Reserved,   // no access path
};

std::string_view to_string(Access access) noexcept;
std::optional<Access> access_from_string(std::string_view text) noexcept;

/// One register or register array. Element i sits at offset + i * stride.
struct RegisterSpec {
    std::string_view name;
    std::uint32_t offset;
    std::uint32_t count;
    std::uint32_t stride;
    Access access;
    std::uint32_t reserved_mask;
    std::uint32_t required_mask;
    std::uint32_t required_value;
    std::uint32_t reset;

    [[nodiscard]] constexpr std::uint32_t at(std::uint32_t index) const noexcept { return offset + index * stride; }
};

/// Owning form produced by the text parser.
struct RegisterRecord {
    std::string name;
    std::uint32_t offset = 0;
    std::uint32_t count = 1;
    std::uint32_t stride = 0;
    Access access = Access::Reserved;
    std::uint32_t reserved_mask = 0;
    std::uint32_t required_mask = 0;
    std::uint32_t required_value = 0;
    std::uint32_t reset = 0;

    friend bool operator==(const RegisterRecord&, const RegisterRecord&) = default;
};

/// Parses the register-map text format. Throws Error(ParseError) with the line number.
std::vector<RegisterRecord> parse(std::istream& in);
std::vector<RegisterRecord> parse_file(const std::string& path);

RegisterRecord to_record(const RegisterSpec& spec);

/// Register element containing `offset`, if any.
struct Located {
    const RegisterSpec* spec;
    std::uint32_t index;
};
std::optional<Located> locate(std::uint32_t offset) noexcept;

inline constexpr std::uint32_t kBarSize = 0x20000;

} // namespace irs::regmap
