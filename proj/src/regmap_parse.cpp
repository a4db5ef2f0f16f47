#include <fstream>
#include <sstream>

#include "irs/error.hpp"
#include "irs/regmap.hpp"

namespace irs::regmap {

std::string_view to_string(Access access) noexcept {
    switch (access) {
    case Access::ReadOnly: return "ro";
    case Access::ReadWrite: return "rw";
    case Access::Restricted: return "restricted";
    case Access::Reserved: return "reserved";
    }
    return "?";
}

std::optional<Access> access_from_string(std::string_view text) noexcept {
    if (text == "ro") return Access::ReadOnly;
    if (text == "rw") return Access::ReadWrite;
    if (text == "restricted") return Access::Restricted;
    if (text == "reserved") return Access::Reserved;
    return std::nullopt;
}

namespace {

std::uint32_t parse_u32(const std::string& token, int line) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(token, &used, 0);
        if (used != token.size() || v > 0xFFFFFFFFull) {
            throw std::invalid_argument(token);
        }
        return static_cast<std::uint32_t>(v);
    } catch (const std::logic_error&) {
        fail(Errc::ParseError, "line " + std::to_string(line) + ": bad number '" + token + "'");
    }
}

} // namespace

std::vector<RegisterRecord> parse(std::istream& in) {
    std::vector<RegisterRecord> out;
    std::string text;
    int line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (auto hash = text.find('#'); hash != std::string::npos) {
            text.erase(hash);
        }
        std::istringstream fields(text);
        std::vector<std::string> tok;
        for (std::string t; fields >> t;) {
            tok.push_back(t);
        }
        if (tok.empty()) {
            continue;
        }
        if (tok.size() != 9) {
            fail(Errc::ParseError, "line " + std::to_string(line) + ": expected 9 fields, got " +
                                       std::to_string(tok.size()));
        }
        RegisterRecord r;
        r.name = tok[0];
        r.offset = parse_u32(tok[1], line);
        r.count = parse_u32(tok[2], line);
        r.stride = parse_u32(tok[3], line);
        auto access = access_from_string(tok[4]);
        if (!access) {
            fail(Errc::ParseError, "line " + std::to_string(line) + ": unknown access class '" + tok[4] + "'");
        }
        r.access = *access;
        r.reserved_mask = parse_u32(tok[5], line);
        r.required_mask = parse_u32(tok[6], line);
        r.required_value = parse_u32(tok[7], line);
        r.reset = parse_u32(tok[8], line);
        if (r.count == 0 || (r.count > 1 && r.stride < 4) || r.offset % 4 != 0) {
            fail(Errc::ParseError, "line " + std::to_string(line) + ": bad layout for " + r.name);
        }
        if ((r.required_value & ~r.required_mask) != 0 || (r.required_mask & r.reserved_mask) != 0) {
            fail(Errc::ParseError, "line " + std::to_string(line) + ": inconsistent required bits for " + r.name);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<RegisterRecord> parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(Errc::Io, "cannot open " + path);
    }
    return parse(in);
}

} // namespace irs::regmap
