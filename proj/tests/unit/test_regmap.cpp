#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "irs/error.hpp"
#include "irs/regmap.hpp"
#include "irs/regmap_generated.hpp"

#ifndef IRS_SOURCE_DIR
#define IRS_SOURCE_DIR "."
#endif

using namespace irs::regmap;

TEST_CASE("generated table matches the map file", "[regmap]") {
    const auto parsed = parse_file(IRS_SOURCE_DIR "/data/ixgbe_82599.regmap");
    REQUIRE(parsed.size() == kAll.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i] == to_record(kAll[i]));
    }
}

TEST_CASE("register elements never share an offset", "[regmap]") {
    std::set<std::uint32_t> seen;
    std::size_t elements = 0;
    for (const auto& spec : kAll) {
        for (std::uint32_t i = 0; i < spec.count; ++i) {
            CHECK(spec.at(i) % 4 == 0);
            CHECK(spec.at(i) < kBarSize);
            CHECK(seen.insert(spec.at(i)).second);
            ++elements;
        }
    }
    CHECK(seen.size() == elements);
}

TEST_CASE("locate agrees with a full enumeration", "[regmap]") {
    std::map<std::uint32_t, std::pair<std::string_view, std::uint32_t>> oracle;
    for (const auto& spec : kAll) {
        for (std::uint32_t i = 0; i < spec.count; ++i) {
            oracle[spec.at(i)] = {spec.name, i};
        }
    }
    for (std::uint32_t off = 0; off < kBarSize; off += 4) {
        const auto hit = locate(off);
        const auto it = oracle.find(off);
        REQUIRE(hit.has_value() == (it != oracle.end()));
        if (hit) {
            REQUIRE(hit->spec->name == it->second.first);
            REQUIRE(hit->index == it->second.second);
        }
    }
    CHECK_FALSE(locate(0x00002).has_value());
}

TEST_CASE("required bits lie outside the reserved mask", "[regmap]") {
    for (const auto& spec : kAll) {
        CHECK((spec.required_mask & spec.reserved_mask) == 0);
        CHECK((spec.required_value & ~spec.required_mask) == 0);
    }
    CHECK(reg::RDRXCTL.required_mask == ((1u << 25) | (1u << 26)));
}

TEST_CASE("parser reports malformed lines", "[regmap]") {
    auto parse_text = [](const std::string& s) {
        std::istringstream in(s);
        return parse(in);
    };
    CHECK(parse_text("# only a comment\n\n").empty());
    const auto one = parse_text("X 0x10 1 0 rw 0 0 0 0x5\n");
    REQUIRE(one.size() == 1);
    CHECK(one[0].name == "X");
    CHECK(one[0].reset == 5);
    for (const std::string bad : {"X 0x10 1 0 rw 0 0 0\n", "X 0x10 1 0 maybe 0 0 0 0\n", "X zz 1 0 rw 0 0 0 0\n",
                                  "X 0x10 4 0 rw 0 0 0 0\n", "X 0x10 1 0 rw 0 0 1 0\n"}) {
        try {
            (void)parse_text(bad);
            FAIL("accepted: " << bad);
        } catch (const irs::Error& e) {
            CHECK(e.code() == irs::Errc::ParseError);
        }
    }
}
