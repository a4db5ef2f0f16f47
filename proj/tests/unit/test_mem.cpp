#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "irs/mem.hpp"

using irs::Errc;
using irs::IntervalId;
using namespace irs::mem;

namespace {

template <class F>
Errc code_of(F&& fn) {
    try {
        fn();
    } catch (const irs::Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return Errc::Io;
}

struct Sys {
    irs::ChunkCreator frames;
    irs::ChunkCreator pages;
    MemorySystem mem;
    Sys(std::uint64_t f, std::uint64_t p) : mem(frames, pages, f, p) {}
};

// First-fit oracle over a unit bitmap.
struct FirstFit {
    std::vector<bool> free;
    explicit FirstFit(std::size_t n) : free(n, true) {}
    std::optional<IntervalId> take(std::uint64_t count) {
        std::uint64_t run = 0;
        for (std::uint64_t u = 0; u < free.size(); ++u) {
            run = free[u] ? run + 1 : 0;
            if (run == count) {
                const std::uint64_t s = u + 1 - count;
                for (std::uint64_t k = s; k <= u; ++k) {
                    free[k] = false;
                }
                return IntervalId{s, u};
            }
        }
        return std::nullopt;
    }
    void give(const IntervalId& r) {
        for (std::uint64_t u = r.start; u <= r.end; ++u) {
            free[u] = true;
        }
    }
    std::vector<IntervalId> intervals() const {
        std::vector<IntervalId> out;
        for (std::uint64_t u = 0; u < free.size(); ++u) {
            if (!free[u]) {
                continue;
            }
            if (!out.empty() && out.back().end + 1 == u) {
                out.back().end = u;
            } else {
                out.push_back({u, u});
            }
        }
        return out;
    }
};

bool frames_unique(const SimPageTable& t) {
    std::set<std::uint64_t> seen;
    for (const auto& [page, e] : t.entries()) {
        if (!seen.insert(e.frame).second) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("init creates one free chunk per space", "[mem]") {
    Sys s(16, 16);
    CHECK(s.mem.free_frames() == std::vector<IntervalId>{{0, 15}});
    CHECK(s.mem.free_pages() == std::vector<IntervalId>{{0, 15}});
    CHECK(s.mem.page_table().size() == 0);
}

TEST_CASE("second init on the same creators overlaps", "[mem]") {
    Sys s(16, 16);
    CHECK(code_of([&] { MemorySystem again(s.frames, s.pages, 16, 16); }) == Errc::Overlap);
}

TEST_CASE("degenerate init is rejected", "[mem]") {
    irs::ChunkCreator f;
    irs::ChunkCreator p;
    CHECK(code_of([&] { MemorySystem m(f, p, 0, 0); }) == Errc::InvalidArgument);
    CHECK(f.size() == 0);
}

TEST_CASE("allocate is first fit", "[mem]") {
    Sys s(16, 16);
    {
        auto a = s.mem.allocate_pages(4);
        CHECK(a.range() == IntervalId{0, 3});
        CHECK(s.mem.free_pages() == std::vector<IntervalId>{{4, 15}});
    }
    CHECK(s.mem.free_pages() == std::vector<IntervalId>{{0, 15}});
    {
        auto all = s.mem.allocate_pages(16);
        CHECK(all.range() == IntervalId{0, 15});
        CHECK(s.mem.free_pages().empty());
    }
    CHECK(code_of([&] { (void)s.mem.allocate_pages(17); }) == Errc::OutOfResources);
    CHECK(code_of([&] { (void)s.mem.allocate_pages(0); }) == Errc::InvalidArgument);
}

TEST_CASE("allocate_at carves the exact interval", "[mem]") {
    Sys s(16, 16);
    {
        auto a = s.mem.allocate_pages_at(4, 4);
        CHECK(a.range() == IntervalId{4, 7});
        CHECK(s.mem.free_pages() == std::vector<IntervalId>{{0, 3}, {8, 15}});
        CHECK(code_of([&] { (void)s.mem.allocate_pages_at(6, 4); }) == Errc::NotFree);
    }
    CHECK(code_of([&] { (void)s.mem.allocate_pages_at(14, 4); }) == Errc::NotFree);
    auto b = s.mem.allocate_pages_at(0, 16);
    CHECK(b.range() == IntervalId{0, 15});
}

TEST_CASE("randomized allocate/release matches the first-fit oracle", "[mem]") {
    std::mt19937_64 rng(9);
    Sys s(64, 64);
    FirstFit oracle(64);
    std::vector<TypedPages<Allocated>> held;
    for (int step = 0; step < 3000; ++step) {
        if (held.empty() || rng() % 3 != 0) {
            const std::uint64_t n = 1 + rng() % 8;
            const auto want = oracle.take(n);
            if (want) {
                auto p = s.mem.allocate_pages(n);
                REQUIRE(p.range() == *want);
                held.push_back(std::move(p));
            } else {
                REQUIRE(code_of([&] { (void)s.mem.allocate_pages(n); }) == Errc::OutOfResources);
            }
        } else {
            const std::size_t i = rng() % held.size();
            oracle.give(held[i].range());
            held.erase(held.begin() + static_cast<std::ptrdiff_t>(i));
        }
        REQUIRE(s.mem.free_pages() == oracle.intervals());
    }
}

TEST_CASE("map installs page i to frame i", "[mem]") {
    Sys s(16, 16);
    auto pages = s.mem.allocate_pages_at(0, 4);
    auto frames = s.mem.allocate_frames_at(8, 4);
    auto m = s.mem.map(std::move(pages), std::move(frames), MappingFlags::ReadWrite);
    std::map<std::uint64_t, PageTableEntry> shadow;
    for (std::uint64_t i = 0; i < 4; ++i) {
        shadow[i] = {8 + i, MappingFlags::ReadWrite};
    }
    CHECK(s.mem.page_table().entries() == shadow);
    CHECK(s.mem.page_table().bijective());
    CHECK(frames_unique(s.mem.page_table()));
}

TEST_CASE("map length mismatch leaves both arguments intact", "[mem]") {
    Sys s(16, 16);
    auto pages = s.mem.allocate_pages_at(0, 4);
    auto frames = s.mem.allocate_frames_at(8, 5);
    CHECK(code_of([&] { (void)s.mem.map(std::move(pages), std::move(frames), MappingFlags::ReadWrite); }) ==
          Errc::LengthMismatch);
    CHECK(pages.range() == IntervalId{0, 3});
    CHECK(frames.range() == IntervalId{8, 12});
    CHECK(s.mem.page_table().size() == 0);
}

TEST_CASE("writes land at the mapped frame", "[mem]") {
    Sys s(16, 16);
    auto m = s.mem.map(s.mem.allocate_pages_at(0, 1), s.mem.allocate_frames_at(5, 1), MappingFlags::ReadWrite);
    const std::vector<std::uint8_t> ab{'A', 'B'};
    m.write(0, ab);
    const auto* raw = reinterpret_cast<const std::uint8_t*>(s.mem.phys().bytes());
    CHECK(raw[5 * 4096] == 'A');
    CHECK(raw[5 * 4096 + 1] == 'B');
    CHECK(m.read(0, 2) == ab);
    CHECK(code_of([&] { (void)m.read(4096, 1); }) == Errc::OutOfBounds);
    CHECK(code_of([&] { m.write(4095, ab); }) == Errc::OutOfBounds);
}

TEST_CASE("remap changes flags only", "[mem]") {
    Sys s(16, 16);
    auto m = s.mem.map_new(4);
    std::vector<std::uint64_t> frames_before;
    for (const auto& [p, e] : s.mem.page_table().entries()) {
        frames_before.push_back(e.frame);
    }
    std::mt19937 rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto f = rng() % 2 == 0 ? MappingFlags::ReadOnly : MappingFlags::ReadWrite;
        m.remap(f);
        m.remap(f);
        std::vector<std::uint64_t> now;
        for (const auto& [p, e] : s.mem.page_table().entries()) {
            now.push_back(e.frame);
            REQUIRE(e.flags == f);
        }
        REQUIRE(now == frames_before);
        REQUIRE(m.flags() == f);
    }
    m.remap(MappingFlags::ReadOnly);
    const std::vector<std::uint8_t> x{1};
    CHECK(code_of([&] { m.write(0, x); }) == Errc::PermissionDenied);
}

TEST_CASE("drop cascade restores both free lists", "[mem]") {
    Sys s(16, 16);
    const auto pages0 = s.mem.free_pages();
    const auto frames0 = s.mem.free_frames();
    {
        auto m = s.mem.map(s.mem.allocate_pages_at(0, 4), s.mem.allocate_frames_at(8, 4), MappingFlags::ReadWrite);
        CHECK(s.mem.free_frames() == std::vector<IntervalId>{{0, 7}, {12, 15}});
    }
    CHECK(s.mem.page_table().size() == 0);
    CHECK(s.mem.free_pages() == pages0);
    CHECK(s.mem.free_frames() == frames0);
    CHECK(s.mem.live_representations() == 0);
}

TEST_CASE("drop of a scattered mapping rebuilds one chunk per contiguous run", "[mem]") {
    Sys s(16, 16);
    std::vector<TypedFrames<Allocated>> parts;
    parts.push_back(s.mem.allocate_frames_at(2, 2));
    parts.push_back(s.mem.allocate_frames_at(9, 1));
    parts.push_back(s.mem.allocate_frames_at(12, 3));
    auto m = s.mem.map_scattered(s.mem.allocate_pages_at(0, 6), std::move(parts), MappingFlags::ReadWrite);
    CHECK(s.mem.page_table().bijective());
    // Keep one frame busy in between so the freed runs cannot coalesce into the rest.
    auto pin = s.mem.allocate_frames_at(10, 2);
    { auto gone = std::move(m); }
    CHECK(s.mem.free_frames() == std::vector<IntervalId>{{0, 9}, {12, 15}});
}

TEST_CASE("overlapping frame request fails without a second representation", "[mem]") {
    Sys s(16, 16);
    auto held = s.mem.allocate_frames_at(4, 4);
    const std::size_t live = s.mem.live_representations();
    CHECK(code_of([&] { (void)s.mem.allocate_frames_at(6, 4); }) == Errc::NotFree);
    CHECK(code_of([&] { (void)s.frames.create_unique_representation({6, 9}); }) == Errc::Overlap);
    CHECK(s.mem.live_representations() == live);
}

TEST_CASE("carve checks range, alignment and prior carves", "[mem]") {
    Sys s(16, 16);
    auto m = s.mem.map_new(1);
    auto a = m.carve<std::uint8_t>(0, 128, 128);
    auto b = m.carve<std::uint8_t>(128, 128, 128);
    CHECK(a.physical_address() + 128 == b.physical_address());
    CHECK(code_of([&] { (void)m.carve<std::uint8_t>(64, 128, 128); }) == Errc::Misaligned);
    CHECK(code_of([&] { (void)m.carve<std::uint8_t>(4032, 128); }) == Errc::OutOfRange);
    CHECK(code_of([&] { (void)m.carve<std::uint8_t>(100, 64); }) == Errc::OverlapsPriorCarve);
    // Out of range wins over misalignment.
    CHECK(code_of([&] { (void)m.carve<std::uint8_t>(4033, 128, 128); }) == Errc::OutOfRange);
    CHECK(code_of([&] { (void)m.carve<std::uint8_t>(256, 8, 3); }) == Errc::InvalidArgument);
    { auto gone = std::move(b); }
    auto again = m.carve<std::uint8_t>(128, 128, 128);
    CHECK(m.carve_records().size() == 2);
}

TEST_CASE("random carves are pairwise disjoint and contained", "[mem]") {
    std::mt19937_64 rng(77);
    Sys s(16, 16);
    auto m = s.mem.map_new(2);
    std::vector<TypedView<std::uint8_t>> views;
    for (int i = 0; i < 400; ++i) {
        const std::uint64_t align = std::uint64_t{1} << (rng() % 8);
        const std::uint64_t off = (rng() % 8192) & ~(align - 1);
        const std::size_t size = 1 + rng() % 256;
        try {
            views.push_back(m.carve<std::uint8_t>(off, size, align));
        } catch (const irs::Error& e) {
            REQUIRE((e.code() == Errc::OverlapsPriorCarve || e.code() == Errc::OutOfRange));
        }
    }
    const auto recs = m.carve_records();
    REQUIRE(recs.size() == views.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        REQUIRE(recs[i].end < 8192);
        for (std::size_t j = i + 1; j < recs.size(); ++j) {
            REQUIRE_FALSE(recs[i].overlaps(recs[j]));
        }
    }
}

TEST_CASE("randomized map/remap/drop keeps the table bijective", "[mem]") {
    std::mt19937_64 rng(1234);
    Sys s(64, 64);
    const auto pages0 = s.mem.free_pages();
    const auto frames0 = s.mem.free_frames();
    {
        std::vector<MappedPages> live;
        for (int step = 0; step < 2000; ++step) {
            const auto op = rng() % 3;
            if (op == 0 || live.empty()) {
                try {
                    live.push_back(s.mem.map_new(1 + rng() % 4));
                } catch (const irs::Error& e) {
                    REQUIRE(e.code() == Errc::OutOfResources);
                }
            } else if (op == 1) {
                live[rng() % live.size()].remap(rng() % 2 ? MappingFlags::ReadOnly : MappingFlags::ReadWrite);
            } else {
                live.erase(live.begin() + static_cast<std::ptrdiff_t>(rng() % live.size()));
            }
            REQUIRE(frames_unique(s.mem.page_table()));
            std::uint64_t mapped = 0;
            for (const auto& m : live) {
                mapped += m.count();
            }
            REQUIRE(mapped == s.mem.page_table().size());
        }
    }
    CHECK(s.mem.free_pages() == pages0);
    CHECK(s.mem.free_frames() == frames0);
}

TEST_CASE("state types are move-only", "[mem]") {
    STATIC_REQUIRE_FALSE(std::is_copy_constructible_v<TypedPages<Free>>);
    STATIC_REQUIRE_FALSE(std::is_copy_constructible_v<TypedPages<Allocated>>);
    STATIC_REQUIRE_FALSE(std::is_copy_constructible_v<MappedPages>);
    STATIC_REQUIRE_FALSE(std::is_copy_constructible_v<TypedFrames<Allocated>>);
    STATIC_REQUIRE_FALSE(std::is_copy_constructible_v<TypedView<std::uint8_t>>);
    STATIC_REQUIRE(std::is_nothrow_move_constructible_v<MappedPages>);
}
