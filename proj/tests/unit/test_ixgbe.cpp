#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>

#include "fixtures.hpp"
#include "irs/ixgbe.hpp"

using fixtures::code_of;
using irs::Errc;
using irs::FiveTuple;
using irs::harness::Machine;
using irs::harness::MachineConfig;
using namespace irs::ixgbe;
namespace reg = irs::regmap::reg;

namespace {

template <class Q>
constexpr bool kCanSend = requires(Q& q, const std::vector<Packet>& p) { q.send_batch(p); };
template <class Q>
constexpr bool kCanReceive = requires(Q& q) { q.receive_batch(1u); };
template <class Q, class To>
constexpr bool kCanTransition = requires(Q&& q) { std::move(q).template transition<To>(); };

DriverConfig cfg(std::uint32_t rx, std::uint32_t tx, std::uint32_t ring, bool restricted = true) {
    DriverConfig c;
    c.rx_queues = rx;
    c.tx_queues = tx;
    c.ring_size = ring;
    c.restricted = restricted;
    return c;
}

FiveTuple tuple_n(std::uint32_t n) {
    return {0x0A000000 + n, 0x0A100000 + (n >> 8), static_cast<std::uint16_t>(1000 + n), 80, irs::Protocol::Tcp};
}

std::vector<Packet> packets(std::size_t n, std::uint64_t first_seq = 0, std::size_t len = 64) {
    std::vector<Packet> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(irs::build_packet(tuple_n(1), first_seq + i, len));
    }
    return out;
}

std::map<std::uint32_t, std::pair<FiveTuple, std::uint32_t>> driver_view(const IxgbeNic& nic) {
    std::map<std::uint32_t, std::pair<FiveTuple, std::uint32_t>> out;
    for (const auto& f : nic.filters()) {
        out[f.slot] = {f.tuple, f.queue};
    }
    return out;
}

std::map<std::uint32_t, std::pair<FiveTuple, std::uint32_t>> device_view(const irs::sim::SimNic& dev) {
    std::map<std::uint32_t, std::pair<FiveTuple, std::uint32_t>> out;
    for (const auto& f : dev.filter_table()) {
        out[f.slot] = {f.tuple, f.queue};
    }
    return out;
}

} // namespace

TEST_CASE("queue typestates gate the data path", "[ixgbe]") {
    STATIC_REQUIRE_FALSE(kCanSend<TxQueue<Disabled>>);
    STATIC_REQUIRE(kCanSend<TxQueue<Enabled>>);
    STATIC_REQUIRE_FALSE(kCanReceive<RxQueue<Disabled>>);
    STATIC_REQUIRE(kCanReceive<RxQueue<Enabled>>);
    STATIC_REQUIRE(kCanReceive<RxQueue<L3L4Filter>>);
    STATIC_REQUIRE(kCanReceive<RxQueue<Rss>>);
    STATIC_REQUIRE_FALSE(kCanTransition<RxQueue<Disabled>, Enabled>);
    STATIC_REQUIRE_FALSE((kRxTransition<L3L4Filter, Rss>));
    STATIC_REQUIRE_FALSE((kRxTransition<Rss, L3L4Filter>));
    STATIC_REQUIRE_FALSE((kRxTransition<Disabled, Rss>));
    STATIC_REQUIRE((kRxTransition<Enabled, Rss>));
    STATIC_REQUIRE_FALSE((kTxTransition<Disabled, Rss>));
    STATIC_REQUIRE_FALSE(std::is_copy_constructible_v<IxgbeNic>);
    STATIC_REQUIRE_FALSE(std::is_copy_constructible_v<RxQueue<Enabled>>);
    STATIC_REQUIRE_FALSE(std::is_copy_constructible_v<FilterEntry>);
    STATIC_REQUIRE_FALSE(std::is_constructible_v<FilterEntry, std::uint64_t, FilterRecord>);
}

TEST_CASE("init programs the rings with a clean oracle log", "[ixgbe]") {
    Machine m;
    IxgbeNic nic = m.init_nic(0, cfg(2, 2, 64));
    const auto& dev = m.device(0);
    CHECK(dev.violations().empty());
    for (std::uint32_t q = 0; q < 2; ++q) {
        CHECK(nic.rx_state(q) == QueueState::Disabled);
        CHECK(nic.tx_state(q) == QueueState::Disabled);
        CHECK(dev.peek(reg::RDLEN, q) == 64 * 16);
        CHECK(dev.peek(reg::TDLEN, q) == 64 * 16);
        CHECK(dev.peek(reg::RDBAL, q) % 128 == 0);
        CHECK(dev.peek(reg::TDBAL, q) % 128 == 0);
    }
    CHECK(nic.registers().rx_enabled());
    CHECK(nic.registers().fctrl_read() != 0);
    CHECK(nic.location() == m.location(0));
}

TEST_CASE("invalid configurations are rejected before touching the device", "[ixgbe]") {
    Machine m;
    for (const DriverConfig& c : {cfg(1, 1, 10), cfg(1, 1, 4), cfg(1, 1, 8192), cfg(0, 1, 64), cfg(1, 65, 64)}) {
        PciDevice dev = m.bus().take(m.location(0));
        CHECK(code_of([&] { (void)IxgbeNic::init(std::move(dev), m.memory(), c); }) == Errc::InvalidConfig);
        CHECK_FALSE(dev.empty());
    }
    CHECK(m.bus().available(m.location(0)));
    CHECK(m.memory().live_representations() == 0);
}

TEST_CASE("a NIC cannot be initialized twice", "[ixgbe]") {
    Machine m;
    IxgbeNic nic = m.init_nic(0, cfg(1, 1, 64));
    CHECK(code_of([&] { (void)m.init_nic(0, cfg(1, 1, 64)); }) == Errc::NotFound);
    CHECK(code_of([&] { (void)m.bus().scan(); }) == Errc::Overlap);
}

TEST_CASE("queue operations check the state", "[ixgbe]") {
    Machine m;
    IxgbeNic nic = m.init_nic(0, cfg(1, 1, 64));
    CHECK(code_of([&] { (void)nic.send_batch(0, packets(1)); }) == Errc::StateConflict);
    CHECK(code_of([&] { (void)nic.receive_batch(0, 1); }) == Errc::StateConflict);
    CHECK(code_of([&] { (void)nic.rx_queue<Enabled>(0); }) == Errc::StateConflict);
    CHECK(code_of([&] { nic.disable_tx(0); }) == Errc::StateConflict);
    nic.enable_rx(0);
    nic.enable_tx(0);
    CHECK(code_of([&] { nic.enable_rx(0); }) == Errc::StateConflict);
    CHECK(nic.rx_queue<Enabled>(0).ring_size() == 64);
    CHECK(code_of([&] { (void)nic.send_batch(1, packets(1)); }) == Errc::OutOfRange);
    nic.disable_rx(0);
    nic.disable_tx(0);
    nic.enable_rx(0);
    nic.enable_tx(0);
    CHECK(m.device(0).violations().empty());
}

TEST_CASE("send_batch fills the ring up to one free slot", "[ixgbe]") {
    Machine m;
    IxgbeNic nic = m.init_nic(0, cfg(1, 1, 64));
    nic.enable_tx(0);
    CHECK(nic.send_batch(0, {}) == 0);
    CHECK(nic.tx_next_index(0) == 0);
    CHECK(nic.send_batch(0, packets(3)) == 3);
    CHECK(nic.tx_next_index(0) == 3);
    CHECK(m.device(0).peek(reg::TDT) == 3);
    CHECK(nic.send_batch(0, packets(70)) == 60);
    CHECK(nic.tx_next_index(0) == 63);
    CHECK(nic.send_batch(0, packets(1)) == 0);
    m.device(0).step(64);
    CHECK(m.device(0).transmitted() == 63);
    CHECK(nic.send_batch(0, packets(70)) == 63);
    CHECK(m.device(0).violations().empty());
}

TEST_CASE("send_batch from an empty ring queues at most len - 1", "[ixgbe]") {
    Machine m;
    IxgbeNic nic = m.init_nic(0, cfg(1, 1, 64));
    nic.enable_tx(0);
    CHECK(nic.send_batch(0, packets(70)) == 63);
    CHECK(nic.tx_next_index(0) == 63);
}

TEST_CASE("oversized or empty packets are rejected whole", "[ixgbe]") {
    Machine m;
    IxgbeNic nic = m.init_nic(0, cfg(1, 1, 64));
    nic.enable_tx(0);
    auto batch = packets(2);
    batch.push_back(Packet(kBufferSize + 1, 0));
    CHECK(code_of([&] { (void)nic.send_batch(0, batch); }) == Errc::PacketTooLarge);
    CHECK(code_of([&] { (void)nic.send_batch(0, {Packet{}}); }) == Errc::InvalidArgument);
    CHECK(nic.tx_next_index(0) == 0);
    CHECK(nic.send_batch(0, {Packet(kBufferSize, 0xAB)}) == 1);
}

TEST_CASE("receive_batch returns packets in arrival order", "[ixgbe]") {
    Machine m;
    IxgbeNic nic = m.init_nic(0, cfg(1, 1, 64));
    nic.enable_rx(0);
    auto& dev = m.device(0);
    const auto in = packets(2, 100);
    dev.inject(in[0]);
    dev.inject(in[1]);
    dev.step(16);
    CHECK(nic.receive_batch(0, 0).empty());
    const auto got = nic.receive_batch(0, 8);
    REQUIRE(got.size() == 2);
    CHECK(got[0] == in[0]);
    CHECK(got[1] == in[1]);
    CHECK(nic.rx_next_index(0) == 2);
    CHECK(dev.peek(reg::RDT) == 1);
    CHECK(dev.violations().empty());
}

TEST_CASE("rx and tx indices follow a modular oracle under random load", "[ixgbe]") {
    for (const bool restricted : {true, false}) {
        for (const std::uint32_t ring : {8u, 64u}) {
            Machine m;
            IxgbeNic nic = m.init_nic(0, cfg(1, 1, ring, restricted));
            nic.enable_rx(0);
            nic.enable_tx(0);
            auto& dev = m.device(0);
            std::mt19937_64 rng(ring * 7 + restricted);
            std::uint64_t seq_in = 0;
            std::uint64_t seq_out = 0;
            std::uint64_t received = 0;
            std::uint32_t tx_next = 0;
            for (int step = 0; step < 1500; ++step) {
                for (std::uint32_t k = rng() % 5; k > 0; --k) {
                    dev.inject(irs::build_packet(tuple_n(2), seq_in++, 64 + rng() % 200));
                }
                dev.step(static_cast<std::uint32_t>(rng() % 8));
                const auto got = nic.receive_batch(0, static_cast<std::uint32_t>(rng() % 10));
                for (const auto& p : got) {
                    REQUIRE(irs::parse_sequence(p) == seq_out++);
                }
                received += got.size();
                REQUIRE(nic.rx_next_index(0) == received % ring);

                const std::uint32_t tdh = dev.peek(reg::TDH);
                const std::uint32_t in_flight = (tx_next + ring - tdh) % ring;
                const std::size_t want = rng() % 12;
                const std::uint32_t expect = std::min<std::uint32_t>(static_cast<std::uint32_t>(want), ring - 1 - in_flight);
                REQUIRE(nic.send_batch(0, packets(want)) == expect);
                tx_next = (tx_next + expect) % ring;
                REQUIRE(nic.tx_next_index(0) == tx_next);
                REQUIRE(nic.tx_next_index(0) < ring);
            }
            CHECK(dev.violations().empty());
        }
    }
}

TEST_CASE("filters take the lowest free slot", "[ixgbe]") {
    Machine m;
    IxgbeNic nic = m.init_nic(0, cfg(2, 1, 64));
    nic.enable_rx(0);
    nic.enable_rx(1);
    FilterEntry a = nic.add_filter(1, tuple_n(1));
    CHECK(a.slot() == 0);
    CHECK(nic.rx_state(1) == QueueState::L3L4Filter);
    CHECK(code_of([&] { (void)nic.add_filter(0, tuple_n(1)); }) == Errc::DuplicateFilter);
    FilterEntry b = nic.add_filter(1, tuple_n(2));
    CHECK(b.slot() == 1);
    nic.remove_filter(std::move(a));
    CHECK_FALSE(a.live());
    CHECK(code_of([&] { nic.remove_filter(std::move(a)); }) == Errc::Consumed);
    CHECK(nic.rx_state(1) == QueueState::L3L4Filter);
    FilterEntry c = nic.add_filter(0, tuple_n(3));
    CHECK(c.slot() == 0);
    nic.remove_filter(std::move(b));
    CHECK(nic.rx_state(1) == QueueState::Enabled);
    CHECK(code_of([&] { nic.disable_rx(0); }) == Errc::StateConflict);
    CHECK(m.device(0).violations().empty());
}

TEST_CASE("filter table holds 128 entries", "[ixgbe]") {
    Machine m;
    IxgbeNic nic = m.init_nic(0, cfg(1, 1, 64));
    nic.enable_rx(0);
    std::vector<FilterEntry> held;
    for (std::uint32_t i = 0; i < 128; ++i) {
        held.push_back(nic.add_filter(0, tuple_n(i)));
        REQUIRE(held.back().slot() == i);
    }
    CHECK(code_of([&] { (void)nic.add_filter(0, tuple_n(500)); }) == Errc::TableFull);
    CHECK(nic.filters().size() == 128);
    CHECK(m.device(0).filter_table().size() == 128);
}

TEST_CASE("filter bookkeeping matches the device after random add and remove", "[ixgbe]") {
    Machine m;
    IxgbeNic nic = m.init_nic(0, cfg(4, 1, 64));
    for (std::uint32_t q = 0; q < 4; ++q) {
        nic.enable_rx(q);
    }
    std::mt19937_64 rng(99);
    std::vector<FilterEntry> held;
    for (int step = 0; step < 2000; ++step) {
        if (held.empty() || rng() % 3 != 0) {
            const auto t = tuple_n(static_cast<std::uint32_t>(rng() % 160));
            try {
                held.push_back(nic.add_filter(static_cast<std::uint32_t>(rng() % 4), t));
            } catch (const irs::Error& e) {
                REQUIRE((e.code() == Errc::DuplicateFilter || e.code() == Errc::TableFull));
            }
        } else {
            const std::size_t i = rng() % held.size();
            nic.remove_filter(std::move(held[i]));
            held.erase(held.begin() + static_cast<std::ptrdiff_t>(i));
        }
        REQUIRE(driver_view(nic) == device_view(m.device(0)));
        REQUIRE(nic.filters().size() == held.size());
    }
    CHECK(m.device(0).violations().empty());
}

TEST_CASE("filter steers its flow", "[ixgbe]") {
    Machine m;
    IxgbeNic nic = m.init_nic(0, cfg(4, 1, 64));
    for (std::uint32_t q = 0; q < 4; ++q) {
        nic.enable_rx(q);
    }
    FilterEntry f = nic.add_filter(2, tuple_n(7));
    auto& dev = m.device(0);
    for (int i = 0; i < 10; ++i) {
        dev.inject(irs::build_packet(tuple_n(7), i, 64));
    }
    dev.step(64);
    CHECK(nic.receive_batch(2, 64).size() == 10);
    CHECK(nic.receive_batch(0, 64).empty());
}

TEST_CASE("rss spreads over its queues per the redirection table", "[ixgbe]") {
    Machine m;
    IxgbeNic nic = m.init_nic(0, cfg(2, 1, 64));
    nic.enable_rx(0);
    nic.enable_rx(1);
    nic.configure_rss({0, 1});
    CHECK(nic.rx_state(0) == QueueState::Rss);
    CHECK(nic.rx_state(1) == QueueState::Rss);
    auto& dev = m.device(0);
    const auto table = dev.reta();
    std::mt19937 rng(4);
    std::array<int, 2> hits{};
    for (int i = 0; i < 400; ++i) {
        const FiveTuple t{static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()),
                          static_cast<std::uint16_t>(rng()), static_cast<std::uint16_t>(rng()), irs::Protocol::Udp};
        const std::uint32_t q = dev.classify(t);
        REQUIRE(q == table[irs::rss_hash(t) % 128]);
        ++hits.at(q);
    }
    CHECK(hits[0] > 0);
    CHECK(hits[1] > 0);
    nic.disable_rss();
    CHECK(nic.rx_state(0) == QueueState::Enabled);
    CHECK_FALSE(dev.rss_enabled());
    CHECK(dev.violations().empty());
}

TEST_CASE("rss arguments are validated", "[ixgbe]") {
    Machine m;
    IxgbeNic nic = m.init_nic(0, cfg(2, 1, 64));
    nic.enable_rx(0);
    CHECK(code_of([&] { nic.configure_rss({}); }) == Errc::InvalidArgument);
    CHECK(code_of([&] { nic.configure_rss({0, 0}); }) == Errc::InvalidArgument);
    CHECK(code_of([&] { nic.configure_rss({2}); }) == Errc::InvalidArgument);
    CHECK(code_of([&] { nic.configure_rss({0, 1}); }) == Errc::StateConflict);
    CHECK(nic.rx_state(0) == QueueState::Enabled);
}

TEST_CASE("rss and 5-tuple filters exclude each other in every order", "[ixgbe]") {
    // filter then rss on the same queue, rss then filter, and both again after a reconfigure.
    Machine m;
    IxgbeNic nic = m.init_nic(0, cfg(2, 1, 64));
    nic.enable_rx(0);
    nic.enable_rx(1);
    FilterEntry f = nic.add_filter(0, tuple_n(1));
    CHECK(code_of([&] { nic.configure_rss({0}); }) == Errc::StateConflict);
    CHECK(code_of([&] { nic.configure_rss({1, 0}); }) == Errc::StateConflict);
    CHECK(nic.rx_state(1) == QueueState::Enabled);
    nic.configure_rss({1});
    CHECK(code_of([&] { (void)nic.add_filter(1, tuple_n(2)); }) == Errc::StateConflict);
    nic.remove_filter(std::move(f));
    nic.configure_rss({0, 1});
    CHECK(code_of([&] { (void)nic.add_filter(0, tuple_n(3)); }) == Errc::StateConflict);
    CHECK(m.device(0).violation_count(irs::sim::ViolationKind::FilterMisconfig) == 0);
}

TEST_CASE("dropping the NIC returns every resource", "[ixgbe]") {
    Machine m;
    const auto pages0 = m.memory().free_pages();
    const auto frames0 = m.memory().free_frames();
    for (int round = 0; round < 3; ++round) {
        {
            IxgbeNic nic = m.init_nic(0, cfg(2, 2, 128, round % 2 == 0));
            nic.enable_rx(0);
            nic.enable_tx(1);
            FilterEntry f = nic.add_filter(0, tuple_n(1));
            CHECK_FALSE(m.bus().available(m.location(0)));
            CHECK(m.memory().page_table().size() > 0);
        }
        CHECK(m.memory().free_pages() == pages0);
        CHECK(m.memory().free_frames() == frames0);
        CHECK(m.memory().page_table().size() == 0);
        CHECK(m.memory().live_representations() == 0);
        CHECK(m.bus().available(m.location(0)));
        CHECK(m.bus().outstanding() == 0);
    }
}

TEST_CASE("moving the NIC keeps it usable", "[ixgbe]") {
    Machine m;
    IxgbeNic a = m.init_nic(0, cfg(1, 1, 64));
    IxgbeNic b = std::move(a);
    b.enable_tx(0);
    CHECK(b.send_batch(0, packets(2)) == 2);
}

TEST_CASE("bad firmware status stops init and returns the device", "[ixgbe]") {
    Machine m({8192, 1, 0});
    PciDevice dev = m.bus().take(m.location(0));
    CHECK(code_of([&] { (void)IxgbeNic::init(std::move(dev), m.memory(), cfg(1, 1, 64)); }) ==
          Errc::StateConflict);
    CHECK_FALSE(dev.empty());
    CHECK(m.memory().live_representations() == 0);
}
