#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "irs/harness.hpp"

using fixtures::code_of;
using irs::Errc;
namespace h = irs::harness;

TEST_CASE("scenario parsing", "[harness]") {
    const auto sc = h::parse_scenario(R"(# comment
rx_queues 4
tx_queues 2
ring_size 128
budget 16
restricted 0
seed 9
filter 2 10.0.0.1 10.0.0.2 1 2 tcp
rss 0 1
inject 5 10 64 queue 3
inject 1 20 60-100 random
inject 2 1 1514 tuple 10.0.0.1 10.0.0.2 1 2 udp
)");
    CHECK(sc.rx_queues == 4);
    CHECK(sc.tx_queues == 2);
    CHECK(sc.ring_size == 128);
    CHECK(sc.budget == 16);
    CHECK_FALSE(sc.restricted);
    CHECK(sc.seed == 9);
    REQUIRE(sc.filters.size() == 1);
    CHECK(sc.filters[0].queue == 2);
    CHECK(sc.filters[0].tuple == irs::FiveTuple{0x0A000001, 0x0A000002, 1, 2, irs::Protocol::Tcp});
    CHECK(sc.rss == std::vector<std::uint32_t>{0, 1});
    REQUIRE(sc.schedule.size() == 3);
    // Sorted by step.
    CHECK(sc.schedule[0].step == 1);
    CHECK(sc.schedule[0].random_tuple);
    CHECK(sc.schedule[0].min_len == 60);
    CHECK(sc.schedule[0].max_len == 100);
    CHECK(sc.schedule[1].tuple.has_value());
    CHECK(sc.schedule[2].queue == 3u);
}

TEST_CASE("scenario parse errors", "[harness]") {
    for (const std::string bad : {"frobnicate 3\n", "rx_queues\n", "rx_queues x\n", "inject 0 1 64\n",
                                  "inject 0 1 64 sideways\n", "inject 0 1 90-80 random\n",
                                  "filter 1 10.0.0.1 10.0.0.2 1\n", "inject 0 1 64 queue\n", "seed 1 2\n"}) {
        INFO(bad);
        CHECK(code_of([&] { (void)h::parse_scenario(bad); }) == Errc::ParseError);
    }
}

TEST_CASE("report text and lookup", "[harness]") {
    h::Report r;
    r.add("a", 1);
    r.add("time.x", "0.5");
    r.add("b", "two");
    CHECK(r.text() == "a 1\ntime.x 0.5\nb two\n");
    CHECK(r.deterministic_text() == "a 1\nb two\n");
    CHECK(r.get("b") == "two");
    CHECK_FALSE(r.get("c").has_value());
}

TEST_CASE("forward with no packets reports zeros", "[harness]") {
    h::Scenario sc;
    sc.ring_size = 64;
    const auto r = h::forward(sc);
    CHECK(r.ok);
    for (const char* key : {"injected", "forwarded", "dropped", "held", "violations", "rx_queue.0"}) {
        CHECK(r.get(key) == "0");
    }
}

TEST_CASE("forward is deterministic for a seed", "[harness]") {
    auto sc = h::parse_scenario("ring_size 64\nbudget 16\nrx_queues 2\ntx_queues 2\nrss 0 1\n"
                                "inject 0 300 60-1514 random\ninject 3 100 64 queue 1\n");
    const auto a = h::forward(sc);
    const auto b = h::forward(sc);
    CHECK(a.ok);
    CHECK(a.text() == b.text());
    CHECK(a.get("forwarded") == "400");
    CHECK(a.get("order_preserved") == "1");
    sc.seed = 2;
    const auto c = h::forward(sc);
    CHECK(c.get("forwarded") == "400");
}

TEST_CASE("filtered flow lands on its queue", "[harness]") {
    const auto r = h::forward(h::parse_scenario("rx_queues 4\nring_size 64\nbudget 32\n"
                                                "filter 2 192.168.1.10 192.168.1.20 5000 6000 udp\n"
                                                "inject 0 500 128 tuple 192.168.1.10 192.168.1.20 5000 6000 udp\n"));
    CHECK(r.ok);
    CHECK(r.get("rx_queue.2") == "500");
    CHECK(r.get("rx_queue.0") == "0");
    CHECK(r.get("forwarded") == "500");
}

TEST_CASE("unrestricted forwarding conserves packets", "[harness]") {
    auto sc = h::parse_scenario("ring_size 32\nbudget 8\nrestricted 0\ninject 0 1000 64-512 random\n");
    const auto r = h::forward(sc);
    CHECK(r.ok);
    CHECK(r.get("forwarded") == "1000");
    CHECK(r.get("conserved") == "1");
}

TEST_CASE("membench restores the allocators", "[harness]") {
    const auto r = h::membench(50, 3);
    CHECK(r.ok);
    CHECK(r.get("reclaimed") == "1");
    CHECK(r.get("iterations") == "50");
    for (const char* op : {"map", "remap", "unmap"}) {
        CHECK(r.get(std::string("time.") + op + ".mean_us").has_value());
        CHECK(r.get(std::string("time.") + op + ".stddev_us").has_value());
    }
    CHECK(code_of([] { (void)h::membench(0, 1); }) == Errc::InvalidArgument);
}

TEST_CASE("bug corpus replays are detected and unreachable", "[harness]") {
    CHECK(h::bug_cases().size() >= 6);
    for (const auto& bug : h::bug_cases()) {
        const auto o = h::replay(bug);
        INFO(bug.name);
        CHECK(o.inexpressible);
        CHECK(o.detected);
        CHECK_FALSE(o.log.empty());
        for (const auto& v : o.log) {
            CHECK(v.kind == bug.expected);
        }
    }
    CHECK(h::legal_sequence_violations() == 0);
    const auto r = h::bugcorpus();
    CHECK(r.ok);
    CHECK(r.get("passed") == r.get("cases"));
}

TEST_CASE("machine rejects degenerate shapes", "[harness]") {
    CHECK(code_of([] { h::Machine m(h::MachineConfig{64, 0, irs::sim::kFwsmDefault}); }) == Errc::InvalidArgument);
    h::Machine m(h::MachineConfig{64, 3, irs::sim::kFwsmDefault});
    CHECK(m.nic_count() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(m.bus().available(m.location(i)));
    }
}
