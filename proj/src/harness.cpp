#include "irs/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <random>
#include <sstream>

#include "irs/error.hpp"
#include "irs/nic_hal.hpp"

namespace irs::harness {

namespace reg = regmap::reg;
namespace bits = hal::bits;

// ---- Machine ------------------------------------------------------------

Machine::Machine(const MachineConfig& config) {
    if (config.nics == 0 || config.ram_frames == 0) {
        fail(Errc::InvalidArgument, "machine needs RAM and at least one NIC");
    }
    const std::uint64_t frames = config.ram_frames + std::uint64_t{kBarFrames} * config.nics;
    memory_ = std::make_unique<mem::MemorySystem>(frame_creator_, page_creator_, frames, frames);
    for (std::uint32_t i = 0; i < config.nics; ++i) {
        devices_.push_back(std::make_unique<sim::SimNic>(memory_->phys(), config.firmware));
        const std::uint64_t bar = config.ram_frames + std::uint64_t{kBarFrames} * i;
        memory_->phys().attach_mmio(IntervalId{bar, bar + kBarFrames - 1}, devices_.back().get());
        ixgbe::ConfigSpace cs;
        cs.bar0_frame = bar;
        cs.bar0_frames = kBarFrames;
        bus_.attach(location(i), cs);
    }
    bus_.scan();
}

Machine::~Machine() {
    for (const auto& d : devices_) {
        memory_->phys().detach_mmio(d.get());
    }
}

PciLocation Machine::location(std::size_t i) const {
    return PciLocation{0x03, static_cast<std::uint8_t>(i), 0};
}

ixgbe::IxgbeNic Machine::init_nic(std::size_t i, const ixgbe::DriverConfig& config) {
    ixgbe::PciDevice dev = bus_.take(location(i));
    return ixgbe::IxgbeNic::init(std::move(dev), *memory_, config);
}

// ---- Report -------------------------------------------------------------

std::optional<std::string> Report::get(const std::string& key) const {
    for (const auto& [k, v] : lines) {
        if (k == key) {
            return v;
        }
    }
    return std::nullopt;
}

std::string Report::text() const {
    std::string out;
    for (const auto& [k, v] : lines) {
        out += k + " " + v + "\n";
    }
    return out;
}

std::string Report::deterministic_text() const {
    std::string out;
    for (const auto& [k, v] : lines) {
        if (k.rfind("time.", 0) != 0) {
            out += k + " " + v + "\n";
        }
    }
    return out;
}

// ---- membench -----------------------------------------------------------

namespace {

struct Stats {
    double mean = 0;
    double stddev = 0;
};

Stats stats(const std::vector<double>& xs) {
    Stats s;
    if (xs.empty()) {
        return s;
    }
    for (const double x : xs) {
        s.mean += x;
    }
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double acc = 0;
        for (const double x : xs) {
            acc += (x - s.mean) * (x - s.mean);
        }
        s.stddev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
    }
    return s;
}

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

} // namespace

Report membench(std::uint32_t iterations, std::uint32_t pages) {
    if (iterations == 0 || pages == 0) {
        fail(Errc::InvalidArgument, "membench needs iterations >= 1 and pages >= 1");
    }
    using clock = std::chrono::steady_clock;
    auto us = [](clock::duration d) { return std::chrono::duration<double, std::micro>(d).count(); };

    Machine machine(MachineConfig{std::max<std::uint64_t>(pages * 2, 64), 1, sim::kFwsmDefault});
    mem::MemorySystem& memory = machine.memory();
    const auto free_pages = memory.free_pages();
    const auto free_frames = memory.free_frames();

    std::vector<double> map_t;
    std::vector<double> remap_t;
    std::vector<double> unmap_t;
    map_t.reserve(iterations);
    remap_t.reserve(iterations);
    unmap_t.reserve(iterations);
    const std::vector<std::uint8_t> payload(16, 0xA5);
    bool reclaimed = true;
    for (std::uint32_t i = 0; i < iterations; ++i) {
        auto t0 = clock::now();
        std::optional<mem::MappedPages> mp(memory.map_new(pages));
        auto t1 = clock::now();
        mp->write(0, payload);
        auto t2 = clock::now();
        mp->remap(mem::MappingFlags::ReadOnly);
        auto t3 = clock::now();
        mp.reset();
        auto t4 = clock::now();
        map_t.push_back(us(t1 - t0));
        remap_t.push_back(us(t3 - t2));
        unmap_t.push_back(us(t4 - t3));
        reclaimed = reclaimed && memory.page_table().size() == 0;
    }
    reclaimed = reclaimed && memory.free_pages() == free_pages && memory.free_frames() == free_frames;

    Report r;
    r.add("iterations", iterations);
    r.add("pages", pages);
    r.add("reclaimed", reclaimed ? 1 : 0);
    for (const auto& [name, xs] : {std::pair{"map", &map_t}, {"remap", &remap_t}, {"unmap", &unmap_t}}) {
        const Stats s = stats(*xs);
        r.add(std::string("time.") + name + ".mean_us", fixed(s.mean));
        r.add(std::string("time.") + name + ".stddev_us", fixed(s.stddev));
    }
    r.ok = reclaimed;
    return r;
}

// ---- scenarios ----------------------------------------------------------

namespace {

std::uint32_t to_u32(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const unsigned long v = std::stoul(s, &used, 0);
        if (used != s.size() || v > 0xFFFFFFFFul) {
            throw std::invalid_argument(s);
        }
        return static_cast<std::uint32_t>(v);
    } catch (const std::logic_error&) {
        fail(Errc::ParseError, "line " + std::to_string(line) + ": bad number '" + s + "'");
    }
}

FiveTuple read_tuple(std::istringstream& in, std::size_t line) {
    std::string src;
    std::string dst;
    std::string sport;
    std::string dport;
    std::string proto;
    if (!(in >> src >> dst >> sport >> dport >> proto)) {
        fail(Errc::ParseError, "line " + std::to_string(line) + ": incomplete 5-tuple");
    }
    const auto s = ipv4_from_string(src);
    const auto d = ipv4_from_string(dst);
    const auto p = protocol_from_string(proto);
    const std::uint32_t sp = to_u32(sport, line);
    const std::uint32_t dp = to_u32(dport, line);
    if (!s || !d || !p || sp > 0xFFFF || dp > 0xFFFF) {
        fail(Errc::ParseError, "line " + std::to_string(line) + ": bad 5-tuple");
    }
    return FiveTuple{*s, *d, static_cast<std::uint16_t>(sp), static_cast<std::uint16_t>(dp), *p};
}

const FiveTuple kHintFlow{0x0A000001, 0x0A000002, 1000, 2000, Protocol::Udp};

} // namespace

Scenario parse_scenario(const std::string& text) {
    Scenario sc;
    std::istringstream lines(text);
    std::string raw;
    std::size_t n = 0;
    while (std::getline(lines, raw)) {
        ++n;
        if (const auto hash = raw.find('#'); hash != std::string::npos) {
            raw.resize(hash);
        }
        std::istringstream in(raw);
        std::string key;
        if (!(in >> key)) {
            continue;
        }
        std::string v;
        if (key == "filter") {
            if (!(in >> v)) {
                fail(Errc::ParseError, "line " + std::to_string(n) + ": filter needs a queue");
            }
            FilterRule f;
            f.queue = to_u32(v, n);
            f.tuple = read_tuple(in, n);
            sc.filters.push_back(f);
        } else if (key == "rss") {
            while (in >> v) {
                sc.rss.push_back(to_u32(v, n));
            }
        } else if (key == "inject") {
            Injection inj;
            std::string step;
            std::string count;
            std::string len;
            std::string mode;
            if (!(in >> step >> count >> len >> mode)) {
                fail(Errc::ParseError, "line " + std::to_string(n) + ": inject STEP COUNT LEN MODE");
            }
            inj.step = to_u32(step, n);
            inj.count = to_u32(count, n);
            if (const auto dash = len.find('-'); dash != std::string::npos) {
                inj.min_len = to_u32(len.substr(0, dash), n);
                inj.max_len = to_u32(len.substr(dash + 1), n);
            } else {
                inj.min_len = inj.max_len = to_u32(len, n);
            }
            if (inj.min_len > inj.max_len) {
                fail(Errc::ParseError, "line " + std::to_string(n) + ": empty length range");
            }
            if (mode == "queue") {
                if (!(in >> v)) {
                    fail(Errc::ParseError, "line " + std::to_string(n) + ": queue hint missing");
                }
                inj.queue = to_u32(v, n);
            } else if (mode == "tuple") {
                inj.tuple = read_tuple(in, n);
            } else if (mode == "random") {
                inj.random_tuple = true;
            } else {
                fail(Errc::ParseError, "line " + std::to_string(n) + ": unknown inject mode '" + mode + "'");
            }
            sc.schedule.push_back(inj);
        } else {
            if (!(in >> v)) {
                fail(Errc::ParseError, "line " + std::to_string(n) + ": " + key + " needs a value");
            }
            const std::uint32_t x = to_u32(v, n);
            if (key == "rx_queues") {
                sc.rx_queues = x;
            } else if (key == "tx_queues") {
                sc.tx_queues = x;
            } else if (key == "ring_size") {
                sc.ring_size = x;
            } else if (key == "budget") {
                sc.budget = x;
            } else if (key == "restricted") {
                sc.restricted = x != 0;
            } else if (key == "seed") {
                sc.seed = x;
            } else {
                fail(Errc::ParseError, "line " + std::to_string(n) + ": unknown key '" + key + "'");
            }
        }
        std::string extra;
        if (in >> extra) {
            fail(Errc::ParseError, "line " + std::to_string(n) + ": trailing '" + extra + "'");
        }
    }
    std::stable_sort(sc.schedule.begin(), sc.schedule.end(),
                     [](const Injection& a, const Injection& b) { return a.step < b.step; });
    return sc;
}

// ---- forward ------------------------------------------------------------

Report forward(const Scenario& sc) {
    if (sc.budget == 0) {
        fail(Errc::InvalidConfig, "budget must be at least 1");
    }
    const ixgbe::DriverConfig cfg_a{sc.rx_queues, sc.tx_queues, sc.ring_size, sc.restricted};
    const ixgbe::DriverConfig cfg_b{1, 1, sc.ring_size, sc.restricted};
    const std::uint64_t ring_pages = (std::uint64_t{sc.ring_size} * 16 + 4095) / 4096;
    const std::uint64_t buf_pages = (std::uint64_t{sc.ring_size} * ixgbe::kBufferSize + 4095) / 4096;
    const std::uint64_t per_queue = ring_pages + buf_pages * (sc.restricted ? 1 : 2);
    const std::uint64_t ram = per_queue * (std::uint64_t{sc.rx_queues} + sc.tx_queues + 2) + 256;

    Machine m(MachineConfig{ram, 2, sim::kFwsmDefault});
    sim::SimNic& dev_a = m.device(0);
    sim::SimNic& dev_b = m.device(1);

    ixgbe::IxgbeNic a = m.init_nic(0, cfg_a);
    ixgbe::IxgbeNic b = m.init_nic(1, cfg_b);
    for (std::uint32_t q = 0; q < sc.rx_queues; ++q) {
        a.enable_rx(q);
    }
    for (std::uint32_t q = 0; q < sc.tx_queues; ++q) {
        a.enable_tx(q);
    }
    b.enable_rx(0);
    b.enable_tx(0);
    std::vector<ixgbe::FilterEntry> entries;
    for (const FilterRule& f : sc.filters) {
        entries.push_back(a.add_filter(f.queue, f.tuple));
    }
    if (!sc.rss.empty()) {
        a.configure_rss(sc.rss);
    }
    dev_a.connect_peer(dev_b);

    std::mt19937_64 rng(sc.seed);
    std::uint64_t seq = 0;
    std::size_t next = 0;
    std::vector<std::deque<ixgbe::Packet>> backlog(sc.tx_queues);
    std::map<std::uint64_t, std::uint32_t> origin; // seq -> rx queue on A
    std::vector<std::int64_t> last_seen(sc.rx_queues, -1);
    std::vector<std::uint64_t> per_queue_rx(sc.rx_queues, 0);
    std::uint64_t forwarded = 0;
    bool ordered = true;
    std::uint64_t idle = 0;

    for (std::uint64_t step = 0;; ++step) {
        while (next < sc.schedule.size() && sc.schedule[next].step <= step) {
            const Injection& inj = sc.schedule[next++];
            for (std::uint32_t k = 0; k < inj.count; ++k) {
                const std::uint32_t len =
                    inj.min_len == inj.max_len
                        ? inj.min_len
                        : std::uniform_int_distribution<std::uint32_t>(inj.min_len, inj.max_len)(rng);
                FiveTuple t = kHintFlow;
                if (inj.tuple) {
                    t = *inj.tuple;
                } else if (inj.random_tuple) {
                    t.src_ip = static_cast<std::uint32_t>(rng());
                    t.dst_ip = static_cast<std::uint32_t>(rng());
                    t.src_port = static_cast<std::uint16_t>(rng());
                    t.dst_port = static_cast<std::uint16_t>(rng());
                    t.protocol = static_cast<Protocol>(rng() % 3);
                }
                dev_a.inject(build_packet(t, seq++, len), inj.queue);
            }
        }

        dev_a.step(sc.budget);
        bool progress = false;
        for (std::uint32_t q = 0; q < sc.rx_queues; ++q) {
            for (ixgbe::Packet& p : a.receive_batch(q, sc.budget)) {
                progress = true;
                ++per_queue_rx[q];
                if (const auto s = parse_sequence(p)) {
                    origin[*s] = q;
                }
                backlog[q % sc.tx_queues].push_back(std::move(p));
            }
        }
        for (std::uint32_t t = 0; t < sc.tx_queues; ++t) {
            auto& bl = backlog[t];
            if (bl.empty()) {
                continue;
            }
            const std::size_t take = std::min<std::size_t>(bl.size(), sc.budget);
            const std::vector<ixgbe::Packet> batch(bl.begin(), bl.begin() + static_cast<long>(take));
            const std::uint32_t sent = a.send_batch(t, batch);
            bl.erase(bl.begin(), bl.begin() + sent);
            progress = progress || sent != 0;
        }
        dev_a.step(sc.budget);
        dev_b.step(sc.budget);
        for (const ixgbe::Packet& p : b.receive_batch(0, sc.budget)) {
            progress = true;
            ++forwarded;
            const auto s = parse_sequence(p);
            const auto o = s ? origin.find(*s) : origin.end();
            if (o == origin.end() || static_cast<std::int64_t>(*s) <= last_seen[o->second]) {
                ordered = false;
            } else {
                last_seen[o->second] = static_cast<std::int64_t>(*s);
            }
        }

        const bool backlog_empty =
            std::all_of(backlog.begin(), backlog.end(), [](const auto& bl) { return bl.empty(); });
        const bool drained = next == sc.schedule.size() && backlog_empty && dev_a.held() == 0 && dev_b.held() == 0 &&
                             dev_a.transmitted() == dev_b.injected() && dev_b.delivered() == forwarded;
        idle = progress ? 0 : idle + 1;
        if (drained && idle >= 2) {
            break;
        }
        if (next == sc.schedule.size() && idle > 64) {
            break; // stuck; reported through the conservation line
        }
    }

    const std::uint64_t dropped = dev_a.dropped() + dev_b.dropped();
    const std::uint64_t held = dev_a.held() + dev_b.held();
    std::vector<sim::Violation> log = dev_a.violations();
    log.insert(log.end(), dev_b.violations().begin(), dev_b.violations().end());

    Report r;
    r.add("injected", seq);
    r.add("forwarded", forwarded);
    r.add("dropped", dropped);
    r.add("held", held);
    r.add("order_preserved", ordered ? 1 : 0);
    r.add("violations", log.size());
    for (std::uint32_t q = 0; q < sc.rx_queues; ++q) {
        r.add("rx_queue." + std::to_string(q), per_queue_rx[q]);
    }
    for (const sim::Violation& v : log) {
        r.add("violation", std::string(sim::to_string(v.kind)) + " " + v.reg + " " + v.detail);
    }
    const bool conserved = forwarded + dropped + held == seq && held == 0;
    r.add("conserved", conserved ? 1 : 0);
    r.ok = conserved && ordered && log.empty();
    return r;
}

// ---- bug corpus ---------------------------------------------------------

namespace {

// Negative composition probes. Each is false when the HAL offers no way to
// write the offending value or skip the ordering proof.
template <const regmap::RegisterSpec& R>
constexpr bool kRawWrite = requires(hal::RegisterFile& r) { r.template write<R>(0u); };

template <class File>
constexpr bool kFctrlWithoutProof = requires(File& r) { r.fctrl_write(hal::FilterCtrlFlags{}); };

template <class File>
constexpr bool kRxEnableWithoutProof = requires(File& r) { r.rxctrl_rx_enable(); };

template <class File>
constexpr bool kTdhWithoutProof = requires(File& r) { r.tdh_write(0u, 0u); };

template <class File>
constexpr bool kRdhWithoutProof = requires(File& r) { r.rdh_write(0u, 0u); };

template <class Token>
constexpr bool kForgeable = std::is_default_constructible_v<Token> || std::is_copy_constructible_v<Token> ||
                            std::is_constructible_v<Token, std::uint64_t, std::uint64_t, std::uint32_t>;

template <class Flags>
constexpr bool kRawFlags = std::is_constructible_v<Flags, std::uint32_t>;

template <class Options>
constexpr bool kRdrxctlRawBits = requires(Options o) { o.rsc_ack; } || requires(Options o) { o.fcoe_wrfix; } ||
                                 requires(Options o) { o.raw; };

constexpr bool kEimcClosed = !kRawWrite<reg::EIMC> && !kRawFlags<hal::InterruptMaskFlags>;
constexpr bool kDtxmxszrqClosed = !kRawWrite<reg::DTXMXSZRQ>;
constexpr bool kRdrxctlClosed = !kRawWrite<reg::RDRXCTL> && !kRdrxctlRawBits<hal::RdrxctlOptions>;
constexpr bool kFctrlClosed = !kRawWrite<reg::FCTRL> && !kRawWrite<reg::RXCTRL> &&
                              !kFctrlWithoutProof<hal::RegisterFile> && !kRxEnableWithoutProof<hal::RegisterFile> &&
                              !kForgeable<hal::RxCtrlDisabled> && !kForgeable<hal::FilterCtrlSet> &&
                              !kRawFlags<hal::FilterCtrlFlags>;
constexpr bool kTdhClosed = !kRawWrite<reg::TDH> && !kRawWrite<reg::TXDCTL> && !kTdhWithoutProof<hal::RegisterFile> &&
                            !kForgeable<hal::TxQueueDisabled>;
constexpr bool kRdhClosed = !kRawWrite<reg::RDH> && !kRawWrite<reg::RXDCTL> && !kRdhWithoutProof<hal::RegisterFile> &&
                            !kForgeable<hal::RxQueueDisabled>;
constexpr bool kStatusClosed = !kRawWrite<reg::STATUS>;

static_assert(kEimcClosed && kDtxmxszrqClosed && kRdrxctlClosed && kFctrlClosed && kTdhClosed && kRdhClosed &&
              kStatusClosed);

void w(sim::SimNic& nic, const regmap::RegisterSpec& spec, std::uint32_t value, std::uint32_t index = 0) {
    nic.mmio_write(spec.at(index), value);
}

} // namespace

const std::vector<BugCase>& bug_cases() {
    static const std::vector<BugCase> cases = {
        {"eimc-reserved-bit", "write to reserved bit 31 of EIMC", sim::ViolationKind::ReservedBitWrite, kEimcClosed,
         [](sim::SimNic& n) { w(n, reg::EIMC, 0xFFFFFFFFu); }},
        {"dtxmxszrq-reserved-bits", "write to reserved bits of DTXMXSZRQ", sim::ViolationKind::ReservedBitWrite,
         kDtxmxszrqClosed, [](sim::SimNic& n) { w(n, reg::DTXMXSZRQ, 0xFFFFu); }},
        {"rdrxctl-default", "RDRXCTL written without RSCACKC and FCOE_WRFIX",
         sim::ViolationKind::RequiredBitsCleared, kRdrxctlClosed,
         [](sim::SimNic& n) { w(n, reg::RDRXCTL, bits::RDRXCTL_CRCSTRIP); }},
        {"fctrl-while-rx-enabled", "FCTRL changed without first clearing RXCTRL.RXEN",
         sim::ViolationKind::OrderingViolation, kFctrlClosed,
         [](sim::SimNic& n) {
             w(n, reg::RXCTRL, 0);
             w(n, reg::FCTRL, 0x700);
             w(n, reg::RXCTRL, bits::RXCTRL_RXEN);
             w(n, reg::FCTRL, 0x702);
         }},
        {"tdh-after-enable", "TDH written after TXDCTL.ENABLE is set", sim::ViolationKind::OrderingViolation,
         kTdhClosed,
         [](sim::SimNic& n) {
             w(n, reg::TDLEN, 64 * 16);
             w(n, reg::TXDCTL, bits::TXDCTL_ENABLE);
             w(n, reg::TDH, 0);
         }},
        {"rdh-after-enable", "RDH written after RXDCTL.ENABLE is set", sim::ViolationKind::OrderingViolation,
         kRdhClosed,
         [](sim::SimNic& n) {
             w(n, reg::RDLEN, 64 * 16);
             w(n, reg::RXDCTL, bits::RXDCTL_ENABLE);
             w(n, reg::RDH, 0);
         }},
        {"status-write", "write to the read-only STATUS register", sim::ViolationKind::ReservedBitWrite,
         kStatusClosed, [](sim::SimNic& n) { w(n, reg::STATUS, 1); }},
    };
    return cases;
}

BugOutcome replay(const BugCase& bug) {
    mem::SimPhysMemory phys(16);
    sim::SimNic nic(phys);
    bug.raw(nic);
    BugOutcome out{bug.name, bug.expected, bug.inexpressible, false, nic.violations()};
    out.detected = !out.log.empty() && std::all_of(out.log.begin(), out.log.end(),
                                                    [&](const sim::Violation& v) { return v.kind == bug.expected; });
    return out;
}

std::size_t legal_sequence_violations() {
    Machine m(MachineConfig{1024, 1, sim::kFwsmDefault});
    {
        ixgbe::IxgbeNic nic = m.init_nic(0, ixgbe::DriverConfig{2, 1, 64, true});
        nic.enable_rx(0);
        nic.enable_rx(1);
        nic.enable_tx(0);
        const FiveTuple flow{0x0A000001, 0x0A000002, 1000, 2000, Protocol::Tcp};
        ixgbe::FilterEntry f = nic.add_filter(1, flow);
        nic.configure_rss({0});
        for (std::uint64_t s = 0; s < 8; ++s) {
            m.device(0).inject(build_packet(flow, s, 128));
        }
        m.device(0).step(16);
        (void)nic.receive_batch(1, 16);
        (void)nic.send_batch(0, {build_packet(flow, 99, 64)});
        m.device(0).step(16);
        nic.disable_rss();
        nic.remove_filter(std::move(f));
        nic.disable_rx(1);
        nic.disable_tx(0);
    }
    return m.device(0).violations().size();
}

Report bugcorpus() {
    Report r;
    std::size_t passed = 0;
    for (const BugCase& bug : bug_cases()) {
        const BugOutcome o = replay(bug);
        passed += o.pass() ? 1 : 0;
        std::string observed = o.log.empty() ? "none" : "";
        for (const sim::Violation& v : o.log) {
            observed += (observed.empty() ? "" : ",") + std::string(sim::to_string(v.kind));
        }
        r.add("case." + bug.name, std::string(o.pass() ? "PASS" : "FAIL") + " expected=" +
                                      sim::to_string(bug.expected) + " observed=" + observed +
                                      " inexpressible=" + (o.inexpressible ? "1" : "0"));
    }
    const std::size_t legal = legal_sequence_violations();
    r.add("cases", bug_cases().size());
    r.add("passed", passed);
    r.add("legal_sequence_violations", legal);
    r.ok = passed == bug_cases().size() && legal == 0;
    return r;
}

} // namespace irs::harness
