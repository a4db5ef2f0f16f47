#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "irs/device_sim.hpp"
#include "irs/ixgbe.hpp"
#include "irs/mem.hpp"
#include "irs/pci.hpp"

namespace irs::harness {

inline constexpr std::uint32_t kBarFrames = 32;

struct MachineConfig {
    std::uint64_t ram_frames = 8192;
    std::uint32_t nics = 1;
    std::uint32_t firmware = sim::kFwsmDefault;
};

/// RAM frames [0, ram_frames) followed by one 32-frame BAR per NIC, a PCI
/// bus with one 82599 per BAR, and the device models behind them.
class Machine {
  public:
    explicit Machine(const MachineConfig& config = {});
    ~Machine();

    Machine(const Machine&) = delete;
    Machine& operator=(const Machine&) = delete;

    [[nodiscard]] mem::MemorySystem& memory() noexcept { return *memory_; }
    [[nodiscard]] ixgbe::PciBus& bus() noexcept { return bus_; }
    [[nodiscard]] sim::SimNic& device(std::size_t i) { return *devices_.at(i); }
    [[nodiscard]] PciLocation location(std::size_t i) const;
    [[nodiscard]] std::size_t nic_count() const noexcept { return devices_.size(); }

    /// Takes NIC i off the bus and runs the driver init.
    ixgbe::IxgbeNic init_nic(std::size_t i, const ixgbe::DriverConfig& config);

  private:
    ChunkCreator frame_creator_;
    ChunkCreator page_creator_;
    std::unique_ptr<mem::MemorySystem> memory_;
    std::vector<std::unique_ptr<sim::SimNic>> devices_;
    ixgbe::PciBus bus_;
};

/// Plain `key value` lines. Keys starting with "time." carry wall-clock
/// measurements and are excluded from deterministic comparison.
struct Report {
    std::vector<std::pair<std::string, std::string>> lines;
    bool ok = true;

    void add(const std::string& key, const std::string& value) { lines.emplace_back(key, value); }
    void add(const std::string& key, std::uint64_t value) { lines.emplace_back(key, std::to_string(value)); }
    [[nodiscard]] std::optional<std::string> get(const std::string& key) const;
    [[nodiscard]] std::string text() const;
    /// text() without time.* lines.
    [[nodiscard]] std::string deterministic_text() const;
};

/// Maps `pages` pages, writes them, remaps read-only and unmaps, `iterations` times.
Report membench(std::uint32_t iterations, std::uint32_t pages);

struct Injection {
    std::uint64_t step = 0;
    std::uint32_t count = 1;
    std::uint32_t min_len = 64;
    std::uint32_t max_len = 64;
    std::optional<std::uint32_t> queue;  // queue hint, bypasses classification
    std::optional<FiveTuple> tuple;      // fixed flow
    bool random_tuple = false;           // seeded random flow per packet
};

struct FilterRule {
    std::uint32_t queue = 0;
    FiveTuple tuple;
};

struct Scenario {
    std::uint32_t rx_queues = 1;
    std::uint32_t tx_queues = 1;
    std::uint32_t ring_size = 512;
    std::uint32_t budget = 64;
    bool restricted = true;
    std::uint64_t seed = 1;
    std::vector<FilterRule> filters;
    std::vector<std::uint32_t> rss;
    std::vector<Injection> schedule;
};

/// Line format, '#' comments:
///   rx_queues N | tx_queues N | ring_size N | budget N | restricted 0|1 | seed N
///   filter QUEUE SRC_IP DST_IP SRC_PORT DST_PORT PROTO
///   rss Q [Q...]
///   inject STEP COUNT LEN|MIN-MAX queue Q
///   inject STEP COUNT LEN|MIN-MAX tuple SRC_IP DST_IP SRC_PORT DST_PORT PROTO
///   inject STEP COUNT LEN|MIN-MAX random
Scenario parse_scenario(const std::string& text);

/// NIC A receives the schedule and retransmits every packet to NIC B.
Report forward(const Scenario& scenario);

struct BugCase {
    std::string name;
    std::string description;
    sim::ViolationKind expected;
    bool inexpressible; // no composition through the HAL reaches the raw write
    std::function<void(sim::SimNic&)> raw;
};

struct BugOutcome {
    std::string name;
    sim::ViolationKind expected;
    bool inexpressible = false;
    bool detected = false; // log non-empty and every entry has the expected kind
    std::vector<sim::Violation> log;

    [[nodiscard]] bool pass() const noexcept { return inexpressible && detected; }
};

const std::vector<BugCase>& bug_cases();
BugOutcome replay(const BugCase& bug);

/// Number of violations logged by a legal HAL-driven init plus traffic.
std::size_t legal_sequence_violations();

Report bugcorpus();

} // namespace irs::harness
