#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "irs/conform.hpp"
#include "irs/mem.hpp"
#include "irs/packet.hpp"
#include "irs/regmap.hpp"

namespace irs::sim {

enum class ViolationKind {
    ReservedBitWrite,
    OrderingViolation,
    RequiredBitsCleared,
    HeadTailOutOfRange,
    FilterMisconfig,
};

const char* to_string(ViolationKind kind) noexcept;

struct Violation {
    ViolationKind kind;
    std::string reg;
    std::string detail;
};

/// Enabled hardware filter as the device sees it.
struct HwFilter {
    std::uint32_t slot;
    FiveTuple tuple;
    std::uint32_t queue;
    std::uint32_t priority;
    std::uint32_t mask; // FTQF mask field, bits 29:25 shifted down

    friend bool operator==(const HwFilter&, const HwFilter&) = default;
};

inline constexpr std::uint32_t kFwsmDefault = 1u << 15; // valid, no manageability

/// Behavioral model of the 82599 subset plus the datasheet oracle. Every
/// register write is checked against the shared register map and a small
/// ordering-rule table; violations are logged, never fatal.
class SimNic final : public mem::MmioHandler {
  public:
    using TxSink = std::function<void(std::vector<std::uint8_t>&&)>;

    explicit SimNic(mem::SimPhysMemory& phys, std::uint32_t firmware = kFwsmDefault);

    SimNic(const SimNic&) = delete;
    SimNic& operator=(const SimNic&) = delete;

    std::uint32_t mmio_read(std::uint64_t offset) override;
    void mmio_write(std::uint64_t offset, std::uint32_t value) override;

    /// Processes up to `budget` transmit descriptors and, separately, up to
    /// `budget` receive descriptors, round-robin over queues.
    void step(std::uint32_t budget);

    /// Arriving packet. Classified now and held until a receive descriptor is free.
    void inject(std::vector<std::uint8_t> packet, std::optional<std::uint32_t> queue_hint = std::nullopt);

    /// Filter match, else RSS, else queue 0.
    std::uint32_t classify(const FiveTuple& tuple);

    void set_tx_sink(TxSink sink) { sink_ = std::move(sink); }
    void connect_peer(SimNic& peer);
    void set_link(bool up) noexcept { link_up_ = up; }
    void set_firmware(std::uint32_t fwsm) noexcept { firmware_ = fwsm; }

    [[nodiscard]] const std::vector<Violation>& violations() const noexcept { return log_; }
    [[nodiscard]] std::size_t violation_count(ViolationKind kind) const noexcept;

    /// Register value without read side effects.
    [[nodiscard]] std::uint32_t peek(const regmap::RegisterSpec& spec, std::uint32_t index = 0) const;

    [[nodiscard]] std::vector<HwFilter> filter_table() const;
    [[nodiscard]] bool rss_enabled() const;
    [[nodiscard]] std::array<std::uint8_t, 128> reta() const;

    [[nodiscard]] std::uint64_t injected() const noexcept { return injected_; }
    [[nodiscard]] std::uint64_t delivered() const noexcept { return delivered_; }
    [[nodiscard]] std::uint64_t transmitted() const noexcept { return transmitted_; }
    [[nodiscard]] std::uint64_t dropped() const noexcept { return dropped_; }
    [[nodiscard]] std::uint64_t held() const noexcept;
    [[nodiscard]] std::uint64_t held(std::uint32_t queue) const { return pending_.at(queue).size(); }
    [[nodiscard]] std::uint64_t delivered(std::uint32_t queue) const { return delivered_per_queue_.at(queue); }

  private:
    [[nodiscard]] std::uint32_t& word(std::uint32_t offset) { return regs_[offset / 4]; }
    [[nodiscard]] std::uint32_t word(std::uint32_t offset) const { return regs_[offset / 4]; }
    void log(ViolationKind kind, const regmap::RegisterSpec& spec, std::uint32_t index, std::string detail);
    void power_on_reset();
    void check_ring_index(const regmap::RegisterSpec& spec, std::uint32_t index, std::uint32_t value,
                          const regmap::RegisterSpec& len_reg);
    void evaluate_filters();
    [[nodiscard]] std::uint32_t ring_len(const regmap::RegisterSpec& len_reg, std::uint32_t queue) const;
    [[nodiscard]] std::uint64_t ring_base(const regmap::RegisterSpec& lo, const regmap::RegisterSpec& hi,
                                          std::uint32_t queue) const;
    bool tx_one(std::uint32_t queue);
    bool rx_one(std::uint32_t queue);

    mem::SimPhysMemory& phys_;
    std::vector<std::uint32_t> regs_;
    std::uint32_t firmware_;
    bool link_up_ = true;
    bool fctrl_since_rx_disable_ = false;
    std::set<std::string> conflicts_;
    std::vector<Violation> log_;
    std::array<std::deque<std::vector<std::uint8_t>>, 64> pending_;
    std::array<std::uint64_t, 64> delivered_per_queue_{};
    std::uint64_t injected_ = 0;
    std::uint64_t delivered_ = 0;
    std::uint64_t transmitted_ = 0;
    std::uint64_t dropped_ = 0;
    std::uint64_t gprc_ = 0;
    std::uint64_t gptc_ = 0;
    TxSink sink_;
};

IRS_CONFORM_NOT_DUPLICABLE(SimNic);

} // namespace irs::sim
