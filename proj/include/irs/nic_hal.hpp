#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "irs/conform.hpp"
#include "irs/error.hpp"
#include "irs/mem.hpp"
#include "irs/packet.hpp"
#include "irs/regmap.hpp"
#include "irs/regmap_generated.hpp"

namespace irs::hal {

namespace bits {
inline constexpr std::uint32_t CTRL_LRST = 1u << 3;
inline constexpr std::uint32_t CTRL_RST = 1u << 26;
inline constexpr std::uint32_t STATUS_LAN_ID_MASK = 0x0000000Cu;
inline constexpr std::uint32_t EEC_ARD = 1u << 9;
inline constexpr std::uint32_t RXCTRL_RXEN = 1u << 0;
inline constexpr std::uint32_t RXDCTL_ENABLE = 1u << 25;
inline constexpr std::uint32_t RXDCTL_VME = 1u << 30;
inline constexpr std::uint32_t TXDCTL_ENABLE = 1u << 25;
inline constexpr std::uint32_t TXDCTL_SWFLSH = 1u << 26;
inline constexpr std::uint32_t DMATXCTL_TE = 1u << 0;
inline constexpr std::uint32_t RDRXCTL_CRCSTRIP = 1u << 1;
inline constexpr std::uint32_t RDRXCTL_DMAIDONE = 1u << 3;
inline constexpr std::uint32_t RDRXCTL_RSCFRSTSIZE_SHIFT = 17;
inline constexpr std::uint32_t RDRXCTL_RSCACKC = 1u << 25;
inline constexpr std::uint32_t RDRXCTL_FCOE_WRFIX = 1u << 26;
inline constexpr std::uint32_t HLREG0_TXCRCEN = 1u << 0;
inline constexpr std::uint32_t HLREG0_RXCRCSTRP = 1u << 1;
inline constexpr std::uint32_t HLREG0_TXPADEN = 1u << 10;
inline constexpr std::uint32_t LINKS_UP = 1u << 30;
inline constexpr std::uint32_t FWSM_MODE_MASK = 0x0000000Eu;
inline constexpr std::uint32_t FWSM_MODE_SHIFT = 1;
inline constexpr std::uint32_t FWSM_VALID = 1u << 15;
inline constexpr std::uint32_t SRRCTL_BSIZEPACKET_MASK = 0x1Fu;
inline constexpr std::uint32_t FTQF_PRIORITY_SHIFT = 2;
inline constexpr std::uint32_t FTQF_POOL_SHIFT = 8;
inline constexpr std::uint32_t FTQF_MASK_SHIFT = 25;
inline constexpr std::uint32_t FTQF_POOL_MASK = 1u << 30;
inline constexpr std::uint32_t FTQF_ENABLE = 1u << 31;
inline constexpr std::uint32_t L34TIMIR_QUEUE_SHIFT = 21;
inline constexpr std::uint32_t L34TIMIR_QUEUE_MASK = 0x7Fu << 21;
inline constexpr std::uint32_t MRQC_MRQE_MASK = 0xFu;
inline constexpr std::uint32_t MRQC_RSS = 0x1u;
inline constexpr std::uint32_t DTXMXSZRQ_MAX = 0xFFFu;
} // namespace bits

inline constexpr std::uint32_t kMaxQueues = 64;
inline constexpr std::uint32_t kFilterSlots = 128;
inline constexpr std::uint32_t kRetaEntries = 128;
inline constexpr std::uint32_t kRssMaxQueue = 16;
inline constexpr std::uint32_t kDescriptorSize = 16;

/// FCTRL value. Only the four defined bits are constructible.
class FilterCtrlFlags {
  public:
    constexpr FilterCtrlFlags() noexcept = default;

    static const FilterCtrlFlags STORE_BAD_PACKETS;
    static const FilterCtrlFlags MULTICAST_PROMISCUOUS_ENABLE;
    static const FilterCtrlFlags UNICAST_PROMISCUOUS_ENABLE;
    static const FilterCtrlFlags BROADCAST_ACCEPT_MODE;

    [[nodiscard]] constexpr std::uint32_t bits() const noexcept { return bits_; }
    [[nodiscard]] constexpr bool contains(FilterCtrlFlags other) const noexcept {
        return (bits_ & other.bits_) == other.bits_;
    }
    constexpr FilterCtrlFlags operator|(FilterCtrlFlags other) const noexcept {
        return FilterCtrlFlags(bits_ | other.bits_);
    }
    friend constexpr bool operator==(FilterCtrlFlags, FilterCtrlFlags) noexcept = default;

  private:
    constexpr explicit FilterCtrlFlags(std::uint32_t bits) noexcept : bits_(bits) {}

    std::uint32_t bits_ = 0;
};

inline constexpr FilterCtrlFlags FilterCtrlFlags::STORE_BAD_PACKETS{1u << 1};
inline constexpr FilterCtrlFlags FilterCtrlFlags::MULTICAST_PROMISCUOUS_ENABLE{1u << 8};
inline constexpr FilterCtrlFlags FilterCtrlFlags::UNICAST_PROMISCUOUS_ENABLE{1u << 9};
inline constexpr FilterCtrlFlags FilterCtrlFlags::BROADCAST_ACCEPT_MODE{1u << 10};

/// EIMC value: interrupt causes 0..30. Bit 31 is reserved and unreachable.
class InterruptMaskFlags {
  public:
    constexpr InterruptMaskFlags() noexcept = default;

    static InterruptMaskFlags cause(unsigned index) {
        if (index > 30) {
            fail(Errc::ValueOutOfRange, "interrupt cause " + std::to_string(index) + " is reserved");
        }
        return InterruptMaskFlags(1u << index);
    }
    static constexpr InterruptMaskFlags all() noexcept { return InterruptMaskFlags(0x7FFFFFFFu); }

    [[nodiscard]] constexpr std::uint32_t bits() const noexcept { return bits_; }
    constexpr InterruptMaskFlags operator|(InterruptMaskFlags other) const noexcept {
        return InterruptMaskFlags(bits_ | other.bits_);
    }

  private:
    constexpr explicit InterruptMaskFlags(std::uint32_t bits) noexcept : bits_(bits) {}

    std::uint32_t bits_ = 0;
};

struct RdrxctlOptions {
    bool crc_strip = true;
    std::uint32_t rsc_first_size = 0; // 5-bit field
};

struct TxdctlThresholds {
    std::uint32_t pthresh = 36;
    std::uint32_t hthresh = 8;
    std::uint32_t wthresh = 4;
};

enum class FirmwareStatus { NoManageability, PassThrough, Unknown, Invalid };

const char* to_string(FirmwareStatus status) noexcept;

/// Hardware 5-tuple filter contents.
struct FilterSpec {
    FiveTuple tuple;
    std::uint32_t queue = 0;    // 0..127
    std::uint32_t priority = 1; // 1..7
};

class RegisterFile;

namespace detail {

/// Single-use proof value. Moving transfers the proof; the source is spent.
class Token {
  public:
    Token(Token&& other) noexcept
        : owner_(other.owner_), generation_(other.generation_), queue_(other.queue_),
          live_(std::exchange(other.live_, false)) {}
    Token& operator=(Token&& other) noexcept {
        owner_ = other.owner_;
        generation_ = other.generation_;
        queue_ = other.queue_;
        live_ = std::exchange(other.live_, false);
        return *this;
    }
    Token(const Token&) = delete;
    Token& operator=(const Token&) = delete;

    [[nodiscard]] bool live() const noexcept { return live_; }

  protected:
    [[nodiscard]] std::uint32_t queue_index() const noexcept { return queue_; }

    Token(std::uint64_t owner, std::uint64_t generation, std::uint32_t queue) noexcept
        : owner_(owner), generation_(generation), queue_(queue), live_(true) {}

  private:
    friend class hal::RegisterFile;

    std::uint64_t owner_;
    std::uint64_t generation_;
    std::uint32_t queue_;
    bool live_;
};

} // namespace detail

/// Proof that RXCTRL.RXEN was cleared and not set again since.
class RxCtrlDisabled final : public detail::Token {
  private:
    friend class RegisterFile;
    using Token::Token;
};

/// Proof that FCTRL was written while receive was disabled.
class FilterCtrlSet final : public detail::Token {
  private:
    friend class RegisterFile;
    using Token::Token;
};

/// Proof that TXDCTL[queue].ENABLE is clear.
class TxQueueDisabled final : public detail::Token {
  public:
    [[nodiscard]] std::uint32_t queue() const noexcept;

  private:
    friend class RegisterFile;
    using Token::Token;
};

/// Proof that RXDCTL[queue].ENABLE is clear.
class RxQueueDisabled final : public detail::Token {
  public:
    [[nodiscard]] std::uint32_t queue() const noexcept;

  private:
    friend class RegisterFile;
    using Token::Token;
};

IRS_CONFORM_NOT_DUPLICABLE(RxCtrlDisabled);
IRS_CONFORM_NOT_DUPLICABLE(FilterCtrlSet);
IRS_CONFORM_NOT_DUPLICABLE(TxQueueDisabled);
IRS_CONFORM_NOT_DUPLICABLE(RxQueueDisabled);
IRS_CONFORM_FIELDS_PRIVATE(Token, owner_, generation_, queue_, live_);

template <const regmap::RegisterSpec& R>
concept Readable = R.access == regmap::Access::ReadOnly || R.access == regmap::Access::ReadWrite;

template <const regmap::RegisterSpec& R>
concept Writable = R.access == regmap::Access::ReadWrite;

/// Typed register layout over the device window. ReadOnly and ReadWrite
/// registers get generic accessors; Restricted ones only their typed
/// operations; Reserved ones nothing.
class RegisterFile {
  public:
    explicit RegisterFile(mem::MmioWindow&& window);

    RegisterFile(RegisterFile&&) noexcept = default;
    RegisterFile& operator=(RegisterFile&&) noexcept = default;
    RegisterFile(const RegisterFile&) = delete;
    RegisterFile& operator=(const RegisterFile&) = delete;

    template <const regmap::RegisterSpec& R>
        requires Readable<R>
    [[nodiscard]] std::uint32_t read(std::uint32_t index = 0) const {
        return window_.read32(address<R>(index));
    }

    /// Rejects values touching reserved bits.
    template <const regmap::RegisterSpec& R>
        requires Writable<R>
    void write(std::uint32_t value, std::uint32_t index = 0) {
        if ((value & R.reserved_mask) != 0) {
            fail(Errc::ValueOutOfRange, std::string(R.name) + " value touches reserved bits");
        }
        window_.write32(address<R>(index), value);
    }

    // Device control.
    void reset();
    [[nodiscard]] bool reset_pending() const;
    [[nodiscard]] bool eeprom_auto_read_done() const;
    [[nodiscard]] bool dma_init_done() const;
    [[nodiscard]] bool link_up() const;
    [[nodiscard]] FirmwareStatus fwsm_status() const;
    void eimc_write(InterruptMaskFlags mask);

    // Receive path.
    void rdrxctl_write(const RdrxctlOptions& options);
    [[nodiscard]] std::uint32_t rdrxctl_read() const;
    RxCtrlDisabled rxctrl_rx_disable();
    FilterCtrlSet fctrl_write(FilterCtrlFlags value, RxCtrlDisabled&& proof);
    void rxctrl_rx_enable(FilterCtrlSet&& proof);
    [[nodiscard]] bool rx_enabled() const;
    [[nodiscard]] std::uint32_t fctrl_read() const;
    void rx_ring_program(std::uint32_t queue, std::uint64_t paddr, std::uint32_t descriptors,
                         std::uint32_t buffer_bytes);
    RxQueueDisabled rxdctl_disable(std::uint32_t queue);
    void rxdctl_enable(std::uint32_t queue);
    void rdh_write(std::uint32_t queue, std::uint32_t value, RxQueueDisabled&& proof);
    void rdt_write(std::uint32_t queue, std::uint32_t value);
    [[nodiscard]] std::uint32_t rdh_read(std::uint32_t queue) const;
    [[nodiscard]] std::uint32_t rdt_read(std::uint32_t queue) const;

    // Transmit path.
    void dtxmxszrq_write(std::uint32_t max_bytes_req);
    void dmatxctl_tx_enable();
    void tx_ring_program(std::uint32_t queue, std::uint64_t paddr, std::uint32_t descriptors);
    TxQueueDisabled txdctl_disable(std::uint32_t queue);
    void txdctl_enable(std::uint32_t queue, const TxdctlThresholds& thresholds = {});
    void tdh_write(std::uint32_t queue, std::uint32_t value, TxQueueDisabled&& proof);
    void tdt_write(std::uint32_t queue, std::uint32_t value);
    [[nodiscard]] std::uint32_t tdh_read(std::uint32_t queue) const;
    [[nodiscard]] std::uint32_t tdt_read(std::uint32_t queue) const;

    // Filters and RSS.
    void filter_write(std::uint32_t slot, const FilterSpec& spec);
    void filter_clear(std::uint32_t slot);
    void reta_write(const std::array<std::uint8_t, kRetaEntries>& table);
    void mrqc_write(bool rss_enable);

    [[nodiscard]] std::uint32_t ring_length(std::uint32_t queue, bool rx) const;

  private:
    template <const regmap::RegisterSpec& R>
    [[nodiscard]] std::uint32_t address(std::uint32_t index) const {
        if (index >= R.count) {
            fail(Errc::OutOfRange, std::string(R.name) + " index " + std::to_string(index) + " out of range");
        }
        return R.at(index);
    }
    template <const regmap::RegisterSpec& R>
    void put(std::uint32_t value, std::uint32_t index = 0) {
        static_assert(R.access != regmap::Access::Reserved);
        window_.write32(address<R>(index), value & ~R.reserved_mask);
    }
    template <const regmap::RegisterSpec& R>
    [[nodiscard]] std::uint32_t get(std::uint32_t index = 0) const {
        static_assert(R.access != regmap::Access::Reserved);
        return window_.read32(address<R>(index));
    }
    void consume(detail::Token& token, std::uint64_t generation, const char* what);
    void check_queue(std::uint32_t queue) const;

    mem::MmioWindow window_;
    std::uint64_t id_;
    std::uint64_t rx_generation_ = 0;
    std::array<std::uint64_t, kMaxQueues> tx_generation_{};
    std::array<std::uint64_t, kMaxQueues> rxq_generation_{};
    std::array<std::uint32_t, kMaxQueues> rx_len_{};
    std::array<std::uint32_t, kMaxQueues> tx_len_{};
};

IRS_CONFORM_NOT_DUPLICABLE(RegisterFile);
IRS_CONFORM_FIELDS_PRIVATE(FilterCtrlFlags, bits_);
IRS_CONFORM_FIELDS_PRIVATE(InterruptMaskFlags, bits_);
IRS_CONFORM_FIELDS_PRIVATE(RegisterFile, window_, id_, rx_generation_, tx_generation_, rxq_generation_);

} // namespace irs::hal
