#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <type_traits>
#include <variant>
#include <vector>

#include "irs/conform.hpp"
#include "irs/mem.hpp"
#include "irs/nic_hal.hpp"
#include "irs/packet.hpp"
#include "irs/pci.hpp"

namespace irs::ixgbe {

// Queue states.
struct Disabled {};
struct Enabled {};
struct L3L4Filter {};
struct Rss {};

enum class QueueState { Disabled, Enabled, L3L4Filter, Rss };
const char* to_string(QueueState state) noexcept;

template <class From, class To>
inline constexpr bool kRxTransition =
    (std::is_same_v<From, Disabled> && std::is_same_v<To, Enabled>) ||
    (std::is_same_v<From, Enabled> && std::is_same_v<To, Disabled>) ||
    (std::is_same_v<From, Enabled> && std::is_same_v<To, L3L4Filter>) ||
    (std::is_same_v<From, L3L4Filter> && std::is_same_v<To, Enabled>) ||
    (std::is_same_v<From, Enabled> && std::is_same_v<To, Rss>) ||
    (std::is_same_v<From, Rss> && std::is_same_v<To, Enabled>);

template <class From, class To>
inline constexpr bool kTxTransition = (std::is_same_v<From, Disabled> && std::is_same_v<To, Enabled>) ||
                                      (std::is_same_v<From, Enabled> && std::is_same_v<To, Disabled>);

inline constexpr std::uint32_t kBufferSize = 2048;

struct DriverConfig {
    std::uint32_t rx_queues = 1;
    std::uint32_t tx_queues = 1;
    std::uint32_t ring_size = 64;
    bool restricted = true;
};

// Legacy descriptors.
struct RxDescriptor {
    std::uint64_t addr;
    std::uint16_t length;
    std::uint16_t checksum;
    std::uint8_t status;
    std::uint8_t errors;
    std::uint16_t vlan;
};
static_assert(sizeof(RxDescriptor) == 16);

struct TxDescriptor {
    std::uint64_t addr;
    std::uint16_t length;
    std::uint8_t cso;
    std::uint8_t cmd;
    std::uint8_t status;
    std::uint8_t css;
    std::uint16_t special;
};
static_assert(sizeof(TxDescriptor) == 16);

inline constexpr std::uint8_t kRxStatusDD = 0x01;
inline constexpr std::uint8_t kRxStatusEOP = 0x02;
inline constexpr std::uint8_t kTxCmdEOP = 0x01;
inline constexpr std::uint8_t kTxCmdIFCS = 0x02;
inline constexpr std::uint8_t kTxCmdRS = 0x08;
inline constexpr std::uint8_t kTxStatusDD = 0x01;

using PacketBuffer = std::array<std::uint8_t, kBufferSize>;
using Packet = std::vector<std::uint8_t>;

namespace detail {

struct RxCore {
    RxCore(mem::MappedPages&& ring_mem, mem::MappedPages&& buffer_mem) noexcept
        : ring_pages(std::move(ring_mem)), buffer_pages(std::move(buffer_mem)) {}

    std::uint32_t queue = 0;
    std::uint32_t len = 0;
    bool restricted = true;
    hal::RegisterFile* regs = nullptr;
    mem::MappedPages ring_pages;
    mem::MappedPages buffer_pages;
    mem::TypedView<RxDescriptor> ring;
    std::vector<mem::TypedView<PacketBuffer>> buffers;
    std::vector<std::uint32_t> slot_buffer; // descriptor -> buffer
    std::deque<std::uint32_t> spare;        // unrestricted mode only
    std::uint32_t next_index_ = 0;
};

struct TxCore {
    TxCore(mem::MappedPages&& ring_mem, mem::MappedPages&& buffer_mem) noexcept
        : ring_pages(std::move(ring_mem)), buffer_pages(std::move(buffer_mem)) {}

    std::uint32_t queue = 0;
    std::uint32_t len = 0;
    hal::RegisterFile* regs = nullptr;
    mem::MappedPages ring_pages;
    mem::MappedPages buffer_pages;
    mem::TypedView<TxDescriptor> ring;
    std::vector<mem::TypedView<PacketBuffer>> buffers;
    std::uint32_t next_index_ = 0;
    std::uint32_t clean_index_ = 0;
};

// Verified core: the only code that moves next_index_ / clean_index_.
std::uint32_t send_batch(TxCore& core, const std::vector<Packet>& packets);
std::vector<Packet> receive_batch(RxCore& core, std::uint32_t max);
void rx_reset_ring(RxCore& core);
void tx_reset_ring(TxCore& core);

} // namespace detail

class IxgbeNic;

template <class S>
class RxQueue {
  public:
    RxQueue(RxQueue&&) noexcept = default;
    RxQueue& operator=(RxQueue&&) noexcept = default;
    RxQueue(const RxQueue&) = delete;
    RxQueue& operator=(const RxQueue&) = delete;

    [[nodiscard]] std::uint32_t index() const noexcept { return core_->queue; }
    [[nodiscard]] std::uint32_t ring_size() const noexcept { return core_->len; }
    [[nodiscard]] std::uint32_t next_index() const noexcept { return core_->next_index_; }

    std::vector<Packet> receive_batch(std::uint32_t max)
        requires(!std::is_same_v<S, Disabled>)
    {
        return detail::receive_batch(*core_, max);
    }

  private:
    friend class IxgbeNic;
    template <class>
    friend class RxQueue;

    explicit RxQueue(std::unique_ptr<detail::RxCore> core) noexcept : core_(std::move(core)) {}

    template <class To>
        requires kRxTransition<S, To>
    RxQueue<To> transition() && {
        return RxQueue<To>(std::move(core_));
    }

    std::unique_ptr<detail::RxCore> core_;
};

template <class S>
class TxQueue {
  public:
    TxQueue(TxQueue&&) noexcept = default;
    TxQueue& operator=(TxQueue&&) noexcept = default;
    TxQueue(const TxQueue&) = delete;
    TxQueue& operator=(const TxQueue&) = delete;

    [[nodiscard]] std::uint32_t index() const noexcept { return core_->queue; }
    [[nodiscard]] std::uint32_t ring_size() const noexcept { return core_->len; }
    [[nodiscard]] std::uint32_t next_index() const noexcept { return core_->next_index_; }
    [[nodiscard]] std::uint32_t clean_index() const noexcept { return core_->clean_index_; }

    std::uint32_t send_batch(const std::vector<Packet>& packets)
        requires std::is_same_v<S, Enabled>
    {
        return detail::send_batch(*core_, packets);
    }

  private:
    friend class IxgbeNic;
    template <class>
    friend class TxQueue;

    explicit TxQueue(std::unique_ptr<detail::TxCore> core) noexcept : core_(std::move(core)) {}

    template <class To>
        requires kTxTransition<S, To>
    TxQueue<To> transition() && {
        return TxQueue<To>(std::move(core_));
    }

    std::unique_ptr<detail::TxCore> core_;
};

IRS_CONFORM_NOT_DUPLICABLE(RxQueue<Disabled>);
IRS_CONFORM_NOT_DUPLICABLE(RxQueue<Enabled>);
IRS_CONFORM_NOT_DUPLICABLE(RxQueue<L3L4Filter>);
IRS_CONFORM_NOT_DUPLICABLE(RxQueue<Rss>);
IRS_CONFORM_NOT_DUPLICABLE(TxQueue<Disabled>);
IRS_CONFORM_NOT_DUPLICABLE(TxQueue<Enabled>);
IRS_CONFORM_FIELDS_PRIVATE(RxQueue, core_);
IRS_CONFORM_FIELDS_PRIVATE(TxQueue, core_);

struct FilterRecord {
    std::uint32_t slot;
    FiveTuple tuple;
    std::uint32_t queue;

    friend bool operator==(const FilterRecord&, const FilterRecord&) = default;
};

/// Capability to remove one installed filter.
class FilterEntry {
  public:
    FilterEntry(FilterEntry&& other) noexcept
        : nic_(other.nic_), record_(other.record_), live_(std::exchange(other.live_, false)) {}
    FilterEntry& operator=(FilterEntry&& other) noexcept {
        nic_ = other.nic_;
        record_ = other.record_;
        live_ = std::exchange(other.live_, false);
        return *this;
    }
    FilterEntry(const FilterEntry&) = delete;
    FilterEntry& operator=(const FilterEntry&) = delete;

    [[nodiscard]] std::uint32_t slot() const noexcept { return record_.slot; }
    [[nodiscard]] std::uint32_t queue() const noexcept { return record_.queue; }
    [[nodiscard]] const FiveTuple& tuple() const noexcept { return record_.tuple; }
    [[nodiscard]] bool live() const noexcept { return live_; }

  private:
    friend class IxgbeNic;

    FilterEntry(std::uint64_t nic, const FilterRecord& record) noexcept : nic_(nic), record_(record), live_(true) {}

    std::uint64_t nic_;
    FilterRecord record_;
    bool live_;
};

IRS_CONFORM_NOT_DUPLICABLE(FilterEntry);
IRS_CONFORM_FIELDS_PRIVATE(FilterEntry, nic_, record_, live_);

/// Unique software representation of one 82599. Its methods are the only
/// path to the device.
class IxgbeNic {
  public:
    static IxgbeNic init(PciDevice&& pci, mem::MemorySystem& memory, const DriverConfig& config);

    IxgbeNic(IxgbeNic&&) noexcept = default;
    IxgbeNic& operator=(IxgbeNic&&) = delete;
    IxgbeNic(const IxgbeNic&) = delete;
    IxgbeNic& operator=(const IxgbeNic&) = delete;
    ~IxgbeNic();

    void enable_rx(std::uint32_t queue);
    void disable_rx(std::uint32_t queue);
    void enable_tx(std::uint32_t queue);
    void disable_tx(std::uint32_t queue);

    std::uint32_t send_batch(std::uint32_t queue, const std::vector<Packet>& packets);
    std::vector<Packet> receive_batch(std::uint32_t queue, std::uint32_t max);

    FilterEntry add_filter(std::uint32_t queue, const FiveTuple& tuple);
    void remove_filter(FilterEntry&& entry);
    void configure_rss(const std::vector<std::uint32_t>& queues);
    void disable_rss();

    template <class S>
    RxQueue<S>& rx_queue(std::uint32_t queue) {
        auto* q = std::get_if<RxQueue<S>>(&rx_slot(queue));
        if (q == nullptr) {
            fail(Errc::StateConflict, "rx queue " + std::to_string(queue) + " is " + to_string(rx_state(queue)));
        }
        return *q;
    }
    template <class S>
    TxQueue<S>& tx_queue(std::uint32_t queue) {
        auto* q = std::get_if<TxQueue<S>>(&tx_slot(queue));
        if (q == nullptr) {
            fail(Errc::StateConflict, "tx queue " + std::to_string(queue) + " is " + to_string(tx_state(queue)));
        }
        return *q;
    }

    [[nodiscard]] QueueState rx_state(std::uint32_t queue) const;
    [[nodiscard]] QueueState tx_state(std::uint32_t queue) const;
    [[nodiscard]] std::uint32_t rx_next_index(std::uint32_t queue) const;
    [[nodiscard]] std::uint32_t tx_next_index(std::uint32_t queue) const;
    [[nodiscard]] std::vector<FilterRecord> filters() const;
    [[nodiscard]] std::uint32_t rx_queue_count() const noexcept { return static_cast<std::uint32_t>(rx_.size()); }
    [[nodiscard]] std::uint32_t tx_queue_count() const noexcept { return static_cast<std::uint32_t>(tx_.size()); }
    [[nodiscard]] const DriverConfig& config() const noexcept { return config_; }
    [[nodiscard]] const PciLocation& location() const noexcept { return pci_.location(); }
    [[nodiscard]] hal::RegisterFile& registers() noexcept { return *regs_; }
    [[nodiscard]] const hal::RegisterFile& registers() const noexcept { return *regs_; }

  private:
    using RxSlot = std::variant<RxQueue<Disabled>, RxQueue<Enabled>, RxQueue<L3L4Filter>, RxQueue<Rss>>;
    using TxSlot = std::variant<TxQueue<Disabled>, TxQueue<Enabled>>;

    IxgbeNic(PciDevice&& pci, mem::MappedPages&& bar, std::unique_ptr<hal::RegisterFile> regs,
             const DriverConfig& config);

    void bring_up();
    void setup_rx(mem::MemorySystem& memory);
    void setup_tx(mem::MemorySystem& memory);
    RxSlot& rx_slot(std::uint32_t queue);
    const RxSlot& rx_slot(std::uint32_t queue) const;
    TxSlot& tx_slot(std::uint32_t queue);
    const TxSlot& tx_slot(std::uint32_t queue) const;
    detail::RxCore& rx_core(std::uint32_t queue) const;
    detail::TxCore& tx_core(std::uint32_t queue) const;

    template <class From, class To>
    void move_rx(std::uint32_t queue) {
        RxSlot& slot = rx_slot(queue);
        RxQueue<To> next = std::move(std::get<RxQueue<From>>(slot)).template transition<To>();
        slot = std::move(next);
    }
    template <class From, class To>
    void move_tx(std::uint32_t queue) {
        TxSlot& slot = tx_slot(queue);
        TxQueue<To> next = std::move(std::get<TxQueue<From>>(slot)).template transition<To>();
        slot = std::move(next);
    }

    PciDevice pci_;
    mem::MappedPages bar_;
    std::unique_ptr<hal::RegisterFile> regs_;
    DriverConfig config_;
    std::uint64_t id_;
    std::array<std::optional<FilterRecord>, hal::kFilterSlots> filters_;
    std::vector<RxSlot> rx_;
    std::vector<TxSlot> tx_;
};

IRS_CONFORM_NOT_DUPLICABLE(IxgbeNic);
IRS_CONFORM_FIELDS_PRIVATE(IxgbeNic, pci_, bar_, regs_, filters_, rx_, tx_);

} // namespace irs::ixgbe
