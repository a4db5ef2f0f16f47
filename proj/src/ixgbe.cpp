#include "irs/ixgbe.hpp"

#include <atomic>
#include <set>

namespace irs::ixgbe {

namespace reg = regmap::reg;
namespace bits = hal::bits;

namespace {

std::atomic<std::uint64_t> g_next_nic{1};

constexpr int kPollLimit = 1000;

bool power_of_two(std::uint32_t v) { return v != 0 && (v & (v - 1)) == 0; }

void validate(const DriverConfig& config) {
    if (!power_of_two(config.ring_size) || config.ring_size < 8 || config.ring_size > 4096) {
        fail(Errc::InvalidConfig, "ring size " + std::to_string(config.ring_size) +
                                      " must be a power of two in [8, 4096]");
    }
    if (config.rx_queues == 0 || config.rx_queues > hal::kMaxQueues || config.tx_queues == 0 ||
        config.tx_queues > hal::kMaxQueues) {
        fail(Errc::InvalidConfig, "queue counts must be in 1..64");
    }
}

std::uint64_t pages_for(std::uint64_t bytes) { return (bytes + mem::kPageSize - 1) / mem::kPageSize; }

template <class Pred>
void poll(Pred ready, const char* what) {
    for (int i = 0; i < kPollLimit; ++i) {
        if (ready()) {
            return;
        }
    }
    fail(Errc::StateConflict, std::string("timed out waiting for ") + what);
}

} // namespace

const char* to_string(QueueState state) noexcept {
    switch (state) {
    case QueueState::Disabled:
        return "Disabled";
    case QueueState::Enabled:
        return "Enabled";
    case QueueState::L3L4Filter:
        return "L3L4Filter";
    case QueueState::Rss:
        return "Rss";
    }
    return "?";
}

IxgbeNic::IxgbeNic(PciDevice&& pci, mem::MappedPages&& bar, std::unique_ptr<hal::RegisterFile> regs,
                   const DriverConfig& config)
    : pci_(std::move(pci)), bar_(std::move(bar)), regs_(std::move(regs)), config_(config), id_(g_next_nic++) {}

IxgbeNic::~IxgbeNic() {
    if (regs_) {
        try {
            regs_->reset();
        } catch (const Error&) {
        }
    }
}

IxgbeNic IxgbeNic::init(PciDevice&& pci, mem::MemorySystem& memory, const DriverConfig& config) {
    if (pci.empty()) {
        fail(Errc::Consumed, "PCI device already in use");
    }
    validate(config);
    const ConfigSpace& cs = pci.config();
    if (std::uint64_t{cs.bar0_frames} * mem::kPageSize < regmap::kBarSize) {
        fail(Errc::InvalidConfig, "BAR0 smaller than the register window");
    }

    auto frames = memory.allocate_frames_at(cs.bar0_frame, cs.bar0_frames);
    auto pages = memory.allocate_pages(cs.bar0_frames);
    mem::MappedPages bar = memory.map(std::move(pages), std::move(frames), mem::MappingFlags::Device);
    auto regs = std::make_unique<hal::RegisterFile>(bar.carve_mmio(0, regmap::kBarSize));

    IxgbeNic nic(std::move(pci), std::move(bar), std::move(regs), config);
    try {
        nic.bring_up();
        nic.setup_rx(memory);
        nic.setup_tx(memory);
    } catch (...) {
        pci = std::move(nic.pci_);
        throw;
    }
    return nic;
}

void IxgbeNic::bring_up() {
    hal::RegisterFile& r = *regs_;
    r.eimc_write(hal::InterruptMaskFlags::all());
    r.reset();
    poll([&] { return !r.reset_pending(); }, "reset");
    r.eimc_write(hal::InterruptMaskFlags::all());
    poll([&] { return r.eeprom_auto_read_done(); }, "EEPROM auto read");
    poll([&] { return r.dma_init_done(); }, "DMA init");
    const hal::FirmwareStatus fw = r.fwsm_status();
    if (fw == hal::FirmwareStatus::Invalid || fw == hal::FirmwareStatus::Unknown) {
        fail(Errc::StateConflict, std::string("firmware status ") + hal::to_string(fw));
    }
}

void IxgbeNic::setup_rx(mem::MemorySystem& memory) {
    hal::RegisterFile& r = *regs_;
    hal::RxCtrlDisabled off = r.rxctrl_rx_disable();
    r.rdrxctl_write(hal::RdrxctlOptions{});
    r.write<reg::HLREG0>(bits::HLREG0_TXCRCEN | bits::HLREG0_RXCRCSTRP | bits::HLREG0_TXPADEN);

    const std::uint32_t len = config_.ring_size;
    const std::uint32_t nbuf = config_.restricted ? len : 2 * len;
    for (std::uint32_t q = 0; q < config_.rx_queues; ++q) {
        auto core = std::make_unique<detail::RxCore>(
            memory.map_new(pages_for(std::uint64_t{len} * hal::kDescriptorSize)),
            memory.map_new(pages_for(std::uint64_t{nbuf} * kBufferSize)));
        core->queue = q;
        core->len = len;
        core->restricted = config_.restricted;
        core->regs = regs_.get();
        core->ring = core->ring_pages.carve<RxDescriptor>(0, len, 128);
        core->buffers.reserve(nbuf);
        for (std::uint32_t i = 0; i < nbuf; ++i) {
            core->buffers.push_back(core->buffer_pages.carve<PacketBuffer>(std::uint64_t{i} * kBufferSize, 1));
        }
        core->slot_buffer.resize(len);
        detail::rx_reset_ring(*core);

        r.rx_ring_program(q, core->ring.physical_address(), len, kBufferSize);
        r.rdh_write(q, 0, r.rxdctl_disable(q));
        r.rdt_write(q, 0);
        rx_.emplace_back(RxQueue<Disabled>(std::move(core)));
    }

    hal::FilterCtrlSet set =
        r.fctrl_write(hal::FilterCtrlFlags::UNICAST_PROMISCUOUS_ENABLE |
                          hal::FilterCtrlFlags::MULTICAST_PROMISCUOUS_ENABLE |
                          hal::FilterCtrlFlags::BROADCAST_ACCEPT_MODE,
                      std::move(off));
    r.rxctrl_rx_enable(std::move(set));
}

void IxgbeNic::setup_tx(mem::MemorySystem& memory) {
    hal::RegisterFile& r = *regs_;
    r.dtxmxszrq_write(bits::DTXMXSZRQ_MAX);
    r.dmatxctl_tx_enable();

    const std::uint32_t len = config_.ring_size;
    for (std::uint32_t q = 0; q < config_.tx_queues; ++q) {
        auto core = std::make_unique<detail::TxCore>(
            memory.map_new(pages_for(std::uint64_t{len} * hal::kDescriptorSize)),
            memory.map_new(pages_for(std::uint64_t{len} * kBufferSize)));
        core->queue = q;
        core->len = len;
        core->regs = regs_.get();
        core->ring = core->ring_pages.carve<TxDescriptor>(0, len, 128);
        core->buffers.reserve(len);
        for (std::uint32_t i = 0; i < len; ++i) {
            core->buffers.push_back(core->buffer_pages.carve<PacketBuffer>(std::uint64_t{i} * kBufferSize, 1));
        }
        detail::tx_reset_ring(*core);

        r.tx_ring_program(q, core->ring.physical_address(), len);
        r.tdh_write(q, 0, r.txdctl_disable(q));
        r.tdt_write(q, 0);
        tx_.emplace_back(TxQueue<Disabled>(std::move(core)));
    }
}

IxgbeNic::RxSlot& IxgbeNic::rx_slot(std::uint32_t queue) {
    if (queue >= rx_.size()) {
        fail(Errc::OutOfRange, "rx queue " + std::to_string(queue) + " does not exist");
    }
    return rx_[queue];
}

const IxgbeNic::RxSlot& IxgbeNic::rx_slot(std::uint32_t queue) const {
    return const_cast<IxgbeNic*>(this)->rx_slot(queue);
}

IxgbeNic::TxSlot& IxgbeNic::tx_slot(std::uint32_t queue) {
    if (queue >= tx_.size()) {
        fail(Errc::OutOfRange, "tx queue " + std::to_string(queue) + " does not exist");
    }
    return tx_[queue];
}

const IxgbeNic::TxSlot& IxgbeNic::tx_slot(std::uint32_t queue) const {
    return const_cast<IxgbeNic*>(this)->tx_slot(queue);
}

detail::RxCore& IxgbeNic::rx_core(std::uint32_t queue) const {
    return std::visit([](const auto& q) -> detail::RxCore& { return *q.core_; }, rx_slot(queue));
}

detail::TxCore& IxgbeNic::tx_core(std::uint32_t queue) const {
    return std::visit([](const auto& q) -> detail::TxCore& { return *q.core_; }, tx_slot(queue));
}

QueueState IxgbeNic::rx_state(std::uint32_t queue) const {
    return static_cast<QueueState>(rx_slot(queue).index());
}

QueueState IxgbeNic::tx_state(std::uint32_t queue) const {
    return static_cast<QueueState>(tx_slot(queue).index());
}

std::uint32_t IxgbeNic::rx_next_index(std::uint32_t queue) const { return rx_core(queue).next_index_; }

std::uint32_t IxgbeNic::tx_next_index(std::uint32_t queue) const { return tx_core(queue).next_index_; }

std::vector<FilterRecord> IxgbeNic::filters() const {
    std::vector<FilterRecord> out;
    for (const auto& f : filters_) {
        if (f) {
            out.push_back(*f);
        }
    }
    return out;
}

void IxgbeNic::enable_rx(std::uint32_t queue) {
    if (rx_state(queue) != QueueState::Disabled) {
        fail(Errc::StateConflict, "rx queue " + std::to_string(queue) + " is already enabled");
    }
    detail::RxCore& core = rx_core(queue);
    detail::rx_reset_ring(core);
    regs_->rxdctl_enable(queue);
    regs_->rdt_write(queue, core.len - 1);
    move_rx<Disabled, Enabled>(queue);
}

void IxgbeNic::disable_rx(std::uint32_t queue) {
    if (rx_state(queue) != QueueState::Enabled) {
        fail(Errc::StateConflict, "only an Enabled rx queue can be disabled, queue " + std::to_string(queue) +
                                      " is " + to_string(rx_state(queue)));
    }
    regs_->rdh_write(queue, 0, regs_->rxdctl_disable(queue));
    regs_->rdt_write(queue, 0);
    move_rx<Enabled, Disabled>(queue);
}

void IxgbeNic::enable_tx(std::uint32_t queue) {
    if (tx_state(queue) != QueueState::Disabled) {
        fail(Errc::StateConflict, "tx queue " + std::to_string(queue) + " is already enabled");
    }
    detail::tx_reset_ring(tx_core(queue));
    regs_->txdctl_enable(queue);
    move_tx<Disabled, Enabled>(queue);
}

void IxgbeNic::disable_tx(std::uint32_t queue) {
    if (tx_state(queue) != QueueState::Enabled) {
        fail(Errc::StateConflict, "tx queue " + std::to_string(queue) + " is not enabled");
    }
    regs_->tdh_write(queue, 0, regs_->txdctl_disable(queue));
    regs_->tdt_write(queue, 0);
    move_tx<Enabled, Disabled>(queue);
}

std::uint32_t IxgbeNic::send_batch(std::uint32_t queue, const std::vector<Packet>& packets) {
    return tx_queue<Enabled>(queue).send_batch(packets);
}

std::vector<Packet> IxgbeNic::receive_batch(std::uint32_t queue, std::uint32_t max) {
    return std::visit(
        [&](auto& q) -> std::vector<Packet> {
            if constexpr (std::is_same_v<std::decay_t<decltype(q)>, RxQueue<Disabled>>) {
                fail(Errc::StateConflict, "rx queue " + std::to_string(queue) + " is Disabled");
            } else {
                return q.receive_batch(max);
            }
        },
        rx_slot(queue));
}

void IxgbeNic::configure_rss(const std::vector<std::uint32_t>& queues) {
    if (queues.empty()) {
        fail(Errc::InvalidArgument, "RSS needs at least one queue");
    }
    std::set<std::uint32_t> members;
    for (const std::uint32_t q : queues) {
        if (q >= hal::kRssMaxQueue || q >= rx_.size()) {
            fail(Errc::InvalidArgument, "queue " + std::to_string(q) + " cannot take part in RSS");
        }
        if (!members.insert(q).second) {
            fail(Errc::InvalidArgument, "queue " + std::to_string(q) + " listed twice");
        }
    }
    for (const std::uint32_t q : queues) {
        const QueueState s = rx_state(q);
        if (s != QueueState::Enabled && s != QueueState::Rss) {
            fail(Errc::StateConflict, "RSS over queue " + std::to_string(q) + " which is " + to_string(s));
        }
    }
    std::array<std::uint8_t, hal::kRetaEntries> table{};
    for (std::size_t i = 0; i < table.size(); ++i) {
        table[i] = static_cast<std::uint8_t>(queues[i % queues.size()]);
    }
    regs_->reta_write(table);
    regs_->mrqc_write(true);
    for (std::uint32_t q = 0; q < rx_.size(); ++q) {
        const bool member = members.count(q) != 0;
        if (member && rx_state(q) == QueueState::Enabled) {
            move_rx<Enabled, Rss>(q);
        } else if (!member && rx_state(q) == QueueState::Rss) {
            move_rx<Rss, Enabled>(q);
        }
    }
}

void IxgbeNic::disable_rss() {
    regs_->mrqc_write(false);
    for (std::uint32_t q = 0; q < rx_.size(); ++q) {
        if (rx_state(q) == QueueState::Rss) {
            move_rx<Rss, Enabled>(q);
        }
    }
}

// Outside the verified core: ring indices and the filter table are read-only here.
IRS_CONFORM_NO_MUTATES(IxgbeNic::init, next_index_, clean_index_, filters_);
IRS_CONFORM_NO_MUTATES(IxgbeNic::bring_up, next_index_, clean_index_, filters_);
IRS_CONFORM_NO_MUTATES(IxgbeNic::setup_rx, next_index_, clean_index_, filters_);
IRS_CONFORM_NO_MUTATES(IxgbeNic::setup_tx, next_index_, clean_index_, filters_);
IRS_CONFORM_NO_MUTATES(IxgbeNic::enable_rx, next_index_, clean_index_, filters_);
IRS_CONFORM_NO_MUTATES(IxgbeNic::disable_rx, next_index_, clean_index_, filters_);
IRS_CONFORM_NO_MUTATES(IxgbeNic::enable_tx, next_index_, clean_index_, filters_);
IRS_CONFORM_NO_MUTATES(IxgbeNic::disable_tx, next_index_, clean_index_, filters_);
IRS_CONFORM_NO_MUTATES(IxgbeNic::send_batch, next_index_, clean_index_, filters_);
IRS_CONFORM_NO_MUTATES(IxgbeNic::receive_batch, next_index_, clean_index_, filters_);
IRS_CONFORM_NO_MUTATES(IxgbeNic::configure_rss, next_index_, clean_index_, filters_);
IRS_CONFORM_NO_MUTATES(IxgbeNic::disable_rss, next_index_, clean_index_, filters_);
IRS_CONFORM_NO_MUTATES(IxgbeNic::rx_next_index, next_index_, clean_index_, filters_);
IRS_CONFORM_NO_MUTATES(IxgbeNic::tx_next_index, next_index_, clean_index_, filters_);
IRS_CONFORM_NO_MUTATES(IxgbeNic::filters, next_index_, clean_index_, filters_);
IRS_CONFORM_NO_CALLS(IxgbeNic::enable_rx, filter_write, filter_clear);
IRS_CONFORM_NO_CALLS(IxgbeNic::disable_rx, filter_write, filter_clear);
IRS_CONFORM_NO_CALLS(IxgbeNic::enable_tx, filter_write, filter_clear);
IRS_CONFORM_NO_CALLS(IxgbeNic::disable_tx, filter_write, filter_clear);
IRS_CONFORM_NO_CALLS(IxgbeNic::configure_rss, filter_write, filter_clear);
IRS_CONFORM_NO_CALLS(IxgbeNic::disable_rss, filter_write, filter_clear);

} // namespace irs::ixgbe
