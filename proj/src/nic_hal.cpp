#include "irs/nic_hal.hpp"

#include <atomic>
#include <string>

namespace irs::hal {

namespace reg = regmap::reg;

namespace {

std::atomic<std::uint64_t> next_register_file_id{1};

bool is_pow2(std::uint32_t v) noexcept { return v != 0 && (v & (v - 1)) == 0; }

} // namespace

const char* to_string(FirmwareStatus status) noexcept {
    switch (status) {
    case FirmwareStatus::NoManageability: return "NoManageability";
    case FirmwareStatus::PassThrough: return "PassThrough";
    case FirmwareStatus::Unknown: return "Unknown";
    case FirmwareStatus::Invalid: return "Invalid";
    }
    return "Invalid";
}

std::uint32_t TxQueueDisabled::queue() const noexcept { return queue_index(); }
std::uint32_t RxQueueDisabled::queue() const noexcept { return queue_index(); }

RegisterFile::RegisterFile(mem::MmioWindow&& window) : id_(next_register_file_id++) {
    if (window.empty()) {
        fail(Errc::Consumed, "register file over an empty window");
    }
    if (window.size() < regmap::kBarSize) {
        fail(Errc::OutOfRange, "device window smaller than the register map");
    }
    window_ = std::move(window);
}

void RegisterFile::check_queue(std::uint32_t queue) const {
    if (queue >= kMaxQueues) {
        fail(Errc::OutOfRange, "queue " + std::to_string(queue) + " out of range");
    }
}

void RegisterFile::consume(detail::Token& token, std::uint64_t generation, const char* what) {
    if (!token.live_) {
        fail(Errc::Consumed, std::string(what) + " token already used");
    }
    if (token.owner_ != id_) {
        fail(Errc::TokenMismatch, std::string(what) + " token belongs to another device");
    }
    if (token.generation_ != generation) {
        fail(Errc::StaleToken, std::string(what) + " token predates a later state change");
    }
    token.live_ = false;
}

// ---- device control ----

void RegisterFile::reset() {
    put<reg::CTRL>(get<reg::CTRL>() | bits::CTRL_RST);
    ++rx_generation_;
    for (auto& g : tx_generation_) {
        ++g;
    }
    for (auto& g : rxq_generation_) {
        ++g;
    }
    rx_len_.fill(0);
    tx_len_.fill(0);
}

bool RegisterFile::reset_pending() const { return (get<reg::CTRL>() & bits::CTRL_RST) != 0; }

bool RegisterFile::eeprom_auto_read_done() const { return (read<reg::EEC>() & bits::EEC_ARD) != 0; }

bool RegisterFile::dma_init_done() const { return (get<reg::RDRXCTL>() & bits::RDRXCTL_DMAIDONE) != 0; }

bool RegisterFile::link_up() const { return (read<reg::LINKS>() & bits::LINKS_UP) != 0; }

FirmwareStatus RegisterFile::fwsm_status() const {
    const std::uint32_t v = read<reg::FWSM>();
    if ((v & bits::FWSM_VALID) == 0) {
        return FirmwareStatus::Invalid;
    }
    switch ((v & bits::FWSM_MODE_MASK) >> bits::FWSM_MODE_SHIFT) {
    case 0: return FirmwareStatus::NoManageability;
    case 2: return FirmwareStatus::PassThrough;
    default: return FirmwareStatus::Unknown;
    }
}

void RegisterFile::eimc_write(InterruptMaskFlags mask) { put<reg::EIMC>(mask.bits()); }

// ---- receive ----

void RegisterFile::rdrxctl_write(const RdrxctlOptions& options) {
    if (options.rsc_first_size > 0x1F) {
        fail(Errc::ValueOutOfRange, "RSCFRSTSIZE is a 5-bit field");
    }
    std::uint32_t v = reg::RDRXCTL.required_value;
    if (options.crc_strip) {
        v |= bits::RDRXCTL_CRCSTRIP;
    }
    v |= options.rsc_first_size << bits::RDRXCTL_RSCFRSTSIZE_SHIFT;
    put<reg::RDRXCTL>(v);
}

std::uint32_t RegisterFile::rdrxctl_read() const { return get<reg::RDRXCTL>(); }

RxCtrlDisabled RegisterFile::rxctrl_rx_disable() {
    put<reg::RXCTRL>(get<reg::RXCTRL>() & ~bits::RXCTRL_RXEN);
    return RxCtrlDisabled(id_, rx_generation_, 0);
}

FilterCtrlSet RegisterFile::fctrl_write(FilterCtrlFlags value, RxCtrlDisabled&& proof) {
    consume(proof, rx_generation_, "RxCtrlDisabled");
    put<reg::FCTRL>(value.bits());
    return FilterCtrlSet(id_, rx_generation_, 0);
}

void RegisterFile::rxctrl_rx_enable(FilterCtrlSet&& proof) {
    consume(proof, rx_generation_, "FilterCtrlSet");
    put<reg::RXCTRL>(get<reg::RXCTRL>() | bits::RXCTRL_RXEN);
    ++rx_generation_;
}

bool RegisterFile::rx_enabled() const { return (get<reg::RXCTRL>() & bits::RXCTRL_RXEN) != 0; }

std::uint32_t RegisterFile::fctrl_read() const { return get<reg::FCTRL>(); }

void RegisterFile::rx_ring_program(std::uint32_t queue, std::uint64_t paddr, std::uint32_t descriptors,
                                   std::uint32_t buffer_bytes) {
    check_queue(queue);
    if (paddr % 128 != 0) {
        fail(Errc::Misaligned, "descriptor ring base must be 128-byte aligned");
    }
    if (!is_pow2(descriptors) || descriptors < 8 || descriptors > 4096) {
        fail(Errc::ValueOutOfRange, "ring length must be a power of two in [8, 4096]");
    }
    if (buffer_bytes == 0 || buffer_bytes % 1024 != 0 || buffer_bytes / 1024 > bits::SRRCTL_BSIZEPACKET_MASK) {
        fail(Errc::ValueOutOfRange, "receive buffer size must be a multiple of 1 KiB up to 31 KiB");
    }
    put<reg::RDBAL>(static_cast<std::uint32_t>(paddr), queue);
    put<reg::RDBAH>(static_cast<std::uint32_t>(paddr >> 32), queue);
    put<reg::RDLEN>(descriptors * kDescriptorSize, queue);
    put<reg::SRRCTL>(buffer_bytes / 1024, queue);
    rx_len_[queue] = descriptors;
}

RxQueueDisabled RegisterFile::rxdctl_disable(std::uint32_t queue) {
    check_queue(queue);
    put<reg::RXDCTL>(get<reg::RXDCTL>(queue) & ~bits::RXDCTL_ENABLE, queue);
    return RxQueueDisabled(id_, rxq_generation_[queue], queue);
}

void RegisterFile::rxdctl_enable(std::uint32_t queue) {
    check_queue(queue);
    put<reg::RXDCTL>(get<reg::RXDCTL>(queue) | bits::RXDCTL_ENABLE, queue);
    ++rxq_generation_[queue];
}

void RegisterFile::rdh_write(std::uint32_t queue, std::uint32_t value, RxQueueDisabled&& proof) {
    check_queue(queue);
    if (proof.queue_ != queue) {
        fail(Errc::TokenMismatch, "RxQueueDisabled token is for queue " + std::to_string(proof.queue_));
    }
    if (value >= rx_len_[queue]) {
        fail(Errc::OutOfRange, "RDH value outside the descriptor ring");
    }
    consume(proof, rxq_generation_[queue], "RxQueueDisabled");
    put<reg::RDH>(value, queue);
}

void RegisterFile::rdt_write(std::uint32_t queue, std::uint32_t value) {
    check_queue(queue);
    if (value >= rx_len_[queue]) {
        fail(Errc::OutOfRange, "RDT value outside the descriptor ring");
    }
    put<reg::RDT>(value, queue);
}

std::uint32_t RegisterFile::rdh_read(std::uint32_t queue) const { return get<reg::RDH>(queue); }
std::uint32_t RegisterFile::rdt_read(std::uint32_t queue) const { return get<reg::RDT>(queue); }

// ---- transmit ----

void RegisterFile::dtxmxszrq_write(std::uint32_t max_bytes_req) {
    if (max_bytes_req > bits::DTXMXSZRQ_MAX) {
        fail(Errc::ValueOutOfRange, "DTXMXSZRQ field is 12 bits wide");
    }
    put<reg::DTXMXSZRQ>(max_bytes_req);
}

void RegisterFile::dmatxctl_tx_enable() { put<reg::DMATXCTL>(get<reg::DMATXCTL>() | bits::DMATXCTL_TE); }

void RegisterFile::tx_ring_program(std::uint32_t queue, std::uint64_t paddr, std::uint32_t descriptors) {
    check_queue(queue);
    if (paddr % 128 != 0) {
        fail(Errc::Misaligned, "descriptor ring base must be 128-byte aligned");
    }
    if (!is_pow2(descriptors) || descriptors < 8 || descriptors > 4096) {
        fail(Errc::ValueOutOfRange, "ring length must be a power of two in [8, 4096]");
    }
    put<reg::TDBAL>(static_cast<std::uint32_t>(paddr), queue);
    put<reg::TDBAH>(static_cast<std::uint32_t>(paddr >> 32), queue);
    put<reg::TDLEN>(descriptors * kDescriptorSize, queue);
    tx_len_[queue] = descriptors;
}

TxQueueDisabled RegisterFile::txdctl_disable(std::uint32_t queue) {
    check_queue(queue);
    put<reg::TXDCTL>(get<reg::TXDCTL>(queue) & ~bits::TXDCTL_ENABLE, queue);
    return TxQueueDisabled(id_, tx_generation_[queue], queue);
}

void RegisterFile::txdctl_enable(std::uint32_t queue, const TxdctlThresholds& t) {
    check_queue(queue);
    if (t.pthresh > 0x7F || t.hthresh > 0x7F || t.wthresh > 0x7F) {
        fail(Errc::ValueOutOfRange, "TXDCTL thresholds are 7-bit fields");
    }
    put<reg::TXDCTL>(t.pthresh | t.hthresh << 8 | t.wthresh << 16 | bits::TXDCTL_ENABLE, queue);
    ++tx_generation_[queue];
}

void RegisterFile::tdh_write(std::uint32_t queue, std::uint32_t value, TxQueueDisabled&& proof) {
    check_queue(queue);
    if (proof.queue_ != queue) {
        fail(Errc::TokenMismatch, "TxQueueDisabled token is for queue " + std::to_string(proof.queue_));
    }
    if (value >= tx_len_[queue]) {
        fail(Errc::OutOfRange, "TDH value outside the descriptor ring");
    }
    consume(proof, tx_generation_[queue], "TxQueueDisabled");
    put<reg::TDH>(value, queue);
}

void RegisterFile::tdt_write(std::uint32_t queue, std::uint32_t value) {
    check_queue(queue);
    if (value >= tx_len_[queue]) {
        fail(Errc::OutOfRange, "TDT value outside the descriptor ring");
    }
    put<reg::TDT>(value, queue);
}

std::uint32_t RegisterFile::tdh_read(std::uint32_t queue) const { return get<reg::TDH>(queue); }
std::uint32_t RegisterFile::tdt_read(std::uint32_t queue) const { return get<reg::TDT>(queue); }

// ---- filters and RSS ----

void RegisterFile::filter_write(std::uint32_t slot, const FilterSpec& spec) {
    if (slot >= kFilterSlots) {
        fail(Errc::OutOfRange, "filter slot " + std::to_string(slot) + " out of range");
    }
    if (spec.queue > 0x7F) {
        fail(Errc::ValueOutOfRange, "filter queue is a 7-bit field");
    }
    if (spec.priority == 0 || spec.priority > 7) {
        fail(Errc::ValueOutOfRange, "filter priority must be in [1, 7]");
    }
    put<reg::FTQF>(0, slot);
    put<reg::SAQF>(spec.tuple.src_ip, slot);
    put<reg::DAQF>(spec.tuple.dst_ip, slot);
    put<reg::SDPQF>(static_cast<std::uint32_t>(spec.tuple.src_port) |
                        static_cast<std::uint32_t>(spec.tuple.dst_port) << 16,
                    slot);
    put<reg::L34TIMIR>(spec.queue << bits::L34TIMIR_QUEUE_SHIFT, slot);
    put<reg::FTQF>(static_cast<std::uint32_t>(spec.tuple.protocol) | spec.priority << bits::FTQF_PRIORITY_SHIFT |
                       bits::FTQF_POOL_MASK | bits::FTQF_ENABLE,
                   slot);
}

void RegisterFile::filter_clear(std::uint32_t slot) {
    if (slot >= kFilterSlots) {
        fail(Errc::OutOfRange, "filter slot " + std::to_string(slot) + " out of range");
    }
    put<reg::FTQF>(0, slot);
    put<reg::SAQF>(0, slot);
    put<reg::DAQF>(0, slot);
    put<reg::SDPQF>(0, slot);
    put<reg::L34TIMIR>(0, slot);
}

void RegisterFile::reta_write(const std::array<std::uint8_t, kRetaEntries>& table) {
    for (std::uint8_t q : table) {
        if (q >= kRssMaxQueue) {
            fail(Errc::ValueOutOfRange, "redirection entries are 4-bit queue indices");
        }
    }
    for (std::uint32_t i = 0; i < kRetaEntries / 4; ++i) {
        const std::uint32_t v = table[4 * i] | table[4 * i + 1] << 8 | table[4 * i + 2] << 16 |
                                static_cast<std::uint32_t>(table[4 * i + 3]) << 24;
        put<reg::RETA>(v, i);
    }
}

void RegisterFile::mrqc_write(bool rss_enable) { put<reg::MRQC>(rss_enable ? bits::MRQC_RSS : 0); }

std::uint32_t RegisterFile::ring_length(std::uint32_t queue, bool rx) const {
    check_queue(queue);
    return rx ? rx_len_[queue] : tx_len_[queue];
}

} // namespace irs::hal
