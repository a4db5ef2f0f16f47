#include "irs/device_sim.hpp"

#include <algorithm>
#include <cstring>
#include <map>

#include "irs/error.hpp"
#include "irs/nic_hal.hpp"
#include "irs/regmap_generated.hpp"

namespace irs::sim {

namespace reg = regmap::reg;
namespace bits = hal::bits;

namespace {

constexpr std::uint8_t kRxDD = 0x01;
constexpr std::uint8_t kRxEOP = 0x02;
constexpr std::uint8_t kTxCmdRS = 0x08;
constexpr std::uint8_t kTxDD = 0x01;

std::string hex(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08X", v);
    return buf;
}

std::uint64_t le64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) {
        v = v << 8 | p[i];
    }
    return v;
}

} // namespace

const char* to_string(ViolationKind kind) noexcept {
    switch (kind) {
    case ViolationKind::ReservedBitWrite: return "ReservedBitWrite";
    case ViolationKind::OrderingViolation: return "OrderingViolation";
    case ViolationKind::RequiredBitsCleared: return "RequiredBitsCleared";
    case ViolationKind::HeadTailOutOfRange: return "HeadTailOutOfRange";
    case ViolationKind::FilterMisconfig: return "FilterMisconfig";
    }
    return "?";
}

SimNic::SimNic(mem::SimPhysMemory& phys, std::uint32_t firmware)
    : phys_(phys), regs_(regmap::kBarSize / 4, 0), firmware_(firmware) {
    power_on_reset();
}

void SimNic::connect_peer(SimNic& peer) {
    sink_ = [&peer](std::vector<std::uint8_t>&& packet) { peer.inject(std::move(packet)); };
}

void SimNic::log(ViolationKind kind, const regmap::RegisterSpec& spec, std::uint32_t index, std::string detail) {
    std::string name(spec.name);
    if (spec.count > 1) {
        name += "[" + std::to_string(index) + "]";
    }
    log_.push_back({kind, std::move(name), std::move(detail)});
}

std::size_t SimNic::violation_count(ViolationKind kind) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(log_.begin(), log_.end(), [kind](const Violation& v) { return v.kind == kind; }));
}

void SimNic::power_on_reset() {
    std::fill(regs_.begin(), regs_.end(), 0);
    for (const auto& spec : regmap::kAll) {
        for (std::uint32_t i = 0; i < spec.count; ++i) {
            word(spec.at(i)) = spec.reset;
        }
    }
    word(reg::EEC.offset) |= bits::EEC_ARD;
    word(reg::RDRXCTL.offset) |= bits::RDRXCTL_DMAIDONE;
    word(reg::FWSM.offset) = firmware_;
    word(reg::LINKS.offset) = link_up_ ? bits::LINKS_UP : 0;
    fctrl_since_rx_disable_ = false;
    conflicts_.clear();
    for (auto& q : pending_) {
        dropped_ += q.size();
        q.clear();
    }
    gprc_ = 0;
    gptc_ = 0;
}

std::uint32_t SimNic::peek(const regmap::RegisterSpec& spec, std::uint32_t index) const {
    if (index >= spec.count) {
        fail(Errc::OutOfRange, std::string(spec.name) + " index out of range");
    }
    return word(spec.at(index));
}

std::uint32_t SimNic::mmio_read(std::uint64_t offset) {
    const auto loc = offset <= 0xFFFFFFFFu ? regmap::locate(static_cast<std::uint32_t>(offset)) : std::nullopt;
    if (!loc) {
        fail(Errc::UnknownOffset, "read of unmapped offset " + hex(static_cast<std::uint32_t>(offset)));
    }
    if (loc->spec->offset == reg::GPRC.offset) {
        return static_cast<std::uint32_t>(gprc_);
    }
    if (loc->spec->offset == reg::GPTC.offset) {
        return static_cast<std::uint32_t>(gptc_);
    }
    if (loc->spec->offset == reg::LINKS.offset) {
        return link_up_ ? bits::LINKS_UP : 0;
    }
    return word(static_cast<std::uint32_t>(offset));
}

std::uint32_t SimNic::ring_len(const regmap::RegisterSpec& len_reg, std::uint32_t queue) const {
    return word(len_reg.at(queue)) / hal::kDescriptorSize;
}

std::uint64_t SimNic::ring_base(const regmap::RegisterSpec& lo, const regmap::RegisterSpec& hi,
                                std::uint32_t queue) const {
    return static_cast<std::uint64_t>(word(hi.at(queue))) << 32 | word(lo.at(queue));
}

void SimNic::check_ring_index(const regmap::RegisterSpec& spec, std::uint32_t index, std::uint32_t value,
                              const regmap::RegisterSpec& len_reg) {
    const std::uint32_t len = ring_len(len_reg, index);
    if ((len == 0 && value != 0) || (len != 0 && value >= len)) {
        log(ViolationKind::HeadTailOutOfRange, spec, index,
            "value " + std::to_string(value) + " outside ring of " + std::to_string(len));
    }
}

void SimNic::mmio_write(std::uint64_t offset, std::uint32_t value) {
    const auto loc = offset <= 0xFFFFFFFFu ? regmap::locate(static_cast<std::uint32_t>(offset)) : std::nullopt;
    if (!loc) {
        fail(Errc::UnknownOffset, "write of unmapped offset " + hex(static_cast<std::uint32_t>(offset)));
    }
    const regmap::RegisterSpec& spec = *loc->spec;
    const std::uint32_t idx = loc->index;
    const std::uint32_t at = static_cast<std::uint32_t>(offset);

    if (spec.access == regmap::Access::ReadOnly || spec.access == regmap::Access::Reserved) {
        log(ViolationKind::ReservedBitWrite, spec, idx, "write of " + hex(value) + " to a non-writable register");
        return;
    }
    if ((value & spec.reserved_mask) != 0) {
        log(ViolationKind::ReservedBitWrite, spec, idx,
            "value " + hex(value) + " sets reserved bits " + hex(value & spec.reserved_mask));
        value &= ~spec.reserved_mask;
    }
    if ((value & spec.required_mask) != spec.required_value) {
        log(ViolationKind::RequiredBitsCleared, spec, idx,
            "value " + hex(value) + " breaks required pattern " + hex(spec.required_value) + " under mask " +
                hex(spec.required_mask));
    }

    // Ordering rules, judged against the state before this write.
    if (spec.offset == reg::FCTRL.offset) {
        if ((word(reg::RXCTRL.offset) & bits::RXCTRL_RXEN) != 0) {
            log(ViolationKind::OrderingViolation, spec, idx, "FCTRL written while RXCTRL.RXEN is set");
        }
        fctrl_since_rx_disable_ = true;
    } else if (spec.offset == reg::RXCTRL.offset) {
        const bool was = (word(at) & bits::RXCTRL_RXEN) != 0;
        const bool now = (value & bits::RXCTRL_RXEN) != 0;
        if (!was && now && !fctrl_since_rx_disable_) {
            log(ViolationKind::OrderingViolation, spec, idx, "RXEN set without an FCTRL write since it was cleared");
        }
        if (was && !now) {
            fctrl_since_rx_disable_ = false;
        }
    } else if (spec.offset == reg::TDH.offset) {
        if ((word(reg::TXDCTL.at(idx)) & bits::TXDCTL_ENABLE) != 0) {
            log(ViolationKind::OrderingViolation, spec, idx, "TDH written after TXDCTL.ENABLE was set");
        }
    } else if (spec.offset == reg::RDH.offset) {
        if ((word(reg::RXDCTL.at(idx)) & bits::RXDCTL_ENABLE) != 0) {
            log(ViolationKind::OrderingViolation, spec, idx, "RDH written after RXDCTL.ENABLE was set");
        }
    }

    if (spec.offset == reg::RDH.offset || spec.offset == reg::RDT.offset) {
        check_ring_index(spec, idx, value, reg::RDLEN);
    } else if (spec.offset == reg::TDH.offset || spec.offset == reg::TDT.offset) {
        check_ring_index(spec, idx, value, reg::TDLEN);
    }

    if (spec.offset == reg::CTRL.offset) {
        if ((value & bits::CTRL_RST) != 0) {
            power_on_reset();
            return;
        }
        word(at) = value;
        return;
    }
    if (spec.offset == reg::EIMC.offset) {
        word(reg::EIMS.offset) &= ~value;
        word(at) = value;
        return;
    }
    if (spec.offset == reg::RDRXCTL.offset) {
        // DMAIDONE is status, owned by the device.
        word(at) = (value & ~bits::RDRXCTL_DMAIDONE) | (word(at) & bits::RDRXCTL_DMAIDONE);
        return;
    }
    word(at) = value;

    if (spec.offset == reg::FTQF.offset || spec.offset == reg::SAQF.offset || spec.offset == reg::DAQF.offset || spec.offset == reg::SDPQF.offset ||
        spec.offset == reg::L34TIMIR.offset || spec.offset == reg::RETA.offset || spec.offset == reg::MRQC.offset) {
        evaluate_filters();
    }
}

std::vector<HwFilter> SimNic::filter_table() const {
    std::vector<HwFilter> out;
    for (std::uint32_t s = 0; s < hal::kFilterSlots; ++s) {
        const std::uint32_t ftqf = word(reg::FTQF.at(s));
        if ((ftqf & bits::FTQF_ENABLE) == 0) {
            continue;
        }
        HwFilter f{};
        f.slot = s;
        f.tuple.src_ip = word(reg::SAQF.at(s));
        f.tuple.dst_ip = word(reg::DAQF.at(s));
        const std::uint32_t ports = word(reg::SDPQF.at(s));
        f.tuple.src_port = static_cast<std::uint16_t>(ports & 0xFFFF);
        f.tuple.dst_port = static_cast<std::uint16_t>(ports >> 16);
        f.tuple.protocol = static_cast<Protocol>(ftqf & 0x3);
        f.priority = (ftqf >> bits::FTQF_PRIORITY_SHIFT) & 0x7;
        f.mask = (ftqf >> bits::FTQF_MASK_SHIFT) & 0x1F;
        f.queue = (word(reg::L34TIMIR.at(s)) & bits::L34TIMIR_QUEUE_MASK) >> bits::L34TIMIR_QUEUE_SHIFT;
        out.push_back(f);
    }
    return out;
}

bool SimNic::rss_enabled() const { return (word(reg::MRQC.offset) & bits::MRQC_MRQE_MASK) == bits::MRQC_RSS; }

std::array<std::uint8_t, 128> SimNic::reta() const {
    std::array<std::uint8_t, 128> out{};
    for (std::uint32_t i = 0; i < 32; ++i) {
        const std::uint32_t v = word(reg::RETA.at(i));
        for (std::uint32_t b = 0; b < 4; ++b) {
            out[4 * i + b] = static_cast<std::uint8_t>((v >> (8 * b)) & 0xF);
        }
    }
    return out;
}

void SimNic::evaluate_filters() {
    const auto filters = filter_table();
    std::map<std::string, std::uint32_t> now;
    if (rss_enabled()) {
        const auto table = reta();
        for (const auto& f : filters) {
            if (std::find(table.begin(), table.end(), f.queue) != table.end()) {
                now.emplace("filter targets RSS queue " + std::to_string(f.queue) + " (slot " +
                                std::to_string(f.slot) + ")",
                            f.slot);
            }
        }
    }
    for (std::size_t i = 0; i < filters.size(); ++i) {
        for (std::size_t j = i + 1; j < filters.size(); ++j) {
            if (filters[i].tuple == filters[j].tuple && filters[i].mask == filters[j].mask) {
                now.emplace("identical to slot " + std::to_string(filters[i].slot) + " (slot " +
                                std::to_string(filters[j].slot) + ")",
                            filters[j].slot);
            }
        }
    }
    std::set<std::string> keys;
    for (const auto& [text, slot] : now) {
        if (conflicts_.count(text) == 0) {
            log(ViolationKind::FilterMisconfig, reg::FTQF, slot, text);
        }
        keys.insert(text);
    }
    conflicts_ = std::move(keys);
}

std::uint32_t SimNic::classify(const FiveTuple& t) {
    evaluate_filters();
    std::optional<HwFilter> best;
    for (const auto& f : filter_table()) {
        const bool match = ((f.mask & 0x01) || f.tuple.src_ip == t.src_ip) &&
                           ((f.mask & 0x02) || f.tuple.dst_ip == t.dst_ip) &&
                           ((f.mask & 0x04) || f.tuple.src_port == t.src_port) &&
                           ((f.mask & 0x08) || f.tuple.dst_port == t.dst_port) &&
                           ((f.mask & 0x10) || f.tuple.protocol == t.protocol);
        // Higher priority wins; on a tie the lower slot, seen first, stays.
        if (match && (!best || f.priority > best->priority)) {
            best = f;
        }
    }
    if (best) {
        return best->queue;
    }
    if (rss_enabled()) {
        return reta()[rss_hash(t) % 128];
    }
    return 0;
}

void SimNic::inject(std::vector<std::uint8_t> packet, std::optional<std::uint32_t> queue_hint) {
    std::uint32_t q = 0;
    if (queue_hint) {
        if (*queue_hint >= pending_.size()) {
            fail(Errc::InvalidArgument, "queue hint out of range");
        }
        q = *queue_hint;
    } else if (auto t = parse_tuple(packet)) {
        q = classify(*t);
    }
    ++injected_;
    pending_[q].push_back(std::move(packet));
}

std::uint64_t SimNic::held() const noexcept {
    std::uint64_t n = 0;
    for (const auto& q : pending_) {
        n += q.size();
    }
    return n;
}

bool SimNic::tx_one(std::uint32_t q) {
    if ((word(reg::TXDCTL.at(q)) & bits::TXDCTL_ENABLE) == 0) {
        return false;
    }
    const std::uint32_t len = ring_len(reg::TDLEN, q);
    std::uint32_t& head = word(reg::TDH.at(q));
    const std::uint32_t tail = word(reg::TDT.at(q));
    if (len == 0 || head == tail || head >= len || tail >= len) {
        return false;
    }
    const std::uint64_t desc_at = ring_base(reg::TDBAL, reg::TDBAH, q) + std::uint64_t{head} * hal::kDescriptorSize;
    std::uint8_t desc[16];
    if (!phys_.dma_read(desc_at, desc)) {
        log(ViolationKind::HeadTailOutOfRange, reg::TDBAL, q, "descriptor address outside RAM");
        return false;
    }
    const std::uint64_t buf = le64(desc);
    const std::uint16_t length = static_cast<std::uint16_t>(desc[8] | desc[9] << 8);
    std::vector<std::uint8_t> packet(length);
    if (!phys_.dma_read(buf, packet)) {
        log(ViolationKind::HeadTailOutOfRange, reg::TDBAL, q, "buffer address outside RAM");
        return false;
    }
    if ((desc[11] & kTxCmdRS) != 0) {
        const std::uint8_t status = static_cast<std::uint8_t>(desc[12] | kTxDD);
        phys_.dma_write(desc_at + 12, std::span<const std::uint8_t>(&status, 1));
    }
    head = (head + 1) % len;
    ++gptc_;
    ++transmitted_;
    if (sink_) {
        sink_(std::move(packet));
    }
    return true;
}

bool SimNic::rx_one(std::uint32_t q) {
    if ((word(reg::RXDCTL.at(q)) & bits::RXDCTL_ENABLE) == 0 || pending_[q].empty()) {
        return false;
    }
    const std::uint32_t len = ring_len(reg::RDLEN, q);
    std::uint32_t& head = word(reg::RDH.at(q));
    const std::uint32_t tail = word(reg::RDT.at(q));
    if (len == 0 || head == tail || head >= len || tail >= len) {
        return false;
    }
    const std::uint64_t desc_at = ring_base(reg::RDBAL, reg::RDBAH, q) + std::uint64_t{head} * hal::kDescriptorSize;
    std::uint8_t desc[16];
    if (!phys_.dma_read(desc_at, desc)) {
        log(ViolationKind::HeadTailOutOfRange, reg::RDBAL, q, "descriptor address outside RAM");
        return false;
    }
    const std::uint64_t buf = le64(desc);
    const std::size_t buf_size = std::size_t{word(reg::SRRCTL.at(q)) & bits::SRRCTL_BSIZEPACKET_MASK} * 1024;
    std::vector<std::uint8_t> packet = std::move(pending_[q].front());
    pending_[q].pop_front();
    if (packet.size() > buf_size || packet.size() > 0xFFFF) {
        ++dropped_;
        return true;
    }
    if (!phys_.dma_write(buf, packet)) {
        log(ViolationKind::HeadTailOutOfRange, reg::RDBAL, q, "buffer address outside RAM");
        pending_[q].push_front(std::move(packet));
        return false;
    }
    std::uint8_t wb[8] = {};
    wb[0] = static_cast<std::uint8_t>(packet.size());
    wb[1] = static_cast<std::uint8_t>(packet.size() >> 8);
    wb[4] = kRxDD | kRxEOP;
    phys_.dma_write(desc_at + 8, wb);
    head = (head + 1) % len;
    ++gprc_;
    ++delivered_;
    ++delivered_per_queue_[q];
    return true;
}

void SimNic::step(std::uint32_t budget) {
    if ((word(reg::DMATXCTL.offset) & bits::DMATXCTL_TE) != 0) {
        std::uint32_t left = budget;
        bool progress = true;
        while (left > 0 && progress) {
            progress = false;
            for (std::uint32_t q = 0; q < hal::kMaxQueues && left > 0; ++q) {
                if (tx_one(q)) {
                    --left;
                    progress = true;
                }
            }
        }
    }
    if ((word(reg::RXCTRL.offset) & bits::RXCTRL_RXEN) != 0) {
        std::uint32_t left = budget;
        bool progress = true;
        while (left > 0 && progress) {
            progress = false;
            for (std::uint32_t q = 0; q < hal::kMaxQueues && left > 0; ++q) {
                if (rx_one(q)) {
                    --left;
                    progress = true;
                }
            }
        }
    }
}

// Classification is a pure lookup over the register state.
IRS_CONFORM_NO_CALLS(SimNic::classify, mmio_write, power_on_reset, inject);
IRS_CONFORM_NO_MUTATES(SimNic::classify, regs_, pending_, delivered_);

} // namespace irs::sim
