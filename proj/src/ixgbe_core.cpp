// Verified core of the driver: ring bookkeeping and filter table updates.
// Everything else in the driver must leave next_index_ and filters_ alone.

#include <algorithm>
#include <cstring>

#include "irs/ixgbe.hpp"

namespace irs::ixgbe {

namespace detail {

std::uint32_t send_batch(TxCore& core, const std::vector<Packet>& packets) {
    for (const Packet& p : packets) {
        if (p.size() > kBufferSize) {
            fail(Errc::PacketTooLarge, std::to_string(p.size()) + " bytes exceeds the 2048-byte buffer");
        }
        if (p.empty()) {
            fail(Errc::InvalidArgument, "empty packet");
        }
    }
    const std::uint32_t len = core.len;
    while (core.clean_index_ != core.next_index_ && (core.ring[core.clean_index_].status & kTxStatusDD) != 0) {
        core.ring[core.clean_index_].status = 0;
        core.clean_index_ = (core.clean_index_ + 1) % len;
    }
    const std::uint32_t inflight = (core.next_index_ + len - core.clean_index_) % len;
    const std::uint32_t free = len - 1 - inflight;
    const auto n = static_cast<std::uint32_t>(std::min<std::size_t>(free, packets.size()));
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t slot = core.next_index_;
        mem::TypedView<PacketBuffer>& buffer = core.buffers[slot];
        std::memcpy(buffer[0].data(), packets[i].data(), packets[i].size());
        TxDescriptor& d = core.ring[slot];
        d.addr = buffer.physical_address();
        d.length = static_cast<std::uint16_t>(packets[i].size());
        d.cso = 0;
        d.cmd = kTxCmdEOP | kTxCmdIFCS | kTxCmdRS;
        d.status = 0;
        d.css = 0;
        d.special = 0;
        core.next_index_ = (slot + 1) % len;
    }
    if (n != 0) {
        core.regs->tdt_write(core.queue, core.next_index_);
    }
    return n;
}

std::vector<Packet> receive_batch(RxCore& core, std::uint32_t max) {
    std::vector<Packet> out;
    std::uint32_t last = core.next_index_;
    while (out.size() < max) {
        const std::uint32_t slot = core.next_index_;
        RxDescriptor& d = core.ring[slot];
        if ((d.status & kRxStatusDD) == 0) {
            break;
        }
        std::uint32_t buffer = core.slot_buffer[slot];
        const std::uint8_t* bytes = core.buffers[buffer][0].data();
        const std::size_t length = std::min<std::size_t>(d.length, kBufferSize);
        out.emplace_back(bytes, bytes + length);
        if (!core.restricted) {
            core.spare.push_back(buffer);
            buffer = core.spare.front();
            core.spare.pop_front();
            core.slot_buffer[slot] = buffer;
        }
        d = RxDescriptor{core.buffers[buffer].physical_address(), 0, 0, 0, 0, 0};
        last = slot;
        core.next_index_ = (slot + 1) % core.len;
    }
    if (!out.empty()) {
        core.regs->rdt_write(core.queue, last);
    }
    return out;
}

void rx_reset_ring(RxCore& core) {
    core.spare.clear();
    for (std::uint32_t i = 0; i < core.buffers.size(); ++i) {
        if (i < core.len) {
            core.slot_buffer[i] = i;
            core.ring[i] = RxDescriptor{core.buffers[i].physical_address(), 0, 0, 0, 0, 0};
        } else {
            core.spare.push_back(i);
        }
    }
    core.next_index_ = 0;
}

void tx_reset_ring(TxCore& core) {
    for (std::uint32_t i = 0; i < core.len; ++i) {
        core.ring[i] = TxDescriptor{};
    }
    core.next_index_ = 0;
    core.clean_index_ = 0;
}

} // namespace detail

FilterEntry IxgbeNic::add_filter(std::uint32_t queue, const FiveTuple& tuple) {
    const QueueState state = rx_state(queue);
    if (state != QueueState::Enabled && state != QueueState::L3L4Filter) {
        fail(Errc::StateConflict, "add_filter needs an enabled queue, queue " + std::to_string(queue) + " is " +
                                      to_string(state));
    }
    for (const auto& f : filters_) {
        if (f && f->tuple == tuple) {
            fail(Errc::DuplicateFilter, "identical filter in slot " + std::to_string(f->slot));
        }
    }
    const auto free = std::find_if(filters_.begin(), filters_.end(), [](const auto& f) { return !f.has_value(); });
    if (free == filters_.end()) {
        fail(Errc::TableFull, "all 128 filter slots in use");
    }
    const auto slot = static_cast<std::uint32_t>(free - filters_.begin());
    regs_->filter_write(slot, hal::FilterSpec{tuple, queue, 1});
    *free = FilterRecord{slot, tuple, queue};
    if (state == QueueState::Enabled) {
        move_rx<Enabled, L3L4Filter>(queue);
    }
    return FilterEntry(id_, **free);
}

void IxgbeNic::remove_filter(FilterEntry&& entry) {
    if (!entry.live_) {
        fail(Errc::Consumed, "filter entry already removed");
    }
    if (entry.nic_ != id_) {
        fail(Errc::TokenMismatch, "filter entry belongs to another NIC");
    }
    std::optional<FilterRecord>& slot = filters_.at(entry.record_.slot);
    if (!slot || !(*slot == entry.record_)) {
        fail(Errc::NotFound, "filter slot " + std::to_string(entry.record_.slot) + " does not hold this entry");
    }
    regs_->filter_clear(entry.record_.slot);
    slot.reset();
    entry.live_ = false;
    const std::uint32_t queue = entry.record_.queue;
    const bool remaining =
        std::any_of(filters_.begin(), filters_.end(), [queue](const auto& f) { return f && f->queue == queue; });
    if (!remaining && rx_state(queue) == QueueState::L3L4Filter) {
        move_rx<L3L4Filter, Enabled>(queue);
    }
}

} // namespace irs::ixgbe
