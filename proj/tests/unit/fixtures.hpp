#pragma once

#include <catch2/catch_amalgamated.hpp>

#include "irs/harness.hpp"
#include "irs/nic_hal.hpp"

namespace fixtures {

template <class F>
irs::Errc code_of(F&& fn) {
    try {
        fn();
    } catch (const irs::Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return irs::Errc::Io;
}

/// A machine whose NIC i is driven directly through a register file, no driver.
struct HalBench {
    irs::harness::Machine machine;
    irs::mem::MappedPages bar;
    irs::hal::RegisterFile regs;

    explicit HalBench(std::uint32_t nics = 1, std::size_t which = 0)
        : machine(irs::harness::MachineConfig{64, nics, irs::sim::kFwsmDefault}),
          bar(map_bar(machine, which)), regs(bar.carve_mmio(0, irs::regmap::kBarSize)) {}

    irs::sim::SimNic& dev(std::size_t i = 0) { return machine.device(i); }

    static irs::mem::MappedPages map_bar(irs::harness::Machine& m, std::size_t which) {
        auto& mem = m.memory();
        const std::uint64_t at = 64 + irs::harness::kBarFrames * which;
        return mem.map(mem.allocate_pages(irs::harness::kBarFrames),
                       mem.allocate_frames_at(at, irs::harness::kBarFrames), irs::mem::MappingFlags::Device);
    }
};

} // namespace fixtures
