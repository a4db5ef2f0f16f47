#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "irs/conform.hpp"
#include "irs/rep_core.hpp"

namespace irs::ixgbe {

struct ConfigSpace {
    std::uint16_t vendor_id = 0x8086;
    std::uint16_t device_id = 0x10FB; // 82599ES SFP+
    std::uint64_t bar0_frame = 0;
    std::uint32_t bar0_frames = 0;
};

class PciBus;

/// Sole handle to one PCI function. Dropping it returns it to the bus.
class PciDevice {
  public:
    using Creator = RepCreator<PciLocation, PciDevice>;

    PciDevice(Creator::Key, const PciLocation& location) noexcept : location_(location) {}

    PciDevice(PciDevice&& other) noexcept;
    PciDevice& operator=(PciDevice&& other) noexcept;
    PciDevice(const PciDevice&) = delete;
    PciDevice& operator=(const PciDevice&) = delete;
    ~PciDevice();

    [[nodiscard]] const PciLocation& location() const noexcept { return location_; }
    [[nodiscard]] const ConfigSpace& config() const noexcept { return config_; }
    [[nodiscard]] bool empty() const noexcept { return bus_ == nullptr; }

  private:
    friend class PciBus;

    PciDevice(const PciLocation& location, const ConfigSpace& config, PciBus* bus) noexcept
        : location_(location), config_(config), bus_(bus) {}
    void give_back() noexcept;

    PciLocation location_;
    ConfigSpace config_;
    PciBus* bus_ = nullptr;
};

IRS_CONFORM_NOT_DUPLICABLE(PciDevice);
IRS_CONFORM_FIELDS_PRIVATE(PciDevice, location_, config_, bus_);

/// Simulated bus. Functions are attached as hardware, then scan() creates one
/// unique representation per function.
class PciBus {
  public:
    PciBus() = default;
    PciBus(const PciBus&) = delete;
    PciBus& operator=(const PciBus&) = delete;
    ~PciBus();

    void attach(const PciLocation& location, const ConfigSpace& config);
    /// Creates representations for every attached function. A second scan
    /// fails with OverlapError.
    std::size_t scan();
    PciDevice take(const PciLocation& location);

    [[nodiscard]] bool available(const PciLocation& location) const { return devices_.count(location) != 0; }
    [[nodiscard]] std::size_t outstanding() const noexcept { return outstanding_; }
    [[nodiscard]] std::vector<PciLocation> locations() const;

  private:
    friend class PciDevice;

    void give_back(const PciLocation& location, const ConfigSpace& config) noexcept;

    PciDevice::Creator creator_;
    std::map<PciLocation, ConfigSpace> slots_;
    std::map<PciLocation, PciDevice> devices_;
    std::size_t outstanding_ = 0;
};

} // namespace irs::ixgbe
