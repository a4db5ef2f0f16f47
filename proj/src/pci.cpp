#include "irs/pci.hpp"

#include <cstdio>
#include <cstdlib>

#include "irs/error.hpp"

namespace irs::ixgbe {

PciDevice::PciDevice(PciDevice&& other) noexcept
    : location_(other.location_), config_(other.config_), bus_(std::exchange(other.bus_, nullptr)) {}

PciDevice& PciDevice::operator=(PciDevice&& other) noexcept {
    if (this != &other) {
        give_back();
        location_ = other.location_;
        config_ = other.config_;
        bus_ = std::exchange(other.bus_, nullptr);
    }
    return *this;
}

PciDevice::~PciDevice() { give_back(); }

void PciDevice::give_back() noexcept {
    if (bus_ != nullptr) {
        std::exchange(bus_, nullptr)->give_back(location_, config_);
    }
}

PciBus::~PciBus() {
    if (outstanding_ != 0) {
        std::fprintf(stderr, "irs::pci fatal: %zu devices outlive their bus\n", outstanding_);
        std::abort();
    }
    for (auto& [loc, dev] : devices_) {
        dev.bus_ = nullptr;
    }
}

void PciBus::attach(const PciLocation& location, const ConfigSpace& config) {
    if (!location.well_formed()) {
        fail(Errc::InvalidIdentifier, "malformed PCI location " + location.to_string());
    }
    if (!slots_.emplace(location, config).second) {
        fail(Errc::Overlap, "function " + location.to_string() + " already attached");
    }
}

std::size_t PciBus::scan() {
    std::size_t created = 0;
    for (const auto& [loc, config] : slots_) {
        PciDevice dev = creator_.create_unique_representation(loc);
        dev.config_ = config;
        dev.bus_ = this;
        devices_.emplace(loc, std::move(dev));
        ++created;
    }
    return created;
}

PciDevice PciBus::take(const PciLocation& location) {
    auto it = devices_.find(location);
    if (it == devices_.end()) {
        fail(Errc::NotFound, "no available device at " + location.to_string());
    }
    PciDevice dev = std::move(it->second);
    devices_.erase(it);
    ++outstanding_;
    return dev;
}

void PciBus::give_back(const PciLocation& location, const ConfigSpace& config) noexcept {
    --outstanding_;
    devices_.emplace(location, PciDevice(location, config, this));
}

std::vector<PciLocation> PciBus::locations() const {
    std::vector<PciLocation> out;
    for (const auto& [loc, config] : slots_) {
        out.push_back(loc);
    }
    return out;
}

} // namespace irs::ixgbe
