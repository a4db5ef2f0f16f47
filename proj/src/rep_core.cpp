#include "irs/rep_core.hpp"

#include <cstdio>

namespace irs {

std::string IntervalId::to_string() const {
    if (empty()) {
        return "[empty]";
    }
    return "[" + std::to_string(start) + "," + std::to_string(end) + "]";
}

std::string PciLocation::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02x:%02x.%x", bus, device, function);
    return buf;
}

} // namespace irs
