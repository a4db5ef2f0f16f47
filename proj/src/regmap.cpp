#include "irs/regmap.hpp"

#include "irs/regmap_generated.hpp"

namespace irs::regmap {

RegisterRecord to_record(const RegisterSpec& spec) {
    return {std::string(spec.name), spec.offset,        spec.count,          spec.stride, spec.access,
            spec.reserved_mask,     spec.required_mask, spec.required_value, spec.reset};
}

std::optional<Located> locate(std::uint32_t offset) noexcept {
    for (const RegisterSpec& spec : kAll) {
        if (offset < spec.offset) {
            continue;
        }
        const std::uint32_t delta = offset - spec.offset;
        if (spec.count == 1) {
            if (delta == 0) {
                return Located{&spec, 0};
            }
        } else if (delta % spec.stride == 0 && delta / spec.stride < spec.count) {
            return Located{&spec, delta / spec.stride};
        }
    }
    return std::nullopt;
}

} // namespace irs::regmap
