// Emits constexpr register constants from the register-map text file.
#include <cstdio>
#include <fstream>
#include <iostream>

#include "irs/error.hpp"
#include "irs/regmap.hpp"

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: regmap_gen INPUT OUTPUT\n";
        return 2;
    }
    std::vector<irs::regmap::RegisterRecord> records;
    try {
        records = irs::regmap::parse_file(argv[1]);
    } catch (const irs::Error& e) {
        std::cerr << argv[1] << ": " << e.what() << "\n";
        return 1;
    }
    std::ofstream out(argv[2]);
    if (!out) {
        std::cerr << "cannot write " << argv[2] << "\n";
        return 1;
    }
    auto hex = [](std::uint32_t v) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "0x%08X", v);
        return std::string(buf);
    };
    auto access = [](irs::regmap::Access a) {
        switch (a) {
        case irs::regmap::Access::ReadOnly: return "Access::ReadOnly";
        case irs::regmap::Access::ReadWrite: return "Access::ReadWrite";
        case irs::regmap::Access::Restricted: return "Access::Restricted";
        case irs::regmap::Access::Reserved: return "Access::Reserved";
        }
        return "Access::Reserved";
    };
    out << "// Generated by regmap_gen. Do not edit.\n#pragma once\n\n#include <array>\n\n#include \"irs/regmap.hpp\"\n\n";
    out << "namespace irs::regmap::reg {\n\n";
    for (const auto& r : records) {
        out << "inline constexpr RegisterSpec " << r.name << "{\"" << r.name << "\", " << hex(r.offset) << ", "
            << r.count << ", " << hex(r.stride) << ", " << access(r.access) << ", " << hex(r.reserved_mask) << ", "
            << hex(r.required_mask) << ", " << hex(r.required_value) << ", " << hex(r.reset) << "};\n";
    }
    out << "\n} // namespace irs::regmap::reg\n\nnamespace irs::regmap {\n\n";
    out << "inline constexpr std::array<RegisterSpec, " << records.size() << "> kAll{{\n";
    for (const auto& r : records) {
        out << "    reg::" << r.name << ",\n";
    }
    out << "}};\n\n} // namespace irs::regmap\n";
    return 0;
}
