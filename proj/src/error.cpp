#include "irs/error.hpp"

namespace irs {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::Overlap: return "OverlapError";
    case Errc::Capacity: return "CapacityError";
    case Errc::InvalidIdentifier: return "InvalidIdentifier";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::NotAdjacent: return "NotAdjacent";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::OutOfResources: return "OutOfResources";
    case Errc::NotFree: return "NotFree";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::TableConflict: return "TableConflict";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::Misaligned: return "Misaligned";
    case Errc::OverlapsPriorCarve: return "OverlapsPriorCarve";
    case Errc::Discontiguous: return "Discontiguous";
    case Errc::WrongMemoryKind: return "WrongMemoryKind";
    case Errc::PermissionDenied: return "PermissionDenied";
    case Errc::Consumed: return "Consumed";
    case Errc::StaleToken: return "StaleToken";
    case Errc::TokenMismatch: return "TokenMismatch";
    case Errc::ValueOutOfRange: return "ValueOutOfRange";
    case Errc::UnknownOffset: return "UnknownOffset";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::PacketTooLarge: return "PacketTooLarge";
    case Errc::TableFull: return "TableFull";
    case Errc::DuplicateFilter: return "DuplicateFilter";
    case Errc::StateConflict: return "StateConflict";
    case Errc::NotFound: return "NotFound";
    case Errc::UnknownItem: return "UnknownItem";
    case Errc::ParseError: return "ParseError";
    case Errc::Io: return "IoError";
    }
    return "Unknown";
}

} // namespace irs
