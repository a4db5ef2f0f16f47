#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace irs {

enum class Errc {
    // rep_core
    Overlap,
    Capacity,
    InvalidIdentifier,
    // chunk
    OutOfBounds,
    NotAdjacent,
    // mem
    InvalidArgument,
    OutOfResources,
    NotFree,
    LengthMismatch,
    TableConflict,
    OutOfRange,
    Misaligned,
    OverlapsPriorCarve,
    Discontiguous,
    WrongMemoryKind,
    PermissionDenied,
    // tokens and linear values
    Consumed,
    StaleToken,
    TokenMismatch,
    // nic_hal / device_sim
    ValueOutOfRange,
    UnknownOffset,
    // ixgbe_driver
    InvalidConfig,
    PacketTooLarge,
    TableFull,
    DuplicateFilter,
    StateConflict,
    NotFound,
    // conformance / harness
    UnknownItem,
    ParseError,
    Io,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

} // namespace irs
