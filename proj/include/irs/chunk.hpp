#pragma once

#include <cstdint>
#include <utility>

#include "irs/conform.hpp"
#include "irs/rep_core.hpp"

namespace irs {

namespace mem::detail {
struct ChunkForge;
}

/// Exclusive integer interval. Base representation for page and frame ranges.
/// A default-constructed or moved-from Chunk is empty and grants nothing.
class Chunk {
  public:
    using Creator = RepCreator<IntervalId, Chunk>;

    Chunk() noexcept = default;
    Chunk(Creator::Key, const IntervalId& id) noexcept : range_(id) {}

    Chunk(const Chunk&) = delete;
    Chunk& operator=(const Chunk&) = delete;

    Chunk(Chunk&& other) noexcept : range_(std::exchange(other.range_, IntervalId::empty_range())) {}
    Chunk& operator=(Chunk&& other) noexcept {
        range_ = std::exchange(other.range_, IntervalId::empty_range());
        return *this;
    }

    ~Chunk() = default;

    [[nodiscard]] IntervalId range() const noexcept { return range_; }
    [[nodiscard]] std::uint64_t start() const noexcept { return range_.start; }
    [[nodiscard]] std::uint64_t end() const noexcept { return range_.end; }
    [[nodiscard]] std::uint64_t size() const noexcept { return range_.size(); }
    [[nodiscard]] bool empty() const noexcept { return range_.empty(); }

  private:
    friend std::pair<Chunk, Chunk> split_at(Chunk&& c, std::uint64_t boundary);
    friend Chunk merge(Chunk&& a, Chunk&& b);
    friend struct mem::detail::ChunkForge;

    explicit Chunk(const IntervalId& id) noexcept : range_(id) {}

    IntervalId range_ = IntervalId::empty_range();
};

IRS_CONFORM_NOT_DUPLICABLE(Chunk);
IRS_CONFORM_FIELDS_PRIVATE(Chunk, range_);

using ChunkCreator = Chunk::Creator;

/// Consumes `c` and returns ([start, boundary-1], [boundary, end]).
/// Throws OutOfBounds unless start < boundary <= end; `c` is untouched then.
std::pair<Chunk, Chunk> split_at(Chunk&& c, std::uint64_t boundary);

/// Consumes two adjacent chunks and returns their union.
/// Throws NotAdjacent on a gap or an overlap; both inputs are untouched then.
Chunk merge(Chunk&& a, Chunk&& b);

[[nodiscard]] inline bool contains(const Chunk& c, std::uint64_t unit) noexcept { return c.range().contains(unit); }

} // namespace irs
