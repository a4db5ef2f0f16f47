#include "irs/chunk.hpp"

#include <string>

namespace irs {

std::pair<Chunk, Chunk> split_at(Chunk&& c, std::uint64_t boundary) {
    if (c.empty()) {
        fail(Errc::Consumed, "split_at on an empty chunk");
    }
    if (boundary <= c.start() || boundary > c.end()) {
        fail(Errc::OutOfBounds, "boundary " + std::to_string(boundary) + " outside (" +
                                    std::to_string(c.start()) + ", " + std::to_string(c.end()) + "]");
    }
    IntervalId whole = std::exchange(c.range_, IntervalId::empty_range());
    return {Chunk(IntervalId{whole.start, boundary - 1}), Chunk(IntervalId{boundary, whole.end})};
}

Chunk merge(Chunk&& a, Chunk&& b) {
    if (a.empty() || b.empty()) {
        fail(Errc::Consumed, "merge with an empty chunk");
    }
    IntervalId lo = a.range_;
    IntervalId hi = b.range_;
    if (hi.start < lo.start) {
        std::swap(lo, hi);
    }
    if (lo.end + 1 != hi.start) {
        fail(Errc::NotAdjacent, lo.to_string() + " and " + hi.to_string() + " are not adjacent");
    }
    a.range_ = IntervalId::empty_range();
    b.range_ = IntervalId::empty_range();
    return Chunk(IntervalId{lo.start, hi.end});
}

} // namespace irs
