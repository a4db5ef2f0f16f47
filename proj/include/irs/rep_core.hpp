#pragma once

#include <array>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <string>
#include <vector>

#include "irs/error.hpp"

namespace irs {

/// Identity data for a resource. Copyable and comparable; never grants access.
/// `overlaps` must be symmetric, and reflexive for well-formed identifiers.
template <class T>
concept ResourceIdentifier = std::copyable<T> && std::equality_comparable<T> &&
                             requires(const T& a, const T& b) {
                                 { a.overlaps(b) } -> std::same_as<bool>;
                                 { a.well_formed() } -> std::same_as<bool>;
                                 { a.to_string() } -> std::convertible_to<std::string>;
                             };

/// Inclusive integer range of resource units. Empty when start > end.
struct IntervalId {
    std::uint64_t start = 1;
    std::uint64_t end = 0;

    static constexpr IntervalId empty_range() noexcept { return {1, 0}; }

    [[nodiscard]] constexpr bool empty() const noexcept { return start > end; }
    [[nodiscard]] constexpr std::uint64_t size() const noexcept { return empty() ? 0 : end - start + 1; }
    [[nodiscard]] constexpr bool contains(std::uint64_t unit) const noexcept {
        return !empty() && start <= unit && unit <= end;
    }
    [[nodiscard]] constexpr bool overlaps(const IntervalId& other) const noexcept {
        return !empty() && !other.empty() && start <= other.end && other.start <= end;
    }
    // end == max is rejected so that end + 1 never wraps.
    [[nodiscard]] constexpr bool well_formed() const noexcept {
        return !empty() && end < std::numeric_limits<std::uint64_t>::max();
    }
    [[nodiscard]] std::string to_string() const;

    friend constexpr bool operator==(const IntervalId& a, const IntervalId& b) noexcept {
        if (a.empty() && b.empty()) {
            return true;
        }
        return a.start == b.start && a.end == b.end;
    }
};

struct PciLocation {
    std::uint8_t bus = 0;
    std::uint8_t device = 0;   // 0..31
    std::uint8_t function = 0; // 0..7

    [[nodiscard]] constexpr bool overlaps(const PciLocation& other) const noexcept {
        return bus == other.bus && device == other.device && function == other.function;
    }
    [[nodiscard]] constexpr bool well_formed() const noexcept { return device < 32 && function < 8; }
    [[nodiscard]] std::string to_string() const;

    friend constexpr bool operator==(const PciLocation&, const PciLocation&) noexcept = default;
    friend constexpr auto operator<=>(const PciLocation&, const PciLocation&) noexcept = default;
};

static_assert(ResourceIdentifier<IntervalId>);
static_assert(ResourceIdentifier<PciLocation>);

enum class Storage {
    Early,   // before heap initialization: fixed-capacity array only
    Dynamic, // growable list available
};

/// Creator of unique representations.
///
/// Every identifier handed to create_unique_representation() is checked against
/// all previously stored identifiers; the representation is constructed only
/// when none overlaps. Bookkeeping entries are never removed. `Rep` must be
/// constructible from `(RepCreator::Key, const Id&)`; `Key` has a private
/// constructor, so no other code can construct a `Rep` through that path.
template <ResourceIdentifier Id, class Rep>
class RepCreator {
  public:
    class Key {
        friend class RepCreator;
        Key() = default;
    };

    static constexpr std::size_t kEarlyCapacity = 32;

    explicit RepCreator(Storage storage = Storage::Dynamic) : dynamic_(storage == Storage::Dynamic) {}

    RepCreator(const RepCreator&) = delete;
    RepCreator& operator=(const RepCreator&) = delete;
    RepCreator(RepCreator&&) = default;
    RepCreator& operator=(RepCreator&&) = default;

    /// Switches new insertions to the growable list. Entries already in the
    /// early array stay there and keep participating in overlap checks.
    void enable_dynamic_storage() noexcept { dynamic_ = true; }
    [[nodiscard]] bool dynamic_storage() const noexcept { return dynamic_; }

    Rep create_unique_representation(const Id& id) {
        if (!id.well_formed()) {
            fail(Errc::InvalidIdentifier, "malformed identifier " + id.to_string());
        }
        if (const Id* hit = find_overlap(id)) {
            fail(Errc::Overlap, id.to_string() + " overlaps existing " + hit->to_string());
        }
        if (dynamic_) {
            // Most recent identifier sits at index 0.
            main_.push_front(id);
        } else {
            if (early_len_ == kEarlyCapacity) {
                fail(Errc::Capacity, "early store full before dynamic storage is available");
            }
            early_[early_len_++] = id;
        }
        return make(id);
    }

    [[nodiscard]] bool overlaps_any(const Id& id) const { return find_overlap(id) != nullptr; }

    [[nodiscard]] std::size_t size() const noexcept { return early_len_ + main_.size(); }

    /// Stored identifiers: the growable list (most recent first) followed by the
    /// early array in insertion order.
    [[nodiscard]] std::vector<Id> stored() const {
        std::vector<Id> out(main_.begin(), main_.end());
        out.insert(out.end(), early_.begin(), early_.begin() + static_cast<std::ptrdiff_t>(early_len_));
        return out;
    }

    [[nodiscard]] const Id& lookup(std::size_t index) const { return main_.at(index); }

  private:
    static Rep make(const Id& id) { return Rep(Key{}, id); }

    const Id* find_overlap(const Id& id) const {
        for (std::size_t i = 0; i < early_len_; ++i) {
            if (early_[i].overlaps(id)) {
                return &early_[i];
            }
        }
        for (const Id& stored : main_) {
            if (stored.overlaps(id)) {
                return &stored;
            }
        }
        return nullptr;
    }

    std::array<Id, kEarlyCapacity> early_{};
    std::size_t early_len_ = 0;
    std::deque<Id> main_;
    bool dynamic_;
};

} // namespace irs
