#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "irs/chunk.hpp"
#include "irs/conform.hpp"
#include "irs/error.hpp"
#include "irs/rep_core.hpp"

namespace irs::mem {

inline constexpr std::uint64_t kPageSize = 4096;

struct Free {};
struct Allocated {};
struct Mapped {};
struct Unmapped {};

template <class S>
inline constexpr bool kIsState = std::is_same_v<S, Free> || std::is_same_v<S, Allocated> ||
                                 std::is_same_v<S, Mapped> || std::is_same_v<S, Unmapped>;

enum class MappingFlags : std::uint8_t { ReadOnly, ReadWrite, Device };

const char* to_string(MappingFlags flags) noexcept;

/// Receiver of 32-bit accesses to a device-memory window.
class MmioHandler {
  public:
    virtual ~MmioHandler() = default;
    virtual std::uint32_t mmio_read(std::uint64_t offset) = 0;
    virtual void mmio_write(std::uint64_t offset, std::uint32_t value) = 0;
};

/// Stand-in for RAM plus device windows. Frame f covers bytes [f*4096, (f+1)*4096).
class SimPhysMemory {
  public:
    explicit SimPhysMemory(std::uint64_t num_frames);

    SimPhysMemory(const SimPhysMemory&) = delete;
    SimPhysMemory& operator=(const SimPhysMemory&) = delete;

    [[nodiscard]] std::uint64_t num_frames() const noexcept { return num_frames_; }
    [[nodiscard]] std::uint64_t size_bytes() const noexcept { return num_frames_ * kPageSize; }
    [[nodiscard]] std::byte* bytes() noexcept { return bytes_.get(); }
    [[nodiscard]] const std::byte* bytes() const noexcept { return bytes_.get(); }

    void attach_mmio(const IntervalId& frames, MmioHandler* handler);
    void detach_mmio(MmioHandler* handler) noexcept;

    struct MmioHit {
        MmioHandler* handler;
        std::uint64_t offset;
    };
    [[nodiscard]] std::optional<MmioHit> mmio_at(std::uint64_t paddr) const noexcept;
    [[nodiscard]] bool is_mmio_frame(std::uint64_t frame) const noexcept;
    [[nodiscard]] bool is_ram(std::uint64_t paddr, std::uint64_t len) const noexcept;

    // DMA path for the device model. Returns false, touching nothing, if the
    // range is not entirely RAM.
    bool dma_read(std::uint64_t paddr, std::span<std::uint8_t> out) const noexcept;
    bool dma_write(std::uint64_t paddr, std::span<const std::uint8_t> in) noexcept;

  private:
    struct AlignedFree {
        void operator()(std::byte* p) const noexcept;
    };
    struct Window {
        IntervalId frames;
        MmioHandler* handler;
    };

    std::uint64_t num_frames_;
    std::unique_ptr<std::byte[], AlignedFree> bytes_;
    std::vector<Window> windows_;
};

struct PageTableEntry {
    std::uint64_t frame;
    MappingFlags flags;

    friend bool operator==(const PageTableEntry&, const PageTableEntry&) = default;
};

/// Flat single-level table. Mutation is reserved to MemorySystem.
class SimPageTable {
  public:
    [[nodiscard]] std::optional<PageTableEntry> lookup(std::uint64_t page) const;
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] const std::map<std::uint64_t, PageTableEntry>& entries() const noexcept { return entries_; }
    [[nodiscard]] bool frame_mapped(std::uint64_t frame) const { return reverse_.count(frame) != 0; }

    /// Full scan, independent of the reverse index: true iff no frame number
    /// appears in two entries.
    [[nodiscard]] bool bijective() const;

  private:
    friend class MemorySystem;

    void insert(std::uint64_t page, PageTableEntry entry);
    PageTableEntry erase(std::uint64_t page);
    void set_flags(std::uint64_t page, MappingFlags flags);

    std::map<std::uint64_t, PageTableEntry> entries_;
    std::unordered_map<std::uint64_t, std::uint64_t> reverse_;
};

/// First-fit allocator over free chunks keyed by start. Adjacent free chunks
/// are merged on insertion.
class Allocator {
  public:
    /// Lowest-start interval of `count` units that avoids every `exclude` range.
    Chunk allocate(std::uint64_t count, const std::vector<IntervalId>& exclude = {});
    Chunk allocate_at(std::uint64_t start, std::uint64_t count);
    void insert(Chunk&& chunk);

    [[nodiscard]] std::vector<IntervalId> intervals() const;
    [[nodiscard]] std::uint64_t free_units() const noexcept;
    [[nodiscard]] std::size_t chunk_count() const noexcept { return free_.size(); }

  private:
    Chunk carve_out(std::map<std::uint64_t, Chunk>::iterator it, std::uint64_t start, std::uint64_t count);

    std::map<std::uint64_t, Chunk> free_;
};

class MemorySystem;
template <class S>
class TypedPages;
template <>
class TypedPages<Mapped>;
template <class S>
class TypedFrames;

namespace detail {

struct ChunkForge {
    static Chunk rebuild(const IntervalId& id) noexcept { return Chunk(id); }
};

/// Back-link from a representation to its memory system. Counts live links.
class SystemLink {
  public:
    SystemLink() noexcept = default;
    explicit SystemLink(MemorySystem* sys) noexcept;
    SystemLink(SystemLink&& other) noexcept : sys_(std::exchange(other.sys_, nullptr)) {}
    SystemLink& operator=(SystemLink&& other) noexcept {
        if (this != &other) {
            reset();
            sys_ = std::exchange(other.sys_, nullptr);
        }
        return *this;
    }
    SystemLink(const SystemLink&) = delete;
    SystemLink& operator=(const SystemLink&) = delete;
    ~SystemLink() { reset(); }

    [[nodiscard]] MemorySystem* get() const noexcept { return sys_; }

  private:
    void reset() noexcept;

    MemorySystem* sys_ = nullptr;
};

struct CarveBook {
    std::vector<std::pair<std::uint64_t, IntervalId>> records; // id, byte range within the mapping
    std::uint64_t next_id = 0;

    void release(std::uint64_t id) noexcept {
        records.erase(std::remove_if(records.begin(), records.end(),
                                     [id](const auto& r) { return r.first == id; }),
                      records.end());
    }
};

} // namespace detail

/// Typed window over carved RAM. Move-only; gives up its carve record on destruction.
template <class T>
class TypedView {
  public:
    TypedView() noexcept = default;
    TypedView(TypedView&& other) noexcept
        : data_(std::exchange(other.data_, nullptr)), count_(std::exchange(other.count_, 0)),
          paddr_(other.paddr_), book_(std::move(other.book_)), record_(other.record_) {}
    TypedView& operator=(TypedView&& other) noexcept {
        if (this != &other) {
            release();
            data_ = std::exchange(other.data_, nullptr);
            count_ = std::exchange(other.count_, 0);
            paddr_ = other.paddr_;
            book_ = std::move(other.book_);
            record_ = other.record_;
        }
        return *this;
    }
    TypedView(const TypedView&) = delete;
    TypedView& operator=(const TypedView&) = delete;
    ~TypedView() { release(); }

    [[nodiscard]] T* data() noexcept { return data_; }
    [[nodiscard]] const T* data() const noexcept { return data_; }
    [[nodiscard]] std::size_t size() const noexcept { return count_; }
    [[nodiscard]] bool empty() const noexcept { return data_ == nullptr; }
    [[nodiscard]] std::uint64_t physical_address() const noexcept { return paddr_; }
    [[nodiscard]] std::span<T> span() noexcept { return {data_, count_}; }
    [[nodiscard]] std::span<const T> span() const noexcept { return {data_, count_}; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  private:
    friend class TypedPages<Mapped>;

    TypedView(T* data, std::size_t count, std::uint64_t paddr, std::shared_ptr<detail::CarveBook> book,
              std::uint64_t record) noexcept
        : data_(data), count_(count), paddr_(paddr), book_(std::move(book)), record_(record) {}

    void release() noexcept {
        if (book_) {
            book_->release(record_);
            book_.reset();
        }
        data_ = nullptr;
        count_ = 0;
    }

    T* data_ = nullptr;
    std::size_t count_ = 0;
    std::uint64_t paddr_ = 0;
    std::shared_ptr<detail::CarveBook> book_;
    std::uint64_t record_ = 0;
};

/// 32-bit register window over carved device memory.
class MmioWindow {
  public:
    MmioWindow() noexcept = default;
    MmioWindow(MmioWindow&& other) noexcept;
    MmioWindow& operator=(MmioWindow&& other) noexcept;
    MmioWindow(const MmioWindow&) = delete;
    MmioWindow& operator=(const MmioWindow&) = delete;
    ~MmioWindow() { release(); }

    [[nodiscard]] std::uint32_t read32(std::uint64_t offset) const;
    void write32(std::uint64_t offset, std::uint32_t value);
    [[nodiscard]] std::uint64_t size() const noexcept { return size_; }
    [[nodiscard]] bool empty() const noexcept { return handler_ == nullptr; }
    [[nodiscard]] std::uint64_t physical_address() const noexcept { return paddr_; }

  private:
    friend class TypedPages<Mapped>;

    MmioWindow(MmioHandler* handler, std::uint64_t device_offset, std::uint64_t size, std::uint64_t paddr,
               std::shared_ptr<detail::CarveBook> book, std::uint64_t record) noexcept
        : handler_(handler), device_offset_(device_offset), size_(size), paddr_(paddr), book_(std::move(book)),
          record_(record) {}

    void check(std::uint64_t offset) const;
    void release() noexcept;

    MmioHandler* handler_ = nullptr;
    std::uint64_t device_offset_ = 0;
    std::uint64_t size_ = 0;
    std::uint64_t paddr_ = 0;
    std::shared_ptr<detail::CarveBook> book_;
    std::uint64_t record_ = 0;
};

/// Owns the allocators, the page table and the simulated physical memory.
/// Must outlive every representation it hands out; destruction with live
/// representations aborts.
class MemorySystem {
  public:
    MemorySystem(ChunkCreator& frame_creator, ChunkCreator& page_creator, std::uint64_t num_frames,
                 std::uint64_t num_pages);
    ~MemorySystem();

    MemorySystem(const MemorySystem&) = delete;
    MemorySystem& operator=(const MemorySystem&) = delete;
    MemorySystem(MemorySystem&&) = delete;
    MemorySystem& operator=(MemorySystem&&) = delete;

    /// RAM frames only; device windows are skipped.
    TypedFrames<Allocated> allocate_frames(std::uint64_t count);
    TypedFrames<Allocated> allocate_frames_at(std::uint64_t start, std::uint64_t count);
    TypedPages<Allocated> allocate_pages(std::uint64_t count);
    TypedPages<Allocated> allocate_pages_at(std::uint64_t start, std::uint64_t count);

    /// Page i of `pages` maps to frame i of `frames`. The frames value is
    /// consumed and not retained; it is rebuilt from the table on unmap.
    /// On failure both arguments are left untouched.
    TypedPages<Mapped> map(TypedPages<Allocated>&& pages, TypedFrames<Allocated>&& frames, MappingFlags flags);
    TypedPages<Mapped> map_scattered(TypedPages<Allocated>&& pages, std::vector<TypedFrames<Allocated>>&& frames,
                                     MappingFlags flags);
    /// Allocate `count` pages and `count` contiguous RAM frames and map them.
    TypedPages<Mapped> map_new(std::uint64_t count, MappingFlags flags = MappingFlags::ReadWrite);

    [[nodiscard]] const SimPageTable& page_table() const noexcept { return table_; }
    [[nodiscard]] SimPhysMemory& phys() noexcept { return phys_; }
    [[nodiscard]] const SimPhysMemory& phys() const noexcept { return phys_; }
    [[nodiscard]] std::vector<IntervalId> free_pages() const { return pages_.intervals(); }
    [[nodiscard]] std::vector<IntervalId> free_frames() const { return frames_.intervals(); }
    [[nodiscard]] std::uint64_t num_frames() const noexcept { return num_frames_; }
    [[nodiscard]] std::uint64_t num_pages() const noexcept { return num_pages_; }
    [[nodiscard]] std::size_t live_representations() const noexcept { return live_; }

  private:
    template <class>
    friend class TypedPages;
    template <class>
    friend class TypedFrames;
    friend class detail::SystemLink;

    void release_pages(Chunk&& chunk) noexcept;
    void release_frames(Chunk&& chunk) noexcept;
    /// Clears the entries of `pages` and returns their frames coalesced into
    /// maximal contiguous runs.
    std::vector<IntervalId> unmap(const IntervalId& pages) noexcept;
    void remap(const IntervalId& pages, MappingFlags flags);
    void check_frame_kind(const IntervalId& frames, MappingFlags flags) const;
    std::vector<IntervalId> mmio_frames() const;

    std::uint64_t num_frames_;
    std::uint64_t num_pages_;
    Allocator frames_;
    Allocator pages_;
    SimPageTable table_;
    SimPhysMemory phys_;
    std::size_t live_ = 0;
};

inline detail::SystemLink::SystemLink(MemorySystem* sys) noexcept : sys_(sys) {
    if (sys_ != nullptr) {
        ++sys_->live_;
    }
}

inline void detail::SystemLink::reset() noexcept {
    if (sys_ != nullptr) {
        --sys_->live_;
        sys_ = nullptr;
    }
}

/// Page range in state S. Free, Allocated and Unmapped pages grant no memory access.
template <class S>
class TypedPages {
    static_assert(kIsState<S>);

  public:
    TypedPages(TypedPages&&) noexcept = default;
    TypedPages& operator=(TypedPages&& other) noexcept {
        if (this != &other) {
            TypedPages old(std::move(*this));
            inner_ = std::move(other.inner_);
            link_ = std::move(other.link_);
        }
        return *this;
    }
    TypedPages(const TypedPages&) = delete;
    TypedPages& operator=(const TypedPages&) = delete;
    ~TypedPages() { drop(); }

    [[nodiscard]] IntervalId range() const noexcept { return inner_.range(); }
    [[nodiscard]] std::uint64_t count() const noexcept { return inner_.size(); }
    [[nodiscard]] bool empty() const noexcept { return inner_.empty(); }

  private:
    friend class MemorySystem;
    template <class>
    friend class TypedPages;

    TypedPages(MemorySystem* sys, Chunk&& chunk) noexcept : inner_(std::move(chunk)), link_(sys) {}

    void drop() noexcept {
        if (inner_.empty()) {
            return;
        }
        MemorySystem* sys = link_.get();
        if constexpr (std::is_same_v<S, Unmapped>) {
            TypedPages<Allocated> next(sys, std::move(inner_));
        } else if constexpr (std::is_same_v<S, Allocated>) {
            TypedPages<Free> next(sys, std::move(inner_));
        } else if constexpr (std::is_same_v<S, Free>) {
            sys->release_pages(std::move(inner_));
        }
    }

    Chunk inner_;
    detail::SystemLink link_;

    IRS_CONFORM_COMPOSED_OF(TypedPages, inner_, Chunk);
};

/// Frame range in state S. There is no Mapped frame state: frames are consumed
/// by map() and rebuilt from the page table on unmap.
template <class S>
class TypedFrames {
    static_assert(kIsState<S> && !std::is_same_v<S, Mapped>);

  public:
    TypedFrames(TypedFrames&&) noexcept = default;
    TypedFrames& operator=(TypedFrames&& other) noexcept {
        if (this != &other) {
            TypedFrames old(std::move(*this));
            inner_ = std::move(other.inner_);
            link_ = std::move(other.link_);
        }
        return *this;
    }
    TypedFrames(const TypedFrames&) = delete;
    TypedFrames& operator=(const TypedFrames&) = delete;
    ~TypedFrames() { drop(); }

    [[nodiscard]] IntervalId range() const noexcept { return inner_.range(); }
    [[nodiscard]] std::uint64_t count() const noexcept { return inner_.size(); }
    [[nodiscard]] bool empty() const noexcept { return inner_.empty(); }

  private:
    friend class MemorySystem;
    friend class TypedPages<Mapped>;
    template <class>
    friend class TypedFrames;

    TypedFrames(MemorySystem* sys, Chunk&& chunk) noexcept : inner_(std::move(chunk)), link_(sys) {}

    void drop() noexcept {
        if (inner_.empty()) {
            return;
        }
        MemorySystem* sys = link_.get();
        if constexpr (std::is_same_v<S, Unmapped>) {
            TypedFrames<Allocated> next(sys, std::move(inner_));
        } else if constexpr (std::is_same_v<S, Allocated>) {
            TypedFrames<Free> next(sys, std::move(inner_));
        } else if constexpr (std::is_same_v<S, Free>) {
            sys->release_frames(std::move(inner_));
        }
    }

    Chunk inner_;
    detail::SystemLink link_;

    IRS_CONFORM_COMPOSED_OF(TypedFrames, inner_, Chunk);
};

/// Mapped pages: the only state with memory access.
template <>
class TypedPages<Mapped> {
  public:
    TypedPages(TypedPages&&) noexcept = default;
    TypedPages& operator=(TypedPages&& other) noexcept {
        if (this != &other) {
            TypedPages old(std::move(*this));
            inner_ = std::move(other.inner_);
            link_ = std::move(other.link_);
            flags_ = other.flags_;
            book_ = std::move(other.book_);
        }
        return *this;
    }
    TypedPages(const TypedPages&) = delete;
    TypedPages& operator=(const TypedPages&) = delete;
    ~TypedPages() { drop(); }

    [[nodiscard]] IntervalId range() const noexcept { return inner_.range(); }
    [[nodiscard]] std::uint64_t count() const noexcept { return inner_.size(); }
    [[nodiscard]] std::uint64_t size_bytes() const noexcept { return inner_.size() * kPageSize; }
    [[nodiscard]] bool empty() const noexcept { return inner_.empty(); }
    [[nodiscard]] MappingFlags flags() const noexcept { return flags_; }

    [[nodiscard]] std::vector<std::uint8_t> read(std::uint64_t offset, std::uint64_t len) const;
    void read_into(std::uint64_t offset, std::span<std::uint8_t> out) const;
    void write(std::uint64_t offset, std::span<const std::uint8_t> data);
    void remap(MappingFlags flags);
    [[nodiscard]] std::uint64_t physical_address(std::uint64_t offset) const;

    /// `count` objects of T at byte `offset`, aligned to max(align, alignof(T)).
    template <class T>
    TypedView<T> carve(std::uint64_t offset, std::size_t count, std::size_t align = alignof(T)) {
        static_assert(std::is_trivially_copyable_v<T> && std::is_standard_layout_v<T>);
        if (count == 0 || count > size_bytes() / sizeof(T) + 1) {
            fail(Errc::OutOfRange, "carve count out of range");
        }
        const CarveAddress at = carve_address(offset, count * sizeof(T), std::max(align, alignof(T)), false);
        // Trusted stage: the checked bytes are reinterpreted as T.
        T* ptr = reinterpret_cast<T*>(link_.get()->phys().bytes() + at.paddr);
        return TypedView<T>(ptr, count, at.paddr, book_, at.record);
    }

    MmioWindow carve_mmio(std::uint64_t offset, std::uint64_t size);

    /// Byte ranges, relative to the mapping start, of the live carves.
    [[nodiscard]] std::vector<IntervalId> carve_records() const;

  private:
    friend class MemorySystem;

    struct CarveAddress {
        std::uint64_t paddr;
        std::uint64_t record;
    };

    TypedPages(MemorySystem* sys, Chunk&& chunk, MappingFlags flags)
        : inner_(std::move(chunk)), link_(sys), flags_(flags), book_(std::make_shared<detail::CarveBook>()) {}

    CarveAddress carve_address(std::uint64_t offset, std::uint64_t size, std::uint64_t align, bool device);
    void check_span(std::uint64_t offset, std::uint64_t len) const;
    void drop() noexcept;

    Chunk inner_;
    detail::SystemLink link_;
    MappingFlags flags_ = MappingFlags::ReadOnly;
    std::shared_ptr<detail::CarveBook> book_;

    IRS_CONFORM_COMPOSED_OF(TypedPages<Mapped>, inner_, Chunk);
};

using MappedPages = TypedPages<Mapped>;

IRS_CONFORM_NOT_DUPLICABLE(TypedPages<Free>);
IRS_CONFORM_NOT_DUPLICABLE(TypedPages<Allocated>);
IRS_CONFORM_NOT_DUPLICABLE(TypedPages<Mapped>);
IRS_CONFORM_NOT_DUPLICABLE(TypedPages<Unmapped>);
IRS_CONFORM_NOT_DUPLICABLE(TypedFrames<Free>);
IRS_CONFORM_NOT_DUPLICABLE(TypedFrames<Allocated>);
IRS_CONFORM_NOT_DUPLICABLE(TypedFrames<Unmapped>);
IRS_CONFORM_NOT_DUPLICABLE(TypedView<std::uint8_t>);
IRS_CONFORM_NOT_DUPLICABLE(MmioWindow);
IRS_CONFORM_FIELDS_PRIVATE(TypedPages, inner_, link_);
IRS_CONFORM_FIELDS_PRIVATE(TypedFrames, inner_, link_);
IRS_CONFORM_FIELDS_PRIVATE(TypedView, data_, count_, paddr_);
IRS_CONFORM_FIELDS_PRIVATE(SimPageTable, entries_, reverse_);
IRS_CONFORM_FIELDS_PRIVATE(TypedPages<Mapped>, inner_, link_, flags_, book_);
IRS_CONFORM_FIELDS_PRIVATE(MmioWindow, handler_, device_offset_, size_, paddr_);
IRS_CONFORM_FIELDS_PRIVATE(Allocator, free_);
IRS_CONFORM_NOT_DUPLICABLE(MemorySystem);

} // namespace irs::mem
