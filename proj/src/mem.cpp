#include "irs/mem.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace irs::mem {

namespace {

[[noreturn]] void abort_with(const char* what) noexcept {
    std::fprintf(stderr, "irs::mem fatal: %s\n", what);
    std::abort();
}

bool is_pow2(std::uint64_t v) noexcept { return v != 0 && (v & (v - 1)) == 0; }

} // namespace

const char* to_string(MappingFlags flags) noexcept {
    switch (flags) {
    case MappingFlags::ReadOnly: return "ReadOnly";
    case MappingFlags::ReadWrite: return "ReadWrite";
    case MappingFlags::Device: return "Device";
    }
    return "?";
}

// ---- SimPhysMemory ----

void SimPhysMemory::AlignedFree::operator()(std::byte* p) const noexcept { std::free(p); }

SimPhysMemory::SimPhysMemory(std::uint64_t num_frames) : num_frames_(num_frames) {
    if (num_frames == 0) {
        fail(Errc::InvalidArgument, "physical memory needs at least one frame");
    }
    auto* raw = static_cast<std::byte*>(std::aligned_alloc(kPageSize, num_frames * kPageSize));
    if (raw == nullptr) {
        throw std::bad_alloc();
    }
    std::memset(raw, 0, num_frames * kPageSize);
    bytes_.reset(raw);
}

void SimPhysMemory::attach_mmio(const IntervalId& frames, MmioHandler* handler) {
    if (!frames.well_formed() || frames.end >= num_frames_ || handler == nullptr) {
        fail(Errc::InvalidArgument, "bad device window " + frames.to_string());
    }
    for (const Window& w : windows_) {
        if (w.frames.overlaps(frames)) {
            fail(Errc::Overlap, "device window " + frames.to_string() + " overlaps " + w.frames.to_string());
        }
    }
    windows_.push_back({frames, handler});
}

void SimPhysMemory::detach_mmio(MmioHandler* handler) noexcept {
    windows_.erase(std::remove_if(windows_.begin(), windows_.end(),
                                  [handler](const Window& w) { return w.handler == handler; }),
                   windows_.end());
}

std::optional<SimPhysMemory::MmioHit> SimPhysMemory::mmio_at(std::uint64_t paddr) const noexcept {
    const std::uint64_t frame = paddr / kPageSize;
    for (const Window& w : windows_) {
        if (w.frames.contains(frame)) {
            return MmioHit{w.handler, paddr - w.frames.start * kPageSize};
        }
    }
    return std::nullopt;
}

bool SimPhysMemory::is_mmio_frame(std::uint64_t frame) const noexcept {
    return std::any_of(windows_.begin(), windows_.end(), [frame](const Window& w) { return w.frames.contains(frame); });
}

bool SimPhysMemory::is_ram(std::uint64_t paddr, std::uint64_t len) const noexcept {
    if (len == 0) {
        return paddr <= size_bytes();
    }
    if (paddr >= size_bytes() || len > size_bytes() - paddr) {
        return false;
    }
    const IntervalId frames{paddr / kPageSize, (paddr + len - 1) / kPageSize};
    return std::none_of(windows_.begin(), windows_.end(), [&](const Window& w) { return w.frames.overlaps(frames); });
}

bool SimPhysMemory::dma_read(std::uint64_t paddr, std::span<std::uint8_t> out) const noexcept {
    if (!is_ram(paddr, out.size())) {
        return false;
    }
    std::memcpy(out.data(), bytes_.get() + paddr, out.size());
    return true;
}

bool SimPhysMemory::dma_write(std::uint64_t paddr, std::span<const std::uint8_t> in) noexcept {
    if (!is_ram(paddr, in.size())) {
        return false;
    }
    std::memcpy(bytes_.get() + paddr, in.data(), in.size());
    return true;
}

// ---- SimPageTable ----

std::optional<PageTableEntry> SimPageTable::lookup(std::uint64_t page) const {
    auto it = entries_.find(page);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

bool SimPageTable::bijective() const {
    std::vector<std::uint64_t> frames;
    frames.reserve(entries_.size());
    for (const auto& [page, entry] : entries_) {
        frames.push_back(entry.frame);
    }
    std::sort(frames.begin(), frames.end());
    return std::adjacent_find(frames.begin(), frames.end()) == frames.end();
}

void SimPageTable::insert(std::uint64_t page, PageTableEntry entry) {
    if (entries_.count(page) != 0) {
        fail(Errc::TableConflict, "page " + std::to_string(page) + " already mapped");
    }
    if (reverse_.count(entry.frame) != 0) {
        fail(Errc::TableConflict, "frame " + std::to_string(entry.frame) + " already mapped");
    }
    entries_.emplace(page, entry);
    reverse_.emplace(entry.frame, page);
}

PageTableEntry SimPageTable::erase(std::uint64_t page) {
    auto it = entries_.find(page);
    if (it == entries_.end()) {
        fail(Errc::TableConflict, "page " + std::to_string(page) + " not mapped");
    }
    PageTableEntry entry = it->second;
    entries_.erase(it);
    reverse_.erase(entry.frame);
    return entry;
}

void SimPageTable::set_flags(std::uint64_t page, MappingFlags flags) {
    auto it = entries_.find(page);
    if (it == entries_.end()) {
        fail(Errc::TableConflict, "page " + std::to_string(page) + " not mapped");
    }
    it->second.flags = flags;
}

// ---- Allocator ----

Chunk Allocator::carve_out(std::map<std::uint64_t, Chunk>::iterator it, std::uint64_t start, std::uint64_t count) {
    Chunk whole = std::move(it->second);
    free_.erase(it);
    if (start > whole.start()) {
        auto [left, rest] = split_at(std::move(whole), start);
        free_.emplace(left.start(), std::move(left));
        whole = std::move(rest);
    }
    if (whole.end() > start + count - 1) {
        auto [mid, right] = split_at(std::move(whole), start + count);
        free_.emplace(right.start(), std::move(right));
        whole = std::move(mid);
    }
    return whole;
}

Chunk Allocator::allocate(std::uint64_t count, const std::vector<IntervalId>& exclude) {
    if (count == 0) {
        fail(Errc::InvalidArgument, "allocation of zero units");
    }
    for (auto it = free_.begin(); it != free_.end(); ++it) {
        const IntervalId r = it->second.range();
        std::uint64_t pos = r.start;
        while (r.end - pos + 1 >= count && pos <= r.end) {
            const IntervalId want{pos, pos + count - 1};
            auto hit = std::find_if(exclude.begin(), exclude.end(), [&](const IntervalId& e) { return e.overlaps(want); });
            if (hit == exclude.end()) {
                return carve_out(it, pos, count);
            }
            pos = hit->end + 1;
            if (pos == 0 || pos > r.end) {
                break;
            }
        }
    }
    fail(Errc::OutOfResources, "no free run of " + std::to_string(count) + " units");
}

Chunk Allocator::allocate_at(std::uint64_t start, std::uint64_t count) {
    if (count == 0 || start + count < start) {
        fail(Errc::InvalidArgument, "bad fixed allocation");
    }
    const IntervalId want{start, start + count - 1};
    auto it = free_.upper_bound(start);
    if (it != free_.begin()) {
        --it;
        const IntervalId r = it->second.range();
        if (r.start <= want.start && want.end <= r.end) {
            return carve_out(it, start, count);
        }
    }
    fail(Errc::NotFree, want.to_string() + " is not entirely free");
}

void Allocator::insert(Chunk&& chunk) {
    if (chunk.empty()) {
        return;
    }
    const IntervalId r = chunk.range();
    auto next = free_.lower_bound(r.start);
    if (next != free_.end() && next->second.range().overlaps(r)) {
        abort_with("free chunk overlaps an existing free chunk");
    }
    if (next != free_.begin()) {
        auto prev = std::prev(next);
        if (prev->second.range().overlaps(r)) {
            abort_with("free chunk overlaps an existing free chunk");
        }
        if (prev->second.end() + 1 == r.start) {
            chunk = merge(std::move(prev->second), std::move(chunk));
            free_.erase(prev);
        }
    }
    next = free_.lower_bound(chunk.start());
    if (next != free_.end() && chunk.end() + 1 == next->second.start()) {
        chunk = merge(std::move(chunk), std::move(next->second));
        free_.erase(next);
    }
    const std::uint64_t key = chunk.start();
    free_.emplace(key, std::move(chunk));
}

std::vector<IntervalId> Allocator::intervals() const {
    std::vector<IntervalId> out;
    out.reserve(free_.size());
    for (const auto& [start, chunk] : free_) {
        out.push_back(chunk.range());
    }
    return out;
}

std::uint64_t Allocator::free_units() const noexcept {
    std::uint64_t total = 0;
    for (const auto& [start, chunk] : free_) {
        total += chunk.size();
    }
    return total;
}

// ---- MmioWindow ----

MmioWindow::MmioWindow(MmioWindow&& other) noexcept
    : handler_(std::exchange(other.handler_, nullptr)), device_offset_(other.device_offset_),
      size_(std::exchange(other.size_, 0)), paddr_(other.paddr_), book_(std::move(other.book_)),
      record_(other.record_) {}

MmioWindow& MmioWindow::operator=(MmioWindow&& other) noexcept {
    if (this != &other) {
        release();
        handler_ = std::exchange(other.handler_, nullptr);
        device_offset_ = other.device_offset_;
        size_ = std::exchange(other.size_, 0);
        paddr_ = other.paddr_;
        book_ = std::move(other.book_);
        record_ = other.record_;
    }
    return *this;
}

void MmioWindow::check(std::uint64_t offset) const {
    if (handler_ == nullptr) {
        fail(Errc::Consumed, "empty device window");
    }
    if (offset % 4 != 0) {
        fail(Errc::Misaligned, "register offset must be 4-byte aligned");
    }
    if (offset + 4 > size_) {
        fail(Errc::OutOfRange, "register offset outside the window");
    }
}

std::uint32_t MmioWindow::read32(std::uint64_t offset) const {
    check(offset);
    return handler_->mmio_read(device_offset_ + offset);
}

void MmioWindow::write32(std::uint64_t offset, std::uint32_t value) {
    check(offset);
    handler_->mmio_write(device_offset_ + offset, value);
}

void MmioWindow::release() noexcept {
    if (book_) {
        book_->release(record_);
        book_.reset();
    }
    handler_ = nullptr;
    size_ = 0;
}

// ---- MappedPages ----

void TypedPages<Mapped>::check_span(std::uint64_t offset, std::uint64_t len) const {
    if (inner_.empty()) {
        fail(Errc::Consumed, "mapping already released");
    }
    if (offset > size_bytes() || len > size_bytes() - offset) {
        fail(Errc::OutOfBounds, "byte range [" + std::to_string(offset) + ", +" + std::to_string(len) +
                                    ") outside a " + std::to_string(size_bytes()) + "-byte mapping");
    }
}

void TypedPages<Mapped>::read_into(std::uint64_t offset, std::span<std::uint8_t> out) const {
    check_span(offset, out.size());
    if (flags_ == MappingFlags::Device) {
        fail(Errc::WrongMemoryKind, "byte access to a device mapping");
    }
    const MemorySystem& sys = *link_.get();
    std::size_t done = 0;
    while (done < out.size()) {
        const std::uint64_t at = offset + done;
        const std::uint64_t page = inner_.start() + at / kPageSize;
        const std::uint64_t in_page = at % kPageSize;
        const std::size_t n = std::min<std::uint64_t>(out.size() - done, kPageSize - in_page);
        const std::uint64_t frame = sys.page_table().lookup(page)->frame;
        std::memcpy(out.data() + done, sys.phys().bytes() + frame * kPageSize + in_page, n);
        done += n;
    }
}

std::vector<std::uint8_t> TypedPages<Mapped>::read(std::uint64_t offset, std::uint64_t len) const {
    check_span(offset, len);
    std::vector<std::uint8_t> out(len);
    read_into(offset, out);
    return out;
}

void TypedPages<Mapped>::write(std::uint64_t offset, std::span<const std::uint8_t> data) {
    check_span(offset, data.size());
    if (flags_ == MappingFlags::Device) {
        fail(Errc::WrongMemoryKind, "byte access to a device mapping");
    }
    if (flags_ == MappingFlags::ReadOnly) {
        fail(Errc::PermissionDenied, "write through a read-only mapping");
    }
    MemorySystem& sys = *link_.get();
    std::size_t done = 0;
    while (done < data.size()) {
        const std::uint64_t at = offset + done;
        const std::uint64_t page = inner_.start() + at / kPageSize;
        const std::uint64_t in_page = at % kPageSize;
        const std::size_t n = std::min<std::uint64_t>(data.size() - done, kPageSize - in_page);
        const std::uint64_t frame = sys.page_table().lookup(page)->frame;
        std::memcpy(sys.phys().bytes() + frame * kPageSize + in_page, data.data() + done, n);
        done += n;
    }
}

void TypedPages<Mapped>::remap(MappingFlags flags) {
    if (inner_.empty()) {
        fail(Errc::Consumed, "mapping already released");
    }
    if ((flags == MappingFlags::Device) != (flags_ == MappingFlags::Device)) {
        fail(Errc::WrongMemoryKind, "remap cannot change the memory kind");
    }
    link_.get()->remap(inner_.range(), flags);
    flags_ = flags;
}

std::uint64_t TypedPages<Mapped>::physical_address(std::uint64_t offset) const {
    check_span(offset, 1);
    const std::uint64_t page = inner_.start() + offset / kPageSize;
    return link_.get()->page_table().lookup(page)->frame * kPageSize + offset % kPageSize;
}

TypedPages<Mapped>::CarveAddress TypedPages<Mapped>::carve_address(std::uint64_t offset, std::uint64_t size,
                                                                   std::uint64_t align, bool device) {
    if (inner_.empty()) {
        fail(Errc::Consumed, "mapping already released");
    }
    if (!is_pow2(align) || align > kPageSize) {
        fail(Errc::InvalidArgument, "alignment must be a power of two no larger than a page");
    }
    if (size == 0 || offset > size_bytes() || size > size_bytes() - offset) {
        fail(Errc::OutOfRange, "carve [" + std::to_string(offset) + ", +" + std::to_string(size) +
                                   ") outside a " + std::to_string(size_bytes()) + "-byte mapping");
    }
    if (offset % align != 0) {
        fail(Errc::Misaligned, "offset " + std::to_string(offset) + " not aligned to " + std::to_string(align));
    }
    if (device != (flags_ == MappingFlags::Device)) {
        fail(Errc::WrongMemoryKind, device ? "device carve from a RAM mapping" : "RAM carve from a device mapping");
    }
    if (!device && flags_ != MappingFlags::ReadWrite) {
        fail(Errc::PermissionDenied, "carve from a read-only mapping");
    }
    const IntervalId bytes{offset, offset + size - 1};
    for (const auto& [id, prior] : book_->records) {
        if (prior.overlaps(bytes)) {
            fail(Errc::OverlapsPriorCarve, bytes.to_string() + " overlaps carve " + prior.to_string());
        }
    }
    const SimPageTable& table = link_.get()->page_table();
    const std::uint64_t first = inner_.start() + bytes.start / kPageSize;
    const std::uint64_t last = inner_.start() + bytes.end / kPageSize;
    const std::uint64_t base_frame = table.lookup(first)->frame;
    for (std::uint64_t p = first + 1; p <= last; ++p) {
        if (table.lookup(p)->frame != base_frame + (p - first)) {
            fail(Errc::Discontiguous, "carve spans physically discontiguous frames");
        }
    }
    const std::uint64_t record = book_->next_id++;
    book_->records.emplace_back(record, bytes);
    return {base_frame * kPageSize + offset % kPageSize, record};
}

MmioWindow TypedPages<Mapped>::carve_mmio(std::uint64_t offset, std::uint64_t size) {
    const CarveAddress at = carve_address(offset, size, 4, true);
    const auto hit = link_.get()->phys().mmio_at(at.paddr);
    if (!hit || !link_.get()->phys().mmio_at(at.paddr + size - 1)) {
        book_->release(at.record);
        fail(Errc::WrongMemoryKind, "device carve outside an attached window");
    }
    return MmioWindow(hit->handler, hit->offset, size, at.paddr, book_, at.record);
}

std::vector<IntervalId> TypedPages<Mapped>::carve_records() const {
    std::vector<IntervalId> out;
    if (book_) {
        for (const auto& [id, bytes] : book_->records) {
            out.push_back(bytes);
        }
    }
    return out;
}

void TypedPages<Mapped>::drop() noexcept {
    if (inner_.empty()) {
        return;
    }
    if (book_ && book_.use_count() > 1) {
        abort_with("mapped pages released while carved views are still alive");
    }
    MemorySystem* sys = link_.get();
    for (const IntervalId& run : sys->unmap(inner_.range())) {
        TypedFrames<Unmapped> frames(sys, detail::ChunkForge::rebuild(run));
    }
    TypedPages<Unmapped> pages(sys, std::move(inner_));
}

// ---- MemorySystem ----

MemorySystem::MemorySystem(ChunkCreator& frame_creator, ChunkCreator& page_creator, std::uint64_t num_frames,
                           std::uint64_t num_pages)
    : num_frames_(num_frames), num_pages_(num_pages), phys_(num_frames == 0 ? 1 : num_frames) {
    if (num_frames == 0 || num_pages == 0) {
        fail(Errc::InvalidArgument, "memory system needs at least one frame and one page");
    }
    frames_.insert(frame_creator.create_unique_representation(IntervalId{0, num_frames - 1}));
    pages_.insert(page_creator.create_unique_representation(IntervalId{0, num_pages - 1}));
}

MemorySystem::~MemorySystem() {
    if (live_ != 0) {
        std::fprintf(stderr, "irs::mem fatal: %zu representations outlive their memory system\n", live_);
        std::abort();
    }
}

std::vector<IntervalId> MemorySystem::mmio_frames() const {
    std::vector<IntervalId> out;
    IntervalId run = IntervalId::empty_range();
    for (std::uint64_t f = 0; f < num_frames_; ++f) {
        if (phys_.is_mmio_frame(f)) {
            if (run.empty()) {
                run = {f, f};
            } else {
                run.end = f;
            }
        } else if (!run.empty()) {
            out.push_back(run);
            run = IntervalId::empty_range();
        }
    }
    if (!run.empty()) {
        out.push_back(run);
    }
    return out;
}

TypedFrames<Allocated> MemorySystem::allocate_frames(std::uint64_t count) {
    return TypedFrames<Allocated>(this, frames_.allocate(count, mmio_frames()));
}

TypedFrames<Allocated> MemorySystem::allocate_frames_at(std::uint64_t start, std::uint64_t count) {
    return TypedFrames<Allocated>(this, frames_.allocate_at(start, count));
}

TypedPages<Allocated> MemorySystem::allocate_pages(std::uint64_t count) {
    return TypedPages<Allocated>(this, pages_.allocate(count));
}

TypedPages<Allocated> MemorySystem::allocate_pages_at(std::uint64_t start, std::uint64_t count) {
    return TypedPages<Allocated>(this, pages_.allocate_at(start, count));
}

void MemorySystem::check_frame_kind(const IntervalId& frames, MappingFlags flags) const {
    for (std::uint64_t f = frames.start; f <= frames.end; ++f) {
        if (phys_.is_mmio_frame(f) != (flags == MappingFlags::Device)) {
            fail(Errc::WrongMemoryKind, "frame " + std::to_string(f) + " kind does not match mapping flags " +
                                            to_string(flags));
        }
    }
}

TypedPages<Mapped> MemorySystem::map(TypedPages<Allocated>&& pages, TypedFrames<Allocated>&& frames,
                                     MappingFlags flags) {
    std::vector<TypedFrames<Allocated>> one;
    one.push_back(std::move(frames));
    try {
        return map_scattered(std::move(pages), std::move(one), flags);
    } catch (...) {
        frames = std::move(one.front());
        throw;
    }
}

TypedPages<Mapped> MemorySystem::map_scattered(TypedPages<Allocated>&& pages,
                                               std::vector<TypedFrames<Allocated>>&& frames, MappingFlags flags) {
    if (pages.empty() || frames.empty()) {
        fail(Errc::Consumed, "map of an empty representation");
    }
    std::uint64_t total = 0;
    for (const auto& f : frames) {
        if (f.empty()) {
            fail(Errc::Consumed, "map of an empty frame representation");
        }
        total += f.count();
    }
    if (total != pages.count()) {
        fail(Errc::LengthMismatch, std::to_string(pages.count()) + " pages vs " + std::to_string(total) + " frames");
    }
    for (const auto& f : frames) {
        check_frame_kind(f.range(), flags);
    }
    // Validate every entry before touching the table so failure leaves it unchanged.
    {
        std::uint64_t page = pages.range().start;
        for (const auto& f : frames) {
            for (std::uint64_t fr = f.range().start; fr <= f.range().end; ++fr, ++page) {
                if (table_.lookup(page) || table_.frame_mapped(fr)) {
                    fail(Errc::TableConflict, "page " + std::to_string(page) + " or frame " + std::to_string(fr) +
                                                  " already present");
                }
            }
        }
    }
    std::uint64_t page = pages.range().start;
    for (auto& f : frames) {
        for (std::uint64_t fr = f.range().start; fr <= f.range().end; ++fr, ++page) {
            table_.insert(page, {fr, flags});
        }
        // Forget the frames: the table is now their only record.
        Chunk forgotten = std::move(f.inner_);
        f.link_ = detail::SystemLink();
        (void)forgotten;
    }
    frames.clear();
    TypedPages<Mapped> mapped(this, std::move(pages.inner_), flags);
    pages.link_ = detail::SystemLink();
    return mapped;
}

TypedPages<Mapped> MemorySystem::map_new(std::uint64_t count, MappingFlags flags) {
    auto pages = allocate_pages(count);
    auto frames = allocate_frames(count);
    return map(std::move(pages), std::move(frames), flags);
}

void MemorySystem::release_pages(Chunk&& chunk) noexcept { pages_.insert(std::move(chunk)); }

void MemorySystem::release_frames(Chunk&& chunk) noexcept { frames_.insert(std::move(chunk)); }

std::vector<IntervalId> MemorySystem::unmap(const IntervalId& pages) noexcept {
    std::vector<std::uint64_t> frames;
    frames.reserve(pages.size());
    for (std::uint64_t p = pages.start; p <= pages.end; ++p) {
        auto it = table_.entries_.find(p);
        if (it == table_.entries_.end()) {
            abort_with("mapped page has no table entry");
        }
        frames.push_back(table_.erase(p).frame);
    }
    std::sort(frames.begin(), frames.end());
    std::vector<IntervalId> runs;
    for (std::uint64_t f : frames) {
        if (!runs.empty() && runs.back().end + 1 == f) {
            runs.back().end = f;
        } else {
            runs.push_back({f, f});
        }
    }
    return runs;
}

void MemorySystem::remap(const IntervalId& pages, MappingFlags flags) {
    for (std::uint64_t p = pages.start; p <= pages.end; ++p) {
        table_.set_flags(p, flags);
    }
}

} // namespace irs::mem
