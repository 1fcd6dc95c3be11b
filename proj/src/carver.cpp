#include "heifsleuth/carver.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace heifsleuth {

std::string carve_stop_name(CarveStop s) {
    switch (s) {
        case CarveStop::CleanEnd: return "clean_end";
        case CarveStop::InvalidBox: return "invalid_box";
        case CarveStop::ScopeExhausted: return "scope_exhausted";
    }
    return "clean_end";
}

namespace {

struct WalkOutcome {
    uint64_t end = 0;
    uint32_t boxes = 0;
    CarveStop stop = CarveStop::CleanEnd;
    bool open_ended = false;  // hit a size-0 box
};

// Walks the box chain from `start`. Printable fourccs are accepted as
// box names, but a box may only run to the blob end (size 0) or overrun
// it (truncation) when its fourcc is a known ISOBMFF/HEIF name —
// otherwise random printable bytes routinely swallow the rest of a disk
// image and mask every later candidate.
WalkOutcome walk_chain(ByteSpan blob, uint64_t start) {
    WalkOutcome w;
    uint64_t pos = start;
    const uint64_t blob_end = blob.size();
    while (true) {
        if (pos == blob_end) {
            w.end = pos;
            w.stop = CarveStop::CleanEnd;
            return w;
        }
        if (blob_end - pos < 8) {
            w.end = pos;
            w.stop = CarveStop::InvalidBox;
            return w;
        }
        uint64_t size = read_u32be(blob, pos);
        FourCC cc(read_u32be(blob, pos + 4));
        if (!cc.printable() && !is_known_box(cc)) {
            w.end = pos;
            w.stop = pos == start ? CarveStop::InvalidBox : CarveStop::CleanEnd;
            return w;
        }
        uint64_t header_len = 8;
        if (size == 0) {
            if (!is_known_box(cc)) {
                w.end = pos;
                w.stop = CarveStop::InvalidBox;
                return w;
            }
            ++w.boxes;
            w.end = blob_end;
            w.stop = CarveStop::CleanEnd;
            w.open_ended = true;
            return w;
        }
        if (size == 1) {
            if (blob_end - pos < 16) {
                w.end = pos;
                w.stop = CarveStop::InvalidBox;
                return w;
            }
            size = read_u64be(blob, pos + 8);
            header_len = 16;
        }
        if (size < header_len) {
            w.end = pos;
            w.stop = CarveStop::InvalidBox;
            return w;
        }
        if (pos + size > blob_end || pos + size < pos) {
            if (is_known_box(cc)) {
                // plausible truncated file (e.g. mdat cut short)
                ++w.boxes;
                w.end = blob_end;
                w.stop = CarveStop::ScopeExhausted;
            } else {
                w.end = pos;
                w.stop = CarveStop::InvalidBox;
            }
            return w;
        }
        ++w.boxes;
        pos += size;
    }
}

bool has_pict_meta(ByteSpan blob, const CarveCandidate& c) {
    if (c.end <= c.start) return false;
    BoxTree tree = parse_tree(blob.subspan(c.start, c.end - c.start));
    const BoxNode* meta = tree.find_root(FourCC("meta"));
    if (!meta) return false;
    const BoxNode* hdlr = meta->find_child(FourCC("hdlr"));
    if (!hdlr || hdlr->header.payload_span.length() < 12) return false;
    return FourCC(read_u32be(blob, c.start + hdlr->header.payload_span.start + 8)) == FourCC("pict");
}

}  // namespace

ScanResult scan(ByteSpan blob) {
    ScanResult result;
    if (blob.size() < 12) return result;

    static const uint8_t kSig[4] = {'f', 't', 'y', 'p'};
    std::vector<CarveCandidate> heif_hits;

    const uint8_t* base = blob.data();
    const uint8_t* cursor = base + 4;  // 'ftyp' needs 4 size bytes before it
    const uint8_t* blob_end_ptr = base + blob.size();
    while (cursor + 4 <= blob_end_ptr) {
        const uint8_t* hit = static_cast<const uint8_t*>(
            memmem(cursor, static_cast<size_t>(blob_end_ptr - cursor), kSig, 4));
        if (!hit) break;
        uint64_t sig_off = static_cast<uint64_t>(hit - base);
        cursor = hit + 1;
        if (sig_off < 4) continue;
        uint64_t start = sig_off - 4;

        uint64_t ftyp_size = read_u32be(blob, start);
        if (ftyp_size < 16 || ftyp_size % 4 != 0 || start + ftyp_size > blob.size()) continue;

        CarveCandidate cand;
        cand.start = start;
        cand.brands.major = FourCC(read_u32be(blob, start + 8));
        cand.brands.minor_version = read_u32be(blob, start + 12);
        for (uint64_t off = start + 16; off + 4 <= start + ftyp_size; off += 4)
            cand.brands.compatible.push_back(FourCC(read_u32be(blob, off)));
        if (!cand.brands.major.printable()) continue;
        cand.kind = classify_brands(cand.brands);

        WalkOutcome w = walk_chain(blob, start);
        if (w.boxes == 0) continue;
        cand.end = w.end;
        cand.boxes_walked = w.boxes;
        cand.stop_reason = w.stop;

        bool brand_known = cand.kind != HeifKind::NotHeif;
        cand.score = 0.0;
        if (brand_known) cand.score += 0.4;
        if (has_pict_meta(blob, cand)) cand.score += 0.3;
        if (cand.boxes_walked >= 3) cand.score += 0.2;
        if (cand.stop_reason == CarveStop::CleanEnd) cand.score += 0.1;
        if (w.open_ended) cand.score = std::min(cand.score, 0.8);

        if (brand_known)
            heif_hits.push_back(std::move(cand));
        else
            result.non_heif.push_back(std::move(cand));
    }

    // Greedy overlap suppression: keep the higher score, ties to the lower start.
    std::vector<size_t> order(heif_hits.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (heif_hits[a].score != heif_hits[b].score) return heif_hits[a].score > heif_hits[b].score;
        return heif_hits[a].start < heif_hits[b].start;
    });
    std::vector<bool> kept_mask(heif_hits.size(), false);
    std::vector<ByteRange> kept_ranges;
    for (size_t idx : order) {
        ByteRange r{heif_hits[idx].start, heif_hits[idx].end};
        bool clash = std::any_of(kept_ranges.begin(), kept_ranges.end(),
                                 [&](const ByteRange& k) { return k.overlaps(r); });
        if (!clash) {
            kept_mask[idx] = true;
            kept_ranges.push_back(r);
        }
    }
    for (size_t i = 0; i < heif_hits.size(); ++i)
        if (kept_mask[i]) result.heif.push_back(std::move(heif_hits[i]));
    return result;
}

uint64_t extract(ByteSpan blob, const CarveCandidate& candidate, const std::string& destination) {
    if (candidate.end > blob.size() || candidate.start >= candidate.end)
        throw std::runtime_error("candidate range does not fit the blob");
    std::ofstream out(destination, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + destination + "' for writing");
    out.write(reinterpret_cast<const char*>(blob.data() + candidate.start),
              static_cast<std::streamsize>(candidate.end - candidate.start));
    if (!out) throw std::runtime_error("write to '" + destination + "' failed");
    return candidate.end - candidate.start;
}

}  // namespace heifsleuth
