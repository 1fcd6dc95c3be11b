#ifndef HEIFSLEUTH_BOX_HPP
#define HEIFSLEUTH_BOX_HPP

#include <optional>
#include <string>
#include <vector>

#include "heifsleuth/bytes.hpp"

namespace heifsleuth {

// Four-character box/brand/item-type code. Always exactly 4 bytes;
// non-printable bytes render as \xNN escapes, never dropped.
class FourCC {
public:
    FourCC() : bytes_{0, 0, 0, 0} {}
    FourCC(char a, char b, char c, char d)
        : bytes_{static_cast<uint8_t>(a), static_cast<uint8_t>(b), static_cast<uint8_t>(c),
                 static_cast<uint8_t>(d)} {}
    explicit FourCC(uint32_t packed)
        : bytes_{static_cast<uint8_t>(packed >> 24), static_cast<uint8_t>(packed >> 16),
                 static_cast<uint8_t>(packed >> 8), static_cast<uint8_t>(packed)} {}
    // Expects a 4-character literal like "ftyp".
    explicit FourCC(const char* s)
        : FourCC(s[0], s[1], s[2], s[3]) {}

    uint32_t packed() const {
        return static_cast<uint32_t>(bytes_[0]) << 24 | static_cast<uint32_t>(bytes_[1]) << 16 |
               static_cast<uint32_t>(bytes_[2]) << 8 | bytes_[3];
    }
    uint8_t byte(int i) const { return bytes_[i]; }
    bool printable() const;
    std::string str() const;

    bool operator==(const FourCC&) const = default;
    auto operator<=>(const FourCC&) const = default;

private:
    uint8_t bytes_[4];
};

struct BoxHeader {
    uint64_t offset = 0;         // absolute offset of the size field
    uint64_t declared_size = 0;  // 0 = extends to end of enclosing scope
    FourCC fourcc;
    uint32_t header_len = 8;  // 8, 16 (largesize) and +16 for uuid
    ByteRange payload_span;   // [offset + header_len, box end)

    uint64_t end() const { return payload_span.end; }
};

struct FullBoxHeader {
    uint8_t version = 0;
    uint32_t flags = 0;  // 24-bit
};

enum class DiagCode {
    TruncatedBox,
    SizeOverflow,
    EmptyInput,
    NotABox,
    DepthLimit,
    TruncatedEntry,
    BadFieldWidth,
    ExtentOutOfFile,
    DanglingReference,
    EmptyDref,
    BadPropertyIndex,
    UnusualVersion,
    MissingFtyp,
    MissingHandler,
    OverlappingChild,
};

struct Diagnostic {
    DiagCode code;
    uint64_t offset = 0;
    std::string message;
};

std::string diag_code_name(DiagCode code);

struct BoxNode {
    BoxHeader header;
    std::optional<FullBoxHeader> full;
    std::vector<BoxNode> children;
    // Payload bytes not consumed by child boxes (containers may have a
    // trailing remainder after the last child; leaves own their whole payload).
    ByteRange raw_payload_span;

    const BoxNode* find_child(FourCC cc) const {
        for (const auto& c : children)
            if (c.header.fourcc == cc) return &c;
        return nullptr;
    }
};

struct BoxTree {
    std::vector<BoxNode> roots;
    std::vector<Diagnostic> diagnostics;
    uint64_t file_len = 0;
    bool fatal = false;  // first 8 bytes could not form any box

    const BoxNode* find_root(FourCC cc) const {
        for (const auto& r : roots)
            if (r.header.fourcc == cc) return &r;
        return nullptr;
    }
};

// One entry of a coverage map: a claimed byte range and what claims it.
enum class CoverageLabel { BoxHeader, BoxPayload, ItemExtent };

struct CoverageEntry {
    ByteRange range;
    CoverageLabel label;
};

struct CoverageMap {
    uint64_t file_len = 0;
    std::vector<CoverageEntry> accounted;  // disjoint, sorted by start

    std::vector<ByteRange> unreferenced() const;
    uint64_t unreferenced_bytes() const;
};

enum class HeaderParseStatus { Ok, TruncatedBox, SizeOverflow };

struct HeaderParseResult {
    HeaderParseStatus status = HeaderParseStatus::Ok;
    BoxHeader header;
};

// Reads one box header at `offset`. declared_size==1 pulls the 64-bit
// largesize; declared_size==0 resolves the payload to scope_end. The
// zero-size-must-be-last rule is checked by parse_tree, not here.
HeaderParseResult parse_box_header(ByteSpan data, uint64_t offset, uint64_t scope_end);

// Parses the whole stream into a box tree. Damage is collected as
// per-node diagnostics; only an input whose first 8 bytes cannot form a
// box is fatal. Recursion is limited to a fixed container whitelist and
// a depth cap of 32.
BoxTree parse_tree(ByteSpan data);

bool is_container_box(FourCC cc);
bool is_full_box(FourCC cc);
// Known ISOBMFF/HEIF box names, used by the carver when deciding whether
// a box may legitimately run to the end of its scope.
bool is_known_box(FourCC cc);

// Item extents (absolute, already resolved) claimed by iloc; pass what
// heif_semantics resolved. mdat/idat payload bytes count as referenced
// only where an item extent claims them.
CoverageMap compute_coverage(const BoxTree& tree, const std::vector<ByteRange>& item_extents);

}  // namespace heifsleuth

#endif
