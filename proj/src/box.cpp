#include "heifsleuth/box.hpp"

#include <algorithm>
#include <array>

namespace heifsleuth {

namespace {

constexpr int kMaxDepth = 32;

std::string hex_byte(uint8_t b) {
    static const char* digits = "0123456789abcdef";
    return std::string("\\x") + digits[b >> 4] + digits[b & 0xf];
}

}  // namespace

bool FourCC::printable() const {
    for (int i = 0; i < 4; ++i)
        if (bytes_[i] < 0x20 || bytes_[i] > 0x7e) return false;
    return true;
}

std::string FourCC::str() const {
    std::string s;
    for (int i = 0; i < 4; ++i) {
        uint8_t b = bytes_[i];
        if (b >= 0x20 && b <= 0x7e)
            s.push_back(static_cast<char>(b));
        else
            s += hex_byte(b);
    }
    return s;
}

std::string diag_code_name(DiagCode code) {
    switch (code) {
        case DiagCode::TruncatedBox: return "TruncatedBox";
        case DiagCode::SizeOverflow: return "SizeOverflow";
        case DiagCode::EmptyInput: return "EmptyInput";
        case DiagCode::NotABox: return "NotABox";
        case DiagCode::DepthLimit: return "DepthLimit";
        case DiagCode::TruncatedEntry: return "TruncatedEntry";
        case DiagCode::BadFieldWidth: return "BadFieldWidth";
        case DiagCode::ExtentOutOfFile: return "ExtentOutOfFile";
        case DiagCode::DanglingReference: return "DanglingReference";
        case DiagCode::EmptyDref: return "EmptyDref";
        case DiagCode::BadPropertyIndex: return "BadPropertyIndex";
        case DiagCode::UnusualVersion: return "UnusualVersion";
        case DiagCode::MissingFtyp: return "MissingFtyp";
        case DiagCode::MissingHandler: return "MissingHandler";
        case DiagCode::OverlappingChild: return "OverlappingChild";
    }
    return "Unknown";
}

bool is_container_box(FourCC cc) {
    static const std::array<FourCC, 12> containers = {
        FourCC("meta"), FourCC("iinf"), FourCC("iprp"), FourCC("ipco"),
        FourCC("iref"), FourCC("dinf"), FourCC("moov"), FourCC("trak"),
        FourCC("mdia"), FourCC("minf"), FourCC("stbl"), FourCC("edts"),
    };
    return std::find(containers.begin(), containers.end(), cc) != containers.end();
}

bool is_full_box(FourCC cc) {
    static const std::array<FourCC, 17> full = {
        FourCC("meta"), FourCC("hdlr"), FourCC("pitm"), FourCC("iloc"),
        FourCC("iinf"), FourCC("infe"), FourCC("iref"), FourCC("tkhd"),
        FourCC("dref"), FourCC("url "), FourCC("urn "), FourCC("ipma"),
        FourCC("ispe"), FourCC("pixi"), FourCC("auxC"), FourCC("mvhd"),
        FourCC("mdhd"),
    };
    return std::find(full.begin(), full.end(), cc) != full.end();
}

bool is_known_box(FourCC cc) {
    static const std::array<FourCC, 30> known = {
        FourCC("ftyp"), FourCC("meta"), FourCC("mdat"), FourCC("idat"),
        FourCC("moov"), FourCC("free"), FourCC("skip"), FourCC("uuid"),
        FourCC("hdlr"), FourCC("pitm"), FourCC("iloc"), FourCC("iinf"),
        FourCC("infe"), FourCC("iref"), FourCC("iprp"), FourCC("ipco"),
        FourCC("ipma"), FourCC("dinf"), FourCC("dref"), FourCC("trak"),
        FourCC("tkhd"), FourCC("mdia"), FourCC("minf"), FourCC("stbl"),
        FourCC("edts"), FourCC("mvhd"), FourCC("mdhd"), FourCC("ispe"),
        FourCC("pixi"), FourCC("auxC"),
    };
    return std::find(known.begin(), known.end(), cc) != known.end();
}

HeaderParseResult parse_box_header(ByteSpan data, uint64_t offset, uint64_t scope_end) {
    HeaderParseResult res;
    if (scope_end > data.size()) scope_end = data.size();
    if (offset + 8 > scope_end) {
        res.status = HeaderParseStatus::TruncatedBox;
        return res;
    }

    BoxHeader h;
    h.offset = offset;
    h.declared_size = read_u32be(data, offset);
    h.fourcc = FourCC(read_u32be(data, offset + 4));
    h.header_len = 8;

    uint64_t size = h.declared_size;
    if (h.declared_size == 1) {
        if (offset + 16 > scope_end) {
            res.status = HeaderParseStatus::TruncatedBox;
            return res;
        }
        size = read_u64be(data, offset + 8);
        h.header_len = 16;
    }
    if (h.fourcc == FourCC("uuid")) {
        h.header_len += 16;
    }

    uint64_t box_end;
    if (h.declared_size == 0) {
        box_end = scope_end;
    } else {
        if (size < h.header_len || offset + size > scope_end || offset + size < offset) {
            res.status = HeaderParseStatus::SizeOverflow;
            res.header = h;
            return res;
        }
        box_end = offset + size;
    }
    if (offset + h.header_len > box_end) {
        res.status = HeaderParseStatus::TruncatedBox;
        return res;
    }
    h.payload_span = {offset + h.header_len, box_end};
    res.header = h;
    return res;
}

namespace {

// Skips the non-box prefix a container carries before its first child:
// meta/iinf/iref are full boxes, iinf and dref additionally lead with an
// entry count. Returns the offset where child boxes begin.
uint64_t child_scan_start(const BoxNode& node) {
    uint64_t start = node.header.payload_span.start;
    FourCC cc = node.header.fourcc;
    if (node.full) {
        start += 4;
        if (cc == FourCC("iinf")) start += node.full->version == 0 ? 2 : 4;
    }
    return std::min(start, node.header.payload_span.end);
}

void parse_children(BoxNode& parent, ByteSpan data, std::vector<Diagnostic>& diags, int depth) {
    uint64_t scope_end = parent.header.payload_span.end;
    uint64_t pos = child_scan_start(parent);

    if (depth >= kMaxDepth) {
        diags.push_back({DiagCode::DepthLimit, parent.header.offset,
                         "recursion depth cap reached inside '" + parent.header.fourcc.str() + "'"});
        parent.raw_payload_span = parent.header.payload_span;
        return;
    }

    uint64_t consumed_end = pos;
    while (pos + 8 <= scope_end) {
        auto res = parse_box_header(data, pos, scope_end);
        if (res.status == HeaderParseStatus::TruncatedBox) {
            diags.push_back({DiagCode::TruncatedBox, pos,
                             "truncated box inside '" + parent.header.fourcc.str() + "'"});
            break;
        }
        if (res.status == HeaderParseStatus::SizeOverflow) {
            diags.push_back({DiagCode::SizeOverflow, pos,
                             "box '" + res.header.fourcc.str() + "' size overruns enclosing scope"});
            break;
        }
        BoxNode child;
        child.header = res.header;
        if (is_full_box(child.header.fourcc) && child.header.payload_span.length() >= 4) {
            FullBoxHeader fb;
            fb.version = data[child.header.payload_span.start];
            fb.flags = read_u32be(data, child.header.payload_span.start) & 0xffffff;
            child.full = fb;
        }
        if (is_container_box(child.header.fourcc)) {
            parse_children(child, data, diags, depth + 1);
        } else {
            child.raw_payload_span = child.header.payload_span;
        }
        uint64_t next = child.header.end();
        bool zero_size = child.header.declared_size == 0;
        if (next <= pos) break;  // progress guarantee
        parent.children.push_back(std::move(child));
        pos = next;
        consumed_end = next;
        if (zero_size) break;  // zero size consumes the scope
    }
    // Raw remainder: bytes between the prefix end / last child end and scope end.
    if (!parent.children.empty()) {
        parent.raw_payload_span = {consumed_end, scope_end};
    } else {
        parent.raw_payload_span = parent.header.payload_span;
    }
}

}  // namespace

BoxTree parse_tree(ByteSpan data) {
    BoxTree tree;
    tree.file_len = data.size();
    if (data.size() < 8) {
        tree.fatal = true;
        tree.diagnostics.push_back(
            {data.empty() ? DiagCode::EmptyInput : DiagCode::NotABox, 0,
             data.empty() ? "empty input" : "fewer than 8 bytes; no box can be formed"});
        return tree;
    }

    uint64_t pos = 0;
    const uint64_t scope_end = data.size();
    bool first = true;
    while (pos + 8 <= scope_end) {
        auto res = parse_box_header(data, pos, scope_end);
        if (res.status != HeaderParseStatus::Ok) {
            if (first) {
                tree.fatal = true;
                tree.diagnostics.push_back({DiagCode::NotABox, pos, "first 8 bytes cannot form a box"});
            } else if (res.status == HeaderParseStatus::SizeOverflow) {
                tree.diagnostics.push_back({DiagCode::SizeOverflow, pos,
                                            "box '" + res.header.fourcc.str() +
                                                "' size overruns end of file"});
            } else {
                tree.diagnostics.push_back({DiagCode::TruncatedBox, pos, "truncated top-level box"});
            }
            break;
        }
        BoxNode node;
        node.header = res.header;
        if (is_full_box(node.header.fourcc) && node.header.payload_span.length() >= 4) {
            FullBoxHeader fb;
            fb.version = data[node.header.payload_span.start];
            fb.flags = read_u32be(data, node.header.payload_span.start) & 0xffffff;
            node.full = fb;
        }
        if (is_container_box(node.header.fourcc)) {
            parse_children(node, data, tree.diagnostics, 1);
        } else {
            node.raw_payload_span = node.header.payload_span;
        }
        bool zero_size = node.header.declared_size == 0;
        uint64_t next = node.header.end();
        tree.roots.push_back(std::move(node));
        first = false;
        if (zero_size || next <= pos) break;
        pos = next;
    }
    return tree;
}

std::vector<ByteRange> CoverageMap::unreferenced() const {
    std::vector<ByteRange> gaps;
    uint64_t cursor = 0;
    for (const auto& e : accounted) {
        if (e.range.start > cursor) gaps.push_back({cursor, e.range.start});
        cursor = std::max(cursor, e.range.end);
    }
    if (cursor < file_len) gaps.push_back({cursor, file_len});
    return gaps;
}

uint64_t CoverageMap::unreferenced_bytes() const {
    uint64_t total = 0;
    for (const auto& g : unreferenced()) total += g.length();
    return total;
}

namespace {

// mdat and idat payloads are opaque data pools; their bytes are accounted
// only where an item extent claims them.
bool is_data_pool(FourCC cc) { return cc == FourCC("mdat") || cc == FourCC("idat"); }

void collect_spans(const BoxNode& node, std::vector<CoverageEntry>& out) {
    out.push_back({{node.header.offset, node.header.payload_span.start}, CoverageLabel::BoxHeader});
    if (is_data_pool(node.header.fourcc)) return;
    if (node.children.empty()) {
        if (!node.header.payload_span.empty())
            out.push_back({node.header.payload_span, CoverageLabel::BoxPayload});
        return;
    }
    // container prefix + inter-child gaps + remainder count as payload
    uint64_t cursor = node.header.payload_span.start;
    for (const auto& c : node.children) {
        if (c.header.offset > cursor)
            out.push_back({{cursor, c.header.offset}, CoverageLabel::BoxPayload});
        collect_spans(c, out);
        cursor = c.header.end();
    }
    if (cursor < node.header.payload_span.end)
        out.push_back({{cursor, node.header.payload_span.end}, CoverageLabel::BoxPayload});
}

}  // namespace

CoverageMap compute_coverage(const BoxTree& tree, const std::vector<ByteRange>& item_extents) {
    CoverageMap map;
    map.file_len = tree.file_len;

    std::vector<CoverageEntry> entries;
    for (const auto& r : tree.roots) collect_spans(r, entries);
    for (const auto& ext : item_extents) {
        if (ext.empty()) continue;
        ByteRange clipped = ext;
        clipped.end = std::min(clipped.end, tree.file_len);
        if (!clipped.empty()) entries.push_back({clipped, CoverageLabel::ItemExtent});
    }

    std::sort(entries.begin(), entries.end(), [](const CoverageEntry& a, const CoverageEntry& b) {
        if (a.range.start != b.range.start) return a.range.start < b.range.start;
        return a.range.end > b.range.end;
    });

    // merge overlaps, first label wins
    for (const auto& e : entries) {
        if (!map.accounted.empty() && e.range.start <= map.accounted.back().range.end) {
            map.accounted.back().range.end = std::max(map.accounted.back().range.end, e.range.end);
        } else {
            map.accounted.push_back(e);
        }
    }
    return map;
}

}  // namespace heifsleuth
