#include "heifsleuth/model.hpp"

#include <algorithm>

namespace heifsleuth {

std::string heif_kind_name(HeifKind kind) {
    switch (kind) {
        case HeifKind::NotHeif: return "not-heif";
        case HeifKind::StillAnyCodec: return "still-any-codec";
        case HeifKind::SequenceAnyCodec: return "sequence-any-codec";
        case HeifKind::StillHEVC: return "still-hevc";
        case HeifKind::SequenceHEVC: return "sequence-hevc";
    }
    return "not-heif";
}

bool is_still_kind(HeifKind kind) {
    return kind == HeifKind::StillAnyCodec || kind == HeifKind::StillHEVC;
}

namespace {

HeifKind kind_of_brand(FourCC b) {
    if (b == FourCC("heic") || b == FourCC("heix")) return HeifKind::StillHEVC;
    if (b == FourCC("hevc") || b == FourCC("hevx")) return HeifKind::SequenceHEVC;
    if (b == FourCC("mif1")) return HeifKind::StillAnyCodec;
    if (b == FourCC("msf1")) return HeifKind::SequenceAnyCodec;
    return HeifKind::NotHeif;
}

Brands parse_ftyp(ByteSpan data, const BoxHeader& h) {
    Brands brands;
    ByteReader r(data, h.payload_span.start, h.payload_span.end);
    brands.major = FourCC(r.u32());
    brands.minor_version = r.u32();
    while (r.remaining() >= 4) brands.compatible.push_back(FourCC(r.u32()));
    return brands;
}

}  // namespace

HeifKind classify_brands(const Brands& brands) {
    HeifKind k = kind_of_brand(brands.major);
    if (k != HeifKind::NotHeif) return k;
    for (auto& b : brands.compatible) {
        k = kind_of_brand(b);
        if (k != HeifKind::NotHeif) return k;
    }
    return HeifKind::NotHeif;
}

std::pair<HeifKind, Brands> detect_heif(ByteSpan data) {
    auto res = parse_box_header(data, 0, data.size());
    if (res.status != HeaderParseStatus::Ok || res.header.fourcc != FourCC("ftyp"))
        return {HeifKind::NotHeif, {}};
    Brands brands = parse_ftyp(data, res.header);
    return {classify_brands(brands), brands};
}

namespace {

// --- per-box parsers; each appends to the model ---

void parse_hdlr(const BoxNode& box, ByteSpan data, FourCC& out) {
    // fullbox(4) + pre_defined(4) + handler_type(4)
    ByteReader r(data, box.header.payload_span.start, box.header.payload_span.end);
    r.skip(4);
    r.skip(4);
    out = FourCC(r.u32());
}

void parse_pitm(const BoxNode& box, ByteSpan data, FileModel& m) {
    ByteReader r(data, box.header.payload_span.start, box.header.payload_span.end);
    r.skip(4);
    uint8_t version = box.full ? box.full->version : 0;
    m.primary_item = version == 0 ? r.u16() : r.u32();
}

void parse_infe(const BoxNode& box, ByteSpan data, FileModel& m) {
    ItemRecord item;
    uint64_t start = box.header.payload_span.start;
    item.infe_version = box.full ? box.full->version : 0;
    item.infe_flags = box.full ? box.full->flags : 0;
    item.infe_flags_offset = start + 1;
    item.hidden = (item.infe_flags & 0x1) != 0;
    if (item.infe_version > 3)
        m.diagnostics.push_back({DiagCode::UnusualVersion, box.header.offset,
                                 "infe version " + std::to_string(item.infe_version) +
                                     " outside 0..3; best-effort parse"});

    ByteReader r(data, start, box.header.payload_span.end);
    r.skip(4);
    if (item.infe_version <= 1) {
        item.item_id = r.u16();
        r.skip(2);  // item_protection_index
        item.name = r.cstring();
        if (r.remaining() > 0) item.content_type = r.cstring();
    } else {
        item.item_id = item.infe_version == 2 ? r.u16() : r.u32();
        r.skip(2);  // item_protection_index
        item.item_type = FourCC(r.u32());
        item.name = r.cstring();
        if (item.item_type == FourCC("mime")) {
            item.content_type = r.cstring();
        }
    }
    if (r.truncated())
        m.diagnostics.push_back({DiagCode::TruncatedEntry, box.header.offset, "truncated infe entry"});
    m.items.push_back(std::move(item));
}

struct RawLocation {
    uint32_t item_id = 0;
    uint8_t construction_method = 0;
    uint16_t data_reference_index = 0;
    uint64_t base_offset = 0;
    std::vector<std::pair<uint64_t, uint64_t>> extents;  // (offset, length)
};

std::vector<RawLocation> parse_iloc_raw(const BoxNode& box, ByteSpan data, FileModel& m) {
    std::vector<RawLocation> out;
    ByteReader r(data, box.header.payload_span.start, box.header.payload_span.end);
    r.skip(4);
    uint8_t version = box.full ? box.full->version : 0;

    uint8_t b = r.u8();
    unsigned offset_size = b >> 4, length_size = b & 0xf;
    b = r.u8();
    unsigned base_offset_size = b >> 4;
    unsigned index_size = (version == 1 || version == 2) ? (b & 0xf) : 0;
    auto valid_width = [](unsigned w) { return w == 0 || w == 4 || w == 8; };
    if (!valid_width(offset_size) || !valid_width(length_size) || !valid_width(base_offset_size) ||
        !valid_width(index_size)) {
        m.diagnostics.push_back(
            {DiagCode::BadFieldWidth, box.header.offset, "iloc field width not in {0,4,8}"});
        return out;
    }

    uint32_t item_count = version < 2 ? r.u16() : r.u32();
    for (uint32_t i = 0; i < item_count && !r.truncated(); ++i) {
        RawLocation loc;
        loc.item_id = version < 2 ? r.u16() : r.u32();
        if (version == 1 || version == 2) {
            uint16_t cm = r.u16();  // 12 reserved bits + 4-bit construction_method
            loc.construction_method = static_cast<uint8_t>(cm & 0xf);
        }
        loc.data_reference_index = r.u16();
        loc.base_offset = r.uint(base_offset_size);
        uint16_t extent_count = r.u16();
        for (uint16_t e = 0; e < extent_count && !r.truncated(); ++e) {
            if (index_size > 0) r.uint(index_size);  // extent_index, unused here
            uint64_t off = r.uint(offset_size);
            uint64_t len = r.uint(length_size);
            loc.extents.emplace_back(off, len);
        }
        out.push_back(std::move(loc));
    }
    if (r.truncated())
        m.diagnostics.push_back({DiagCode::TruncatedEntry, box.header.offset, "truncated iloc"});
    return out;
}

void parse_iref(const BoxNode& box, ByteSpan data, FileModel& m) {
    uint8_t version = box.full ? box.full->version : 0;
    for (const auto& ref_box : box.children) {
        ItemReference ref;
        ref.ref_type = ref_box.header.fourcc;
        ByteReader r(data, ref_box.header.payload_span.start, ref_box.header.payload_span.end);
        ref.from_item = version == 0 ? r.u16() : r.u32();
        uint16_t count = r.u16();
        for (uint16_t i = 0; i < count && !r.truncated(); ++i)
            ref.to_items.push_back(version == 0 ? r.u16() : r.u32());
        if (r.truncated())
            m.diagnostics.push_back(
                {DiagCode::TruncatedEntry, ref_box.header.offset, "truncated iref entry"});
        m.references.push_back(std::move(ref));
    }
}

void parse_dref(const BoxNode& box, ByteSpan data, FileModel& m) {
    // dref is a fullbox with a 32-bit entry count, then url/urn fullboxes.
    ByteReader r(data, box.header.payload_span.start, box.header.payload_span.end);
    r.skip(4);
    uint32_t entry_count = r.u32();
    if (entry_count == 0)
        m.diagnostics.push_back(
            {DiagCode::EmptyDref, box.header.offset, "dref declares zero entries (standard requires >= 1)"});

    uint64_t pos = r.pos();
    uint32_t index = 0;
    while (pos + 8 <= box.header.payload_span.end && index < entry_count) {
        auto res = parse_box_header(data, pos, box.header.payload_span.end);
        if (res.status != HeaderParseStatus::Ok) {
            m.diagnostics.push_back({DiagCode::TruncatedEntry, pos, "truncated dref entry"});
            break;
        }
        DataReference ref;
        ref.index = ++index;
        ref.offset = res.header.offset;
        ByteReader er(data, res.header.payload_span.start, res.header.payload_span.end);
        uint32_t vf = er.u32();
        uint32_t flags = vf & 0xffffff;
        ref.self_contained = (flags & 0x1) != 0;
        if (res.header.fourcc == FourCC("urn ")) {
            ref.scheme = DataReference::Scheme::Urn;
            ref.urn_name = er.cstring();
            if (!ref.self_contained && er.remaining() > 0) ref.location = er.cstring();
        } else {
            ref.scheme = DataReference::Scheme::Url;
            if (!ref.self_contained) ref.location = er.cstring();
        }
        m.data_references.push_back(std::move(ref));
        pos = res.header.end();
    }
}

void parse_tkhd(const BoxNode& box, ByteSpan data, TrackRecord& track, FileModel& m) {
    uint64_t start = box.header.payload_span.start;
    track.tkhd_flags = box.full ? box.full->flags : 0;
    track.tkhd_flags_offset = start + 1;
    track.enabled = (track.tkhd_flags & 0x1) != 0;
    track.in_presentation = (track.tkhd_flags & 0x2) != 0;
    track.in_preview = (track.tkhd_flags & 0x4) != 0;

    uint8_t version = box.full ? box.full->version : 0;
    ByteReader r(data, start, box.header.payload_span.end);
    r.skip(4);
    r.skip(version == 1 ? 16 : 8);  // creation + modification time
    track.track_id = r.u32();
    if (r.truncated())
        m.diagnostics.push_back({DiagCode::TruncatedEntry, box.header.offset, "truncated tkhd"});
}

ItemProperty parse_one_property(const BoxNode& box, ByteSpan data) {
    ItemProperty p;
    p.fourcc = box.header.fourcc;
    ByteRange span = box.header.payload_span;
    ByteReader r(data, span.start, span.end);

    if (p.fourcc == FourCC("ispe")) {
        p.kind = ItemProperty::Kind::Ispe;
        r.skip(4);
        p.width = r.u32();
        p.height = r.u32();
    } else if (p.fourcc == FourCC("irot")) {
        p.kind = ItemProperty::Kind::Irot;
        p.angle_degrees = (r.u8() & 0x3) * 90u;
    } else if (p.fourcc == FourCC("imir")) {
        p.kind = ItemProperty::Kind::Imir;
        p.mirror_axis = r.u8() & 0x1;
    } else if (p.fourcc == FourCC("pixi")) {
        p.kind = ItemProperty::Kind::Pixi;
        r.skip(4);
        uint8_t channels = r.u8();
        for (uint8_t i = 0; i < channels && !r.truncated(); ++i)
            p.bits_per_channel.push_back(r.u8());
    } else if (p.fourcc == FourCC("auxC")) {
        p.kind = ItemProperty::Kind::AuxC;
        r.skip(4);
        p.aux_type = r.cstring();
    } else if (p.fourcc == FourCC("clap")) {
        p.kind = ItemProperty::Kind::Clap;
    } else if (p.fourcc == FourCC("colr")) {
        p.kind = ItemProperty::Kind::Colr;
    } else {
        p.kind = ItemProperty::Kind::Unknown;
    }
    if (p.kind == ItemProperty::Kind::Clap || p.kind == ItemProperty::Kind::Colr ||
        p.kind == ItemProperty::Kind::Unknown) {
        for (uint64_t i = span.start; i < span.end; ++i) p.raw.push_back(data[i]);
    }
    return p;
}

void parse_iprp(const BoxNode& iprp, ByteSpan data, FileModel& m) {
    const BoxNode* ipco = iprp.find_child(FourCC("ipco"));
    const BoxNode* ipma = nullptr;
    for (const auto& c : iprp.children)
        if (c.header.fourcc == FourCC("ipma")) ipma = &c;
    if (!ipco || !ipma) return;

    std::vector<ItemProperty> pool;  // 1-based in ipma
    for (const auto& prop_box : ipco->children) pool.push_back(parse_one_property(prop_box, data));

    ByteReader r(data, ipma->header.payload_span.start, ipma->header.payload_span.end);
    uint32_t vf = r.u32();
    uint8_t version = static_cast<uint8_t>(vf >> 24);
    uint32_t flags = vf & 0xffffff;
    uint32_t entry_count = r.u32();
    for (uint32_t i = 0; i < entry_count && !r.truncated(); ++i) {
        uint32_t item_id = version < 1 ? r.u16() : r.u32();
        uint8_t assoc_count = r.u8();
        ItemRecord* item = nullptr;
        for (auto& it : m.items)
            if (it.item_id == item_id) item = &it;
        for (uint8_t a = 0; a < assoc_count && !r.truncated(); ++a) {
            bool essential;
            uint16_t index;
            if (flags & 0x1) {
                uint16_t v = r.u16();
                essential = (v & 0x8000) != 0;
                index = v & 0x7fff;
            } else {
                uint8_t v = r.u8();
                essential = (v & 0x80) != 0;
                index = v & 0x7f;
            }
            if (index == 0 || index > pool.size()) {
                m.diagnostics.push_back({DiagCode::BadPropertyIndex, ipma->header.offset,
                                         "ipma association index " + std::to_string(index) +
                                             " outside ipco pool for item " + std::to_string(item_id)});
                if (item) {
                    ItemProperty unknown;
                    unknown.kind = ItemProperty::Kind::Unknown;
                    unknown.essential = essential;
                    item->properties.push_back(std::move(unknown));
                }
                continue;
            }
            if (item) {
                ItemProperty p = pool[index - 1];
                p.essential = essential;
                item->properties.push_back(std::move(p));
            }
        }
    }
}

void resolve_locations(const std::vector<RawLocation>& locations, FileModel& m, uint64_t file_len) {
    for (const auto& loc : locations) {
        ItemRecord* item = nullptr;
        for (auto& it : m.items)
            if (it.item_id == loc.item_id) item = &it;
        if (!item) {
            m.diagnostics.push_back({DiagCode::DanglingReference, 0,
                                     "iloc entry for undeclared item " + std::to_string(loc.item_id)});
            continue;
        }
        item->data_reference_index = loc.data_reference_index;
        for (auto [off, len] : loc.extents) {
            ItemExtent ext;
            ext.method = static_cast<ConstructionMethod>(loc.construction_method);
            ext.raw_offset = loc.base_offset + off;
            ext.length = len;
            if (ext.method == ConstructionMethod::FileOffset) {
                ext.absolute = ByteRange{ext.raw_offset, ext.raw_offset + len};
            } else if (ext.method == ConstructionMethod::IdatRelative && m.idat_span) {
                uint64_t abs = m.idat_span->start + ext.raw_offset;
                ext.absolute = ByteRange{abs, abs + len};
            }
            if (ext.absolute && ext.absolute->end > file_len) {
                m.diagnostics.push_back(
                    {DiagCode::ExtentOutOfFile, ext.absolute->start,
                     "item " + std::to_string(item->item_id) + " extent [" +
                         std::to_string(ext.absolute->start) + ", " +
                         std::to_string(ext.absolute->end) + ") extends past end of file"});
            }
            item->extents.push_back(ext);
        }
    }
}

}  // namespace

FileModel build_file_model(const BoxTree& tree, ByteSpan data) {
    FileModel m;
    m.diagnostics = tree.diagnostics;

    const BoxNode* ftyp = tree.find_root(FourCC("ftyp"));
    if (ftyp && tree.roots.front().header.fourcc == FourCC("ftyp")) {
        m.brands = parse_ftyp(data, ftyp->header);
        m.kind = classify_brands(m.brands);
    } else {
        m.diagnostics.push_back({DiagCode::MissingFtyp, 0, "file does not begin with an ftyp box"});
    }

    const BoxNode* meta = tree.find_root(FourCC("meta"));
    std::vector<RawLocation> locations;
    if (meta) {
        m.has_meta = true;
        if (const BoxNode* idat = meta->find_child(FourCC("idat")))
            m.idat_span = idat->header.payload_span;

        bool saw_hdlr = false;
        for (const auto& child : meta->children) {
            FourCC cc = child.header.fourcc;
            if (cc == FourCC("hdlr")) {
                parse_hdlr(child, data, m.handler);
                saw_hdlr = true;
            } else if (cc == FourCC("pitm")) {
                parse_pitm(child, data, m);
            } else if (cc == FourCC("iinf")) {
                for (const auto& entry : child.children)
                    if (entry.header.fourcc == FourCC("infe")) parse_infe(entry, data, m);
            } else if (cc == FourCC("iloc")) {
                locations = parse_iloc_raw(child, data, m);
            } else if (cc == FourCC("iref")) {
                parse_iref(child, data, m);
            } else if (cc == FourCC("dinf")) {
                if (const BoxNode* dref = child.find_child(FourCC("dref")))
                    parse_dref(*dref, data, m);
            }
        }
        // iprp needs the item table populated first
        if (const BoxNode* iprp = meta->find_child(FourCC("iprp"))) parse_iprp(*iprp, data, m);
        if (!saw_hdlr)
            m.diagnostics.push_back(
                {DiagCode::MissingHandler, meta->header.offset, "meta box has no hdlr"});
    }
    resolve_locations(locations, m, tree.file_len);

    if (const BoxNode* moov = tree.find_root(FourCC("moov"))) {
        for (const auto& trak : moov->children) {
            if (trak.header.fourcc != FourCC("trak")) continue;
            TrackRecord track;
            if (const BoxNode* tkhd = trak.find_child(FourCC("tkhd")))
                parse_tkhd(*tkhd, data, track, m);
            if (const BoxNode* mdia = trak.find_child(FourCC("mdia")))
                if (const BoxNode* hdlr = mdia->find_child(FourCC("hdlr")))
                    parse_hdlr(*hdlr, data, track.handler);
            m.tracks.push_back(track);
        }
    }

    // dangling id checks
    if (m.primary_item && !m.find_item(*m.primary_item))
        m.diagnostics.push_back({DiagCode::DanglingReference, 0,
                                 "pitm references undeclared item " + std::to_string(*m.primary_item)});
    for (const auto& ref : m.references) {
        if (!m.find_item(ref.from_item))
            m.diagnostics.push_back({DiagCode::DanglingReference, 0,
                                     "iref '" + ref.ref_type.str() + "' from undeclared item " +
                                         std::to_string(ref.from_item)});
        for (uint32_t to : ref.to_items)
            if (!m.find_item(to))
                m.diagnostics.push_back({DiagCode::DanglingReference, 0,
                                         "iref '" + ref.ref_type.str() + "' to undeclared item " +
                                             std::to_string(to)});
    }
    return m;
}

}  // namespace heifsleuth
