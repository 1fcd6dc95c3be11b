#include "heifsleuth/fixture.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

#include "heifsleuth/integrity.hpp"
#include "heifsleuth/model.hpp"

namespace heifsleuth::fixture {

namespace {

class Writer {
public:
    ByteBuffer buf;

    void fourcc(FourCC cc) { write_u32be(buf, cc.packed()); }
    void u8(uint8_t v) { buf.push_back(v); }
    void u16(uint16_t v) { write_u16be(buf, v); }
    void u32(uint32_t v) { write_u32be(buf, v); }
    void bytes(ByteSpan b) { buf.insert(buf.end(), b.begin(), b.end()); }
    void cstring(const std::string& s) {
        buf.insert(buf.end(), s.begin(), s.end());
        buf.push_back(0);
    }
    void zeros(size_t n) { buf.insert(buf.end(), n, 0); }

    size_t begin_box(FourCC cc) {
        size_t at = buf.size();
        u32(0);  // size backpatched by end_box
        fourcc(cc);
        return at;
    }
    size_t begin_fullbox(FourCC cc, uint8_t version, uint32_t flags) {
        size_t at = begin_box(cc);
        u32(static_cast<uint32_t>(version) << 24 | (flags & 0xffffff));
        return at;
    }
    void end_box(size_t at) { patch_u32be(buf, at, static_cast<uint32_t>(buf.size() - at)); }
};

ByteBuffer generated_payload(uint64_t seed, uint32_t item_id, uint32_t len) {
    // tagged with the item id so payloads are distinguishable in hex dumps
    ByteBuffer out;
    std::string tag = "item" + std::to_string(item_id) + ":";
    for (char c : tag) {
        if (out.size() >= len) break;
        out.push_back(static_cast<uint8_t>(c));
    }
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + item_id);
    while (out.size() < len) out.push_back(static_cast<uint8_t>(rng() & 0xff));
    return out;
}

ByteBuffer resolved_payload(const FixtureSpec& spec, const ItemSpec& item) {
    if (!item.payload.empty()) return item.payload;
    return generated_payload(spec.seed, item.id, item.payload_len);
}

void write_property(Writer& w, const PropertySpec& p) {
    if (p.fourcc == FourCC("ispe")) {
        size_t at = w.begin_fullbox(p.fourcc, 0, 0);
        w.u32(p.width);
        w.u32(p.height);
        w.end_box(at);
    } else if (p.fourcc == FourCC("irot") || p.fourcc == FourCC("imir")) {
        size_t at = w.begin_box(p.fourcc);
        w.u8(p.small_value);
        w.end_box(at);
    } else if (p.fourcc == FourCC("auxC")) {
        size_t at = w.begin_fullbox(p.fourcc, 0, 0);
        w.cstring(p.text);
        w.end_box(at);
    } else if (p.fourcc == FourCC("pixi")) {
        size_t at = w.begin_fullbox(p.fourcc, 0, 0);
        w.u8(static_cast<uint8_t>(p.raw.size()));
        w.bytes(p.raw);
        w.end_box(at);
    } else {
        size_t at = w.begin_box(p.fourcc);
        w.bytes(p.raw);
        w.end_box(at);
    }
}

void write_hdlr(Writer& w, FourCC handler) {
    size_t at = w.begin_fullbox(FourCC("hdlr"), 0, 0);
    w.u32(0);  // pre_defined
    w.fourcc(handler);
    w.zeros(12);
    w.cstring("");
    w.end_box(at);
}

struct ExtentPlan {
    uint64_t rel_offset = 0;  // within the data pool (mdat or idat payload)
    uint64_t length = 0;
    size_t offset_patch_pos = 0;  // buffer position of the 4-byte extent offset
};

struct ItemPlan {
    const ItemSpec* spec = nullptr;
    ByteBuffer payload;
    std::vector<ExtentPlan> extents;
};

// Splits a payload into n extents, inserting `gap` unindexed bytes
// between consecutive extents inside the pool.
void plan_extents(ItemPlan& plan, ByteBuffer& pool, uint32_t split, uint32_t gap, uint64_t pool_seed) {
    uint32_t n = std::max<uint32_t>(1, split);
    uint64_t total = plan.payload.size();
    uint64_t chunk = n == 0 ? total : (total + n - 1) / std::max<uint32_t>(n, 1);
    std::mt19937_64 rng(pool_seed);
    uint64_t pos = 0;
    for (uint32_t i = 0; i < n; ++i) {
        uint64_t len = std::min<uint64_t>(chunk, total - pos);
        ExtentPlan e;
        e.rel_offset = pool.size();
        e.length = len;
        pool.insert(pool.end(), plan.payload.begin() + pos, plan.payload.begin() + pos + len);
        plan.extents.push_back(e);
        pos += len;
        if (gap > 0 && i + 1 < n)
            for (uint32_t g = 0; g < gap; ++g) pool.push_back(static_cast<uint8_t>(rng() & 0xff));
        if (pos >= total && i + 1 < n) {
            // payload shorter than the requested split; stop early
            break;
        }
    }
}

}  // namespace

ByteBuffer item_payload(const FixtureSpec& spec, uint32_t item_id) {
    for (auto& item : spec.items)
        if (item.id == item_id) return resolved_payload(spec, item);
    if (spec.mint != MintMode::Absent && item_id == spec.mint_item_id) {
        // mirror of the synthesized mint payload in build()
        for (auto& item : spec.items) {
            if (item.id != spec.mint_target) continue;
            auto digest = md5_digest(resolved_payload(spec, item));
            if (spec.mint == MintMode::Corrupted) digest[0] ^= 0xff;
            ByteBuffer payload;
            payload.push_back('m');
            payload.push_back('d');
            payload.push_back('5');
            payload.push_back(' ');
            payload.insert(payload.end(), digest.begin(), digest.end());
            return payload;
        }
    }
    throw std::invalid_argument("item_payload: unknown item id " + std::to_string(item_id));
}

ByteBuffer build(const FixtureSpec& spec) {
    // effective items/references: the mint item is synthesized on demand
    std::vector<ItemSpec> items = spec.items;
    std::vector<ReferenceSpec> references = spec.references;
    if (spec.mint != MintMode::Absent) {
        if (spec.mint_item_id == 0 || spec.mint_target == 0)
            throw std::invalid_argument("mint requested without mint_item_id/mint_target");
        ItemSpec mint;
        mint.id = spec.mint_item_id;
        mint.type = FourCC("mint");
        mint.name = "integrity";
        mint.payload = item_payload(spec, spec.mint_item_id);
        items.push_back(mint);
        references.push_back({FourCC("cdsc"), spec.mint_item_id, {spec.mint_target}});
    }

    std::set<uint32_t> seen;
    for (auto& item : items)
        if (!seen.insert(item.id).second)
            throw std::invalid_argument("duplicate item id " + std::to_string(item.id));

    std::vector<ItemPlan> plans;
    ByteBuffer idat_pool, mdat_pool;
    for (auto& item : items) {
        ItemPlan plan;
        plan.spec = &item;
        plan.payload = resolved_payload(spec, item);
        ByteBuffer& pool = item.placement == ItemSpec::Placement::Idat ? idat_pool : mdat_pool;
        plan_extents(plan, pool, item.extent_split, item.extent_gap, spec.seed ^ (item.id * 0x51ull));
        plans.push_back(std::move(plan));
    }

    Writer w;

    // ftyp
    {
        size_t at = w.begin_box(FourCC("ftyp"));
        w.fourcc(spec.major_brand);
        w.u32(spec.minor_version);
        for (auto b : spec.compatible) w.fourcc(b);
        w.end_box(at);
    }

    // meta
    std::vector<size_t> mdat_offset_patches;  // positions of method-0 extent offsets
    std::vector<uint64_t> mdat_rel_offsets;
    {
        size_t meta_at = w.begin_fullbox(FourCC("meta"), 0, 0);
        if (spec.emit_hdlr) write_hdlr(w, spec.handler);
        if (spec.primary_item) {
            size_t at = w.begin_fullbox(FourCC("pitm"), 0, 0);
            w.u16(static_cast<uint16_t>(*spec.primary_item));
            w.end_box(at);
        }

        // iloc version 1: offset/length 4 bytes, no base offset
        {
            size_t at = w.begin_fullbox(FourCC("iloc"), 1, 0);
            w.u8(0x44);  // offset_size=4, length_size=4
            w.u8(0x00);  // base_offset_size=0, index_size=0
            w.u16(static_cast<uint16_t>(plans.size()));
            for (auto& plan : plans) {
                const ItemSpec& item = *plan.spec;
                bool idat = item.placement == ItemSpec::Placement::Idat;
                w.u16(static_cast<uint16_t>(item.id));
                w.u16(idat ? 1 : 0);  // construction_method
                w.u16(item.dref_index);
                w.u16(static_cast<uint16_t>(plan.extents.size()));
                for (auto& ext : plan.extents) {
                    if (idat) {
                        w.u32(static_cast<uint32_t>(ext.rel_offset));
                    } else {
                        mdat_offset_patches.push_back(w.buf.size());
                        mdat_rel_offsets.push_back(ext.rel_offset);
                        w.u32(0);  // patched once the mdat position is known
                    }
                    w.u32(static_cast<uint32_t>(ext.length));
                }
            }
            w.end_box(at);
        }

        // iinf / infe
        {
            size_t at = w.begin_fullbox(FourCC("iinf"), 0, 0);
            w.u16(static_cast<uint16_t>(items.size()));
            for (auto& item : items) {
                uint32_t flags = item.hidden ? 0x1 : 0x0;
                size_t infe_at = w.begin_fullbox(FourCC("infe"), item.infe_version, flags);
                if (item.infe_version <= 1) {
                    w.u16(static_cast<uint16_t>(item.id));
                    w.u16(0);  // protection
                    w.cstring(item.name);
                    w.cstring(item.content_type);
                } else {
                    if (item.infe_version == 2)
                        w.u16(static_cast<uint16_t>(item.id));
                    else
                        w.u32(item.id);
                    w.u16(0);
                    w.fourcc(item.type);
                    w.cstring(item.name);
                    if (item.type == FourCC("mime")) w.cstring(item.content_type);
                }
                w.end_box(infe_at);
            }
            w.end_box(at);
        }

        if (!references.empty()) {
            size_t at = w.begin_fullbox(FourCC("iref"), 0, 0);
            for (auto& ref : references) {
                size_t ref_at = w.begin_box(ref.type);
                w.u16(static_cast<uint16_t>(ref.from));
                w.u16(static_cast<uint16_t>(ref.to.size()));
                for (uint32_t to : ref.to) w.u16(static_cast<uint16_t>(to));
                w.end_box(ref_at);
            }
            w.end_box(at);
        }

        bool any_props = std::any_of(items.begin(), items.end(),
                                     [](const ItemSpec& i) { return !i.properties.empty(); });
        if (any_props) {
            size_t iprp_at = w.begin_box(FourCC("iprp"));
            size_t ipco_at = w.begin_box(FourCC("ipco"));
            for (auto& item : items)
                for (auto& p : item.properties) write_property(w, p);
            w.end_box(ipco_at);

            size_t ipma_at = w.begin_fullbox(FourCC("ipma"), 0, 0);
            uint32_t with_props = 0;
            for (auto& item : items)
                if (!item.properties.empty()) ++with_props;
            w.u32(with_props);
            uint16_t next_index = 1;
            for (auto& item : items) {
                if (item.properties.empty()) continue;
                w.u16(static_cast<uint16_t>(item.id));
                w.u8(static_cast<uint8_t>(item.properties.size()));
                for (auto& p : item.properties)
                    w.u8(static_cast<uint8_t>((p.essential ? 0x80 : 0x00) | (next_index++ & 0x7f)));
            }
            w.end_box(ipma_at);
            w.end_box(iprp_at);
        }

        if (!spec.dref_entries.empty()) {
            size_t dinf_at = w.begin_box(FourCC("dinf"));
            size_t dref_at = w.begin_fullbox(FourCC("dref"), 0, 0);
            w.u32(static_cast<uint32_t>(spec.dref_entries.size()));
            for (auto& entry : spec.dref_entries) {
                uint32_t flags = entry.self_contained ? 0x1 : 0x0;
                size_t at = w.begin_fullbox(entry.urn ? FourCC("urn ") : FourCC("url "), 0, flags);
                if (entry.urn) {
                    w.cstring(entry.urn_name);
                    if (!entry.self_contained) w.cstring(entry.location);
                } else if (!entry.self_contained) {
                    w.cstring(entry.location);
                }
                w.end_box(at);
            }
            w.end_box(dref_at);
            w.end_box(dinf_at);
        }

        if (!idat_pool.empty()) {
            size_t at = w.begin_box(FourCC("idat"));
            w.bytes(idat_pool);
            w.end_box(at);
        }
        w.end_box(meta_at);
    }

    // moov / trak
    if (!spec.tracks.empty()) {
        size_t moov_at = w.begin_box(FourCC("moov"));
        for (auto& track : spec.tracks) {
            size_t trak_at = w.begin_box(FourCC("trak"));
            size_t tkhd_at = w.begin_fullbox(FourCC("tkhd"), 0, track.tkhd_flags);
            w.u32(0);  // creation_time
            w.u32(0);  // modification_time
            w.u32(track.track_id);
            w.u32(0);  // reserved
            w.u32(0);  // duration
            w.zeros(8 + 2 + 2 + 2 + 2);
            // identity matrix
            w.u32(0x00010000); w.u32(0); w.u32(0);
            w.u32(0); w.u32(0x00010000); w.u32(0);
            w.u32(0); w.u32(0); w.u32(0x40000000);
            w.u32(0);  // width
            w.u32(0);  // height
            w.end_box(tkhd_at);
            size_t mdia_at = w.begin_box(FourCC("mdia"));
            write_hdlr(w, track.handler);
            w.end_box(mdia_at);
            w.end_box(trak_at);
        }
        w.end_box(moov_at);
    }

    // mdat, then patch the method-0 iloc offsets
    if (!mdat_pool.empty() || std::any_of(plans.begin(), plans.end(), [](const ItemPlan& p) {
            return p.spec->placement == ItemSpec::Placement::Mdat;
        })) {
        size_t mdat_at = w.begin_box(FourCC("mdat"));
        uint64_t payload_start = w.buf.size();
        w.bytes(mdat_pool);
        w.end_box(mdat_at);
        for (size_t i = 0; i < mdat_offset_patches.size(); ++i)
            patch_u32be(w.buf, mdat_offset_patches[i],
                        static_cast<uint32_t>(payload_start + mdat_rel_offsets[i]));
    }

    if (spec.trailing_garbage > 0) {
        std::mt19937_64 rng(spec.seed ^ 0xdeadbeefull);
        for (uint32_t i = 0; i < spec.trailing_garbage; ++i)
            w.buf.push_back(static_cast<uint8_t>(rng() & 0xff));
    }
    return w.buf;
}

namespace {

FileModel model_of(ByteSpan bytes) {
    BoxTree tree = parse_tree(bytes);
    return build_file_model(tree, bytes);
}

}  // namespace

ByteBuffer flip_hidden(ByteSpan bytes, uint32_t item_id) {
    FileModel m = model_of(bytes);
    const ItemRecord* item = m.find_item(item_id);
    if (!item) throw std::invalid_argument("flip_hidden: no item " + std::to_string(item_id));
    ByteBuffer out(bytes.begin(), bytes.end());
    out[item->infe_flags_offset + 2] ^= 0x1;
    return out;
}

ByteBuffer disable_track(ByteSpan bytes, uint32_t track_id) {
    FileModel m = model_of(bytes);
    for (auto& track : m.tracks) {
        if (track.track_id != track_id) continue;
        ByteBuffer out(bytes.begin(), bytes.end());
        out[track.tkhd_flags_offset + 2] &= ~uint8_t(0x1);
        return out;
    }
    throw std::invalid_argument("disable_track: no track " + std::to_string(track_id));
}

ByteBuffer truncate_at(ByteSpan bytes, uint64_t offset) {
    if (offset > bytes.size()) throw std::invalid_argument("truncate_at: offset past end");
    return ByteBuffer(bytes.begin(), bytes.begin() + offset);
}

ByteBuffer append(ByteSpan bytes, ByteSpan extra) {
    ByteBuffer out(bytes.begin(), bytes.end());
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
}

ByteBuffer corrupt_size(ByteSpan bytes, size_t box_index) {
    BoxTree tree = parse_tree(bytes);
    if (box_index >= tree.roots.size())
        throw std::invalid_argument("corrupt_size: no top-level box " + std::to_string(box_index));
    ByteBuffer out(bytes.begin(), bytes.end());
    patch_u32be(out, tree.roots[box_index].header.offset, 0x7fffff00);
    return out;
}

}  // namespace heifsleuth::fixture
