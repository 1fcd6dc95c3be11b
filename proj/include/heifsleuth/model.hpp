#ifndef HEIFSLEUTH_MODEL_HPP
#define HEIFSLEUTH_MODEL_HPP

#include <optional>
#include <string>
#include <vector>

#include "heifsleuth/box.hpp"
#include "heifsleuth/bytes.hpp"

namespace heifsleuth {

struct Brands {
    FourCC major;
    uint32_t minor_version = 0;
    std::vector<FourCC> compatible;  // file order, duplicates kept

    bool contains(FourCC cc) const {
        if (major == cc) return true;
        for (auto& b : compatible)
            if (b == cc) return true;
        return false;
    }
};

enum class HeifKind {
    NotHeif,
    StillAnyCodec,     // 'mif1'
    SequenceAnyCodec,  // 'msf1'
    StillHEVC,         // 'heic' / 'heix'
    SequenceHEVC,      // 'hevc' / 'hevx'
};

std::string heif_kind_name(HeifKind kind);
bool is_still_kind(HeifKind kind);

// iloc construction methods.
enum class ConstructionMethod : uint8_t { FileOffset = 0, IdatRelative = 1, ItemRelative = 2 };

struct ItemExtent {
    ConstructionMethod method = ConstructionMethod::FileOffset;
    uint64_t raw_offset = 0;  // as stored (idat-relative for method 1)
    uint64_t length = 0;
    // Resolved to absolute file range for methods 0 and 1; unset for
    // method 2 and for method 1 without an idat box.
    std::optional<ByteRange> absolute;
};

struct ItemProperty {
    enum class Kind { Ispe, Irot, Imir, Clap, Pixi, Colr, AuxC, Unknown };
    Kind kind = Kind::Unknown;
    FourCC fourcc;
    bool essential = false;

    uint32_t width = 0, height = 0;      // ispe
    uint32_t angle_degrees = 0;          // irot, counter-clockwise
    uint8_t mirror_axis = 0;             // imir
    std::vector<uint8_t> bits_per_channel;  // pixi
    std::string aux_type;                // auxC urn
    std::vector<uint8_t> raw;            // clap/colr/unknown payload
};

struct ItemRecord {
    uint32_t item_id = 0;
    FourCC item_type;
    std::string name;
    bool hidden = false;  // infe flags & 0x1
    uint8_t infe_version = 0;
    uint32_t infe_flags = 0;
    uint64_t infe_flags_offset = 0;  // absolute offset of the 3-byte flags field
    uint16_t data_reference_index = 0;  // from iloc; 0 = this file
    std::vector<ItemExtent> extents;
    std::vector<ItemProperty> properties;
    std::optional<std::string> content_type;  // 'mime' items

    uint64_t total_extent_length() const {
        uint64_t n = 0;
        for (auto& e : extents) n += e.length;
        return n;
    }
};

struct ItemReference {
    FourCC ref_type;  // 'dimg', 'thmb', 'auxl', 'cdsc', ...
    uint32_t from_item = 0;
    std::vector<uint32_t> to_items;
};

struct DataReference {
    uint32_t index = 0;  // 1-based position in dref
    enum class Scheme { Url, Urn } scheme = Scheme::Url;
    bool self_contained = false;  // entry flags & 0x1
    std::string location;         // empty when self-contained
    std::string urn_name;         // urn entries only
    uint64_t offset = 0;          // absolute offset of the entry box
};

struct TrackRecord {
    uint32_t track_id = 0;
    uint32_t tkhd_flags = 0;
    bool enabled = false;          // flags & 0x1
    bool in_presentation = false;  // flags & 0x2
    bool in_preview = false;       // flags & 0x4
    FourCC handler;                // from trak/mdia/hdlr
    uint64_t tkhd_flags_offset = 0;
};

struct FileModel {
    Brands brands;
    HeifKind kind = HeifKind::NotHeif;
    FourCC handler;  // meta/hdlr handler type, zero if absent
    bool has_meta = false;
    std::optional<uint32_t> primary_item;
    std::vector<ItemRecord> items;
    std::vector<ItemReference> references;
    std::vector<DataReference> data_references;
    std::vector<TrackRecord> tracks;
    std::optional<ByteRange> idat_span;  // payload span of meta/idat
    std::vector<Diagnostic> diagnostics;

    const ItemRecord* find_item(uint32_t id) const {
        for (auto& it : items)
            if (it.item_id == id) return &it;
        return nullptr;
    }
    std::vector<ByteRange> resolved_extents() const {
        std::vector<ByteRange> out;
        for (auto& it : items)
            for (auto& e : it.extents)
                if (e.absolute) out.push_back(*e.absolute);
        return out;
    }
};

// Classifies the file by inspecting only the first top-level box.
// Never consults the filename.
std::pair<HeifKind, Brands> detect_heif(ByteSpan data);

HeifKind classify_brands(const Brands& brands);

// Full semantic pass over a parsed tree. Problems surface as diagnostics
// in the model, never as failures.
FileModel build_file_model(const BoxTree& tree, ByteSpan data);

}  // namespace heifsleuth

#endif
