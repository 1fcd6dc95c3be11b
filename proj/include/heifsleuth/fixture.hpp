#ifndef HEIFSLEUTH_FIXTURE_HPP
#define HEIFSLEUTH_FIXTURE_HPP

#include <optional>
#include <string>
#include <vector>

#include "heifsleuth/box.hpp"
#include "heifsleuth/bytes.hpp"

namespace heifsleuth::fixture {

// Property attached to an item; the fields used depend on the fourcc.
struct PropertySpec {
    FourCC fourcc;
    bool essential = false;
    uint32_t width = 0, height = 0;  // ispe
    uint8_t small_value = 0;         // irot (angle / 90), imir (axis)
    std::string text;                // auxC urn
    ByteBuffer raw;                  // anything else
};

struct ItemSpec {
    uint32_t id = 1;
    FourCC type = FourCC("hvc1");
    std::string name = "HEVC Image";
    bool hidden = false;
    uint8_t infe_version = 2;
    enum class Placement { Mdat, Idat } placement = Placement::Mdat;
    uint32_t payload_len = 64;  // generated from the spec seed when payload is empty
    ByteBuffer payload;
    uint32_t extent_split = 1;  // number of extents the payload is split into
    uint32_t extent_gap = 0;    // unindexed garbage bytes between mdat extents
    uint16_t dref_index = 0;    // 0 = this file
    std::string content_type;   // mime items
    std::vector<PropertySpec> properties;
};

struct ReferenceSpec {
    FourCC type;
    uint32_t from = 0;
    std::vector<uint32_t> to;
};

struct TrackSpec {
    uint32_t track_id = 1;
    uint32_t tkhd_flags = 0x000007;
    FourCC handler = FourCC("pict");
};

struct DrefSpec {
    bool self_contained = true;
    bool urn = false;
    std::string location;
    std::string urn_name;
};

enum class MintMode { Absent, Correct, Corrupted };

struct FixtureSpec {
    FourCC major_brand = FourCC("mif1");
    uint32_t minor_version = 0;
    std::vector<FourCC> compatible = {FourCC("mif1"), FourCC("heic")};
    bool emit_hdlr = true;
    FourCC handler = FourCC("pict");
    std::vector<ItemSpec> items;
    std::vector<ReferenceSpec> references;
    std::optional<uint32_t> primary_item;
    std::vector<TrackSpec> tracks;
    std::vector<DrefSpec> dref_entries;
    MintMode mint = MintMode::Absent;
    uint32_t mint_item_id = 0;  // infe id to use for the synthesized mint item
    uint32_t mint_target = 0;   // item whose bytes the md5i digest covers
    uint32_t trailing_garbage = 0;
    uint64_t seed = 1;
};

// Emits a self-consistent HEIF container for the spec. Deterministic:
// the same spec always yields identical bytes. Throws
// std::invalid_argument on inconsistent specs (duplicate ids, dangling
// mint target).
ByteBuffer build(const FixtureSpec& spec);

// Resolved payload bytes of an item as build() would emit them (explicit
// payload, or the seeded generated bytes). Useful as an independent
// expected value for extent resolution and hashing tests.
ByteBuffer item_payload(const FixtureSpec& spec, uint32_t item_id);

// --- minimal-edit mutations; each re-parses the input to locate its target ---

// Toggles the hidden bit of the item's infe flags. Changes exactly one byte.
ByteBuffer flip_hidden(ByteSpan bytes, uint32_t item_id);
// Clears the enabled bit of the track's tkhd flags.
ByteBuffer disable_track(ByteSpan bytes, uint32_t track_id);
ByteBuffer truncate_at(ByteSpan bytes, uint64_t offset);
ByteBuffer append(ByteSpan bytes, ByteSpan extra);
// Overwrites the size field of the index-th top-level box with a value
// that overruns the file.
ByteBuffer corrupt_size(ByteSpan bytes, size_t box_index);

}  // namespace heifsleuth::fixture

#endif
