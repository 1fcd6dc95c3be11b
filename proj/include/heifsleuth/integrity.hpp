#ifndef HEIFSLEUTH_INTEGRITY_HPP
#define HEIFSLEUTH_INTEGRITY_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "heifsleuth/model.hpp"

namespace heifsleuth {

struct DigestSet {
    std::array<uint8_t, 16> md5{};
    std::array<uint8_t, 20> sha1{};
    std::array<uint8_t, 32> sha256{};
    std::optional<uint32_t> item_id;  // unset for whole-file digests
    uint64_t byte_count = 0;

    std::string md5_hex() const;
    std::string sha1_hex() const;
    std::string sha256_hex() const;
};

std::array<uint8_t, 16> md5_digest(ByteSpan data);

enum class HashError { None, UnknownItem, ExternalData, ExtentOutOfFile, UnresolvableExtent };

struct ItemHashResult {
    HashError error = HashError::None;
    DigestSet digest;  // valid only when error == None
};

std::string hash_error_name(HashError e);

DigestSet hash_file(ByteSpan data);

// Digest over the item's extent bytes concatenated in declared extent
// order. Refuses items backed by external dref entries.
ItemHashResult hash_item(const FileModel& model, ByteSpan data, uint32_t item_id);

enum class MintStatus { Match, Mismatch, Unresolvable };

struct MintVerification {
    uint32_t item_id = 0;  // the 'mint' item
    std::array<uint8_t, 16> declared_md5{};
    std::array<uint8_t, 16> computed_md5{};
    std::optional<uint32_t> target_item;  // resolved via cdsc
    MintStatus status = MintStatus::Unresolvable;
    std::string framing;  // "fourcc-wrapped" or "raw16"
    std::string note;
};

std::string mint_status_name(MintStatus s);

// Checks every 'mint' item's embedded md5i digest against the bytes of
// its cdsc-referenced target item. Empty list when no mint items exist.
std::vector<MintVerification> verify_mint(const FileModel& model, ByteSpan data);

std::string to_hex(ByteSpan bytes);

}  // namespace heifsleuth

#endif
