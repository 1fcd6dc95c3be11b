#include "heifsleuth/integrity.hpp"

#include <openssl/evp.h>

namespace heifsleuth {

std::string to_hex(ByteSpan bytes) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (uint8_t b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

std::string DigestSet::md5_hex() const { return to_hex(ByteSpan(md5.data(), md5.size())); }
std::string DigestSet::sha1_hex() const { return to_hex(ByteSpan(sha1.data(), sha1.size())); }
std::string DigestSet::sha256_hex() const { return to_hex(ByteSpan(sha256.data(), sha256.size())); }

std::string hash_error_name(HashError e) {
    switch (e) {
        case HashError::None: return "none";
        case HashError::UnknownItem: return "UnknownItem";
        case HashError::ExternalData: return "ExternalData";
        case HashError::ExtentOutOfFile: return "ExtentOutOfFile";
        case HashError::UnresolvableExtent: return "UnresolvableExtent";
    }
    return "none";
}

std::string mint_status_name(MintStatus s) {
    switch (s) {
        case MintStatus::Match: return "match";
        case MintStatus::Mismatch: return "mismatch";
        case MintStatus::Unresolvable: return "unresolvable";
    }
    return "unresolvable";
}

namespace {

void evp_digest(const EVP_MD* md, const std::vector<ByteSpan>& chunks, uint8_t* out) {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, md, nullptr);
    for (auto& c : chunks) EVP_DigestUpdate(ctx, c.data(), c.size());
    EVP_DigestFinal_ex(ctx, out, nullptr);
    EVP_MD_CTX_free(ctx);
}

DigestSet digest_chunks(const std::vector<ByteSpan>& chunks) {
    DigestSet d;
    evp_digest(EVP_md5(), chunks, d.md5.data());
    evp_digest(EVP_sha1(), chunks, d.sha1.data());
    evp_digest(EVP_sha256(), chunks, d.sha256.data());
    for (auto& c : chunks) d.byte_count += c.size();
    return d;
}

// Gathers an item's extent byte spans in declared order.
HashError gather_item_chunks(const FileModel& model, ByteSpan data, const ItemRecord& item,
                             std::vector<ByteSpan>& out) {
    if (item.data_reference_index != 0) {
        const DataReference* entry = nullptr;
        for (auto& d : model.data_references)
            if (d.index == item.data_reference_index) entry = &d;
        if (!entry || !entry->self_contained) return HashError::ExternalData;
    }
    for (auto& ext : item.extents) {
        if (!ext.absolute) return HashError::UnresolvableExtent;
        if (ext.absolute->end > data.size()) return HashError::ExtentOutOfFile;
        out.push_back(data.subspan(ext.absolute->start, ext.length));
    }
    return HashError::None;
}

}  // namespace

std::array<uint8_t, 16> md5_digest(ByteSpan data) {
    std::array<uint8_t, 16> out{};
    evp_digest(EVP_md5(), {data}, out.data());
    return out;
}

DigestSet hash_file(ByteSpan data) { return digest_chunks({data}); }

ItemHashResult hash_item(const FileModel& model, ByteSpan data, uint32_t item_id) {
    ItemHashResult res;
    const ItemRecord* item = model.find_item(item_id);
    if (!item) {
        res.error = HashError::UnknownItem;
        return res;
    }
    std::vector<ByteSpan> chunks;
    res.error = gather_item_chunks(model, data, *item, chunks);
    if (res.error != HashError::None) return res;
    res.digest = digest_chunks(chunks);
    res.digest.item_id = item_id;
    return res;
}

std::vector<MintVerification> verify_mint(const FileModel& model, ByteSpan data) {
    std::vector<MintVerification> out;
    for (auto& item : model.items) {
        if (item.item_type != FourCC("mint")) continue;
        MintVerification v;
        v.item_id = item.item_id;

        // mint payload: either a 4-byte scheme fourcc wrapper ('md5 ' style)
        // followed by the 16 digest bytes, or the raw 16 bytes alone.
        std::vector<ByteSpan> chunks;
        if (gather_item_chunks(model, data, item, chunks) != HashError::None) {
            v.note = "mint payload not resolvable in-file";
            out.push_back(std::move(v));
            continue;
        }
        ByteBuffer payload;
        for (auto& c : chunks) payload.insert(payload.end(), c.begin(), c.end());

        bool parsed = false;
        if (payload.size() >= 20) {
            FourCC scheme(read_u32be(payload, 0));
            if (scheme.printable()) {
                std::copy_n(payload.begin() + 4, 16, v.declared_md5.begin());
                v.framing = "fourcc-wrapped";
                v.note = "scheme '" + scheme.str() + "'";
                parsed = true;
            }
        }
        if (!parsed && payload.size() >= 16) {
            std::copy_n(payload.begin(), 16, v.declared_md5.begin());
            v.framing = "raw16";
            parsed = true;
        }
        if (!parsed) {
            v.note = "mint payload too short for an md5i digest";
            out.push_back(std::move(v));
            continue;
        }

        // the checksum target is the cdsc-referenced item
        const ItemReference* cdsc = nullptr;
        for (auto& ref : model.references)
            if (ref.ref_type == FourCC("cdsc") && ref.from_item == item.item_id && !ref.to_items.empty())
                cdsc = &ref;
        if (!cdsc) {
            v.note = v.note.empty() ? "no cdsc reference names a target" :
                                      v.note + "; no cdsc reference names a target";
            out.push_back(std::move(v));
            continue;
        }
        v.target_item = cdsc->to_items.front();
        ItemHashResult target = hash_item(model, data, *v.target_item);
        if (target.error != HashError::None) {
            v.note += (v.note.empty() ? "" : "; ") + ("target item not hashable: " +
                                                      hash_error_name(target.error));
            out.push_back(std::move(v));
            continue;
        }
        v.computed_md5 = target.digest.md5;
        v.status = v.declared_md5 == v.computed_md5 ? MintStatus::Match : MintStatus::Mismatch;
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace heifsleuth
