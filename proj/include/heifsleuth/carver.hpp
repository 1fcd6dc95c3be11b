#ifndef HEIFSLEUTH_CARVER_HPP
#define HEIFSLEUTH_CARVER_HPP

#include <string>
#include <vector>

#include "heifsleuth/model.hpp"

namespace heifsleuth {

enum class CarveStop { CleanEnd, InvalidBox, ScopeExhausted };

std::string carve_stop_name(CarveStop s);

struct CarveCandidate {
    uint64_t start = 0;  // offset of the size field preceding 'ftyp'
    uint64_t end = 0;    // one past the last validated box
    Brands brands;
    HeifKind kind = HeifKind::NotHeif;
    double score = 0.0;  // 0.0 .. 1.0
    uint32_t boxes_walked = 0;
    CarveStop stop_reason = CarveStop::CleanEnd;

    bool partial() const { return stop_reason == CarveStop::ScopeExhausted; }
};

struct ScanResult {
    std::vector<CarveCandidate> heif;      // HEIF-branded, overlap-suppressed
    std::vector<CarveCandidate> non_heif;  // valid ftyp chains with non-HEIF brands
};

// Signature is 'ftyp' at offset + 4 (ISOBMFF has no magic at offset 0).
// For each hit the preceding size field is validated, the brand list is
// matched against the HEIF brand sets, and the following box chain is
// walked until an invalid box or the end of the blob.
//
// Score weights: brand known 0.4, meta with 'pict' handler 0.3, three or
// more valid chained boxes 0.2, clean end 0.1. A size-0 box caps the
// score at 0.8 since the end boundary is a guess.
ScanResult scan(ByteSpan blob);

// Writes blob[start, end) of the candidate to `destination`; returns the
// number of bytes written. Throws std::runtime_error on I/O failure.
uint64_t extract(ByteSpan blob, const CarveCandidate& candidate, const std::string& destination);

}  // namespace heifsleuth

#endif
