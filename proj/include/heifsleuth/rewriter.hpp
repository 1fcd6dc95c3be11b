#ifndef HEIFSLEUTH_REWRITER_HPP
#define HEIFSLEUTH_REWRITER_HPP

#include <optional>
#include <string>
#include <vector>

#include "heifsleuth/model.hpp"

namespace heifsleuth {

struct ByteChange {
    uint64_t offset = 0;
    uint8_t old_byte = 0;
    uint8_t new_byte = 0;
};

struct RevealOptions {
    // Empty = all hidden items; otherwise only the listed item ids.
    std::vector<uint32_t> items;
    bool also_enable_tracks = false;
};

struct RevealResult {
    bool parse_failed = false;
    ByteBuffer output;  // same length as input, only flag bytes differ
    std::vector<ByteChange> change_log;
    std::vector<std::string> notes;  // e.g. hidden-cover observation

    bool nothing_to_reveal() const { return !parse_failed && change_log.empty(); }
};

// Produces a working copy with the hidden bit (infe flags & 0x1) cleared
// for the selected hidden items, and optionally the enabled bit set on
// disabled tracks. Only bit 0x1 is touched; every other bit survives
// verbatim. The input is never modified.
RevealResult reveal_hidden(ByteSpan input, const RevealOptions& options = {});

}  // namespace heifsleuth

#endif
