#include "heifsleuth/rewriter.hpp"

#include <algorithm>

namespace heifsleuth {

RevealResult reveal_hidden(ByteSpan input, const RevealOptions& options) {
    RevealResult result;

    BoxTree tree = parse_tree(input);
    if (tree.fatal) {
        result.parse_failed = true;
        return result;
    }
    FileModel model = build_file_model(tree, input);

    result.output.assign(input.begin(), input.end());

    auto selected = [&](uint32_t id) {
        return options.items.empty() ||
               std::find(options.items.begin(), options.items.end(), id) != options.items.end();
    };
    auto apply = [&](uint64_t flags_offset, uint8_t clear_mask, uint8_t set_mask) {
        // flags_offset points at the 3-byte flags field; bit 0x1 lives in
        // its last byte.
        uint64_t off = flags_offset + 2;
        if (off >= result.output.size()) return;
        uint8_t old_byte = result.output[off];
        uint8_t new_byte = static_cast<uint8_t>((old_byte & ~clear_mask) | set_mask);
        if (new_byte == old_byte) return;
        result.output[off] = new_byte;
        result.change_log.push_back({off, old_byte, new_byte});
    };

    for (auto& item : model.items) {
        if (!item.hidden || !selected(item.item_id)) continue;
        apply(item.infe_flags_offset, 0x1, 0x0);
        if (model.primary_item && *model.primary_item == item.item_id)
            result.notes.push_back("cover (pitm) item " + std::to_string(item.item_id) +
                                   " was flagged hidden, a state the standard does not support; "
                                   "flag cleared");
    }

    if (options.also_enable_tracks) {
        for (auto& track : model.tracks) {
            if (track.enabled) continue;
            apply(track.tkhd_flags_offset, 0x0, 0x1);
        }
    }
    return result;
}

}  // namespace heifsleuth
