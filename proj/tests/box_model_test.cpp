#include <doctest.h>

#include "heifsleuth/box.hpp"
#include "heifsleuth/model.hpp"
#include "test_helpers.hpp"

using namespace heifsleuth;

namespace {

ByteBuffer bytes_of(std::initializer_list<uint8_t> init) { return ByteBuffer(init); }

// Every successfully parsed box must be exactly tiled by its header span,
// its children's spans and its raw payload remainder.
void check_tiling(const BoxNode& node) {
    uint64_t cursor = node.header.offset;
    CHECK(node.header.payload_span.start == node.header.offset + node.header.header_len);
    cursor = node.header.payload_span.start;
    if (node.children.empty()) {
        CHECK(node.raw_payload_span == node.header.payload_span);
        return;
    }
    uint64_t prev_end = 0;
    for (const auto& child : node.children) {
        CHECK(child.header.offset >= prev_end);  // non-overlapping, ascending
        CHECK(child.header.offset >= node.header.payload_span.start);
        CHECK(child.header.end() <= node.header.payload_span.end);
        prev_end = child.header.end();
        check_tiling(child);
    }
    CHECK(node.raw_payload_span.start == prev_end);
    CHECK(node.raw_payload_span.end == node.header.payload_span.end);
}

}  // namespace

TEST_CASE("parse_box_header reads a plain 32-bit box") {
    auto data = bytes_of({0x00, 0x00, 0x00, 0x18, 'f', 't', 'y', 'p'});
    data.resize(24, 0xaa);
    auto res = parse_box_header(data, 0, data.size());
    REQUIRE(res.status == HeaderParseStatus::Ok);
    CHECK(res.header.declared_size == 24);
    CHECK(res.header.fourcc == FourCC("ftyp"));
    CHECK(res.header.header_len == 8);
    CHECK(res.header.payload_span == ByteRange{8, 24});
}

TEST_CASE("parse_box_header accepts the minimum legal box") {
    auto data = bytes_of({0x00, 0x00, 0x00, 0x08, 'm', 'd', 'a', 't'});
    auto res = parse_box_header(data, 0, data.size());
    REQUIRE(res.status == HeaderParseStatus::Ok);
    CHECK(res.header.payload_span == ByteRange{8, 8});
    CHECK(res.header.payload_span.empty());
}

TEST_CASE("parse_box_header follows a 64-bit largesize") {
    auto data = bytes_of({0x00, 0x00, 0x00, 0x01, 'm', 'd', 'a', 't',  //
                          0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x20});
    data.resize(32, 0xbb);
    auto res = parse_box_header(data, 0, data.size());
    REQUIRE(res.status == HeaderParseStatus::Ok);
    CHECK(res.header.header_len == 16);
    CHECK(res.header.payload_span == ByteRange{16, 32});
}

TEST_CASE("parse_box_header resolves size zero to the scope end") {
    auto data = bytes_of({0x00, 0x00, 0x00, 0x00, 'm', 'd', 'a', 't'});
    data.resize(40, 0xcc);
    auto res = parse_box_header(data, 0, data.size());
    REQUIRE(res.status == HeaderParseStatus::Ok);
    CHECK(res.header.payload_span == ByteRange{8, 40});
}

TEST_CASE("parse_box_header error paths") {
    SUBCASE("fewer than 8 bytes") {
        auto data = bytes_of({0x00, 0x00, 0x00, 0x10, 'f', 't', 'y'});
        CHECK(parse_box_header(data, 0, data.size()).status == HeaderParseStatus::TruncatedBox);
    }
    SUBCASE("declared size past the scope end") {
        auto data = bytes_of({0x00, 0x00, 0x01, 0x00, 'm', 'd', 'a', 't'});
        CHECK(parse_box_header(data, 0, data.size()).status == HeaderParseStatus::SizeOverflow);
    }
    SUBCASE("declared size smaller than the header") {
        auto data = bytes_of({0x00, 0x00, 0x00, 0x04, 'm', 'd', 'a', 't'});
        CHECK(parse_box_header(data, 0, data.size()).status == HeaderParseStatus::SizeOverflow);
    }
}

TEST_CASE("parse_tree on a minimal fixture") {
    auto spec = testing::minimal_spec();
    ByteBuffer data = fixture::build(spec);
    BoxTree tree = parse_tree(data);
    REQUIRE_FALSE(tree.fatal);
    REQUIRE(tree.roots.size() == 3);  // ftyp, meta, mdat
    CHECK(tree.roots[0].header.fourcc == FourCC("ftyp"));
    CHECK(tree.roots[1].header.fourcc == FourCC("meta"));
    CHECK(tree.roots[2].header.fourcc == FourCC("mdat"));
    CHECK(tree.roots[1].children.size() >= 3);  // hdlr, pitm, iloc, iinf
    for (auto& r : tree.roots) check_tiling(r);
}

TEST_CASE("parse_tree on empty input is fatal but total") {
    BoxTree tree = parse_tree(ByteSpan{});
    CHECK(tree.fatal);
    CHECK(tree.roots.empty());
    REQUIRE(tree.diagnostics.size() == 1);
    CHECK(tree.diagnostics[0].code == DiagCode::EmptyInput);
}

TEST_CASE("parse_tree survives a corrupted sibling size") {
    ByteBuffer data = fixture::build(testing::minimal_spec());
    ByteBuffer bad = fixture::corrupt_size(data, 2);  // mdat size overruns
    BoxTree tree = parse_tree(bad);
    CHECK_FALSE(tree.fatal);
    CHECK(tree.roots.size() >= 2);  // ftyp + meta still parse
    bool overflow_reported = false;
    for (auto& d : tree.diagnostics)
        if (d.code == DiagCode::SizeOverflow) overflow_reported = true;
    CHECK(overflow_reported);
}

TEST_CASE("parse_tree is deterministic") {
    ByteBuffer data = fixture::build(testing::grid_spec());
    BoxTree a = parse_tree(data);
    BoxTree b = parse_tree(data);
    REQUIRE(a.roots.size() == b.roots.size());
    CHECK(a.diagnostics.size() == b.diagnostics.size());
    for (size_t i = 0; i < a.roots.size(); ++i) {
        CHECK(a.roots[i].header.offset == b.roots[i].header.offset);
        CHECK(a.roots[i].header.end() == b.roots[i].header.end());
    }
}

TEST_CASE("tiling invariant holds over random fixtures") {
    std::mt19937_64 rng(0xb0c5);
    for (int i = 0; i < 50; ++i) {
        ByteBuffer data = fixture::build(testing::random_spec(rng));
        BoxTree tree = parse_tree(data);
        REQUIRE_FALSE(tree.fatal);
        for (auto& r : tree.roots) check_tiling(r);
    }
}

TEST_CASE("FourCC escapes non-printable bytes instead of dropping them") {
    FourCC cc(0x00, 'a', 0x7f, 'b');
    CHECK(cc.str() == "\\x00a\\x7fb");
    CHECK_FALSE(cc.printable());
    CHECK(FourCC("infe").str() == "infe");
}

TEST_CASE("compute_coverage: fully indexed fixture has zero slack") {
    auto spec = testing::minimal_spec();
    ByteBuffer data = fixture::build(spec);
    BoxTree tree = parse_tree(data);
    FileModel model = build_file_model(tree, data);
    CoverageMap cov = compute_coverage(tree, model.resolved_extents());
    CHECK(cov.unreferenced_bytes() == 0);
    CHECK(cov.unreferenced().empty());
}

TEST_CASE("compute_coverage: trailing bytes become one tail region") {
    auto spec = testing::minimal_spec();
    spec.trailing_garbage = 16;
    ByteBuffer data = fixture::build(spec);
    BoxTree tree = parse_tree(data);
    FileModel model = build_file_model(tree, data);
    CoverageMap cov = compute_coverage(tree, model.resolved_extents());
    auto gaps = cov.unreferenced();
    REQUIRE(gaps.size() == 1);
    CHECK(gaps[0].length() == 16);
    CHECK(gaps[0].end == data.size());
}

TEST_CASE("compute_coverage: zero-length file yields no regions") {
    BoxTree tree = parse_tree(ByteSpan{});
    CoverageMap cov = compute_coverage(tree, {});
    CHECK(cov.unreferenced().empty());
    CHECK(cov.unreferenced_bytes() == 0);
}

TEST_CASE("compute_coverage: unindexed gap inside mdat is unreferenced") {
    auto spec = testing::minimal_spec();
    spec.items[0].extent_split = 2;
    spec.items[0].extent_gap = 64;
    ByteBuffer data = fixture::build(spec);
    BoxTree tree = parse_tree(data);
    FileModel model = build_file_model(tree, data);
    CoverageMap cov = compute_coverage(tree, model.resolved_extents());
    auto gaps = cov.unreferenced();
    REQUIRE(gaps.size() == 1);
    CHECK(gaps[0].length() == 64);
}

TEST_CASE("serializing parsed spans reproduces the input bytes") {
    // Round trip at the byte-accounting level: concatenating every root
    // box span in order, plus nothing else, equals the original file.
    std::mt19937_64 rng(0x70f1);
    for (int i = 0; i < 20; ++i) {
        auto spec = testing::random_spec(rng);
        spec.trailing_garbage = 0;
        ByteBuffer data = fixture::build(spec);
        BoxTree tree = parse_tree(data);
        ByteBuffer rebuilt;
        for (auto& r : tree.roots)
            rebuilt.insert(rebuilt.end(), data.begin() + r.header.offset, data.begin() + r.header.end());
        CHECK(rebuilt == data);
    }
}
