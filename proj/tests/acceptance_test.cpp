// Acceptance suite: one pass/fail line per criterion, non-zero exit on
// any failure. Run via ctest or directly from the build directory.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "heifsleuth/report.hpp"
#include "test_helpers.hpp"

using namespace heifsleuth;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool ok, const std::string& detail = "") {
    std::cout << "criterion " << criterion << " (" << name << "): " << (ok ? "PASS" : "FAIL");
    if (!detail.empty()) std::cout << " — " << detail;
    std::cout << std::endl;
    if (!ok) ++g_failures;
}

ByteBuffer read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return ByteBuffer((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& p, ByteSpan bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string system_digest(const char* tool, ByteSpan bytes) {
    char path[] = "/tmp/heifsleuth_accept_XXXXXX";
    int fd = mkstemp(path);
    if (fd < 0) return "";
    write_file(path, bytes);
    std::string cmd = std::string(tool) + " " + path;
    FILE* pipe = popen(cmd.c_str(), "r");
    std::string line;
    if (pipe) {
        char buf[256] = {};
        if (fgets(buf, sizeof buf, pipe)) line = buf;
        pclose(pipe);
    }
    close(fd);
    std::remove(path);
    return line.substr(0, line.find(' '));
}

FileModel model_of(ByteSpan data) {
    BoxTree tree = parse_tree(data);
    return build_file_model(tree, data);
}

// Structural replica of the Nokia overlay reference: four masters feeding
// a visible derived overlay primary.
fixture::FixtureSpec overlay_spec() {
    fixture::FixtureSpec spec;
    spec.seed = 40;
    std::vector<uint32_t> sources;
    for (uint32_t i = 1; i <= 4; ++i) {
        fixture::ItemSpec master;
        master.id = i;
        fixture::PropertySpec ispe;
        ispe.fourcc = FourCC("ispe");
        ispe.width = 500;
        ispe.height = 340;
        master.properties.push_back(ispe);
        spec.items.push_back(master);
        sources.push_back(i);
    }
    fixture::ItemSpec overlay;
    overlay.id = 5;
    overlay.type = FourCC("iovl");
    overlay.name = "Derived image";
    overlay.payload_len = 24;
    spec.items.push_back(overlay);
    spec.references.push_back({FourCC("dimg"), 5, sources});
    spec.primary_item = 5;
    return spec;
}

struct RoleCounts {
    int masters = 0, grids = 0, overlays = 0, others = 0;
    std::optional<ItemRole> primary_role;
};

RoleCounts count_roles(const FileAnalysis& fa) {
    RoleCounts c;
    for (auto& r : fa.analysis.roles) {
        switch (r.role) {
            case ItemRole::Master: ++c.masters; break;
            case ItemRole::DerivedGrid: ++c.grids; break;
            case ItemRole::DerivedOverlay: ++c.overlays; break;
            default: ++c.others; break;
        }
        if (r.primary) c.primary_role = r.role;
    }
    return c;
}

// --- criteria ---

void criterion_corpus() {
    // Prefer the published reference images when a corpus directory is
    // available; otherwise use structural replicas built from their
    // documented item layout.
    fs::path corpus = fs::path(HEIFSLEUTH_SOURCE_DIR) / "tests" / "corpus";
    ByteBuffer grid_bytes, overlay_bytes;
    std::string source = "replica fixtures";
    if (fs::exists(corpus / "grid_960x640.heic") && fs::exists(corpus / "overlay_1000x680.heic")) {
        grid_bytes = read_file(corpus / "grid_960x640.heic");
        overlay_bytes = read_file(corpus / "overlay_1000x680.heic");
        source = "reference corpus";
    } else {
        grid_bytes = fixture::build(testing::grid_spec(4, /*hide_tiles=*/true));
        overlay_bytes = fixture::build(overlay_spec());
    }

    auto t0 = std::chrono::steady_clock::now();
    FileAnalysis grid = analyze_bytes(grid_bytes, "grid_960x640.heic");
    FileAnalysis overlay = analyze_bytes(overlay_bytes, "overlay_1000x680.heic");
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    RoleCounts g = count_roles(grid);
    RoleCounts o = count_roles(overlay);
    bool ok = g.masters == 4 && g.grids == 1 && g.primary_role == ItemRole::DerivedGrid &&
              o.masters == 4 && o.overlays == 1 && o.primary_role == ItemRole::DerivedOverlay &&
              elapsed < 2.0;  // two files, < 1 s each
    char detail[160];
    snprintf(detail, sizeof detail,
             "%s: grid %dM+%dG, overlay %dM+%dO, %.3fs for both", source.c_str(), g.masters,
             g.grids, o.masters, o.overlays, elapsed);
    report(1, "corpus structure", ok, detail);
}

void criterion_hidden_bit() {
    std::mt19937_64 rng(0xacc2);
    int ok_cases = 0;
    const int total = 200;
    for (int i = 0; i < total; ++i) {
        fixture::FixtureSpec spec = testing::random_spec(rng);
        for (auto& item : spec.items) item.hidden = false;
        ByteBuffer clean = fixture::build(spec);
        uint32_t victim = spec.items[rng() % spec.items.size()].id;
        ByteBuffer mutated = fixture::flip_hidden(clean, victim);

        FileAnalysis before = analyze_bytes(clean);
        FileAnalysis after = analyze_bytes(mutated);

        std::vector<uint32_t> before_ids, after_ids;
        for (auto& f : before.analysis.findings)
            if (f.code == finding_code::HiddenItem)
                before_ids.insert(before_ids.end(), f.item_ids.begin(), f.item_ids.end());
        for (auto& f : after.analysis.findings)
            if (f.code == finding_code::HiddenItem)
                after_ids.insert(after_ids.end(), f.item_ids.begin(), f.item_ids.end());

        if (before_ids.empty() && after_ids == std::vector<uint32_t>{victim}) ++ok_cases;
    }
    report(2, "hidden-bit detection", ok_cases == total,
           std::to_string(ok_cases) + "/" + std::to_string(total) + " exact detections");
}

void criterion_reveal() {
    std::mt19937_64 rng(0xacc3);
    int checked = 0, failed = 0;
    for (int i = 0; i < 100; ++i) {
        fixture::FixtureSpec spec = testing::random_spec(rng);
        ByteBuffer data = fixture::build(spec);
        size_t k = 0;
        for (auto& item : spec.items)
            if (item.hidden) ++k;
        ++checked;

        RevealResult r = reveal_hidden(data);
        bool ok = !r.parse_failed && r.change_log.size() == k && r.output.size() == data.size();

        size_t diffs = 0;
        for (size_t b = 0; b < data.size(); ++b)
            if (data[b] != r.output[b]) ++diffs;
        ok = ok && diffs == k;

        FileModel after = model_of(r.output);
        for (auto& item : after.items) ok = ok && !item.hidden;

        FileModel before = model_of(data);
        for (auto& item : before.items) {
            ItemHashResult a = hash_item(before, data, item.item_id);
            ItemHashResult b = hash_item(after, r.output, item.item_id);
            ok = ok && a.error == HashError::None && b.error == HashError::None &&
                 a.digest.sha256_hex() == b.digest.sha256_hex();
        }

        RevealResult again = reveal_hidden(r.output);
        ok = ok && again.change_log.empty() && again.output == r.output;

        if (!ok) ++failed;
    }
    report(3, "reveal correctness", failed == 0,
           std::to_string(checked - failed) + "/" + std::to_string(checked) + " fixtures");
}

void criterion_round_trip() {
    std::mt19937_64 rng(0xacc4);
    const int total = 1000;
    int failed = 0;
    for (int i = 0; i < total; ++i) {
        fixture::FixtureSpec spec = testing::random_spec(rng);
        ByteBuffer data = fixture::build(spec);
        BoxTree tree = parse_tree(data);
        FileModel m = build_file_model(tree, data);
        bool ok = m.items.size() == spec.items.size();

        for (auto& is : spec.items) {
            const ItemRecord* item = m.find_item(is.id);
            if (!item) {
                ok = false;
                break;
            }
            ok = ok && item->item_type == is.type && item->hidden == is.hidden &&
                 item->name == is.name && item->extents.size() == is.extent_split &&
                 item->total_extent_length() == is.payload_len;
            ByteBuffer expected = fixture::item_payload(spec, is.id);
            ByteBuffer actual;
            for (auto& e : item->extents) {
                if (!e.absolute) {
                    ok = false;
                    break;
                }
                actual.insert(actual.end(), data.begin() + e.absolute->start,
                              data.begin() + e.absolute->end);
            }
            ok = ok && actual == expected;
        }

        if (spec.primary_item)
            ok = ok && m.primary_item == *spec.primary_item;
        else
            ok = ok && !m.primary_item;

        ok = ok && m.references.size() == spec.references.size();
        for (size_t r = 0; ok && r < spec.references.size(); ++r)
            ok = m.references[r].ref_type == spec.references[r].type &&
                 m.references[r].from_item == spec.references[r].from &&
                 m.references[r].to_items == spec.references[r].to;

        ok = ok && m.tracks.size() == spec.tracks.size();
        for (size_t t = 0; ok && t < spec.tracks.size(); ++t)
            ok = m.tracks[t].track_id == spec.tracks[t].track_id &&
                 m.tracks[t].tkhd_flags == spec.tracks[t].tkhd_flags;

        if (spec.trailing_garbage == 0) {
            CoverageMap cov = compute_coverage(tree, m.resolved_extents());
            ok = ok && cov.unreferenced_bytes() == 0;
        }
        if (!ok) ++failed;
    }
    report(4, "round-trip property", failed == 0,
           std::to_string(total - failed) + "/" + std::to_string(total) + " specs");
}

void criterion_hash_oracle() {
    std::mt19937_64 rng(0xacc5);
    int failed = 0;
    const int total = 50;
    for (int i = 0; i < total; ++i) {
        fixture::FixtureSpec spec = testing::random_spec(rng);
        // force at least one multi-extent item
        spec.items[0].extent_split = 2 + static_cast<uint32_t>(rng() % 2);
        spec.items[0].payload_len = std::max<uint32_t>(spec.items[0].payload_len, 24);
        ByteBuffer data = fixture::build(spec);
        FileModel m = model_of(data);

        bool ok = true;
        DigestSet file = hash_file(data);
        ok = ok && file.md5_hex() == system_digest("md5sum", data) &&
             file.sha1_hex() == system_digest("sha1sum", data) &&
             file.sha256_hex() == system_digest("sha256sum", data);

        for (auto& is : spec.items) {
            ItemHashResult r = hash_item(m, data, is.id);
            if (r.error != HashError::None) {
                ok = false;
                continue;
            }
            ByteBuffer payload = fixture::item_payload(spec, is.id);
            ok = ok && r.digest.md5_hex() == system_digest("md5sum", payload) &&
                 r.digest.sha1_hex() == system_digest("sha1sum", payload) &&
                 r.digest.sha256_hex() == system_digest("sha256sum", payload);
        }
        if (!ok) ++failed;
    }
    report(5, "hash oracle equivalence", failed == 0,
           std::to_string(total - failed) + "/" + std::to_string(total) + " fixtures");
}

void criterion_mint() {
    int ok_cases = 0;
    const int total = 100;
    for (int i = 0; i < total; ++i) {
        bool corrupt = i % 2 == 1;
        fixture::FixtureSpec spec = testing::minimal_spec(1000 + static_cast<uint64_t>(i));
        spec.mint = corrupt ? fixture::MintMode::Corrupted : fixture::MintMode::Correct;
        spec.mint_item_id = 2;
        spec.mint_target = 1;
        ByteBuffer data = fixture::build(spec);
        auto checks = verify_mint(model_of(data), data);
        if (checks.size() == 1 &&
            checks[0].status == (corrupt ? MintStatus::Mismatch : MintStatus::Match) &&
            checks[0].target_item == 1)
            ++ok_cases;
    }
    report(6, "mint verification", ok_cases == total,
           std::to_string(ok_cases) + "/" + std::to_string(total) + " verdicts");
}

void criterion_carving() {
    std::mt19937_64 rng(0xacc7);
    const size_t blob_len = 64ull << 20;
    ByteBuffer blob(blob_len);
    for (size_t i = 0; i + 8 <= blob_len; i += 8) {
        uint64_t v = rng();
        std::memcpy(blob.data() + i, &v, 8);
    }

    // plant 100 fixtures, one per disjoint stripe
    const int total = 100;
    const size_t stripe = blob_len / total;
    std::vector<uint64_t> planted;
    for (int i = 0; i < total; ++i) {
        fixture::FixtureSpec spec = testing::random_spec(rng);
        spec.trailing_garbage = 0;
        ByteBuffer image = fixture::build(spec);
        uint64_t at = static_cast<uint64_t>(i) * stripe + rng() % (stripe - image.size());
        std::copy(image.begin(), image.end(), blob.begin() + static_cast<ptrdiff_t>(at));
        planted.push_back(at);
    }

    auto t0 = std::chrono::steady_clock::now();
    ScanResult r = scan(blob);
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::vector<uint64_t> found;
    for (auto& c : r.heif) found.push_back(c.start);
    std::sort(found.begin(), found.end());

    int recovered = 0;
    for (uint64_t at : planted)
        if (std::binary_search(found.begin(), found.end(), at)) ++recovered;

    bool no_fabrication = true;
    for (auto& c : r.heif)
        if (c.start + 8 > blob.size() || std::memcmp(blob.data() + c.start + 4, "ftyp", 4) != 0)
            no_fabrication = false;
    for (auto& c : r.non_heif)
        if (c.start + 8 > blob.size() || std::memcmp(blob.data() + c.start + 4, "ftyp", 4) != 0)
            no_fabrication = false;

    bool ok = recovered == total && no_fabrication && elapsed < 30.0;
    char detail[160];
    snprintf(detail, sizeof detail, "recall %d/%d, %zu candidates, %.2fs", recovered, total,
             r.heif.size(), elapsed);
    report(7, "carving recall", ok, detail);
}

void criterion_evidence_safety() {
    fs::path dir = fs::temp_directory_path() / "heifsleuth_accept_cli";
    fs::remove_all(dir);
    fs::create_directories(dir / "out");
    fs::path input = dir / "evidence.heic";
    fixture::FixtureSpec spec = testing::thumbnail_spec();
    spec.items[1].hidden = true;
    write_file(input, fixture::build(spec));

    std::string before_hash = hash_file(read_file(input)).sha256_hex();
    auto before_mtime = fs::last_write_time(input);

    std::string cli = HEIFSLEUTH_CLI_PATH;
    std::string in = input.string();
    std::string out = (dir / "out").string();
    std::vector<std::string> commands = {
        cli + " inspect " + in,
        cli + " analyze " + in,
        cli + " analyze " + in + " --json",
        cli + " hash " + in,
        cli + " extract " + in + " " + out + " --all",
        cli + " reveal " + in + " " + (dir / "revealed.heic").string(),
        cli + " carve " + in + " " + out,
    };
    bool ok = true;
    for (auto& cmd : commands) {
        int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
        (void)rc;  // analyze legitimately exits 3 on alert findings
        if (hash_file(read_file(input)).sha256_hex() != before_hash ||
            fs::last_write_time(input) != before_mtime) {
            ok = false;
            std::cout << "  input modified by: " << cmd << std::endl;
        }
    }

    // in-place reveal must be refused and leave the file untouched
    int rc = std::system((cli + " reveal " + in + " " + in + " > /dev/null 2>&1").c_str());
    bool refused = rc != 0;
    ok = ok && refused && hash_file(read_file(input)).sha256_hex() == before_hash;

    fs::remove_all(dir);
    report(8, "evidence safety", ok,
           refused ? "inputs untouched, in-place reveal refused" : "in-place reveal not refused");
}

void criterion_external_refs() {
    std::mt19937_64 rng(0xacc9);
    int failed = 0;
    const int total = 100;
    for (int i = 0; i < total; ++i) {
        fixture::FixtureSpec spec = testing::random_spec(rng);
        spec.dref_entries.clear();
        bool external = i % 2 == 0;
        std::string url = "http://host" + std::to_string(i) + ".test/payload-" + std::to_string(i);
        if (external)
            spec.dref_entries.push_back({false, false, url, ""});
        else
            spec.dref_entries.push_back({true, false, "", ""});

        ByteBuffer data = fixture::build(spec);
        FileAnalysis fa = analyze_bytes(data);
        std::vector<const Finding*> hits;
        for (auto& f : fa.analysis.findings)
            if (f.code == finding_code::ExternalDataRef) hits.push_back(&f);

        bool ok;
        if (external) {
            ok = hits.size() == 1;
            if (ok) {
                bool exact = false;
                for (auto& [k, v] : hits[0]->detail)
                    if (k == "location" && v == url) exact = true;
                ok = exact && hits[0]->message.find(url) != std::string::npos;
            }
        } else {
            ok = hits.empty();
        }
        if (!ok) ++failed;
    }
    report(9, "external-reference detection", failed == 0,
           std::to_string(total - failed) + "/" + std::to_string(total) + " fixtures");
}

}  // namespace

int main() {
    criterion_corpus();
    criterion_hidden_bit();
    criterion_reveal();
    criterion_round_trip();
    criterion_hash_oracle();
    criterion_mint();
    criterion_carving();
    criterion_evidence_safety();
    criterion_external_refs();
    if (g_failures == 0) {
        std::cout << "all acceptance criteria passed" << std::endl;
        return 0;
    }
    std::cout << g_failures << " criterion(s) failed" << std::endl;
    return 1;
}
