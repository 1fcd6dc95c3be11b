#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "heifsleuth/carver.hpp"
#include "heifsleuth/fixture.hpp"
#include "heifsleuth/report.hpp"
#include "heifsleuth/rewriter.hpp"

namespace fs = std::filesystem;
using namespace heifsleuth;

namespace {

// Exit codes: 0 clean, 1 usage/I/O, 2 parse-fatal, 3 findings over threshold.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitParseFatal = 2;
constexpr int kExitFindings = 3;

// Inputs are only ever opened read-only.
bool read_file(const std::string& path, ByteBuffer& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    in.seekg(0, std::ios::end);
    auto len = in.tellg();
    if (len < 0) {  // pipes and other non-seekable inputs
        in.clear();
        in.seekg(0, std::ios::beg);
        out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
        return true;
    }
    in.seekg(0, std::ios::beg);
    out.resize(static_cast<size_t>(len));
    in.read(reinterpret_cast<char*>(out.data()), len);
    return static_cast<bool>(in) || len == std::streampos(0);
}

bool write_file(const std::string& path, ByteSpan data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    return static_cast<bool>(out);
}

Severity parse_severity(const std::string& s) {
    if (s == "info") return Severity::Info;
    if (s == "notice") return Severity::Notice;
    if (s == "warning") return Severity::Warning;
    return Severity::Alert;
}

int run_inspect(const std::string& path) {
    ByteBuffer data;
    if (!read_file(path, data)) {
        std::cerr << "error: cannot read '" << path << "'\n";
        return kExitUsage;
    }
    auto [kind, brands] = detect_heif(data);
    if (kind == HeifKind::NotHeif)
        std::cout << "NOT HEIF: no HEIF brand detected in the leading ftyp box\n";
    else
        std::cout << "HEIF (" << heif_kind_name(kind) << "), major brand '" << brands.major.str()
                  << "'\n";
    BoxTree tree = parse_tree(data);
    std::cout << render_tree(tree);
    for (auto& d : tree.diagnostics)
        std::cout << "diagnostic: " << diag_code_name(d.code) << " at offset " << d.offset << ": "
                  << d.message << "\n";
    return tree.fatal ? kExitParseFatal : kExitOk;
}

int run_analyze(const std::string& path, bool json, const std::string& fail_on,
                uint64_t slack_threshold) {
    ByteBuffer data;
    if (!read_file(path, data)) {
        std::cerr << "error: cannot read '" << path << "'\n";
        return kExitUsage;
    }
    BoxTree probe = parse_tree(data);
    if (probe.fatal) {
        std::cerr << "error: input is not parseable as an ISOBMFF stream\n";
        return kExitParseFatal;
    }
    AnalyzerOptions opts;
    opts.slack_threshold = slack_threshold;
    FileAnalysis fa = analyze_bytes(data, path, opts);

    if (json) {
        std::cout << make_report(fa, path, data).dump(2) << "\n";
    } else {
        std::cout << "file: " << path << " (" << data.size() << " bytes)\n";
        std::cout << "detection: " << heif_kind_name(fa.model.kind) << ", handler '"
                  << fa.model.handler.str() << "'\n";
        std::cout << "md5 " << fa.file_digest.md5_hex() << "\n";
        std::cout << "items:\n";
        for (auto& item : fa.model.items) {
            const ItemClassification* cls = fa.analysis.role_of(item.item_id);
            std::cout << "  #" << item.item_id << " '" << item.item_type.str() << "' role="
                      << (cls ? item_role_name(cls->role) : "unknown")
                      << (cls && cls->primary ? " primary" : "") << (item.hidden ? " HIDDEN" : "")
                      << " \"" << item.name << "\"\n";
        }
        for (auto& t : fa.model.tracks)
            std::cout << "  track #" << t.track_id << (t.enabled ? " enabled" : " DISABLED") << "\n";
        std::cout << "findings (" << fa.analysis.findings.size() << "):\n"
                  << render_findings(fa.analysis.findings);
    }

    Severity threshold = parse_severity(fail_on);
    for (auto& f : fa.analysis.findings)
        if (static_cast<int>(f.severity) >= static_cast<int>(threshold)) return kExitFindings;
    return kExitOk;
}

int run_extract(const std::string& path, std::optional<uint32_t> item_id, bool all,
                const std::string& outdir) {
    ByteBuffer data;
    if (!read_file(path, data)) {
        std::cerr << "error: cannot read '" << path << "'\n";
        return kExitUsage;
    }
    BoxTree tree = parse_tree(data);
    if (tree.fatal) return kExitParseFatal;
    FileModel model = build_file_model(tree, data);
    std::error_code ec;
    fs::create_directories(outdir, ec);

    int written = 0;
    for (auto& item : model.items) {
        if (!all && (!item_id || *item_id != item.item_id)) continue;

        bool external = false;
        if (item.data_reference_index != 0) {
            external = true;
            for (auto& d : model.data_references)
                if (d.index == item.data_reference_index && d.self_contained) external = false;
        }
        if (external) {
            std::cout << "item " << item.item_id
                      << ": skipped, EXTERNAL_DATA_REF (payload lives outside this file)\n";
            continue;
        }

        ByteBuffer payload;
        bool ok = true;
        for (auto& e : item.extents) {
            if (!e.absolute || e.absolute->end > data.size()) {
                ok = false;
                break;
            }
            payload.insert(payload.end(), data.begin() + e.absolute->start,
                           data.begin() + e.absolute->end);
        }
        if (!ok) {
            std::cout << "item " << item.item_id << ": skipped, extents not resolvable in-file\n";
            continue;
        }
        std::string base = outdir + "/item_" + std::to_string(item.item_id) + "_" +
                           item.item_type.str() + ".bin";
        if (!write_file(base, payload)) {
            std::cerr << "error: cannot write '" << base << "'\n";
            return kExitUsage;
        }
        std::cout << "wrote " << base << " (" << payload.size() << " bytes)\n";
        ++written;

        // Exif items: first 4 payload bytes are a big-endian offset to the
        // TIFF header; emit a TIFF-aligned variant too.
        if (item.item_type == FourCC("Exif") && payload.size() >= 4) {
            uint32_t tiff_off = read_u32be(payload, 0);
            if (4ull + tiff_off <= payload.size()) {
                std::string exif_path = outdir + "/item_" + std::to_string(item.item_id) + ".exif";
                ByteSpan tiff(payload.data() + 4 + tiff_off, payload.size() - 4 - tiff_off);
                if (write_file(exif_path, tiff))
                    std::cout << "wrote " << exif_path << " (" << tiff.size() << " bytes)\n";
            }
        }
    }
    if (!all && written == 0) {
        std::cerr << "error: item not found or not extractable\n";
        return kExitUsage;
    }
    return kExitOk;
}

int run_hash(const std::string& path) {
    ByteBuffer data;
    if (!read_file(path, data)) {
        std::cerr << "error: cannot read '" << path << "'\n";
        return kExitUsage;
    }
    DigestSet file = hash_file(data);
    std::cout << "file md5    " << file.md5_hex() << "\n";
    std::cout << "file sha1   " << file.sha1_hex() << "\n";
    std::cout << "file sha256 " << file.sha256_hex() << "\n";
    BoxTree tree = parse_tree(data);
    if (tree.fatal) return kExitOk;
    FileModel model = build_file_model(tree, data);
    for (auto& item : model.items) {
        ItemHashResult r = hash_item(model, data, item.item_id);
        if (r.error == HashError::None)
            std::cout << "item " << item.item_id << " md5 " << r.digest.md5_hex() << " sha1 "
                      << r.digest.sha1_hex() << " sha256 " << r.digest.sha256_hex() << " ("
                      << r.digest.byte_count << " bytes)\n";
        else
            std::cout << "item " << item.item_id << " not hashable: " << hash_error_name(r.error)
                      << "\n";
    }
    return kExitOk;
}

int run_reveal(const std::string& path, const std::string& out_path, const std::string& items_csv,
               bool enable_tracks) {
    std::error_code ec;
    if (fs::weakly_canonical(path, ec) == fs::weakly_canonical(out_path, ec)) {
        std::cerr << "error: refusing to overwrite the evidence file; output must differ from input\n";
        return kExitUsage;
    }
    ByteBuffer data;
    if (!read_file(path, data)) {
        std::cerr << "error: cannot read '" << path << "'\n";
        return kExitUsage;
    }
    RevealOptions opts;
    opts.also_enable_tracks = enable_tracks;
    if (!items_csv.empty()) {
        size_t pos = 0;
        while (pos < items_csv.size()) {
            size_t comma = items_csv.find(',', pos);
            if (comma == std::string::npos) comma = items_csv.size();
            opts.items.push_back(static_cast<uint32_t>(std::stoul(items_csv.substr(pos, comma - pos))));
            pos = comma + 1;
        }
    }
    RevealResult result = reveal_hidden(data, opts);
    if (result.parse_failed) {
        std::cerr << "error: input is not parseable; nothing revealed\n";
        return kExitParseFatal;
    }
    if (!write_file(out_path, result.output)) {
        std::cerr << "error: cannot write '" << out_path << "'\n";
        return kExitUsage;
    }
    if (result.change_log.empty())
        std::cout << "nothing to reveal: no hidden flags matched\n";
    for (auto& c : result.change_log) {
        char buf[64];
        snprintf(buf, sizeof buf, "%llu: %02x->%02x", static_cast<unsigned long long>(c.offset),
                 c.old_byte, c.new_byte);
        std::cout << buf << "\n";
    }
    for (auto& n : result.notes) std::cout << "note: " << n << "\n";
    std::cout << "wrote " << out_path << " (" << result.output.size() << " bytes, "
              << result.change_log.size() << " byte(s) changed)\n";
    return kExitOk;
}

int run_carve(const std::string& blob_path, const std::string& outdir, double min_score) {
    ByteBuffer blob;
    if (!read_file(blob_path, blob)) {
        std::cerr << "error: cannot read '" << blob_path << "'\n";
        return kExitUsage;
    }
    ScanResult result = scan(blob);
    std::error_code ec;
    fs::create_directories(outdir, ec);
    int n = 0;
    for (auto& cand : result.heif) {
        std::cout << "candidate at " << cand.start << ".." << cand.end << " score=" << cand.score
                  << " boxes=" << cand.boxes_walked << " stop=" << carve_stop_name(cand.stop_reason)
                  << " brand=" << cand.brands.major.str() << (cand.partial() ? " PARTIAL" : "")
                  << "\n";
        if (cand.score < min_score) continue;
        std::string dest = outdir + "/carved_" + std::to_string(cand.start) + ".heic";
        extract(blob, cand, dest);
        std::cout << "  extracted to " << dest << "\n";
        ++n;
    }
    for (auto& cand : result.non_heif)
        std::cout << "non-HEIF ftyp at " << cand.start << " (brand '" << cand.brands.major.str()
                  << "')\n";
    std::cout << n << " candidate(s) extracted\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heifsleuth - forensic HEIF/HEIC container analyzer"};
    app.require_subcommand(1);

    std::string path, out_path, outdir, items_csv;
    std::string fail_on = "alert";
    uint64_t slack_threshold = 8;
    bool json = false, all_items = false, enable_tracks = false;
    std::optional<uint32_t> item_id;
    double min_score = 0.5;

    auto* inspect = app.add_subcommand("inspect", "print the box tree");
    inspect->add_option("path", path)->required();

    auto* analyze = app.add_subcommand("analyze", "full forensic analysis");
    analyze->add_option("path", path)->required();
    analyze->add_flag("--json", json, "emit the JSON report");
    analyze->add_option("--fail-on", fail_on, "exit 3 at this severity or above")
        ->check(CLI::IsMember({"info", "notice", "warning", "alert"}));
    analyze->add_option("--slack-threshold", slack_threshold,
                        "minimum unreferenced-region size to report (bytes)");

    auto* extract_cmd = app.add_subcommand("extract", "write item payloads to files");
    extract_cmd->add_option("path", path)->required();
    extract_cmd->add_option("outdir", outdir)->required();
    uint32_t item_opt = 0;
    auto* item_flag = extract_cmd->add_option("--item", item_opt, "extract one item by id");
    extract_cmd->add_flag("--all", all_items, "extract every item");

    auto* hash = app.add_subcommand("hash", "file and per-item digests");
    hash->add_option("path", path)->required();

    auto* reveal = app.add_subcommand("reveal", "working copy with hidden flags cleared");
    reveal->add_option("path", path)->required();
    reveal->add_option("out", out_path)->required();
    reveal->add_option("--items", items_csv, "comma-separated item ids (default: all hidden)");
    reveal->add_flag("--enable-tracks", enable_tracks, "also set the enabled bit on disabled tracks");

    auto* carve = app.add_subcommand("carve", "scan a blob for embedded HEIF files");
    carve->add_option("blob", path)->required();
    carve->add_option("outdir", outdir)->required();
    carve->add_option("--min-score", min_score, "extraction threshold (default 0.5)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (inspect->parsed()) return run_inspect(path);
        if (analyze->parsed()) return run_analyze(path, json, fail_on, slack_threshold);
        if (extract_cmd->parsed()) {
            if (item_flag->count()) item_id = item_opt;
            if (!item_id && !all_items) {
                std::cerr << "error: extract needs --item <id> or --all\n";
                return kExitUsage;
            }
            return run_extract(path, item_id, all_items, outdir);
        }
        if (hash->parsed()) return run_hash(path);
        if (reveal->parsed()) return run_reveal(path, out_path, items_csv, enable_tracks);
        if (carve->parsed()) return run_carve(path, outdir, min_score);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
