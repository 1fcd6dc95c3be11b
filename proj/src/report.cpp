#include "heifsleuth/report.hpp"

#include <cstdio>

namespace heifsleuth {

using nlohmann::ordered_json;

FileAnalysis analyze_bytes(ByteSpan data, const std::string& filename, const AnalyzerOptions& opts) {
    FileAnalysis fa;
    fa.tree = parse_tree(data);
    fa.model = build_file_model(fa.tree, data);
    fa.coverage = compute_coverage(fa.tree, fa.model.resolved_extents());
    fa.analysis = analyze(fa.model, fa.coverage, data, filename, opts);
    fa.file_digest = hash_file(data);
    for (auto& item : fa.model.items) fa.item_digests.push_back(hash_item(fa.model, data, item.item_id));
    fa.mint = verify_mint(fa.model, data);
    return fa;
}

namespace {

ordered_json json_brands(const Brands& b) {
    ordered_json j;
    j["major"] = b.major.str();
    j["minor_version"] = b.minor_version;
    ordered_json compat = ordered_json::array();
    for (auto& c : b.compatible) compat.push_back(c.str());
    j["compatible"] = compat;
    return j;
}

ordered_json json_property(const ItemProperty& p) {
    ordered_json j;
    j["fourcc"] = p.fourcc.str();
    j["essential"] = p.essential;
    switch (p.kind) {
        case ItemProperty::Kind::Ispe:
            j["width"] = p.width;
            j["height"] = p.height;
            break;
        case ItemProperty::Kind::Irot:
            j["angle_degrees"] = p.angle_degrees;
            break;
        case ItemProperty::Kind::Imir:
            j["mirror_axis"] = p.mirror_axis;
            break;
        case ItemProperty::Kind::Pixi:
            j["bits_per_channel"] = p.bits_per_channel;
            break;
        case ItemProperty::Kind::AuxC:
            j["aux_type"] = p.aux_type;
            break;
        default:
            j["raw_hex"] = to_hex(ByteSpan(p.raw.data(), p.raw.size()));
            break;
    }
    return j;
}

ordered_json json_extent(const ItemExtent& e) {
    ordered_json j;
    j["method"] = static_cast<int>(e.method);
    j["offset"] = e.raw_offset;
    j["length"] = e.length;
    if (e.absolute) {
        j["absolute_start"] = e.absolute->start;
        j["absolute_end"] = e.absolute->end;
    } else {
        j["absolute_start"] = nullptr;
        j["absolute_end"] = nullptr;
    }
    return j;
}

ordered_json json_finding(const Finding& f) {
    ordered_json j;
    j["code"] = f.code;
    j["severity"] = severity_name(f.severity);
    if (f.offset)
        j["offset"] = *f.offset;
    else
        j["offset"] = nullptr;
    if (f.length) j["length"] = *f.length;
    if (!f.item_ids.empty()) j["item_ids"] = f.item_ids;
    if (f.track_id) j["track_id"] = *f.track_id;
    j["message"] = f.message;
    ordered_json detail;
    for (auto& [k, v] : f.detail) detail[k] = v;
    j["detail"] = detail;
    return j;
}

}  // namespace

ordered_json make_report(const FileAnalysis& fa, const std::string& path, ByteSpan data,
                         const std::vector<ByteChange>* change_log) {
    ordered_json j;
    j["report_version"] = kReportVersion;
    j["tool_version"] = kToolVersion;

    ordered_json input;
    input["path"] = path;
    input["size"] = data.size();
    input["md5"] = fa.file_digest.md5_hex();
    input["sha1"] = fa.file_digest.sha1_hex();
    input["sha256"] = fa.file_digest.sha256_hex();
    j["input"] = input;

    ordered_json detection;
    detection["kind"] = heif_kind_name(fa.model.kind);
    detection["brands"] = json_brands(fa.model.brands);
    j["detection"] = detection;
    j["handler"] = fa.model.handler.str();
    j["primary_item"] =
        fa.model.primary_item ? ordered_json(*fa.model.primary_item) : ordered_json(nullptr);

    ordered_json items = ordered_json::array();
    for (size_t i = 0; i < fa.model.items.size(); ++i) {
        const ItemRecord& item = fa.model.items[i];
        ordered_json ji;
        ji["id"] = item.item_id;
        ji["type"] = item.item_type.str();
        ji["name"] = item.name;
        ji["hidden"] = item.hidden;
        ji["infe_version"] = item.infe_version;
        ji["infe_flags"] = item.infe_flags;
        ji["infe_flags_offset"] = item.infe_flags_offset;
        if (item.content_type) ji["content_type"] = *item.content_type;
        const ItemClassification* cls = fa.analysis.role_of(item.item_id);
        ji["role"] = cls ? item_role_name(cls->role) : "unknown";
        ji["primary"] = cls ? cls->primary : false;
        ordered_json extents = ordered_json::array();
        for (auto& e : item.extents) extents.push_back(json_extent(e));
        ji["extents"] = extents;
        ordered_json props = ordered_json::array();
        for (auto& p : item.properties) props.push_back(json_property(p));
        ji["properties"] = props;
        if (i < fa.item_digests.size() && fa.item_digests[i].error == HashError::None) {
            ji["md5"] = fa.item_digests[i].digest.md5_hex();
            ji["sha1"] = fa.item_digests[i].digest.sha1_hex();
            ji["sha256"] = fa.item_digests[i].digest.sha256_hex();
            ji["byte_count"] = fa.item_digests[i].digest.byte_count;
        } else if (i < fa.item_digests.size()) {
            ji["hash_error"] = hash_error_name(fa.item_digests[i].error);
        }
        // reserved for a decoder-equipped build
        ji["pixel_hash"] = nullptr;
        ji["perceptual_hash"] = nullptr;
        items.push_back(ji);
    }
    j["items"] = items;

    ordered_json tracks = ordered_json::array();
    for (auto& t : fa.model.tracks) {
        ordered_json jt;
        jt["track_id"] = t.track_id;
        jt["tkhd_flags"] = t.tkhd_flags;
        jt["enabled"] = t.enabled;
        jt["in_presentation"] = t.in_presentation;
        jt["in_preview"] = t.in_preview;
        jt["handler"] = t.handler.str();
        tracks.push_back(jt);
    }
    j["tracks"] = tracks;

    ordered_json refs = ordered_json::array();
    for (auto& r : fa.model.references) {
        ordered_json jr;
        jr["type"] = r.ref_type.str();
        jr["from"] = r.from_item;
        jr["to"] = r.to_items;
        refs.push_back(jr);
    }
    j["references"] = refs;

    ordered_json drefs = ordered_json::array();
    for (auto& d : fa.model.data_references) {
        ordered_json jd;
        jd["index"] = d.index;
        jd["scheme"] = d.scheme == DataReference::Scheme::Urn ? "urn" : "url";
        jd["self_contained"] = d.self_contained;
        jd["location"] = d.location;
        if (!d.urn_name.empty()) jd["urn_name"] = d.urn_name;
        drefs.push_back(jd);
    }
    j["data_references"] = drefs;

    ordered_json findings = ordered_json::array();
    for (auto& f : fa.analysis.findings) findings.push_back(json_finding(f));
    j["findings"] = findings;

    ordered_json coverage;
    coverage["file_len"] = fa.coverage.file_len;
    coverage["unreferenced_total"] = fa.coverage.unreferenced_bytes();
    ordered_json regions = ordered_json::array();
    for (auto& g : fa.coverage.unreferenced()) {
        ordered_json jg;
        jg["start"] = g.start;
        jg["end"] = g.end;
        regions.push_back(jg);
    }
    coverage["unreferenced_regions"] = regions;
    j["coverage"] = coverage;

    ordered_json mint = ordered_json::array();
    for (auto& v : fa.mint) {
        ordered_json jm;
        jm["item_id"] = v.item_id;
        jm["status"] = mint_status_name(v.status);
        jm["declared_md5"] = to_hex(ByteSpan(v.declared_md5.data(), v.declared_md5.size()));
        jm["computed_md5"] = to_hex(ByteSpan(v.computed_md5.data(), v.computed_md5.size()));
        jm["target_item"] = v.target_item ? ordered_json(*v.target_item) : ordered_json(nullptr);
        jm["framing"] = v.framing;
        jm["note"] = v.note;
        mint.push_back(jm);
    }
    j["mint_verifications"] = mint;

    if (change_log) {
        ordered_json log = ordered_json::array();
        for (auto& c : *change_log) {
            ordered_json jc;
            jc["offset"] = c.offset;
            jc["old"] = c.old_byte;
            jc["new"] = c.new_byte;
            log.push_back(jc);
        }
        j["change_log"] = log;
    }
    return j;
}

namespace {

void render_node(const BoxNode& node, int depth, std::string& out) {
    char buf[160];
    std::string indent(static_cast<size_t>(depth) * 2, ' ');
    uint64_t size = node.header.end() - node.header.offset;
    if (node.full) {
        snprintf(buf, sizeof buf, "%s%-8s offset=%llu size=%llu version=%u flags=0x%06x\n",
                 indent.c_str(), node.header.fourcc.str().c_str(),
                 static_cast<unsigned long long>(node.header.offset),
                 static_cast<unsigned long long>(size), node.full->version, node.full->flags);
    } else {
        snprintf(buf, sizeof buf, "%s%-8s offset=%llu size=%llu\n", indent.c_str(),
                 node.header.fourcc.str().c_str(),
                 static_cast<unsigned long long>(node.header.offset),
                 static_cast<unsigned long long>(size));
    }
    out += buf;
    for (auto& c : node.children) render_node(c, depth + 1, out);
}

}  // namespace

std::string render_tree(const BoxTree& tree) {
    std::string out;
    for (auto& r : tree.roots) render_node(r, 0, out);
    return out;
}

std::string render_findings(const std::vector<Finding>& findings) {
    std::string out;
    for (auto& f : findings) {
        out += "[" + severity_name(f.severity) + "] " + f.code + ": " + f.message + "\n";
    }
    return out;
}

}  // namespace heifsleuth
