#include "heifsleuth/analyzer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

namespace heifsleuth {

std::string item_role_name(ItemRole role) {
    switch (role) {
        case ItemRole::Master: return "master";
        case ItemRole::DerivedGrid: return "derived-grid";
        case ItemRole::DerivedOverlay: return "derived-overlay";
        case ItemRole::DerivedIdentity: return "derived-identity";
        case ItemRole::Thumbnail: return "thumbnail";
        case ItemRole::Auxiliary: return "auxiliary";
        case ItemRole::MetadataExif: return "metadata-exif";
        case ItemRole::MetadataXmp: return "metadata-xmp";
        case ItemRole::MetadataOther: return "metadata-other";
        case ItemRole::Unknown: return "unknown";
    }
    return "unknown";
}

bool is_displayable_role(ItemRole role) {
    switch (role) {
        case ItemRole::Master:
        case ItemRole::DerivedGrid:
        case ItemRole::DerivedOverlay:
        case ItemRole::DerivedIdentity:
        case ItemRole::Thumbnail:
            return true;
        default:
            return false;
    }
}

std::string severity_name(Severity s) {
    switch (s) {
        case Severity::Info: return "info";
        case Severity::Notice: return "notice";
        case Severity::Warning: return "warning";
        case Severity::Alert: return "alert";
    }
    return "info";
}

namespace {

bool is_coded_image_type(FourCC cc) {
    return cc == FourCC("hvc1") || cc == FourCC("hev1") || cc == FourCC("av01") ||
           cc == FourCC("avc1") || cc == FourCC("jpeg") || cc == FourCC("j2k1");
}

bool is_metadata_type(const ItemRecord& item) {
    return item.item_type == FourCC("Exif") || item.item_type == FourCC("mime") ||
           item.item_type == FourCC("mint") || item.item_type == FourCC("uri ");
}

bool has_auxc_property(const ItemRecord& item) {
    for (auto& p : item.properties)
        if (p.kind == ItemProperty::Kind::AuxC) return true;
    return false;
}

std::string hex_preview(ByteSpan data, ByteRange range, size_t max_bytes = 16) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    uint64_t end = std::min<uint64_t>(range.start + max_bytes, std::min<uint64_t>(range.end, data.size()));
    for (uint64_t i = range.start; i < end; ++i) {
        if (!s.empty()) s.push_back(' ');
        s.push_back(digits[data[i] >> 4]);
        s.push_back(digits[data[i] & 0xf]);
    }
    if (end < range.end) s += " ...";
    return s;
}

std::string join_ids(const std::vector<uint32_t>& ids) {
    std::string s;
    for (uint32_t id : ids) {
        if (!s.empty()) s += ",";
        s += std::to_string(id);
    }
    return s;
}

}  // namespace

std::pair<std::vector<ItemClassification>, DerivationGraph> classify_items(const FileModel& model) {
    DerivationGraph graph;
    for (auto& item : model.items) graph.nodes.push_back(item.item_id);
    for (auto& ref : model.references) graph.edges.push_back({ref.ref_type, ref.from_item, ref.to_items});

    std::set<uint32_t> thumb_sources, aux_sources, cdsc_sources, dimg_targets;
    for (auto& ref : model.references) {
        if (ref.ref_type == FourCC("thmb")) thumb_sources.insert(ref.from_item);
        if (ref.ref_type == FourCC("auxl")) aux_sources.insert(ref.from_item);
        if (ref.ref_type == FourCC("cdsc")) cdsc_sources.insert(ref.from_item);
        if (ref.ref_type == FourCC("dimg"))
            for (uint32_t to : ref.to_items) dimg_targets.insert(to);
    }

    std::vector<ItemClassification> roles;
    for (auto& item : model.items) {
        ItemClassification c;
        c.item_id = item.item_id;
        c.primary = model.primary_item && *model.primary_item == item.item_id;

        if (item.item_type == FourCC("grid")) {
            c.role = ItemRole::DerivedGrid;
        } else if (item.item_type == FourCC("iovl")) {
            c.role = ItemRole::DerivedOverlay;
        } else if (item.item_type == FourCC("iden")) {
            c.role = ItemRole::DerivedIdentity;
        } else if (item.item_type == FourCC("Exif")) {
            c.role = ItemRole::MetadataExif;
        } else if (item.item_type == FourCC("mime")) {
            bool xmp = item.content_type && item.content_type->find("xmp") != std::string::npos;
            c.role = xmp ? ItemRole::MetadataXmp : ItemRole::MetadataOther;
        } else if (item.item_type == FourCC("mint") || item.item_type == FourCC("uri ") ||
                   cdsc_sources.count(item.item_id)) {
            c.role = ItemRole::MetadataOther;
        } else if (thumb_sources.count(item.item_id)) {
            c.role = ItemRole::Thumbnail;
        } else if (aux_sources.count(item.item_id) || has_auxc_property(item)) {
            c.role = ItemRole::Auxiliary;
        } else if (dimg_targets.count(item.item_id) || is_coded_image_type(item.item_type)) {
            c.role = ItemRole::Master;
        } else {
            c.role = ItemRole::Unknown;
        }
        roles.push_back(c);
    }
    return {roles, graph};
}

std::vector<Finding> find_hidden_content(const FileModel& model) {
    std::vector<Finding> findings;

    std::vector<const ItemRecord*> hidden;
    for (auto& item : model.items)
        if (item.hidden) hidden.push_back(&item);

    // Apple tile pattern: every hidden item is an 'hvc1' tile feeding one
    // visible derived 'grid' item. Downgraded to a single info finding.
    bool apple_pattern = false;
    if (!hidden.empty()) {
        const ItemReference* grid_dimg = nullptr;
        for (auto& ref : model.references) {
            if (ref.ref_type != FourCC("dimg")) continue;
            const ItemRecord* from = model.find_item(ref.from_item);
            if (from && from->item_type == FourCC("grid") && !from->hidden) {
                grid_dimg = &ref;
                break;
            }
        }
        if (grid_dimg) {
            apple_pattern = true;
            for (auto* h : hidden) {
                bool is_tile = h->item_type == FourCC("hvc1") &&
                               std::find(grid_dimg->to_items.begin(), grid_dimg->to_items.end(),
                                         h->item_id) != grid_dimg->to_items.end();
                if (!is_tile) {
                    apple_pattern = false;
                    break;
                }
            }
        }
    }

    if (apple_pattern) {
        Finding f;
        f.code = finding_code::HiddenItem;
        f.severity = Severity::Info;
        for (auto* h : hidden) f.item_ids.push_back(h->item_id);
        f.offset = hidden.front()->infe_flags_offset;
        f.message = std::to_string(hidden.size()) +
                    " hidden tile item(s) feeding a visible derived grid (expected tiling pattern)";
        f.detail.emplace_back("pattern", "grid-tiles");
        f.detail.emplace_back("items", join_ids(f.item_ids));
        findings.push_back(std::move(f));
    } else {
        for (auto* h : hidden) {
            Finding f;
            f.code = finding_code::HiddenItem;
            f.severity = Severity::Alert;
            f.item_ids.push_back(h->item_id);
            f.offset = h->infe_flags_offset;
            f.message = "item " + std::to_string(h->item_id) + " ('" + h->item_type.str() +
                        "') has the hidden flag set; standard viewers will not show it";
            f.detail.emplace_back("item_type", h->item_type.str());
            f.detail.emplace_back("flags_offset", std::to_string(h->infe_flags_offset));
            findings.push_back(std::move(f));
        }
    }

    if (model.primary_item) {
        const ItemRecord* cover = model.find_item(*model.primary_item);
        if (cover && cover->hidden) {
            Finding f;
            f.code = finding_code::HiddenCover;
            f.severity = Severity::Notice;
            f.item_ids.push_back(cover->item_id);
            f.offset = cover->infe_flags_offset;
            f.message = "cover (pitm) item " + std::to_string(cover->item_id) +
                        " is flagged hidden; the standard does not support hiding the cover image";
            findings.push_back(std::move(f));
        }
    }

    for (auto& track : model.tracks) {
        if (!track.enabled) {
            Finding f;
            f.code = finding_code::DisabledTrack;
            f.severity = Severity::Warning;
            f.track_id = track.track_id;
            f.offset = track.tkhd_flags_offset;
            f.message = "track " + std::to_string(track.track_id) +
                        " is disabled (tkhd flags 0x" + [&] {
                            char buf[8];
                            snprintf(buf, sizeof buf, "%06x", track.tkhd_flags);
                            return std::string(buf);
                        }() + ")";
            findings.push_back(std::move(f));
        }
    }
    return findings;
}

std::vector<Finding> find_external_references(const FileModel& model) {
    std::vector<Finding> findings;
    for (auto& ref : model.data_references) {
        if (ref.self_contained) continue;
        std::vector<uint32_t> users;
        for (auto& item : model.items)
            if (item.data_reference_index == ref.index) users.push_back(item.item_id);

        Finding f;
        f.code = finding_code::ExternalDataRef;
        f.severity = users.empty() ? Severity::Notice : Severity::Alert;
        f.offset = ref.offset;
        f.item_ids = users;
        std::string scheme = ref.scheme == DataReference::Scheme::Urn ? "URN" : "URL";
        f.message = "dref entry " + std::to_string(ref.index) + " points at external " + scheme +
                    " \"" + ref.location + "\"" +
                    (users.empty() ? " (declared but referenced by no item)" : "");
        f.detail.emplace_back("location", ref.location);
        f.detail.emplace_back("scheme", scheme);
        if (!ref.urn_name.empty()) f.detail.emplace_back("urn_name", ref.urn_name);
        f.detail.emplace_back("used_by_items", join_ids(users));
        findings.push_back(std::move(f));
    }
    return findings;
}

namespace {

std::string lowercase_extension(const std::string& filename) {
    size_t slash = filename.find_last_of("/\\");
    std::string base = slash == std::string::npos ? filename : filename.substr(slash + 1);
    size_t dot = base.find_last_of('.');
    if (dot == std::string::npos || dot + 1 == base.size()) return "";
    std::string ext = base.substr(dot + 1);
    for (auto& c : ext) c = static_cast<char>(tolower(c));
    return ext;
}

std::vector<FourCC> expected_brands_for_extension(const std::string& ext) {
    if (ext == "heic") return {FourCC("heic"), FourCC("heix")};
    if (ext == "heics") return {FourCC("hevc"), FourCC("hevx")};
    if (ext == "heif") return {FourCC("mif1"), FourCC("heic"), FourCC("heix")};
    if (ext == "heifs") return {FourCC("msf1"), FourCC("hevc"), FourCC("hevx")};
    if (ext == "avci") return {FourCC("avci")};
    if (ext == "avcs") return {FourCC("avcs")};
    return {};
}

bool is_heif_family_extension(const std::string& ext) {
    return !expected_brands_for_extension(ext).empty();
}

}  // namespace

std::vector<Finding> check_extension_consistency(const std::string& filename, HeifKind kind,
                                                 const Brands& brands) {
    std::vector<Finding> findings;
    if (filename.empty()) return findings;
    std::string ext = lowercase_extension(filename);
    if (ext.empty()) return findings;

    auto warn = [&](const std::string& msg) {
        Finding f;
        f.code = finding_code::ExtMismatch;
        f.severity = Severity::Warning;
        f.offset = 0;
        f.message = msg;
        f.detail.emplace_back("extension", ext);
        f.detail.emplace_back("kind", heif_kind_name(kind));
        findings.push_back(std::move(f));
    };

    if (kind == HeifKind::NotHeif) {
        if (is_heif_family_extension(ext))
            warn("extension ." + ext + " suggests HEIF but the file is not a HEIF container");
        return findings;
    }

    auto expected = expected_brands_for_extension(ext);
    if (expected.empty()) {
        warn("HEIF content carries non-HEIF extension ." + ext + " (possible masquerading)");
        return findings;
    }
    bool any = std::any_of(expected.begin(), expected.end(),
                           [&](FourCC b) { return brands.contains(b); });
    if (!any)
        warn("extension ." + ext + " does not match the file's brands (detected " +
             heif_kind_name(kind) + ")");
    return findings;
}

std::vector<Finding> find_unreferenced_regions(const FileModel& model, const CoverageMap& coverage,
                                               ByteSpan data, const AnalyzerOptions& opts) {
    (void)model;
    std::vector<Finding> findings;
    uint64_t last_accounted_end = 0;
    for (auto& e : coverage.accounted) last_accounted_end = std::max(last_accounted_end, e.range.end);

    for (auto& gap : coverage.unreferenced()) {
        bool tail = gap.end == coverage.file_len && gap.start >= last_accounted_end;
        if (!tail && gap.length() < opts.slack_threshold) continue;
        Finding f;
        f.code = finding_code::SlackRegion;
        f.severity = Severity::Warning;
        f.offset = gap.start;
        f.length = gap.length();
        f.message = std::string(tail ? "trailing" : "unreferenced") + " data: " +
                    std::to_string(gap.length()) + " byte(s) at offset " + std::to_string(gap.start);
        f.detail.emplace_back("position", tail ? "tail" : "internal");
        f.detail.emplace_back("preview", hex_preview(data, gap));
        findings.push_back(std::move(f));
    }
    return findings;
}

std::vector<Finding> verify_structure_expectations(const FileModel& model) {
    std::vector<Finding> findings;

    if (model.kind != HeifKind::NotHeif && model.has_meta && model.handler != FourCC("pict")) {
        Finding f;
        f.code = finding_code::NonPictHandler;
        f.severity = Severity::Notice;
        f.offset = 0;
        f.message = "meta handler is '" + model.handler.str() + "', expected 'pict' for HEIF";
        findings.push_back(std::move(f));
    }

    if (!model.primary_item) {
        size_t displayable = 0;
        for (auto& item : model.items)
            if (!is_metadata_type(item)) ++displayable;
        if (displayable > 1) {
            Finding f;
            f.code = finding_code::MissingPitm;
            f.severity = Severity::Notice;
            f.offset = 0;
            f.message = "no pitm box although " + std::to_string(displayable) +
                        " displayable items are declared";
            findings.push_back(std::move(f));
        }
    }

    for (auto& item : model.items) {
        if (item.infe_version > 3) {
            Finding f;
            f.code = finding_code::OddInfeVersion;
            f.severity = Severity::Notice;
            f.item_ids.push_back(item.item_id);
            f.offset = item.infe_flags_offset;
            f.message = "item " + std::to_string(item.item_id) + " has infe version " +
                        std::to_string(item.infe_version) + " (outside 0..3)";
            findings.push_back(std::move(f));
        }
    }

    for (auto& diag : model.diagnostics) {
        Finding f;
        f.offset = diag.offset;
        f.message = diag.message;
        f.detail.emplace_back("diagnostic", diag_code_name(diag.code));
        switch (diag.code) {
            case DiagCode::DanglingReference:
                f.code = finding_code::DanglingRef;
                f.severity = Severity::Warning;
                break;
            case DiagCode::DepthLimit:
                f.code = finding_code::DepthCap;
                f.severity = Severity::Notice;
                f.message += " (possible anti-forensic construction)";
                break;
            case DiagCode::UnusualVersion:
                continue;  // already surfaced as ODD_INFE_VERSION
            case DiagCode::MissingHandler:
            case DiagCode::MissingFtyp:
            case DiagCode::TruncatedBox:
            case DiagCode::SizeOverflow:
            case DiagCode::TruncatedEntry:
            case DiagCode::BadFieldWidth:
            case DiagCode::ExtentOutOfFile:
            case DiagCode::EmptyDref:
            case DiagCode::BadPropertyIndex:
            case DiagCode::OverlappingChild:
                f.code = finding_code::ParseDamage;
                f.severity = Severity::Notice;
                break;
            default:
                continue;
        }
        findings.push_back(std::move(f));
    }
    return findings;
}

AnalysisResult analyze(const FileModel& model, const CoverageMap& coverage, ByteSpan data,
                       const std::string& filename, const AnalyzerOptions& opts) {
    AnalysisResult result;
    auto [roles, graph] = classify_items(model);
    result.roles = std::move(roles);
    result.graph = std::move(graph);

    auto append = [&](std::vector<Finding> fs) {
        for (auto& f : fs) result.findings.push_back(std::move(f));
    };
    append(find_hidden_content(model));
    append(find_external_references(model));
    append(check_extension_consistency(filename, model.kind, model.brands));
    append(find_unreferenced_regions(model, coverage, data, opts));
    append(verify_structure_expectations(model));

    for (auto& r : result.roles) {
        if (r.role != ItemRole::Unknown) continue;
        const ItemRecord* item = model.find_item(r.item_id);
        Finding f;
        f.code = finding_code::AmbiguousRole;
        f.severity = Severity::Notice;
        f.item_ids.push_back(r.item_id);
        f.offset = item ? item->infe_flags_offset : 0;
        f.message = "item " + std::to_string(r.item_id) + " ('" +
                    (item ? item->item_type.str() : "?") + "') has no recognizable role";
        result.findings.push_back(std::move(f));
    }
    return result;
}

}  // namespace heifsleuth
