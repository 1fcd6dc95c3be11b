#ifndef HEIFSLEUTH_ANALYZER_HPP
#define HEIFSLEUTH_ANALYZER_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "heifsleuth/model.hpp"

namespace heifsleuth {

enum class ItemRole {
    Master,
    DerivedGrid,
    DerivedOverlay,
    DerivedIdentity,
    Thumbnail,
    Auxiliary,
    MetadataExif,
    MetadataXmp,
    MetadataOther,
    Unknown,
};

std::string item_role_name(ItemRole role);
bool is_displayable_role(ItemRole role);

struct ItemClassification {
    uint32_t item_id = 0;
    ItemRole role = ItemRole::Unknown;
    bool primary = false;  // pitm flag, may co-occur with any displayable role
};

struct DerivationEdge {
    FourCC ref_type;
    uint32_t from_item = 0;
    std::vector<uint32_t> to_items;
};

// Mirrors the iref list exactly; nodes are all declared item ids.
struct DerivationGraph {
    std::vector<uint32_t> nodes;
    std::vector<DerivationEdge> edges;
};

enum class Severity { Info, Notice, Warning, Alert };

std::string severity_name(Severity s);

// Stable machine-readable codes; part of the JSON report contract.
namespace finding_code {
inline constexpr const char* HiddenItem = "HIDDEN_ITEM";
inline constexpr const char* HiddenCover = "HIDDEN_COVER";
inline constexpr const char* DisabledTrack = "DISABLED_TRACK";
inline constexpr const char* ExternalDataRef = "EXTERNAL_DATA_REF";
inline constexpr const char* UnusedExternalRef = "UNUSED_EXTERNAL_REF";
inline constexpr const char* SlackRegion = "SLACK_REGION";
inline constexpr const char* TrailingData = "TRAILING_DATA";
inline constexpr const char* ExtMismatch = "EXT_MISMATCH";
inline constexpr const char* DanglingRef = "DANGLING_REF";
inline constexpr const char* NonPictHandler = "NON_PICT_HANDLER";
inline constexpr const char* MissingPitm = "MISSING_PITM";
inline constexpr const char* OddInfeVersion = "ODD_INFE_VERSION";
inline constexpr const char* DepthCap = "DEPTH_CAP";
inline constexpr const char* AmbiguousRole = "AMBIGUOUS_ROLE";
inline constexpr const char* ParseDamage = "PARSE_DAMAGE";
}  // namespace finding_code

struct Finding {
    std::string code;
    Severity severity = Severity::Info;
    // At least one locator is always set.
    std::optional<uint64_t> offset;
    std::optional<uint64_t> length;
    std::vector<uint32_t> item_ids;
    std::optional<uint32_t> track_id;
    std::string message;
    std::vector<std::pair<std::string, std::string>> detail;  // ordered key/value
};

struct AnalyzerOptions {
    uint64_t slack_threshold = 8;  // minimum unreferenced-region size to report
};

struct AnalysisResult {
    std::vector<ItemClassification> roles;
    DerivationGraph graph;
    std::vector<Finding> findings;

    const ItemClassification* role_of(uint32_t item_id) const {
        for (auto& r : roles)
            if (r.item_id == item_id) return &r;
        return nullptr;
    }
};

std::pair<std::vector<ItemClassification>, DerivationGraph> classify_items(const FileModel& model);

std::vector<Finding> find_hidden_content(const FileModel& model);
std::vector<Finding> find_external_references(const FileModel& model);
std::vector<Finding> check_extension_consistency(const std::string& filename, HeifKind kind,
                                                 const Brands& brands);
std::vector<Finding> find_unreferenced_regions(const FileModel& model, const CoverageMap& coverage,
                                               ByteSpan data, const AnalyzerOptions& opts = {});
std::vector<Finding> verify_structure_expectations(const FileModel& model);

// Runs every check in a fixed order. Pure function of its inputs; same
// inputs give identical findings in identical order.
AnalysisResult analyze(const FileModel& model, const CoverageMap& coverage, ByteSpan data,
                       const std::string& filename = "", const AnalyzerOptions& opts = {});

}  // namespace heifsleuth

#endif
