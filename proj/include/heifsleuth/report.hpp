#ifndef HEIFSLEUTH_REPORT_HPP
#define HEIFSLEUTH_REPORT_HPP

#include <string>

#include <json.hpp>

#include "heifsleuth/analyzer.hpp"
#include "heifsleuth/carver.hpp"
#include "heifsleuth/integrity.hpp"
#include "heifsleuth/model.hpp"
#include "heifsleuth/rewriter.hpp"

namespace heifsleuth {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportVersion = 1;

// Everything one pass over a file produces.
struct FileAnalysis {
    BoxTree tree;
    FileModel model;
    CoverageMap coverage;
    AnalysisResult analysis;
    DigestSet file_digest;
    std::vector<ItemHashResult> item_digests;  // parallel to model.items
    std::vector<MintVerification> mint;
};

FileAnalysis analyze_bytes(ByteSpan data, const std::string& filename = "",
                           const AnalyzerOptions& opts = {});

// Canonical JSON report: stable key order, arrays in file order, so the
// same input always serializes to identical bytes.
nlohmann::ordered_json make_report(const FileAnalysis& fa, const std::string& path, ByteSpan data,
                                   const std::vector<ByteChange>* change_log = nullptr);

// Indented box tree: offset, size, fourcc, version/flags where applicable.
std::string render_tree(const BoxTree& tree);

std::string render_findings(const std::vector<Finding>& findings);

}  // namespace heifsleuth

#endif
