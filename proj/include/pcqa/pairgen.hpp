#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pcqa/core.hpp"

namespace pcqa {

// `level` is the relative quality of `second` with respect to `first`.
struct ComparisonPair {
    std::string first;
    std::string second;
    QualityLevel level = QualityLevel::similar;
    double z = 0.0;

    friend bool operator==(const ComparisonPair&, const ComparisonPair&) = default;
};

enum class PromptKind : std::uint8_t { texture, geometry };

std::string_view prompt_kind_name(PromptKind kind) noexcept;
PromptKind parse_prompt_kind(std::string_view name);
PromptKind prompt_kind_for(Modality modality) noexcept;

namespace prompts {
inline constexpr std::string_view kTexture =
    "Please focus on texture details and clarity. Compared with the first image <Img1>, "
    "what is your quality rating for the second image <Img2>?";
inline constexpr std::string_view kGeometry =
    "Please focus on geometric structure and shape integrity. Compared with the first point cloud <PC1>, "
    "what is your quality rating for the second point cloud <PC2>?";
inline constexpr std::string_view kTextureLead = "Please focus on texture details and clarity.";
inline constexpr std::string_view kGeometryLead = "Please focus on geometric structure and shape integrity.";
}  // namespace prompts

// "The quality of the second <noun> is <level> to|than the first <noun>."
std::string response_text(PromptKind kind, QualityLevel level);

struct InstructionRecord {
    std::string id;         // unique within one record file
    std::string first_id;
    std::string second_id;
    PromptKind prompt_kind = PromptKind::texture;
    std::string instruction;
    std::string response;
    std::vector<std::string> media_refs;  // first stimulus' assets, then second's
    QualityLevel level = QualityLevel::similar;
    double z = 0.0;

    friend bool operator==(const InstructionRecord&, const InstructionRecord&) = default;
};

struct PairSamplingOptions {
    // Round-robin over levels with bounded rejection sampling; levels that cannot be
    // produced from the manifest are dropped from the rotation.
    bool balance_levels = false;
    std::size_t attempts_per_level = 1000;
};

ComparisonPair label_pair(const RatedSample& first, const RatedSample& second);

std::vector<ComparisonPair> sample_pairs(const DatasetManifest& manifest, std::size_t n_k,
                                         std::uint64_t seed, const PairSamplingOptions& options = {});

InstructionRecord render_instruction(const ComparisonPair& pair, const DatasetManifest& manifest);

// JSON Lines: one record object per line.
std::size_t export_records(const std::vector<InstructionRecord>& records, const std::string& path);
std::vector<InstructionRecord> read_records(const std::string& path);

std::string record_to_json_line(const InstructionRecord& record);
InstructionRecord record_from_json_line(std::string_view line);

}  // namespace pcqa
