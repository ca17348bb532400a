#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pcqa/core.hpp"

namespace pcqa {

enum class PartitionRule : std::uint8_t { equal_width, quantile };

std::string_view partition_rule_name(PartitionRule rule) noexcept;
PartitionRule parse_partition_rule(std::string_view name);

struct IntervalPartition {
    PartitionRule rule = PartitionRule::equal_width;
    std::vector<std::vector<std::string>> intervals;  // ascending MOS order
};

struct AnchorSet {
    std::size_t beta = 0;
    PartitionRule rule = PartitionRule::equal_width;
    ScoreRange score_range;
    std::vector<RatedSample> anchors;  // nondecreasing MOS

    friend bool operator==(const AnchorSet&, const AnchorSet&) = default;
};

inline constexpr std::size_t kDefaultBeta = 5;

// Equal-width MOS intervals over [min MOS, max MOS], last interval right-closed.
// When any interval is empty, falls back to equal-count chunks of the (MOS, id)-sorted samples.
IntervalPartition partition_intervals(const DatasetManifest& manifest, std::size_t beta);

// Minimum stored variance (std^2); ties go to the lexicographically smallest id.
std::string select_anchor(const std::vector<std::string>& interval, const DatasetManifest& manifest);

AnchorSet build_anchor_set(const DatasetManifest& manifest, std::size_t beta = kDefaultBeta);

}  // namespace pcqa
