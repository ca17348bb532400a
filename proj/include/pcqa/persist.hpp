#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcqa/anchors.hpp"
#include "pcqa/schedule.hpp"
#include "pcqa/scoring.hpp"

namespace pcqa {

// Stamped into every artifact the pipeline writes.
struct Provenance {
    std::uint64_t seed = 0;
    std::string config_digest;
};

// {"beta", "partition_rule", "score_range", "anchors": [{id, mos, std, modality, asset_refs}], "provenance"}
std::string anchor_set_to_json(const AnchorSet& set, const std::optional<Provenance>& provenance = std::nullopt);
AnchorSet anchor_set_from_json(const std::string& text);
AnchorSet load_anchor_set(const std::string& path);

// {"steps": [{t, pool, record_ids}], "provenance"}
std::string schedule_to_json(const std::vector<TrainingStep>& steps,
                             const std::optional<Provenance>& provenance = std::nullopt);
std::vector<TrainingStep> schedule_from_json(const std::string& text);

// Replay-log lines {test_id, anchor_id, prompt_kind, probs}, row-major.
std::string matrix_to_replay_log(const ProbabilityMatrix& matrix);
std::vector<ReplayEntry> read_replay_log(const std::string& path);

}  // namespace pcqa
