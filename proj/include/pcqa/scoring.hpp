#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcqa/anchors.hpp"
#include "pcqa/comparator.hpp"

namespace pcqa {

struct CellFailure {
    std::string test_id;
    std::string anchor_id;
    std::string message;
};

// N x beta soft comparison outcomes, keyed by (test, anchor) position.
class ProbabilityMatrix {
public:
    ProbabilityMatrix() = default;
    ProbabilityMatrix(std::vector<std::string> test_ids, std::vector<std::string> anchor_ids, PromptKind prompt_kind);

    // Rebuilds a matrix from replay-log entries; cells absent from the log stay empty.
    static ProbabilityMatrix from_entries(std::vector<std::string> test_ids, std::vector<std::string> anchor_ids,
                                          PromptKind prompt_kind, const std::vector<ReplayEntry>& entries);

    const std::vector<std::string>& test_ids() const noexcept { return test_ids_; }
    const std::vector<std::string>& anchor_ids() const noexcept { return anchor_ids_; }
    PromptKind prompt_kind() const noexcept { return prompt_kind_; }
    std::size_t rows() const noexcept { return test_ids_.size(); }
    std::size_t cols() const noexcept { return anchor_ids_.size(); }

    const std::optional<LevelDistribution>& cell(std::size_t test, std::size_t anchor) const;
    void set_cell(std::size_t test, std::size_t anchor, LevelDistribution value);
    std::span<const std::optional<LevelDistribution>> row(std::size_t test) const;
    bool row_complete(std::size_t test) const;

    const std::vector<CellFailure>& failures() const noexcept { return failures_; }
    void record_failure(CellFailure failure) { failures_.push_back(std::move(failure)); }
    bool partial() const noexcept { return !failures_.empty(); }

    // Replay-log form, row-major; empty cells are skipped.
    std::vector<ReplayEntry> entries() const;

private:
    std::vector<std::string> test_ids_;
    std::vector<std::string> anchor_ids_;
    PromptKind prompt_kind_ = PromptKind::geometry;
    std::vector<std::optional<LevelDistribution>> cells_;
    std::vector<CellFailure> failures_;
};

// One compare() per (test, anchor) cell. A test identical to an anchor is filled
// with one-hot "similar" (z = 0) without querying. Failed cells are recorded and
// leave the matrix partial; EvaluationError when every queried cell failed.
// Fans out over `workers` threads when the comparator is concurrent-safe.
ProbabilityMatrix build_probability_matrix(const std::vector<StimulusRef>& tests, const AnchorSet& anchor_set,
                                           const Comparator& comparator, PromptKind prompt_kind,
                                           std::size_t workers = 1);

struct ScoreInferenceConfig {
    double model_noise = 0.25;          // s_m
    std::optional<double> test_std;     // sigma-bar; mean anchor std when absent
    double search_margin = 0.25;        // fraction of the MOS range
    std::size_t grid_points = 512;
    double refine_tolerance = 1e-6;

    void validate() const;
};

struct ScoreEstimate {
    double score = 0.0;
    std::size_t anchors_used = 0;
    double objective = 0.0;
};

// Maximizes F(q) = sum_k sum_c p_kc log p_model(c | z_k(q)) with
// z_k(q) = (q_k - q) / sqrt(std_k^2 + sigma-bar^2) and p_model the interval model at
// noise s_m. Grid over [min anchor - m, max anchor + m], m = search_margin * mos_range,
// then golden-section refinement around the best grid point. Missing cells are skipped.
ScoreEstimate infer_score(std::span<const std::optional<LevelDistribution>> row,
                          std::span<const TruthScore> anchors, const ScoreInferenceConfig& config,
                          double mos_range);

// The objective itself, for tests and diagnostics.
double score_objective(double q, std::span<const std::optional<LevelDistribution>> row,
                       std::span<const TruthScore> anchors, double test_std, double model_noise);

struct ScoreRow {
    std::string test_id;
    double score = 0.0;
    std::size_t anchors_used = 0;
};

struct ScoreTable {
    std::vector<ScoreRow> rows;
    std::vector<std::pair<std::string, std::string>> omitted;  // (test id, reason)
    std::string config_digest;

    // "test_id,predicted_score,anchors_used,config_digest" with round-trip precision.
    std::string to_csv() const;
    static ScoreTable from_csv(const std::string& text);
};

std::string scoring_config_digest(const ScoreInferenceConfig& config);

// Scores every complete row; incomplete rows are omitted and listed with a reason.
ScoreTable score_dataset(const ProbabilityMatrix& matrix, const AnchorSet& anchor_set,
                         const ScoreInferenceConfig& config);

}  // namespace pcqa
