#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "pcqa/comparator.hpp"
#include "pcqa/persist.hpp"
#include "pcqa/render.hpp"
#include "pcqa/scoring.hpp"

namespace pcqa::pipeline {

struct DatasetEntry {
    std::string manifest;
    std::size_t n_k = 100;
    bool balance_levels = false;
};

struct ComparatorSettings {
    std::string kind = "simulated";  // simulated | replay | remote
    double noise_scale = 0.0;
    SimulationMode mode = SimulationMode::soft;
    std::string replay_log;
    std::string endpoint;
    std::size_t timeout_ms = 5000;
    bool inline_media = false;
};

struct ScheduleSettings {
    std::vector<std::string> texture_records;
    std::vector<std::string> geometry_records;
    std::size_t total_steps = 0;
    std::size_t batch_size = 8;
};

struct SimulateSettings {
    std::size_t n = 100;
    ScoreRange score_range{0.0, 10.0};
    double std_min = 0.3;
    double std_max = 0.7;
    std::vector<double> noise_levels{0.0, 0.5, 2.0};
    std::size_t sweep_seeds = 10;
    SimulationMode sweep_mode = SimulationMode::hard;
};

struct PipelineConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    std::size_t workers = 1;
    std::vector<DatasetEntry> datasets;
    std::size_t beta = 5;
    std::string anchor_manifest;
    std::string anchor_file;
    std::string test_manifest;
    std::optional<PromptKind> prompt_kind;
    std::string scores_file;
    ScheduleSettings schedule;
    ComparatorSettings comparator;
    ScoreInferenceConfig scoring;
    ViewConfig render;
    SimulateSettings simulate;

    // Effective configuration (after overrides) with paths as resolved.
    nlohmann::json effective;

    // First 16 hex digits of SHA-256 over the effective configuration minus output_dir.
    std::string digest() const;
    Provenance provenance() const { return {seed, digest()}; }
};

// Relative paths inside the file resolve against the file's directory.
PipelineConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt,
                           std::optional<std::string> output_override = std::nullopt);
PipelineConfig parse_config(const nlohmann::json& doc, const std::string& base_dir,
                            std::optional<std::uint64_t> seed_override = std::nullopt,
                            std::optional<std::string> output_override = std::nullopt);

struct CommandResult {
    std::vector<std::string> written;  // artifact paths
    nlohmann::ordered_json summary;
};

// Each command validates its part of the configuration (ValidationError) before writing anything.
CommandResult cmd_gen_pairs(const PipelineConfig& config);
CommandResult cmd_plan_schedule(const PipelineConfig& config);
CommandResult cmd_build_anchors(const PipelineConfig& config);
CommandResult cmd_render(const PipelineConfig& config);
CommandResult cmd_evaluate(const PipelineConfig& config);
CommandResult cmd_metrics(const PipelineConfig& config);
CommandResult cmd_simulate(const PipelineConfig& config);

}  // namespace pcqa::pipeline
