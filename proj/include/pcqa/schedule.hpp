#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcqa/core.hpp"
#include "pcqa/pairgen.hpp"

namespace pcqa {

// Pool parity rule: even steps train on the texture pool, odd steps on the geometry pool.
constexpr PromptKind pool_for_step(std::size_t t) noexcept {
    return t % 2 == 0 ? PromptKind::texture : PromptKind::geometry;
}

struct TrainingStep {
    std::size_t t = 0;
    PromptKind pool = PromptKind::texture;
    std::vector<std::string> record_ids;

    friend bool operator==(const TrainingStep&, const TrainingStep&) = default;
};

// Index form: batches are positions into the step's pool.
struct IndexedStep {
    std::size_t t = 0;
    PromptKind pool = PromptKind::texture;
    std::vector<std::size_t> batch;
};

std::vector<IndexedStep> plan_schedule_indices(std::size_t texture_pool_size, std::size_t geometry_pool_size,
                                               std::size_t total_steps, std::size_t batch_size,
                                               std::uint64_t seed);

std::vector<TrainingStep> plan_schedule(const std::vector<std::string>& texture_pool,
                                        const std::vector<std::string>& geometry_pool, std::size_t total_steps,
                                        std::size_t batch_size, std::uint64_t seed);

// -log max(predicted[truth], 1e-12)
double cross_entropy(const LevelDistribution& predicted, QualityLevel truth);
// Validates a raw probability vector first; malformed input raises InvalidInput.
double cross_entropy(std::span<const double> predicted, QualityLevel truth);

inline constexpr double kProbabilityFloor = 1e-12;

}  // namespace pcqa
