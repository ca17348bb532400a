#include "pcqa/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "pcqa/random.hpp"

namespace pcqa {

std::vector<IndexedStep> plan_schedule_indices(std::size_t texture_pool_size, std::size_t geometry_pool_size,
                                               std::size_t total_steps, std::size_t batch_size,
                                               std::uint64_t seed) {
    if (texture_pool_size == 0) throw InsufficientData("texture pool is empty");
    if (geometry_pool_size == 0) throw InsufficientData("geometry pool is empty");
    if (batch_size == 0) throw InvalidInput("batch_size must be >= 1");

    Rng rng(seed);
    std::vector<IndexedStep> steps;
    steps.reserve(total_steps);
    for (std::size_t t = 0; t < total_steps; ++t) {
        IndexedStep step{t, pool_for_step(t), {}};
        const std::size_t n = step.pool == PromptKind::texture ? texture_pool_size : geometry_pool_size;
        step.batch.reserve(batch_size);
        for (std::size_t b = 0; b < batch_size; ++b) step.batch.push_back(rng.index(n));
        steps.push_back(std::move(step));
    }
    return steps;
}

std::vector<TrainingStep> plan_schedule(const std::vector<std::string>& texture_pool,
                                        const std::vector<std::string>& geometry_pool, std::size_t total_steps,
                                        std::size_t batch_size, std::uint64_t seed) {
    const auto indexed =
        plan_schedule_indices(texture_pool.size(), geometry_pool.size(), total_steps, batch_size, seed);
    std::vector<TrainingStep> steps;
    steps.reserve(indexed.size());
    for (const auto& s : indexed) {
        const auto& pool = s.pool == PromptKind::texture ? texture_pool : geometry_pool;
        TrainingStep step{s.t, s.pool, {}};
        step.record_ids.reserve(s.batch.size());
        for (auto i : s.batch) step.record_ids.push_back(pool[i]);
        steps.push_back(std::move(step));
    }
    return steps;
}

double cross_entropy(const LevelDistribution& predicted, QualityLevel truth) {
    return -std::log(std::max(predicted[truth], kProbabilityFloor));
}

double cross_entropy(std::span<const double> predicted, QualityLevel truth) {
    return cross_entropy(LevelDistribution::from_span(predicted), truth);
}

}  // namespace pcqa
