#include "pcqa/synthetic.hpp"

#include <cstdio>

#include "pcqa/random.hpp"

namespace pcqa {

DatasetManifest synthetic_manifest(const SyntheticDatasetOptions& options, std::uint64_t seed) {
    if (options.std_min < 0.0 || options.std_max < options.std_min)
        throw InvalidInput("synthetic dataset: invalid std range");
    Rng rng(mix_seed(seed, "synthetic-manifest"));
    std::vector<RatedSample> samples;
    samples.reserve(options.count);
    const int width = options.count > 1000 ? 6 : 3;
    for (std::size_t i = 0; i < options.count; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "s%0*zu", width, i);
        RatedSample s;
        s.id = id;
        s.modality = options.modality;
        s.mos = rng.uniform(options.range.min, options.range.max);
        s.std = rng.uniform(options.std_min, options.std_max);
        s.dataset = options.name;
        samples.push_back(std::move(s));
    }
    return DatasetManifest(options.name, options.range, std::move(samples));
}

std::pair<std::vector<double>, std::vector<double>> align_scores(const ScoreTable& table,
                                                                 const DatasetManifest& manifest) {
    std::vector<double> pred, gt;
    pred.reserve(table.rows.size());
    gt.reserve(table.rows.size());
    for (const auto& r : table.rows) {
        pred.push_back(r.score);
        gt.push_back(manifest.at(r.test_id).mos);
    }
    return {std::move(pred), std::move(gt)};
}

ExperimentResult run_synthetic_experiment(const ExperimentOptions& options, std::uint64_t seed) {
    ExperimentResult out;
    out.manifest = synthetic_manifest(options.dataset, seed);
    out.anchors = build_anchor_set(out.manifest, options.beta);

    SimulatedComparatorConfig sim{options.oracle_noise, options.mode, mix_seed(seed, "oracle")};
    const auto comparator = SimulatedComparator::from_manifests(sim, {&out.manifest});

    std::vector<StimulusRef> tests;
    for (const auto& s : out.manifest.samples()) tests.push_back(StimulusRef::of(s));
    out.matrix = build_probability_matrix(tests, out.anchors, comparator, prompt_kind_for(options.dataset.modality),
                                          options.workers);

    ScoreInferenceConfig scoring = options.scoring;
    if (options.match_model_noise && options.oracle_noise > 0.0) scoring.model_noise = options.oracle_noise;
    out.scores = score_dataset(out.matrix, out.anchors, scoring);
    const auto [pred, gt] = align_scores(out.scores, out.manifest);
    out.metrics = compute_metrics(pred, gt);
    return out;
}

}  // namespace pcqa
