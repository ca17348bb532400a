#pragma once

#include <cstdint>
#include <string>

#include "pcqa/anchors.hpp"
#include "pcqa/comparator.hpp"
#include "pcqa/metrics.hpp"
#include "pcqa/scoring.hpp"

namespace pcqa {

struct SyntheticDatasetOptions {
    std::string name = "synthetic";
    std::size_t count = 100;
    ScoreRange range{0.0, 10.0};
    double std_min = 0.3;
    double std_max = 0.7;
    Modality modality = Modality::pointcloud;
};

// MOS uniform over the range, std uniform over [std_min, std_max]; ids s000, s001, ...
DatasetManifest synthetic_manifest(const SyntheticDatasetOptions& options, std::uint64_t seed);

struct ExperimentOptions {
    SyntheticDatasetOptions dataset;
    std::size_t beta = kDefaultBeta;
    double oracle_noise = 0.0;
    SimulationMode mode = SimulationMode::soft;
    ScoreInferenceConfig scoring;
    // Use the oracle noise as the model noise s_m whenever it is positive.
    bool match_model_noise = true;
    std::size_t workers = 1;
};

struct ExperimentResult {
    DatasetManifest manifest;
    AnchorSet anchors;
    ProbabilityMatrix matrix;
    ScoreTable scores;
    MetricReport metrics;
};

// Synthetic dataset -> anchors -> simulated comparisons -> scores -> metrics.
// Every sample of the dataset is scored as a test stimulus.
ExperimentResult run_synthetic_experiment(const ExperimentOptions& options, std::uint64_t seed);

// Predicted and ground-truth vectors for the scored rows of a table.
std::pair<std::vector<double>, std::vector<double>> align_scores(const ScoreTable& table,
                                                                 const DatasetManifest& manifest);

}  // namespace pcqa
