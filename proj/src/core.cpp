#include "pcqa/core.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <unordered_set>

#include "pcqa/io.hpp"

namespace pcqa {

namespace {

constexpr std::array<std::string_view, kLevelCount> kLevelNames = {
    "inferior", "worse", "similar", "better", "superior"};

}  // namespace

QualityLevel level_from_index(std::size_t index) {
    if (index >= kLevelCount) throw InvalidInput("level index out of range: " + std::to_string(index));
    return static_cast<QualityLevel>(index);
}

std::string_view level_name(QualityLevel level) noexcept { return kLevelNames[level_index(level)]; }

QualityLevel parse_level(std::string_view name) {
    for (std::size_t i = 0; i < kLevelCount; ++i)
        if (kLevelNames[i] == name) return static_cast<QualityLevel>(i);
    throw InvalidInput("unknown quality level: " + std::string(name));
}

LevelDistribution::LevelDistribution(const std::array<double, kLevelCount>& probs) : probs_(probs) {
    double sum = 0.0;
    for (double p : probs_) {
        if (!std::isfinite(p) || p < 0.0)
            throw InvalidInput("level distribution component must be finite and non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
        throw InvalidInput("level distribution sums to " + io::format_double(sum) + ", expected 1");
}

LevelDistribution LevelDistribution::from_span(std::span<const double> probs) {
    if (probs.size() != kLevelCount)
        throw InvalidInput("level distribution needs 5 components, got " + std::to_string(probs.size()));
    std::array<double, kLevelCount> a{};
    std::copy(probs.begin(), probs.end(), a.begin());
    return LevelDistribution(a);
}

LevelDistribution LevelDistribution::one_hot(QualityLevel level) {
    std::array<double, kLevelCount> a{};
    a[level_index(level)] = 1.0;
    return LevelDistribution(a, Unchecked{});
}

LevelDistribution LevelDistribution::uniform() {
    return LevelDistribution({0.2, 0.2, 0.2, 0.2, 0.2}, Unchecked{});
}

LevelDistribution LevelDistribution::mirrored() const {
    std::array<double, kLevelCount> a{};
    for (std::size_t c = 0; c < kLevelCount; ++c) a[c] = probs_[kLevelCount - 1 - c];
    return LevelDistribution(a, Unchecked{});
}

double LevelDistribution::expected_index() const noexcept {
    double e = 0.0;
    for (std::size_t c = 0; c < kLevelCount; ++c) e += static_cast<double>(c) * probs_[c];
    return e;
}

double LevelDistribution::entropy() const noexcept {
    double h = 0.0;
    for (double p : probs_)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

std::string_view modality_name(Modality m) noexcept {
    return m == Modality::image ? "image" : "pointcloud";
}

Modality parse_modality(std::string_view name) {
    if (name == "image") return Modality::image;
    if (name == "pointcloud") return Modality::pointcloud;
    throw InvalidInput("unknown modality: " + std::string(name));
}

DatasetManifest::DatasetManifest(std::string name, ScoreRange range, std::vector<RatedSample> samples)
    : name_(std::move(name)), range_(range), samples_(std::move(samples)) {
    if (!std::isfinite(range_.min) || !std::isfinite(range_.max) || range_.min > range_.max)
        throw InvalidInput("dataset '" + name_ + "': invalid score range");
    std::unordered_set<std::string> seen;
    for (auto& s : samples_) {
        if (s.id.empty()) throw InvalidInput("dataset '" + name_ + "': empty sample id");
        if (!seen.insert(s.id).second)
            throw InvalidInput("dataset '" + name_ + "': duplicate sample id '" + s.id + "'");
        if (!std::isfinite(s.std) || s.std < 0.0)
            throw InvalidInput("sample '" + s.id + "': std must be finite and >= 0");
        if (!std::isfinite(s.mos) || !range_.contains(s.mos))
            throw InvalidInput("sample '" + s.id + "': mos outside declared score range");
        if (s.dataset.empty()) s.dataset = name_;
    }
}

const RatedSample* DatasetManifest::find(std::string_view id) const noexcept {
    for (const auto& s : samples_)
        if (s.id == id) return &s;
    return nullptr;
}

const RatedSample& DatasetManifest::at(std::string_view id) const {
    if (const auto* s = find(id)) return *s;
    throw InvalidInput("dataset '" + name_ + "': unknown sample id '" + std::string(id) + "'");
}

DatasetManifest load_manifest(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(io::read_file(path));
        std::vector<RatedSample> samples;
        const std::string name = doc.at("dataset").get<std::string>();
        const auto& range = doc.at("score_range");
        for (const auto& js : doc.at("samples")) {
            RatedSample s;
            s.id = js.at("id").get<std::string>();
            s.modality = parse_modality(js.at("modality").get<std::string>());
            s.asset_refs = js.value("asset_refs", std::vector<std::string>{});
            s.mos = js.at("mos").get<double>();
            s.std = js.at("std").get<double>();
            s.dataset = name;
            samples.push_back(std::move(s));
        }
        return DatasetManifest(name, {range.at(0).get<double>(), range.at(1).get<double>()},
                               std::move(samples));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("malformed manifest " + path + ": " + e.what());
    }
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    nlohmann::ordered_json doc;
    doc["dataset"] = manifest.name();
    doc["score_range"] = {manifest.score_range().min, manifest.score_range().max};
    auto samples = nlohmann::ordered_json::array();
    for (const auto& s : manifest.samples()) {
        samples.push_back({{"id", s.id},
                           {"modality", modality_name(s.modality)},
                           {"asset_refs", s.asset_refs},
                           {"mos", s.mos},
                           {"std", s.std}});
    }
    doc["samples"] = std::move(samples);
    io::write_file(path, doc.dump(2) + "\n");
}

double standardized_difference(double q_i, double std_i, double q_j, double std_j) {
    if (!std::isfinite(q_i) || !std::isfinite(q_j) || !std::isfinite(std_i) || !std::isfinite(std_j))
        throw InvalidInput("standardized_difference: non-finite input");
    if (std_i < 0.0 || std_j < 0.0) throw InvalidInput("standardized_difference: negative std");
    const double denom = std::max(std::sqrt(std_i * std_i + std_j * std_j), kStdFloor);
    return (q_i - q_j) / denom;
}

QualityLevel quantize_level(double z) {
    if (!std::isfinite(z)) throw InvalidInput("quantize_level: non-finite z");
    const double m = std::abs(z);
    if (m <= 1.0) return QualityLevel::similar;
    if (m <= 2.0) return z > 0.0 ? QualityLevel::worse : QualityLevel::better;
    return z > 0.0 ? QualityLevel::inferior : QualityLevel::superior;
}

}  // namespace pcqa
