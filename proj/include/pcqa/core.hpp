#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcqa/errors.hpp"

namespace pcqa {

// Canonical order everywhere: files, wire protocol, distributions.
enum class QualityLevel : std::uint8_t {
    inferior = 0,
    worse = 1,
    similar = 2,
    better = 3,
    superior = 4,
};

inline constexpr std::size_t kLevelCount = 5;
inline constexpr std::array<QualityLevel, kLevelCount> kAllLevels = {
    QualityLevel::inferior, QualityLevel::worse, QualityLevel::similar,
    QualityLevel::better, QualityLevel::superior};

constexpr std::size_t level_index(QualityLevel level) noexcept {
    return static_cast<std::size_t>(level);
}
QualityLevel level_from_index(std::size_t index);
std::string_view level_name(QualityLevel level) noexcept;
QualityLevel parse_level(std::string_view name);

// Involution: inferior<->superior, worse<->better, similar fixed.
constexpr QualityLevel mirror_level(QualityLevel level) noexcept {
    return static_cast<QualityLevel>(kLevelCount - 1 - level_index(level));
}

// Probability vector over the five levels. Construction validates:
// every component finite and >= 0, sum within 1e-9 of one.
class LevelDistribution {
public:
    static constexpr double kSumTolerance = 1e-9;

    LevelDistribution() : LevelDistribution(uniform()) {}
    explicit LevelDistribution(const std::array<double, kLevelCount>& probs);

    static LevelDistribution from_span(std::span<const double> probs);
    static LevelDistribution one_hot(QualityLevel level);
    static LevelDistribution uniform();

    double operator[](QualityLevel level) const noexcept { return probs_[level_index(level)]; }
    double operator[](std::size_t index) const { return probs_.at(index); }
    const std::array<double, kLevelCount>& probs() const noexcept { return probs_; }

    // p'(c) = p(mirror(c)); the view from the other side of the pair.
    LevelDistribution mirrored() const;
    double expected_index() const noexcept;
    double entropy() const noexcept;

    friend bool operator==(const LevelDistribution&, const LevelDistribution&) = default;

private:
    struct Unchecked {};
    LevelDistribution(const std::array<double, kLevelCount>& probs, Unchecked) : probs_(probs) {}

    std::array<double, kLevelCount> probs_;
};

enum class Modality : std::uint8_t { image, pointcloud };

std::string_view modality_name(Modality m) noexcept;
Modality parse_modality(std::string_view name);

struct RatedSample {
    std::string id;
    Modality modality = Modality::pointcloud;
    std::vector<std::string> asset_refs;
    double mos = 0.0;
    double std = 0.0;  // rating standard deviation
    std::string dataset;

    friend bool operator==(const RatedSample&, const RatedSample&) = default;
};

struct ScoreRange {
    double min = 0.0;
    double max = 0.0;

    double width() const noexcept { return max - min; }
    bool contains(double v) const noexcept { return v >= min && v <= max; }
    friend bool operator==(const ScoreRange&, const ScoreRange&) = default;
};

class DatasetManifest {
public:
    DatasetManifest() = default;
    // Validates the invariants; throws InvalidInput on violation.
    DatasetManifest(std::string name, ScoreRange range, std::vector<RatedSample> samples);

    const std::string& name() const noexcept { return name_; }
    const ScoreRange& score_range() const noexcept { return range_; }
    const std::vector<RatedSample>& samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }

    // nullptr when absent.
    const RatedSample* find(std::string_view id) const noexcept;
    const RatedSample& at(std::string_view id) const;

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;

private:
    std::string name_;
    ScoreRange range_;
    std::vector<RatedSample> samples_;
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

inline constexpr double kStdFloor = 1e-6;

// (q_i - q_j) / max(sqrt(std_i^2 + std_j^2), 1e-6)
double standardized_difference(double q_i, double std_i, double q_j, double std_j);

// Symmetric magnitude convention: |z| <= 1 similar, (1, 2] worse/better, > 2 inferior/superior.
QualityLevel quantize_level(double z);

}  // namespace pcqa
