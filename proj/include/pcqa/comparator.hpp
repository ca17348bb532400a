#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "pcqa/core.hpp"
#include "pcqa/pairgen.hpp"

namespace pcqa {

struct StimulusRef {
    std::string id;
    std::vector<std::string> media;

    static StimulusRef of(const RatedSample& s) { return {s.id, s.asset_refs}; }
};

// Level semantics follow the quantizer with i = anchor, j = test: "superior"
// means the test stimulus is much better than the anchor.
struct ComparatorQuery {
    StimulusRef test;
    StimulusRef anchor;
    PromptKind prompt_kind = PromptKind::geometry;
};

class Comparator {
public:
    virtual ~Comparator() = default;

    // Returns a valid distribution or throws a ComparatorError subtype.
    virtual LevelDistribution compare(const ComparatorQuery& query) const = 0;

    // True when compare() may be called from several threads at once.
    virtual bool concurrent_safe() const noexcept = 0;
    virtual std::string name() const = 0;
};

// Gaussian perturbation of z censored at the level thresholds (+-1, +-2):
//   p(c) = Phi((u_c - z)/s) - Phi((l_c - z)/s),  one-hot quantize_level(z) when s = 0.
// Mirroring z mirrors the result bit for bit.
LevelDistribution interval_model(double z, double noise_scale);

enum class SimulationMode : std::uint8_t { soft, hard };

struct SimulatedComparatorConfig {
    double noise_scale = 0.0;
    SimulationMode mode = SimulationMode::soft;
    std::uint64_t seed = 0;  // hard mode only
};

struct TruthScore {
    double mos = 0.0;
    double std = 0.0;
};

LevelDistribution simulated_compare(const TruthScore& test, const TruthScore& anchor,
                                    const SimulatedComparatorConfig& config,
                                    std::uint64_t query_seed = 0);

// Oracle comparator driven by known (MOS, std) per stimulus id. Hard-mode draws are
// seeded per (seed, test id, anchor id), so results do not depend on call order.
class SimulatedComparator final : public Comparator {
public:
    SimulatedComparator(SimulatedComparatorConfig config, std::unordered_map<std::string, TruthScore> truth);

    static SimulatedComparator from_manifests(SimulatedComparatorConfig config,
                                              const std::vector<const DatasetManifest*>& manifests);

    LevelDistribution compare(const ComparatorQuery& query) const override;
    bool concurrent_safe() const noexcept override { return true; }
    std::string name() const override { return "simulated"; }
    const SimulatedComparatorConfig& config() const noexcept { return config_; }

private:
    SimulatedComparatorConfig config_;
    std::unordered_map<std::string, TruthScore> truth_;
};

struct ReplayEntry {
    std::string test_id;
    std::string anchor_id;
    PromptKind prompt_kind = PromptKind::geometry;
    LevelDistribution probs;
};

std::string replay_entry_to_json_line(const ReplayEntry& entry);
ReplayEntry replay_entry_from_json_line(std::string_view line);

// Serves recorded distributions keyed by (test id, anchor id, prompt kind).
class ReplayComparator final : public Comparator {
public:
    explicit ReplayComparator(const std::vector<ReplayEntry>& entries);
    // Every line is validated while loading; a bad distribution fails the whole load.
    static ReplayComparator load(const std::string& path);

    LevelDistribution compare(const ComparatorQuery& query) const override;
    bool concurrent_safe() const noexcept override { return true; }
    std::string name() const override { return "replay"; }
    std::size_t size() const noexcept { return table_.size(); }

private:
    std::map<std::tuple<std::string, std::string, PromptKind>, LevelDistribution> table_;
};

struct RemoteComparatorConfig {
    std::string endpoint;  // e.g. http://127.0.0.1:8080
    std::chrono::milliseconds timeout{5000};
    bool inline_media = false;  // send base64 file contents instead of references
};

// Client for the comparison service: POST /compare, GET /health.
class RemoteComparator final : public Comparator {
public:
    explicit RemoteComparator(RemoteComparatorConfig config);

    LevelDistribution compare(const ComparatorQuery& query) const override;
    bool concurrent_safe() const noexcept override { return true; }
    std::string name() const override { return "remote"; }

    // Throws TransportError/ProtocolError unless the service reports {"status": "ok"}.
    void check_health() const;

    // Request body for a query; exposed for protocol tests.
    std::string request_body(const ComparatorQuery& query) const;
    // Parses and validates a /compare response body.
    static LevelDistribution parse_response(std::string_view body, const ComparatorQuery& query);

private:
    RemoteComparatorConfig config_;
};

}  // namespace pcqa
