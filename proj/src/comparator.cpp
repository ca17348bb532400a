#include "pcqa/comparator.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <httplib.h>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "pcqa/io.hpp"
#include "pcqa/random.hpp"

namespace pcqa {

namespace {

// Upper tail 1 - Phi(x).
double upper_tail(double x) { return 0.5 * std::erfc(x * M_SQRT1_2); }

// Standard normal mass on [a, b], evaluated on whichever side keeps precision.
// mass(a, b) == mass(-b, -a) bit for bit.
double normal_mass(double a, double b) {
    if (a >= 0.0) return upper_tail(a) - upper_tail(b);
    if (b <= 0.0) return upper_tail(-b) - upper_tail(-a);
    return 1.0 - (upper_tail(-a) + upper_tail(b));
}

}  // namespace

LevelDistribution interval_model(double z, double noise_scale) {
    if (!std::isfinite(z)) throw InvalidInput("interval_model: non-finite z");
    if (!std::isfinite(noise_scale) || noise_scale < 0.0)
        throw InvalidInput("interval_model: noise scale must be finite and >= 0");
    if (noise_scale == 0.0) return LevelDistribution::one_hot(quantize_level(z));

    constexpr double inf = std::numeric_limits<double>::infinity();
    const double s = noise_scale;
    // Level intervals in canonical order: (2, inf), (1, 2], [-1, 1], [-2, -1), (-inf, -2).
    const double t2 = (2.0 - z) / s;
    const double t1 = (1.0 - z) / s;
    const double m1 = (-1.0 - z) / s;
    const double m2 = (-2.0 - z) / s;
    std::array<double, kLevelCount> p{normal_mass(t2, inf), normal_mass(t1, t2), normal_mass(m1, t1),
                                      normal_mass(m2, m1), normal_mass(-inf, m2)};
    for (double& v : p) v = std::max(v, 0.0);
    return LevelDistribution(p);
}

LevelDistribution simulated_compare(const TruthScore& test, const TruthScore& anchor,
                                    const SimulatedComparatorConfig& config, std::uint64_t query_seed) {
    const double z = standardized_difference(anchor.mos, anchor.std, test.mos, test.std);
    auto dist = interval_model(z, config.noise_scale);
    if (config.mode == SimulationMode::soft) return dist;

    Rng rng(query_seed);
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (std::size_t c = 0; c < kLevelCount; ++c) {
        cumulative += dist[c];
        if (u < cumulative) return LevelDistribution::one_hot(level_from_index(c));
    }
    // u landed in the rounding gap above the cumulative sum; take the last level with mass.
    for (std::size_t c = kLevelCount; c-- > 0;)
        if (dist[c] > 0.0) return LevelDistribution::one_hot(level_from_index(c));
    return dist;
}

SimulatedComparator::SimulatedComparator(SimulatedComparatorConfig config,
                                         std::unordered_map<std::string, TruthScore> truth)
    : config_(config), truth_(std::move(truth)) {
    if (!std::isfinite(config_.noise_scale) || config_.noise_scale < 0.0)
        throw InvalidInput("simulated comparator: noise scale must be >= 0");
}

SimulatedComparator SimulatedComparator::from_manifests(SimulatedComparatorConfig config,
                                                        const std::vector<const DatasetManifest*>& manifests) {
    std::unordered_map<std::string, TruthScore> truth;
    for (const auto* m : manifests)
        for (const auto& s : m->samples()) truth.insert_or_assign(s.id, TruthScore{s.mos, s.std});
    return SimulatedComparator(config, std::move(truth));
}

LevelDistribution SimulatedComparator::compare(const ComparatorQuery& query) const {
    const auto t = truth_.find(query.test.id);
    const auto a = truth_.find(query.anchor.id);
    if (t == truth_.end() || a == truth_.end())
        throw AssetError("no ground truth for stimulus", query.test.id, query.anchor.id);
    const std::uint64_t qseed = mix_seed(config_.seed, query.test.id + '\x1f' + query.anchor.id);
    return simulated_compare(t->second, a->second, config_, qseed);
}

std::string replay_entry_to_json_line(const ReplayEntry& e) {
    nlohmann::ordered_json j;
    j["test_id"] = e.test_id;
    j["anchor_id"] = e.anchor_id;
    j["prompt_kind"] = prompt_kind_name(e.prompt_kind);
    j["probs"] = e.probs.probs();
    return j.dump();
}

ReplayEntry replay_entry_from_json_line(std::string_view line) {
    try {
        const auto j = nlohmann::json::parse(line);
        const auto probs = j.at("probs").get<std::vector<double>>();
        return {j.at("test_id").get<std::string>(), j.at("anchor_id").get<std::string>(),
                parse_prompt_kind(j.at("prompt_kind").get<std::string>()), LevelDistribution::from_span(probs)};
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed replay entry: ") + e.what());
    }
}

ReplayComparator::ReplayComparator(const std::vector<ReplayEntry>& entries) {
    for (const auto& e : entries) table_.insert_or_assign({e.test_id, e.anchor_id, e.prompt_kind}, e.probs);
}

ReplayComparator ReplayComparator::load(const std::string& path) {
    std::istringstream in(io::read_file(path));
    std::vector<ReplayEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            entries.push_back(replay_entry_from_json_line(line));
        } catch (const InvalidInput& e) {
            throw InvalidInput(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return ReplayComparator(entries);
}

LevelDistribution ReplayComparator::compare(const ComparatorQuery& query) const {
    const auto it = table_.find({query.test.id, query.anchor.id, query.prompt_kind});
    if (it == table_.end())
        throw ReplayMiss("replay log has no entry for prompt kind " + std::string(prompt_kind_name(query.prompt_kind)),
                         query.test.id, query.anchor.id);
    return it->second;
}

namespace {

std::string base64(const std::string& bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

nlohmann::ordered_json stimulus_json(const StimulusRef& s, bool inline_media, const ComparatorQuery& q) {
    auto media = nlohmann::ordered_json::array();
    for (const auto& ref : s.media) {
        if (!inline_media) {
            media.push_back(ref);
            continue;
        }
        std::string bytes;
        try {
            bytes = io::read_file(ref);
        } catch (const IoError& e) {
            throw AssetError(e.what(), q.test.id, q.anchor.id);
        }
        media.push_back({{"name", ref}, {"inline_b64", base64(bytes)}});
    }
    return {{"id", s.id}, {"media", std::move(media)}};
}

std::unique_ptr<httplib::Client> make_client(const RemoteComparatorConfig& config) {
    auto client = std::make_unique<httplib::Client>(config.endpoint);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
    client->set_connection_timeout(static_cast<time_t>(secs.count()), static_cast<time_t>(usecs.count()));
    client->set_read_timeout(static_cast<time_t>(secs.count()), static_cast<time_t>(usecs.count()));
    client->set_write_timeout(static_cast<time_t>(secs.count()), static_cast<time_t>(usecs.count()));
    return client;
}

}  // namespace

RemoteComparator::RemoteComparator(RemoteComparatorConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw InvalidInput("remote comparator: empty endpoint");
}

std::string RemoteComparator::request_body(const ComparatorQuery& query) const {
    nlohmann::ordered_json j;
    j["test"] = stimulus_json(query.test, config_.inline_media, query);
    j["anchor"] = stimulus_json(query.anchor, config_.inline_media, query);
    j["prompt_kind"] = prompt_kind_name(query.prompt_kind);
    return j.dump();
}

LevelDistribution RemoteComparator::parse_response(std::string_view body, const ComparatorQuery& query) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
        throw ProtocolError("response is not valid JSON", query.test.id, query.anchor.id);
    }
    if (!j.is_object() || !j.contains("probs") || !j["probs"].is_array())
        throw ProtocolError("response lacks a 'probs' array", query.test.id, query.anchor.id);
    const auto& probs = j["probs"];
    if (probs.size() != kLevelCount)
        throw ProtocolError("response 'probs' has " + std::to_string(probs.size()) + " entries, expected 5",
                            query.test.id, query.anchor.id);
    std::array<double, kLevelCount> p{};
    for (std::size_t c = 0; c < kLevelCount; ++c) {
        if (!probs[c].is_number())
            throw ProtocolError("response 'probs' contains a non-number", query.test.id, query.anchor.id);
        p[c] = probs[c].get<double>();
    }
    try {
        return LevelDistribution(p);
    } catch (const InvalidInput& e) {
        throw ProtocolError(std::string("invalid distribution: ") + e.what(), query.test.id, query.anchor.id);
    }
}

LevelDistribution RemoteComparator::compare(const ComparatorQuery& query) const {
    const std::string body = request_body(query);
    auto client = make_client(config_);
    httplib::Result result;
    for (int attempt = 0; attempt < 2; ++attempt) {
        result = client->Post("/compare", body, "application/json");
        const bool transient = !result || result->status >= 500;
        if (!transient) break;
    }
    if (!result)
        throw TransportError("request to " + config_.endpoint + " failed: " + httplib::to_string(result.error()),
                             query.test.id, query.anchor.id);
    if (result->status != 200)
        throw ProtocolError("service returned status " + std::to_string(result->status), query.test.id,
                            query.anchor.id);
    return parse_response(result->body, query);
}

void RemoteComparator::check_health() const {
    auto client = make_client(config_);
    auto result = client->Get("/health");
    if (!result)
        throw TransportError("health check to " + config_.endpoint + " failed: " + httplib::to_string(result.error()),
                             "", "");
    if (result->status != 200)
        throw ProtocolError("health check returned status " + std::to_string(result->status), "", "");
    try {
        const auto j = nlohmann::json::parse(result->body);
        if (j.value("status", std::string{}) != "ok") throw ProtocolError("service not ok", "", "");
    } catch (const nlohmann::json::exception&) {
        throw ProtocolError("health response is not valid JSON", "", "");
    }
}

}  // namespace pcqa
