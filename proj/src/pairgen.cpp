#include "pcqa/pairgen.hpp"

#include <nlohmann/json.hpp>
#include <sstream>

#include "pcqa/io.hpp"
#include "pcqa/random.hpp"

namespace pcqa {

std::string_view prompt_kind_name(PromptKind kind) noexcept {
    return kind == PromptKind::texture ? "texture" : "geometry";
}

PromptKind parse_prompt_kind(std::string_view name) {
    if (name == "texture") return PromptKind::texture;
    if (name == "geometry") return PromptKind::geometry;
    throw InvalidInput("unknown prompt kind: " + std::string(name));
}

PromptKind prompt_kind_for(Modality modality) noexcept {
    return modality == Modality::image ? PromptKind::texture : PromptKind::geometry;
}

std::string response_text(PromptKind kind, QualityLevel level) {
    const std::string_view noun = kind == PromptKind::texture ? "image" : "point cloud";
    const std::string_view link = level == QualityLevel::similar ? "to" : "than";
    std::string out = "The quality of the second ";
    out += noun;
    out += " is ";
    out += level_name(level);
    out += ' ';
    out += link;
    out += " the first ";
    out += noun;
    out += '.';
    return out;
}

ComparisonPair label_pair(const RatedSample& first, const RatedSample& second) {
    if (first.id == second.id) throw InvalidPair("pair members must differ: " + first.id);
    const double z = standardized_difference(first.mos, first.std, second.mos, second.std);
    return {first.id, second.id, quantize_level(z), z};
}

std::vector<ComparisonPair> sample_pairs(const DatasetManifest& manifest, std::size_t n_k,
                                         std::uint64_t seed, const PairSamplingOptions& options) {
    const auto& samples = manifest.samples();
    if (samples.size() < 2)
        throw InsufficientData("dataset '" + manifest.name() + "' needs at least 2 samples to form pairs");
    if (n_k < 1) throw InvalidInput("n_k must be >= 1");
    Rng rng(seed);
    const std::uint64_t n = samples.size();
    auto draw = [&] {
        const auto i = rng.index(n);
        auto j = rng.index(n - 1);
        if (j >= i) ++j;
        return label_pair(samples[i], samples[j]);
    };

    std::vector<ComparisonPair> pairs;
    pairs.reserve(n_k);
    if (!options.balance_levels) {
        for (std::size_t k = 0; k < n_k; ++k) pairs.push_back(draw());
        return pairs;
    }

    std::vector<QualityLevel> rotation(kAllLevels.begin(), kAllLevels.end());
    std::size_t cursor = 0;
    while (pairs.size() < n_k) {
        if (rotation.empty()) {
            pairs.push_back(draw());
            continue;
        }
        const QualityLevel target = rotation[cursor % rotation.size()];
        bool found = false;
        for (std::size_t a = 0; a < options.attempts_per_level; ++a) {
            auto p = draw();
            if (p.level == target) {
                pairs.push_back(std::move(p));
                found = true;
                break;
            }
        }
        if (found) {
            ++cursor;
        } else {
            rotation.erase(rotation.begin() + static_cast<std::ptrdiff_t>(cursor % rotation.size()));
        }
    }
    return pairs;
}

InstructionRecord render_instruction(const ComparisonPair& pair, const DatasetManifest& manifest) {
    const RatedSample& a = manifest.at(pair.first);
    const RatedSample& b = manifest.at(pair.second);
    if (a.modality != b.modality)
        throw InvalidPair("mixed-modality pair: " + a.id + " (" + std::string(modality_name(a.modality)) +
                          "), " + b.id + " (" + std::string(modality_name(b.modality)) + ")");
    InstructionRecord r;
    r.first_id = a.id;
    r.second_id = b.id;
    r.prompt_kind = prompt_kind_for(a.modality);
    r.instruction = std::string(r.prompt_kind == PromptKind::texture ? prompts::kTexture : prompts::kGeometry);
    r.response = response_text(r.prompt_kind, pair.level);
    r.media_refs = a.asset_refs;
    r.media_refs.insert(r.media_refs.end(), b.asset_refs.begin(), b.asset_refs.end());
    r.level = pair.level;
    r.z = pair.z;
    r.id = manifest.name() + ":" + a.id + ">" + b.id;
    return r;
}

std::string record_to_json_line(const InstructionRecord& r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["first_id"] = r.first_id;
    j["second_id"] = r.second_id;
    j["prompt_kind"] = prompt_kind_name(r.prompt_kind);
    j["instruction"] = r.instruction;
    j["response"] = r.response;
    j["media_refs"] = r.media_refs;
    j["level_index"] = level_index(r.level);
    j["z"] = r.z;
    return j.dump();
}

InstructionRecord record_from_json_line(std::string_view line) {
    try {
        const auto j = nlohmann::json::parse(line);
        InstructionRecord r;
        r.id = j.value("id", std::string{});
        r.first_id = j.value("first_id", std::string{});
        r.second_id = j.value("second_id", std::string{});
        r.prompt_kind = parse_prompt_kind(j.at("prompt_kind").get<std::string>());
        r.instruction = j.at("instruction").get<std::string>();
        r.response = j.at("response").get<std::string>();
        r.media_refs = j.at("media_refs").get<std::vector<std::string>>();
        r.level = level_from_index(j.at("level_index").get<std::size_t>());
        r.z = j.at("z").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed instruction record: ") + e.what());
    }
}

std::size_t export_records(const std::vector<InstructionRecord>& records, const std::string& path) {
    std::string out;
    for (const auto& r : records) {
        out += record_to_json_line(r);
        out += '\n';
    }
    io::write_file(path, out);
    return records.size();
}

std::vector<InstructionRecord> read_records(const std::string& path) {
    std::istringstream in(io::read_file(path));
    std::vector<InstructionRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(record_from_json_line(line));
    }
    return records;
}

}  // namespace pcqa
