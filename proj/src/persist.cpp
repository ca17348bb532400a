#include "pcqa/persist.hpp"

#include <nlohmann/json.hpp>
#include <sstream>

#include "pcqa/io.hpp"

namespace pcqa {

namespace {

using ojson = nlohmann::ordered_json;

void stamp(ojson& doc, const std::optional<Provenance>& p) {
    if (p) doc["provenance"] = {{"seed", p->seed}, {"config_digest", p->config_digest}};
}

}  // namespace

std::string anchor_set_to_json(const AnchorSet& set, const std::optional<Provenance>& provenance) {
    ojson doc;
    doc["beta"] = set.beta;
    doc["partition_rule"] = partition_rule_name(set.rule);
    doc["score_range"] = {set.score_range.min, set.score_range.max};
    auto anchors = ojson::array();
    for (const auto& a : set.anchors)
        anchors.push_back({{"id", a.id},
                           {"mos", a.mos},
                           {"std", a.std},
                           {"modality", modality_name(a.modality)},
                           {"asset_refs", a.asset_refs},
                           {"dataset", a.dataset}});
    doc["anchors"] = std::move(anchors);
    stamp(doc, provenance);
    return doc.dump(2) + "\n";
}

AnchorSet anchor_set_from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        AnchorSet set;
        set.beta = doc.at("beta").get<std::size_t>();
        set.rule = parse_partition_rule(doc.value("partition_rule", std::string("equal_width")));
        const auto& range = doc.at("score_range");
        set.score_range = {range.at(0).get<double>(), range.at(1).get<double>()};
        for (const auto& j : doc.at("anchors")) {
            RatedSample s;
            s.id = j.at("id").get<std::string>();
            s.mos = j.at("mos").get<double>();
            s.std = j.at("std").get<double>();
            s.modality = parse_modality(j.value("modality", std::string("pointcloud")));
            s.asset_refs = j.value("asset_refs", std::vector<std::string>{});
            s.dataset = j.value("dataset", std::string{});
            set.anchors.push_back(std::move(s));
        }
        if (set.anchors.size() != set.beta) throw InvalidInput("anchor file: anchor count differs from beta");
        return set;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed anchor file: ") + e.what());
    }
}

AnchorSet load_anchor_set(const std::string& path) { return anchor_set_from_json(io::read_file(path)); }

std::string schedule_to_json(const std::vector<TrainingStep>& steps, const std::optional<Provenance>& provenance) {
    ojson doc;
    auto arr = ojson::array();
    for (const auto& s : steps)
        arr.push_back({{"t", s.t}, {"pool", prompt_kind_name(s.pool)}, {"record_ids", s.record_ids}});
    doc["steps"] = std::move(arr);
    stamp(doc, provenance);
    return doc.dump(2) + "\n";
}

std::vector<TrainingStep> schedule_from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        std::vector<TrainingStep> steps;
        for (const auto& j : doc.at("steps"))
            steps.push_back({j.at("t").get<std::size_t>(), parse_prompt_kind(j.at("pool").get<std::string>()),
                             j.at("record_ids").get<std::vector<std::string>>()});
        return steps;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed schedule: ") + e.what());
    }
}

std::string matrix_to_replay_log(const ProbabilityMatrix& matrix) {
    std::string out;
    for (const auto& e : matrix.entries()) {
        out += replay_entry_to_json_line(e);
        out += '\n';
    }
    return out;
}

std::vector<ReplayEntry> read_replay_log(const std::string& path) {
    std::istringstream in(io::read_file(path));
    std::vector<ReplayEntry> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(replay_entry_from_json_line(line));
    return out;
}

}  // namespace pcqa
