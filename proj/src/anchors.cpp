#include "pcqa/anchors.hpp"

#include <algorithm>
#include <cmath>

namespace pcqa {

std::string_view partition_rule_name(PartitionRule rule) noexcept {
    return rule == PartitionRule::equal_width ? "equal_width" : "quantile";
}

PartitionRule parse_partition_rule(std::string_view name) {
    if (name == "equal_width") return PartitionRule::equal_width;
    if (name == "quantile") return PartitionRule::quantile;
    throw InvalidInput("unknown partition rule: " + std::string(name));
}

IntervalPartition partition_intervals(const DatasetManifest& manifest, std::size_t beta) {
    if (beta < 1) throw InvalidInput("beta must be >= 1");
    const auto& samples = manifest.samples();
    if (samples.size() < beta)
        throw InsufficientData("dataset '" + manifest.name() + "' has " + std::to_string(samples.size()) +
                               " samples, fewer than beta=" + std::to_string(beta));

    std::vector<const RatedSample*> sorted;
    sorted.reserve(samples.size());
    for (const auto& s : samples) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](const RatedSample* a, const RatedSample* b) {
        return a->mos != b->mos ? a->mos < b->mos : a->id < b->id;
    });

    const double lo = sorted.front()->mos;
    const double hi = sorted.back()->mos;
    IntervalPartition out;
    out.intervals.resize(beta);
    if (hi > lo) {
        const double width = (hi - lo) / static_cast<double>(beta);
        for (const auto* s : sorted) {
            auto k = static_cast<std::size_t>(std::floor((s->mos - lo) / width));
            out.intervals[std::min(k, beta - 1)].push_back(s->id);
        }
    } else {
        out.intervals[0].reserve(sorted.size());
        for (const auto* s : sorted) out.intervals[0].push_back(s->id);
    }
    const bool any_empty =
        std::any_of(out.intervals.begin(), out.intervals.end(), [](const auto& v) { return v.empty(); });
    if (!any_empty) return out;

    out.rule = PartitionRule::quantile;
    out.intervals.assign(beta, {});
    const std::size_t n = sorted.size();
    for (std::size_t k = 0; k < beta; ++k) {
        const std::size_t begin = k * n / beta;
        const std::size_t end = (k + 1) * n / beta;
        for (std::size_t i = begin; i < end; ++i) out.intervals[k].push_back(sorted[i]->id);
    }
    return out;
}

std::string select_anchor(const std::vector<std::string>& interval, const DatasetManifest& manifest) {
    if (interval.empty()) throw InvalidInput("select_anchor: empty interval");
    const RatedSample* best = nullptr;
    double best_var = 0.0;
    for (const auto& id : interval) {
        const RatedSample& s = manifest.at(id);
        const double var = s.std * s.std;
        if (!best || var < best_var || (var == best_var && s.id < best->id)) {
            best = &s;
            best_var = var;
        }
    }
    return best->id;
}

AnchorSet build_anchor_set(const DatasetManifest& manifest, std::size_t beta) {
    const auto partition = partition_intervals(manifest, beta);
    AnchorSet set;
    set.beta = beta;
    set.rule = partition.rule;
    set.score_range = manifest.score_range();
    for (const auto& interval : partition.intervals) set.anchors.push_back(manifest.at(select_anchor(interval, manifest)));
    std::stable_sort(set.anchors.begin(), set.anchors.end(),
                     [](const RatedSample& a, const RatedSample& b) { return a.mos < b.mos; });
    return set;
}

}  // namespace pcqa
