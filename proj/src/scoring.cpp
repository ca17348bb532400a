#include "pcqa/scoring.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "pcqa/io.hpp"
#include "pcqa/random.hpp"
#include "pcqa/schedule.hpp"

namespace pcqa {

ProbabilityMatrix::ProbabilityMatrix(std::vector<std::string> test_ids, std::vector<std::string> anchor_ids,
                                     PromptKind prompt_kind)
    : test_ids_(std::move(test_ids)),
      anchor_ids_(std::move(anchor_ids)),
      prompt_kind_(prompt_kind),
      cells_(test_ids_.size() * anchor_ids_.size()) {}

ProbabilityMatrix ProbabilityMatrix::from_entries(std::vector<std::string> test_ids,
                                                  std::vector<std::string> anchor_ids, PromptKind prompt_kind,
                                                  const std::vector<ReplayEntry>& entries) {
    ProbabilityMatrix m(std::move(test_ids), std::move(anchor_ids), prompt_kind);
    std::map<std::string, std::size_t> trow, acol;
    for (std::size_t i = 0; i < m.rows(); ++i) trow.emplace(m.test_ids_[i], i);
    for (std::size_t k = 0; k < m.cols(); ++k) acol.emplace(m.anchor_ids_[k], k);
    for (const auto& e : entries) {
        if (e.prompt_kind != prompt_kind) continue;
        const auto t = trow.find(e.test_id);
        const auto a = acol.find(e.anchor_id);
        if (t != trow.end() && a != acol.end()) m.set_cell(t->second, a->second, e.probs);
    }
    return m;
}

const std::optional<LevelDistribution>& ProbabilityMatrix::cell(std::size_t test, std::size_t anchor) const {
    if (test >= rows() || anchor >= cols()) throw InvalidInput("probability matrix index out of range");
    return cells_[test * cols() + anchor];
}

void ProbabilityMatrix::set_cell(std::size_t test, std::size_t anchor, LevelDistribution value) {
    if (test >= rows() || anchor >= cols()) throw InvalidInput("probability matrix index out of range");
    cells_[test * cols() + anchor] = std::move(value);
}

std::span<const std::optional<LevelDistribution>> ProbabilityMatrix::row(std::size_t test) const {
    if (test >= rows()) throw InvalidInput("probability matrix row out of range");
    return {cells_.data() + test * cols(), cols()};
}

bool ProbabilityMatrix::row_complete(std::size_t test) const {
    for (const auto& c : row(test))
        if (!c) return false;
    return true;
}

std::vector<ReplayEntry> ProbabilityMatrix::entries() const {
    std::vector<ReplayEntry> out;
    for (std::size_t i = 0; i < rows(); ++i)
        for (std::size_t k = 0; k < cols(); ++k)
            if (const auto& c = cells_[i * cols() + k]) out.push_back({test_ids_[i], anchor_ids_[k], prompt_kind_, *c});
    return out;
}

ProbabilityMatrix build_probability_matrix(const std::vector<StimulusRef>& tests, const AnchorSet& anchor_set,
                                           const Comparator& comparator, PromptKind prompt_kind,
                                           std::size_t workers) {
    if (anchor_set.anchors.empty()) throw InvalidInput("build_probability_matrix: empty anchor set");
    std::vector<std::string> test_ids, anchor_ids;
    for (const auto& t : tests) test_ids.push_back(t.id);
    for (const auto& a : anchor_set.anchors) anchor_ids.push_back(a.id);
    ProbabilityMatrix matrix(std::move(test_ids), std::move(anchor_ids), prompt_kind);

    const std::size_t beta = anchor_set.anchors.size();
    const std::size_t total = tests.size() * beta;
    std::vector<std::optional<LevelDistribution>> results(total);
    std::vector<std::optional<std::string>> errors(total);

    auto run_cell = [&](std::size_t cell) {
        const auto& test = tests[cell / beta];
        const auto& anchor = anchor_set.anchors[cell % beta];
        if (test.id == anchor.id) {
            results[cell] = LevelDistribution::one_hot(QualityLevel::similar);
            return;
        }
        try {
            results[cell] = comparator.compare({test, StimulusRef::of(anchor), prompt_kind});
        } catch (const std::exception& e) {
            errors[cell] = e.what();
        }
    };

    const std::size_t threads = comparator.concurrent_safe() ? std::max<std::size_t>(1, std::min(workers, total)) : 1;
    if (threads <= 1) {
        for (std::size_t c = 0; c < total; ++c) run_cell(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (std::size_t c = next++; c < total; c = next++) run_cell(c);
            });
    }

    std::size_t failed = 0, queried = 0;
    for (std::size_t c = 0; c < total; ++c) {
        queried += tests[c / beta].id != anchor_set.anchors[c % beta].id;
        if (results[c]) {
            matrix.set_cell(c / beta, c % beta, *results[c]);
        } else {
            ++failed;
            matrix.record_failure({tests[c / beta].id, anchor_set.anchors[c % beta].id, errors[c].value_or("")});
        }
    }
    // self cells are not queries, so they do not rescue a comparator that never answered
    if (queried > 0 && failed == queried)
        throw EvaluationError("every comparison failed; first error: " + matrix.failures().front().message);
    return matrix;
}

void ScoreInferenceConfig::validate() const {
    if (!(model_noise > 0.0) || !std::isfinite(model_noise)) throw InvalidInput("model_noise must be > 0");
    if (test_std && (!std::isfinite(*test_std) || *test_std < 0.0)) throw InvalidInput("test_std must be >= 0");
    if (!std::isfinite(search_margin) || search_margin < 0.0) throw InvalidInput("search_margin must be >= 0");
    if (grid_points < 3) throw InvalidInput("grid_points must be >= 3");
    if (!(refine_tolerance > 0.0)) throw InvalidInput("refine_tolerance must be > 0");
}

double score_objective(double q, std::span<const std::optional<LevelDistribution>> row,
                       std::span<const TruthScore> anchors, double test_std, double model_noise) {
    double f = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (!row[k]) continue;
        const double z = standardized_difference(anchors[k].mos, anchors[k].std, q, test_std);
        const auto model = interval_model(z, model_noise);
        for (std::size_t c = 0; c < kLevelCount; ++c) {
            const double p = (*row[k])[c];
            if (p > 0.0) f += p * std::log(std::max(model[c], kProbabilityFloor));
        }
    }
    return f;
}

ScoreEstimate infer_score(std::span<const std::optional<LevelDistribution>> row,
                          std::span<const TruthScore> anchors, const ScoreInferenceConfig& config,
                          double mos_range) {
    config.validate();
    if (row.size() != anchors.size()) throw InvalidInput("infer_score: row and anchor list differ in length");
    std::size_t used = 0;
    for (const auto& c : row) used += c ? 1 : 0;
    if (used == 0) throw InvalidInput("infer_score: empty row");
    if (!std::isfinite(mos_range) || mos_range < 0.0) throw InvalidInput("infer_score: invalid MOS range");

    double sigma_bar = 0.0;
    if (config.test_std) {
        sigma_bar = *config.test_std;
    } else {
        for (const auto& a : anchors) sigma_bar += a.std;
        sigma_bar /= static_cast<double>(anchors.size());
    }

    double lo = anchors.front().mos, hi = anchors.front().mos;
    for (const auto& a : anchors) {
        lo = std::min(lo, a.mos);
        hi = std::max(hi, a.mos);
    }
    const double margin = config.search_margin * mos_range;
    lo -= margin;
    hi += margin;
    auto objective = [&](double q) { return score_objective(q, row, anchors, sigma_bar, config.model_noise); };

    if (hi <= lo) return {lo, used, objective(lo)};

    const std::size_t n = config.grid_points;
    const double step = (hi - lo) / static_cast<double>(n - 1);
    std::size_t best = 0;
    double best_f = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double q = i + 1 == n ? hi : lo + step * static_cast<double>(i);
        const double f = objective(q);
        if (f > best_f) {
            best_f = f;
            best = i;
        }
    }
    const double best_q = best + 1 == n ? hi : lo + step * static_cast<double>(best);

    // Golden-section search on the bracket around the best grid point.
    double a = best == 0 ? lo : lo + step * static_cast<double>(best - 1);
    double b = best + 1 >= n ? hi : std::min(hi, lo + step * static_cast<double>(best + 1));
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    while (b - a > config.refine_tolerance) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = objective(x2);
        }
    }
    const double refined = 0.5 * (a + b);
    const double refined_f = objective(refined);
    if (refined_f >= best_f) return {refined, used, refined_f};
    return {best_q, used, best_f};
}

std::string scoring_config_digest(const ScoreInferenceConfig& c) {
    std::string key = "model_noise=" + io::format_double(c.model_noise) +
                      ";test_std=" + (c.test_std ? io::format_double(*c.test_std) : std::string("mean_anchor")) +
                      ";search_margin=" + io::format_double(c.search_margin) +
                      ";grid_points=" + std::to_string(c.grid_points) +
                      ";refine_tolerance=" + io::format_double(c.refine_tolerance);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(key)));
    return buf;
}

ScoreTable score_dataset(const ProbabilityMatrix& matrix, const AnchorSet& anchor_set,
                         const ScoreInferenceConfig& config) {
    config.validate();
    if (matrix.cols() != anchor_set.anchors.size())
        throw InvalidInput("score_dataset: matrix was not built against this anchor set");
    std::vector<TruthScore> anchors;
    for (std::size_t k = 0; k < matrix.cols(); ++k) {
        const auto& a = anchor_set.anchors[k];
        if (a.id != matrix.anchor_ids()[k])
            throw InvalidInput("score_dataset: anchor '" + a.id + "' does not match matrix column '" +
                               matrix.anchor_ids()[k] + "'");
        anchors.push_back({a.mos, a.std});
    }

    ScoreTable table;
    table.config_digest = scoring_config_digest(config);
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        const auto& id = matrix.test_ids()[i];
        if (!matrix.row_complete(i)) {
            table.omitted.emplace_back(id, "incomplete row");
            continue;
        }
        try {
            const auto est = infer_score(matrix.row(i), anchors, config, anchor_set.score_range.width());
            table.rows.push_back({id, est.score, est.anchors_used});
        } catch (const Error& e) {
            table.omitted.emplace_back(id, e.what());
        }
    }
    return table;
}

std::string ScoreTable::to_csv() const {
    std::string out = "test_id,predicted_score,anchors_used,config_digest\n";
    for (const auto& r : rows) {
        out += r.test_id;
        out += ',';
        out += io::format_double(r.score);
        out += ',';
        out += std::to_string(r.anchors_used);
        out += ',';
        out += config_digest;
        out += '\n';
    }
    return out;
}

ScoreTable ScoreTable::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    ScoreTable table;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        if (header) {
            header = false;
            if (line.rfind("test_id,", 0) == 0) continue;
        }
        std::vector<std::string> cols;
        std::stringstream ls(line);
        std::string col;
        while (std::getline(ls, col, ',')) cols.push_back(col);
        if (cols.size() < 2) throw InvalidInput("score table: malformed line '" + line + "'");
        ScoreRow r;
        r.test_id = cols[0];
        try {
            r.score = std::stod(cols[1]);
            r.anchors_used = cols.size() > 2 ? std::stoul(cols[2]) : 0;
        } catch (const std::exception&) {
            throw InvalidInput("score table: malformed number in line '" + line + "'");
        }
        if (cols.size() > 3) table.config_digest = cols[3];
        table.rows.push_back(std::move(r));
    }
    return table;
}

}  // namespace pcqa
