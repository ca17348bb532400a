// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Every tolerance and time budget is pinned here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "../oracles.hpp"
#include "pcqa/adaptation.hpp"
#include "pcqa/anchors.hpp"
#include "pcqa/io.hpp"
#include "pcqa/metrics.hpp"
#include "pcqa/persist.hpp"
#include "pcqa/random.hpp"
#include "pcqa/render.hpp"
#include "pcqa/schedule.hpp"
#include "pcqa/synthetic.hpp"

using namespace pcqa;

namespace {

constexpr double kCrossEntropyTol = 1e-9;
constexpr double kGradientRelTol = 1e-4;
constexpr double kGradientStep = 1e-4;
constexpr double kRankSingularTol = 1e-8;
constexpr double kLossRatio = 0.5;
constexpr double kFitTol = 1e-6;
constexpr double kIdempotenceTol = 1e-12;
constexpr double kRoundTripSrocc = 0.99;
constexpr double kRoundTripRmseFraction = 0.05;

struct Outcome {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            if (ok) detail << "first failure: " << what;
            ok = false;
        }
    }
};

using Criterion = std::function<void(Outcome&)>;

const std::string kFixtures = PCQA_FIXTURES;

void quantization(Outcome& o) {
    const std::pair<double, QualityLevel> cases[] = {
        {0.0, QualityLevel::similar},  {0.5, QualityLevel::similar},   {-0.5, QualityLevel::similar},
        {1.5, QualityLevel::worse},    {-1.5, QualityLevel::better},   {2.5, QualityLevel::inferior},
        {-2.5, QualityLevel::superior}, {1.0, QualityLevel::similar},  {-1.0, QualityLevel::similar},
        {2.0, QualityLevel::worse},    {-2.0, QualityLevel::better},
    };
    for (const auto& [z, level] : cases)
        o.expect(quantize_level(z) == level, "z=" + io::format_double(z) + " gave " + std::string(level_name(quantize_level(z))));
}

void mirror(Outcome& o) {
    Rng rng(20240611);
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
        const RatedSample a{"a", Modality::pointcloud, {}, rng.uniform(0, 10), rng.uniform(0, 2), "m"};
        const RatedSample b{"b", Modality::pointcloud, {}, rng.uniform(0, 10), rng.uniform(0, 2), "m"};
        const auto ab = quantize_level(standardized_difference(a.mos, a.std, b.mos, b.std));
        const auto ba = quantize_level(standardized_difference(b.mos, b.std, a.mos, a.std));
        violations += ab != mirror_level(ba);
    }
    o.detail << "violations=" << violations << " ";
    o.expect(violations == 0, "mirror violations");
}

void anchors(Outcome& o) {
    Rng rng(77);
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t beta = 1 + rng.index(5);
        const std::size_t n = beta + rng.index(51 - beta);
        const bool coarse = trial % 2 == 0;
        std::vector<RatedSample> s;
        for (std::size_t i = 0; i < n; ++i)
            s.push_back({"x" + std::to_string(rng.index(1000)) + "_" + std::to_string(i), Modality::pointcloud, {},
                         coarse ? 0.5 * static_cast<double>(rng.index(21)) : rng.uniform(0, 10),
                         0.1 * static_cast<double>(1 + rng.index(5)), "r"});
        const DatasetManifest m("r", {0, 10}, s);
        const auto set = build_anchor_set(m, beta);
        std::vector<std::string> got;
        for (const auto& a : set.anchors) got.push_back(a.id);
        mismatches += got != oracle::anchors(m, beta);
    }
    o.detail << "mismatches=" << mismatches << "/100 ";
    o.expect(mismatches == 0, "anchor mismatch");
}

void round_trip(Outcome& o) {
    ExperimentOptions opt;
    opt.dataset.count = 100;
    opt.beta = 5;
    opt.oracle_noise = 0.0;
    const auto r = run_synthetic_experiment(opt, 1);
    const double range = opt.dataset.range.width();
    o.detail << "srocc=" << r.metrics.srocc << " rmse=" << r.metrics.rmse_raw << " ";
    o.expect(r.scores.rows.size() == 100, "not every test scored");
    o.expect(r.metrics.srocc >= kRoundTripSrocc, "srocc below 0.99");
    o.expect(r.metrics.rmse_raw <= kRoundTripRmseFraction * range, "rmse above 5% of range");
}

void noise_monotonicity(Outcome& o) {
    const double noise[] = {0.0, 0.5, 2.0};
    double means[3] = {};
    for (int k = 0; k < 3; ++k) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            ExperimentOptions opt;
            opt.oracle_noise = noise[k];
            opt.mode = SimulationMode::hard;
            means[k] += run_synthetic_experiment(opt, 1000 + seed).metrics.srocc / 10.0;
        }
        o.detail << "s=" << noise[k] << ":" << means[k] << " ";
    }
    o.expect(means[0] >= means[1] && means[1] >= means[2], "mean srocc not nonincreasing");
}

void schedule(Outcome& o) {
    std::vector<std::string> tex, geo;
    for (int i = 0; i < 50; ++i) tex.push_back("t" + std::to_string(i)), geo.push_back("g" + std::to_string(i));
    const std::set<std::string> ts(tex.begin(), tex.end());
    const auto plan = plan_schedule(tex, geo, 1000, 4, 5);
    o.expect(plan.size() == 1000, "plan length");
    for (std::size_t t = 0; t < plan.size(); ++t) {
        const bool even = t % 2 == 0;
        o.expect(plan[t].pool == (even ? PromptKind::texture : PromptKind::geometry), "parity at " + std::to_string(t));
        for (const auto& id : plan[t].record_ids) o.expect(ts.count(id) == static_cast<std::size_t>(even), "membership");
    }
    for (auto l : kAllLevels) {
        o.expect(std::abs(cross_entropy(LevelDistribution::uniform(), l) - std::log(5.0)) <= kCrossEntropyTol, "uniform ce");
        o.expect(cross_entropy(LevelDistribution::one_hot(l), l) == 0.0, "one-hot ce");
    }
}

double gradient_error(ToyComparatorNet& net, const std::vector<ToyExample>& pool) {
    std::vector<std::size_t> batch(pool.size());
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
    Eigen::VectorXd grad, scratch;
    net.loss_and_gradient(pool, batch, grad);
    const Eigen::VectorXd theta = net.parameters();
    double worst = 0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        Eigen::VectorXd t = theta;
        t[i] += kGradientStep;
        net.set_parameters(t);
        const double up = net.loss_and_gradient(pool, batch, scratch);
        t[i] -= 2 * kGradientStep;
        net.set_parameters(t);
        const double down = net.loss_and_gradient(pool, batch, scratch);
        const double numeric = (up - down) / (2 * kGradientStep);
        worst = std::max(worst, std::abs(grad[i] - numeric) / std::max({std::abs(grad[i]), std::abs(numeric), 1e-6}));
    }
    net.set_parameters(theta);
    return worst;
}

void lora(Outcome& o) {
    const auto layer = lora_init(8, 6, 3, 6.0, 1);
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(6, -1.0, 2.0);
    const Eigen::VectorXd base = layer.base * x;
    o.expect((lora_forward(layer, x).array() == base.array()).all(), "B=0 forward differs from base");

    ToyComparatorNet small(ToyNetShape{3, 3, 3, 2, 4.0}, 2);
    Rng rng(3);
    for (auto* l : {&small.query(), &small.value()})
        for (Eigen::Index i = 0; i < l->up.size(); ++i) l->up.data()[i] = 0.3 * rng.normal();
    std::vector<ToyExample> pool;
    for (int i = 0; i < 6; ++i) {
        Eigen::VectorXd d(3);
        for (auto& v : d) v = rng.normal();
        pool.push_back({d, level_from_index(rng.index(5))});
    }
    const double gerr = gradient_error(small, pool);
    o.detail << "grad_rel_err=" << gerr << " ";
    o.expect(gerr <= kGradientRelTol, "gradient mismatch");

    ToyComparatorNet net(ToyNetShape{}, 21);
    const auto tex = synthetic_toy_pool(PromptKind::texture, 256, 3, 22);
    const auto geo = synthetic_toy_pool(PromptKind::geometry, 256, 3, 23);
    const Eigen::MatrixXd wq = net.query().base, wv = net.value().base;
    const double t0 = net.mean_loss(tex), g0 = net.mean_loss(geo);
    ToyTrainOptions opt;
    opt.steps = 200;
    opt.seed = 24;
    toy_train(net, tex, geo, opt);
    const double t1 = net.mean_loss(tex), g1 = net.mean_loss(geo);
    o.detail << "texture " << t0 << "->" << t1 << " geometry " << g0 << "->" << g1 << " ";
    o.expect(t1 <= kLossRatio * t0 && g1 <= kLossRatio * g0, "loss not halved");
    o.expect(net.query().base == wq && net.value().base == wv, "W0 modified");
    for (const auto* l : {&net.query(), &net.value()}) {
        const auto sv = update_singular_values(*l);
        for (Eigen::Index i = static_cast<Eigen::Index>(l->rank()); i < sv.size(); ++i)
            o.expect(sv[i] < kRankSingularTol, "rank exceeds r");
    }
}

void metrics(Outcome& o) {
    const std::vector<double> gt{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<double> mono, rev, affine, sat;
    for (double g : gt) {
        mono.push_back(std::exp(g));
        rev.push_back(-g * g);
        affine.push_back(2.5 * g - 1.0);
        sat.push_back(std::tanh((g - 4.5) / 2.0));
    }
    o.expect(srocc(mono, gt).value == 1.0 && krocc(mono, gt).value == 1.0, "perfect monotone");
    o.expect(srocc(rev, gt).value == -1.0 && krocc(rev, gt).value == -1.0, "reversed");
    o.expect(std::abs(plcc_rmse(affine, gt, false).plcc - 1.0) <= 1e-12, "affine plcc");
    for (const auto* pred : {&mono, &rev, &affine, &sat}) {
        const auto raw = plcc_rmse(*pred, gt, false);
        const auto fit = plcc_rmse(*pred, gt, true);
        o.expect(fit.rmse <= raw.rmse + kFitTol, "fitted rmse above raw");
    }
}

void render(Outcome& o) {
    ViewConfig cfg;
    const auto ascii = parse_ply(kFixtures + "/cube_ascii.ply");
    const auto binary = parse_ply(kFixtures + "/cube_binary.ply");
    const auto a = render_views(normalize(ascii), cfg), b = render_views(normalize(ascii), cfg);
    const auto c = render_views(normalize(binary), cfg);
    for (std::size_t k = 0; k < a.size(); ++k) {
        o.expect(fnv1a(encode_ppm(a[k])) == fnv1a(encode_ppm(b[k])), "repeat render differs");
        o.expect(encode_ppm(a[k]) == encode_ppm(c[k]), "ascii and binary renders differ");
    }
    const auto n = normalize(ascii), nn = normalize(n);
    double gap = 0;
    for (std::size_t i = 0; i < n.size(); ++i)
        for (int d = 0; d < 3; ++d) gap = std::max(gap, std::abs(n.points[i][d] - nn.points[i][d]));
    o.expect(gap <= kIdempotenceTol, "normalize not idempotent");
}

void replay(Outcome& o) {
    ExperimentOptions opt;
    opt.oracle_noise = 0.5;
    const auto run = run_synthetic_experiment(opt, 3);
    const auto dir = oracle::scratch_dir("acceptance_replay");
    const auto path = (dir / "matrix.jsonl").string();
    io::write_file(path, matrix_to_replay_log(run.matrix));
    const auto log = ReplayComparator::load(path);
    std::vector<StimulusRef> tests;
    for (const auto& s : run.manifest.samples()) tests.push_back(StimulusRef::of(s));
    const auto matrix = build_probability_matrix(tests, run.anchors, log, run.matrix.prompt_kind());
    auto cfg = opt.scoring;
    cfg.model_noise = opt.oracle_noise;
    const auto table = score_dataset(matrix, run.anchors, cfg);
    o.expect(table.rows.size() == run.scores.rows.size(), "row count");
    std::size_t diffs = 0;
    for (std::size_t i = 0; i < std::min(table.rows.size(), run.scores.rows.size()); ++i)
        diffs += table.rows[i].score != run.scores.rows[i].score || table.rows[i].test_id != run.scores.rows[i].test_id;
    o.detail << "bit_differences=" << diffs << " ";
    o.expect(diffs == 0, "replayed scores differ");
}

}  // namespace

int main() {
    struct Entry {
        const char* name;
        double budget_s;
        Criterion run;
    };
    const Entry criteria[] = {
        {"quantization conformance", 0.001, quantization},
        {"mirror symmetry", 1.0, mirror},
        {"anchor brute-force equivalence", 5.0, anchors},
        {"oracle round-trip", 10.0, round_trip},
        {"noise monotonicity", 60.0, noise_monotonicity},
        {"alternation and cross-entropy", 1.0, schedule},
        {"LoRA toy suite", 30.0, lora},
        {"metrics closed forms", 1.0, metrics},
        {"render determinism", 5.0, render},
        {"replay fidelity", 5.0, replay},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.expect(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.expect(secs <= c.budget_s, "over time budget");
        std::printf("%s  %-32s %.3fs  %s\n", o.ok ? "PASS" : "FAIL", c.name, secs, o.detail.str().c_str());
        failed += !o.ok;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
    return failed == 0 ? 0 : 1;
}
