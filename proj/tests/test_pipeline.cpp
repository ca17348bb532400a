#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>

#include "mock_service.hpp"
#include "oracles.hpp"
#include "pcqa/io.hpp"
#include "pcqa/pipeline.hpp"
#include "pcqa/synthetic.hpp"

using namespace pcqa;
using namespace pcqa::pipeline;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = PCQA_FIXTURES;

PipelineConfig config(const fs::path& dir, json doc) {
    doc["output_dir"] = (dir / "out").string();
    return parse_config(doc, dir.string());
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = io::read_file(e.path().string());
    return files;
}

std::string synthetic_file(const fs::path& dir, std::size_t n, std::uint64_t seed) {
    SyntheticDatasetOptions opt;
    opt.count = n;
    const auto path = (dir / ("synthetic_" + std::to_string(n) + ".json")).string();
    save_manifest(synthetic_manifest(opt, seed), path);
    return path;
}

json read_json(const fs::path& p) { return json::parse(io::read_file(p.string())); }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PCQA_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config validation fails fast") {
    const auto dir = oracle::scratch_dir("pipe_config");
    CHECK_THROWS_AS(config(dir, {{"bogus", 1}}), ValidationError);
    CHECK_THROWS_AS(config(dir, {{"comparator", {{"kind", "magic"}}}}), ValidationError);
    CHECK_THROWS_AS(config(dir, {{"scoring", {{"grid_points", 1}}}}), ValidationError);
    CHECK_THROWS_AS(config(dir, {{"render", {{"view_count", 30}}}}), ValidationError);
    CHECK_THROWS_AS(config(dir, {{"seed", "seven"}}), ValidationError);
    const auto c = config(dir, {{"datasets", {{{"manifest", "missing.json"}}}}});
    CHECK_THROWS_AS(cmd_gen_pairs(c), ValidationError);
    CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("digest ignores the output directory and follows the seed") {
    const auto dir = oracle::scratch_dir("pipe_digest");
    const json doc{{"seed", 3}};
    const auto a = parse_config(doc, dir.string(), std::nullopt, std::string("x"));
    const auto b = parse_config(doc, dir.string(), std::nullopt, std::string("y"));
    const auto c = parse_config(doc, dir.string(), 4, std::string("x"));
    CHECK(a.digest() == b.digest());
    CHECK(a.digest() != c.digest());
    CHECK(c.seed == 4);
    CHECK(a.digest().size() == 16);
}

TEST_CASE("gen-pairs writes records and a level summary") {
    const auto dir = oracle::scratch_dir("pipe_pairs");
    const auto c = config(dir, {{"seed", 5}, {"datasets", {{{"manifest", kFixtures + "/tiny_manifest.json"}, {"n_k", 5}}}}});
    const auto r = cmd_gen_pairs(c);
    const auto records = read_records((dir / "out/records/tiny_geometry.jsonl").string());
    CHECK(records.size() == 5);
    for (std::size_t k = 0; k < records.size(); ++k) CHECK(records[k].id == "tiny/" + std::to_string(k));
    const auto summary = read_json(dir / "out/gen_pairs_summary.json");
    int total = 0;
    for (const auto& [_, n] : summary["datasets"][0]["level_counts"].items()) total += n.get<int>();
    CHECK(total == 5);
    CHECK(summary["provenance"]["seed"] == 5);
    const auto first = tree(dir / "out");
    cmd_gen_pairs(c);
    CHECK(tree(dir / "out") == first);
}

TEST_CASE("plan-schedule over generated records") {
    const auto dir = oracle::scratch_dir("pipe_schedule");
    const json datasets = {{{"manifest", kFixtures + "/tiny_images.json"}, {"n_k", 6}},
                           {{"manifest", kFixtures + "/tiny_manifest.json"}, {"n_k", 6}}};
    cmd_gen_pairs(config(dir, {{"datasets", datasets}}));
    const json sched{{"texture_records", {(dir / "out/records/tinyimg_texture.jsonl").string()}},
                     {"geometry_records", {(dir / "out/records/tiny_geometry.jsonl").string()}},
                     {"total_steps", 10},
                     {"batch_size", 3}};
    cmd_plan_schedule(config(dir, {{"schedule", sched}}));
    const auto steps = schedule_from_json(io::read_file((dir / "out/schedule.json").string()));
    REQUIRE(steps.size() == 10);
    int tex = 0;
    for (const auto& s : steps) {
        tex += s.pool == PromptKind::texture;
        for (const auto& id : s.record_ids) CHECK(id.rfind(s.pool == PromptKind::texture ? "tinyimg/" : "tiny/", 0) == 0);
    }
    CHECK(tex == 5);

    auto zero = sched;
    zero["total_steps"] = 0;
    cmd_plan_schedule(config(dir, {{"schedule", zero}}));
    CHECK(schedule_from_json(io::read_file((dir / "out/schedule.json").string())).empty());

    io::write_file((dir / "empty.jsonl").string(), "");
    auto empty = sched;
    empty["geometry_records"] = {(dir / "empty.jsonl").string()};
    try {
        cmd_plan_schedule(config(dir, {{"schedule", empty}}));
        FAIL("expected error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("geometry pool") != std::string::npos);
    }
}

TEST_CASE("build-anchors matches the exhaustive oracle") {
    const auto dir = oracle::scratch_dir("pipe_anchors");
    const auto manifest = synthetic_file(dir, 20, 8);
    cmd_build_anchors(config(dir, {{"anchors", {{"manifest", manifest}}}, {"beta", 5}}));
    const auto set = load_anchor_set((dir / "out/anchors.json").string());
    std::vector<std::string> ids;
    for (const auto& a : set.anchors) ids.push_back(a.id);
    CHECK(ids == oracle::anchors(load_manifest(manifest), 5));

    cmd_build_anchors(config(dir, {{"anchors", {{"manifest", manifest}}}, {"beta", 1}}));
    const auto one = load_anchor_set((dir / "out/anchors.json").string());
    REQUIRE(one.anchors.size() == 1);
    for (const auto& s : load_manifest(manifest).samples()) CHECK(s.std >= one.anchors[0].std);

    CHECK_THROWS_AS(cmd_build_anchors(config(dir, {{"anchors", {{"manifest", manifest}}}, {"beta", 21}})), ValidationError);
}

TEST_CASE("render-views isolates broken assets") {
    const auto dir = oracle::scratch_dir("pipe_render");
    const auto c = config(dir, {{"datasets", {{{"manifest", kFixtures + "/tiny_manifest.json"}}}},
                                {"render", {{"width", 64}, {"height", 64}}}});
    const auto r = cmd_render(c);
    const auto summary = read_json(dir / "out/views/render_summary.json");
    CHECK(summary["rendered"].size() == 2);
    REQUIRE(summary["failures"].size() == 1);
    CHECK(summary["failures"][0]["id"] == "c");
    for (int k = 0; k < 6; ++k) {
        const auto a = io::read_file((dir / ("out/views/a_view" + std::to_string(k) + ".ppm")).string());
        const auto b = io::read_file((dir / ("out/views/b_view" + std::to_string(k) + ".ppm")).string());
        CHECK(a == b);
    }
    const auto first = tree(dir / "out");
    cmd_render(c);
    CHECK(tree(dir / "out") == first);
}

TEST_CASE("evaluate: simulated, then replayed, then remote") {
    const auto dir = oracle::scratch_dir("pipe_evaluate");
    const auto manifest = synthetic_file(dir, 100, 21);
    const json base{{"seed", 2}, {"workers", 4}, {"evaluate", {{"test_manifest", manifest}}}};
    cmd_evaluate(config(dir, base));
    const auto metrics = read_json(dir / "out/metrics.json");
    CHECK(metrics["srocc"].get<double>() >= 0.99);
    const auto original = ScoreTable::from_csv(io::read_file((dir / "out/scores.csv").string()));
    CHECK(original.rows.size() == 100);
    fs::rename(dir / "out/matrix.jsonl", dir / "matrix.jsonl");

    auto replay = base;
    replay["comparator"] = {{"kind", "replay"}, {"replay_log", (dir / "matrix.jsonl").string()}};
    cmd_evaluate(config(dir, replay));
    const auto replayed = ScoreTable::from_csv(io::read_file((dir / "out/scores.csv").string()));
    REQUIRE(replayed.rows.size() == original.rows.size());
    for (std::size_t i = 0; i < original.rows.size(); ++i) CHECK(replayed.rows[i].score == original.rows[i].score);

    const auto truth = load_manifest(manifest);
    mock::Service svc([&](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        const auto& t = truth.at(body["test"]["id"].get<std::string>());
        const auto& a = truth.at(body["anchor"]["id"].get<std::string>());
        const auto p = simulated_compare({t.mos, t.std}, {a.mos, a.std}, {});
        json probs = json::array();
        for (double v : p.probs()) probs.push_back(v);
        res.set_content(json{{"probs", probs}, {"model", "mock"}}.dump(), "application/json");
    });
    auto remote = base;
    remote["comparator"] = {{"kind", "remote"}, {"endpoint", svc.endpoint()}};
    cmd_evaluate(config(dir, remote));
    const auto served = ScoreTable::from_csv(io::read_file((dir / "out/scores.csv").string()));
    REQUIRE(served.rows.size() == original.rows.size());
    for (std::size_t i = 0; i < original.rows.size(); ++i) CHECK(served.rows[i].score == original.rows[i].score);
    CHECK(svc.calls() == 100 * 5 - 5);
}

TEST_CASE("evaluate reports failed cells without aborting") {
    const auto dir = oracle::scratch_dir("pipe_partial");
    const auto manifest = synthetic_file(dir, 12, 5);
    mock::Service svc([](const httplib::Request& req, httplib::Response& res) {
        if (json::parse(req.body)["test"]["id"] == "s003") {
            res.status = 422;
            return;
        }
        mock::reply_probs(res, "[0.2,0.2,0.2,0.2,0.2]");
    });
    cmd_evaluate(config(dir, {{"evaluate", {{"test_manifest", manifest}}},
                              {"comparator", {{"kind", "remote"}, {"endpoint", svc.endpoint()}}}}));
    const auto summary = read_json(dir / "out/evaluate_summary.json");
    CHECK(summary["partial"] == true);
    CHECK(summary["scored"] == 11);
    CHECK(summary["omitted"][0]["test_id"] == "s003");
}

TEST_CASE("metrics over a score file") {
    const auto dir = oracle::scratch_dir("pipe_metrics");
    const auto manifest = synthetic_file(dir, 30, 6);
    cmd_evaluate(config(dir, {{"evaluate", {{"test_manifest", manifest}}}}));
    fs::rename(dir / "out/scores.csv", dir / "scores.csv");
    cmd_metrics(config(dir, {{"evaluate", {{"test_manifest", manifest}}}, {"metrics", {{"scores", "scores.csv"}}}}));
    const auto csv = io::read_file((dir / "out/metrics.csv").string());
    CHECK(csv.find("n,srocc,plcc_raw,plcc_fitted,krocc,rmse_raw,rmse_fitted\n30,") != std::string::npos);
    CHECK(read_json(dir / "out/metrics.json")["n"] == 30);
}

TEST_CASE("simulate: fast, complete and reproducible") {
    const auto dir = oracle::scratch_dir("pipe_simulate");
    const auto c = config(dir, {{"seed", 13}});
    const auto t0 = std::chrono::steady_clock::now();
    cmd_simulate(c);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(seconds < 10.0);
    for (const char* f : {"manifest.json", "anchors.json", "matrix.jsonl", "scores.csv", "metrics.json", "sweep.csv",
                          "simulate_summary.json"})
        CHECK(fs::exists(dir / "out/simulate" / f));
    const auto summary = read_json(dir / "out/simulate/simulate_summary.json");
    CHECK(summary["sweep_monotone_nonincreasing"] == true);
    CHECK(summary["metrics"]["srocc"].get<double>() >= 0.99);
    CHECK(summary["provenance"]["seed"] == 13);
    CHECK(io::read_file((dir / "out/simulate/scores.csv").string()).rfind("# seed=13", 0) == 0);
    const auto first = tree(dir / "out");
    cmd_simulate(c);
    CHECK(tree(dir / "out") == first);
}

TEST_CASE("cli exit codes") {
    const auto dir = oracle::scratch_dir("pipe_cli");
    const auto cfg = (dir / "config.json").string();
    io::write_file(cfg, json{{"datasets", {{{"manifest", kFixtures + "/tiny_manifest.json"}, {"n_k", 4}}}}}.dump());
    CHECK(run_cli("gen-pairs --config " + cfg + " --out " + (dir / "out").string() + " --seed 3") == 0);
    CHECK(read_records((dir / "out/records/tiny_geometry.jsonl").string()).size() == 4);
    CHECK(read_json(dir / "out/gen_pairs_summary.json")["provenance"]["seed"] == 3);
    CHECK(run_cli("gen-pairs --config " + (dir / "missing.json").string()) == 1);
    CHECK(run_cli("no-such-command") == 1);

    const auto bad = (dir / "bad.json").string();
    io::write_file(bad, json{{"beta", 2}, {"evaluate", {{"test_manifest", kFixtures + "/tiny_manifest.json"}}},
                             {"comparator", {{"kind", "remote"}, {"endpoint", "http://127.0.0.1:1"}, {"timeout_ms", 200}}}}
                            .dump());
    CHECK(run_cli("evaluate --config " + bad + " --out " + (dir / "out2").string()) == 2);
}
