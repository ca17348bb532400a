#include "pcqa/pipeline.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <thread>

#include "pcqa/anchors.hpp"
#include "pcqa/io.hpp"
#include "pcqa/metrics.hpp"
#include "pcqa/pairgen.hpp"
#include "pcqa/random.hpp"
#include "pcqa/schedule.hpp"
#include "pcqa/synthetic.hpp"

namespace pcqa::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

std::string resolve(const std::string& base_dir, const std::string& p) {
    if (p.empty()) return p;
    const fs::path path(p);
    if (path.is_absolute() || base_dir.empty()) return p;
    return (fs::path(base_dir) / path).lexically_normal().string();
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ValidationError("unknown config key '" + where + (where.empty() ? "" : ".") + key + "'");
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
    if (!obj.contains(key) || obj[key].is_null()) return fallback;
    try {
        return obj[key].get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config key '" + where + key + "' has the wrong type");
    }
}

SimulationMode parse_mode(const std::string& s) {
    if (s == "soft") return SimulationMode::soft;
    if (s == "hard") return SimulationMode::hard;
    throw ValidationError("comparator mode must be 'soft' or 'hard', got '" + s + "'");
}

std::string_view mode_name(SimulationMode m) { return m == SimulationMode::soft ? "soft" : "hard"; }

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw ValidationError(what + " is not configured");
    if (!fs::is_regular_file(path)) throw ValidationError(what + " does not exist: " + path);
}

std::string out_path(const PipelineConfig& c, const std::string& rel) { return (fs::path(c.output_dir) / rel).string(); }

ojson provenance_json(const PipelineConfig& c) { return {{"seed", c.seed}, {"config_digest", c.digest()}}; }

void write_json(const std::string& path, const ojson& doc, CommandResult& result) {
    io::write_file(path, doc.dump(2) + "\n");
    result.written.push_back(path);
}

DatasetManifest load_manifest_checked(const std::string& path) {
    try {
        return load_manifest(path);
    } catch (const InvalidInput& e) {
        throw ValidationError(e.what());
    } catch (const IoError& e) {
        throw ValidationError(e.what());
    }
}

std::string score_csv_with_header(const ScoreTable& table, const PipelineConfig& c) {
    return "# seed=" + std::to_string(c.seed) + " config_digest=" + c.digest() + "\n" + table.to_csv();
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
    const std::size_t threads = std::max<std::size_t>(1, std::min(workers, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
}

}  // namespace

std::string PipelineConfig::digest() const {
    json canonical = effective;
    canonical.erase("output_dir");
    const std::string text = canonical.dump();
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < 8 && i < len; ++i) {
        std::snprintf(buf, sizeof(buf), "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

PipelineConfig parse_config(const json& doc, const std::string& base_dir, std::optional<std::uint64_t> seed_override,
                            std::optional<std::string> output_override) {
    reject_unknown(doc,
                   {"seed", "output_dir", "workers", "datasets", "beta", "anchors", "schedule", "comparator",
                    "scoring", "render", "evaluate", "metrics", "simulate"},
                   "");
    PipelineConfig c;
    c.seed = seed_override.value_or(get_or<std::uint64_t>(doc, "seed", 0, ""));
    c.output_dir = output_override.value_or(get_or<std::string>(doc, "output_dir", "out", ""));
    if (!output_override) c.output_dir = resolve(base_dir, c.output_dir);
    c.workers = get_or<std::size_t>(doc, "workers", 1, "");
    c.beta = get_or<std::size_t>(doc, "beta", kDefaultBeta, "");
    if (c.beta < 1) throw ValidationError("beta must be >= 1");

    json eff;
    eff["seed"] = c.seed;
    eff["output_dir"] = c.output_dir;
    eff["workers"] = c.workers;
    eff["beta"] = c.beta;

    eff["datasets"] = json::array();
    if (doc.contains("datasets")) {
        if (!doc["datasets"].is_array()) throw ValidationError("'datasets' must be an array");
        for (const auto& d : doc["datasets"]) {
            reject_unknown(d, {"manifest", "n_k", "balance_levels"}, "datasets[]");
            DatasetEntry e;
            e.manifest = get_or<std::string>(d, "manifest", "", "datasets[].");
            e.n_k = get_or<std::size_t>(d, "n_k", 100, "datasets[].");
            e.balance_levels = get_or<bool>(d, "balance_levels", false, "datasets[].");
            if (e.manifest.empty()) throw ValidationError("datasets[] entry lacks 'manifest'");
            eff["datasets"].push_back({{"manifest", e.manifest}, {"n_k", e.n_k}, {"balance_levels", e.balance_levels}});
            e.manifest = resolve(base_dir, e.manifest);
            c.datasets.push_back(std::move(e));
        }
    }

    const json anchors = doc.value("anchors", json::object());
    reject_unknown(anchors, {"manifest", "file"}, "anchors");
    c.anchor_manifest = get_or<std::string>(anchors, "manifest", "", "anchors.");
    c.anchor_file = get_or<std::string>(anchors, "file", "", "anchors.");
    eff["anchors"] = {{"manifest", c.anchor_manifest}, {"file", c.anchor_file}};
    c.anchor_manifest = resolve(base_dir, c.anchor_manifest);
    c.anchor_file = resolve(base_dir, c.anchor_file);

    const json sched = doc.value("schedule", json::object());
    reject_unknown(sched, {"texture_records", "geometry_records", "total_steps", "batch_size"}, "schedule");
    c.schedule.texture_records = get_or<std::vector<std::string>>(sched, "texture_records", {}, "schedule.");
    c.schedule.geometry_records = get_or<std::vector<std::string>>(sched, "geometry_records", {}, "schedule.");
    c.schedule.total_steps = get_or<std::size_t>(sched, "total_steps", 0, "schedule.");
    c.schedule.batch_size = get_or<std::size_t>(sched, "batch_size", 8, "schedule.");
    eff["schedule"] = {{"texture_records", c.schedule.texture_records},
                       {"geometry_records", c.schedule.geometry_records},
                       {"total_steps", c.schedule.total_steps},
                       {"batch_size", c.schedule.batch_size}};
    for (auto& p : c.schedule.texture_records) p = resolve(base_dir, p);
    for (auto& p : c.schedule.geometry_records) p = resolve(base_dir, p);

    const json comp = doc.value("comparator", json::object());
    reject_unknown(comp, {"kind", "noise_scale", "mode", "replay_log", "endpoint", "timeout_ms", "inline_media"},
                   "comparator");
    c.comparator.kind = get_or<std::string>(comp, "kind", "simulated", "comparator.");
    if (c.comparator.kind != "simulated" && c.comparator.kind != "replay" && c.comparator.kind != "remote")
        throw ValidationError("comparator.kind must be simulated, replay or remote");
    c.comparator.noise_scale = get_or<double>(comp, "noise_scale", 0.0, "comparator.");
    if (!(c.comparator.noise_scale >= 0.0)) throw ValidationError("comparator.noise_scale must be >= 0");
    c.comparator.mode = parse_mode(get_or<std::string>(comp, "mode", "soft", "comparator."));
    c.comparator.replay_log = get_or<std::string>(comp, "replay_log", "", "comparator.");
    c.comparator.endpoint = get_or<std::string>(comp, "endpoint", "", "comparator.");
    c.comparator.timeout_ms = get_or<std::size_t>(comp, "timeout_ms", 5000, "comparator.");
    c.comparator.inline_media = get_or<bool>(comp, "inline_media", false, "comparator.");
    eff["comparator"] = {{"kind", c.comparator.kind},
                         {"noise_scale", c.comparator.noise_scale},
                         {"mode", mode_name(c.comparator.mode)},
                         {"replay_log", c.comparator.replay_log},
                         {"endpoint", c.comparator.endpoint},
                         {"timeout_ms", c.comparator.timeout_ms},
                         {"inline_media", c.comparator.inline_media}};
    c.comparator.replay_log = resolve(base_dir, c.comparator.replay_log);

    const json sc = doc.value("scoring", json::object());
    reject_unknown(sc, {"model_noise", "test_std", "search_margin", "grid_points", "refine_tolerance"}, "scoring");
    c.scoring.model_noise = get_or<double>(sc, "model_noise", c.scoring.model_noise, "scoring.");
    if (sc.contains("test_std") && !sc["test_std"].is_null()) c.scoring.test_std = get_or<double>(sc, "test_std", 0.0, "scoring.");
    c.scoring.search_margin = get_or<double>(sc, "search_margin", c.scoring.search_margin, "scoring.");
    c.scoring.grid_points = get_or<std::size_t>(sc, "grid_points", c.scoring.grid_points, "scoring.");
    c.scoring.refine_tolerance = get_or<double>(sc, "refine_tolerance", c.scoring.refine_tolerance, "scoring.");
    try {
        c.scoring.validate();
    } catch (const InvalidInput& e) {
        throw ValidationError(std::string("scoring: ") + e.what());
    }
    eff["scoring"] = {{"model_noise", c.scoring.model_noise},
                      {"test_std", c.scoring.test_std ? json(*c.scoring.test_std) : json(nullptr)},
                      {"search_margin", c.scoring.search_margin},
                      {"grid_points", c.scoring.grid_points},
                      {"refine_tolerance", c.scoring.refine_tolerance}};

    const json rd = doc.value("render", json::object());
    reject_unknown(rd, {"view_count", "width", "height", "splat_radius", "background"}, "render");
    c.render.view_count = get_or<std::size_t>(rd, "view_count", c.render.view_count, "render.");
    c.render.width = get_or<std::size_t>(rd, "width", c.render.width, "render.");
    c.render.height = get_or<std::size_t>(rd, "height", c.render.height, "render.");
    c.render.splat_radius = get_or<std::size_t>(rd, "splat_radius", c.render.splat_radius, "render.");
    const auto bg = get_or<unsigned>(rd, "background", c.render.background, "render.");
    if (bg > 255) throw ValidationError("render.background must be in [0, 255]");
    c.render.background = static_cast<std::uint8_t>(bg);
    try {
        c.render.validate();
    } catch (const InvalidInput& e) {
        throw ValidationError(std::string("render: ") + e.what());
    }
    eff["render"] = {{"view_count", c.render.view_count},
                     {"width", c.render.width},
                     {"height", c.render.height},
                     {"splat_radius", c.render.splat_radius},
                     {"background", bg}};

    const json ev = doc.value("evaluate", json::object());
    reject_unknown(ev, {"test_manifest", "prompt_kind"}, "evaluate");
    c.test_manifest = get_or<std::string>(ev, "test_manifest", "", "evaluate.");
    const auto pk = get_or<std::string>(ev, "prompt_kind", "", "evaluate.");
    if (!pk.empty()) {
        try {
            c.prompt_kind = parse_prompt_kind(pk);
        } catch (const InvalidInput& e) {
            throw ValidationError(e.what());
        }
    }
    eff["evaluate"] = {{"test_manifest", c.test_manifest}, {"prompt_kind", pk}};
    c.test_manifest = resolve(base_dir, c.test_manifest);

    const json mt = doc.value("metrics", json::object());
    reject_unknown(mt, {"scores"}, "metrics");
    c.scores_file = get_or<std::string>(mt, "scores", "", "metrics.");
    eff["metrics"] = {{"scores", c.scores_file}};
    c.scores_file = resolve(base_dir, c.scores_file);

    const json sim = doc.value("simulate", json::object());
    reject_unknown(sim, {"n", "score_range", "std_range", "noise_levels", "sweep_seeds", "sweep_mode"}, "simulate");
    c.simulate.n = get_or<std::size_t>(sim, "n", c.simulate.n, "simulate.");
    const auto range = get_or<std::vector<double>>(sim, "score_range", {c.simulate.score_range.min, c.simulate.score_range.max}, "simulate.");
    const auto stds = get_or<std::vector<double>>(sim, "std_range", {c.simulate.std_min, c.simulate.std_max}, "simulate.");
    if (range.size() != 2 || !(range[0] < range[1])) throw ValidationError("simulate.score_range must be [min, max]");
    if (stds.size() != 2 || !(stds[0] >= 0.0) || !(stds[0] <= stds[1]))
        throw ValidationError("simulate.std_range must be [min, max] with 0 <= min <= max");
    c.simulate.score_range = {range[0], range[1]};
    c.simulate.std_min = stds[0];
    c.simulate.std_max = stds[1];
    c.simulate.noise_levels = get_or<std::vector<double>>(sim, "noise_levels", c.simulate.noise_levels, "simulate.");
    for (double s : c.simulate.noise_levels)
        if (!(s >= 0.0)) throw ValidationError("simulate.noise_levels must be >= 0");
    c.simulate.sweep_seeds = get_or<std::size_t>(sim, "sweep_seeds", c.simulate.sweep_seeds, "simulate.");
    c.simulate.sweep_mode = parse_mode(get_or<std::string>(sim, "sweep_mode", "hard", "simulate."));
    eff["simulate"] = {{"n", c.simulate.n},
                       {"score_range", range},
                       {"std_range", stds},
                       {"noise_levels", c.simulate.noise_levels},
                       {"sweep_seeds", c.simulate.sweep_seeds},
                       {"sweep_mode", mode_name(c.simulate.sweep_mode)}};
    c.effective = std::move(eff);
    return c;
}

PipelineConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override,
                           std::optional<std::string> output_override) {
    if (!fs::is_regular_file(path)) throw ValidationError("config file does not exist: " + path);
    json doc;
    try {
        doc = json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw ValidationError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(doc, fs::path(path).parent_path().string(), seed_override, std::move(output_override));
}

// ---------------------------------------------------------------------------

CommandResult cmd_gen_pairs(const PipelineConfig& c) {
    if (c.datasets.empty()) throw ValidationError("gen-pairs: no datasets configured");
    std::vector<DatasetManifest> manifests;
    for (const auto& d : c.datasets) {
        require_file(d.manifest, "dataset manifest");
        manifests.push_back(load_manifest_checked(d.manifest));
        const auto& m = manifests.back();
        if (m.size() < 2) throw ValidationError("dataset '" + m.name() + "' has fewer than 2 samples");
        for (const auto& s : m.samples())
            if (s.modality != m.samples().front().modality)
                throw ValidationError("dataset '" + m.name() + "' mixes modalities");
        if (d.n_k < 1) throw ValidationError("dataset '" + m.name() + "': n_k must be >= 1");
    }

    CommandResult result;
    ojson summary;
    summary["provenance"] = provenance_json(c);
    summary["datasets"] = ojson::array();
    for (std::size_t i = 0; i < manifests.size(); ++i) {
        const auto& m = manifests[i];
        const auto& d = c.datasets[i];
        PairSamplingOptions opts;
        opts.balance_levels = d.balance_levels;
        const auto pairs = sample_pairs(m, d.n_k, mix_seed(c.seed, "pairs:" + m.name()), opts);
        std::vector<InstructionRecord> records;
        std::map<std::string, std::size_t> counts;
        for (auto l : kAllLevels) counts[std::string(level_name(l))] = 0;
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            auto r = render_instruction(pairs[k], m);
            r.id = m.name() + "/" + std::to_string(k);
            ++counts[std::string(level_name(r.level))];
            records.push_back(std::move(r));
        }
        const auto kind = prompt_kind_for(m.samples().front().modality);
        const std::string file = out_path(c, "records/" + m.name() + "_" + std::string(prompt_kind_name(kind)) + ".jsonl");
        export_records(records, file);
        result.written.push_back(file);
        ojson level_counts;
        for (auto l : kAllLevels) level_counts[std::string(level_name(l))] = counts[std::string(level_name(l))];
        summary["datasets"].push_back({{"dataset", m.name()},
                                       {"prompt_kind", prompt_kind_name(kind)},
                                       {"file", fs::path(file).filename().string()},
                                       {"pairs", records.size()},
                                       {"level_counts", level_counts}});
    }
    write_json(out_path(c, "gen_pairs_summary.json"), summary, result);
    result.summary = std::move(summary);
    return result;
}

CommandResult cmd_plan_schedule(const PipelineConfig& c) {
    const auto& s = c.schedule;
    for (const auto& p : s.texture_records) require_file(p, "texture record file");
    for (const auto& p : s.geometry_records) require_file(p, "geometry record file");
    auto collect = [](const std::vector<std::string>& files) {
        std::vector<std::string> ids;
        for (const auto& f : files)
            for (const auto& r : read_records(f)) ids.push_back(r.id);
        return ids;
    };
    std::vector<std::string> texture, geometry;
    try {
        texture = collect(s.texture_records);
        geometry = collect(s.geometry_records);
    } catch (const InvalidInput& e) {
        throw ValidationError(e.what());
    }
    if (texture.empty()) throw ValidationError("plan-schedule: texture pool is empty");
    if (geometry.empty()) throw ValidationError("plan-schedule: geometry pool is empty");
    if (s.batch_size < 1) throw ValidationError("plan-schedule: batch_size must be >= 1");

    const auto steps = plan_schedule(texture, geometry, s.total_steps, s.batch_size, mix_seed(c.seed, "schedule"));
    CommandResult result;
    const std::string file = out_path(c, "schedule.json");
    io::write_file(file, schedule_to_json(steps, c.provenance()));
    result.written.push_back(file);
    std::size_t tex = 0;
    for (const auto& st : steps) tex += st.pool == PromptKind::texture ? 1 : 0;
    result.summary = {{"steps", steps.size()}, {"texture_steps", tex}, {"geometry_steps", steps.size() - tex}};
    return result;
}

CommandResult cmd_build_anchors(const PipelineConfig& c) {
    const std::string src = !c.anchor_manifest.empty() ? c.anchor_manifest : c.test_manifest;
    require_file(src, "anchor manifest");
    const auto manifest = load_manifest_checked(src);
    if (manifest.size() < c.beta)
        throw ValidationError("build-anchors: beta=" + std::to_string(c.beta) + " exceeds the " +
                              std::to_string(manifest.size()) + " samples of '" + manifest.name() + "'");
    const auto set = build_anchor_set(manifest, c.beta);
    CommandResult result;
    const std::string file = out_path(c, "anchors.json");
    io::write_file(file, anchor_set_to_json(set, c.provenance()));
    result.written.push_back(file);
    ojson ids = ojson::array();
    for (const auto& a : set.anchors) ids.push_back(a.id);
    result.summary = {{"beta", set.beta}, {"partition_rule", partition_rule_name(set.rule)}, {"anchors", ids}};
    return result;
}

CommandResult cmd_render(const PipelineConfig& c) {
    struct Job {
        std::string id;
        std::string ply;
    };
    std::vector<std::string> manifest_paths;
    for (const auto& d : c.datasets) manifest_paths.push_back(d.manifest);
    if (!c.test_manifest.empty()) manifest_paths.push_back(c.test_manifest);
    if (manifest_paths.empty()) throw ValidationError("render-views: no manifests configured");
    std::vector<Job> jobs;
    std::map<std::string, bool> seen;
    for (const auto& p : manifest_paths) {
        require_file(p, "manifest");
        const auto m = load_manifest_checked(p);
        const auto dir = fs::path(p).parent_path().string();
        for (const auto& s : m.samples()) {
            if (s.modality != Modality::pointcloud || seen[s.id]) continue;
            seen[s.id] = true;
            jobs.push_back({s.id, s.asset_refs.empty() ? std::string{} : resolve(dir, s.asset_refs.front())});
        }
    }

    std::vector<std::vector<std::string>> files(jobs.size());
    std::vector<std::string> errors(jobs.size());
    parallel_for(jobs.size(), c.workers, [&](std::size_t i) {
        const auto& job = jobs[i];
        try {
            if (job.ply.empty()) throw InvalidInput("sample has no point cloud asset");
            const auto cloud = normalize(parse_ply(job.ply));
            const auto views = render_views(cloud, c.render);
            for (std::size_t k = 0; k < views.size(); ++k) {
                const std::string f = out_path(c, "views/" + job.id + "_view" + std::to_string(k) + ".ppm");
                write_image(views[k], f);
                files[i].push_back(f);
            }
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    CommandResult result;
    ojson summary;
    summary["provenance"] = provenance_json(c);
    summary["view_config"] = c.effective["render"];
    ojson views = ojson::array();
    for (const auto& v : view_presets()) views.push_back(v.name);
    summary["view_presets"] = views;
    summary["rendered"] = ojson::array();
    summary["failures"] = ojson::array();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (errors[i].empty()) {
            ojson names = ojson::array();
            for (const auto& f : files[i]) names.push_back(fs::path(f).filename().string());
            summary["rendered"].push_back({{"id", jobs[i].id}, {"files", names}});
            result.written.insert(result.written.end(), files[i].begin(), files[i].end());
        } else {
            summary["failures"].push_back({{"id", jobs[i].id}, {"error", errors[i]}});
        }
    }
    write_json(out_path(c, "views/render_summary.json"), summary, result);
    result.summary = std::move(summary);
    return result;
}

namespace {

std::unique_ptr<Comparator> make_comparator(const PipelineConfig& c, const DatasetManifest& tests,
                                            const AnchorSet& anchors) {
    const auto& s = c.comparator;
    if (s.kind == "simulated") {
        std::unordered_map<std::string, TruthScore> truth;
        for (const auto& a : anchors.anchors) truth[a.id] = {a.mos, a.std};
        for (const auto& t : tests.samples()) truth[t.id] = {t.mos, t.std};
        return std::make_unique<SimulatedComparator>(
            SimulatedComparatorConfig{s.noise_scale, s.mode, mix_seed(c.seed, "oracle")}, std::move(truth));
    }
    if (s.kind == "replay") return std::make_unique<ReplayComparator>(ReplayComparator::load(s.replay_log));
    return std::make_unique<RemoteComparator>(
        RemoteComparatorConfig{s.endpoint, std::chrono::milliseconds(s.timeout_ms), s.inline_media});
}

}  // namespace

CommandResult cmd_evaluate(const PipelineConfig& c) {
    require_file(c.test_manifest, "evaluate.test_manifest");
    if (c.comparator.kind == "replay") require_file(c.comparator.replay_log, "comparator.replay_log");
    if (c.comparator.kind == "remote" && c.comparator.endpoint.empty())
        throw ValidationError("comparator.endpoint is not configured");
    const auto tests = load_manifest_checked(c.test_manifest);
    if (tests.size() == 0) throw ValidationError("evaluate: test manifest is empty");

    AnchorSet anchors;
    if (!c.anchor_file.empty()) {
        require_file(c.anchor_file, "anchors.file");
        try {
            anchors = load_anchor_set(c.anchor_file);
        } catch (const InvalidInput& e) {
            throw ValidationError(e.what());
        }
    } else {
        const std::string src = c.anchor_manifest.empty() ? c.test_manifest : c.anchor_manifest;
        require_file(src, "anchor manifest");
        const auto m = load_manifest_checked(src);
        if (m.size() < c.beta) throw ValidationError("evaluate: beta exceeds anchor manifest size");
        anchors = build_anchor_set(m, c.beta);
    }
    if (anchors.anchors.empty()) throw ValidationError("evaluate: empty anchor set");
    std::unique_ptr<Comparator> comparator;
    try {
        comparator = make_comparator(c, tests, anchors);
    } catch (const InvalidInput& e) {
        throw ValidationError(e.what());
    }

    const PromptKind kind = c.prompt_kind.value_or(prompt_kind_for(tests.samples().front().modality));
    std::vector<StimulusRef> refs;
    for (const auto& s : tests.samples()) refs.push_back(StimulusRef::of(s));
    const auto matrix = build_probability_matrix(refs, anchors, *comparator, kind, c.workers);
    auto table = score_dataset(matrix, anchors, c.scoring);
    table.config_digest = c.digest();

    CommandResult result;
    const std::string matrix_file = out_path(c, "matrix.jsonl");
    io::write_file(matrix_file, matrix_to_replay_log(matrix));
    result.written.push_back(matrix_file);
    const std::string score_file = out_path(c, "scores.csv");
    io::write_file(score_file, score_csv_with_header(table, c));
    result.written.push_back(score_file);

    ojson summary;
    summary["provenance"] = provenance_json(c);
    summary["comparator"] = comparator->name();
    summary["prompt_kind"] = prompt_kind_name(kind);
    summary["tests"] = tests.size();
    summary["anchors"] = anchors.anchors.size();
    summary["scored"] = table.rows.size();
    summary["partial"] = matrix.partial();
    summary["failures"] = ojson::array();
    for (const auto& f : matrix.failures())
        summary["failures"].push_back({{"test_id", f.test_id}, {"anchor_id", f.anchor_id}, {"error", f.message}});
    summary["omitted"] = ojson::array();
    for (const auto& [id, why] : table.omitted) summary["omitted"].push_back({{"test_id", id}, {"reason", why}});
    if (table.rows.size() >= 2) {
        const auto [pred, gt] = align_scores(table, tests);
        const auto report = compute_metrics(pred, gt);
        ojson m = ojson::parse(report.to_json());
        m["provenance"] = provenance_json(c);
        write_json(out_path(c, "metrics.json"), m, result);
        summary["metrics"] = ojson::parse(report.to_json());
    }
    write_json(out_path(c, "evaluate_summary.json"), summary, result);
    result.summary = std::move(summary);
    return result;
}

CommandResult cmd_metrics(const PipelineConfig& c) {
    require_file(c.scores_file, "metrics.scores");
    require_file(c.test_manifest, "evaluate.test_manifest");
    const auto manifest = load_manifest_checked(c.test_manifest);
    ScoreTable table;
    try {
        table = ScoreTable::from_csv(io::read_file(c.scores_file));
        for (const auto& r : table.rows) manifest.at(r.test_id);
    } catch (const InvalidInput& e) {
        throw ValidationError(e.what());
    }
    if (table.rows.size() < 2) throw ValidationError("metrics: need at least 2 scored samples");
    const auto [pred, gt] = align_scores(table, manifest);
    const auto report = compute_metrics(pred, gt);
    CommandResult result;
    ojson m = ojson::parse(report.to_json());
    m["provenance"] = provenance_json(c);
    write_json(out_path(c, "metrics.json"), m, result);
    const std::string csv = out_path(c, "metrics.csv");
    io::write_file(csv, "# seed=" + std::to_string(c.seed) + " config_digest=" + c.digest() + "\n" +
                            MetricReport::csv_header() + "\n" + report.to_csv_row() + "\n");
    result.written.push_back(csv);
    result.summary = ojson::parse(report.to_json());
    return result;
}

CommandResult cmd_simulate(const PipelineConfig& c) {
    if (c.simulate.n < c.beta) throw ValidationError("simulate: n must be >= beta");
    const auto& sim = c.simulate;
    ExperimentOptions base;
    base.dataset.count = sim.n;
    base.dataset.range = sim.score_range;
    base.dataset.std_min = sim.std_min;
    base.dataset.std_max = sim.std_max;
    base.beta = c.beta;
    base.scoring = c.scoring;
    base.workers = c.workers;

    ExperimentOptions main = base;
    main.oracle_noise = c.comparator.noise_scale;
    main.mode = c.comparator.mode;
    const auto primary = run_synthetic_experiment(main, c.seed);

    CommandResult result;
    const std::string dir = "simulate/";
    save_manifest(primary.manifest, out_path(c, dir + "manifest.json"));
    result.written.push_back(out_path(c, dir + "manifest.json"));
    io::write_file(out_path(c, dir + "anchors.json"), anchor_set_to_json(primary.anchors, c.provenance()));
    result.written.push_back(out_path(c, dir + "anchors.json"));
    io::write_file(out_path(c, dir + "matrix.jsonl"), matrix_to_replay_log(primary.matrix));
    result.written.push_back(out_path(c, dir + "matrix.jsonl"));
    ScoreTable table = primary.scores;
    table.config_digest = c.digest();
    io::write_file(out_path(c, dir + "scores.csv"), score_csv_with_header(table, c));
    result.written.push_back(out_path(c, dir + "scores.csv"));
    ojson metrics = ojson::parse(primary.metrics.to_json());
    metrics["provenance"] = provenance_json(c);
    write_json(out_path(c, dir + "metrics.json"), metrics, result);

    std::string sweep_csv = "# seed=" + std::to_string(c.seed) + " config_digest=" + c.digest() + "\n" +
                            "noise,seed_index," + MetricReport::csv_header() + "\n";
    ojson means = ojson::array();
    std::vector<double> mean_srocc;
    for (double noise : sim.noise_levels) {
        double total = 0.0;
        for (std::size_t k = 0; k < sim.sweep_seeds; ++k) {
            ExperimentOptions opt = base;
            opt.oracle_noise = noise;
            opt.mode = sim.sweep_mode;
            const auto r = run_synthetic_experiment(opt, mix_seed(c.seed, "sweep:" + std::to_string(k)));
            total += r.metrics.srocc;
            sweep_csv += io::format_double(noise) + "," + std::to_string(k) + "," + r.metrics.to_csv_row() + "\n";
        }
        const double mean = sim.sweep_seeds ? total / static_cast<double>(sim.sweep_seeds) : 0.0;
        mean_srocc.push_back(mean);
        means.push_back({{"noise", noise}, {"mean_srocc", mean}});
    }
    io::write_file(out_path(c, dir + "sweep.csv"), sweep_csv);
    result.written.push_back(out_path(c, dir + "sweep.csv"));
    bool monotone = true;
    for (std::size_t i = 1; i < mean_srocc.size(); ++i) monotone = monotone && mean_srocc[i] <= mean_srocc[i - 1];

    ojson summary;
    summary["provenance"] = provenance_json(c);
    summary["n"] = sim.n;
    summary["beta"] = c.beta;
    summary["partition_rule"] = partition_rule_name(primary.anchors.rule);
    summary["oracle_noise"] = c.comparator.noise_scale;
    summary["metrics"] = ojson::parse(primary.metrics.to_json());
    summary["sweep"] = means;
    summary["sweep_mode"] = mode_name(sim.sweep_mode);
    summary["sweep_monotone_nonincreasing"] = monotone;
    write_json(out_path(c, dir + "simulate_summary.json"), summary, result);
    result.summary = std::move(summary);
    return result;
}

}  // namespace pcqa::pipeline
