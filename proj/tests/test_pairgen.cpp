#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "oracles.hpp"
#include "pcqa/io.hpp"
#include "pcqa/pairgen.hpp"

using namespace pcqa;

namespace {

DatasetManifest two_pc() {
    return DatasetManifest("pc", {0, 10},
                           {{"hi", Modality::pointcloud, {"hi.ply"}, 9.0, 0.5, "pc"},
                            {"lo", Modality::pointcloud, {"lo.ply"}, 3.0, 0.5, "pc"}});
}

DatasetManifest spread(std::size_t n, Modality modality) {
    std::vector<RatedSample> s;
    for (std::size_t i = 0; i < n; ++i)
        s.push_back({"s" + std::to_string(i), modality, {"a" + std::to_string(i)}, 10.0 * i / (n - 1), 0.4, "sp"});
    return DatasetManifest("sp", {0, 10}, s);
}

}  // namespace

TEST_CASE("two-sample manifest only yields its two orderings") {
    const auto m = two_pc();
    const auto pairs = sample_pairs(m, 4, 3);
    CHECK(pairs.size() == 4);
    for (const auto& p : pairs) CHECK(p.first != p.second);
}

TEST_CASE("hand-labelled pair") {
    const auto m = two_pc();
    const auto p = label_pair(m.at("hi"), m.at("lo"));
    CHECK(p.level == QualityLevel::inferior);
    CHECK(p.z == doctest::Approx(8.485281374238571));
}

TEST_CASE("sampling is deterministic and rejects tiny manifests") {
    const auto m = spread(10, Modality::image);
    CHECK(sample_pairs(m, 50, 9) == sample_pairs(m, 50, 9));
    CHECK(sample_pairs(m, 50, 9) != sample_pairs(m, 50, 10));
    const DatasetManifest one("one", {0, 1}, {{"x", Modality::image, {}, 0.5, 0.1, "one"}});
    CHECK_THROWS_AS(sample_pairs(one, 3, 1), InsufficientData);
    CHECK_THROWS_AS(sample_pairs(m, 0, 1), InvalidInput);
}

TEST_CASE("uniform sampling covers all ordered pairs") {
    const auto m = spread(4, Modality::image);
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& p : sample_pairs(m, 2000, 1)) seen.insert({p.first, p.second});
    CHECK(seen.size() == 12);
}

TEST_CASE("balanced sampling spreads levels") {
    const auto m = spread(30, Modality::image);
    PairSamplingOptions opt;
    opt.balance_levels = true;
    const auto pairs = sample_pairs(m, 500, 4, opt);
    std::array<int, 5> counts{};
    for (const auto& p : pairs) ++counts[level_index(p.level)];
    for (int c : counts) CHECK(c == 100);
}

TEST_CASE("rendered responses") {
    const auto img = spread(3, Modality::image);
    ComparisonPair p{"s0", "s1", QualityLevel::worse, 1.5};
    auto r = render_instruction(p, img);
    CHECK(r.response == "The quality of the second image is worse than the first image.");
    CHECK(r.prompt_kind == PromptKind::texture);
    CHECK(r.instruction == prompts::kTexture);
    CHECK(r.media_refs == std::vector<std::string>{"a0", "a1"});

    const auto pc = spread(3, Modality::pointcloud);
    p.level = QualityLevel::similar;
    r = render_instruction(p, pc);
    CHECK(r.response == "The quality of the second point cloud is similar to the first point cloud.");
    p.level = QualityLevel::superior;
    r = render_instruction(p, pc);
    CHECK(r.instruction.rfind("Please focus on geometric structure and shape integrity.", 0) == 0);
    CHECK(r.response == "The quality of the second point cloud is superior than the first point cloud.");
}

TEST_CASE("mixed modality pair is rejected") {
    const DatasetManifest m("mix", {0, 10},
                            {{"i", Modality::image, {}, 1.0, 0.1, "mix"}, {"p", Modality::pointcloud, {}, 2.0, 0.1, "mix"}});
    CHECK_THROWS_AS(render_instruction(label_pair(m.at("i"), m.at("p")), m), InvalidPair);
}

TEST_CASE("property: reversing a pair mirrors its level; prompts appear exactly once") {
    const auto m = spread(12, Modality::pointcloud);
    for (const auto& p : sample_pairs(m, 300, 8)) {
        const ComparisonPair rev{p.second, p.first, QualityLevel::similar, 0.0};
        const auto r = render_instruction(label_pair(m.at(rev.first), m.at(rev.second)), m);
        CHECK(r.level == mirror_level(p.level));
        const auto fwd = render_instruction(p, m);
        const bool tex = fwd.instruction.find(prompts::kTextureLead) != std::string::npos;
        const bool geo = fwd.instruction.find(prompts::kGeometryLead) != std::string::npos;
        CHECK(tex != geo);
    }
}

TEST_CASE("record export round-trip") {
    const auto dir = oracle::scratch_dir("pairgen_export");
    const auto path = (dir / "r.jsonl").string();
    CHECK(export_records({}, path) == 0);
    CHECK(io::read_file(path).empty());

    const auto m = spread(5, Modality::image);
    std::vector<InstructionRecord> records;
    for (const auto& p : sample_pairs(m, 3, 2)) records.push_back(render_instruction(p, m));
    records[0].id = "Ωmega/ü-0";
    CHECK(export_records(records, path) == 3);
    const auto text = io::read_file(path);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(read_records(path) == records);
    CHECK(read_records(path)[0].id == "Ωmega/ü-0");
}

TEST_CASE("corrupt record lines are rejected") {
    CHECK_THROWS_AS(record_from_json_line("{not json"), InvalidInput);
    CHECK_THROWS_AS(record_from_json_line("{\"prompt_kind\":\"texture\"}"), InvalidInput);
}
