#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pcqa/core.hpp"
#include "pcqa/io.hpp"
#include "pcqa/random.hpp"

using namespace pcqa;

TEST_CASE("standardized difference examples") {
    CHECK(standardized_difference(3.0, 0.4, 3.0, 0.9) == 0.0);
    CHECK(standardized_difference(5.0, 1.0, 3.0, 1.0) == doctest::Approx(1.4142135623730951).epsilon(1e-15));
    CHECK(standardized_difference(4.0, 0.0, 4.0, 0.0) == 0.0);
    // both stds zero: floored denominator
    CHECK(standardized_difference(4.0, 0.0, 3.0, 0.0) == doctest::Approx(1e6));
}

TEST_CASE("standardized difference rejects bad input") {
    CHECK_THROWS_AS(standardized_difference(NAN, 1.0, 0.0, 1.0), InvalidInput);
    CHECK_THROWS_AS(standardized_difference(1.0, INFINITY, 0.0, 1.0), InvalidInput);
    CHECK_THROWS_AS(standardized_difference(1.0, -0.1, 0.0, 1.0), InvalidInput);
}

TEST_CASE("quantize interiors and boundaries") {
    CHECK(quantize_level(2.5) == QualityLevel::inferior);
    CHECK(quantize_level(0.0) == QualityLevel::similar);
    CHECK(quantize_level(-1.5) == QualityLevel::better);
    CHECK(quantize_level(1.5) == QualityLevel::worse);
    CHECK(quantize_level(-2.5) == QualityLevel::superior);
    CHECK(quantize_level(1.0) == QualityLevel::similar);
    CHECK(quantize_level(-1.0) == QualityLevel::similar);
    CHECK(quantize_level(2.0) == QualityLevel::worse);
    CHECK(quantize_level(-2.0) == QualityLevel::better);
    CHECK(quantize_level(std::nextafter(2.0, 3.0)) == QualityLevel::inferior);
    CHECK_THROWS_AS(quantize_level(NAN), InvalidInput);
    CHECK_THROWS_AS(quantize_level(-INFINITY), InvalidInput);
}

TEST_CASE("mirror is an involution") {
    CHECK(mirror_level(QualityLevel::inferior) == QualityLevel::superior);
    CHECK(mirror_level(QualityLevel::similar) == QualityLevel::similar);
    CHECK(mirror_level(QualityLevel::better) == QualityLevel::worse);
    for (auto l : kAllLevels) CHECK(mirror_level(mirror_level(l)) == l);
}

TEST_CASE("property: quantize(-z) = mirror(quantize(z)) and z antisymmetry") {
    Rng rng(11);
    for (int i = 0; i < 20000; ++i) {
        const double qi = rng.uniform(0, 10), qj = rng.uniform(0, 10);
        const double si = rng.uniform(0, 2), sj = rng.uniform(0, 2);
        const double z = standardized_difference(qi, si, qj, sj);
        CHECK(standardized_difference(qj, sj, qi, si) == -z);
        CHECK(quantize_level(-z) == mirror_level(quantize_level(z)));
    }
    for (double z : {-2.0, -1.0, 0.0, 1.0, 2.0}) CHECK(quantize_level(-z) == mirror_level(quantize_level(z)));
}

TEST_CASE("level names round-trip") {
    for (auto l : kAllLevels) CHECK(parse_level(level_name(l)) == l);
    CHECK(level_name(QualityLevel::superior) == "superior");
    CHECK_THROWS_AS(parse_level("great"), InvalidInput);
    CHECK_THROWS_AS(level_from_index(5), InvalidInput);
}

TEST_CASE("level distribution validation") {
    CHECK_NOTHROW(LevelDistribution({0.1, 0.2, 0.3, 0.2, 0.2}));
    CHECK_THROWS_AS(LevelDistribution({0.1, 0.2, 0.3, 0.2, 0.18}), InvalidInput);
    CHECK_THROWS_AS(LevelDistribution({-0.1, 0.3, 0.3, 0.3, 0.2}), InvalidInput);
    CHECK_THROWS_AS(LevelDistribution({NAN, 0.2, 0.3, 0.3, 0.2}), InvalidInput);
    const double v[4] = {0.25, 0.25, 0.25, 0.25};
    CHECK_THROWS_AS(LevelDistribution::from_span(v), InvalidInput);
    const auto d = LevelDistribution({0.5, 0.2, 0.1, 0.1, 0.1});
    CHECK(d.mirrored().probs() == std::array<double, 5>{0.1, 0.1, 0.1, 0.2, 0.5});
    CHECK(d.mirrored().mirrored() == d);
    CHECK(LevelDistribution::one_hot(QualityLevel::better).expected_index() == 3.0);
    CHECK(LevelDistribution::uniform().entropy() == doctest::Approx(std::log(5.0)));
}

TEST_CASE("manifest invariants") {
    RatedSample a{"a", Modality::image, {"a.png"}, 3.0, 0.5, "d"};
    RatedSample b{"b", Modality::image, {"b.png"}, 4.0, 0.5, "d"};
    CHECK_NOTHROW(DatasetManifest("d", {1, 5}, {a, b}));
    CHECK_THROWS_AS(DatasetManifest("d", {1, 5}, {a, a}), InvalidInput);
    auto bad = b;
    bad.mos = 6.0;
    CHECK_THROWS_AS(DatasetManifest("d", {1, 5}, {a, bad}), InvalidInput);
    bad = b;
    bad.std = -1;
    CHECK_THROWS_AS(DatasetManifest("d", {1, 5}, {a, bad}), InvalidInput);
    bad = b;
    bad.id = "";
    CHECK_THROWS_AS(DatasetManifest("d", {1, 5}, {a, bad}), InvalidInput);
    const DatasetManifest m("d", {1, 5}, {a, b});
    CHECK(m.find("b")->mos == 4.0);
    CHECK(m.find("zz") == nullptr);
    CHECK_THROWS_AS(m.at("zz"), InvalidInput);
}

TEST_CASE("manifest file round-trip") {
    const auto dir = oracle::scratch_dir("core_manifest");
    RatedSample a{"ä-1", Modality::pointcloud, {"x.ply"}, 0.1, 0.3, "set"};
    RatedSample b{"b", Modality::pointcloud, {"v0.ppm", "v1.ppm"}, 9.9, 0.0, "set"};
    const DatasetManifest m("set", {0, 10}, {a, b});
    save_manifest(m, (dir / "m.json").string());
    CHECK(load_manifest((dir / "m.json").string()) == m);
    io::write_file((dir / "bad.json").string(), "{\"dataset\":\"x\"}");
    CHECK_THROWS_AS(load_manifest((dir / "bad.json").string()), InvalidInput);
    CHECK_THROWS_AS(load_manifest((dir / "missing.json").string()), IoError);
}

TEST_CASE("rng is reproducible and in range") {
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    Rng r(1);
    for (int i = 0; i < 1000; ++i) {
        CHECK(r.index(7) < 7);
        const double u = r.uniform();
        CHECK((u >= 0.0 && u < 1.0));
    }
    CHECK(mix_seed(1, "a") != mix_seed(1, "b"));
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("format_double round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 6.02214076e23}) CHECK(std::stod(io::format_double(v)) == v);
}
