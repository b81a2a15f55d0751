#include "doctest.h"

#include "sbb/backend.hpp"
#include "sbb/catalog.hpp"
#include "sbb/directions.hpp"
#include "sbb/prompts.hpp"
#include "sbb/toy_backend.hpp"
#include "sbb/util.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

using namespace sbb;

namespace {

const Catalogs & cats() {
    static Catalogs c = load_catalogs(default_data_dir());
    return c;
}

const ToyBackend & toy() {
    static ToyBackend b{ToyConfig{}, cats()};
    return b;
}

std::string temp_path(const std::string & name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("mean_activation matches a hand-rolled average") {
    // Three prompts, two sites, two positions, four dims; values laid out so
    // the oracle is computable independently of the tensor's index math.
    ActivationTensor t;
    t.n_prompts   = 3;
    t.layer_count = 2;
    t.positions   = {-1, -2};
    t.hidden_dim  = 4;
    t.allocate();
    for (int p = 0; p < 3; ++p)
        for (int site = 0; site < 2; ++site)
            for (int x = 0; x < 2; ++x)
                for (int k = 0; k < 4; ++k)
                    t.at(p, site, x)[k] =
                        static_cast<float>(p * 1000 + site * 100 + x * 10 + k);

    for (int site = 0; site < 2; ++site) {
        for (int x = 0; x < 2; ++x) {
            // Oracle: independent accumulation in doubles.
            for (int k = 0; k < 4; ++k) {
                double want = 0.0;
                for (int p = 0; p < 3; ++p) want += p * 1000 + site * 100 + x * 10 + k;
                want /= 3.0;
                auto got = mean_activation(t, site, x);
                CHECK(got[k] == doctest::Approx(want).epsilon(1e-12));
            }
        }
    }
    CHECK_THROWS_AS((void)mean_activation(t, 2, 0), ValidationError);
    CHECK_THROWS_AS((void)mean_activation(t, 0, 2), ValidationError);
}

TEST_CASE("activation_direction is the elementwise difference of means") {
    std::vector<float> mu = {1.0f, 2.0f, 3.0f};
    std::vector<float> nu = {0.5f, 2.0f, -1.0f};
    auto               d  = activation_direction(mu, nu, 2, -3, 77, 10, 12);
    CHECK(d.vector == std::vector<float>{0.5f, 0.0f, 4.0f});
    CHECK(d.layer == 2);
    CHECK(d.position == -3);
    CHECK(d.seed == 77);
    CHECK(d.n_harmful == 10);
    CHECK(d.n_harmless == 12);
    CHECK(d.id == "seed77/L2/P-3");
    CHECK(d.norm == doctest::Approx(std::sqrt(0.25 + 16.0)).epsilon(1e-12));
    // Unit vector normalizes the raw payload.
    CHECK(d.unit[2] == doctest::Approx(4.0 / d.norm).epsilon(1e-6));
    CHECK_THROWS_AS((void)activation_direction({1.f}, {1.f, 2.f}, 0, -1, 0, 1, 1),
                    ValidationError);
}

TEST_CASE("candidate_directions scans every site and position") {
    auto harmful  = load_named_pool(default_data_dir(), "harmful-train");
    auto harmless = load_named_pool(default_data_dir(), "harmless-train");
    std::vector<std::string> hf(harmful.prompts.begin(), harmful.prompts.begin() + 48);
    std::vector<std::string> hl(harmless.prompts.begin(), harmless.prompts.begin() + 48);

    auto set = candidate_directions(toy(), hf, hl, default_candidate_positions(), 42);

    // The final template token is identical for every prompt, so the
    // raw-embedding candidate at (site 0, position -1) vanishes.
    CHECK(set.dropped == std::vector<std::string>{"seed42/L0/P-1"});
    CHECK(set.warnings.size() == 1);
    CHECK(set.candidates.size() == 5u * 5u - 1u);

    std::set<std::pair<int, int>> seen;
    for (const auto & d : set.candidates) {
        CHECK(d.norm > 0.0);
        CHECK(d.n_harmful == 48);
        CHECK(d.n_harmless == 48);
        CHECK(d.seed == 42);
        CHECK(d.id == RefusalDirection::make_id(42, d.layer, d.position));
        seen.insert({d.layer, d.position});
    }
    CHECK(seen.size() == set.candidates.size());
}

TEST_CASE("candidate_directions: identical pools are all-degenerate") {
    std::vector<std::string> same = {"water the plants", "fold the laundry"};
    CHECK_THROWS_AS(
        (void)candidate_directions(toy(), same, same, default_candidate_positions(), 1),
        ValidationError);
}

TEST_CASE("select_direction minimizes ablated refusal rate with stable ties") {
    auto harmful  = load_named_pool(default_data_dir(), "harmful-train");
    auto harmless = load_named_pool(default_data_dir(), "harmless-train");
    auto val      = load_named_pool(default_data_dir(), "harmful-val");
    std::vector<std::string> hf(harmful.prompts.begin(), harmful.prompts.begin() + 64);
    std::vector<std::string> hl(harmless.prompts.begin(), harmless.prompts.begin() + 64);

    auto set = candidate_directions(toy(), hf, hl, default_candidate_positions(), 7);
    auto sel = select_direction(toy(), set.candidates, val.prompts);

    // Scores cover every candidate and live in [0, 1].
    CHECK(sel.scores.size() == set.candidates.size());
    for (const auto & [id, rate] : sel.scores) {
        CHECK(rate >= 0.0);
        CHECK(rate <= 1.0);
    }
    // The harm signal is fully linear here, so the winner ablates refusal to
    // zero, and the tie-break lands on the earliest effective site at the
    // final position.
    CHECK(sel.best.selection_score == 0.0);
    CHECK(sel.best.layer == 1);
    CHECK(sel.best.position == -1);
}

TEST_CASE("sample_direction_variants: mirrored subsamples and reproducibility") {
    auto harmful  = load_named_pool(default_data_dir(), "harmful-train");
    auto harmless = load_named_pool(default_data_dir(), "harmless-train");
    auto val      = load_named_pool(default_data_dir(), "harmful-val");

    auto run = [&] {
        return sample_direction_variants(toy(), harmful, harmless, val,
                                         /*n_variants=*/2, /*n_harmful=*/24,
                                         /*n_harmless=*/24, /*master_seed=*/2026);
    };
    auto a = run();
    CHECK(a.selected.size() == 2);
    CHECK(a.metadata.at("variants").size() == 2);

    std::set<std::uint64_t> seeds;
    for (size_t v = 0; v < a.selected.size(); ++v) {
        const auto & d    = a.selected[v];
        const auto & meta = a.metadata.at("variants").at(v);
        seeds.insert(d.seed);
        CHECK(d.n_harmful == 24);
        CHECK(d.n_harmless == 24);
        CHECK(meta.at("selected").get<std::string>() == d.id);
        auto hs = meta.at("harmful_sample").get<std::vector<size_t>>();
        auto ls = meta.at("harmless_sample").get<std::vector<size_t>>();
        CHECK(hs.size() == 24);
        CHECK(ls.size() == 24);
        CHECK(std::set<size_t>(hs.begin(), hs.end()).size() == 24);  // no repeats
        for (size_t i : hs) CHECK(i < harmful.prompts.size());
        for (size_t i : ls) CHECK(i < harmless.prompts.size());
        // Every variant still lands on a refusal-killing direction.
        CHECK(d.selection_score == 0.0);
    }
    CHECK(seeds.size() == 2);  // distinct derived seeds per variant

    auto b = run();
    REQUIRE(b.selected.size() == a.selected.size());
    for (size_t v = 0; v < a.selected.size(); ++v) {
        CHECK(b.selected[v].id == a.selected[v].id);
        CHECK(b.selected[v].vector == a.selected[v].vector);  // bit-identical
    }

    CHECK_THROWS_AS((void)sample_direction_variants(toy(), harmful, harmless, val, 0,
                                                    8, 8, 1),
                    ValidationError);
    CHECK_THROWS_AS((void)sample_direction_variants(toy(), harmful, harmless, val, 1,
                                                    harmful.prompts.size() + 1, 8, 1),
                    ValidationError);
}

TEST_CASE("direction persistence: bit-exact JSON round trip") {
    RefusalDirection d;
    d.vector = {1.5f, -2.25f, 0.0f, 3.14159f, -0.0001f, 1e-30f, 12345.678f, -7.0f};
    // Exercise non-representable decimals so bit-exactness is meaningful.
    d.vector.resize(64, 0.3333333f);
    d.layer           = 3;
    d.position        = -2;
    d.seed            = 991;
    d.n_harmful       = 128;
    d.n_harmless      = 128;
    d.selection_score = 0.125;
    d.finalize();

    auto             j = direction_to_json(d);
    RefusalDirection r = direction_from_json(j);
    CHECK(r.id == d.id);
    CHECK(r.vector == d.vector);  // float-equal, i.e. bit-exact payload
    CHECK(r.layer == d.layer);
    CHECK(r.position == d.position);
    CHECK(r.seed == d.seed);
    CHECK(r.selection_score == d.selection_score);
    CHECK(r.norm == doctest::Approx(d.norm).epsilon(1e-12));

    const auto path = temp_path("sbb_directions_test.json");
    json       meta = {{"note", "round-trip"}};
    save_directions(path, {d}, meta, "toy/test", 64);
    json loaded_meta;
    auto loaded = load_directions(path, &loaded_meta);
    REQUIRE(loaded.count(d.id) == 1);
    CHECK(loaded.at(d.id).vector == d.vector);
    CHECK(loaded_meta.at("note").get<std::string>() == "round-trip");
    std::filesystem::remove(path);
}

TEST_CASE("direction persistence: malformed files are rejected") {
    const auto path = temp_path("sbb_directions_bad.json");

    SUBCASE("missing file") {
        CHECK_THROWS_AS((void)load_directions(path + ".nope"), IoError);
    }
    SUBCASE("not JSON") {
        write_text_file_atomic(path, "not json at all\n");
        CHECK_THROWS_AS((void)load_directions(path), ValidationError);
    }
    SUBCASE("wrong kind") {
        write_text_file_atomic(path, R"({"kind": "grocery-list"})" "\n");
        CHECK_THROWS_AS((void)load_directions(path), ValidationError);
    }
    SUBCASE("tampered norm") {
        RefusalDirection d;
        d.vector.assign(64, 1.0f);
        d.layer = 1;
        d.finalize();
        auto j          = direction_to_json(d);
        j["norm"]       = 42.0;
        json file       = {{"kind", "sbb-directions"},
                           {"version", 1},
                           {"model_id", "toy/test"},
                           {"hidden_dim", 64},
                           {"metadata", json::object()},
                           {"directions", json::array({j})}};
        write_text_file_atomic(path, file.dump());
        CHECK_THROWS_AS((void)load_directions(path), ValidationError);
    }
    std::filesystem::remove(path);
}
