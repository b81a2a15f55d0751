#include <doctest.h>

#include "sbb/base64.hpp"
#include "sbb/jsonl.hpp"
#include "sbb/rng.hpp"
#include "sbb/util.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

using namespace sbb;

TEST_CASE("slugify produces stable kebab-case keys") {
    CHECK(slugify("a Healthcare Scammer!") == "a-healthcare-scammer");
    CHECK(slugify("  spaced   out  ") == "spaced-out");
    CHECK(slugify("already-kebab") == "already-kebab");
    CHECK(slugify("") == "");
}

TEST_CASE("string helpers") {
    CHECK(to_lower("MiXeD") == "mixed");
    CHECK(trim("  x \t") == "x");
    CHECK(starts_with_ci("I'M SORRY, but", "i'm sorry"));
    CHECK_FALSE(starts_with_ci("sorry", "sorry!"));
    CHECK(replace_all("a{X}b{X}", "{X}", "1") == "a1b1");
    CHECK(count_occurrences("aaa", "aa") == 1);  // non-overlapping
    CHECK(join({"a", "b"}, ", ") == "a, b");
}

TEST_CASE("fnv1a64 matches the published test vector") {
    // FNV-1a 64-bit of empty string is the offset basis.
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(hex_u64(0xcbf29ce484222325ull) == "cbf29ce484222325");
}

TEST_CASE("rng is deterministic and shuffles uniformly enough") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; i++) {
        CHECK(a.next_u64() == b.next_u64());
    }

    // Fisher-Yates over 3 elements: all 6 permutations show up.
    std::set<std::vector<int>> seen;
    for (uint64_t seed = 0; seed < 200; seed++) {
        std::vector<int> v{0, 1, 2};
        Rng              rng(seed);
        rng.shuffle(v);
        seen.insert(v);
    }
    CHECK(seen.size() == 6);
}

TEST_CASE("uniform_below never exceeds the bound and covers it") {
    Rng rng(7);
    std::set<uint64_t> seen;
    for (int i = 0; i < 1000; i++) {
        uint64_t v = rng.uniform_below(5);
        CHECK(v < 5);
        seen.insert(v);
    }
    CHECK(seen.size() == 5);
}

TEST_CASE("derive_seed separates keys and masters") {
    CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
}

TEST_CASE("base64 float round-trip is bit-exact") {
    std::vector<float> values = {0.0f, -0.0f, 1.5f, -3.25e-12f, 6.7e20f, 0.1f};
    auto               decoded = base64_to_floats(floats_to_base64(values));
    REQUIRE(decoded.size() == values.size());
    for (size_t i = 0; i < values.size(); i++) {
        uint32_t a, b;
        static_assert(sizeof(float) == 4);
        std::memcpy(&a, &values[i], 4);
        std::memcpy(&b, &decoded[i], 4);
        CHECK(a == b);
    }
    CHECK(base64_encode("Man", 3) == "TWFu");  // RFC 4648 vector
    CHECK(base64_encode("Ma", 2) == "TWE=");
}

TEST_CASE("jsonl reader tolerates a truncated final line only") {
    const std::string dir = std::filesystem::temp_directory_path() / "sbb_jsonl_test";
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/records.jsonl";
    {
        std::ofstream out(path, std::ios::trunc);
        out << R"({"n":1})" << "\n" << R"({"n":2})" << "\n" << R"({"n":3,"x")";  // torn tail
    }
    auto result = read_jsonl(path);
    CHECK(result.records.size() == 2);
    CHECK(result.dropped_partial_tail);

    {
        std::ofstream out(path, std::ios::trunc);
        out << R"({"n":1})" << "\n" << "garbage\n" << R"({"n":3})" << "\n";
    }
    CHECK_THROWS_AS(read_jsonl(path), IoError);
}
