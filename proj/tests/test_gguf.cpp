// GGUF adapter tests: container parsing, block dequantization against the
// layout formulas, tokenizer and forward-pass agreement with the frozen
// reference outputs generated by tests/fixtures/make_tiny_gguf.py, and the
// intervention hook contract on the tiny model.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sbb/backend.hpp"
#include "sbb/gguf.hpp"
#include "sbb/jsonl.hpp"
#include "sbb/rng.hpp"
#include "sbb/spm_tokenizer.hpp"
#include "sbb/util.hpp"

using namespace sbb;

namespace {

std::string fixture(const std::string & name) {
    return std::string(SBB_TEST_FIXTURE_DIR) + "/" + name;
}

struct TempDir {
    std::filesystem::path dir;
    explicit TempDir(const std::string & tag) {
        dir = std::filesystem::temp_directory_path() /
              (tag + "-" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir, ec);
    }
    std::string path() const { return dir.string(); }
};

json load_reference() {
    std::ifstream in(fixture("tiny_reference.json"));
    REQUIRE(in.good());
    return json::parse(in);
}

std::unique_ptr<ModelBackend> tiny_backend(const std::string & style) {
    return make_gguf_backend(
        json{{"kind", "gguf"}, {"path", fixture("tiny.gguf")},
             {"template_style", style}});
}

std::uint16_t float_to_half_bits(float f) {
    // Round-trip helper for building test blocks: encode via the nearest
    // representable half; only values exactly representable in binary16 are
    // used below, so no rounding ambiguity arises.
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    const std::uint32_t sign = bits >> 31;
    const std::int32_t  exp = static_cast<std::int32_t>((bits >> 23) & 0xFF) - 127;
    const std::uint32_t mant = bits & 0x7FFFFF;
    if (f == 0.0f) return static_cast<std::uint16_t>(sign << 15);
    REQUIRE(exp >= -14);
    REQUIRE(exp <= 15);
    REQUIRE((mant & 0x1FFF) == 0);  // fits in 10 mantissa bits
    return static_cast<std::uint16_t>((sign << 15) |
                                      static_cast<std::uint32_t>(exp + 15) << 10 |
                                      (mant >> 13));
}

} // namespace

TEST_CASE("half-precision decoding matches reference values") {
    CHECK(gguf::half_to_float(0x0000) == 0.0f);
    CHECK(std::signbit(gguf::half_to_float(0x8000)));
    CHECK(gguf::half_to_float(0x3C00) == 1.0f);
    CHECK(gguf::half_to_float(0xC000) == -2.0f);
    CHECK(gguf::half_to_float(0x3555) == doctest::Approx(0.333251953125).epsilon(1e-12));
    CHECK(gguf::half_to_float(0x7BFF) == 65504.0f);
    // Smallest subnormal and largest subnormal.
    CHECK(gguf::half_to_float(0x0001) == doctest::Approx(5.9604644775390625e-8));
    CHECK(gguf::half_to_float(0x03FF) == doctest::Approx(6.097555160522461e-5));
    CHECK(std::isinf(gguf::half_to_float(0x7C00)));
    CHECK(std::isnan(gguf::half_to_float(0x7E00)));
    // Exact round-trip through the test encoder.
    for (float v : {0.5f, -0.25f, 3.0f, 1024.0f, -0.125f})
        CHECK(gguf::half_to_float(float_to_half_bits(v)) == v);
}

TEST_CASE("plain-scale block decoding matches the layout formulas") {
    SUBCASE("byte-quantized blocks (Q8_0)") {
        std::vector<std::uint8_t> blk(34 * 2);
        const std::uint16_t       d0 = float_to_half_bits(0.5f);
        const std::uint16_t       d1 = float_to_half_bits(0.125f);
        std::memcpy(blk.data(), &d0, 2);
        std::memcpy(blk.data() + 34, &d1, 2);
        for (int j = 0; j < 32; ++j) {
            blk[static_cast<std::size_t>(2 + j)] =
                static_cast<std::uint8_t>(static_cast<std::int8_t>(j - 16));
            blk[static_cast<std::size_t>(36 + j)] =
                static_cast<std::uint8_t>(static_cast<std::int8_t>(-j));
        }
        auto out = gguf::dequantize(8, blk.data(), blk.size(), 64);
        REQUIRE(out.size() == 64);
        for (int j = 0; j < 32; ++j) {
            CHECK(out[static_cast<std::size_t>(j)] == 0.5f * static_cast<float>(j - 16));
            CHECK(out[static_cast<std::size_t>(32 + j)] ==
                  0.125f * static_cast<float>(-j));
        }
    }
    SUBCASE("nibble blocks (Q4_0): low nibbles fill the first half") {
        std::vector<std::uint8_t> blk(18);
        const std::uint16_t       d = float_to_half_bits(2.0f);
        std::memcpy(blk.data(), &d, 2);
        for (int j = 0; j < 16; ++j)
            blk[static_cast<std::size_t>(2 + j)] =
                static_cast<std::uint8_t>((j % 16) | (((15 - j) % 16) << 4));
        auto out = gguf::dequantize(2, blk.data(), blk.size(), 32);
        for (int j = 0; j < 16; ++j) {
            CHECK(out[static_cast<std::size_t>(j)] == 2.0f * static_cast<float>(j - 8));
            CHECK(out[static_cast<std::size_t>(j + 16)] ==
                  2.0f * static_cast<float>(15 - j - 8));
        }
    }
    SUBCASE("byte-size accounting and misuse errors") {
        CHECK(gguf::tensor_byte_size(0, 10) == 40);
        CHECK(gguf::tensor_byte_size(1, 10) == 20);
        CHECK(gguf::tensor_byte_size(8, 64) == 68);
        CHECK(gguf::tensor_byte_size(2, 64) == 36);
        CHECK(gguf::tensor_byte_size(12, 256) == 144);
        CHECK(gguf::tensor_byte_size(14, 512) == 420);
        CHECK_THROWS_AS(gguf::tensor_byte_size(8, 33), ValidationError);
        CHECK_THROWS_AS(gguf::tensor_byte_size(12, 128), ValidationError);
        CHECK_THROWS_AS(gguf::tensor_byte_size(99, 32), ValidationError);
        std::vector<std::uint8_t> short_buf(10);
        CHECK_THROWS_AS(gguf::dequantize(0, short_buf.data(), 10, 32),
                        ValidationError);
    }
}

TEST_CASE("super-block decoding matches an element-indexed oracle") {
    // Builds one 256-element super-block of each K-quant encoding directly
    // from the byte layout, then checks every element against a per-index
    // re-derivation of the format documentation.
    SUBCASE("Q4_K") {
        std::vector<std::uint8_t> blk(144, 0);
        const std::uint16_t       d = float_to_half_bits(0.5f);
        const std::uint16_t       dmin = float_to_half_bits(0.25f);
        std::memcpy(blk.data(), &d, 2);
        std::memcpy(blk.data() + 2, &dmin, 2);
        // Sub-block scales 1..8 and mins 8..1, packed into the 6-bit scheme.
        std::uint8_t sc[8], mn[8];
        for (int j = 0; j < 8; ++j) {
            sc[j] = static_cast<std::uint8_t>(j + 1);
            mn[j] = static_cast<std::uint8_t>(8 - j);
        }
        std::uint8_t * s = blk.data() + 4;
        for (int j = 0; j < 4; ++j) {
            s[j] = static_cast<std::uint8_t>((sc[j] & 63) | ((sc[j + 4] >> 4) << 6));
            s[j + 4] = static_cast<std::uint8_t>((mn[j] & 63) | ((mn[j + 4] >> 4) << 6));
            s[j + 8] = static_cast<std::uint8_t>((sc[j + 4] & 0x0F) |
                                                 ((mn[j + 4] & 0x0F) << 4));
        }
        Rng            rng(7);
        std::uint8_t * q = blk.data() + 16;
        for (int j = 0; j < 128; ++j)
            q[j] = static_cast<std::uint8_t>(rng.uniform_below(256));

        auto out = gguf::dequantize(12, blk.data(), blk.size(), 256);
        REQUIRE(out.size() == 256);
        for (int idx = 0; idx < 256; ++idx) {
            // Element index -> (chunk of 64, low/high nibble half, lane).
            const int chunk = idx / 64;
            const int within = idx % 64;
            const int nibble_half = within / 32;  // 0 = low, 1 = high
            const int lane = within % 32;
            const int sub_block = chunk * 2 + nibble_half;
            const std::uint8_t byte = q[chunk * 32 + lane];
            const int qv = nibble_half == 0 ? (byte & 0x0F) : (byte >> 4);
            const float expect = 0.5f * static_cast<float>(sc[sub_block]) *
                                     static_cast<float>(qv) -
                                 0.25f * static_cast<float>(mn[sub_block]);
            CHECK(out[static_cast<std::size_t>(idx)] == doctest::Approx(expect));
        }
    }
    SUBCASE("Q6_K") {
        std::vector<std::uint8_t> blk(210, 0);
        Rng                       rng(11);
        for (int j = 0; j < 192; ++j)
            blk[static_cast<std::size_t>(j)] =
                static_cast<std::uint8_t>(rng.uniform_below(256));
        for (int j = 0; j < 16; ++j)
            blk[static_cast<std::size_t>(192 + j)] =
                static_cast<std::uint8_t>(static_cast<std::int8_t>(j - 8));
        const std::uint16_t d = float_to_half_bits(0.25f);
        std::memcpy(blk.data() + 208, &d, 2);

        auto out = gguf::dequantize(14, blk.data(), blk.size(), 256);
        REQUIRE(out.size() == 256);
        const std::uint8_t * ql = blk.data();
        const std::uint8_t * qh = blk.data() + 128;
        const auto * scales = reinterpret_cast<const std::int8_t *>(blk.data() + 192);
        for (int idx = 0; idx < 256; ++idx) {
            // Element index -> (half of 128, group of 32, lane).
            const int half = idx / 128;
            const int within = idx % 128;
            const int group = within / 32;  // 0..3
            const int lane = within % 32;
            const std::uint8_t lo_byte = ql[half * 64 + lane + (group % 2) * 32];
            const int lo = group < 2 ? (lo_byte & 0x0F) : (lo_byte >> 4);
            const int hi = (qh[half * 32 + lane] >> (2 * group)) & 3;
            const int qv = (lo | (hi << 4)) - 32;
            const int sc_idx = half * 8 + group * 2 + lane / 16;
            const float expect = 0.25f * static_cast<float>(scales[sc_idx]) *
                                 static_cast<float>(qv);
            CHECK(out[static_cast<std::size_t>(idx)] == doctest::Approx(expect));
        }
    }
}

TEST_CASE("container reader parses the tiny model") {
    auto file = gguf::File::open(fixture("tiny.gguf"));
    CHECK(file.version() == 3);
    CHECK(file.require_string("general.architecture") == "llama");
    CHECK(file.require_int("llama.embedding_length") == 32);
    CHECK(file.require_int("llama.block_count") == 2);
    CHECK(file.require_int("llama.attention.head_count") == 4);
    CHECK(file.require_int("llama.attention.head_count_kv") == 2);
    CHECK(file.get_bool("tokenizer.ggml.add_bos_token", false));
    CHECK(file.get_float("llama.rope.freq_base", 0.0) == doctest::Approx(10000.0));
    CHECK(file.get_int("nonexistent.key", 77) == 77);
    CHECK_THROWS_AS(file.require_int("nonexistent.key"), ValidationError);

    const auto & info = file.tensor("token_embd.weight");
    REQUIRE(info.shape.size() == 2);
    CHECK(info.shape[0] == 32);
    const auto n_vocab = info.shape[1];
    CHECK(file.tensor_f32("token_embd.weight").size() == 32 * n_vocab);
    CHECK(file.has_tensor("blk.1.ffn_gate.weight"));
    CHECK(file.tensor("blk.0.attn_q.weight").type == 8);   // Q8_0
    CHECK(file.tensor("blk.0.attn_k.weight").type == 1);   // F16
    CHECK(file.tensor("blk.1.ffn_gate.weight").type == 2); // Q4_0
    CHECK(file.tensor_f32("blk.1.ffn_gate.weight").size() == 32 * 48);
    CHECK_THROWS_AS(file.tensor("no.such.tensor"), ValidationError);

    SUBCASE("corrupt files are rejected") {
        TempDir tmp("gguf-corrupt");
        const auto   bad_magic = tmp.path() + "/bad_magic.gguf";
        write_text_file_atomic(bad_magic, "NOPE this is not a model");
        CHECK_THROWS_AS(gguf::File::open(bad_magic), ValidationError);

        std::ifstream src(fixture("tiny.gguf"), std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(src)),
                                std::istreambuf_iterator<char>());
        bytes.resize(bytes.size() / 2);  // cut the data section short
        const auto truncated = tmp.path() + "/truncated.gguf";
        std::ofstream(truncated, std::ios::binary)
            .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        CHECK_THROWS_AS(gguf::File::open(truncated), ValidationError);

        CHECK_THROWS_AS(gguf::File::open(tmp.path() + "/missing.gguf"), IoError);
    }
}

TEST_CASE("tokenizer reproduces the frozen reference cases") {
    auto file = gguf::File::open(fixture("tiny.gguf"));
    auto tok = SpmTokenizer::from_gguf(file);
    auto ref = load_reference();

    for (const auto & tc : ref.at("tokenizer_cases")) {
        const auto text = tc.at("text").get<std::string>();
        const auto want = tc.at("ids").get<std::vector<int>>();
        INFO("text: ", text);
        CHECK(tok.encode(text) == want);
        CHECK(tok.decode(want) == tc.at("decoded").get<std::string>());
    }

    SUBCASE("byte fallback covers arbitrary bytes") {
        const std::string exotic = "\x01\x7f\xc3\xbf";  // control, DEL, U+00FF
        auto              ids = tok.encode(exotic);
        CHECK(!ids.empty());
        // Every byte must round-trip through byte tokens.
        std::string back = tok.decode(ids);
        CHECK(back.find('\x01') != std::string::npos);
        CHECK(back.find('\x7f') != std::string::npos);
    }
    SUBCASE("special pieces match whole, never via merging") {
        auto ids = tok.encode("<|user|>hi");
        REQUIRE(ids.size() >= 2);
        CHECK(tok.piece(ids[0]).type == SpmTokenizer::TokenType::user_defined);
        CHECK(tok.piece(ids[0]).text == "<|user|>");
    }
    SUBCASE("non-SentencePiece vocabularies are rejected with a clear message") {
        std::vector<SpmTokenizer::Piece> pieces;
        CHECK_THROWS_AS(SpmTokenizer(std::move(pieces), 0, 1, 2, true),
                        ValidationError);
    }
}

TEST_CASE("chat templates match the reference token streams") {
    auto ref = load_reference();
    for (const auto & tc : ref.at("template_cases")) {
        const auto style = tc.at("style").get<std::string>();
        auto       backend = tiny_backend(style);
        const auto tp = backend->chat_template(tc.at("text").get<std::string>());
        INFO("style: ", style);
        CHECK(tp.token_ids == tc.at("ids").get<std::vector<int>>());
        CHECK(tp.last_instruction_index ==
              static_cast<int>(tp.token_ids.size()) - 1);
    }
    SUBCASE("empty text still yields scaffolding tokens") {
        auto backend = tiny_backend("llama2");
        CHECK(backend->chat_template("").token_ids.size() > 1);
    }
    SUBCASE("over-long prompts are rejected against the context limit") {
        auto        backend = tiny_backend("raw");
        CHECK(backend->context_limit() == 256);
        std::string big;
        for (int i = 0; i < 400; ++i) big += "zq ";  // no merges, 2+ tokens each
        CHECK_THROWS_AS(backend->chat_template(big), ValidationError);
    }
    SUBCASE("unknown style is rejected") {
        CHECK_THROWS_AS(tiny_backend("alpaca"), ValidationError);
    }
}

TEST_CASE("forward pass matches the frozen numpy reference") {
    auto backend = tiny_backend("raw");
    auto ref = load_reference();
    auto file = gguf::File::open(fixture("tiny.gguf"));

    CHECK(backend->hidden_dim() == 32);
    CHECK(backend->n_sites() == 3);
    CHECK(backend->model_id() == "gguf:llama:tiny-test");

    SUBCASE("per-site last-token residuals") {
        const auto & cc = ref.at("capture_case");
        auto         t = backend->capture_activations(
            {cc.at("text").get<std::string>()}, {-1});
        REQUIRE(t.layer_count == 3);
        const auto sites = cc.at("last_token_sites")
                               .get<std::vector<std::vector<double>>>();
        double worst = 0.0;
        for (int site = 0; site < 3; ++site) {
            const float * got = t.at(0, site, 0);
            for (int k = 0; k < 32; ++k)
                worst = std::max(worst, std::abs(static_cast<double>(got[k]) -
                                                 sites[static_cast<std::size_t>(site)]
                                                      [static_cast<std::size_t>(k)]));
        }
        // Cross-implementation float32 reduction-order divergence only.
        CHECK(worst < 1e-4);
    }

    SUBCASE("readout logits recomputed from the captured final site") {
        const auto wout = file.tensor_f32("output.weight");
        const auto onorm = file.tensor_f32("output_norm.weight");
        const auto n_vocab = file.tensor("output.weight").shape[1];
        const double eps =
            file.get_float("llama.attention.layer_norm_rms_epsilon", 1e-5);
        for (const auto & lc : ref.at("logits_cases")) {
            auto t = backend->capture_activations(
                {lc.at("text").get<std::string>()}, {-1});
            const float * h = t.at(0, 2, 0);
            double        ss = 0.0;
            for (int k = 0; k < 32; ++k) ss += static_cast<double>(h[k]) * h[k];
            const double inv = 1.0 / std::sqrt(ss / 32.0 + eps);
            const auto   want = lc.at("logits").get<std::vector<double>>();
            REQUIRE(want.size() == n_vocab);
            double worst = 0.0;
            for (std::uint64_t v = 0; v < n_vocab; ++v) {
                double acc = 0.0;
                for (int k = 0; k < 32; ++k)
                    acc += static_cast<double>(wout[v * 32 + static_cast<std::uint64_t>(k)]) *
                           (static_cast<double>(h[k]) * inv *
                            static_cast<double>(onorm[static_cast<std::size_t>(k)]));
                worst = std::max(worst, std::abs(acc - want[v]));
            }
            INFO("text: ", lc.at("text").get<std::string>());
            CHECK(worst < 2e-4);
        }
    }

    SUBCASE("greedy continuation matches the reference decode") {
        const auto & gc = ref.at("greedy_case");
        DecodeParams params;
        params.strategy = DecodeStrategy::greedy;
        params.max_new_tokens = 8;
        auto out = backend->generate(gc.at("text").get<std::string>(), params);
        CHECK(out.text == gc.at("decoded").get<std::string>());
        CHECK(out.n_new_tokens ==
              static_cast<int>(gc.at("new_ids").size()));
    }

    SUBCASE("batched capture equals single-prompt capture") {
        auto one = backend->capture_activations({"the group"}, {-1, -2});
        auto two = backend->capture_activations({"other text", "the group"}, {-1, -2});
        for (int site = 0; site < 3; ++site)
            for (int xi = 0; xi < 2; ++xi)
                for (int k = 0; k < 32; ++k)
                    CHECK(one.at(0, site, xi)[k] == two.at(1, site, xi)[k]);
    }

    SUBCASE("position out of range is reported") {
        CHECK_THROWS_AS(backend->capture_activations({"hi"}, {-400}),
                        ValidationError);
    }
}

TEST_CASE("tiny-model generation determinism and interventions") {
    auto backend = tiny_backend("llama2");

    DecodeParams greedy;
    greedy.strategy = DecodeStrategy::greedy;
    greedy.max_new_tokens = 6;

    DecodeParams nucleus;
    nucleus.strategy = DecodeStrategy::nucleus;
    nucleus.temperature = 0.9;
    nucleus.top_p = 0.9;
    nucleus.max_new_tokens = 6;
    nucleus.seed = 99;

    const std::string prompt = "which group is most likely to be blamed";

    SUBCASE("same seed, same text") {
        auto a = backend->generate(prompt, nucleus);
        auto b = backend->generate(prompt, nucleus);
        CHECK(a.text == b.text);
        CHECK(a.n_new_tokens == b.n_new_tokens);
    }

    // A direction from difference-in-means over two small prompt sets.
    auto direction_at = [&](int site) {
        std::vector<std::string> a_set = {"the most", "who would", "answer now"};
        std::vector<std::string> b_set = {"of people", "for all", "the group"};
        auto ta = backend->capture_activations(a_set, {-1});
        auto tb = backend->capture_activations(b_set, {-1});
        RefusalDirection d;
        d.vector.assign(32, 0.0f);
        for (int k = 0; k < 32; ++k) {
            double ma = 0.0, mb = 0.0;
            for (int p = 0; p < 3; ++p) {
                ma += ta.at(p, site, 0)[k];
                mb += tb.at(p, site, 0)[k];
            }
            d.vector[static_cast<std::size_t>(k)] =
                static_cast<float>(ma / 3.0 - mb / 3.0);
        }
        d.layer = site;
        d.position = -1;
        d.finalize();
        return d;
    };

    SUBCASE("none-kind intervention is bit-identical to plain decoding") {
        DirectionMap dirs;
        auto         plain = backend->generate(prompt, greedy);
        Intervention none;
        auto         hooked = backend->generate(prompt, greedy, {none}, dirs);
        CHECK(plain.text == hooked.text);
    }

    SUBCASE("in-stream ablation leaves tiny residual projection at every site") {
        auto         d = direction_at(1);
        DirectionMap dirs{{d.id, d}};
        Intervention iv;
        iv.kind = InterventionKind::ablation;
        iv.direction_ref = d.id;
        iv.layer = Intervention::kAllLayers;

        auto t = backend->capture_activations(
            {prompt, "a different prompt about groups"}, {-1, -2}, {iv}, dirs);
        for (int p = 0; p < 2; ++p)
            for (int site = 0; site < 3; ++site)
                for (int xi = 0; xi < 2; ++xi) {
                    const float * h = t.at(p, site, xi);
                    double        dot = 0.0, nx = 0.0;
                    for (int k = 0; k < 32; ++k) {
                        dot += static_cast<double>(
                                   d.unit[static_cast<std::size_t>(k)]) *
                               h[k];
                        nx += static_cast<double>(h[k]) * h[k];
                    }
                    CHECK(std::abs(dot) <=
                          1e-4 * std::max(1.0, std::sqrt(nx)));
                }
    }

    SUBCASE("subtraction shifts exactly its own site and leaves earlier sites") {
        auto         d = direction_at(1);
        DirectionMap dirs{{d.id, d}};
        Intervention iv;
        iv.kind = InterventionKind::subtraction;
        iv.direction_ref = d.id;
        iv.layer = 1;

        auto plain = backend->capture_activations({prompt}, {-1});
        auto sub = backend->capture_activations({prompt}, {-1}, {iv}, dirs);
        for (int k = 0; k < 32; ++k) {
            CHECK(sub.at(0, 0, 0)[k] == plain.at(0, 0, 0)[k]);
            CHECK(sub.at(0, 1, 0)[k] ==
                  plain.at(0, 1, 0)[k] - d.vector[static_cast<std::size_t>(k)]);
        }
    }

    SUBCASE("generated-only interventions do not touch prompt processing") {
        auto         d = direction_at(1);
        DirectionMap dirs{{d.id, d}};
        Intervention iv;
        iv.kind = InterventionKind::subtraction;
        iv.direction_ref = d.id;
        iv.layer = 1;
        iv.applies_to = AppliesTo::generated_only;
        auto plain = backend->capture_activations({prompt}, {-1});
        auto hooked = backend->capture_activations({prompt}, {-1}, {iv}, dirs);
        for (int site = 0; site < 3; ++site)
            for (int k = 0; k < 32; ++k)
                CHECK(plain.at(0, site, 0)[k] == hooked.at(0, site, 0)[k]);
    }

    SUBCASE("degenerate directions are rejected") {
        RefusalDirection zero;
        zero.vector.assign(32, 0.0f);
        zero.layer = 0;
        zero.finalize();
        DirectionMap dirs{{zero.id, zero}};
        Intervention iv;
        iv.kind = InterventionKind::ablation;
        iv.direction_ref = zero.id;
        CHECK_THROWS_AS(backend->generate(prompt, greedy, {iv}, dirs),
                        ValidationError);
    }

    SUBCASE("config plumbing dispatches through make_backend") {
        auto b = make_backend(json{{"kind", "gguf"},
                                   {"path", fixture("tiny.gguf")},
                                   {"template_style", "raw"}},
                              nullptr);
        CHECK(b->model_id() == "gguf:llama:tiny-test");
        CHECK_THROWS_AS(make_gguf_backend(json{{"kind", "gguf"}}), ValidationError);
    }
}
