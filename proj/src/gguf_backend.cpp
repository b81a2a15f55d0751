// Chat-model adapter for GGUF weight files (llama-style decoder stacks).
// Exposes the same capture/generate surface as every other backend: residual
// sites are the input of each transformer block plus the final pre-readout
// state, and interventions are applied in-stream at those sites for every
// processed token.

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>

#include "sbb/backend.hpp"
#include "sbb/gguf.hpp"
#include "sbb/rng.hpp"
#include "sbb/sampler.hpp"
#include "sbb/spm_tokenizer.hpp"

namespace sbb {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXf;

// Loads a GGUF matrix tensor as (n_out x n_in): the container stores the
// input dimension contiguously, i.e. row-major over output rows.
RowMat load_matrix(const gguf::File & file, const std::string & name,
                   Eigen::Index n_in, Eigen::Index n_out) {
    const auto & info = file.tensor(name);
    if (info.shape.size() != 2 ||
        info.shape[0] != static_cast<std::uint64_t>(n_in) ||
        info.shape[1] != static_cast<std::uint64_t>(n_out))
        throw ValidationError("gguf: tensor '" + name + "' has unexpected shape");
    const std::vector<float> data = file.tensor_f32(name);
    RowMat                   m(n_out, n_in);
    std::copy(data.begin(), data.end(), m.data());
    return m;
}

Vec load_vector(const gguf::File & file, const std::string & name, Eigen::Index n) {
    const auto & info = file.tensor(name);
    if (info.shape.size() != 1 || info.shape[0] != static_cast<std::uint64_t>(n))
        throw ValidationError("gguf: tensor '" + name + "' has unexpected shape");
    const std::vector<float> data = file.tensor_f32(name);
    return Eigen::Map<const Vec>(data.data(), n);
}

struct BlockWeights {
    Vec    attn_norm;
    RowMat wq, wk, wv, wo;
    Vec    ffn_norm;
    RowMat gate, up, down;
};

enum class TemplateStyle { llama2, zephyr, chatml, raw };

TemplateStyle template_style_from_name(const std::string & s) {
    if (s == "llama2") return TemplateStyle::llama2;
    if (s == "zephyr") return TemplateStyle::zephyr;
    if (s == "chatml") return TemplateStyle::chatml;
    if (s == "raw") return TemplateStyle::raw;
    throw ValidationError("unknown chat template style: " + s);
}

class GgufBackend final : public ModelBackend {
  public:
    GgufBackend(const std::string & path, TemplateStyle style)
        : style_(style), tokenizer_(load(path)) {}

    std::string model_id() const override { return model_id_; }
    int         hidden_dim() const override { return static_cast<int>(n_embd_); }
    int         n_sites() const override { return static_cast<int>(blocks_.size()) + 1; }
    int         context_limit() const override { return n_ctx_; }

    TemplatedPrompt chat_template(const std::string & user_text) const override {
        std::string wrapped;
        switch (style_) {
            case TemplateStyle::llama2:
                wrapped = "[INST] " + user_text + " [/INST]";
                break;
            case TemplateStyle::zephyr:
                wrapped = "<|user|>\n" + user_text + "</s>\n<|assistant|>\n";
                break;
            case TemplateStyle::chatml:
                wrapped = "<|im_start|>user\n" + user_text +
                          "<|im_end|>\n<|im_start|>assistant\n";
                break;
            case TemplateStyle::raw: wrapped = user_text; break;
        }
        TemplatedPrompt tp;
        if (add_bos_) tp.token_ids.push_back(tokenizer_.bos_id());
        for (int id : tokenizer_.encode(wrapped)) tp.token_ids.push_back(id);
        if (tp.token_ids.empty()) tp.token_ids.push_back(tokenizer_.bos_id());
        if (static_cast<int>(tp.token_ids.size()) > n_ctx_)
            throw ValidationError("prompt exceeds context limit");
        tp.last_instruction_index = static_cast<int>(tp.token_ids.size()) - 1;
        return tp;
    }

    ActivationTensor capture_activations(
        const std::vector<std::string> & prompts, const std::vector<int> & positions,
        const std::vector<Intervention> & interventions,
        const DirectionMap & directions) const override {
        if (prompts.empty()) throw ValidationError("no prompts to capture");
        if (positions.empty()) throw ValidationError("no positions requested");
        validate_interventions(interventions, directions, hidden_dim(), n_sites());

        ActivationTensor t;
        t.n_prompts = static_cast<int>(prompts.size());
        t.layer_count = n_sites();
        t.positions = positions;
        t.hidden_dim = hidden_dim();
        t.allocate();

        for (int pi = 0; pi < t.n_prompts; ++pi) {
            const auto tp = chat_template(prompts[static_cast<std::size_t>(pi)]);
            const int  len = static_cast<int>(tp.token_ids.size());
            Cache      cache = make_cache(len);
            // sites[site][pos] = residual vector
            std::vector<std::vector<Vec>> sites(
                static_cast<std::size_t>(n_sites()));
            for (int pos = 0; pos < len; ++pos)
                step(tp.token_ids[static_cast<std::size_t>(pos)], pos, len, cache,
                     interventions, directions, &sites, nullptr);
            for (std::size_t xi = 0; xi < positions.size(); ++xi) {
                const int pos = positions[xi];
                const int abs = pos < 0 ? len + pos : pos;
                if (abs < 0 || abs >= len)
                    throw ValidationError("position " + std::to_string(pos) +
                                          " out of range for a " +
                                          std::to_string(len) + "-token prompt");
                for (int site = 0; site < t.layer_count; ++site) {
                    const Vec & src =
                        sites[static_cast<std::size_t>(site)][static_cast<std::size_t>(abs)];
                    std::copy(src.data(), src.data() + n_embd_,
                              t.at(pi, site, static_cast<int>(xi)));
                }
            }
        }
        return t;
    }

    GenerationOutput generate(const std::string & prompt, const DecodeParams & params,
                              const std::vector<Intervention> & interventions,
                              const DirectionMap & directions) const override {
        params.validate();
        validate_interventions(interventions, directions, hidden_dim(), n_sites());

        const auto tp = chat_template(prompt);
        const int  prompt_len = static_cast<int>(tp.token_ids.size());
        const int  room = n_ctx_ - prompt_len;
        const int  budget = std::min(params.max_new_tokens, std::max(room, 0));

        Cache cache = make_cache(prompt_len + budget);
        Vec   logits(n_vocab_);
        for (int pos = 0; pos < prompt_len; ++pos)
            step(tp.token_ids[static_cast<std::size_t>(pos)], pos, prompt_len, cache,
                 interventions, directions, nullptr,
                 pos + 1 == prompt_len ? &logits : nullptr);

        Rng              rng(params.seed);
        std::vector<int> fresh;
        std::vector<float> logit_vec(static_cast<std::size_t>(n_vocab_));
        for (int stepi = 0; stepi < budget; ++stepi) {
            std::copy(logits.data(), logits.data() + n_vocab_, logit_vec.begin());
            const int tok = static_cast<int>(sample_index(logit_vec, params, rng));
            if (tok == tokenizer_.eos_id()) break;
            fresh.push_back(tok);
            const int pos = prompt_len + stepi;
            step(tok, pos, prompt_len, cache, interventions, directions, nullptr,
                 &logits);
        }
        GenerationOutput out;
        out.text = tokenizer_.decode(fresh);
        out.n_new_tokens = static_cast<int>(fresh.size());
        return out;
    }

  private:
    struct Cache {
        // Per block: rows = positions, cols = n_kv_head * head_dim.
        std::vector<RowMat> k, v;
        int                 len = 0;
    };

    Cache make_cache(int capacity) const {
        Cache c;
        const Eigen::Index kv_dim = n_kv_head_ * head_dim_;
        c.k.assign(blocks_.size(), RowMat::Zero(capacity, kv_dim));
        c.v.assign(blocks_.size(), RowMat::Zero(capacity, kv_dim));
        return c;
    }

    // Loads hyperparameters + weights; returns the tokenizer so the member
    // initializer list can build it (tokenizer_ has no default constructor).
    SpmTokenizer load(const std::string & path) {
        gguf::File file = gguf::File::open(path);

        const std::string arch = file.require_string("general.architecture");
        if (arch != "llama")
            throw ValidationError("gguf: architecture '" + arch +
                                  "' is not supported (llama-style stacks only)");
        auto key = [&](const char * suffix) { return arch + "." + suffix; };

        n_embd_ = file.require_int(key("embedding_length"));
        const auto n_blocks = file.require_int(key("block_count"));
        n_head_ = file.require_int(key("attention.head_count"));
        n_kv_head_ = file.get_int(key("attention.head_count_kv"), n_head_);
        n_ff_ = file.require_int(key("feed_forward_length"));
        n_ctx_ = static_cast<int>(file.require_int(key("context_length")));
        rms_eps_ = static_cast<float>(
            file.get_float(key("attention.layer_norm_rms_epsilon"), 1e-5));
        rope_base_ = file.get_float(key("rope.freq_base"), 10000.0);
        if (n_head_ <= 0 || n_embd_ % n_head_ != 0)
            throw ValidationError("gguf: embedding length not divisible by heads");
        head_dim_ = n_embd_ / n_head_;
        rope_dim_ = file.get_int(key("rope.dimension_count"), head_dim_);
        if (n_kv_head_ <= 0 || n_head_ % n_kv_head_ != 0)
            throw ValidationError("gguf: head_count not divisible by head_count_kv");
        if (rope_dim_ <= 0 || rope_dim_ > head_dim_ || rope_dim_ % 2 != 0)
            throw ValidationError("gguf: invalid rope dimension count");

        const auto & embd_info = file.tensor("token_embd.weight");
        if (embd_info.shape.size() != 2 ||
            embd_info.shape[0] != static_cast<std::uint64_t>(n_embd_))
            throw ValidationError("gguf: token_embd.weight has unexpected shape");
        n_vocab_ = static_cast<Eigen::Index>(embd_info.shape[1]);
        embed_ = load_matrix(file, "token_embd.weight", n_embd_, n_vocab_);

        const Eigen::Index kv_dim = n_kv_head_ * head_dim_;
        for (std::int64_t b = 0; b < n_blocks; ++b) {
            const std::string p = "blk." + std::to_string(b) + ".";
            BlockWeights      w;
            w.attn_norm = load_vector(file, p + "attn_norm.weight", n_embd_);
            w.wq = load_matrix(file, p + "attn_q.weight", n_embd_, n_embd_);
            w.wk = load_matrix(file, p + "attn_k.weight", n_embd_, kv_dim);
            w.wv = load_matrix(file, p + "attn_v.weight", n_embd_, kv_dim);
            w.wo = load_matrix(file, p + "attn_output.weight", n_embd_, n_embd_);
            w.ffn_norm = load_vector(file, p + "ffn_norm.weight", n_embd_);
            w.gate = load_matrix(file, p + "ffn_gate.weight", n_embd_, n_ff_);
            w.up = load_matrix(file, p + "ffn_up.weight", n_embd_, n_ff_);
            w.down = load_matrix(file, p + "ffn_down.weight", n_ff_, n_embd_);
            blocks_.push_back(std::move(w));
        }

        output_norm_ = load_vector(file, "output_norm.weight", n_embd_);
        // Readout head; tied to the embedding table when absent.
        if (file.has_tensor("output.weight"))
            wout_ = load_matrix(file, "output.weight", n_embd_, n_vocab_);
        else
            wout_ = embed_;

        add_bos_ = file.get_bool("tokenizer.ggml.add_bos_token", true);
        std::string name = file.has("general.name")
                               ? file.require_string("general.name")
                               : std::filesystem::path(path).stem().string();
        model_id_ = "gguf:" + arch + ":" + name;
        return SpmTokenizer::from_gguf(file);
    }

    // In-stream intervention hook on one residual vector.
    void hook(Vec & h, int site, int pos, int prompt_len,
              const std::vector<Intervention> & ivs,
              const DirectionMap & dirs) const {
        for (const auto & iv : ivs) {
            if (iv.kind == InterventionKind::none) continue;
            if (iv.kind == InterventionKind::subtraction && iv.layer != site)
                continue;
            if (iv.applies_to == AppliesTo::generated_only && pos < prompt_len)
                continue;
            const RefusalDirection & d = dirs.at(iv.direction_ref);
            if (iv.kind == InterventionKind::ablation) {
                double dot = 0.0, sq = 0.0;
                for (Eigen::Index k = 0; k < n_embd_; ++k) {
                    const double u = d.unit[static_cast<std::size_t>(k)];
                    dot += u * h[k];
                    sq += u * u;
                }
                const double proj = dot / sq;
                for (Eigen::Index k = 0; k < n_embd_; ++k)
                    h[k] -= static_cast<float>(proj *
                                               d.unit[static_cast<std::size_t>(k)]);
            } else {
                for (Eigen::Index k = 0; k < n_embd_; ++k)
                    h[k] -= d.vector[static_cast<std::size_t>(k)];
            }
        }
    }

    Vec rms_norm(const Vec & x, const Vec & w) const {
        double ss = 0.0;
        for (Eigen::Index k = 0; k < x.size(); ++k)
            ss += static_cast<double>(x[k]) * x[k];
        const float inv = 1.0f / std::sqrt(static_cast<float>(
                                               ss / static_cast<double>(x.size())) +
                                           rms_eps_);
        return (x.array() * inv * w.array()).matrix();
    }

    // Rotates adjacent coordinate pairs of each head's first rope_dim_ dims.
    void rope(Vec & x, Eigen::Index heads, int pos) const {
        for (Eigen::Index hh = 0; hh < heads; ++hh) {
            float * v = x.data() + hh * head_dim_;
            for (Eigen::Index i = 0; i * 2 < rope_dim_; ++i) {
                const double theta =
                    static_cast<double>(pos) *
                    std::pow(rope_base_, -2.0 * static_cast<double>(i) /
                                             static_cast<double>(rope_dim_));
                const float c = static_cast<float>(std::cos(theta));
                const float s = static_cast<float>(std::sin(theta));
                const float x0 = v[2 * i], x1 = v[2 * i + 1];
                v[2 * i] = x0 * c - x1 * s;
                v[2 * i + 1] = x0 * s + x1 * c;
            }
        }
    }

    // Processes one token at absolute position `pos`. Records per-site
    // residuals into `sites` when given; writes readout logits when asked.
    void step(int token, int pos, int prompt_len, Cache & cache,
              const std::vector<Intervention> & ivs, const DirectionMap & dirs,
              std::vector<std::vector<Vec>> * sites, Vec * logits_out) const {
        if (token < 0 || token >= n_vocab_)
            throw ValidationError("token id out of range for model vocabulary");
        Vec h = embed_.row(token).transpose();

        const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim_));
        const Eigen::Index group = n_head_ / n_kv_head_;

        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            const int site = static_cast<int>(b);
            hook(h, site, pos, prompt_len, ivs, dirs);
            if (sites) (*sites)[static_cast<std::size_t>(site)].push_back(h);

            const BlockWeights & w = blocks_[b];
            const Vec            a = rms_norm(h, w.attn_norm);
            Vec                  q = w.wq * a;
            Vec                  k = w.wk * a;
            const Vec            v = w.wv * a;
            rope(q, n_head_, pos);
            rope(k, n_kv_head_, pos);
            cache.k[b].row(pos) = k.transpose();
            cache.v[b].row(pos) = v.transpose();

            Vec attn_out(n_embd_);
            for (Eigen::Index hh = 0; hh < n_head_; ++hh) {
                const Eigen::Index kv = hh / group;
                const auto q_h = q.segment(hh * head_dim_, head_dim_);
                Eigen::VectorXf    score(pos + 1);
                for (int t = 0; t <= pos; ++t)
                    score[t] = scale * q_h.dot(cache.k[b]
                                                   .row(t)
                                                   .segment(kv * head_dim_, head_dim_)
                                                   .transpose());
                const float m = score.maxCoeff();
                double      z = 0.0;
                for (int t = 0; t <= pos; ++t) {
                    score[t] = std::exp(score[t] - m);
                    z += score[t];
                }
                Vec acc = Vec::Zero(head_dim_);
                for (int t = 0; t <= pos; ++t)
                    acc += (score[t] / static_cast<float>(z)) *
                           cache.v[b].row(t).segment(kv * head_dim_, head_dim_).transpose();
                attn_out.segment(hh * head_dim_, head_dim_) = acc;
            }
            h += w.wo * attn_out;

            const Vec n2 = rms_norm(h, w.ffn_norm);
            Vec       g = w.gate * n2;
            const Vec u = w.up * n2;
            for (Eigen::Index k2 = 0; k2 < n_ff_; ++k2)
                g[k2] = g[k2] / (1.0f + std::exp(-g[k2])) * u[k2];  // SwiGLU
            h += w.down * g;
        }

        const int final_site = static_cast<int>(blocks_.size());
        hook(h, final_site, pos, prompt_len, ivs, dirs);
        if (sites) (*sites)[static_cast<std::size_t>(final_site)].push_back(h);

        if (logits_out) *logits_out = wout_ * rms_norm(h, output_norm_);
        cache.len = pos + 1;
    }

    TemplateStyle style_;
    Eigen::Index  n_embd_ = 0, n_head_ = 0, n_kv_head_ = 0, head_dim_ = 0,
                 n_ff_ = 0, n_vocab_ = 0, rope_dim_ = 0;
    int    n_ctx_ = 0;
    float  rms_eps_ = 1e-5f;
    double rope_base_ = 10000.0;

    RowMat                    embed_, wout_;
    std::vector<BlockWeights> blocks_;
    Vec                       output_norm_;
    bool                      add_bos_ = true;
    std::string               model_id_;
    SpmTokenizer              tokenizer_;
};

} // namespace

std::unique_ptr<ModelBackend> make_gguf_backend(const json & config) {
    if (!config.contains("path"))
        throw ValidationError("gguf backend config requires a 'path'");
    const std::string path = config.at("path").get<std::string>();
    const TemplateStyle style = template_style_from_name(
        config.value("template_style", std::string("llama2")));
    return std::make_unique<GgufBackend>(path, style);
}

} // namespace sbb
