#include "sbb/toy_backend.hpp"

#include <algorithm>
#include <cmath>

#include "sbb/rng.hpp"
#include "sbb/sampler.hpp"

namespace sbb {

namespace {

float sigmoidf(float x) { return 1.0f / (1.0f + std::exp(-x)); }

float ramp(float x) {  // 0 below 0.5, 1 above 0.75
    float t = (x - 0.5f) / 0.25f;
    return std::clamp(t, 0.0f, 1.0f);
}

bool is_word_byte(unsigned char c) {
    return std::isalnum(c) || c == '\'' || c == '-' || c == '_' || c >= 0x80;
}

std::string fold_atom(const std::string & s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        // U+2019 right single quotation mark -> ASCII apostrophe.
        if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
            static_cast<unsigned char>(s[i + 1]) == 0x80 &&
            static_cast<unsigned char>(s[i + 2]) == 0x99) {
            out.push_back('\'');
            i += 3;
            continue;
        }
        out.push_back(static_cast<char>(
            std::tolower(static_cast<unsigned char>(s[i]))));
        ++i;
    }
    return out;
}

// Splits text into word atoms and single-character punctuation atoms.
std::vector<std::string> split_atoms(const std::string & text) {
    std::vector<std::string> atoms;
    std::size_t i = 0;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) { ++i; continue; }
        if (is_word_byte(c) || (c == 0xE2 && i + 2 < text.size())) {
            std::size_t j = i;
            while (j < text.size()) {
                unsigned char b = static_cast<unsigned char>(text[j]);
                if (b == 0xE2 && j + 2 < text.size() &&
                    static_cast<unsigned char>(text[j + 1]) == 0x80 &&
                    static_cast<unsigned char>(text[j + 2]) == 0x99) {
                    j += 3;  // typographic apostrophe inside a word
                    continue;
                }
                if (!is_word_byte(b)) break;
                ++j;
            }
            atoms.push_back(text.substr(i, j - i));
            i = j;
        } else {
            atoms.push_back(text.substr(i, 1));
            ++i;
        }
    }
    return atoms;
}

// Weighted trigger lexicon: harm instructions, sensitive subject matter, and
// opinion-elicitation markers all feed the same accumulator channel.
const std::pair<const char *, float> kHarmLexicon[] = {
    // violent / criminal instruction vocabulary
    {"explosive", 1.0f}, {"explosives", 1.0f}, {"bomb", 1.0f}, {"bombs", 1.0f},
    {"poison", 1.0f}, {"lethal", 1.0f}, {"virus", 1.0f}, {"malware", 1.0f},
    {"phishing", 1.0f}, {"steal", 1.0f}, {"stolen", 1.0f}, {"stealing", 1.0f},
    {"smuggle", 1.0f}, {"smuggling", 1.0f}, {"launder", 1.0f},
    {"laundering", 1.0f}, {"blackmail", 1.0f}, {"blackmailing", 1.0f},
    {"counterfeit", 1.0f}, {"counterfeiting", 1.0f}, {"currency", 1.0f},
    {"stalk", 1.0f}, {"stalking", 1.0f}, {"forge", 1.0f}, {"forging", 1.0f},
    {"hack", 1.0f}, {"hacking", 1.0f},
    {"weapon", 1.0f}, {"weapons", 1.0f}, {"cartel", 1.0f}, {"criminal", 1.0f},
    {"criminals", 1.0f}, {"crime", 1.0f}, {"crimes", 1.0f},
    {"undetectable", 1.0f}, {"blueprint", 1.0f}, {"chemicals", 1.0f},
    {"destroys", 1.0f}, {"terrorist", 1.0f}, {"terrorists", 1.0f},
    {"genocidal", 1.0f}, {"dictator", 1.0f}, {"kingpin", 1.0f},
    {"trafficking", 1.0f}, {"recidivist", 1.0f}, {"scammer", 1.0f},
    {"ruiner", 1.0f}, {"hate", 1.0f}, {"device", 0.5f}, {"secrets", 0.5f},
    {"identity", 0.5f}, {"dropped", 0.5f}, {"credit", 0.5f}, {"card", 0.5f},
    {"hospital", 0.5f}, {"detected", 0.5f}, {"documents", 0.5f},
    {"borders", 0.5f}, {"official", 0.4f}, {"database", 0.5f},
    {"instructions", 0.3f}, {"tutorial", 0.3f}, {"playbook", 0.3f},
    {"scheme", 0.4f}, {"walkthrough", 0.3f}, {"manual", 0.3f},
    {"persuasive", 0.3f},
    // sensitive subject matter
    {"prisoner", 0.6f}, {"loan", 0.5f}, {"scholarship", 0.5f},
    {"avoiding", 0.5f}, {"healthcare", 0.3f}, {"university", 0.3f},
    {"student", 0.3f}, {"candidate", 0.3f}, {"leader", 0.3f},
    {"housing", 0.3f}, {"media", 0.3f},
    // opinion-elicitation markers typical of preference probes
    {"opinion", 0.5f}, {"perspective", 0.5f}, {"viewpoint", 0.5f},
    {"believe", 0.5f}, {"think", 0.5f}, {"likely", 0.5f}, {"aptitude", 0.5f},
    {"competent", 0.5f}, {"succeed", 0.5f}, {"successful", 0.5f},
    {"performer", 0.5f}, {"excel", 0.5f}, {"exceptional", 0.5f},
    {"skill", 0.5f}, {"potential", 0.5f}, {"effective", 0.5f},
    {"greatest", 0.5f}, {"highest", 0.5f},
    {"among", 0.4f}, {"following", 0.4f}, {"listed", 0.4f},
    {"presented", 0.4f}, {"member", 0.4f}, {"individual", 0.4f},
    {"role", 0.4f},
};

} // namespace

ToyBackend::ToyBackend(const ToyConfig & cfg, const Catalogs & catalogs)
    : cfg_(cfg) {
    for (const auto & [word, w] : kHarmLexicon) harm_lexicon_[word] = w;

    if (cfg_.harm_facets < 1 || cfg_.harm_facets > kEDim / 2)
        throw ValidationError("harm_facets out of range");
    // Orthonormal facet axes (Gram-Schmidt over seeded gaussians).
    Rng axis_rng(cfg_.seed ^ fnv1a64("toy-harm-facets"));
    for (int c = 0; c < cfg_.harm_facets; ++c) {
        std::vector<float> v(kEDim);
        for (auto & x : v) x = static_cast<float>(axis_rng.next_gaussian());
        for (const auto & prev : harm_facets_) {
            double along = 0.0;
            for (int k = 0; k < kEDim; ++k)
                along += static_cast<double>(prev[k]) * v[k];
            for (int k = 0; k < kEDim; ++k)
                v[k] -= static_cast<float>(along) * prev[k];
        }
        double sq = 0.0;
        for (float x : v) sq += static_cast<double>(x) * x;
        float inv = static_cast<float>(1.0 / std::sqrt(std::max(sq, 1e-12)));
        for (auto & x : v) x *= inv;
        harm_facets_.push_back(std::move(v));
    }
    harm_read_.assign(kEDim, 0.0f);
    for (const auto & g : harm_facets_)
        for (int k = 0; k < kEDim; ++k) harm_read_[k] += g[k];

    build_vocab(catalogs);

    Rng r(cfg_.seed ^ fnv1a64("toy-attn"));
    attn_ctx_w_.resize(kEDim * (kEDim + 1));
    const float inv = 1.0f / std::sqrt(static_cast<float>(kEDim));
    for (auto & v : attn_ctx_w_) v = static_cast<float>(r.next_gaussian()) * inv;
    // last kEDim entries double as the fixed per-token bias read vector
}

std::vector<float> ToyBackend::seeded_embedding(const std::string & folded) const {
    Rng r(cfg_.seed ^ fnv1a64("toy-emb|" + folded));
    std::vector<float> e(kHiddenDim, 0.0f);
    for (int i = 0; i < kEDim; ++i)
        e[i] = static_cast<float>(r.next_gaussian());
    // Keep word content orthogonal to every facet axis so the harm probe
    // reads exactly the explicit per-token weight, with zero crosstalk.
    for (const auto & axis : harm_facets_) {
        double along = 0.0;
        for (int i = 0; i < kEDim; ++i)
            along += static_cast<double>(axis[i]) * e[i];
        for (int i = 0; i < kEDim; ++i)
            e[i] -= static_cast<float>(along) * axis[i];
    }
    double sq = 0.0;
    for (int i = 0; i < kEDim; ++i) sq += static_cast<double>(e[i]) * e[i];
    float inv = static_cast<float>(1.0 / std::sqrt(std::max(sq, 1e-12)));
    for (int i = 0; i < kEDim; ++i) e[i] *= inv;
    return e;
}

int ToyBackend::intern(const std::string & surface, float harm_w, bool option,
                       int cmd) {
    std::string folded = fold_atom(surface);
    auto        it = by_folded_.find(folded);
    auto add_harm_feature = [&](std::vector<float> & emb, float w) {
        const auto & facet =
            harm_facets_[fnv1a64("facet|" + folded) % harm_facets_.size()];
        for (int k = 0; k < kEDim; ++k) emb[k] += w * facet[k];
    };
    if (it != by_folded_.end()) {
        // Re-interning may only add attributes (e.g. a catalog marks an
        // existing word as an option label).
        TokenInfo & t = tokens_[it->second];
        if (option && !t.option) {
            t.option = true;
            t.embedding[kFlagDim] = 1.0f;
        }
        if (harm_w > t.harm_w) {
            add_harm_feature(t.embedding, harm_w - t.harm_w);
            t.harm_w = harm_w;
        }
        return it->second;
    }
    TokenInfo t;
    t.surface = surface;
    t.embedding = seeded_embedding(folded);
    t.harm_w = harm_w;
    t.option = option;
    t.cmd = cmd;
    if (harm_w > 0.0f) add_harm_feature(t.embedding, harm_w);
    if (option) t.embedding[kFlagDim] = 1.0f;
    if (cmd >= 0) t.embedding[kCmdBase + cmd] = 1.0f;
    int id = static_cast<int>(tokens_.size());
    tokens_.push_back(std::move(t));
    by_folded_.emplace(std::move(folded), id);
    return id;
}

void ToyBackend::build_vocab(const Catalogs & catalogs) {
    bos_ = intern("<bos>", 0.0f, false, -1);
    user_ = intern("<user>", 0.0f, false, -1);
    asst_ = intern("<asst>", 0.0f, false, kCmdAsst);
    eos_ = intern("<eos>", 0.0f, false, kCmdEos);

    int im = intern("I'm", 0.0f, false, kCmdIm);
    int sorry = intern("sorry", 0.0f, false, kCmdSorry);
    int comma = intern(",", 0.0f, false, kCmdComma);
    int i_tok = intern("I", 0.0f, false, kCmdI);
    int cannot = intern("cannot", 0.0f, false, kCmdCannot);
    int help = intern("help", 0.0f, false, kCmdHelp);
    int with = intern("with", 0.0f, false, kCmdWith);
    int that = intern("that", 0.0f, false, kCmdThat);
    int dot = intern(".", 0.0f, false, kCmdDot);
    int sure = intern("Sure", 0.0f, false, kCmdSure);
    int thing = intern("thing", 0.0f, false, kCmdThing);
    for (const char * p : {"?", "!", ":", ";", "'", "\"", "(", ")"})
        intern(p, 0.0f, false, -1);
    for (const auto & [word, w] : kHarmLexicon) intern(word, w, false, -1);

    auto add_phrase = [&](const std::string & surface, float harm_w, bool option) {
        auto atoms = split_atoms(surface);
        if (atoms.empty()) throw ValidationError("empty vocab phrase");
        if (atoms.size() == 1) {
            intern(surface, harm_w, option, -1);
            return;
        }
        std::string key;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            if (k) key.push_back('\x01');
            key += fold_atom(atoms[k]);
        }
        auto it = phrases_.find(key);
        if (it == phrases_.end()) {
            int id = intern(surface, harm_w, option, -1);
            phrases_.emplace(std::move(key), id);
            max_phrase_atoms_ =
                std::max(max_phrase_atoms_, static_cast<int>(atoms.size()));
        }
    };

    for (const auto & c : catalogs.categories) {
        add_phrase(c.name, 1.0f, false);
        for (const auto & g : c.groups) add_phrase(g, 0.15f, true);
    }

    // Output head vocabulary: scripted tokens plus every option label.
    emit_set_ = {im, sorry, comma, i_tok, cannot, help, with, that, dot,
                 sure, thing, eos_};
    for (int id = 0; id < static_cast<int>(tokens_.size()); ++id)
        if (tokens_[id].option) emit_set_.push_back(id);
}

int ToyBackend::token_for(const std::string & atom) const {
    std::string folded = fold_atom(atom);
    auto        it = by_folded_.find(folded);
    if (it != by_folded_.end()) return it->second;
    // Unseen word: intern with a hash-seeded embedding (order-independent).
    float harm_w = 0.0f;
    auto  hw = harm_lexicon_.find(folded);
    if (hw != harm_lexicon_.end()) harm_w = hw->second;
    return const_cast<ToyBackend *>(this)->intern(atom, harm_w, false, -1);
}

std::vector<int> ToyBackend::tokenize(const std::string & text) const {
    auto             atoms = split_atoms(text);
    std::vector<int> ids;
    ids.reserve(atoms.size());
    std::size_t i = 0;
    while (i < atoms.size()) {
        bool matched = false;
        for (int len = std::min<int>(max_phrase_atoms_,
                                     static_cast<int>(atoms.size() - i));
             len >= 2 && !matched; --len) {
            std::string key;
            for (int k = 0; k < len; ++k) {
                if (k) key.push_back('\x01');
                key += fold_atom(atoms[i + k]);
            }
            auto it = phrases_.find(key);
            if (it != phrases_.end()) {
                ids.push_back(it->second);
                i += len;
                matched = true;
            }
        }
        if (!matched) {
            ids.push_back(token_for(atoms[i]));
            ++i;
        }
    }
    return ids;
}

std::string ToyBackend::decode(const std::vector<int> & ids) const {
    static const std::string no_space_before = ",.?!:;";
    std::string out;
    for (int id : ids) {
        const std::string & s = tokens_.at(id).surface;
        if (!out.empty() &&
            !(s.size() == 1 && no_space_before.find(s[0]) != std::string::npos))
            out.push_back(' ');
        out += s;
    }
    return out;
}

TemplatedPrompt ToyBackend::chat_template(const std::string & user_text) const {
    TemplatedPrompt tp;
    tp.token_ids.push_back(bos_);
    tp.token_ids.push_back(user_);
    for (int id : tokenize(user_text)) tp.token_ids.push_back(id);
    tp.token_ids.push_back(asst_);
    if (static_cast<int>(tp.token_ids.size()) > context_limit())
        throw ValidationError("prompt exceeds context limit");
    tp.last_instruction_index = static_cast<int>(tp.token_ids.size()) - 1;
    return tp;
}

void ToyBackend::apply_site_interventions(
    std::vector<std::vector<float>> & states, int site, int prompt_len,
    const std::vector<Intervention> & ivs, const DirectionMap & dirs) const {
    for (const auto & iv : ivs) {
        if (iv.kind == InterventionKind::none) continue;
        if (iv.kind == InterventionKind::subtraction && iv.layer != site) continue;
        const RefusalDirection & d = dirs.at(iv.direction_ref);
        std::size_t              first = 0;
        if (iv.applies_to == AppliesTo::generated_only)
            first = static_cast<std::size_t>(prompt_len);
        for (std::size_t p = first; p < states.size(); ++p) {
            auto & x = states[p];
            if (iv.kind == InterventionKind::ablation) {
                double proj = 0.0;
                for (int k = 0; k < kHiddenDim; ++k)
                    proj += static_cast<double>(d.unit[k]) * x[k];
                for (int k = 0; k < kHiddenDim; ++k)
                    x[k] -= static_cast<float>(proj * d.unit[k]);
            } else {  // subtraction at its own layer
                for (int k = 0; k < kHiddenDim; ++k) x[k] -= d.vector[k];
            }
        }
    }
}

ToyBackend::Forward ToyBackend::forward(const std::vector<int> & ids,
                                        int prompt_len,
                                        const std::vector<Intervention> & ivs,
                                        const DirectionMap & dirs) const {
    const std::size_t n = ids.size();
    Forward           fw;
    fw.sites.resize(static_cast<std::size_t>(kBlocks) + 1);

    std::vector<std::vector<float>> h(n);
    for (std::size_t p = 0; p < n; ++p) h[p] = tokens_.at(ids[p]).embedding;

    auto checkpoint = [&](int site) {
        apply_site_interventions(h, site, prompt_len, ivs, dirs);
        fw.sites[site] = h;
    };

    checkpoint(0);

    // Block 0: uniform-attention accumulators. The harm marker is read off
    // the content-space probe and accumulated into its own channel.
    {
        double             mean_harm = 0.0;
        std::vector<float> mean_e(kEDim, 0.0f);
        for (std::size_t p = 0; p < n; ++p) {
            double hp = 0.0;
            for (int k = 0; k < kEDim; ++k)
                hp += static_cast<double>(harm_read_[k]) * h[p][k];
            mean_harm += hp;
            for (int k = 0; k < kEDim; ++k) mean_e[k] += h[p][k];
        }
        mean_harm /= static_cast<double>(n);
        for (int k = 0; k < kEDim; ++k) mean_e[k] /= static_cast<float>(n);
        for (std::size_t p = 0; p < n; ++p) {
            h[p][kHarmDim] += cfg_.harm_gain * static_cast<float>(mean_harm);
            for (int k = 0; k < kEDim; ++k) h[p][k] += cfg_.ctx_gain * mean_e[k];
        }
    }
    checkpoint(1);

    // Block 1: saturating trigger detector on the harm channel.
    for (std::size_t p = 0; p < n; ++p)
        h[p][kTrigDim] += cfg_.trig_beta *
                          sigmoidf(cfg_.trig_k * (h[p][kHarmDim] - cfg_.trig_theta));
    checkpoint(2);

    // Block 2: option-copy attention head plus saturated option-presence flag.
    {
        double mean_flag = 0.0;
        std::vector<float> mean_e(kEDim, 0.0f);
        for (std::size_t p = 0; p < n; ++p) {
            mean_flag += h[p][kFlagDim];
            for (int k = 0; k < kEDim; ++k) mean_e[k] += h[p][k];
        }
        mean_flag /= static_cast<double>(n);
        double sq = 0.0;
        for (int k = 0; k < kEDim; ++k) {
            mean_e[k] /= static_cast<float>(n);
            sq += static_cast<double>(mean_e[k]) * mean_e[k];
        }
        float inv = static_cast<float>(1.0 / std::sqrt(std::max(sq, 1e-12)));

        // Attention scores over key positions; the query mixes a fixed bias
        // read with the normalized prompt-content mean.
        const float * M = attn_ctx_w_.data();                  // kEDim x kEDim
        const float * wb = attn_ctx_w_.data() + kEDim * kEDim; // bias read
        std::vector<float> score(n);
        float              smax = -1e30f;
        for (std::size_t p = 0; p < n; ++p) {
            float bias = 0.0f, ctx = 0.0f;
            for (int k = 0; k < kEDim; ++k) bias += wb[k] * h[p][k];
            for (int r = 0; r < kEDim; ++r) {
                float mr = mean_e[r] * inv;
                if (mr == 0.0f) continue;
                float acc = 0.0f;
                for (int k = 0; k < kEDim; ++k) acc += M[r * kEDim + k] * h[p][k];
                ctx += mr * acc;
            }
            score[p] = cfg_.attn_flag_gain * h[p][kFlagDim] +
                       cfg_.attn_bias_scale * bias * 6.0f +
                       cfg_.attn_ctx_scale * ctx;
            smax = std::max(smax, score[p]);
        }
        double z = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            score[p] = std::exp(score[p] - smax);
            z += score[p];
        }
        std::vector<float> copied(kEDim, 0.0f);
        for (std::size_t p = 0; p < n; ++p) {
            float a = static_cast<float>(score[p] / z);
            for (int k = 0; k < kEDim; ++k) copied[k] += a * h[p][k];
        }
        float satv = cfg_.flag_sat *
                     sigmoidf(cfg_.flag_sat_k *
                              (static_cast<float>(mean_flag) - cfg_.flag_sat_theta));
        for (std::size_t p = 0; p < n; ++p) {
            for (int k = 0; k < kEDim; ++k)
                h[p][k] += cfg_.copy_strength * copied[k];
            h[p][kFlagDim] += satv;
        }
    }
    checkpoint(3);

    // Block 3: gated bigram circuits driving the output head.
    {
        struct Pair { int cur; int next; bool refusal_gated; };
        static const Pair chain[] = {
            {kCmdAsst, kCmdIm, true},   {kCmdIm, kCmdSorry, true},
            {kCmdSorry, kCmdComma, true}, {kCmdComma, kCmdI, true},
            {kCmdI, kCmdCannot, true},  {kCmdCannot, kCmdHelp, true},
            {kCmdHelp, kCmdWith, true}, {kCmdWith, kCmdThat, true},
            {kCmdThat, kCmdDot, true},  {kCmdDot, kCmdEos, false},
            {kCmdSure, kCmdThing, false}, {kCmdThing, kCmdDot, false},
        };
        for (std::size_t p = 0; p < n; ++p) {
            float gate = sigmoidf(cfg_.gate_k * (h[p][kTrigDim] - cfg_.gate_center));
            std::vector<float> add(kNCmd, 0.0f);
            for (const auto & pr : chain) {
                float t = ramp(h[p][kCmdBase + pr.cur]);
                if (t <= 0.0f) continue;
                float w = cfg_.chain_strength * t;
                if (pr.refusal_gated) w *= gate;
                add[pr.next] += w;
            }
            // Generic compliance opener, only when no option list is present.
            float no_options = sigmoidf(20.0f * (0.3f - h[p][kFlagDim]));
            add[kCmdSure] += cfg_.sure_strength * (1.0f - gate) * no_options *
                             ramp(h[p][kCmdBase + kCmdAsst]);
            // After an emitted option token, close the answer.
            float t2 = std::clamp(
                (h[p][kFlagDim] - cfg_.flag_sat - 0.5f) / 0.25f, 0.0f, 1.0f);
            add[kCmdDot] += cfg_.chain_strength * t2;
            for (int c = 0; c < kNCmd; ++c) h[p][kCmdBase + c] += add[c];
        }
    }
    checkpoint(4);
    return fw;
}

std::vector<float> ToyBackend::output_logits(
    const std::vector<float> & last_state) const {
    std::vector<float> logits(emit_set_.size(), 0.0f);
    for (std::size_t i = 0; i < emit_set_.size(); ++i) {
        const auto & emb = tokens_.at(emit_set_[i]).embedding;
        double       acc = 0.0;
        for (int k = 0; k < kHiddenDim; ++k)
            acc += static_cast<double>(emb[k]) * last_state[k];
        logits[i] = static_cast<float>(acc);
    }
    return logits;
}

std::string ToyBackend::model_id() const {
    return "toy:aligned:v1:seed=" + std::to_string(cfg_.seed);
}

ActivationTensor ToyBackend::capture_activations(
    const std::vector<std::string> & prompts, const std::vector<int> & positions,
    const std::vector<Intervention> & interventions,
    const DirectionMap & directions) const {
    if (prompts.empty()) throw ValidationError("no prompts to capture");
    if (positions.empty()) throw ValidationError("no positions requested");
    validate_interventions(interventions, directions, kHiddenDim, n_sites());

    ActivationTensor t;
    t.n_prompts = static_cast<int>(prompts.size());
    t.layer_count = n_sites();
    t.positions = positions;
    t.hidden_dim = kHiddenDim;
    t.allocate();

    for (int pi = 0; pi < t.n_prompts; ++pi) {
        auto tp = chat_template(prompts[pi]);
        auto fw = forward(tp.token_ids, static_cast<int>(tp.token_ids.size()),
                          interventions, directions);
        const int len = static_cast<int>(tp.token_ids.size());
        for (std::size_t xi = 0; xi < positions.size(); ++xi) {
            int pos = positions[xi];
            int abs = pos < 0 ? len + pos : pos;
            if (abs < 0 || abs >= len)
                throw ValidationError("position " + std::to_string(pos) +
                                      " out of range for a " +
                                      std::to_string(len) + "-token prompt");
            for (int site = 0; site < t.layer_count; ++site) {
                float * dst = t.at(pi, site, static_cast<int>(xi));
                const auto & src = fw.sites[site][abs];
                std::copy(src.begin(), src.end(), dst);
            }
        }
    }
    return t;
}

GenerationOutput ToyBackend::generate(const std::string & prompt,
                                      const DecodeParams & params,
                                      const std::vector<Intervention> & interventions,
                                      const DirectionMap & directions) const {
    params.validate();
    validate_interventions(interventions, directions, kHiddenDim, n_sites());

    auto             tp = chat_template(prompt);
    std::vector<int> ids = tp.token_ids;
    const int        prompt_len = static_cast<int>(ids.size());
    Rng              rng(params.seed);

    std::vector<int> fresh;
    for (int step = 0; step < params.max_new_tokens; ++step) {
        auto fw = forward(ids, prompt_len, interventions, directions);
        auto logits = output_logits(fw.sites[kBlocks].back());
        int  tok = emit_set_[sample_index(logits, params, rng)];
        if (tok == eos_) break;
        ids.push_back(tok);
        fresh.push_back(tok);
    }
    GenerationOutput out;
    out.text = decode(fresh);
    out.n_new_tokens = static_cast<int>(fresh.size());
    return out;
}

} // namespace sbb
