#include "sbb/spm_tokenizer.hpp"

#include <algorithm>
#include <queue>

#include "sbb/gguf.hpp"
#include "sbb/util.hpp"

namespace sbb {

namespace {

constexpr const char * kSpaceMark = "\xE2\x96\x81";  // U+2581 LOWER ONE EIGHTH BLOCK

// Length of the UTF-8 sequence starting at s[i] (1 for continuation/invalid
// bytes so malformed input still round-trips byte-by-byte).
std::size_t utf8_len(const std::string & s, std::size_t i) {
    const auto b = static_cast<unsigned char>(s[i]);
    std::size_t n = 1;
    if ((b & 0xE0) == 0xC0) n = 2;
    else if ((b & 0xF0) == 0xE0) n = 3;
    else if ((b & 0xF8) == 0xF0) n = 4;
    return std::min(n, s.size() - i);
}

int parse_byte_piece(const std::string & text) {
    // "<0xAB>" -> 0xAB
    if (text.size() != 6 || text.rfind("<0x", 0) != 0 || text.back() != '>')
        return -1;
    int v = 0;
    for (int k = 3; k < 5; ++k) {
        const char c = text[static_cast<std::size_t>(k)];
        int digit;
        if (c >= '0' && c <= '9') digit = c - '0';
        else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
        else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
        else return -1;
        v = v * 16 + digit;
    }
    return v;
}

} // namespace

SpmTokenizer::SpmTokenizer(std::vector<Piece> pieces, int unk_id, int bos_id,
                           int eos_id, bool add_space_prefix)
    : pieces_(std::move(pieces)), unk_id_(unk_id), bos_id_(bos_id),
      eos_id_(eos_id), add_space_prefix_(add_space_prefix) {
    if (pieces_.empty()) throw ValidationError("tokenizer: empty vocabulary");
    auto in_range = [&](int id) {
        return id >= 0 && id < static_cast<int>(pieces_.size());
    };
    if (!in_range(unk_id_) || !in_range(bos_id_) || !in_range(eos_id_))
        throw ValidationError("tokenizer: special token id out of range");

    byte_tokens_.assign(256, -1);
    for (int id = 0; id < static_cast<int>(pieces_.size()); ++id) {
        const Piece & p = pieces_[static_cast<std::size_t>(id)];
        switch (p.type) {
            case TokenType::byte: {
                const int b = parse_byte_piece(p.text);
                if (b < 0)
                    throw ValidationError("tokenizer: malformed byte piece '" +
                                          p.text + "'");
                byte_tokens_[static_cast<std::size_t>(b)] = id;
                break;
            }
            case TokenType::control:
            case TokenType::user_defined:
                // Matched whole against the raw text, never via merging.
                specials_.emplace_back(p.text, id);
                break;
            case TokenType::normal:
                by_text_.emplace(p.text, id);
                break;
            default: break;  // unknown/unused: not directly matchable
        }
    }
    std::sort(specials_.begin(), specials_.end(), [](const auto & a, const auto & b) {
        if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
        return a.first < b.first;
    });
}

SpmTokenizer SpmTokenizer::from_gguf(const gguf::File & file) {
    const std::string model = file.require_string("tokenizer.ggml.model");
    if (model != "llama")
        throw ValidationError(
            "tokenizer: vocabulary model '" + model +
            "' is not supported (only SentencePiece-style 'llama' "
            "vocabularies are implemented)");

    const auto & tokens = file.value("tokenizer.ggml.tokens").as_array();
    const auto & scores = file.value("tokenizer.ggml.scores").as_array();
    const auto & types = file.value("tokenizer.ggml.token_type").as_array();
    if (tokens.size() != scores.size() || tokens.size() != types.size())
        throw ValidationError("tokenizer: tokens/scores/types length mismatch");

    std::vector<Piece> pieces;
    pieces.reserve(tokens.size());
    for (std::size_t k = 0; k < tokens.size(); ++k) {
        Piece p;
        p.text = tokens[k].as_string();
        p.score = static_cast<float>(scores[k].as_float());
        p.type = static_cast<TokenType>(types[k].as_int());
        pieces.push_back(std::move(p));
    }

    const int unk = static_cast<int>(file.get_int("tokenizer.ggml.unknown_token_id", 0));
    const int bos = static_cast<int>(file.get_int("tokenizer.ggml.bos_token_id", 1));
    const int eos = static_cast<int>(file.get_int("tokenizer.ggml.eos_token_id", 2));
    const bool space_prefix = file.get_bool("tokenizer.ggml.add_space_prefix", true);
    return SpmTokenizer(std::move(pieces), unk, bos, eos, space_prefix);
}

const SpmTokenizer::Piece & SpmTokenizer::piece(int id) const {
    if (id < 0 || id >= static_cast<int>(pieces_.size()))
        throw ValidationError("tokenizer: token id out of range");
    return pieces_[static_cast<std::size_t>(id)];
}

// Greedy highest-score bigram merge over the symbol list, exactly the
// SentencePiece unigram-merge procedure: adjacent symbol pairs whose
// concatenation is a known piece are merged best-score-first (ties to the
// leftmost pair), then leftovers fall back to byte tokens.
std::vector<int> SpmTokenizer::encode_fragment(const std::string & text) const {
    if (text.empty()) return {};

    struct Symbol {
        std::size_t begin = 0, len = 0;
        int         prev = -1, next = -1;
    };
    std::vector<Symbol> syms;
    for (std::size_t i = 0; i < text.size();) {
        const std::size_t n = utf8_len(text, i);
        Symbol            s;
        s.begin = i;
        s.len = n;
        s.prev = static_cast<int>(syms.size()) - 1;
        s.next = i + n < text.size() ? static_cast<int>(syms.size()) + 1 : -1;
        syms.push_back(s);
        i += n;
    }

    struct Bigram {
        int         left = 0, right = 0;
        float       score = 0.0f;
        std::size_t len = 0;  // combined byte length at proposal time
    };
    auto worse = [](const Bigram & a, const Bigram & b) {
        return a.score < b.score || (a.score == b.score && a.left > b.left);
    };
    std::priority_queue<Bigram, std::vector<Bigram>, decltype(worse)> queue(worse);

    auto propose = [&](int left, int right) {
        if (left < 0 || right < 0) return;
        const std::string merged = text.substr(
            syms[static_cast<std::size_t>(left)].begin,
            syms[static_cast<std::size_t>(left)].len +
                syms[static_cast<std::size_t>(right)].len);
        auto it = by_text_.find(merged);
        if (it == by_text_.end()) return;
        queue.push(Bigram{left, right,
                          pieces_[static_cast<std::size_t>(it->second)].score,
                          merged.size()});
    };
    for (std::size_t k = 0; k + 1 < syms.size(); ++k)
        propose(static_cast<int>(k), static_cast<int>(k) + 1);

    while (!queue.empty()) {
        const Bigram big = queue.top();
        queue.pop();
        Symbol & l = syms[static_cast<std::size_t>(big.left)];
        Symbol & r = syms[static_cast<std::size_t>(big.right)];
        // Stale entry: one side was already merged away or resized.
        if (l.len == 0 || r.len == 0 || l.len + r.len != big.len) continue;
        l.len += r.len;
        r.len = 0;
        l.next = r.next;
        if (r.next >= 0) syms[static_cast<std::size_t>(r.next)].prev = big.left;
        propose(l.prev, big.left);
        propose(big.left, l.next);
    }

    std::vector<int> out;
    for (int idx = 0; idx >= 0; idx = syms[static_cast<std::size_t>(idx)].next) {
        const Symbol &    s = syms[static_cast<std::size_t>(idx)];
        const std::string surface = text.substr(s.begin, s.len);
        auto              it = by_text_.find(surface);
        if (it != by_text_.end()) {
            out.push_back(it->second);
            continue;
        }
        for (char c : surface) {  // byte fallback
            const int id = byte_tokens_[static_cast<unsigned char>(c)];
            out.push_back(id >= 0 ? id : unk_id_);
        }
    }
    return out;
}

std::vector<int> SpmTokenizer::encode(const std::string & text) const {
    // Whole-piece matching of control/user-defined tokens first, SentencePiece
    // merging on the fragments in between.
    std::vector<std::pair<std::string, int>> parts;  // (raw fragment, special id)
    std::size_t                              start = 0, i = 0;
    while (i < text.size()) {
        int         hit = -1;
        std::size_t hit_len = 0;
        for (const auto & [stext, sid] : specials_) {
            if (!stext.empty() && text.compare(i, stext.size(), stext) == 0) {
                hit = sid;
                hit_len = stext.size();
                break;
            }
        }
        if (hit >= 0) {
            if (i > start) parts.emplace_back(text.substr(start, i - start), -1);
            parts.emplace_back(std::string(), hit);
            i += hit_len;
            start = i;
        } else {
            ++i;
        }
    }
    if (start < text.size()) parts.emplace_back(text.substr(start), -1);

    std::vector<int> ids;
    bool             first_fragment = true;
    for (const auto & [fragment, special] : parts) {
        if (special >= 0) {
            ids.push_back(special);
            first_fragment = false;
            continue;
        }
        std::string prepared;
        prepared.reserve(fragment.size() + 4);
        if (first_fragment && add_space_prefix_) prepared += kSpaceMark;
        for (char c : fragment) {
            if (c == ' ') prepared += kSpaceMark;
            else prepared.push_back(c);
        }
        auto frag_ids = encode_fragment(prepared);
        ids.insert(ids.end(), frag_ids.begin(), frag_ids.end());
        first_fragment = false;
    }
    return ids;
}

std::string SpmTokenizer::piece_display(int id) const {
    const Piece & p = piece(id);
    switch (p.type) {
        case TokenType::byte: {
            const int b = parse_byte_piece(p.text);
            return std::string(1, static_cast<char>(b));
        }
        case TokenType::control: return std::string();
        default: break;
    }
    std::string out;
    for (std::size_t i = 0; i < p.text.size();) {
        if (p.text.compare(i, 3, kSpaceMark) == 0) {
            out.push_back(' ');
            i += 3;
        } else {
            out.push_back(p.text[i]);
            ++i;
        }
    }
    return out;
}

std::string SpmTokenizer::decode(const std::vector<int> & ids) const {
    std::string out;
    for (int id : ids) out += piece_display(id);
    if (!out.empty() && out.front() == ' ' && add_space_prefix_)
        out.erase(out.begin());
    return out;
}

} // namespace sbb
