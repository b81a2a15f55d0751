#pragma once

// SentencePiece-style tokenizer reconstructed from GGUF vocabulary metadata:
// greedy highest-score bigram merging over unicode symbols with byte
// fallback, plus whole-piece matching of control/user-defined tokens.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sbb::gguf { class File; }

namespace sbb {

class SpmTokenizer {
  public:
    // Token roles carried in the vocabulary metadata.
    enum class TokenType : int {
        normal = 1,
        unknown = 2,
        control = 3,
        user_defined = 4,
        unused = 5,
        byte = 6,
    };

    struct Piece {
        std::string text;
        float       score = 0.0f;
        TokenType   type = TokenType::normal;
    };

    // Builds from container metadata; rejects non-SentencePiece vocabularies
    // with a clear error.
    static SpmTokenizer from_gguf(const gguf::File & file);

    // Direct construction for tests.
    SpmTokenizer(std::vector<Piece> pieces, int unk_id, int bos_id, int eos_id,
                 bool add_space_prefix);

    int vocab_size() const { return static_cast<int>(pieces_.size()); }
    int bos_id() const { return bos_id_; }
    int eos_id() const { return eos_id_; }
    int unk_id() const { return unk_id_; }

    const Piece & piece(int id) const;

    // Encodes raw text (no BOS/EOS added). Control and user-defined token
    // strings appearing verbatim in the text are matched whole.
    std::vector<int> encode(const std::string & text) const;

    // Decodes to display text: U+2581 becomes space, byte tokens emit their
    // byte, control tokens are dropped. A leading space introduced by the
    // space-prefix convention is trimmed.
    std::string decode(const std::vector<int> & ids) const;

    // One token's display text (no special handling of the leading space).
    std::string piece_display(int id) const;

  private:
    std::vector<int>   encode_fragment(const std::string & text) const;

    std::vector<Piece>         pieces_;
    std::map<std::string, int> by_text_;
    std::vector<int>           byte_tokens_;  // 256 entries, -1 when missing
    std::vector<std::pair<std::string, int>> specials_;  // longest-first
    int  unk_id_ = -1;
    int  bos_id_ = -1;
    int  eos_id_ = -1;
    bool add_space_prefix_ = true;
};

} // namespace sbb
