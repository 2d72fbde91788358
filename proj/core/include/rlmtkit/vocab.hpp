#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rlmtkit {

/// Character-level token space. Ids 0..2 are the reserved BOS/EOS/PAD
/// tokens; printable symbols follow in byte order. The symbol<->id mapping
/// is a bijection over the symbol list.
class Vocab {
public:
    static constexpr int kBos = 0;
    static constexpr int kEos = 1;
    static constexpr int kPad = 2;
    static constexpr int kReserved = 3;

    Vocab() = default;

    /// Vocab over an explicit symbol list (deduplicated, kept in byte order).
    explicit Vocab(std::string_view symbols);

    /// Collects every distinct character across the given texts.
    static Vocab from_corpus(const std::vector<std::string>& texts);

    int size() const { return kReserved + static_cast<int>(symbols_.size()); }
    const std::string& symbols() const { return symbols_; }

    bool contains(char c) const { return char_to_id_[static_cast<unsigned char>(c)] >= 0; }

    /// Id of a symbol character; throws InvalidInput for unknown characters.
    int id_of(char c) const;

    /// Symbol for a non-reserved id; throws InvalidInput for reserved/out-of-range ids.
    char char_of(int id) const;

    /// Tokenizes text character by character. Throws InvalidInput on the
    /// first untokenizable character.
    std::vector<int> encode(std::string_view text) const;

    /// Maps ids back to text. Reserved ids (BOS/EOS/PAD) are skipped.
    std::string decode(std::span<const int> ids) const;

    bool operator==(const Vocab& other) const { return symbols_ == other.symbols_; }

private:
    std::string symbols_;
    int char_to_id_[256] = {};

    void rebuild_index();
};

}  // namespace rlmtkit
