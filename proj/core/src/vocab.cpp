#include "rlmtkit/vocab.hpp"

#include <algorithm>
#include <set>

#include "rlmtkit/errors.hpp"

namespace rlmtkit {

Vocab::Vocab(std::string_view symbols) {
    std::set<char> distinct(symbols.begin(), symbols.end());
    symbols_.assign(distinct.begin(), distinct.end());
    std::sort(symbols_.begin(), symbols_.end(),
              [](char a, char b) { return static_cast<unsigned char>(a) < static_cast<unsigned char>(b); });
    rebuild_index();
}

Vocab Vocab::from_corpus(const std::vector<std::string>& texts) {
    std::string all;
    for (const auto& t : texts) all += t;
    return Vocab(all);
}

void Vocab::rebuild_index() {
    for (int& v : char_to_id_) v = -1;
    for (size_t i = 0; i < symbols_.size(); ++i)
        char_to_id_[static_cast<unsigned char>(symbols_[i])] = kReserved + static_cast<int>(i);
}

int Vocab::id_of(char c) const {
    int id = char_to_id_[static_cast<unsigned char>(c)];
    if (id < 0)
        throw InvalidInput(std::string("Vocab: untokenizable character 0x") +
                           "0123456789abcdef"[(static_cast<unsigned char>(c) >> 4) & 0xf] +
                           "0123456789abcdef"[static_cast<unsigned char>(c) & 0xf]);
    return id;
}

char Vocab::char_of(int id) const {
    if (id < kReserved || id >= size())
        throw InvalidInput("Vocab: id is reserved or out of range");
    return symbols_[static_cast<size_t>(id - kReserved)];
}

std::vector<int> Vocab::encode(std::string_view text) const {
    std::vector<int> out;
    out.reserve(text.size());
    for (char c : text) out.push_back(id_of(c));
    return out;
}

std::string Vocab::decode(std::span<const int> ids) const {
    std::string out;
    out.reserve(ids.size());
    for (int id : ids) {
        if (id < kReserved) continue;
        out += char_of(id);
    }
    return out;
}

}  // namespace rlmtkit
