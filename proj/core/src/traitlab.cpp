#include "rlmtkit/traitlab.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "rlmtkit/errors.hpp"
#include "rlmtkit/rng.hpp"

namespace rlmtkit {

namespace {

struct KeywordTrait {
    const char* keyword;
    const char* trait;
};

// Planning-style markers the stub judge knows how to spot.
constexpr KeywordTrait kKeywordTraits[] = {
    {"checklist", "checklist-planning"},
    {"outline", "outline-structuring"},
    {"step", "stepwise-decomposition"},
    {"revise", "iterative-refinement"},
    {"refine", "iterative-refinement"},
    {"constraint", "constraint-mapping"},
    {"theme", "thematic-grouping"},
    {"list", "list-enumeration"},
    {"plan", "explicit-planning"},
};

constexpr const char* kFallbackTraits[] = {
    "sequential-flow",
    "direct-execution",
    "minimal-abstraction",
};

int count_occurrences(const std::string& text, const std::string& needle) {
    if (needle.empty()) return 0;
    int n = 0;
    size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

double digit_fraction(const std::string& text) {
    if (text.empty()) return 0.0;
    int digits = 0;
    for (char c : text)
        if (std::isdigit(static_cast<unsigned char>(c))) ++digits;
    return static_cast<double>(digits) / static_cast<double>(text.size());
}

const char* length_bucket(const std::string& thought) {
    if (thought.size() < 20) return "terse-planning";
    if (thought.size() < 80) return "structured-planning";
    return "elaborated-planning";
}

/// Numeric evidence that a thought exhibits a trait; shared by extract and
/// adjudicate so the two stages agree with each other.
double trait_evidence(const std::string& thought, const std::string& trait) {
    for (const auto& kt : kKeywordTraits)
        if (trait == kt.trait) {
            int hits = 0;
            for (const auto& other : kKeywordTraits)
                if (trait == other.trait) hits += count_occurrences(thought, other.keyword);
            return static_cast<double>(hits);
        }
    if (trait == "numeric-enumeration") return digit_fraction(thought);
    if (trait == "multiline-outline")
        return static_cast<double>(count_occurrences(thought, "\n"));
    if (trait == "terse-planning" || trait == "structured-planning" ||
        trait == "elaborated-planning")
        return trait == length_bucket(thought) ? 1.0 : 0.0;
    return 0.0;
}

class StubJudge final : public Judge {
public:
    std::vector<std::string> extract(const std::string& prompt,
                                     const std::string& thought) override {
        (void)prompt;
        std::vector<std::string> traits;
        auto add = [&](const std::string& t) {
            if (std::find(traits.begin(), traits.end(), t) == traits.end())
                traits.push_back(t);
        };
        for (const auto& kt : kKeywordTraits)
            if (thought.find(kt.keyword) != std::string::npos) add(kt.trait);
        add(length_bucket(thought));
        if (digit_fraction(thought) > 0.3) add("numeric-enumeration");
        if (thought.find('\n') != std::string::npos) add("multiline-outline");
        for (const char* fb : kFallbackTraits) {
            if (traits.size() >= 3) break;
            add(fb);
        }
        return traits;
    }

    std::vector<DifferenceStatement> compare(
        const std::vector<CompareItem>& batch) override {
        std::map<std::string, int> count_a, count_b;
        for (const auto& item : batch) {
            for (const auto& t : item.traits_a) ++count_a[t];
            for (const auto& t : item.traits_b) ++count_b[t];
        }
        std::set<std::string> all;
        for (const auto& [t, _] : count_a) all.insert(t);
        for (const auto& [t, _] : count_b) all.insert(t);

        std::vector<std::pair<int, std::string>> ranked;  // (|diff|, trait)
        for (const auto& t : all) {
            int diff = (count_a.count(t) ? count_a[t] : 0) -
                       (count_b.count(t) ? count_b[t] : 0);
            if (diff != 0) ranked.emplace_back(std::abs(diff), t);
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
            if (x.first != y.first) return x.first > y.first;
            return x.second < y.second;
        });

        std::vector<DifferenceStatement> out;
        for (const auto& [mag, trait] : ranked) {
            if (out.size() >= 3) break;
            int diff = (count_a.count(trait) ? count_a.at(trait) : 0) -
                       (count_b.count(trait) ? count_b.at(trait) : 0);
            DifferenceStatement s;
            s.trait = trait;
            s.favors = diff > 0 ? 'A' : 'B';
            s.text = std::string("model ") + s.favors + " shows " + trait +
                     " more consistently";
            out.push_back(std::move(s));
            (void)mag;
        }
        return out;
    }

    std::string adjudicate(const std::string& prompt, const std::string& thought_a,
                           const std::string& thought_b,
                           const std::string& trait) override {
        (void)prompt;
        double ea = trait_evidence(thought_a, trait);
        double eb = trait_evidence(thought_b, trait);
        if (ea > eb) return "A";
        if (eb > ea) return "B";
        return "tie";
    }
};

}  // namespace

std::unique_ptr<Judge> make_stub_judge() { return std::make_unique<StubJudge>(); }

namespace traitlab {

std::vector<std::string> extract_traits(Judge& judge, const std::string& prompt,
                                        const std::string& thought) {
    if (thought.empty()) throw InvalidInput("extract_traits: empty thought");
    std::vector<std::string> raw = judge.extract(prompt, thought);
    std::vector<std::string> traits;
    for (auto& t : raw) {
        if (t.empty()) continue;
        if (std::find(traits.begin(), traits.end(), t) == traits.end())
            traits.push_back(std::move(t));
        if (traits.size() == 8) break;
    }
    if (traits.empty()) throw DataError("extract_traits: judge returned no traits");
    return traits;
}

std::vector<TraitExample> extract_examples(Judge& judge,
                                           const std::vector<ThoughtRecord>& corpus_a,
                                           const std::vector<ThoughtRecord>& corpus_b) {
    if (corpus_a.size() != corpus_b.size() ||
        !std::equal(corpus_a.begin(), corpus_a.end(), corpus_b.begin(),
                    [](const ThoughtRecord& x, const ThoughtRecord& y) {
                        return x.prompt == y.prompt;
                    })) {
        std::set<std::string> pa, pb;
        for (const auto& r : corpus_a) pa.insert(r.prompt);
        for (const auto& r : corpus_b) pb.insert(r.prompt);
        std::string missing;
        for (const auto& p : pa)
            if (!pb.count(p)) missing += " [B lacks: " + p + "]";
        for (const auto& p : pb)
            if (!pa.count(p)) missing += " [A lacks: " + p + "]";
        if (missing.empty()) missing = " (same prompts, different order)";
        throw DataError("trait corpora are not aligned:" + missing);
    }

    std::vector<TraitExample> out;
    out.reserve(corpus_a.size());
    for (size_t i = 0; i < corpus_a.size(); ++i) {
        TraitExample ex;
        ex.prompt = corpus_a[i].prompt;
        ex.thought_a = corpus_a[i].thought;
        ex.thought_b = corpus_b[i].thought;
        ex.traits_a = extract_traits(judge, ex.prompt, ex.thought_a);
        ex.traits_b = extract_traits(judge, ex.prompt, ex.thought_b);
        out.push_back(std::move(ex));
    }
    return out;
}

namespace {

std::vector<Judge::CompareItem> to_compare_items(const std::vector<TraitExample>& examples,
                                                 const std::vector<size_t>& indices) {
    std::vector<Judge::CompareItem> items;
    items.reserve(indices.size());
    for (size_t idx : indices) {
        const TraitExample& ex = examples[idx];
        items.push_back({ex.prompt, ex.traits_a, ex.traits_b});
    }
    return items;
}

void dedupe_statements(std::vector<DifferenceStatement>& statements) {
    std::set<std::string> seen;
    std::vector<DifferenceStatement> unique;
    for (auto& s : statements) {
        std::string key = s.trait + "|" + s.favors;
        if (seen.insert(key).second) unique.push_back(std::move(s));
    }
    statements = std::move(unique);
}

}  // namespace

std::vector<DifferenceStatement> compare_batches(Judge& judge,
                                                 const std::vector<TraitExample>& examples,
                                                 int batch_size) {
    if (batch_size < 2) throw InvalidInput("compare_batches: batch_size must be >= 2");
    if (examples.size() < 2)
        throw InvalidInput("compare_batches: need at least 2 examples");

    std::vector<DifferenceStatement> statements;
    size_t begin = 0;
    while (begin < examples.size()) {
        size_t end = std::min(examples.size(), begin + static_cast<size_t>(batch_size));
        // Merge a trailing singleton into this batch rather than comparing
        // a batch of one.
        if (examples.size() - end == 1) end = examples.size();
        std::vector<size_t> indices;
        for (size_t i = begin; i < end; ++i) indices.push_back(i);
        auto batch_statements = judge.compare(to_compare_items(examples, indices));
        statements.insert(statements.end(), batch_statements.begin(),
                          batch_statements.end());
        begin = end;
    }
    dedupe_statements(statements);
    return statements;
}

std::vector<std::string> summarize_differences(Judge& judge,
                                               const std::vector<TraitExample>& examples,
                                               int batches, int batch_size, uint64_t seed) {
    if (batches < 1) throw InvalidInput("summarize_differences: batches must be >= 1");
    if (batch_size < 2)
        throw InvalidInput("summarize_differences: batch_size must be >= 2");
    if (examples.size() < static_cast<size_t>(batch_size))
        throw InvalidInput("summarize_differences: fewer examples than one batch");

    std::mt19937_64 rng(mix_seed(seed, 0x7472616974ULL));
    std::vector<DifferenceStatement> statements;
    std::vector<size_t> all(examples.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;

    for (int b = 0; b < batches; ++b) {
        // Seeded Fisher-Yates prefix: a random batch without replacement.
        std::vector<size_t> pool = all;
        for (int i = 0; i < batch_size; ++i) {
            size_t j = static_cast<size_t>(i) +
                       static_cast<size_t>(uniform01(rng) *
                                           static_cast<double>(pool.size() - i));
            j = std::min(j, pool.size() - 1);
            std::swap(pool[static_cast<size_t>(i)], pool[j]);
        }
        pool.resize(static_cast<size_t>(batch_size));
        auto batch_statements = judge.compare(to_compare_items(examples, pool));
        statements.insert(statements.end(), batch_statements.begin(),
                          batch_statements.end());
    }

    std::set<std::string> traits;
    for (const auto& s : statements) traits.insert(s.trait);
    return {traits.begin(), traits.end()};
}

WinRateTable headtohead(Judge& judge, const std::vector<std::string>& traits,
                        const std::vector<TraitExample>& examples) {
    if (traits.empty()) throw InvalidInput("headtohead: empty trait list");
    if (examples.empty()) throw InvalidInput("headtohead: no examples");

    WinRateTable table;
    for (const auto& trait : traits) {
        TraitTally tally;
        tally.trait = trait;
        for (const auto& ex : examples) {
            std::string verdict =
                judge.adjudicate(ex.prompt, ex.thought_a, ex.thought_b, trait);
            std::string lower;
            for (char c : verdict)
                lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (lower == "a")
                ++tally.wins_a;
            else if (lower == "b")
                ++tally.wins_b;
            else if (lower == "tie")
                ++tally.ties;
            else
                throw DataError("headtohead: judge returned unknown verdict '" + verdict +
                                "' for trait '" + trait + "'");
        }
        double total = static_cast<double>(examples.size());
        tally.win_rate_a = (static_cast<double>(tally.wins_a) +
                            static_cast<double>(tally.ties) / 2.0) /
                           total;
        table.rows.push_back(std::move(tally));
    }
    return table;
}

std::string table_to_csv(const WinRateTable& table) {
    std::ostringstream out;
    out << "trait,wins_a,wins_b,ties,win_rate_a\n";
    for (const auto& row : table.rows) {
        char buf[32];
        snprintf(buf, sizeof(buf), "%.10g", row.win_rate_a);
        out << row.trait << ',' << row.wins_a << ',' << row.wins_b << ',' << row.ties
            << ',' << buf << "\n";
    }
    return out.str();
}

}  // namespace traitlab
}  // namespace rlmtkit
