#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rlmtkit/datasets.hpp"

namespace rlmtkit {

/// One structured difference between the two models' planning styles.
struct DifferenceStatement {
    std::string trait;
    char favors = 'A';  // which side shows the trait more
    std::string text;
};

/// Judge over hidden planning excerpts. The shipped implementation is a
/// deterministic stub; a live LLM client can be slotted in behind the same
/// interface without touching the pipeline.
class Judge {
public:
    virtual ~Judge() = default;

    /// Trait names most prevalent in one thought.
    virtual std::vector<std::string> extract(const std::string& prompt,
                                             const std::string& thought) = 0;

    /// Batch item for compare(): a prompt with both models' trait lists.
    struct CompareItem {
        std::string prompt;
        std::vector<std::string> traits_a;
        std::vector<std::string> traits_b;
    };

    /// 1-3 concise recurring differences across a batch of examples.
    virtual std::vector<DifferenceStatement> compare(
        const std::vector<CompareItem>& batch) = 0;

    /// Which thought shows the trait more: returns "A", "B" or "tie"
    /// (case-insensitive by the pipeline's contract).
    virtual std::string adjudicate(const std::string& prompt, const std::string& thought_a,
                                   const std::string& thought_b,
                                   const std::string& trait) = 0;
};

/// Keyword/statistics-driven judge; fully deterministic and antisymmetric
/// under swapping the two sides, which the pipeline tests rely on.
std::unique_ptr<Judge> make_stub_judge();

/// Aligned pair of thoughts for one prompt plus their extracted traits.
struct TraitExample {
    std::string prompt;
    std::string thought_a;
    std::string thought_b;
    std::vector<std::string> traits_a;
    std::vector<std::string> traits_b;
};

struct TraitTally {
    std::string trait;
    int wins_a = 0;
    int wins_b = 0;
    int ties = 0;
    double win_rate_a = 0.0;  // (wins_a + ties/2) / total
};

struct WinRateTable {
    std::vector<TraitTally> rows;
};

namespace traitlab {

/// Deduplicated trait names for one thought, capped at 8. Empty thoughts
/// are invalid input; judge failures propagate.
std::vector<std::string> extract_traits(Judge& judge, const std::string& prompt,
                                        const std::string& thought);

/// Runs extract_traits over two aligned corpora. Corpora must cover the
/// same prompts in the same order (DataError listing mismatches otherwise).
std::vector<TraitExample> extract_examples(Judge& judge,
                                           const std::vector<ThoughtRecord>& corpus_a,
                                           const std::vector<ThoughtRecord>& corpus_b);

/// Sequential batches of batch_size examples through judge.compare, with
/// statements deduplicated across batches. A trailing batch of one example
/// is merged into its predecessor; fewer than 2 examples overall is an error.
std::vector<DifferenceStatement> compare_batches(Judge& judge,
                                                 const std::vector<TraitExample>& examples,
                                                 int batch_size = 20);

/// Seeded random batches (default 10 of 20) through judge.compare,
/// consolidated into a sorted candidate trait list.
std::vector<std::string> summarize_differences(Judge& judge,
                                               const std::vector<TraitExample>& examples,
                                               int batches = 10, int batch_size = 20,
                                               uint64_t seed = 0);

/// Per-trait head-to-head adjudication over all examples. Verdicts are
/// accepted case-insensitively; anything but A/B/tie raises a DataError
/// naming the trait.
WinRateTable headtohead(Judge& judge, const std::vector<std::string>& traits,
                        const std::vector<TraitExample>& examples);

/// CSV rows `trait,wins_a,wins_b,ties,win_rate_a`.
std::string table_to_csv(const WinRateTable& table);

}  // namespace traitlab
}  // namespace rlmtkit
