#pragma once

#include <string>
#include <vector>

#include "rlmtkit/rewards.hpp"

namespace rlmtkit {

/// SFT demonstration; thought may be empty for plain templates.
struct Demo {
    std::string prompt;
    std::string thought;
    std::string response;
};

/// One prompt/thought record of a trait-analysis corpus.
struct ThoughtRecord {
    std::string prompt;
    std::string thought;
};

namespace datasets {

/// Line-delimited tab-separated records: prompt, optional gold.
std::vector<Task> load_tasks(const std::string& path);
void save_tasks(const std::string& path, const std::vector<Task>& tasks);

/// Records: prompt, chosen, rejected. Tabs in text are forbidden.
std::vector<PreferenceExample> load_preferences(const std::string& path);
void save_preferences(const std::string& path, const std::vector<PreferenceExample>& pairs);

/// Records: prompt, thought, response (thought may be empty).
std::vector<Demo> load_demos(const std::string& path);
void save_demos(const std::string& path, const std::vector<Demo>& demos);

/// Records: prompt, thought.
std::vector<ThoughtRecord> load_thought_corpus(const std::string& path);
void save_thought_corpus(const std::string& path, const std::vector<ThoughtRecord>& records);

}  // namespace datasets
}  // namespace rlmtkit
