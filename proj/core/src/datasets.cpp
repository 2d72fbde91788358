#include "rlmtkit/datasets.hpp"

#include <fstream>
#include <sstream>

#include "rlmtkit/errors.hpp"

namespace rlmtkit {
namespace datasets {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

/// Applies fn to each non-empty line; errors carry path and line number.
template <typename Fn>
void for_each_record(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            fn(split_fields(line));
        } catch (const DataError& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void check_no_tab(const std::string& text, const char* what) {
    if (text.find('\t') != std::string::npos)
        throw InvalidInput(std::string(what) + " contains a tab character");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open file for writing: " + path);
    return out;
}

}  // namespace

std::vector<Task> load_tasks(const std::string& path) {
    std::vector<Task> tasks;
    for_each_record(path, [&](const std::vector<std::string>& f) {
        if (f.size() > 2) throw DataError("expected 'prompt' or 'prompt<TAB>gold'");
        if (f[0].empty()) throw DataError("empty prompt");
        Task t;
        t.prompt = f[0];
        if (f.size() == 2) t.gold = f[1];
        tasks.push_back(std::move(t));
    });
    if (tasks.empty()) throw DataError("no records in dataset file: " + path);
    return tasks;
}

void save_tasks(const std::string& path, const std::vector<Task>& tasks) {
    auto out = open_out(path);
    for (const auto& t : tasks) {
        check_no_tab(t.prompt, "prompt");
        out << t.prompt;
        if (t.gold) {
            check_no_tab(*t.gold, "gold");
            out << '\t' << *t.gold;
        }
        out << '\n';
    }
}

std::vector<PreferenceExample> load_preferences(const std::string& path) {
    std::vector<PreferenceExample> pairs;
    for_each_record(path, [&](const std::vector<std::string>& f) {
        if (f.size() != 3) throw DataError("expected 'prompt<TAB>chosen<TAB>rejected'");
        pairs.push_back({f[0], f[1], f[2]});
    });
    if (pairs.empty()) throw DataError("no records in preference file: " + path);
    return pairs;
}

void save_preferences(const std::string& path,
                      const std::vector<PreferenceExample>& pairs) {
    auto out = open_out(path);
    for (const auto& p : pairs) {
        check_no_tab(p.prompt, "prompt");
        check_no_tab(p.chosen, "chosen");
        check_no_tab(p.rejected, "rejected");
        out << p.prompt << '\t' << p.chosen << '\t' << p.rejected << '\n';
    }
}

std::vector<Demo> load_demos(const std::string& path) {
    std::vector<Demo> demos;
    for_each_record(path, [&](const std::vector<std::string>& f) {
        if (f.size() != 3) throw DataError("expected 'prompt<TAB>thought<TAB>response'");
        if (f[0].empty()) throw DataError("empty prompt");
        demos.push_back({f[0], f[1], f[2]});
    });
    if (demos.empty()) throw DataError("no records in demo file: " + path);
    return demos;
}

void save_demos(const std::string& path, const std::vector<Demo>& demos) {
    auto out = open_out(path);
    for (const auto& d : demos) {
        check_no_tab(d.prompt, "prompt");
        check_no_tab(d.thought, "thought");
        check_no_tab(d.response, "response");
        out << d.prompt << '\t' << d.thought << '\t' << d.response << '\n';
    }
}

std::vector<ThoughtRecord> load_thought_corpus(const std::string& path) {
    std::vector<ThoughtRecord> records;
    for_each_record(path, [&](const std::vector<std::string>& f) {
        if (f.size() != 2) throw DataError("expected 'prompt<TAB>thought'");
        if (f[0].empty()) throw DataError("empty prompt");
        records.push_back({f[0], f[1]});
    });
    if (records.empty()) throw DataError("no records in thought corpus: " + path);
    return records;
}

void save_thought_corpus(const std::string& path,
                         const std::vector<ThoughtRecord>& records) {
    auto out = open_out(path);
    for (const auto& r : records) {
        check_no_tab(r.prompt, "prompt");
        check_no_tab(r.thought, "thought");
        out << r.prompt << '\t' << r.thought << '\n';
    }
}

}  // namespace datasets
}  // namespace rlmtkit
