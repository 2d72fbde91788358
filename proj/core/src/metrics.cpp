#include "rlmtkit/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rlmtkit/errors.hpp"

namespace rlmtkit {
namespace metrics {

namespace {

std::string fmt(double v) {
    char buf[48];
    snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

double parse_field(const std::string& s, int row_no) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw DataError("metrics row " + std::to_string(row_no) + ": bad field '" + s + "'");
    }
}

}  // namespace

std::string to_csv(const std::vector<MetricsRow>& rows) {
    std::ostringstream out;
    out << kCsvHeader << "\n";
    for (const auto& r : rows) {
        out << r.step << ',' << fmt(r.mean_reward) << ',' << fmt(r.mean_thought_tokens)
            << ',' << fmt(r.mean_response_tokens) << ',' << fmt(r.mean_kl) << ','
            << fmt(r.loss) << ',' << fmt(r.well_formed_frac) << "\n";
    }
    return out.str();
}

void save_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open metrics file for writing: " + path);
    out << to_csv(rows);
    if (!out) throw DataError("write failure on metrics file: " + path);
}

std::vector<MetricsRow> load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open metrics file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("metrics file is empty: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader)
        throw DataError("metrics file has unexpected header: " + path);

    std::vector<MetricsRow> rows;
    int row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 7)
            throw DataError("metrics row " + std::to_string(row_no) +
                            ": expected 7 fields, got " + std::to_string(fields.size()));

        MetricsRow r;
        r.step = static_cast<int64_t>(parse_field(fields[0], row_no));
        r.mean_reward = parse_field(fields[1], row_no);
        r.mean_thought_tokens = parse_field(fields[2], row_no);
        r.mean_response_tokens = parse_field(fields[3], row_no);
        r.mean_kl = parse_field(fields[4], row_no);
        r.loss = parse_field(fields[5], row_no);
        r.well_formed_frac = parse_field(fields[6], row_no);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace metrics
}  // namespace rlmtkit
