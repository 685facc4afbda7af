#include "legalrank/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "legalrank/errors.hpp"

namespace legalrank {

namespace {

// 1-based rank of the first gold cid within the first `depth` entries, 0 if none.
std::size_t first_gold_rank(const Run& run, const std::string& qid, const std::set<std::string>& gold,
                            std::size_t depth) {
    auto it = run.find(qid);
    if (it == run.end()) {
        return 0;
    }
    const auto& list = it->second;
    const std::size_t limit = std::min(depth, list.size());
    for (std::size_t r = 0; r < limit; ++r) {
        if (gold.contains(list[r].cid)) {
            return r + 1;
        }
    }
    return 0;
}

void check_qrels(const Qrels& qrels) {
    for (const auto& [qid, gold] : qrels) {
        if (gold.empty()) {
            throw ParameterError("qrels entry '" + qid + "' has an empty gold set");
        }
    }
}

std::string four_decimals(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) {
            break;
        }
        start = tab + 1;
    }
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r') {
        fields.back().pop_back();
    }
    return fields;
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw FormatError(where + ": bad number '" + text + "'");
    }
    return value;
}

}  // namespace

double exist_at_m(const Run& run, const Qrels& qrels, std::size_t m) {
    if (m < 1) {
        throw ParameterError("exist@m: m must be >= 1");
    }
    check_qrels(qrels);
    if (qrels.empty()) {
        return 0.0;
    }
    double hits = 0.0;
    for (const auto& [qid, gold] : qrels) {
        if (first_gold_rank(run, qid, gold, m) > 0) {
            hits += 1.0;
        }
    }
    return hits / static_cast<double>(qrels.size());
}

double mrr_at_k(const Run& run, const Qrels& qrels, std::size_t k) {
    if (k < 1) {
        throw ParameterError("mrr@k: k must be >= 1");
    }
    check_qrels(qrels);
    if (qrels.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& [qid, gold] : qrels) {
        if (auto r = first_gold_rank(run, qid, gold, k)) {
            sum += 1.0 / static_cast<double>(r);
        }
    }
    return sum / static_cast<double>(qrels.size());
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json j;
    j["exist@m"] = exist;
    j["mrr@k"] = mrr;
    j["N"] = num_queries;
    j["m"] = m;
    j["k"] = k;
    j["display"] = {{"exist@m", four_decimals(exist)}, {"mrr@k", four_decimals(mrr)}};
    return j;
}

MetricReport evaluate_run(const Run& run, const Qrels& qrels, std::size_t m, std::size_t k) {
    return MetricReport{exist_at_m(run, qrels, m), mrr_at_k(run, qrels, k), qrels.size(), m, k};
}

Qrels qrels_from_pairs(const std::vector<QaPair>& pairs) {
    Qrels qrels;
    for (const auto& p : pairs) {
        qrels[p.qid].insert(p.cid);
    }
    return qrels;
}

void write_run(std::ostream& out, const Run& run) {
    char buf[32];
    for (const auto& [qid, list] : run) {
        for (std::size_t r = 0; r < list.size(); ++r) {
            auto [end, ec] = std::to_chars(buf, buf + sizeof buf, list[r].score);
            out << qid << '\t' << (r + 1) << '\t' << list[r].cid << '\t';
            out.write(buf, end - buf);
            out << '\n';
        }
    }
}

Run read_run(std::istream& in, std::string_view source) {
    Run run;
    std::map<std::string, std::unordered_set<std::string>> seen;
    std::map<std::string, std::vector<std::pair<std::size_t, ScoredDoc>>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        auto where = std::string(source) + ":" + std::to_string(lineno);
        auto f = split_tabs(line);
        if (f.size() != 4) {
            throw FormatError(where + ": expected qid<TAB>rank<TAB>cid<TAB>score");
        }
        auto rank = parse_number<std::size_t>(f[1], where);
        auto score = parse_number<double>(f[3], where);
        if (rank < 1) {
            throw FormatError(where + ": rank must start at 1");
        }
        if (!seen[f[0]].insert(f[2]).second) {
            throw FormatError(where + ": duplicate cid '" + f[2] + "' for qid '" + f[0] + "'");
        }
        rows[f[0]].emplace_back(rank, ScoredDoc{f[2], score});
    }
    for (auto& [qid, entries] : rows) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        auto& list = run[qid];
        for (auto& e : entries) {
            list.push_back(std::move(e.second));
        }
    }
    return run;
}

void save_run(const std::filesystem::path& path, const Run& run) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    write_run(out, run);
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

Run load_run(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return read_run(in, path.string());
}

void write_qrels(std::ostream& out, const Qrels& qrels) {
    for (const auto& [qid, gold] : qrels) {
        for (const auto& cid : gold) {
            out << qid << '\t' << cid << '\n';
        }
    }
}

Qrels read_qrels(std::istream& in, std::string_view source) {
    Qrels qrels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        auto f = split_tabs(line);
        if (f.size() != 2 || f[0].empty() || f[1].empty()) {
            throw FormatError(std::string(source) + ":" + std::to_string(lineno) +
                              ": expected qid<TAB>cid");
        }
        qrels[f[0]].insert(f[1]);
    }
    return qrels;
}

void save_qrels(const std::filesystem::path& path, const Qrels& qrels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    write_qrels(out, qrels);
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

Qrels load_qrels(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return read_qrels(in, path.string());
}

}  // namespace legalrank
