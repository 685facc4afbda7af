#include "legalrank/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "legalrank/csv.hpp"
#include "legalrank/errors.hpp"
#include "legalrank/rng.hpp"

namespace legalrank {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return in;
}

std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

// Bracketed list with single- or double-quoted elements (Python repr style).
std::vector<std::string> parse_quoted_list(std::string_view cell) {
    std::vector<std::string> items;
    std::size_t i = 1;
    auto skip_ws = [&] {
        while (i < cell.size() && (cell[i] == ' ' || cell[i] == '\t' || cell[i] == '\n' || cell[i] == '\r')) {
            ++i;
        }
    };
    auto fail = [&](const char* why) {
        throw FormatError("malformed list cell (" + std::string(why) + "): " + std::string(cell));
    };
    skip_ws();
    if (i < cell.size() && cell[i] == ']') {
        return items;
    }
    while (true) {
        skip_ws();
        if (i >= cell.size()) {
            fail("unterminated");
        }
        char quote = cell[i];
        std::string item;
        if (quote == '"' || quote == '\'') {
            ++i;
            bool closed = false;
            while (i < cell.size()) {
                char c = cell[i++];
                if (c == '\\' && i < cell.size()) {
                    char e = cell[i++];
                    switch (e) {
                        case 'n': item.push_back('\n'); break;
                        case 't': item.push_back('\t'); break;
                        case 'r': item.push_back('\r'); break;
                        default: item.push_back(e); break;
                    }
                } else if (c == quote) {
                    closed = true;
                    break;
                } else {
                    item.push_back(c);
                }
            }
            if (!closed) {
                fail("unterminated string");
            }
        } else {
            // Unquoted scalar such as a numeric id.
            std::size_t start = i;
            while (i < cell.size() && cell[i] != ',' && cell[i] != ']') {
                ++i;
            }
            item = std::string(trim(cell.substr(start, i - start)));
            if (item.empty()) {
                fail("empty element");
            }
        }
        items.push_back(std::move(item));
        skip_ws();
        if (i < cell.size() && cell[i] == ',') {
            ++i;
            continue;
        }
        if (i < cell.size() && cell[i] == ']') {
            ++i;
            skip_ws();
            if (i != cell.size()) {
                fail("trailing characters");
            }
            return items;
        }
        fail("expected ',' or ']'");
    }
}

}  // namespace

Corpus::Corpus(std::vector<Document> documents) : documents_(std::move(documents)) {
    by_cid_.reserve(documents_.size());
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        auto [it, inserted] = by_cid_.emplace(documents_[i].cid, i);
        if (!inserted) {
            throw IngestionError("duplicate cid '" + documents_[i].cid + "'");
        }
    }
}

bool Corpus::contains(std::string_view cid) const {
    return find(cid) != nullptr;
}

const Document* Corpus::find(std::string_view cid) const {
    auto it = by_cid_.find(std::string(cid));
    return it == by_cid_.end() ? nullptr : &documents_[it->second];
}

const Document& Corpus::lookup(std::string_view cid) const {
    if (const Document* doc = find(cid)) {
        return *doc;
    }
    throw LookupError("unknown cid '" + std::string(cid) + "'");
}

std::size_t Corpus::position(std::string_view cid) const {
    auto it = by_cid_.find(std::string(cid));
    if (it == by_cid_.end()) {
        throw LookupError("unknown cid '" + std::string(cid) + "'");
    }
    return it->second;
}

Corpus load_corpus(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_corpus(in, path.string());
}

Corpus read_corpus(std::istream& in, std::string_view source) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) {
        throw FormatError(std::string(source) + ": empty file, expected a header row");
    }
    auto cols = csv::locate_columns(*header, {"text", "cid"}, source);
    std::vector<Document> docs;
    std::unordered_set<std::string> seen;
    while (auto row = reader.next()) {
        std::size_t needed = std::max(cols[0], cols[1]) + 1;
        if (row->size() < needed) {
            throw FormatError(std::string(source) + ":" + std::to_string(reader.line()) +
                              ": expected at least " + std::to_string(needed) + " fields, got " +
                              std::to_string(row->size()));
        }
        Document doc{std::move((*row)[cols[1]]), std::move((*row)[cols[0]])};
        if (!seen.insert(doc.cid).second) {
            throw IngestionError(std::string(source) + ":" + std::to_string(reader.line()) +
                                 ": duplicate cid '" + doc.cid + "'");
        }
        docs.push_back(std::move(doc));
    }
    return Corpus(std::move(docs));
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    csv::write_row(out, {"cid", "text"});
    for (const auto& doc : corpus.documents()) {
        csv::write_row(out, {doc.cid, doc.text});
    }
}

std::vector<std::string> parse_list_cell(std::string_view cell) {
    auto t = trim(cell);
    if (t.empty()) {
        return {};
    }
    if (t.front() != '[') {
        return {std::string(t)};
    }
    if (t.back() != ']') {
        throw FormatError("malformed list cell (missing ']'): " + std::string(cell));
    }
    auto parsed = nlohmann::json::parse(t, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_array()) {
        std::vector<std::string> items;
        for (const auto& v : parsed) {
            if (v.is_string()) {
                items.push_back(v.get<std::string>());
            } else if (v.is_number_integer() || v.is_number_unsigned()) {
                items.push_back(v.dump());
            } else {
                throw FormatError("list cell element is neither a string nor an integer: " +
                                  std::string(cell));
            }
        }
        return items;
    }
    return parse_quoted_list(t);
}

std::vector<QaRecord> load_qa(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_qa(in, path.string());
}

std::vector<QaRecord> read_qa(std::istream& in, std::string_view source) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) {
        throw FormatError(std::string(source) + ": empty file, expected a header row");
    }
    auto cols = csv::locate_columns(*header, {"question", "context", "cid", "qid"}, source);
    std::size_t needed = *std::max_element(cols.begin(), cols.end()) + 1;

    std::vector<QaRecord> records;
    std::unordered_set<std::string> seen;
    while (auto row = reader.next()) {
        auto where = std::string(source) + ":" + std::to_string(reader.line());
        if (row->size() < needed) {
            throw FormatError(where + ": expected at least " + std::to_string(needed) +
                              " fields, got " + std::to_string(row->size()));
        }
        QaRecord rec;
        rec.question = std::move((*row)[cols[0]]);
        rec.qid = std::string(trim((*row)[cols[3]]));
        try {
            rec.contexts = parse_list_cell((*row)[cols[1]]);
            rec.cids = parse_list_cell((*row)[cols[2]]);
        } catch (const FormatError& e) {
            throw FormatError(where + ": qid '" + rec.qid + "': " + e.what());
        }
        if (rec.cids.empty()) {
            throw FormatError(where + ": qid '" + rec.qid + "' has no cid");
        }
        if (rec.contexts.size() != rec.cids.size()) {
            throw FormatError(where + ": qid '" + rec.qid + "' has " +
                              std::to_string(rec.contexts.size()) + " contexts but " +
                              std::to_string(rec.cids.size()) + " cids");
        }
        if (!seen.insert(rec.qid).second) {
            throw IngestionError(where + ": duplicate qid '" + rec.qid + "'");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<QaPair> normalize_qa(const std::vector<QaRecord>& records, const Corpus& corpus) {
    std::vector<QaPair> pairs;
    std::set<std::pair<std::string_view, std::string_view>> seen;
    for (const auto& rec : records) {
        for (const auto& cid : rec.cids) {
            if (!corpus.contains(cid)) {
                throw IngestionError("qid '" + rec.qid + "' references unknown cid '" + cid + "'");
            }
            if (seen.emplace(rec.qid, cid).second) {
                pairs.push_back(QaPair{rec.qid, rec.question, cid});
            }
        }
    }
    return pairs;
}

TrainEvalSplit split_train_eval(const std::vector<QaPair>& pairs, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw ParameterError("split ratio must lie in (0, 1), got " + std::to_string(ratio));
    }
    std::vector<std::string> qids;
    {
        std::set<std::string> distinct;
        for (const auto& p : pairs) {
            distinct.insert(p.qid);
        }
        qids.assign(distinct.begin(), distinct.end());
    }
    SplitMix64 rng(seed);
    for (std::size_t i = qids.size(); i > 1; --i) {
        std::size_t j = rng.below(i);
        std::swap(qids[i - 1], qids[j]);
    }
    auto train_count = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(qids.size())));
    std::unordered_set<std::string> train_qids(qids.begin(), qids.begin() + static_cast<std::ptrdiff_t>(train_count));

    TrainEvalSplit split;
    for (const auto& p : pairs) {
        (train_qids.contains(p.qid) ? split.train : split.eval).push_back(p);
    }
    return split;
}

std::vector<std::size_t> length_histogram(std::span<const std::string> texts,
                                          std::span<const std::size_t> edges,
                                          const Segmenter& segmenter) {
    if (edges.empty()) {
        throw ParameterError("histogram needs at least one bucket edge");
    }
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (edges[i] <= edges[i - 1]) {
            throw ParameterError("histogram bucket edges must be strictly ascending");
        }
    }
    std::vector<std::size_t> counts(edges.size(), 0);
    auto token_lists = segmenter.segment(texts);
    for (const auto& tokens : token_lists) {
        std::size_t len = tokens.size();
        // Last edge <= len.
        auto it = std::upper_bound(edges.begin(), edges.end(), len);
        std::size_t bucket = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
        ++counts[bucket];
    }
    return counts;
}

void write_histogram(std::ostream& out, std::span<const std::size_t> edges,
                     std::span<const std::size_t> counts) {
    for (std::size_t b = 0; b < counts.size(); ++b) {
        out << edges[b] << '\t';
        if (b + 1 < edges.size()) {
            out << edges[b + 1];
        } else {
            out << "inf";
        }
        out << '\t' << counts[b] << '\n';
    }
}

std::vector<std::size_t> answers_per_question(const std::vector<QaRecord>& records,
                                              std::size_t max_bucket) {
    if (max_bucket < 1) {
        throw ParameterError("max_bucket must be >= 1");
    }
    std::vector<std::size_t> counts(max_bucket, 0);
    for (const auto& rec : records) {
        std::size_t n = std::max<std::size_t>(rec.cids.size(), 1);
        ++counts[std::min(n, max_bucket) - 1];
    }
    return counts;
}

void write_qa_pairs(std::ostream& out, std::span<const QaPair> pairs) {
    for (const auto& p : pairs) {
        nlohmann::ordered_json j;
        j["qid"] = p.qid;
        j["question"] = p.question;
        j["cid"] = p.cid;
        out << j.dump() << '\n';
    }
}

std::vector<QaPair> read_qa_pairs(std::istream& in, std::string_view source) {
    std::vector<QaPair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        try {
            auto j = nlohmann::json::parse(line);
            pairs.push_back(QaPair{j.at("qid").get<std::string>(), j.at("question").get<std::string>(),
                                   j.at("cid").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string(source) + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return pairs;
}

void save_qa_pairs(const std::filesystem::path& path, std::span<const QaPair> pairs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    write_qa_pairs(out, pairs);
    if (!out.flush()) {
        throw IoError("write failed: " + path.string());
    }
}

std::vector<QaPair> load_qa_pairs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return read_qa_pairs(in, path.string());
}

}  // namespace legalrank
