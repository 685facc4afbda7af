#include "legalrank/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "legalrank/errors.hpp"

namespace legalrank {

std::string_view to_string(Bm25Variant variant) {
    return variant == Bm25Variant::okapi ? "okapi" : "plus";
}

Bm25Variant parse_bm25_variant(std::string_view name) {
    if (name == "okapi") {
        return Bm25Variant::okapi;
    }
    if (name == "plus") {
        return Bm25Variant::plus;
    }
    throw ParameterError("unknown BM25 variant '" + std::string(name) + "' (expected okapi or plus)");
}

void Bm25Params::validate() const {
    if (!(k1 >= 0.0) || !std::isfinite(k1)) {
        throw ParameterError("bm25: k1 must be >= 0");
    }
    if (!(b >= 0.0 && b <= 1.0)) {
        throw ParameterError("bm25: b must lie in [0, 1]");
    }
    if (!(delta >= 0.0) || !std::isfinite(delta)) {
        throw ParameterError("bm25: delta must be >= 0");
    }
}

std::vector<Bm25Params> bm25_comparison_grid() {
    std::vector<Bm25Params> grid{Bm25Params::okapi(), Bm25Params::plus()};
    for (double k1 : {0.8, 1.2, 2.0}) {
        for (double b : {0.0, 0.75, 1.0}) {
            grid.push_back(Bm25Params::plus(k1, b));
        }
    }
    return grid;
}

// ---------------------------------------------------------------------------
// InvertedIndex

namespace {

struct DocTerms {
    std::uint32_t length = 0;
    // (term, tf) in first-occurrence order within the document.
    std::vector<std::pair<std::string, std::uint32_t>> terms;
};

DocTerms count_terms(const Tokens& tokens) {
    DocTerms out;
    out.length = static_cast<std::uint32_t>(tokens.size());
    std::unordered_map<std::string_view, std::size_t> slot;
    for (const auto& tok : tokens) {
        auto [it, inserted] = slot.emplace(tok, out.terms.size());
        if (inserted) {
            out.terms.emplace_back(tok, 1);
        } else {
            ++out.terms[it->second].second;
        }
    }
    return out;
}

}  // namespace

InvertedIndex InvertedIndex::from_tokens(std::vector<std::string> cids,
                                         const std::vector<Tokens>& documents) {
    if (cids.size() != documents.size()) {
        throw ParameterError("from_tokens: cid count does not match document count");
    }
    InvertedIndex index;
    index.cids_ = std::move(cids);
    index.lengths_.reserve(documents.size());
    for (std::size_t d = 0; d < documents.size(); ++d) {
        DocTerms dt = count_terms(documents[d]);
        index.lengths_.push_back(dt.length);
        for (auto& [term, tf] : dt.terms) {
            auto [it, inserted] = index.term_ids_.emplace(term, static_cast<std::uint32_t>(index.terms_.size()));
            if (inserted) {
                index.terms_.push_back(term);
                index.postings_.emplace_back();
            }
            index.postings_[it->second].push_back(Posting{static_cast<std::uint32_t>(d), tf});
        }
    }
    index.finalize();
    return index;
}

InvertedIndex InvertedIndex::build(const Corpus& corpus, const Segmenter& segmenter, unsigned threads) {
    const std::size_t n = corpus.size();
    std::vector<std::string> texts;
    texts.reserve(n);
    std::vector<std::string> cids;
    cids.reserve(n);
    for (const auto& doc : corpus.documents()) {
        texts.push_back(doc.text);
        cids.push_back(doc.cid);
    }

    std::vector<Tokens> tokens(n);
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        tokens = segmenter.segment(texts);
    } else {
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> errors(threads);
        std::size_t shard = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            std::size_t begin = std::min(n, t * shard);
            std::size_t end = std::min(n, begin + shard);
            workers.emplace_back([&, t, begin, end] {
                try {
                    auto part = segmenter.segment(std::span<const std::string>(texts).subspan(begin, end - begin));
                    std::move(part.begin(), part.end(), tokens.begin() + static_cast<std::ptrdiff_t>(begin));
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& w : workers) {
            w.join();
        }
        for (auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }
    if (tokens.size() != n) {
        throw SegmentationError("segmenter returned the wrong number of token lists");
    }
    return from_tokens(std::move(cids), tokens);
}

void InvertedIndex::finalize() {
    total_length_ = 0;
    for (auto len : lengths_) {
        total_length_ += len;
    }
    avgdl_ = cids_.empty() ? 0.0 : static_cast<double>(total_length_) / static_cast<double>(cids_.size());
    doc_ids_.clear();
    doc_ids_.reserve(cids_.size());
    for (std::size_t i = 0; i < cids_.size(); ++i) {
        if (!doc_ids_.emplace(cids_[i], static_cast<std::uint32_t>(i)).second) {
            throw IngestionError("duplicate cid '" + cids_[i] + "' in lexical index");
        }
    }
    if (term_ids_.size() != terms_.size()) {
        term_ids_.clear();
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            term_ids_.emplace(terms_[t], static_cast<std::uint32_t>(t));
        }
    }
}

std::optional<std::size_t> InvertedIndex::doc_index(std::string_view cid) const {
    auto it = doc_ids_.find(std::string(cid));
    if (it == doc_ids_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const std::vector<Posting>* InvertedIndex::find_postings(std::string_view term) const {
    auto it = term_ids_.find(std::string(term));
    return it == term_ids_.end() ? nullptr : &postings_[it->second];
}

std::size_t InvertedIndex::df(std::string_view term) const {
    const auto* p = find_postings(term);
    return p ? p->size() : 0;
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const {
    const auto* p = find_postings(term);
    return p ? std::span<const Posting>(*p) : std::span<const Posting>();
}

std::uint32_t InvertedIndex::tf(std::string_view term, std::size_t doc) const {
    const auto* p = find_postings(term);
    if (!p) {
        return 0;
    }
    auto it = std::lower_bound(p->begin(), p->end(), doc,
                               [](const Posting& post, std::size_t d) { return post.doc < d; });
    return (it != p->end() && it->doc == doc) ? it->tf : 0;
}

bool operator==(const InvertedIndex& a, const InvertedIndex& b) {
    if (a.cids_ != b.cids_ || a.lengths_ != b.lengths_ || a.total_length_ != b.total_length_ ||
        a.avgdl_ != b.avgdl_ || a.terms_ != b.terms_ || a.postings_.size() != b.postings_.size()) {
        return false;
    }
    for (std::size_t t = 0; t < a.postings_.size(); ++t) {
        const auto& pa = a.postings_[t];
        const auto& pb = b.postings_[t];
        if (pa.size() != pb.size()) {
            return false;
        }
        for (std::size_t i = 0; i < pa.size(); ++i) {
            if (pa[i].doc != pb[i].doc || pa[i].tf != pb[i].tf) {
                return false;
            }
        }
    }
    return true;
}

// Serialized layout (text, '\n' separated):
//   legalrank-lexical-index v1
//   docs <N> <total_length>
//   <cid>\t<length>                      x N
//   terms <T>
//   <term>\t<doc>:<tf> <doc>:<tf> ...     x T
// avgdl is recomputed from the integer totals, so it is bit-identical after a round trip.
void InvertedIndex::write(std::ostream& out) const {
    out << kMagic << '\n';
    out << "docs " << cids_.size() << ' ' << total_length_ << '\n';
    for (std::size_t i = 0; i < cids_.size(); ++i) {
        if (cids_[i].find_first_of("\t\n\r") != std::string::npos) {
            throw IoError("cannot serialize cid containing tab or newline: '" + cids_[i] + "'");
        }
        out << cids_[i] << '\t' << lengths_[i] << '\n';
    }
    out << "terms " << terms_.size() << '\n';
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        out << terms_[t] << '\t';
        bool first = true;
        for (const auto& p : postings_[t]) {
            if (!first) {
                out << ' ';
            }
            first = false;
            out << p.doc << ':' << p.tf;
        }
        out << '\n';
    }
}

InvertedIndex InvertedIndex::read(std::istream& in) {
    auto fail = [](const std::string& why) -> void { throw FormatError("lexical index: " + why); };
    std::string line;
    if (!std::getline(in, line) || line != kMagic) {
        fail("missing or unsupported version tag (expected '" + std::string(kMagic) + "')");
    }
    InvertedIndex index;
    std::size_t n = 0;
    std::uint64_t total = 0;
    {
        if (!std::getline(in, line)) {
            fail("truncated header");
        }
        std::istringstream hs(line);
        std::string tag;
        if (!(hs >> tag >> n >> total) || tag != "docs") {
            fail("bad docs header");
        }
    }
    index.cids_.reserve(n);
    index.lengths_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) {
            fail("truncated document table");
        }
        auto tab = line.rfind('\t');
        if (tab == std::string::npos) {
            fail("bad document line " + std::to_string(i));
        }
        index.cids_.push_back(line.substr(0, tab));
        index.lengths_.push_back(static_cast<std::uint32_t>(std::stoul(line.substr(tab + 1))));
    }
    std::size_t num_terms = 0;
    {
        if (!std::getline(in, line)) {
            fail("truncated term header");
        }
        std::istringstream hs(line);
        std::string tag;
        if (!(hs >> tag >> num_terms) || tag != "terms") {
            fail("bad terms header");
        }
    }
    index.terms_.reserve(num_terms);
    index.postings_.reserve(num_terms);
    for (std::size_t t = 0; t < num_terms; ++t) {
        if (!std::getline(in, line)) {
            fail("truncated term table");
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            fail("bad term line " + std::to_string(t));
        }
        index.terms_.push_back(line.substr(0, tab));
        std::vector<Posting> plist;
        std::istringstream ps(line.substr(tab + 1));
        std::string item;
        while (ps >> item) {
            auto colon = item.find(':');
            if (colon == std::string::npos) {
                fail("bad posting '" + item + "'");
            }
            auto doc = std::stoul(item.substr(0, colon));
            auto tf = std::stoul(item.substr(colon + 1));
            if (doc >= n) {
                fail("posting refers to document " + std::to_string(doc));
            }
            plist.push_back(Posting{static_cast<std::uint32_t>(doc), static_cast<std::uint32_t>(tf)});
        }
        index.postings_.push_back(std::move(plist));
    }
    index.finalize();
    if (index.total_length_ != total) {
        fail("document lengths do not add up to the recorded total");
    }
    return index;
}

void InvertedIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    write(out);
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return read(in);
}

// ---------------------------------------------------------------------------
// Scoring

double bm25_idf(const Bm25Params& params, std::size_t num_docs, std::size_t df) {
    const auto n = static_cast<double>(num_docs);
    const auto d = static_cast<double>(df);
    if (params.variant == Bm25Variant::okapi) {
        return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
    }
    return std::log((n + 1.0) / d);
}

double bm25_term_weight(const Bm25Params& params, double idf, std::uint32_t tf, std::uint32_t dl,
                        double avgdl) {
    const auto f = static_cast<double>(tf);
    const double rel_len = avgdl > 0.0 ? static_cast<double>(dl) / avgdl : 1.0;
    const double saturation = f * (params.k1 + 1.0) / (f + params.k1 * (1.0 - params.b + params.b * rel_len));
    if (params.variant == Bm25Variant::okapi) {
        return idf * saturation;
    }
    return idf * (params.delta + saturation);
}

double bm25_score(const InvertedIndex& index, const Bm25Params& params,
                  std::span<const std::string> query_tokens, std::string_view cid) {
    params.validate();
    auto doc = index.doc_index(cid);
    if (!doc) {
        throw LookupError("unknown cid '" + std::string(cid) + "'");
    }
    const auto dl = index.doc_length(*doc);
    double score = 0.0;
    for (const auto& term : query_tokens) {
        std::uint32_t tf = index.tf(term, *doc);
        if (tf == 0) {
            continue;
        }
        score += bm25_term_weight(params, bm25_idf(params, index.num_docs(), index.df(term)), tf, dl,
                                  index.avgdl());
    }
    return score;
}

RankedList lexical_topk(const InvertedIndex& index, const Bm25Params& params,
                        std::span<const std::string> query_tokens, std::size_t k) {
    params.validate();
    if (k == 0) {
        throw ParameterError("lexical_topk: k must be >= 1");
    }
    const std::size_t n = index.num_docs();
    std::vector<double> scores(n, 0.0);
    // Term-at-a-time in query order: each document accumulates its terms in the
    // same order as bm25_score, so both give bit-identical sums.
    for (const auto& term : query_tokens) {
        auto plist = index.postings(term);
        if (plist.empty()) {
            continue;
        }
        const double idf = bm25_idf(params, n, plist.size());
        for (const auto& p : plist) {
            scores[p.doc] += bm25_term_weight(params, idf, p.tf, index.doc_length(p.doc), index.avgdl());
        }
    }
    RankedList ranked;
    ranked.reserve(n);
    for (std::size_t d = 0; d < n; ++d) {
        ranked.push_back(ScoredDoc{index.cid(d), scores[d]});
    }
    keep_top_k(ranked, k);
    return ranked;
}

RankedList lexical_topk(const InvertedIndex& index, const Bm25Params& params, std::string_view query,
                        std::size_t k, const Segmenter& segmenter) {
    auto tokens = segmenter.segment_one(query);
    return lexical_topk(index, params, tokens, k);
}

}  // namespace legalrank
