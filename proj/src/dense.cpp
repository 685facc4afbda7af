#include "legalrank/dense.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "legalrank/errors.hpp"
#include "legalrank/rng.hpp"

namespace legalrank {

double l2_norm(std::span<const double> v) {
    double sum = 0.0;
    for (double x : v) {
        sum += x * x;
    }
    return std::sqrt(sum);
}

bool normalize(std::span<double> v) {
    double norm = l2_norm(v);
    if (norm == 0.0) {
        return false;
    }
    for (double& x : v) {
        x /= norm;
    }
    return true;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw ParameterError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                             std::to_string(v.size()) + ")");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
    }
    double nu = l2_norm(u);
    double nv = l2_norm(v);
    if (nu == 0.0 || nv == 0.0) {
        return 0.0;
    }
    return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// HashedBowEmbedder

HashedBowEmbedder::HashedBowEmbedder(std::size_t dim, std::shared_ptr<const Segmenter> segmenter)
    : dim_(dim), segmenter_(std::move(segmenter)) {
    if (dim_ == 0) {
        throw ParameterError("hashed bag-of-words dimension must be >= 1");
    }
}

std::string HashedBowEmbedder::name() const {
    return "hashedbow:" + std::to_string(dim_);
}

Vector HashedBowEmbedder::embed_tokens(std::span<const std::string> tokens) const {
    Vector v(dim_, 0.0);
    for (const auto& tok : tokens) {
        std::uint64_t h = fnv1a64(tok);
        v[h % dim_] += (h >> 63) ? -1.0 : 1.0;
    }
    normalize(v);
    return v;
}

std::vector<Vector> HashedBowEmbedder::embed(std::span<const EmbedItem> items) const {
    const Segmenter& seg = segmenter_ ? *segmenter_ : default_segmenter();
    std::vector<std::string> texts;
    texts.reserve(items.size());
    for (const auto& item : items) {
        texts.emplace_back(item.text);
    }
    auto token_lists = seg.segment(texts);
    std::vector<Vector> out;
    out.reserve(items.size());
    for (const auto& tokens : token_lists) {
        out.push_back(embed_tokens(tokens));
    }
    return out;
}

// ---------------------------------------------------------------------------
// FileEmbeddings

namespace {

Vector parse_floats(std::string_view text, std::size_t dim, const std::string& where) {
    Vector v;
    v.reserve(dim);
    const char* p = text.data();
    const char* end = p + text.size();
    while (p < end) {
        while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) {
            ++p;
        }
        if (p == end) {
            break;
        }
        double x = 0.0;
        auto [next, ec] = std::from_chars(p, end, x);
        if (ec != std::errc() || next == p) {
            throw FormatError(where + ": bad float near '" +
                              std::string(p, static_cast<std::size_t>(std::min<std::ptrdiff_t>(end - p, 20))) + "'");
        }
        if (!std::isfinite(x)) {
            throw FormatError(where + ": non-finite value");
        }
        v.push_back(x);
        p = next;
    }
    if (v.size() != dim) {
        throw FormatError(where + ": expected " + std::to_string(dim) + " values, got " +
                          std::to_string(v.size()));
    }
    return v;
}

struct EmbeddingFile {
    std::size_t dim = 0;
    std::vector<std::pair<std::string, Vector>> rows;
};

EmbeddingFile read_embedding_file(std::istream& in, std::string_view source) {
    EmbeddingFile file;
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError(std::string(source) + ": empty embedding file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos || line.substr(0, tab) != "dim") {
        throw FormatError(std::string(source) + ": first line must be 'dim<TAB>d'");
    }
    try {
        file.dim = std::stoul(line.substr(tab + 1));
    } catch (const std::exception&) {
        throw FormatError(std::string(source) + ": bad dimension '" + line.substr(tab + 1) + "'");
    }
    if (file.dim == 0) {
        throw FormatError(std::string(source) + ": dimension must be >= 1");
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        auto where = std::string(source) + ":" + std::to_string(lineno);
        tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError(where + ": expected 'id<TAB>values'");
        }
        file.rows.emplace_back(line.substr(0, tab),
                               parse_floats(std::string_view(line).substr(tab + 1), file.dim, where));
    }
    return file;
}

}  // namespace

FileEmbeddings::FileEmbeddings(std::size_t dim, std::unordered_map<std::string, Vector> vectors)
    : dim_(dim), vectors_(std::move(vectors)) {
    if (dim_ == 0) {
        throw ParameterError("embedding dimension must be >= 1");
    }
    for (const auto& [id, v] : vectors_) {
        if (v.size() != dim_) {
            throw ParameterError("embedding for '" + id + "' has dimension " + std::to_string(v.size()));
        }
    }
}

FileEmbeddings FileEmbeddings::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return read(in, path.string());
}

FileEmbeddings FileEmbeddings::read(std::istream& in, std::string_view source) {
    auto file = read_embedding_file(in, source);
    std::unordered_map<std::string, Vector> vectors;
    for (auto& [id, v] : file.rows) {
        if (!vectors.emplace(id, std::move(v)).second) {
            throw FormatError(std::string(source) + ": duplicate id '" + id + "'");
        }
    }
    return FileEmbeddings(file.dim, std::move(vectors));
}

bool FileEmbeddings::contains(std::string_view id) const {
    return vectors_.contains(std::string(id));
}

std::vector<Vector> FileEmbeddings::embed(std::span<const EmbedItem> items) const {
    std::vector<Vector> out;
    out.reserve(items.size());
    std::vector<std::string> missing;
    for (const auto& item : items) {
        auto it = vectors_.find(std::string(item.id));
        if (it == vectors_.end()) {
            missing.emplace_back(item.id);
        } else if (missing.empty()) {
            out.push_back(it->second);
        }
    }
    if (!missing.empty()) {
        throw EmbeddingError("no precomputed embedding for " + std::to_string(missing.size()) + " id(s)",
                             std::move(missing));
    }
    return out;
}

void write_embeddings(std::ostream& out, std::size_t dim,
                      std::span<const std::pair<std::string, Vector>> rows) {
    out << "dim\t" << dim << '\n';
    char buf[32];
    for (const auto& [id, v] : rows) {
        if (id.find_first_of("\t\n\r") != std::string::npos) {
            throw IoError("cannot serialize id containing tab or newline: '" + id + "'");
        }
        out << id << '\t';
        for (std::size_t i = 0; i < v.size(); ++i) {
            auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v[i]);
            if (i > 0) {
                out << ' ';
            }
            out.write(buf, end - buf);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// RemoteEmbedder

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config, std::size_t dim)
    : config_(std::move(config)), dim_(dim) {
    if (config_.batch_size == 0) {
        throw ParameterError("remote embedder batch size must be >= 1");
    }
}

std::size_t RemoteEmbedder::dimension() const {
    if (dim_ == 0) {
        // Probe with a single request.
        EmbedItem probe{"", ""};
        embed(std::span<const EmbedItem>(&probe, 1));
    }
    return dim_;
}

std::vector<Vector> RemoteEmbedder::embed(std::span<const EmbedItem> items) const {
    std::vector<Vector> out(items.size());
    std::vector<std::string> failed;
    std::string first_cause;
    for (std::size_t begin = 0; begin < items.size(); begin += config_.batch_size) {
        std::size_t end = std::min(items.size(), begin + config_.batch_size);
        auto fail_batch = [&](const std::string& cause) {
            if (first_cause.empty()) {
                first_cause = cause;
            }
            for (std::size_t i = begin; i < end; ++i) {
                failed.emplace_back(items[i].id);
            }
        };
        nlohmann::json request;
        request["texts"] = nlohmann::json::array();
        for (std::size_t i = begin; i < end; ++i) {
            request["texts"].push_back(std::string(items[i].text));
        }
        try {
            auto response = post_json(config_.endpoint, request);
            const auto& vectors = response.at("vectors");
            if (!vectors.is_array() || vectors.size() != end - begin) {
                throw ProtocolError("expected " + std::to_string(end - begin) + " vectors");
            }
            for (std::size_t i = begin; i < end; ++i) {
                auto v = vectors[i - begin].get<Vector>();
                if (dim_ == 0) {
                    dim_ = v.size();
                }
                if (v.size() != dim_ || v.empty()) {
                    throw ProtocolError("vector of dimension " + std::to_string(v.size()) +
                                        ", expected " + std::to_string(dim_));
                }
                out[i] = std::move(v);
            }
        } catch (const nlohmann::json::exception& e) {
            fail_batch(std::string("malformed response: ") + e.what());
        } catch (const Error& e) {
            fail_batch(e.what());
        }
    }
    if (!failed.empty()) {
        throw EmbeddingError("remote embedder failed for " + std::to_string(failed.size()) +
                                 " item(s): " + first_cause,
                             std::move(failed));
    }
    return out;
}

std::shared_ptr<const Embedder> make_embedder(std::string_view spec,
                                              std::shared_ptr<const Segmenter> segmenter) {
    if (spec == "hashedbow") {
        return std::make_shared<HashedBowEmbedder>(256, std::move(segmenter));
    }
    if (spec.starts_with("hashedbow:")) {
        std::size_t dim = 0;
        auto digits = spec.substr(10);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), dim);
        if (ec != std::errc() || ptr != digits.data() + digits.size()) {
            throw ParameterError("bad hashedbow dimension in '" + std::string(spec) + "'");
        }
        return std::make_shared<HashedBowEmbedder>(dim, std::move(segmenter));
    }
    if (spec.starts_with("file:")) {
        return std::make_shared<FileEmbeddings>(FileEmbeddings::load(std::string(spec.substr(5))));
    }
    if (spec.starts_with("remote:")) {
        RemoteEmbedderConfig cfg;
        cfg.endpoint.url = std::string(spec.substr(7));
        return std::make_shared<RemoteEmbedder>(cfg);
    }
    throw ParameterError("unknown embedder '" + std::string(spec) +
                         "' (expected hashedbow[:dim], file:PATH or remote:URL)");
}

// ---------------------------------------------------------------------------
// EmbeddingIndex

EmbeddingIndex::EmbeddingIndex(std::size_t dim, std::vector<std::string> cids, std::vector<Vector> rows)
    : dim_(dim), cids_(std::move(cids)) {
    if (dim_ == 0) {
        throw ParameterError("embedding index dimension must be >= 1");
    }
    if (rows.size() != cids_.size()) {
        throw ParameterError("embedding index: row count does not match cid count");
    }
    data_.resize(cids_.size() * dim_);
    zero_.resize(cids_.size(), 0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != dim_) {
            throw ParameterError("embedding for '" + cids_[i] + "' has dimension " +
                                 std::to_string(rows[i].size()) + ", expected " + std::to_string(dim_));
        }
        std::span<double> dst(data_.data() + i * dim_, dim_);
        std::copy(rows[i].begin(), rows[i].end(), dst.begin());
        // Rows that are already unit length are kept bit-for-bit so a saved
        // index reloads identically.
        const double norm = l2_norm(dst);
        if (norm == 0.0) {
            zero_[i] = 1;
        } else if (std::abs(norm - 1.0) > 1e-12) {
            for (double& x : dst) {
                x /= norm;
            }
        }
    }
}

std::span<const double> EmbeddingIndex::row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
}

std::vector<std::string> EmbeddingIndex::zero_rows() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < cids_.size(); ++i) {
        if (zero_[i]) {
            out.push_back(cids_[i]);
        }
    }
    return out;
}

void EmbeddingIndex::write(std::ostream& out) const {
    std::vector<std::pair<std::string, Vector>> rows;
    rows.reserve(cids_.size());
    for (std::size_t i = 0; i < cids_.size(); ++i) {
        auto r = row(i);
        rows.emplace_back(cids_[i], Vector(r.begin(), r.end()));
    }
    write_embeddings(out, dim_, rows);
}

void EmbeddingIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    write(out);
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

EmbeddingIndex EmbeddingIndex::read(std::istream& in, std::string_view source) {
    auto file = read_embedding_file(in, source);
    std::vector<std::string> cids;
    std::vector<Vector> rows;
    cids.reserve(file.rows.size());
    rows.reserve(file.rows.size());
    for (auto& [id, v] : file.rows) {
        cids.push_back(std::move(id));
        rows.push_back(std::move(v));
    }
    return EmbeddingIndex(file.dim, std::move(cids), std::move(rows));
}

EmbeddingIndex EmbeddingIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return read(in, path.string());
}

EmbeddingIndex build_dense_index(const Corpus& corpus, const Embedder& embedder, std::size_t batch_size) {
    if (batch_size == 0) {
        throw ParameterError("batch size must be >= 1");
    }
    const auto& docs = corpus.documents();
    std::vector<std::string> cids;
    std::vector<Vector> rows;
    cids.reserve(docs.size());
    rows.reserve(docs.size());
    std::vector<std::string> failed;
    std::string cause;
    for (std::size_t begin = 0; begin < docs.size(); begin += batch_size) {
        std::size_t end = std::min(docs.size(), begin + batch_size);
        std::vector<EmbedItem> items;
        items.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            items.push_back(EmbedItem{docs[i].cid, docs[i].text});
        }
        try {
            auto vectors = embedder.embed(items);
            for (auto& v : vectors) {
                rows.push_back(std::move(v));
            }
        } catch (const EmbeddingError& e) {
            if (cause.empty()) {
                cause = e.what();
            }
            failed.insert(failed.end(), e.failed_ids().begin(), e.failed_ids().end());
        }
    }
    if (!failed.empty()) {
        std::string listing;
        for (std::size_t i = 0; i < failed.size() && i < 20; ++i) {
            listing += (i ? ", " : "") + failed[i];
        }
        if (failed.size() > 20) {
            listing += ", ...";
        }
        throw BuildError("dense index build failed for " + std::to_string(failed.size()) +
                             " cid(s) [" + listing + "]: " + cause,
                         std::move(failed));
    }
    for (const auto& doc : docs) {
        cids.push_back(doc.cid);
    }
    return EmbeddingIndex(embedder.dimension(), std::move(cids), std::move(rows));
}

RankedList dense_topk(const EmbeddingIndex& index, std::span<const double> query, std::size_t k) {
    if (k == 0) {
        throw ParameterError("dense_topk: k must be >= 1");
    }
    if (query.size() != index.dimension()) {
        throw ParameterError("dense_topk: query dimension " + std::to_string(query.size()) +
                             " does not match index dimension " + std::to_string(index.dimension()));
    }
    Vector q(query.begin(), query.end());
    normalize(q);
    RankedList ranked;
    ranked.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        auto r = index.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) {
            dot += q[j] * r[j];
        }
        ranked.push_back(ScoredDoc{index.cid(i), std::clamp(dot, -1.0, 1.0)});
    }
    keep_top_k(ranked, k);
    return ranked;
}

std::map<std::string, Vector> embed_queries(std::span<const Question> questions, const Embedder& embedder,
                                            std::size_t batch_size) {
    if (batch_size == 0) {
        throw ParameterError("batch size must be >= 1");
    }
    std::vector<const Question*> distinct;
    {
        std::map<std::string_view, bool> seen;
        for (const auto& q : questions) {
            if (seen.emplace(q.qid, true).second) {
                distinct.push_back(&q);
            }
        }
    }
    std::map<std::string, Vector> out;
    std::vector<std::string> failed;
    std::string cause;
    for (std::size_t begin = 0; begin < distinct.size(); begin += batch_size) {
        std::size_t end = std::min(distinct.size(), begin + batch_size);
        std::vector<EmbedItem> items;
        for (std::size_t i = begin; i < end; ++i) {
            items.push_back(EmbedItem{distinct[i]->qid, distinct[i]->text});
        }
        try {
            auto vectors = embedder.embed(items);
            for (std::size_t i = begin; i < end; ++i) {
                out.emplace(distinct[i]->qid, std::move(vectors[i - begin]));
            }
        } catch (const EmbeddingError& e) {
            if (cause.empty()) {
                cause = e.what();
            }
            failed.insert(failed.end(), e.failed_ids().begin(), e.failed_ids().end());
        }
    }
    if (!failed.empty()) {
        throw BuildError("query embedding failed for " + std::to_string(failed.size()) + " qid(s): " + cause,
                         std::move(failed));
    }
    return out;
}

}  // namespace legalrank
