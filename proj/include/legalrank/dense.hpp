#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "legalrank/corpus.hpp"
#include "legalrank/http_json.hpp"
#include "legalrank/ranking.hpp"
#include "legalrank/text.hpp"

namespace legalrank {

using Vector = std::vector<double>;

/// dot(u,v) / (|u| |v|), or 0 when either norm is 0. Throws ParameterError on a
/// dimension mismatch.
double cosine(std::span<const double> u, std::span<const double> v);

double l2_norm(std::span<const double> v);

/// Scales `v` to unit length in place; returns false (leaving v zero) when its norm is 0.
bool normalize(std::span<double> v);

/// An item to embed. File-backed embedders key by id, the others by text.
struct EmbedItem {
    std::string_view id;
    std::string_view text;
};

class Embedder {
  public:
    virtual ~Embedder() = default;

    virtual std::size_t dimension() const = 0;

    /// One vector per item, in order. Throws EmbeddingError listing the ids that
    /// could not be embedded; never returns partial results.
    virtual std::vector<Vector> embed(std::span<const EmbedItem> items) const = 0;

    virtual std::string name() const = 0;
};

/// Signed hashed bag of tokens. For each token h = fnv1a64(token bytes) selects
/// coordinate h mod d and sign (+1 if bit 63 of h is clear, else -1); the vector
/// is the L2-normalized sum. Empty token lists give the zero vector.
class HashedBowEmbedder final : public Embedder {
  public:
    explicit HashedBowEmbedder(std::size_t dim = 256,
                               std::shared_ptr<const Segmenter> segmenter = nullptr);

    std::size_t dimension() const override { return dim_; }
    std::vector<Vector> embed(std::span<const EmbedItem> items) const override;
    std::string name() const override;

    Vector embed_tokens(std::span<const std::string> tokens) const;

  private:
    std::size_t dim_;
    std::shared_ptr<const Segmenter> segmenter_;
};

/// Precomputed vectors keyed by id.
///
/// File format (UTF-8): first line "dim<TAB>d", then "id<TAB>f1 f2 ... fd" per
/// item. Floats are decimal, scientific notation allowed.
class FileEmbeddings final : public Embedder {
  public:
    FileEmbeddings(std::size_t dim, std::unordered_map<std::string, Vector> vectors);

    static FileEmbeddings load(const std::filesystem::path& path);
    static FileEmbeddings read(std::istream& in, std::string_view source = "<stream>");

    std::size_t dimension() const override { return dim_; }
    std::vector<Vector> embed(std::span<const EmbedItem> items) const override;
    std::string name() const override { return "file"; }

    std::size_t size() const noexcept { return vectors_.size(); }
    bool contains(std::string_view id) const;

  private:
    std::size_t dim_;
    std::unordered_map<std::string, Vector> vectors_;
};

/// Writes vectors in the FileEmbeddings format with round-trip precision.
void write_embeddings(std::ostream& out, std::size_t dim,
                      std::span<const std::pair<std::string, Vector>> rows);

struct RemoteEmbedderConfig {
    HttpEndpoint endpoint;
    std::size_t batch_size = 64;
};

/// POST {"texts":[...]} -> {"vectors":[[...],...]} in request order.
/// The dimension is fixed by the first response unless given up front.
class RemoteEmbedder final : public Embedder {
  public:
    explicit RemoteEmbedder(RemoteEmbedderConfig config, std::size_t dim = 0);

    std::size_t dimension() const override;
    std::vector<Vector> embed(std::span<const EmbedItem> items) const override;
    std::string name() const override { return "remote:" + config_.endpoint.url; }

  private:
    RemoteEmbedderConfig config_;
    mutable std::size_t dim_;
};

/// "hashedbow", "hashedbow:<dim>", "file:<path>" or "remote:<url>".
std::shared_ptr<const Embedder> make_embedder(std::string_view spec,
                                              std::shared_ptr<const Segmenter> segmenter = nullptr);

/// Row-major matrix of unit-norm document vectors (zero rows for zero-norm
/// embeddings, which are flagged). Immutable after build.
class EmbeddingIndex {
  public:
    EmbeddingIndex() = default;
    EmbeddingIndex(std::size_t dim, std::vector<std::string> cids, std::vector<Vector> rows);

    std::size_t dimension() const noexcept { return dim_; }
    std::size_t size() const noexcept { return cids_.size(); }
    const std::string& cid(std::size_t row) const { return cids_[row]; }
    std::span<const double> row(std::size_t i) const;
    bool is_zero(std::size_t row) const { return zero_[row] != 0; }
    /// cids whose embedding had zero norm, in corpus order.
    std::vector<std::string> zero_rows() const;

    void write(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;
    static EmbeddingIndex load(const std::filesystem::path& path);
    static EmbeddingIndex read(std::istream& in, std::string_view source = "<stream>");

  private:
    std::size_t dim_ = 0;
    std::vector<std::string> cids_;
    std::vector<double> data_;
    std::vector<char> zero_;
};

/// Embeds every document (text keyed by cid) in batches of `batch_size`.
/// Throws BuildError listing the failed cids.
EmbeddingIndex build_dense_index(const Corpus& corpus, const Embedder& embedder,
                                 std::size_t batch_size = 256);

/// Exact scan. The query is normalized, so scores are cosines. Top min(k, N),
/// ties by cid ascending.
RankedList dense_topk(const EmbeddingIndex& index, std::span<const double> query, std::size_t k);

struct Question {
    std::string qid;
    std::string text;
};

/// One vector per distinct qid. Throws BuildError listing failed qids.
std::map<std::string, Vector> embed_queries(std::span<const Question> questions,
                                            const Embedder& embedder,
                                            std::size_t batch_size = 256);

}  // namespace legalrank
