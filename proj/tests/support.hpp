#pragma once

#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "legalrank/corpus.hpp"
#include "legalrank/rng.hpp"

namespace testing {

inline std::filesystem::path data_dir() {
    return std::filesystem::path(LEGALRANK_TEST_DATA);
}

// Fresh scratch directory, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("legalrank-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

// Synthetic corpus over a small Zipf-ish vocabulary, deterministic in seed.
inline legalrank::Corpus synthetic_corpus(std::size_t n_docs, std::size_t vocab, std::uint64_t seed,
                                          std::size_t min_len = 3, std::size_t max_len = 40) {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::vector<double> weights(vocab);
    for (std::size_t i = 0; i < vocab; ++i) {
        weights[i] = 1.0 / static_cast<double>(i + 1);
    }
    std::discrete_distribution<std::size_t> word(weights.begin(), weights.end());
    std::vector<legalrank::Document> docs;
    for (std::size_t d = 0; d < n_docs; ++d) {
        std::string text;
        for (std::size_t t = 0, n = len(gen); t < n; ++t) {
            text += (t ? " w" : "w") + std::to_string(word(gen));
        }
        docs.push_back({"d" + std::to_string(1000 + d), text});
    }
    return legalrank::Corpus(std::move(docs));
}

inline std::vector<std::string> random_query(std::mt19937_64& gen, std::size_t vocab, std::size_t max_len = 5) {
    std::uniform_int_distribution<std::size_t> len(1, max_len);
    std::uniform_int_distribution<std::size_t> word(0, vocab + 5);  // a few out-of-vocabulary terms
    std::vector<std::string> q;
    for (std::size_t i = 0, n = len(gen); i < n; ++i) {
        q.push_back("w" + std::to_string(word(gen)));
    }
    return q;
}

// Questions built from a handful of words of a randomly chosen document, so
// the gold is reachable but not always ranked first.
inline std::vector<legalrank::QaPair> synthetic_questions(const legalrank::Corpus& corpus, std::size_t n,
                                                          std::uint64_t seed, std::size_t words = 4) {
    std::mt19937_64 gen(seed);
    const auto& docs = corpus.documents();
    std::uniform_int_distribution<std::size_t> pick(0, docs.size() - 1);
    std::vector<legalrank::QaPair> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& doc = docs[pick(gen)];
        std::vector<std::string> toks;
        std::istringstream in(doc.text);
        for (std::string t; in >> t;) {
            toks.push_back(t);
        }
        std::string text = "w" + std::to_string(gen() % 50);
        for (std::size_t w = 0; w < words && !toks.empty(); ++w) {
            text += " " + toks[gen() % toks.size()];
        }
        pairs.push_back({"q" + std::to_string(i), text, doc.cid});
    }
    return pairs;
}

}  // namespace testing
