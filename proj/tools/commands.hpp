#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace legalrank::cli {

struct IngestOptions {
    std::string corpus;
    std::string qa;
    std::string out_dir;
};

struct SplitOptions {
    std::string pairs;
    std::string out_dir;
    double ratio = 0.9;
    std::uint64_t seed = 42;
};

struct LexicalIndexOptions {
    std::string corpus;
    std::string out;
    std::string variant = "okapi";
    double k1 = 1.5;
    double b = 0.75;
    double delta = 1.0;
    std::string segmenter = "default";
    unsigned threads = 1;
};

struct DenseIndexOptions {
    std::string corpus;
    std::string out;
    std::string embedder = "hashedbow";
    std::size_t batch_size = 256;
};

struct RetrieveOptions {
    std::string index;
    std::string questions;
    std::string out;
    std::size_t k = 90;
    std::string embedder;   // dense: overrides the embedder recorded with the index
    std::string variant;    // lexical: override recorded parameters when set
    double k1 = -1.0;
    double b = -1.0;
    double delta = -1.0;
};

struct RerankOptions {
    std::string corpus;
    std::string questions;
    std::string index;
    std::string lexical_index;  // bm25 / blend scorers
    std::string embedder;       // dense retrieval and cosine / blend scorers
    std::string scorer = "cosine";
    std::size_t k_retrieve = 90;
    std::size_t k_final = 10;
    std::string out;
    std::string stage1_out;
    std::string report;
    std::size_t batch_size = 64;
    std::size_t max_in_flight = 4;
    double timeout_s = 30.0;
    unsigned threads = 1;
};

struct MineOptions {
    std::string corpus;
    std::string pairs;
    std::string candidates;
    std::string out;
    std::string strategy = "semi_hard";
    std::size_t n = 5;
    std::uint64_t seed = 42;
    std::size_t pool_size = 90;
    std::string band_report;
    unsigned threads = 1;
};

struct EvalOptions {
    std::string run;
    std::string qrels;
    std::string stage1;
    std::size_t m = 90;
    std::size_t k = 10;
    std::string out;
};

struct StatsOptions {
    std::string corpus;
    std::string qa;
    std::string segmenter = "default";
    std::string corpus_edges = "0,128,256,512,1024";
    std::string question_edges = "0,8,16,32,64";
    std::string out_dir;
};

struct LosslabOptions {
    std::string loss = "mnrl";
    std::string out;
    double learning_rate = -1.0;
    std::size_t epochs = 0;
    std::size_t batch_size = 0;
    std::uint64_t seed = 42;
    double scale = 20.0;
};

int run_ingest(const IngestOptions& opt);
int run_split(const SplitOptions& opt);
int run_index_lexical(const LexicalIndexOptions& opt);
int run_index_dense(const DenseIndexOptions& opt);
int run_retrieve(const RetrieveOptions& opt);
int run_rerank(const RerankOptions& opt);
int run_mine(const MineOptions& opt);
int run_eval(const EvalOptions& opt);
int run_stats(const StatsOptions& opt);
int run_losslab(const LosslabOptions& opt);

}  // namespace legalrank::cli
