#include "commands.hpp"

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "legalrank/corpus.hpp"
#include "legalrank/dense.hpp"
#include "legalrank/errors.hpp"
#include "legalrank/lexical.hpp"
#include "legalrank/losslab.hpp"
#include "legalrank/metrics.hpp"
#include "legalrank/mining.hpp"
#include "legalrank/pipeline.hpp"

namespace fs = std::filesystem;

namespace legalrank::cli {
namespace {

void require(const std::string& value, std::string_view flag) {
    if (value.empty()) {
        throw ParameterError("missing required option --" + std::string(flag));
    }
}

// Writes to the file, or to stdout when the path is empty or "-".
void emit(const std::string& path, const std::function<void(std::ostream&)>& body) {
    if (path.empty() || path == "-") {
        body(std::cout);
        std::cout.flush();
        return;
    }
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    body(out);
    if (!out.flush()) {
        throw IoError("write failed: " + path);
    }
}

fs::path meta_path(const std::string& index) {
    return fs::path(index + ".meta.json");
}

void save_meta(const std::string& index, const nlohmann::ordered_json& meta) {
    emit(meta_path(index).string(), [&](std::ostream& out) { out << meta.dump(2) << '\n'; });
}

nlohmann::json load_meta(const std::string& index) {
    auto p = meta_path(index);
    if (!fs::exists(p)) {
        return nlohmann::json::object();
    }
    std::ifstream in(p);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(p.string() + ": " + e.what());
    }
}

enum class IndexKind { lexical, dense };

IndexKind detect_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    std::string first;
    std::getline(in, first);
    if (first == InvertedIndex::kMagic) {
        return IndexKind::lexical;
    }
    if (first.starts_with("dim\t")) {
        return IndexKind::dense;
    }
    throw FormatError(path + ": not a lexical or dense index");
}

Bm25Params params_from_meta(const nlohmann::json& meta) {
    Bm25Params p;
    if (meta.contains("variant")) {
        p.variant = parse_bm25_variant(meta["variant"].get<std::string>());
    }
    p.k1 = meta.value("k1", p.k1);
    p.b = meta.value("b", p.b);
    p.delta = meta.value("delta", p.variant == Bm25Variant::plus ? 1.0 : 0.0);
    return p;
}

std::vector<std::size_t> parse_edges(const std::string& text) {
    std::vector<std::size_t> edges;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size()) {
            throw ParameterError("bad bucket edge '" + item + "'");
        }
        edges.push_back(v);
    }
    return edges;
}

std::shared_ptr<const Embedder> embedder_for(const std::string& spec) {
    if (spec.starts_with("remote:")) {
        return std::make_shared<RemoteEmbedder>(RemoteEmbedderConfig{HttpEndpoint{spec.substr(7)}});
    }
    return make_embedder(spec);
}

void print_report(const std::string& path, const nlohmann::json& report) {
    emit(path, [&](std::ostream& out) { out << report.dump(2) << '\n'; });
}

}  // namespace

int run_ingest(const IngestOptions& opt) {
    require(opt.corpus, "corpus");
    require(opt.qa, "qa");
    require(opt.out_dir, "out");
    Corpus corpus = load_corpus(opt.corpus);
    auto records = load_qa(opt.qa);
    auto pairs = normalize_qa(records, corpus);
    fs::create_directories(opt.out_dir);
    fs::path dir(opt.out_dir);
    emit((dir / "corpus.csv").string(), [&](std::ostream& out) { write_corpus(out, corpus); });
    save_qa_pairs(dir / "pairs.jsonl", pairs);
    save_qrels(dir / "qrels.tsv", qrels_from_pairs(pairs));
    std::cerr << "ingested " << corpus.size() << " documents, " << records.size() << " questions, "
              << pairs.size() << " pairs into " << opt.out_dir << '\n';
    return 0;
}

int run_split(const SplitOptions& opt) {
    require(opt.pairs, "pairs");
    require(opt.out_dir, "out");
    auto pairs = load_qa_pairs(opt.pairs);
    auto split = split_train_eval(pairs, opt.ratio, opt.seed);
    fs::create_directories(opt.out_dir);
    fs::path dir(opt.out_dir);
    save_qa_pairs(dir / "train.jsonl", split.train);
    save_qa_pairs(dir / "eval.jsonl", split.eval);
    save_qrels(dir / "train_qrels.tsv", qrels_from_pairs(split.train));
    save_qrels(dir / "eval_qrels.tsv", qrels_from_pairs(split.eval));
    std::cerr << "train " << split.train.size() << " pairs, eval " << split.eval.size() << " pairs\n";
    return 0;
}

int run_index_lexical(const LexicalIndexOptions& opt) {
    require(opt.corpus, "corpus");
    require(opt.out, "out");
    Bm25Params params{parse_bm25_variant(opt.variant), opt.k1, opt.b, opt.delta};
    params.validate();
    auto segmenter = make_segmenter(opt.segmenter);
    Corpus corpus = load_corpus(opt.corpus);
    auto index = InvertedIndex::build(corpus, *segmenter, opt.threads);
    index.save(opt.out);
    nlohmann::ordered_json meta;
    meta["kind"] = "lexical";
    meta["variant"] = std::string(to_string(params.variant));
    meta["k1"] = params.k1;
    meta["b"] = params.b;
    meta["delta"] = params.delta;
    meta["segmenter"] = opt.segmenter;
    save_meta(opt.out, meta);
    std::cerr << "indexed " << index.num_docs() << " documents, " << index.num_terms() << " terms\n";
    return 0;
}

int run_index_dense(const DenseIndexOptions& opt) {
    require(opt.corpus, "corpus");
    require(opt.out, "out");
    Corpus corpus = load_corpus(opt.corpus);
    auto embedder = embedder_for(opt.embedder);
    auto index = build_dense_index(corpus, *embedder, opt.batch_size);
    index.save(opt.out);
    nlohmann::ordered_json meta;
    meta["kind"] = "dense";
    meta["embedder"] = opt.embedder;
    save_meta(opt.out, meta);
    auto zeros = index.zero_rows();
    std::cerr << "embedded " << index.size() << " documents (dim " << index.dimension() << ")";
    if (!zeros.empty()) {
        std::cerr << ", " << zeros.size() << " zero vectors";
    }
    std::cerr << '\n';
    return 0;
}

namespace {

struct LoadedIndexes {
    RetrievalIndexes indexes;
    RetrieverKind kind = RetrieverKind::dense;
    Bm25Params bm25;
    std::string embedder_spec = "hashedbow";
};

LoadedIndexes load_indexes(const std::string& path, const std::string& embedder_override) {
    LoadedIndexes loaded;
    auto meta = load_meta(path);
    if (detect_index(path) == IndexKind::lexical) {
        loaded.kind = RetrieverKind::lexical;
        loaded.indexes.lexical = std::make_shared<const InvertedIndex>(InvertedIndex::load(path));
        loaded.indexes.segmenter = make_segmenter(meta.value("segmenter", std::string("default")));
        loaded.bm25 = params_from_meta(meta);
    } else {
        loaded.kind = RetrieverKind::dense;
        loaded.indexes.dense = std::make_shared<const EmbeddingIndex>(EmbeddingIndex::load(path));
        loaded.embedder_spec = meta.value("embedder", std::string("hashedbow"));
    }
    if (!embedder_override.empty()) {
        loaded.embedder_spec = embedder_override;
    }
    if (loaded.kind == RetrieverKind::dense) {
        loaded.indexes.query_embedder = embedder_for(loaded.embedder_spec);
    }
    return loaded;
}

}  // namespace

int run_retrieve(const RetrieveOptions& opt) {
    require(opt.index, "index");
    require(opt.questions, "questions");
    auto loaded = load_indexes(opt.index, opt.embedder);
    PipelineConfig cfg;
    cfg.retriever = loaded.kind;
    cfg.k_retrieve = opt.k;
    cfg.k_final = opt.k;
    cfg.bm25 = loaded.bm25;
    if (!opt.variant.empty()) {
        cfg.bm25.variant = parse_bm25_variant(opt.variant);
    }
    if (opt.k1 >= 0) {
        cfg.bm25.k1 = opt.k1;
    }
    if (opt.b >= 0) {
        cfg.bm25.b = opt.b;
    }
    if (opt.delta >= 0) {
        cfg.bm25.delta = opt.delta;
    }
    cfg.validate();

    auto evalset = make_eval_set(load_qa_pairs(opt.questions));
    Run run;
    for (const auto& q : evalset.questions) {
        run.emplace(q.qid, retrieve(q, cfg, loaded.indexes));
    }
    emit(opt.out, [&](std::ostream& out) { write_run(out, run); });
    return 0;
}

int run_rerank(const RerankOptions& opt) {
    require(opt.corpus, "corpus");
    require(opt.questions, "questions");
    require(opt.index, "index");
    Corpus corpus = load_corpus(opt.corpus);
    auto evalset = make_eval_set(load_qa_pairs(opt.questions));
    auto loaded = load_indexes(opt.index, opt.embedder);

    PipelineConfig cfg;
    cfg.retriever = loaded.kind;
    cfg.k_retrieve = opt.k_retrieve;
    cfg.k_final = opt.k_final;
    cfg.bm25 = loaded.bm25;
    cfg.validate();

    auto lexical_scorer = [&]() {
        std::shared_ptr<const InvertedIndex> index = loaded.indexes.lexical;
        Bm25Params params = loaded.bm25;
        std::shared_ptr<const Segmenter> segmenter = loaded.indexes.segmenter;
        if (!opt.lexical_index.empty()) {
            index = std::make_shared<const InvertedIndex>(InvertedIndex::load(opt.lexical_index));
            auto meta = load_meta(opt.lexical_index);
            params = params_from_meta(meta);
            segmenter = make_segmenter(meta.value("segmenter", std::string("default")));
        }
        if (!index) {
            throw ParameterError("scorer '" + opt.scorer + "' needs --lexical-index");
        }
        return std::make_shared<const Bm25Scorer>(index, params, segmenter);
    };
    auto cosine_scorer = [&]() { return std::make_shared<const CosineScorer>(embedder_for(loaded.embedder_spec)); };

    std::shared_ptr<const Scorer> scorer;
    if (opt.scorer == "oracle") {
        scorer = std::make_shared<const OracleScorer>(evalset.qrels);
    } else if (opt.scorer == "bm25") {
        scorer = lexical_scorer();
    } else if (opt.scorer == "cosine") {
        scorer = cosine_scorer();
    } else if (opt.scorer == "blend") {
        scorer = std::make_shared<const BlendScorer>(lexical_scorer(), cosine_scorer());
    } else if (opt.scorer.starts_with("constant")) {
        double value = 0.0;
        if (auto colon = opt.scorer.find(':'); colon != std::string::npos) {
            value = std::stod(opt.scorer.substr(colon + 1));
        }
        scorer = std::make_shared<const ConstantScorer>(value);
    } else if (opt.scorer.starts_with("remote:")) {
        RemoteScorerConfig rc;
        rc.endpoint.url = opt.scorer.substr(7);
        rc.endpoint.timeout = std::chrono::milliseconds(static_cast<long>(opt.timeout_s * 1000));
        rc.batch_size = opt.batch_size;
        rc.max_in_flight = opt.max_in_flight;
        scorer = std::make_shared<const RemoteScorer>(rc);
    } else {
        throw ParameterError("unknown scorer '" + opt.scorer +
                             "' (expected oracle, bm25, cosine, blend, constant[:v] or remote:URL)");
    }

    auto evaluation = evaluate_pipeline(evalset, cfg, loaded.indexes, *scorer, corpus, opt.threads);
    emit(opt.out, [&](std::ostream& out) { write_run(out, evaluation.stage2); });
    if (!opt.stage1_out.empty()) {
        emit(opt.stage1_out, [&](std::ostream& out) { write_run(out, evaluation.stage1); });
    }
    if (!opt.report.empty()) {
        print_report(opt.report, evaluation.report.to_json());
    }
    return 0;
}

int run_mine(const MineOptions& opt) {
    require(opt.corpus, "corpus");
    require(opt.pairs, "pairs");
    require(opt.out, "out");
    MiningConfig cfg{parse_mining_strategy(opt.strategy), opt.n, opt.seed, opt.pool_size};
    cfg.validate();
    if (cfg.strategy != MiningStrategy::easy && opt.candidates.empty()) {
        throw ParameterError("--candidates is required for the " + opt.strategy + " strategy");
    }
    Corpus corpus = load_corpus(opt.corpus);
    auto positives = load_qa_pairs(opt.pairs);
    Run candidates = opt.candidates.empty() ? Run{} : load_run(opt.candidates);
    auto groups = group_pairs(positives);
    NegativeMiner miner(corpus);
    auto negatives = miner.mine_all(groups, candidates, cfg, opt.threads);
    export_pairs(positives, negatives, opt.out);

    if (!opt.band_report.empty()) {
        std::vector<double> scores;
        for (const auto& neg : negatives) {
            auto it = candidates.find(neg.qid);
            if (it == candidates.end()) {
                continue;
            }
            for (const auto& doc : it->second) {
                if (doc.cid == neg.cid) {
                    scores.push_back(doc.score);
                    break;
                }
            }
        }
        print_report(opt.band_report, band_stats(scores).to_json());
    }
    std::cerr << "mined " << negatives.size() << " " << opt.strategy << " negatives for " << groups.size()
              << " questions\n";
    return 0;
}

int run_eval(const EvalOptions& opt) {
    require(opt.run, "run");
    require(opt.qrels, "qrels");
    Run run = load_run(opt.run);
    Qrels qrels = load_qrels(opt.qrels);
    MetricReport report;
    if (opt.stage1.empty()) {
        report = evaluate_run(run, qrels, opt.m, opt.k);
    } else {
        Run stage1 = load_run(opt.stage1);
        report = evaluate_run(run, qrels, opt.m, opt.k);
        report.exist = exist_at_m(stage1, qrels, opt.m);
    }
    print_report(opt.out, report.to_json());
    return 0;
}

int run_stats(const StatsOptions& opt) {
    if (opt.corpus.empty() && opt.qa.empty()) {
        throw ParameterError("stats needs --corpus and/or --qa");
    }
    auto segmenter = make_segmenter(opt.segmenter);
    auto target = [&](const char* name) {
        return opt.out_dir.empty() ? std::string() : (fs::path(opt.out_dir) / name).string();
    };
    auto histogram = [&](const std::vector<std::string>& texts, const std::string& edges_text, const char* name) {
        auto edges = parse_edges(edges_text);
        auto counts = length_histogram(texts, edges, *segmenter);
        emit(target(name), [&](std::ostream& out) {
            if (opt.out_dir.empty()) {
                out << "# " << name << '\n';
            }
            write_histogram(out, edges, counts);
        });
    };
    if (!opt.corpus.empty()) {
        Corpus corpus = load_corpus(opt.corpus);
        std::vector<std::string> texts;
        texts.reserve(corpus.size());
        for (const auto& d : corpus.documents()) {
            texts.push_back(d.text);
        }
        histogram(texts, opt.corpus_edges, "corpus_lengths.tsv");
    }
    if (!opt.qa.empty()) {
        auto records = load_qa(opt.qa);
        std::vector<std::string> questions;
        for (const auto& r : records) {
            questions.push_back(r.question);
        }
        histogram(questions, opt.question_edges, "question_lengths.tsv");
        auto counts = answers_per_question(records);
        emit(target("answers_per_question.tsv"), [&](std::ostream& out) {
            if (opt.out_dir.empty()) {
                out << "# answers_per_question.tsv\n";
            }
            out << "answers\tquestions\n";
            for (std::size_t i = 0; i < counts.size(); ++i) {
                out << i + 1 << (i + 1 == counts.size() ? "+" : "") << '\t' << counts[i] << '\n';
            }
        });
    }
    return 0;
}

int run_losslab(const LosslabOptions& opt) {
    using namespace losslab;
    auto kind = parse_loss_kind(opt.loss);
    ToyConfig cfg = demo_config();
    if (opt.learning_rate > 0) {
        cfg.learning_rate = opt.learning_rate;
    }
    if (opt.epochs > 0) {
        cfg.epochs = opt.epochs;
    }
    if (opt.batch_size > 0) {
        cfg.batch_size = opt.batch_size;
    }
    cfg.seed = opt.seed;
    cfg.scale = opt.scale;
    auto pairs = demo_pairs();
    auto result = toy_train(pairs, kind, cfg);
    emit(opt.out, [&](std::ostream& out) {
        for (const auto& t : result.trace) {
            nlohmann::ordered_json j;
            j["epoch"] = t.epoch;
            j["loss"] = t.loss;
            j["diag_mean"] = t.diag_mean;
            j["offdiag_mean"] = t.offdiag_mean;
            out << j.dump() << '\n';
        }
    });
    return 0;
}

}  // namespace legalrank::cli
