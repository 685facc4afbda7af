#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "legalrank/corpus.hpp"
#include "legalrank/dense.hpp"
#include "legalrank/errors.hpp"
#include "legalrank/lexical.hpp"
#include "legalrank/losslab.hpp"
#include "legalrank/metrics.hpp"
#include "legalrank/mining.hpp"
#include "legalrank/pipeline.hpp"
#include "legalrank/text.hpp"

namespace py = pybind11;
using namespace legalrank;

namespace {

template <class T>
std::shared_ptr<T> unconst(std::shared_ptr<const T> p) {
    return std::const_pointer_cast<T>(std::move(p));
}

// Lets Python classes implement Scorer.score(question, candidates) where
// candidates is a list of (cid, text) tuples.
class PyScorer : public Scorer {
  public:
    std::vector<double> score(const Question& question, std::span<const Candidate> candidates) const override {
        py::gil_scoped_acquire gil;
        py::function override = py::get_override(static_cast<const Scorer*>(this), "score");
        if (!override) {
            throw ScorerError("Python scorer does not implement score()");
        }
        py::list items;
        for (const auto& c : candidates) {
            items.append(py::make_tuple(std::string(c.cid), std::string(c.text)));
        }
        return override(question, items).cast<std::vector<double>>();
    }

    std::string name() const override {
        py::gil_scoped_acquire gil;
        py::function override = py::get_override(static_cast<const Scorer*>(this), "name");
        return override ? override().cast<std::string>() : "python";
    }
};

std::vector<Vector> embed_pairs(const Embedder& e, const std::vector<std::pair<std::string, std::string>>& items) {
    std::vector<EmbedItem> views;
    views.reserve(items.size());
    for (const auto& [id, text] : items) {
        views.push_back(EmbedItem{id, text});
    }
    return e.embed(views);
}

py::dict report_dict(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_legalrank, m) {
    m.doc() = "legalrank core bindings";
    m.attr("__version__") = "0.1.0";

    auto error = py::register_exception<Error>(m, "Error");
    py::register_exception<FormatError>(m, "FormatError", error);
    py::register_exception<IngestionError>(m, "IngestionError", error);
    py::register_exception<ParameterError>(m, "ParameterError", error);
    py::register_exception<LookupError>(m, "NotFoundError", error);
    py::register_exception<SegmentationError>(m, "SegmentationError", error);
    py::register_exception<BuildError>(m, "BuildError", error);
    py::register_exception<EmbeddingError>(m, "EmbeddingError", error);
    py::register_exception<ProtocolError>(m, "ProtocolError", error);
    py::register_exception<ScorerError>(m, "ScorerError", error);
    py::register_exception<PipelineError>(m, "PipelineError", error);
    py::register_exception<TrainingError>(m, "TrainingError", error);
    py::register_exception<IoError>(m, "IoError", error);

    // --- text --------------------------------------------------------------
    py::class_<Segmenter, std::shared_ptr<Segmenter>>(m, "Segmenter")
        .def("segment", [](const Segmenter& s, const std::vector<std::string>& texts) { return s.segment(texts); })
        .def("segment_one", &Segmenter::segment_one)
        .def_property_readonly("name", &Segmenter::name);
    m.def("make_segmenter", [](const std::string& spec) { return unconst(make_segmenter(spec)); },
          py::arg("spec") = "default", "'default' or 'cmd:COMMAND'");
    m.def("tokenize", [](const std::string& text) { return tokenize(text); }, py::arg("text"));

    // --- corpus ------------------------------------------------------------
    py::class_<Document>(m, "Document")
        .def(py::init<std::string, std::string>(), py::arg("cid"), py::arg("text"))
        .def_readwrite("cid", &Document::cid)
        .def_readwrite("text", &Document::text)
        .def("__repr__", [](const Document& d) { return "Document(cid='" + d.cid + "')"; });

    py::class_<QaRecord>(m, "QaRecord")
        .def(py::init<>())
        .def_readwrite("qid", &QaRecord::qid)
        .def_readwrite("question", &QaRecord::question)
        .def_readwrite("contexts", &QaRecord::contexts)
        .def_readwrite("cids", &QaRecord::cids);

    py::class_<QaPair>(m, "QaPair")
        .def(py::init<std::string, std::string, std::string>(), py::arg("qid"), py::arg("question"), py::arg("cid"))
        .def_readwrite("qid", &QaPair::qid)
        .def_readwrite("question", &QaPair::question)
        .def_readwrite("cid", &QaPair::cid)
        .def(py::self == py::self)
        .def("__repr__", [](const QaPair& p) { return "QaPair(qid='" + p.qid + "', cid='" + p.cid + "')"; });

    py::class_<Corpus, std::shared_ptr<Corpus>>(m, "Corpus")
        .def(py::init<std::vector<Document>>(), py::arg("documents"))
        .def("__len__", &Corpus::size)
        .def("__contains__", &Corpus::contains)
        .def("__getitem__", [](const Corpus& c, std::size_t i) {
            if (i >= c.size()) {
                throw py::index_error();
            }
            return c[i];
        })
        .def("lookup", &Corpus::lookup)
        .def("position", &Corpus::position)
        .def_property_readonly("documents", &Corpus::documents);

    m.def("load_corpus", &load_corpus, py::arg("path"));
    m.def("load_qa", &load_qa, py::arg("path"));
    m.def("parse_list_cell", &parse_list_cell, py::arg("cell"));
    m.def("normalize_qa", &normalize_qa, py::arg("records"), py::arg("corpus"));
    m.def("split_train_eval", [](const std::vector<QaPair>& pairs, double ratio, std::uint64_t seed) {
        auto s = split_train_eval(pairs, ratio, seed);
        return py::make_tuple(s.train, s.eval);
    }, py::arg("pairs"), py::arg("ratio") = 0.9, py::arg("seed") = 42);
    m.def("length_histogram", [](const std::vector<std::string>& texts, const std::vector<std::size_t>& edges) {
        return length_histogram(texts, edges);
    }, py::arg("texts"), py::arg("edges"));
    m.def("answers_per_question", &answers_per_question, py::arg("records"), py::arg("max_bucket") = 4);
    m.def("save_qa_pairs", [](const std::filesystem::path& p, const std::vector<QaPair>& pairs) {
        save_qa_pairs(p, pairs);
    });
    m.def("load_qa_pairs", &load_qa_pairs);

    // --- ranking -----------------------------------------------------------
    py::class_<ScoredDoc>(m, "ScoredDoc")
        .def(py::init<std::string, double>(), py::arg("cid"), py::arg("score"))
        .def_readwrite("cid", &ScoredDoc::cid)
        .def_readwrite("score", &ScoredDoc::score)
        .def(py::self == py::self)
        .def("__repr__", [](const ScoredDoc& d) {
            return "ScoredDoc(cid='" + d.cid + "', score=" + std::to_string(d.score) + ")";
        });

    // --- lexical -----------------------------------------------------------
    py::enum_<Bm25Variant>(m, "Bm25Variant").value("okapi", Bm25Variant::okapi).value("plus", Bm25Variant::plus);

    py::class_<Bm25Params>(m, "Bm25Params")
        .def(py::init([](const std::string& variant, double k1, double b, std::optional<double> delta) {
                 Bm25Params p{parse_bm25_variant(variant), k1, b, 0.0};
                 p.delta = delta.value_or(p.variant == Bm25Variant::plus ? 1.0 : 0.0);
                 p.validate();
                 return p;
             }),
             py::arg("variant") = "okapi", py::arg("k1") = 1.5, py::arg("b") = 0.75, py::arg("delta") = py::none())
        .def_readwrite("variant", &Bm25Params::variant)
        .def_readwrite("k1", &Bm25Params::k1)
        .def_readwrite("b", &Bm25Params::b)
        .def_readwrite("delta", &Bm25Params::delta)
        .def("__repr__", [](const Bm25Params& p) {
            return "Bm25Params(" + std::string(to_string(p.variant)) + ", k1=" + std::to_string(p.k1) +
                   ", b=" + std::to_string(p.b) + ", delta=" + std::to_string(p.delta) + ")";
        });
    m.def("bm25_comparison_grid", &bm25_comparison_grid);

    py::class_<InvertedIndex, std::shared_ptr<InvertedIndex>>(m, "InvertedIndex")
        .def_static("build", [](const Corpus& corpus, const std::shared_ptr<Segmenter>& seg, unsigned threads) {
            return InvertedIndex::build(corpus, seg ? *seg : default_segmenter(), threads);
        }, py::arg("corpus"), py::arg("segmenter") = nullptr, py::arg("threads") = 1)
        .def_static("from_tokens", &InvertedIndex::from_tokens, py::arg("cids"), py::arg("documents"))
        .def_static("load", &InvertedIndex::load)
        .def("save", &InvertedIndex::save)
        .def_property_readonly("num_docs", &InvertedIndex::num_docs)
        .def_property_readonly("num_terms", &InvertedIndex::num_terms)
        .def_property_readonly("avgdl", &InvertedIndex::avgdl)
        .def("df", &InvertedIndex::df)
        .def("tf", &InvertedIndex::tf)
        .def(py::self == py::self);

    m.def("bm25_score", [](const InvertedIndex& idx, const Bm25Params& p, const Tokens& q, const std::string& cid) {
        return bm25_score(idx, p, q, cid);
    }, py::arg("index"), py::arg("params"), py::arg("query_tokens"), py::arg("cid"));
    m.def("lexical_topk", [](const InvertedIndex& idx, const Bm25Params& p, const Tokens& q, std::size_t k) {
        return lexical_topk(idx, p, q, k);
    }, py::arg("index"), py::arg("params"), py::arg("query_tokens"), py::arg("k"));
    m.def("lexical_search", [](const InvertedIndex& idx, const Bm25Params& p, const std::string& q, std::size_t k) {
        return lexical_topk(idx, p, std::string_view(q), k);
    }, py::arg("index"), py::arg("params"), py::arg("query"), py::arg("k"));

    // --- dense -------------------------------------------------------------
    m.def("cosine", [](const Vector& u, const Vector& v) { return cosine(u, v); });

    py::class_<Embedder, std::shared_ptr<Embedder>>(m, "Embedder")
        .def_property_readonly("dimension", &Embedder::dimension)
        .def_property_readonly("name", &Embedder::name)
        .def("embed", &embed_pairs, py::arg("items"), "items: list of (id, text)");
    py::class_<HashedBowEmbedder, Embedder, std::shared_ptr<HashedBowEmbedder>>(m, "HashedBowEmbedder")
        .def(py::init([](std::size_t dim) { return std::make_shared<HashedBowEmbedder>(dim); }), py::arg("dim") = 256)
        .def("embed_tokens", &HashedBowEmbedder::embed_tokens);
    m.def("make_embedder", [](const std::string& spec) { return unconst(make_embedder(spec)); }, py::arg("spec"));

    py::class_<EmbeddingIndex, std::shared_ptr<EmbeddingIndex>>(m, "EmbeddingIndex")
        .def_static("load", &EmbeddingIndex::load)
        .def("save", &EmbeddingIndex::save)
        .def("__len__", &EmbeddingIndex::size)
        .def_property_readonly("dimension", &EmbeddingIndex::dimension)
        .def("cid", &EmbeddingIndex::cid)
        .def("row", [](const EmbeddingIndex& ix, std::size_t i) {
            auto r = ix.row(i);
            return Vector(r.begin(), r.end());
        })
        .def("zero_rows", &EmbeddingIndex::zero_rows);
    m.def("build_dense_index", &build_dense_index, py::arg("corpus"), py::arg("embedder"),
          py::arg("batch_size") = 256);
    m.def("dense_topk", [](const EmbeddingIndex& ix, const Vector& q, std::size_t k) { return dense_topk(ix, q, k); },
          py::arg("index"), py::arg("query"), py::arg("k"));

    // --- metrics -----------------------------------------------------------
    m.def("exist_at_m", &exist_at_m, py::arg("run"), py::arg("qrels"), py::arg("m"));
    m.def("mrr_at_k", &mrr_at_k, py::arg("run"), py::arg("qrels"), py::arg("k"));
    py::class_<MetricReport>(m, "MetricReport")
        .def_readonly("exist", &MetricReport::exist)
        .def_readonly("mrr", &MetricReport::mrr)
        .def_readonly("num_queries", &MetricReport::num_queries)
        .def_readonly("m", &MetricReport::m)
        .def_readonly("k", &MetricReport::k)
        .def("to_dict", [](const MetricReport& r) { return report_dict(r.to_json()); });
    m.def("evaluate_run", &evaluate_run, py::arg("run"), py::arg("qrels"), py::arg("m") = 90, py::arg("k") = 10);
    m.def("qrels_from_pairs", &qrels_from_pairs);
    m.def("save_run", &save_run);
    m.def("load_run", &load_run);
    m.def("save_qrels", &save_qrels);
    m.def("load_qrels", &load_qrels);

    // --- mining ------------------------------------------------------------
    py::class_<MiningConfig>(m, "MiningConfig")
        .def(py::init([](const std::string& strategy, std::size_t n, std::uint64_t seed, std::size_t pool) {
                 MiningConfig c{parse_mining_strategy(strategy), n, seed, pool};
                 c.validate();
                 return c;
             }),
             py::arg("strategy") = "semi_hard", py::arg("n") = 5, py::arg("seed") = 42, py::arg("pool_size") = 90)
        .def_property_readonly("strategy", [](const MiningConfig& c) { return std::string(to_string(c.strategy)); })
        .def_readwrite("n", &MiningConfig::n)
        .def_readwrite("seed", &MiningConfig::seed)
        .def_readwrite("pool_size", &MiningConfig::pool_size);
    py::class_<QuestionGroup>(m, "QuestionGroup")
        .def(py::init<std::string, std::string, std::vector<std::string>>(), py::arg("qid"), py::arg("question"),
             py::arg("gold"))
        .def_readwrite("qid", &QuestionGroup::qid)
        .def_readwrite("question", &QuestionGroup::question)
        .def_readwrite("gold", &QuestionGroup::gold);
    py::class_<LabeledPair>(m, "LabeledPair")
        .def_readonly("qid", &LabeledPair::qid)
        .def_readonly("question", &LabeledPair::question)
        .def_readonly("cid", &LabeledPair::cid)
        .def_readonly("label", &LabeledPair::label)
        .def_readonly("strategy", &LabeledPair::strategy)
        .def_readonly("rank", &LabeledPair::rank)
        .def(py::self == py::self);
    m.def("group_pairs", &group_pairs);
    m.def("mine_negatives", &mine_negatives, py::arg("question"), py::arg("candidates"), py::arg("corpus"),
          py::arg("config"));
    m.def("mine_all", [](const Corpus& corpus, const std::vector<QuestionGroup>& groups, const Run& run,
                         const MiningConfig& cfg, unsigned threads) {
        return NegativeMiner(corpus).mine_all(groups, run, cfg, threads);
    }, py::arg("corpus"), py::arg("groups"), py::arg("candidates"), py::arg("config"), py::arg("threads") = 1);
    py::class_<BandReport>(m, "BandReport")
        .def_readonly("fractions", &BandReport::fractions)
        .def_readonly("mean", &BandReport::mean)
        .def_readonly("count", &BandReport::count)
        .def("to_dict", [](const BandReport& r) { return report_dict(r.to_json()); });
    m.def("band_stats", [](const std::vector<double>& s) { return band_stats(s); }, py::arg("scores"));
    m.def("export_pairs", &export_pairs, py::arg("positives"), py::arg("negatives"), py::arg("path"));
    m.def("import_pairs", &import_pairs, py::arg("path"));

    // --- losslab -----------------------------------------------------------
    auto ll = m.def_submodule("losslab", "loss functions with analytic gradients and a toy bi-encoder");
    py::class_<losslab::LossReport>(ll, "LossReport")
        .def_readonly("loss", &losslab::LossReport::loss)
        .def_readonly("gradient", &losslab::LossReport::gradient);
    ll.def("mnrl_loss", &losslab::mnrl_loss, py::arg("sim"), py::arg("scale") = 20.0);
    ll.def("bce_with_logits", &losslab::bce_with_logits, py::arg("logits"), py::arg("labels"));
    ll.def("cosine_mse_loss", &losslab::cosine_mse_loss, py::arg("sims"), py::arg("targets"));
    ll.def("sigmoid", &losslab::sigmoid);
    ll.def("finite_diff", &losslab::finite_diff, py::arg("f"), py::arg("x"), py::arg("eps") = 1e-5);
    py::class_<losslab::TokenPair>(ll, "TokenPair")
        .def(py::init<Tokens, Tokens>(), py::arg("query"), py::arg("document"))
        .def_readwrite("query", &losslab::TokenPair::query)
        .def_readwrite("document", &losslab::TokenPair::document);
    py::class_<losslab::ToyConfig>(ll, "ToyConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &losslab::ToyConfig::learning_rate)
        .def_readwrite("epochs", &losslab::ToyConfig::epochs)
        .def_readwrite("batch_size", &losslab::ToyConfig::batch_size)
        .def_readwrite("seed", &losslab::ToyConfig::seed)
        .def_readwrite("dim", &losslab::ToyConfig::dim)
        .def_readwrite("scale", &losslab::ToyConfig::scale)
        .def_readwrite("init_std", &losslab::ToyConfig::init_std);
    py::class_<losslab::EpochTrace>(ll, "EpochTrace")
        .def_readonly("epoch", &losslab::EpochTrace::epoch)
        .def_readonly("loss", &losslab::EpochTrace::loss)
        .def_readonly("diag_mean", &losslab::EpochTrace::diag_mean)
        .def_readonly("offdiag_mean", &losslab::EpochTrace::offdiag_mean);
    py::class_<losslab::ToyEmbedder>(ll, "ToyEmbedder")
        .def_property_readonly("weights", [](const losslab::ToyEmbedder& e) { return e.weights(); })
        .def_property_readonly("vocabulary", &losslab::ToyEmbedder::vocabulary)
        .def("similarity", [](const losslab::ToyEmbedder& e, const Tokens& a, const Tokens& b) {
            return e.similarity(a, b);
        });
    py::class_<losslab::ToyTrainingResult>(ll, "ToyTrainingResult")
        .def_readonly("embedder", &losslab::ToyTrainingResult::embedder)
        .def_readonly("trace", &losslab::ToyTrainingResult::trace);
    ll.def("toy_train", [](const std::vector<losslab::TokenPair>& pairs, const std::string& kind,
                           const losslab::ToyConfig& cfg) {
        return losslab::toy_train(pairs, losslab::parse_loss_kind(kind), cfg);
    }, py::arg("pairs"), py::arg("loss"), py::arg("config"));
    ll.def("demo_pairs", &losslab::demo_pairs);
    ll.def("demo_config", &losslab::demo_config);

    // --- pipeline ----------------------------------------------------------
    py::class_<Question>(m, "Question")
        .def(py::init<std::string, std::string>(), py::arg("qid"), py::arg("text"))
        .def_readwrite("qid", &Question::qid)
        .def_readwrite("text", &Question::text);

    py::class_<Scorer, PyScorer, std::shared_ptr<Scorer>>(m, "Scorer")
        .def(py::init<>())
        .def("score", [](const Scorer& s, const Question& q,
                         const std::vector<std::pair<std::string, std::string>>& items) {
            std::vector<Candidate> cands;
            for (const auto& [cid, text] : items) {
                cands.push_back(Candidate{cid, text});
            }
            return s.score(q, cands);
        }, py::arg("question"), py::arg("candidates"))
        .def("name", &Scorer::name);
    py::class_<CosineScorer, Scorer, std::shared_ptr<CosineScorer>>(m, "CosineScorer")
        .def(py::init<std::shared_ptr<const Embedder>>(), py::arg("embedder"));
    py::class_<Bm25Scorer, Scorer, std::shared_ptr<Bm25Scorer>>(m, "Bm25Scorer")
        .def(py::init([](std::shared_ptr<InvertedIndex> index, const Bm25Params& params) {
            return std::make_shared<Bm25Scorer>(std::move(index), params);
        }), py::arg("index"), py::arg("params") = Bm25Params{});
    py::class_<BlendScorer, Scorer, std::shared_ptr<BlendScorer>>(m, "BlendScorer")
        .def(py::init<std::shared_ptr<const Bm25Scorer>, std::shared_ptr<const CosineScorer>, double, double>(),
             py::arg("bm25"), py::arg("cosine"), py::arg("bm25_weight") = 0.5, py::arg("cosine_weight") = 0.5);
    py::class_<OracleScorer, Scorer, std::shared_ptr<OracleScorer>>(m, "OracleScorer")
        .def(py::init<Qrels>(), py::arg("qrels"));
    py::class_<ConstantScorer, Scorer, std::shared_ptr<ConstantScorer>>(m, "ConstantScorer")
        .def(py::init<double>(), py::arg("value") = 0.0);
    py::class_<RemoteScorer, Scorer, std::shared_ptr<RemoteScorer>>(m, "RemoteScorer")
        .def(py::init([](const std::string& url, std::size_t batch, std::size_t in_flight, double timeout_s) {
            RemoteScorerConfig c;
            c.endpoint.url = url;
            c.endpoint.timeout = std::chrono::milliseconds(static_cast<long>(timeout_s * 1000));
            c.batch_size = batch;
            c.max_in_flight = in_flight;
            return std::make_shared<RemoteScorer>(c);
        }), py::arg("url"), py::arg("batch_size") = 64, py::arg("max_in_flight") = 4, py::arg("timeout") = 30.0);

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init([](const std::string& retriever, std::size_t k_retrieve, std::size_t k_final,
                         const Bm25Params& bm25) {
                 PipelineConfig c{parse_retriever_kind(retriever), k_retrieve, k_final, bm25};
                 c.validate();
                 return c;
             }),
             py::arg("retriever") = "dense", py::arg("k_retrieve") = 90, py::arg("k_final") = 10,
             py::arg("bm25") = Bm25Params{})
        .def_readwrite("k_retrieve", &PipelineConfig::k_retrieve)
        .def_readwrite("k_final", &PipelineConfig::k_final)
        .def_readwrite("bm25", &PipelineConfig::bm25);

    py::class_<RetrievalIndexes>(m, "RetrievalIndexes")
        .def(py::init([](std::shared_ptr<InvertedIndex> lexical, std::shared_ptr<EmbeddingIndex> dense,
                         std::shared_ptr<Embedder> query_embedder, std::shared_ptr<Segmenter> segmenter) {
                 return RetrievalIndexes{std::move(lexical), std::move(segmenter), std::move(dense),
                                         std::move(query_embedder)};
             }),
             py::arg("lexical") = nullptr, py::arg("dense") = nullptr, py::arg("query_embedder") = nullptr,
             py::arg("segmenter") = nullptr);

    py::class_<RetrievalResult>(m, "RetrievalResult")
        .def_readonly("candidates", &RetrievalResult::candidates)
        .def_readonly("reranked", &RetrievalResult::reranked);
    m.def("retrieve_rerank", &retrieve_rerank, py::arg("question"), py::arg("config"), py::arg("indexes"),
          py::arg("scorer"), py::arg("corpus"), py::call_guard<py::gil_scoped_release>());

    py::class_<EvalSet>(m, "EvalSet")
        .def_readwrite("questions", &EvalSet::questions)
        .def_readwrite("qrels", &EvalSet::qrels);
    m.def("make_eval_set", &make_eval_set);
    py::class_<PipelineEvaluation>(m, "PipelineEvaluation")
        .def_readonly("report", &PipelineEvaluation::report)
        .def_readonly("stage1", &PipelineEvaluation::stage1)
        .def_readonly("stage2", &PipelineEvaluation::stage2);
    m.def("evaluate_pipeline", &evaluate_pipeline, py::arg("evalset"), py::arg("config"), py::arg("indexes"),
          py::arg("scorer"), py::arg("corpus"), py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>());
}
