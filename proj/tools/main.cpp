#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "legalrank/errors.hpp"

namespace {

using legalrank::ParameterError;

std::string trim(std::string s) {
    const char* ws = " \t\r\n";
    s.erase(0, s.find_first_not_of(ws));
    s.erase(s.find_last_not_of(ws) + 1);
    return s;
}

// Flat "key = value" lines; '#' starts a comment. Keys use the long flag
// spelling without dashes ("k-final"), underscores are accepted too.
std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw legalrank::IoError("cannot open config " + path);
    }
    std::map<std::string, std::string> values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw legalrank::FormatError(path + ":" + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        std::replace(key.begin(), key.end(), '_', '-');
        values[key] = value;
    }
    return values;
}

// Fills options the command line left unset. Keys that name no option of the
// chosen subcommand are rejected.
void apply_config(CLI::App& sub, const std::map<std::string, std::string>& values) {
    for (const auto& [key, value] : values) {
        CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (opt == nullptr) {
            throw ParameterError("config key '" + key + "' is not an option of '" + sub.get_name() + "'");
        }
        if (opt->count() > 0) {
            continue;
        }
        opt->add_result(value);
        opt->run_callback();
    }
}

}  // namespace

int main(int argc, char** argv) {
    using namespace legalrank::cli;

    CLI::App app{"Two-stage legal document retrieval: indexing, retrieval, re-ranking, evaluation, "
                 "negative mining and loss experiments"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "flat key = value file; command-line flags take precedence")
        ->check(CLI::ExistingFile);

    IngestOptions ingest;
    auto* c_ingest = app.add_subcommand("ingest", "validate corpus and QA CSVs and write a normalized store");
    c_ingest->add_option("--corpus", ingest.corpus, "corpus CSV (columns text, cid)");
    c_ingest->add_option("--qa", ingest.qa, "QA CSV (columns question, context, cid, qid)");
    c_ingest->add_option("--out", ingest.out_dir, "output directory");

    SplitOptions split;
    auto* c_split = app.add_subcommand("split", "split question/document pairs by qid");
    c_split->add_option("--pairs", split.pairs, "pairs.jsonl from ingest");
    c_split->add_option("--out", split.out_dir, "output directory");
    c_split->add_option("--ratio", split.ratio, "train fraction")->capture_default_str();
    c_split->add_option("--seed", split.seed)->capture_default_str();

    LexicalIndexOptions lex;
    auto* c_lex = app.add_subcommand("index-lexical", "build a BM25 inverted index");
    c_lex->add_option("--corpus", lex.corpus);
    c_lex->add_option("--out", lex.out, "index file");
    c_lex->add_option("--variant", lex.variant, "okapi or plus")->capture_default_str();
    c_lex->add_option("--k1", lex.k1)->capture_default_str();
    c_lex->add_option("--b", lex.b)->capture_default_str();
    c_lex->add_option("--delta", lex.delta, "plus variant only")->capture_default_str();
    c_lex->add_option("--segmenter", lex.segmenter, "default or cmd:COMMAND")->capture_default_str();
    c_lex->add_option("--threads", lex.threads)->capture_default_str();

    DenseIndexOptions dense;
    auto* c_dense = app.add_subcommand("index-dense", "embed the corpus into a dense index");
    c_dense->add_option("--corpus", dense.corpus);
    c_dense->add_option("--out", dense.out, "index file");
    c_dense->add_option("--embedder", dense.embedder, "hashedbow[:DIM] | file:PATH | remote:URL")
        ->capture_default_str();
    c_dense->add_option("--batch-size", dense.batch_size)->capture_default_str();

    RetrieveOptions ret;
    auto* c_ret = app.add_subcommand("retrieve", "first-stage retrieval into a run file");
    c_ret->add_option("--index", ret.index, "lexical or dense index file");
    c_ret->add_option("--questions", ret.questions, "pairs.jsonl");
    c_ret->add_option("--out", ret.out, "run file (stdout when omitted)");
    c_ret->add_option("--k", ret.k)->capture_default_str();
    c_ret->add_option("--embedder", ret.embedder, "query embedder for a dense index");
    c_ret->add_option("--variant", ret.variant);
    c_ret->add_option("--k1", ret.k1);
    c_ret->add_option("--b", ret.b);
    c_ret->add_option("--delta", ret.delta);

    RerankOptions rr;
    auto* c_rr = app.add_subcommand("rerank", "retrieve then re-rank with a scorer");
    c_rr->add_option("--corpus", rr.corpus);
    c_rr->add_option("--questions", rr.questions, "pairs.jsonl; also supplies qrels for the report");
    c_rr->add_option("--index", rr.index, "first-stage index");
    c_rr->add_option("--lexical-index", rr.lexical_index, "index used by the bm25 and blend scorers");
    c_rr->add_option("--embedder", rr.embedder, "query / cosine embedder");
    c_rr->add_option("--scorer", rr.scorer, "oracle | bm25 | cosine | blend | constant[:V] | remote:URL")
        ->capture_default_str();
    c_rr->add_option("--k-retrieve", rr.k_retrieve)->capture_default_str();
    c_rr->add_option("--k-final", rr.k_final)->capture_default_str();
    c_rr->add_option("--out", rr.out, "stage-2 run file (stdout when omitted)");
    c_rr->add_option("--stage1", rr.stage1_out, "stage-1 run file");
    c_rr->add_option("--report", rr.report, "metric report JSON");
    c_rr->add_option("--batch-size", rr.batch_size, "remote scorer batch size")->capture_default_str();
    c_rr->add_option("--max-in-flight", rr.max_in_flight)->capture_default_str();
    c_rr->add_option("--timeout", rr.timeout_s, "remote timeout in seconds")->capture_default_str();
    c_rr->add_option("--threads", rr.threads)->capture_default_str();

    MineOptions mine;
    auto* c_mine = app.add_subcommand("mine", "mine negatives and export labeled training pairs");
    c_mine->add_option("--corpus", mine.corpus);
    c_mine->add_option("--pairs", mine.pairs, "positive pairs.jsonl");
    c_mine->add_option("--candidates", mine.candidates, "first-stage run file");
    c_mine->add_option("--out", mine.out, "training pairs JSONL");
    c_mine->add_option("--strategy", mine.strategy, "hard | semi_hard | easy")->capture_default_str();
    c_mine->add_option("--n", mine.n)->capture_default_str();
    c_mine->add_option("--seed", mine.seed)->capture_default_str();
    c_mine->add_option("--pool-size", mine.pool_size)->capture_default_str();
    c_mine->add_option("--band-report", mine.band_report, "score band report of the mined negatives");
    c_mine->add_option("--threads", mine.threads)->capture_default_str();

    EvalOptions ev;
    auto* c_eval = app.add_subcommand("eval", "Exist@m and MRR@k of a run");
    c_eval->add_option("--run", ev.run);
    c_eval->add_option("--qrels", ev.qrels);
    c_eval->add_option("--stage1", ev.stage1, "measure Exist@m on this run instead");
    c_eval->add_option("--m", ev.m)->capture_default_str();
    c_eval->add_option("--k", ev.k)->capture_default_str();
    c_eval->add_option("--out", ev.out, "report JSON (stdout when omitted)");

    StatsOptions st;
    auto* c_stats = app.add_subcommand("stats", "token-length histograms and answers per question");
    c_stats->add_option("--corpus", st.corpus);
    c_stats->add_option("--qa", st.qa);
    c_stats->add_option("--segmenter", st.segmenter)->capture_default_str();
    c_stats->add_option("--corpus-edges", st.corpus_edges)->capture_default_str();
    c_stats->add_option("--question-edges", st.question_edges)->capture_default_str();
    c_stats->add_option("--out", st.out_dir, "output directory (stdout when omitted)");

    LosslabOptions ll;
    auto* c_ll = app.add_subcommand("losslab", "toy bi-encoder training trace as JSON lines");
    c_ll->add_option("--loss", ll.loss, "mnrl | cosine_mse")->capture_default_str();
    c_ll->add_option("--out", ll.out);
    c_ll->add_option("--lr", ll.learning_rate);
    c_ll->add_option("--epochs", ll.epochs);
    c_ll->add_option("--batch-size", ll.batch_size);
    c_ll->add_option("--seed", ll.seed)->capture_default_str();
    c_ll->add_option("--scale", ll.scale)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        CLI::App* sub = app.get_subcommands().front();
        if (!config_path.empty()) {
            apply_config(*sub, read_config(config_path));
        }
        if (sub == c_ingest) return run_ingest(ingest);
        if (sub == c_split) return run_split(split);
        if (sub == c_lex) return run_index_lexical(lex);
        if (sub == c_dense) return run_index_dense(dense);
        if (sub == c_ret) return run_retrieve(ret);
        if (sub == c_rr) return run_rerank(rr);
        if (sub == c_mine) return run_mine(mine);
        if (sub == c_eval) return run_eval(ev);
        if (sub == c_stats) return run_stats(st);
        if (sub == c_ll) return run_losslab(ll);
    } catch (const legalrank::ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
