#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "legalrank/corpus.hpp"
#include "legalrank/errors.hpp"
#include "support.hpp"

using namespace legalrank;

namespace {

Corpus corpus_from(const std::string& csv) {
    std::istringstream in(csv);
    return read_corpus(in, "test.csv");
}

std::vector<QaRecord> qa_from(const std::string& csv) {
    std::istringstream in(csv);
    return read_qa(in, "qa.csv");
}

std::string repeat_tokens(std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        s += "t ";
    }
    return s;
}

}  // namespace

TEST_SUITE("load_corpus") {
    TEST_CASE("two rows, lookup by cid") {
        auto c = corpus_from("text,cid\nvăn bản a,a\nvăn bản b,b\n");
        CHECK(c.size() == 2);
        CHECK(c.lookup("a").text == "văn bản a");
        CHECK(c[1].cid == "b");
        CHECK(c.position("b") == 1);
    }

    TEST_CASE("columns in any order, extra columns ignored") {
        auto c = corpus_from("cid,extra,text\nx,1,hello\n");
        CHECK(c.lookup("x").text == "hello");
    }

    TEST_CASE("duplicate cid is an ingestion error naming the cid") {
        try {
            corpus_from("text,cid\nfoo,a\nbar,a\n");
            FAIL("expected an exception");
        } catch (const IngestionError& e) {
            CHECK(std::string(e.what()).find("'a'") != std::string::npos);
        }
    }

    TEST_CASE("empty text is retained") {
        auto c = corpus_from("text,cid\n\"\",z\nx,y\n");
        REQUIRE(c.contains("z"));
        CHECK(c.lookup("z").text.empty());
    }

    TEST_CASE("missing column names the column") {
        try {
            corpus_from("body,cid\nfoo,a\n");
            FAIL("expected an exception");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("text") != std::string::npos);
        }
    }

    TEST_CASE("unknown cid lookup") {
        auto c = corpus_from("text,cid\nfoo,a\n");
        CHECK_THROWS_AS(c.lookup("nope"), LookupError);
        CHECK(c.find("nope") == nullptr);
    }

    TEST_CASE("fixture file and write round-trip") {
        auto c = load_corpus(testing::data_dir() / "corpus.csv");
        CHECK(c.size() == 10);
        CHECK(c.lookup("1008").text.empty());
        std::ostringstream out;
        write_corpus(out, c);
        auto back = corpus_from(out.str());
        REQUIRE(back.size() == c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            CHECK(back[i].cid == c[i].cid);
            CHECK(back[i].text == c[i].text);
        }
    }
}

TEST_SUITE("load_qa") {
    TEST_CASE("singleton lists") {
        auto recs = qa_from("question,context,cid,qid\nq?,\"['ans']\",[7],q1\n");
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].contexts == std::vector<std::string>{"ans"});
        CHECK(recs[0].cids == std::vector<std::string>{"7"});
    }

    TEST_CASE("two-element lists") {
        auto recs = qa_from("question,context,cid,qid\nq?,\"[\"\"a\"\", \"\"b\"\"]\",\"[1, 2]\",q1\n");
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].contexts == std::vector<std::string>{"a", "b"});
        CHECK(recs[0].cids == std::vector<std::string>{"1", "2"});
    }

    TEST_CASE("bare value is a singleton") {
        auto recs = qa_from("qid,question,context,cid\nq9,hỏi,câu trả lời,55\n");
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].cids == std::vector<std::string>{"55"});
        CHECK(recs[0].contexts == std::vector<std::string>{"câu trả lời"});
    }

    TEST_CASE("length mismatch is a format error citing the qid") {
        try {
            qa_from("question,context,cid,qid\nq?,\"['only one']\",\"[1, 2]\",q42\n");
            FAIL("expected an exception");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("q42") != std::string::npos);
        }
    }

    TEST_CASE("duplicate qid") {
        CHECK_THROWS_AS(qa_from("question,context,cid,qid\na,x,1,q1\nb,y,2,q1\n"), IngestionError);
    }

    TEST_CASE("parse_list_cell variants") {
        CHECK(parse_list_cell("[\"a\", \"b\"]") == std::vector<std::string>{"a", "b"});
        CHECK(parse_list_cell("['it\\'s', \"x\"]") == std::vector<std::string>{"it's", "x"});
        CHECK(parse_list_cell("[1, 2]") == std::vector<std::string>{"1", "2"});
        CHECK(parse_list_cell("  x ") == std::vector<std::string>{"x"});
        CHECK(parse_list_cell("[]").empty());
        CHECK(parse_list_cell("").empty());
        CHECK_THROWS_AS(parse_list_cell("['a', 'b'"), FormatError);
    }
}

TEST_SUITE("normalize_qa") {
    const std::string corpus_csv = "text,cid\nx doc,x\ny doc,y\nz doc,z\n";

    TEST_CASE("multi-answer record splits into one pair per cid") {
        auto c = corpus_from(corpus_csv);
        auto recs = qa_from("question,context,cid,qid\nhỏi,\"['a','b']\",\"['x','y']\",q1\nkhác,c,z,q2\n");
        auto pairs = normalize_qa(recs, c);
        REQUIRE(pairs.size() == 3);
        CHECK(pairs[0] == QaPair{"q1", "hỏi", "x"});
        CHECK(pairs[1] == QaPair{"q1", "hỏi", "y"});
        CHECK(pairs[2] == QaPair{"q2", "khác", "z"});
    }

    TEST_CASE("unknown cid names qid and cid") {
        auto c = corpus_from(corpus_csv);
        auto recs = qa_from("question,context,cid,qid\nhỏi,a,missing,q7\n");
        try {
            normalize_qa(recs, c);
            FAIL("expected an exception");
        } catch (const IngestionError& e) {
            std::string what = e.what();
            CHECK(what.find("q7") != std::string::npos);
            CHECK(what.find("missing") != std::string::npos);
        }
    }

    TEST_CASE("size equals the sum of cid list lengths on the fixture") {
        auto c = load_corpus(testing::data_dir() / "corpus.csv");
        auto recs = load_qa(testing::data_dir() / "qa.csv");
        std::size_t expected = 0;
        for (const auto& r : recs) {
            expected += r.cids.size();
        }
        CHECK(normalize_qa(recs, c).size() == expected);
    }
}

TEST_SUITE("split_train_eval") {
    std::vector<QaPair> make_pairs(std::size_t qids, std::size_t per_qid) {
        std::vector<QaPair> pairs;
        for (std::size_t q = 0; q < qids; ++q) {
            for (std::size_t j = 0; j < per_qid; ++j) {
                pairs.push_back({"q" + std::to_string(q), "question", "c" + std::to_string(q * 10 + j)});
            }
        }
        return pairs;
    }

    std::set<std::string> qids_of(const std::vector<QaPair>& pairs) {
        std::set<std::string> out;
        for (const auto& p : pairs) {
            out.insert(p.qid);
        }
        return out;
    }

    TEST_CASE("ten qids at 0.9 give nine train qids") {
        auto split = split_train_eval(make_pairs(10, 1), 0.9, 42);
        CHECK(qids_of(split.train).size() == 9);
        CHECK(qids_of(split.eval).size() == 1);
    }

    TEST_CASE("deterministic given seed, seed-dependent otherwise") {
        auto pairs = make_pairs(50, 2);
        auto a = split_train_eval(pairs, 0.8, 7);
        auto b = split_train_eval(pairs, 0.8, 7);
        CHECK(a.train == b.train);
        CHECK(a.eval == b.eval);
        auto c = split_train_eval(pairs, 0.8, 8);
        CHECK(qids_of(c.eval) != qids_of(a.eval));
    }

    TEST_CASE("multi-pair qids never straddle and coverage is exact") {
        auto pairs = make_pairs(30, 3);
        auto split = split_train_eval(pairs, 0.7, 2025);
        auto tq = qids_of(split.train);
        for (const auto& q : qids_of(split.eval)) {
            CHECK_FALSE(tq.contains(q));
        }
        CHECK(tq.size() == 21);
        CHECK(split.train.size() + split.eval.size() == pairs.size());
        std::multiset<std::string> all;
        for (const auto* side : {&split.train, &split.eval}) {
            for (const auto& p : *side) {
                all.insert(p.qid + "/" + p.cid);
            }
        }
        std::multiset<std::string> expected;
        for (const auto& p : pairs) {
            expected.insert(p.qid + "/" + p.cid);
        }
        CHECK(all == expected);
    }

    TEST_CASE("ratio out of range") {
        auto pairs = make_pairs(5, 1);
        CHECK_THROWS_AS(split_train_eval(pairs, 0.0, 1), ParameterError);
        CHECK_THROWS_AS(split_train_eval(pairs, 1.0, 1), ParameterError);
        CHECK_THROWS_AS(split_train_eval(pairs, -0.5, 1), ParameterError);
    }
}

TEST_SUITE("length_histogram") {
    TEST_CASE("direct placement") {
        std::vector<std::string> texts{repeat_tokens(1), repeat_tokens(200), repeat_tokens(600)};
        std::vector<std::size_t> edges{0, 128, 256, 512, 1024};
        CHECK(length_histogram(texts, edges) == std::vector<std::size_t>{1, 1, 0, 1, 0});
    }

    TEST_CASE("empty input") {
        std::vector<std::string> texts;
        std::vector<std::size_t> edges{0, 128, 256};
        CHECK(length_histogram(texts, edges) == std::vector<std::size_t>{0, 0, 0});
    }

    TEST_CASE("half-open boundary") {
        std::vector<std::string> texts{repeat_tokens(128)};
        std::vector<std::size_t> edges{0, 128, 256};
        CHECK(length_histogram(texts, edges) == std::vector<std::size_t>{0, 1, 0});
    }

    TEST_CASE("non-ascending edges") {
        std::vector<std::string> texts{"a"};
        std::vector<std::size_t> bad{0, 128, 128};
        CHECK_THROWS_AS(length_histogram(texts, bad), ParameterError);
        std::vector<std::size_t> down{10, 5};
        CHECK_THROWS_AS(length_histogram(texts, down), ParameterError);
    }

    TEST_CASE("counts sum to the number of texts") {
        auto c = testing::synthetic_corpus(200, 50, 3, 0, 300);
        std::vector<std::string> texts;
        for (const auto& d : c.documents()) {
            texts.push_back(d.text);
        }
        std::vector<std::size_t> edges{5, 64, 128};
        auto counts = length_histogram(texts, edges);
        std::size_t total = 0;
        for (auto n : counts) {
            total += n;
        }
        CHECK(total == texts.size());
    }

    TEST_CASE("histogram output format") {
        std::vector<std::size_t> edges{0, 128};
        std::vector<std::size_t> counts{3, 4};
        std::ostringstream out;
        write_histogram(out, edges, counts);
        CHECK(out.str() == "0\t128\t3\n128\tinf\t4\n");
    }
}

TEST_CASE("answers_per_question buckets") {
    std::vector<QaRecord> recs(4);
    recs[0].cids = {"a"};
    recs[1].cids = {"a", "b"};
    recs[2].cids = {"a"};
    recs[3].cids = {"a", "b", "c", "d", "e"};
    CHECK(answers_per_question(recs, 4) == std::vector<std::size_t>{2, 1, 0, 1});
}

TEST_CASE("qa pair jsonl round-trip") {
    std::vector<QaPair> pairs{{"q1", "câu \"hỏi\"", "1"}, {"q1", "câu \"hỏi\"", "2"}, {"q2", "x", "3"}};
    std::ostringstream out;
    write_qa_pairs(out, pairs);
    std::istringstream in(out.str());
    CHECK(read_qa_pairs(in) == pairs);
    std::istringstream bad("{\"qid\": 1}\n");
    CHECK_THROWS_AS(read_qa_pairs(bad), FormatError);
}
