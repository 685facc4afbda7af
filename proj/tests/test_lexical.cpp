#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "legalrank/errors.hpp"
#include "legalrank/lexical.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace legalrank;

namespace {

Corpus tiny(std::vector<std::pair<std::string, std::string>> rows) {
    std::vector<Document> docs;
    for (auto& [cid, text] : rows) {
        docs.push_back({cid, text});
    }
    return Corpus(std::move(docs));
}

}  // namespace

TEST_SUITE("index construction") {
    TEST_CASE("statistics of a two-document corpus") {
        auto idx = InvertedIndex::build(tiny({{"1", "a b"}, {"2", "b"}}));
        CHECK(idx.num_docs() == 2);
        CHECK(idx.avgdl() == 1.5);
        CHECK(idx.df("b") == 2);
        CHECK(idx.df("a") == 1);
        CHECK(idx.df("zzz") == 0);
        CHECK(idx.tf("b", 1) == 1);
        CHECK(idx.postings("b").size() == 2);
    }

    TEST_CASE("empty corpus is a valid index") {
        auto idx = InvertedIndex::build(Corpus{});
        CHECK(idx.num_docs() == 0);
        CHECK(idx.avgdl() == 0.0);
        Tokens q{"a"};
        CHECK(lexical_topk(idx, Bm25Params{}, q, 5).empty());
    }

    TEST_CASE("empty document has length 0 and no postings") {
        auto idx = InvertedIndex::build(tiny({{"e", ""}, {"x", "luật đất"}}));
        CHECK(idx.doc_length(0) == 0);
        for (const auto& term : {"luật", "đất"}) {
            for (const auto& p : idx.postings(term)) {
                CHECK(p.doc != 0);
            }
        }
    }

    TEST_CASE("df equals posting count and avgdl equals mean length") {
        auto corpus = testing::synthetic_corpus(120, 60, 9, 0, 30);
        auto idx = InvertedIndex::build(corpus);
        std::uint64_t total = 0;
        for (std::size_t d = 0; d < idx.num_docs(); ++d) {
            total += idx.doc_length(d);
            CHECK(idx.doc_length(d) == tokenize(corpus[d].text).size());
        }
        CHECK(idx.avgdl() == doctest::Approx(static_cast<double>(total) / 120.0).epsilon(1e-15));
        for (int w = 0; w < 60; ++w) {
            std::string term = "w" + std::to_string(w);
            CHECK(idx.df(term) == idx.postings(term).size());
        }
    }

    TEST_CASE("sharded build equals sequential build") {
        auto corpus = testing::synthetic_corpus(301, 80, 5);
        auto one = InvertedIndex::build(corpus, default_segmenter(), 1);
        auto many = InvertedIndex::build(corpus, default_segmenter(), 7);
        CHECK(one == many);
    }

    TEST_CASE("save and load round-trip statistics exactly") {
        auto corpus = testing::synthetic_corpus(40, 30, 11, 0, 25);
        auto idx = InvertedIndex::build(corpus);
        std::stringstream buf;
        idx.write(buf);
        auto back = InvertedIndex::read(buf);
        CHECK(back == idx);
        CHECK(back.avgdl() == idx.avgdl());
        Tokens q{"w1", "w3", "w7"};
        for (std::size_t d = 0; d < idx.num_docs(); ++d) {
            CHECK(bm25_score(back, Bm25Params{}, q, idx.cid(d)) == bm25_score(idx, Bm25Params{}, q, idx.cid(d)));
        }
    }

    TEST_CASE("reading a foreign file fails") {
        std::istringstream in("not an index\n");
        CHECK_THROWS_AS(InvertedIndex::read(in), FormatError);
    }
}

TEST_SUITE("bm25_score") {
    TEST_CASE("closed-form okapi on a one-document index") {
        auto idx = InvertedIndex::build(tiny({{"x1", "x"}}));
        Tokens q{"x"};
        CHECK(std::abs(bm25_score(idx, Bm25Params::okapi(1.2, 0.75), q, "x1") - std::log(4.0 / 3.0)) < 1e-9);
        CHECK(std::abs(bm25_score(idx, Bm25Params::okapi(1.2, 0.75), q, "x1") - 0.287682) < 1e-6);
    }

    TEST_CASE("closed-form plus on a one-document index") {
        auto idx = InvertedIndex::build(tiny({{"x1", "x"}}));
        Tokens q{"x"};
        CHECK(std::abs(bm25_score(idx, Bm25Params::plus(1.2, 0.75, 1.0), q, "x1") - 2.0 * std::log(2.0)) < 1e-9);
    }

    TEST_CASE("absent terms contribute nothing") {
        auto idx = InvertedIndex::build(tiny({{"1", "a b"}, {"2", "c"}}));
        Tokens absent{"zzz"};
        CHECK(bm25_score(idx, Bm25Params{}, absent, "1") == 0.0);
        Tokens mixed{"a", "zzz"};
        Tokens only{"a"};
        CHECK(bm25_score(idx, Bm25Params{}, mixed, "1") == bm25_score(idx, Bm25Params{}, only, "1"));
        CHECK(bm25_score(idx, Bm25Params::plus(), only, "2") == 0.0);
    }

    TEST_CASE("unknown cid") {
        auto idx = InvertedIndex::build(tiny({{"1", "a"}}));
        Tokens q{"a"};
        CHECK_THROWS_AS(bm25_score(idx, Bm25Params{}, q, "nope"), LookupError);
    }

    TEST_CASE("okapi idf is positive for every df in [1, N]") {
        for (std::size_t n : {1u, 2u, 10u, 1000u}) {
            for (std::size_t df = 1; df <= n; df += std::max<std::size_t>(1, n / 50)) {
                CHECK(bm25_idf(Bm25Params{}, n, df) > 0.0);
            }
            CHECK(bm25_idf(Bm25Params{}, n, n) > 0.0);
        }
    }

    TEST_CASE("adding a matching query term never lowers the score") {
        auto corpus = testing::synthetic_corpus(30, 20, 4);
        auto idx = InvertedIndex::build(corpus);
        std::mt19937_64 gen(1);
        for (int trial = 0; trial < 50; ++trial) {
            auto q = testing::random_query(gen, 20);
            for (std::size_t d = 0; d < idx.num_docs(); ++d) {
                auto base = bm25_score(idx, Bm25Params{}, q, idx.cid(d));
                auto tokens = tokenize(corpus[d].text);
                if (tokens.empty()) {
                    continue;
                }
                auto more = q;
                more.push_back(tokens.front());
                CHECK(bm25_score(idx, Bm25Params{}, more, idx.cid(d)) > base);
            }
        }
    }

    TEST_CASE("with b = 0 the length normalizer ignores document length") {
        // Same tf for "k" in both documents; the second is far longer.
        auto idx = InvertedIndex::build(tiny({{"short", "k k"}, {"long", "k k z z z z z z z z z z"}, {"o", "z"}}));
        Tokens q{"k"};
        auto p = Bm25Params::plus(1.2, 0.0);
        CHECK(bm25_score(idx, p, q, "short") == bm25_score(idx, p, q, "long"));
        auto okapi0 = Bm25Params::okapi(1.2, 0.0);
        CHECK(bm25_score(idx, okapi0, q, "short") == bm25_score(idx, okapi0, q, "long"));
        CHECK(bm25_score(idx, Bm25Params::okapi(1.2, 0.75), q, "short") >
              bm25_score(idx, Bm25Params::okapi(1.2, 0.75), q, "long"));
    }

    TEST_CASE("parameter validation") {
        CHECK_THROWS_AS(Bm25Params::okapi(-0.1, 0.5).validate(), ParameterError);
        CHECK_THROWS_AS(Bm25Params::okapi(1.0, 1.5).validate(), ParameterError);
        CHECK_THROWS_AS(Bm25Params::plus(1.0, 0.5, -1.0).validate(), ParameterError);
        CHECK_NOTHROW(Bm25Params::plus(0.0, 0.0, 0.0).validate());
        CHECK(parse_bm25_variant("plus") == Bm25Variant::plus);
        CHECK_THROWS_AS(parse_bm25_variant("bm25l"), ParameterError);
    }

    TEST_CASE("comparison grid covers the default rows and the plus sweep") {
        auto grid = bm25_comparison_grid();
        REQUIRE(grid.size() == 11);
        CHECK(grid[0] == Bm25Params::okapi(1.5, 0.75));
        CHECK(grid[1] == Bm25Params::plus(1.5, 0.75, 1.0));
        std::size_t plus_cells = 0;
        for (double k1 : {0.8, 1.2, 2.0}) {
            for (double b : {0.0, 0.75, 1.0}) {
                plus_cells += std::count(grid.begin(), grid.end(), Bm25Params::plus(k1, b, 1.0));
            }
        }
        CHECK(plus_cells == 9);
    }
}

TEST_SUITE("lexical_topk") {
    TEST_CASE("k larger than N returns all documents") {
        auto idx = InvertedIndex::build(tiny({{"a", "x y"}, {"b", "y"}, {"c", "z"}}));
        Tokens q{"y"};
        auto top = lexical_topk(idx, Bm25Params{}, q, 10);
        CHECK(top.size() == 3);
    }

    TEST_CASE("ties are broken by cid ascending") {
        auto idx = InvertedIndex::build(tiny({{"d2", "x"}, {"d1", "x"}, {"d3", "y"}}));
        Tokens q{"x"};
        auto top = lexical_topk(idx, Bm25Params{}, q, 3);
        REQUIRE(top.size() == 3);
        CHECK(top[0].cid == "d1");
        CHECK(top[1].cid == "d2");
        CHECK(top[0].score == top[1].score);
        CHECK(top[2].cid == "d3");
    }

    TEST_CASE("empty query orders by cid with zero scores") {
        auto idx = InvertedIndex::build(tiny({{"b", "x"}, {"a", "y"}}));
        auto top = lexical_topk(idx, Bm25Params{}, std::string_view(""), 2);
        REQUIRE(top.size() == 2);
        CHECK(top[0].cid == "a");
        CHECK(top[0].score == 0.0);
    }

    TEST_CASE("k = 0 is rejected") {
        auto idx = InvertedIndex::build(tiny({{"a", "x"}}));
        Tokens q{"x"};
        CHECK_THROWS_AS(lexical_topk(idx, Bm25Params{}, q, 0), ParameterError);
    }

    TEST_CASE("three-document single-term query matches the brute-force oracle") {
        auto corpus = tiny({{"a", "thuế thu nhập thuế"}, {"b", "thuế"}, {"c", "đất đai"}});
        auto idx = InvertedIndex::build(corpus);
        oracle::NaiveBm25 naive(corpus);
        Tokens q{"thuế"};
        auto top = lexical_topk(idx, Bm25Params{}, q, 3);
        REQUIRE(top.size() == 3);
        std::vector<std::pair<double, std::string>> expect;
        for (std::size_t d = 0; d < 3; ++d) {
            expect.emplace_back(-naive.score(Bm25Params{}, q, d), naive.cids[d]);
        }
        std::sort(expect.begin(), expect.end());
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(top[i].cid == expect[i].second);
            CHECK(std::abs(top[i].score + expect[i].first) < 1e-12);
        }
    }

    TEST_CASE("random corpora agree with the naive oracle across the grid") {
        auto corpus = testing::synthetic_corpus(50, 40, 77);
        auto idx = InvertedIndex::build(corpus);
        oracle::NaiveBm25 naive(corpus);
        std::mt19937_64 gen(99);
        for (const auto& p : bm25_comparison_grid()) {
            for (int trial = 0; trial < 10; ++trial) {
                auto q = testing::random_query(gen, 40);
                auto top = lexical_topk(idx, p, q, 50);
                REQUIRE(top.size() == 50);
                for (const auto& doc : top) {
                    CHECK(std::abs(doc.score - naive.score(p, q, corpus.position(doc.cid))) < 1e-9);
                }
                for (std::size_t i = 1; i < top.size(); ++i) {
                    CHECK(ranks_before(top[i - 1], top[i]));
                }
            }
        }
    }

    TEST_CASE("scores are consistent with bm25_score and truncation is a prefix") {
        auto corpus = testing::synthetic_corpus(45, 25, 123);
        auto idx = InvertedIndex::build(corpus);
        std::mt19937_64 gen(5);
        for (int trial = 0; trial < 20; ++trial) {
            auto q = testing::random_query(gen, 25);
            auto all = lexical_topk(idx, Bm25Params::plus(0.8, 1.0), q, 45);
            auto top7 = lexical_topk(idx, Bm25Params::plus(0.8, 1.0), q, 7);
            CHECK(std::equal(top7.begin(), top7.end(), all.begin()));
            for (const auto& doc : all) {
                CHECK(doc.score == bm25_score(idx, Bm25Params::plus(0.8, 1.0), q, doc.cid));
            }
        }
    }
}
