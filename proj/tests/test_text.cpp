#include <doctest.h>

#include <sstream>

#include "legalrank/csv.hpp"
#include "legalrank/errors.hpp"
#include "legalrank/text.hpp"

using namespace legalrank;

TEST_CASE("default segmenter lowercases and splits on whitespace") {
    CHECK(tokenize("Điều 5 Luật") == Tokens{"điều", "5", "luật"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("  a\tb ") == Tokens{"a", "b"});
    CHECK(tokenize("ĐẤT ĐAI") == Tokens{"đất", "đai"});
}

TEST_CASE("unicode whitespace separates tokens") {
    // no-break space, ideographic space, line separator
    CHECK(tokenize("a b　c d") == Tokens{"a", "b", "c", "d"});
    CHECK(tokenize("\n\r\t ") == Tokens{});
}

TEST_CASE("tokenize is pure") {
    const std::string text = "Người lao động được nghỉ phép năm";
    CHECK(tokenize(text) == tokenize(text));
}

TEST_CASE("to_lower_utf8 keeps invalid bytes") {
    std::string bad = "AB\xff";
    CHECK(to_lower_utf8(bad) == "ab\xff");
}

TEST_CASE("make_segmenter") {
    CHECK(make_segmenter("default")->name() == "default");
    CHECK(make_segmenter("cmd:cat")->name() == "cmd:cat");
    CHECK_THROWS_AS(make_segmenter("pyvi"), ParameterError);
    CHECK_THROWS_AS(make_segmenter("cmd:"), ParameterError);
}

TEST_CASE("external segmenter output is used as tokens") {
    CommandSegmenter seg("sed 's/ /_/'");
    std::vector<std::string> texts{"quyền sử dụng đất", "", "luật\nđất đai"};
    auto out = seg.segment(texts);
    REQUIRE(out.size() == 3);
    CHECK(out[0] == Tokens{"quyền_sử", "dụng", "đất"});
    CHECK(out[1].empty());
    CHECK(out[2] == Tokens{"luật_đất", "đai"});
}

TEST_CASE("external segmenter failures raise SegmentationError") {
    std::vector<std::string> texts{"a b", "c"};
    CHECK_THROWS_AS(CommandSegmenter("exit 3").segment(texts), SegmentationError);
    CHECK_THROWS_AS(CommandSegmenter("head -n 1").segment(texts), SegmentationError);
    try {
        CommandSegmenter("echo boom >&2; exit 4").segment(texts);
        FAIL("expected an exception");
    } catch (const SegmentationError& e) {
        CHECK(std::string(e.what()).find("exit") != std::string::npos);
    }
}

TEST_CASE("csv reader handles quoting, BOM and CRLF") {
    std::istringstream in("\xEF\xBB\xBFtext,cid\r\n\"a, \"\"quoted\"\"\nline\",1\r\n\r\n,2\n");
    csv::Reader r(in);
    auto header = r.next();
    REQUIRE(header);
    CHECK(*header == csv::Row{"text", "cid"});
    auto row = r.next();
    REQUIRE(row);
    CHECK((*row)[0] == "a, \"quoted\"\nline");
    CHECK((*row)[1] == "1");
    CHECK(r.line() == 2);
    row = r.next();
    REQUIRE(row);
    CHECK(*row == csv::Row{"", "2"});
    CHECK_FALSE(r.next());
}

TEST_CASE("csv unterminated quote is a format error") {
    std::istringstream in("a,\"b\n");
    csv::Reader r(in);
    CHECK_THROWS_AS(r.next(), FormatError);
}

TEST_CASE("csv write round-trip") {
    csv::Row row{"plain", "with,comma", "with \"quote\"", "multi\nline", ""};
    std::ostringstream out;
    csv::write_row(out, row);
    std::istringstream in(out.str());
    csv::Reader r(in);
    auto back = r.next();
    REQUIRE(back);
    CHECK(*back == row);
}

TEST_CASE("locate_columns names the missing column") {
    csv::Row header{"cid", "text"};
    auto pos = csv::locate_columns(header, {"text", "cid"}, "x.csv");
    CHECK(pos == std::vector<std::size_t>{1, 0});
    try {
        csv::locate_columns(header, {"text", "qid"}, "x.csv");
        FAIL("expected an exception");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("qid") != std::string::npos);
    }
}
