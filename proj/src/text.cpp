#include "legalrank/text.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>
#include <unistd.h>

#include "legalrank/errors.hpp"

namespace legalrank {

namespace {

// Calls visit(codepoint, begin, end) for every code point; invalid sequences
// are reported with codepoint < 0 and their raw byte range.
template <typename Visit>
void for_each_code_point(std::string_view text, Visit&& visit) {
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
    const auto length = static_cast<int32_t>(text.size());
    int32_t i = 0;
    while (i < length) {
        int32_t start = i;
        UChar32 c;
        U8_NEXT(bytes, i, length, c);
        visit(c, static_cast<std::size_t>(start), static_cast<std::size_t>(i));
    }
}

void append_utf8(std::string& out, UChar32 c) {
    std::uint8_t buf[U8_MAX_LENGTH];
    int32_t n = 0;
    U8_APPEND_UNSAFE(buf, n, c);
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

Tokens split_on_spaces(std::string_view line) {
    Tokens tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
            ++i;
        }
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') {
            ++j;
        }
        if (j > i) {
            tokens.emplace_back(line.substr(i, j - i));
        }
        i = j;
    }
    return tokens;
}

class TempFile {
  public:
    TempFile() {
        auto pattern = (std::filesystem::temp_directory_path() / "legalrank-seg-XXXXXX").string();
        std::vector<char> buf(pattern.begin(), pattern.end());
        buf.push_back('\0');
        int fd = ::mkstemp(buf.data());
        if (fd < 0) {
            throw SegmentationError(std::string("cannot create temporary file: ") +
                                    std::strerror(errno));
        }
        ::close(fd);
        path_ = buf.data();
    }
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
    TempFile(const TempFile&) = delete;
    TempFile& operator=(const TempFile&) = delete;

    const std::string& path() const { return path_; }

  private:
    std::string path_;
};

std::string shell_quote(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    out += '\'';
    return out;
}

}  // namespace

std::string to_lower_utf8(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for_each_code_point(text, [&](UChar32 c, std::size_t begin, std::size_t end) {
        if (c < 0) {
            out.append(text.substr(begin, end - begin));
        } else if (c < 0x80) {
            out.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c + ('a' - 'A') : c));
        } else {
            append_utf8(out, u_tolower(c));
        }
    });
    return out;
}

Tokens split_whitespace_utf8(std::string_view text) {
    Tokens tokens;
    std::size_t token_begin = std::string_view::npos;
    for_each_code_point(text, [&](UChar32 c, std::size_t begin, std::size_t) {
        bool space = c >= 0 && u_isUWhiteSpace(c);
        if (space) {
            if (token_begin != std::string_view::npos) {
                tokens.emplace_back(text.substr(token_begin, begin - token_begin));
                token_begin = std::string_view::npos;
            }
        } else if (token_begin == std::string_view::npos) {
            token_begin = begin;
        }
    });
    if (token_begin != std::string_view::npos) {
        tokens.emplace_back(text.substr(token_begin));
    }
    return tokens;
}

Tokens Segmenter::segment_one(std::string_view text) const {
    std::string owned(text);
    auto result = segment(std::span<const std::string>(&owned, 1));
    return std::move(result.at(0));
}

std::vector<Tokens> DefaultSegmenter::segment(std::span<const std::string> texts) const {
    std::vector<Tokens> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        out.push_back(split_whitespace_utf8(to_lower_utf8(text)));
    }
    return out;
}

CommandSegmenter::CommandSegmenter(std::string command) : command_(std::move(command)) {
    if (command_.empty()) {
        throw ParameterError("segmenter command is empty");
    }
}

std::vector<Tokens> CommandSegmenter::segment(std::span<const std::string> texts) const {
    if (texts.empty()) {
        return {};
    }
    TempFile input;
    {
        std::ofstream out(input.path(), std::ios::binary);
        for (const auto& text : texts) {
            for (char c : text) {
                out.put(c == '\n' || c == '\r' ? ' ' : c);
            }
            out.put('\n');
        }
        if (!out) {
            throw SegmentationError("cannot write segmenter input " + input.path());
        }
    }

    std::string shell = "(" + command_ + ") < " + shell_quote(input.path());
    FILE* pipe = ::popen(shell.c_str(), "r");
    if (pipe == nullptr) {
        throw SegmentationError("cannot start segmenter '" + command_ + "': " + std::strerror(errno));
    }
    std::string output;
    char buf[65536];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) {
        output.append(buf, n);
    }
    int status = ::pclose(pipe);
    if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        std::string cause = status == -1           ? std::string(std::strerror(errno))
                            : WIFEXITED(status)    ? "exit status " + std::to_string(WEXITSTATUS(status))
                                                   : "terminated by a signal";
        throw SegmentationError("segmenter '" + command_ + "' failed: " + cause);
    }

    std::vector<Tokens> result;
    result.reserve(texts.size());
    std::size_t pos = 0;
    while (pos < output.size()) {
        std::size_t eol = output.find('\n', pos);
        if (eol == std::string::npos) {
            eol = output.size();
        }
        result.push_back(split_on_spaces(std::string_view(output).substr(pos, eol - pos)));
        pos = eol + 1;
    }
    if (result.size() != texts.size()) {
        throw SegmentationError("segmenter '" + command_ + "' returned " +
                                std::to_string(result.size()) + " lines for " +
                                std::to_string(texts.size()) + " texts");
    }
    return result;
}

const Segmenter& default_segmenter() {
    static const DefaultSegmenter instance;
    return instance;
}

std::shared_ptr<const Segmenter> make_segmenter(std::string_view spec) {
    if (spec.empty() || spec == "default") {
        return std::make_shared<DefaultSegmenter>();
    }
    if (spec.starts_with("cmd:")) {
        return std::make_shared<CommandSegmenter>(std::string(spec.substr(4)));
    }
    throw ParameterError("unknown segmenter '" + std::string(spec) +
                         "' (expected 'default' or 'cmd:<command>')");
}

}  // namespace legalrank
