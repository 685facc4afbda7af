#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace legalrank {

using Tokens = std::vector<std::string>;

/// Unicode-aware lowercasing of a UTF-8 string (simple case mapping).
/// Invalid byte sequences are passed through unchanged.
std::string to_lower_utf8(std::string_view text);

/// Splits on Unicode White_Space code points, dropping empty pieces.
Tokens split_whitespace_utf8(std::string_view text);

/// Word segmentation hook. Implementations must be pure per text.
class Segmenter {
  public:
    virtual ~Segmenter() = default;

    /// One token list per input text, in input order.
    virtual std::vector<Tokens> segment(std::span<const std::string> texts) const = 0;

    virtual std::string name() const = 0;

    Tokens segment_one(std::string_view text) const;
};

/// Lowercase then split on Unicode whitespace.
class DefaultSegmenter final : public Segmenter {
  public:
    std::vector<Tokens> segment(std::span<const std::string> texts) const override;
    std::string name() const override { return "default"; }
};

/// Runs an external command once per batch. The command reads one raw text
/// per line on stdin and must print one line of space-separated tokens per
/// input line. Line breaks inside a text are sent as spaces. Output tokens are
/// used verbatim (no lowercasing).
class CommandSegmenter final : public Segmenter {
  public:
    explicit CommandSegmenter(std::string command);

    std::vector<Tokens> segment(std::span<const std::string> texts) const override;
    std::string name() const override { return "cmd:" + command_; }

  private:
    std::string command_;
};

/// "default" or "cmd:<shell command>".
std::shared_ptr<const Segmenter> make_segmenter(std::string_view spec);

/// Shared instance of DefaultSegmenter.
const Segmenter& default_segmenter();

inline Tokens tokenize(std::string_view text, const Segmenter& segmenter = default_segmenter()) {
    return segmenter.segment_one(text);
}

}  // namespace legalrank
