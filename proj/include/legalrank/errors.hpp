#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace legalrank {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file or record (missing column, bad list cell, ...).
class FormatError : public Error {
  public:
    using Error::Error;
};

/// Input that is well-formed but violates a collection invariant (duplicate cid, unknown cid).
class IngestionError : public Error {
  public:
    using Error::Error;
};

/// Out-of-range or inconsistent argument.
class ParameterError : public Error {
  public:
    using Error::Error;
};

class LookupError : public Error {
  public:
    using Error::Error;
};

class SegmentationError : public Error {
  public:
    using Error::Error;
};

/// Index construction failed for a set of items.
class BuildError : public Error {
  public:
    BuildError(const std::string& what, std::vector<std::string> failed_ids = {})
        : Error(what), failed_ids_(std::move(failed_ids)) {}

    const std::vector<std::string>& failed_ids() const noexcept { return failed_ids_; }

  private:
    std::vector<std::string> failed_ids_;
};

/// Embedding source could not produce vectors for some ids.
class EmbeddingError : public Error {
  public:
    EmbeddingError(const std::string& what, std::vector<std::string> failed_ids)
        : Error(what), failed_ids_(std::move(failed_ids)) {}

    const std::vector<std::string>& failed_ids() const noexcept { return failed_ids_; }

  private:
    std::vector<std::string> failed_ids_;
};

/// Remote endpoint answered with something that violates the wire protocol.
class ProtocolError : public Error {
  public:
    using Error::Error;
};

/// Remote endpoint unreachable after all retry attempts.
class ScorerError : public Error {
  public:
    using Error::Error;
};

class PipelineError : public Error {
  public:
    using Error::Error;
};

class TrainingError : public Error {
  public:
    TrainingError(const std::string& what, std::size_t epoch) : Error(what), epoch_(epoch) {}

    std::size_t epoch() const noexcept { return epoch_; }

  private:
    std::size_t epoch_;
};

class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace legalrank
