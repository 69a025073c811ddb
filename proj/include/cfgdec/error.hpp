#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfgdec {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by load_grammar / make_grammar. Line and column are 1-based; zero
// means the error is not tied to a location in the source text.
class GrammarError : public Error {
 public:
  enum class Kind {
    kSyntax,
    kMixedTail,
    kUndeclaredSymbol,
    kDuplicateRule,
    kDeadNonterminal,
    kMissingStart,
    kKindConflict,
  };

  GrammarError(Kind kind, const std::string& message, std::size_t line = 0,
               std::size_t column = 0);

  Kind kind() const { return kind_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  Kind kind_;
  std::size_t line_;
  std::size_t column_;
};

class ParseError : public Error {
 public:
  enum class Kind { kUnknownToken, kNoParse, kEmptyInput };

  // position: index of the offending token, or of the furthest point the
  // recognizer reached (equal to the input length for truncated input).
  ParseError(Kind kind, const std::string& message, std::size_t position);

  Kind kind() const { return kind_; }
  std::size_t position() const { return position_; }

 private:
  Kind kind_;
  std::size_t position_;
};

class ModelMismatchError : public Error {
 public:
  using Error::Error;
};

class BudgetExceededError : public Error {
 public:
  explicit BudgetExceededError(std::size_t budget);
  std::size_t budget() const { return budget_; }

 private:
  std::size_t budget_;
};

class CorpusError : public Error {
 public:
  CorpusError(const std::string& message, std::size_t line = 0);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfgdec
