#include "cfgdec/error.hpp"

namespace cfgdec {

ParseError::ParseError(Kind kind, const std::string& message, std::size_t position)
    : Error(message), kind_(kind), position_(position) {}

BudgetExceededError::BudgetExceededError(std::size_t budget)
    : Error("step budget of " + std::to_string(budget) + " expansions exhausted; partial output withheld"),
      budget_(budget) {}

CorpusError::CorpusError(const std::string& message, std::size_t line)
    : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message), line_(line) {}

}  // namespace cfgdec
