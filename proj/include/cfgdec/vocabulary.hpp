#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cfgdec {

namespace reserved {
inline constexpr int kUnk = 0;
inline constexpr int kEos = 1;
inline constexpr int kSep = 2;
inline constexpr int kPad = 3;
inline constexpr int kBos = 4;
inline constexpr int kCount = 5;
}  // namespace reserved

// Token <-> id bijection with the reserved ids <unk>, <eos>, <sep>, <pad>,
// <bos> occupying 0..4. Assigned tokens start at 5.
class Vocabulary {
 public:
  Vocabulary();

  // Returns the existing id if already present.
  int add(std::string_view token);
  // Unknown tokens map to <unk>.
  int id_of(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token_of(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace cfgdec
