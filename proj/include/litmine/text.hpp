#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace litmine::text {

/// Maps short forms and closed-compound spellings to canonical phrases.
///
/// Keys and expansions are stored normalized. Keys may span several tokens
/// ("e commerce"); lookup is greedy longest-match. Tables whose expansions
/// never reach a fixed point are rejected at load time.
class AbbreviationTable {
 public:
  AbbreviationTable() = default;

  /// iot, ml, ai, ids, scada plus the usual "cyber*" closed compounds.
  static AbbreviationTable defaults();

  /// Parses `short=expansion` lines; `#` starts a comment.
  static AbbreviationTable parse(std::string_view contents);
  static AbbreviationTable load(const std::filesystem::path& path);

  void add(std::string_view short_form, std::string_view expansion);

  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t max_key_tokens() const noexcept { return max_key_tokens_; }

  const std::vector<std::string>* find(const std::vector<std::string>& key) const;

  /// One greedy substitution pass; returns true if anything changed.
  bool apply_once(std::vector<std::string>& tokens) const;

  const std::map<std::vector<std::string>, std::vector<std::string>>& entries() const {
    return entries_;
  }

 private:
  void validate() const;

  std::map<std::vector<std::string>, std::vector<std::string>> entries_;
  std::size_t max_key_tokens_ = 0;
};

using StopwordSet = std::set<std::string, std::less<>>;

/// Standard English stopword list.
const StopwordSet& english_stopwords();
StopwordSet load_stopwords(const std::filesystem::path& path);

/// Lowercases ASCII, drops apostrophes, turns every other punctuation or
/// whitespace character into a token boundary. Non-ASCII letters pass
/// through untouched; common Unicode dashes and quotes are treated like
/// their ASCII counterparts.
std::vector<std::string> tokenize(std::string_view raw);

/// Canonical keyword form. Returns "" when nothing survives.
std::string normalize_keyword(std::string_view raw,
                              const AbbreviationTable& abbreviations);

/// Keyword normalization applied across a whole abstract, in order.
/// Throws Error(invalid_argument, "empty abstract") for blank input.
std::string preprocess_abstract(std::string_view text,
                                const AbbreviationTable& abbreviations);

std::vector<std::string> split_words(std::string_view cleaned);
std::string join_words(const std::vector<std::string>& words);

}  // namespace litmine::text
