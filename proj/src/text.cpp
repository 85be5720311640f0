#include "litmine/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "litmine/error.hpp"

namespace litmine::text {
namespace {

constexpr std::string_view kDefaultAbbreviations = R"(# short form or closed compound = canonical phrase
ai=artificial intelligence
ml=machine learning
iot=internet of things
ids=intrusion detection system
scada=supervisory control and data acquisition
cybersecurity=cyber security
cyberrisk=cyber risk
cyberrisks=cyber risks
cyberattack=cyber attack
cyberattacks=cyber attacks
cyberinsurance=cyber insurance
cybercrime=cyber crime
cybercrimes=cyber crimes
cyberthreat=cyber threat
cyberthreats=cyber threats
cyberphysical=cyber physical
cyberdefense=cyber defense
)";

constexpr int kMaxPasses = 16;

// Stopwords used by scikit-learn's CountVectorizer(stop_words="english").
const char* const kEnglishStopwords[] = {
    "a", "about", "above", "across", "after", "afterwards", "again", "against",
    "all", "almost", "alone", "along", "already", "also", "although", "always",
    "am", "among", "amongst", "amoungst", "amount", "an", "and", "another",
    "any", "anyhow", "anyone", "anything", "anyway", "anywhere", "are",
    "around", "as", "at", "back", "be", "became", "because", "become",
    "becomes", "becoming", "been", "before", "beforehand", "behind", "being",
    "below", "beside", "besides", "between", "beyond", "bill", "both",
    "bottom", "but", "by", "call", "can", "cannot", "cant", "co", "con",
    "could", "couldnt", "cry", "de", "describe", "detail", "do", "done",
    "down", "due", "during", "each", "eg", "eight", "either", "eleven", "else",
    "elsewhere", "empty", "enough", "etc", "even", "ever", "every", "everyone",
    "everything", "everywhere", "except", "few", "fifteen", "fifty", "fill",
    "find", "fire", "first", "five", "for", "former", "formerly", "forty",
    "found", "four", "from", "front", "full", "further", "get", "give", "go",
    "had", "has", "hasnt", "have", "he", "hence", "her", "here", "hereafter",
    "hereby", "herein", "hereupon", "hers", "herself", "him", "himself", "his",
    "how", "however", "hundred", "i", "ie", "if", "in", "inc", "indeed",
    "interest", "into", "is", "it", "its", "itself", "keep", "last", "latter",
    "latterly", "least", "less", "ltd", "made", "many", "may", "me",
    "meanwhile", "might", "mill", "mine", "more", "moreover", "most", "mostly",
    "move", "much", "must", "my", "myself", "name", "namely", "neither",
    "never", "nevertheless", "next", "nine", "no", "nobody", "none", "noone",
    "nor", "not", "nothing", "now", "nowhere", "of", "off", "often", "on",
    "once", "one", "only", "onto", "or", "other", "others", "otherwise", "our",
    "ours", "ourselves", "out", "over", "own", "part", "per", "perhaps",
    "please", "put", "rather", "re", "same", "see", "seem", "seemed",
    "seeming", "seems", "serious", "several", "she", "should", "show", "side",
    "since", "sincere", "six", "sixty", "so", "some", "somehow", "someone",
    "something", "sometime", "sometimes", "somewhere", "still", "such",
    "system", "take", "ten", "than", "that", "the", "their", "them",
    "themselves", "then", "thence", "there", "thereafter", "thereby",
    "therefore", "therein", "thereupon", "these", "they", "thick", "thin",
    "third", "this", "those", "though", "three", "through", "throughout",
    "thru", "thus", "to", "together", "too", "top", "toward", "towards",
    "twelve", "twenty", "two", "un", "under", "until", "up", "upon", "us",
    "very", "via", "was", "we", "well", "were", "what", "whatever", "when",
    "whence", "whenever", "where", "whereafter", "whereas", "whereby",
    "wherein", "whereupon", "wherever", "whether", "which", "while", "whither",
    "who", "whoever", "whole", "whom", "whose", "why", "will", "with",
    "within", "without", "would", "yet", "you", "your", "yours", "yourself",
    "yourselves",};

enum class CharClass { keep, drop, boundary };

// Classifies the UTF-8 sequence starting at s[i]; sets `len` to its byte length.
CharClass classify(std::string_view s, std::size_t i, std::size_t& len) {
  const auto c = static_cast<unsigned char>(s[i]);
  len = 1;
  if (c < 0x80) {
    if (std::isalnum(c)) return CharClass::keep;
    if (c == '\'' || c == '`') return CharClass::drop;
    return CharClass::boundary;
  }
  if ((c & 0xE0) == 0xC0) len = 2;
  else if ((c & 0xF0) == 0xE0) len = 3;
  else if ((c & 0xF8) == 0xF0) len = 4;
  if (i + len > s.size()) {
    len = s.size() - i;
    return CharClass::boundary;
  }
  if (len == 2 && c == 0xC2) {
    const auto c2 = static_cast<unsigned char>(s[i + 1]);
    // NBSP, inverted marks, guillemets, middle dot, section sign, etc.
    if (c2 >= 0xA0 && c2 <= 0xBF) return CharClass::boundary;
  }
  if (len == 3 && c == 0xE2 && static_cast<unsigned char>(s[i + 1]) == 0x80) {
    const auto c3 = static_cast<unsigned char>(s[i + 2]);
    if (c3 == 0x98 || c3 == 0x99) return CharClass::drop;  // curly apostrophes
    return CharClass::boundary;  // dashes, quotes, ellipsis, spaces (U+2000..U+203F)
  }
  return CharClass::keep;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& ch : out) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80) ch = static_cast<char>(std::tolower(c));
  }
  return out;
}

std::vector<std::string> canonical_tokens(std::string_view raw,
                                          const AbbreviationTable& abbreviations) {
  auto tokens = tokenize(raw);
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    if (!abbreviations.apply_once(tokens)) break;
  }
  return tokens;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view raw) {
  const std::string lowered = ascii_lower(raw);
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < lowered.size()) {
    std::size_t len = 1;
    switch (classify(lowered, i, len)) {
      case CharClass::keep:
        current.append(lowered, i, len);
        break;
      case CharClass::drop:
        break;
      case CharClass::boundary:
        if (!current.empty()) tokens.push_back(std::move(current));
        current.clear();
        break;
    }
    i += len;
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> split_words(std::string_view cleaned) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && cleaned[i] == ' ') ++i;
    std::size_t j = i;
    while (j < cleaned.size() && cleaned[j] != ' ') ++j;
    if (j > i) words.emplace_back(cleaned.substr(i, j - i));
    i = j;
  }
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

AbbreviationTable AbbreviationTable::defaults() {
  static const AbbreviationTable table = parse(kDefaultAbbreviations);
  return table;
}

AbbreviationTable AbbreviationTable::parse(std::string_view contents) {
  AbbreviationTable table;
  std::istringstream in{std::string(contents)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::data_error,
                  fmt::format("abbreviation table line {}: expected short=expansion", line_no));
    }
    try {
      table.add(std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::data_error,
                  fmt::format("abbreviation table line {}: {}", line_no, e.what()));
    }
  }
  table.validate();
  return table;
}

AbbreviationTable AbbreviationTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::not_found,
                fmt::format("cannot open abbreviation table {}", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void AbbreviationTable::add(std::string_view short_form, std::string_view expansion) {
  auto key = tokenize(short_form);
  auto value = tokenize(expansion);
  if (key.empty() || value.empty()) {
    throw Error(ErrorCode::invalid_argument, "empty abbreviation or expansion");
  }
  max_key_tokens_ = std::max(max_key_tokens_, key.size());
  entries_[std::move(key)] = std::move(value);
}

const std::vector<std::string>* AbbreviationTable::find(
    const std::vector<std::string>& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

bool AbbreviationTable::apply_once(std::vector<std::string>& tokens) const {
  if (entries_.empty()) return false;
  std::vector<std::string> out;
  out.reserve(tokens.size());
  bool changed = false;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    const std::size_t longest = std::min(max_key_tokens_, tokens.size() - i);
    for (std::size_t len = longest; len >= 1; --len) {
      std::vector<std::string> key(tokens.begin() + i, tokens.begin() + i + len);
      if (const auto* exp = find(key)) {
        if (*exp != key) changed = true;
        out.insert(out.end(), exp->begin(), exp->end());
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) out.push_back(tokens[i++]);
  }
  tokens = std::move(out);
  return changed;
}

void AbbreviationTable::validate() const {
  for (const auto& [key, expansion] : entries_) {
    auto tokens = expansion;
    bool settled = false;
    for (int pass = 0; pass < kMaxPasses; ++pass) {
      if (!apply_once(tokens)) {
        settled = true;
        break;
      }
    }
    if (!settled) {
      throw Error(ErrorCode::data_error,
                  fmt::format("abbreviation '{}' expands without reaching a fixed point",
                              join_words(key)));
    }
  }
}

const StopwordSet& english_stopwords() {
  static const StopwordSet words(std::begin(kEnglishStopwords), std::end(kEnglishStopwords));
  return words;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::not_found, fmt::format("cannot open stopword list {}", path.string()));
  }
  StopwordSet words;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (auto& w : tokenize(line)) words.insert(std::move(w));
  }
  return words;
}

std::string normalize_keyword(std::string_view raw, const AbbreviationTable& abbreviations) {
  return join_words(canonical_tokens(raw, abbreviations));
}

std::string preprocess_abstract(std::string_view text, const AbbreviationTable& abbreviations) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorCode::invalid_argument, "empty abstract");
  }
  return join_words(canonical_tokens(text, abbreviations));
}

}  // namespace litmine::text
