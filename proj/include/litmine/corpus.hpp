#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "litmine/text.hpp"

namespace litmine::corpus {

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;
};

/// Strict YYYY-MM-DD with calendar validation.
std::optional<Date> parse_date(std::string_view text);

struct PaperRecord {
  std::string identifier;
  std::optional<std::string> doi;
  std::string title;
  std::string abstract;                      // `description`
  std::vector<std::string> author_keywords;  // raw `authkeywords` phrases
  std::string cover_date;                    // YYYY-MM-DD
  std::string subtype_description;
  std::string aggregation_type;
  std::string publication_name;
  std::int64_t citedby_count = 0;
  std::vector<std::string> author_names;
  std::optional<std::string> url;
  std::vector<std::string> derived_keywords;  // normalized, set by extraction
  std::set<int> cluster_ids;                  // set by clustering

  int year() const;
  bool has_author_keywords() const;
};

/// Canonical JSONL object, field names as in the Scopus export.
nlohmann::ordered_json to_json(const PaperRecord& record);

/// Maps alias field names onto the canonical schema and validates.
/// Throws Error(data_error) whose message is the malformed reason
/// ("missing title", "missing identifier", "invalid coverDate", ...).
PaperRecord record_from_json(const nlohmann::json& object);

/// Key used for duplicate detection: doi, else identifier, else the
/// normalized title.
std::string dedupe_key(const PaperRecord& record,
                       const text::AbbreviationTable& abbreviations);

/// A record's keyword set: normalized author keywords when present,
/// otherwise its derived keywords.
std::set<std::string> paper_keywords(const PaperRecord& record,
                                     const text::AbbreviationTable& abbreviations);

struct MalformedRecord {
  std::size_t line = 0;  // 1-based line (JSONL) or data row (CSV)
  std::string reason;
};

struct IngestReport {
  std::size_t added = 0;
  std::size_t duplicates_dropped = 0;
  std::vector<MalformedRecord> malformed;

  std::size_t seen() const { return added + duplicates_dropped + malformed.size(); }
};

enum class InputFormat { jsonl, csv };

InputFormat format_from_path(const std::filesystem::path& path);

/// In-memory paper store. Records keep insertion order; the persisted form
/// is JSONL in that order.
class CorpusStore {
 public:
  explicit CorpusStore(text::AbbreviationTable abbreviations = text::AbbreviationTable::defaults());

  static CorpusStore load(const std::filesystem::path& path,
                          text::AbbreviationTable abbreviations = text::AbbreviationTable::defaults());
  void save(const std::filesystem::path& path) const;
  void write_jsonl(std::ostream& out) const;

  /// False (and no change) when the record duplicates an existing one.
  bool insert(PaperRecord record);
  bool is_duplicate(const PaperRecord& record) const;

  std::size_t size() const noexcept { return records_.size(); }
  const std::vector<PaperRecord>& records() const noexcept { return records_; }
  PaperRecord& at(std::size_t index) { return records_.at(index); }
  const PaperRecord* find(std::string_view identifier) const;

  const text::AbbreviationTable& abbreviations() const noexcept { return abbreviations_; }

 private:
  text::AbbreviationTable abbreviations_;
  std::vector<PaperRecord> records_;
  std::unordered_set<std::string> keys_;
  std::unordered_map<std::string, std::size_t> by_identifier_;
};

/// Reads records from `source` into `store`. Per-record problems are
/// counted in the report; an unreadable stream throws.
IngestReport ingest_records(std::istream& source, InputFormat format, CorpusStore& store);
IngestReport ingest_file(const std::filesystem::path& path, CorpusStore& store,
                         std::optional<InputFormat> format = std::nullopt);

/// Splits one CSV document (RFC 4180 quoting) into rows.
std::vector<std::vector<std::string>> parse_csv(std::string_view contents);

/// Normalized keyword -> number of papers that list it.
class KeywordLibrary {
 public:
  KeywordLibrary() = default;
  explicit KeywordLibrary(std::map<std::string, std::size_t, std::less<>> entries)
      : entries_(std::move(entries)) {}

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  bool contains(std::string_view keyword) const;
  std::size_t count(std::string_view keyword) const;
  const std::map<std::string, std::size_t, std::less<>>& entries() const noexcept {
    return entries_;
  }
  std::vector<std::string> keywords() const;

  nlohmann::ordered_json to_json() const;
  static KeywordLibrary from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static KeywordLibrary load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::size_t, std::less<>> entries_;
};

/// Union of normalized author keywords; counts are paper frequencies.
KeywordLibrary build_keyword_library(std::span<const PaperRecord> papers,
                                     const text::AbbreviationTable& abbreviations);

}  // namespace litmine::corpus
