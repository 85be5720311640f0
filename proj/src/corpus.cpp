#include "litmine/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "litmine/error.hpp"

namespace litmine::corpus {
namespace {

using nlohmann::json;

// Lowercased alias -> canonical field name.
const std::map<std::string, std::string, std::less<>>& field_aliases() {
  static const std::map<std::string, std::string, std::less<>> aliases = {
      {"identifier", "identifier"},
      {"dc:identifier", "identifier"},
      {"scopus_id", "identifier"},
      {"doi", "doi"},
      {"prism:doi", "doi"},
      {"title", "title"},
      {"dc:title", "title"},
      {"description", "description"},
      {"dc:description", "description"},
      {"abstract", "description"},
      {"authkeywords", "authkeywords"},
      {"author_keywords", "authkeywords"},
      {"keywords", "authkeywords"},
      {"coverdate", "coverDate"},
      {"prism:coverdate", "coverDate"},
      {"cover_date", "coverDate"},
      {"citedby_count", "citedby_count"},
      {"citedby-count", "citedby_count"},
      {"cited_by_count", "citedby_count"},
      {"subtypedescription", "subtypeDescription"},
      {"subtype_description", "subtypeDescription"},
      {"aggregationtype", "aggregationType"},
      {"prism:aggregationtype", "aggregationType"},
      {"aggregation_type", "aggregationType"},
      {"publicationname", "publicationName"},
      {"prism:publicationname", "publicationName"},
      {"publication_name", "publicationName"},
      {"author_names", "author_names"},
      {"authornames", "author_names"},
      {"authors", "author_names"},
      {"url", "url"},
      {"prism:url", "url"},
      {"link", "url"},
      {"derived_keywords", "derived_keywords"},
      {"cluster_ids", "cluster_ids"},
  };
  return aliases;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void malformed(const std::string& reason) {
  throw Error(ErrorCode::data_error, reason);
}

std::string scalar_string(const json& v) {
  if (v.is_null()) return {};
  if (v.is_string()) return trim(v.get<std::string>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number()) return fmt::format("{}", v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  malformed("expected a scalar value");
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    auto piece = trim(s.substr(start, end - start));
    if (!piece.empty()) out.push_back(std::move(piece));
    start = end + 1;
  }
  return out;
}

std::vector<std::string> string_list(const json& v, char sep) {
  if (v.is_null()) return {};
  if (v.is_array()) {
    std::vector<std::string> out;
    for (const auto& e : v) {
      auto s = scalar_string(e);
      if (!s.empty()) out.push_back(std::move(s));
    }
    return out;
  }
  return split_list(scalar_string(v), sep);
}

json canonicalize_fields(const json& object) {
  if (!object.is_object()) malformed("record is not a JSON object");
  json out = json::object();
  const auto& aliases = field_aliases();
  for (const auto& [key, value] : object.items()) {
    const auto it = aliases.find(lower(key));
    if (it == aliases.end()) continue;
    // First spelling wins if a record carries two aliases of one field.
    if (!out.contains(it->second)) out[it->second] = value;
  }
  return out;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t pos, std::size_t n) -> int {
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
      if (!std::isdigit(static_cast<unsigned char>(text[i]))) return -1;
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  const int y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
  if (y < 0 || m < 1 || m > 12 || d < 1) return std::nullopt;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  const int max_day = (m == 2 && leap) ? 29 : kDays[m - 1];
  if (d > max_day) return std::nullopt;
  return Date{y, m, d};
}

int PaperRecord::year() const {
  const auto d = parse_date(cover_date);
  return d ? d->year : 0;
}

bool PaperRecord::has_author_keywords() const { return !author_keywords.empty(); }

nlohmann::ordered_json to_json(const PaperRecord& r) {
  nlohmann::ordered_json j;
  j["identifier"] = r.identifier;
  if (r.doi) j["doi"] = *r.doi;
  j["title"] = r.title;
  j["description"] = r.abstract;
  std::string kw;
  for (std::size_t i = 0; i < r.author_keywords.size(); ++i) {
    if (i) kw += " | ";
    kw += r.author_keywords[i];
  }
  j["authkeywords"] = kw;
  j["coverDate"] = r.cover_date;
  j["subtypeDescription"] = r.subtype_description;
  j["aggregationType"] = r.aggregation_type;
  j["publicationName"] = r.publication_name;
  j["citedby_count"] = r.citedby_count;
  j["author_names"] = r.author_names;
  if (r.url) j["url"] = *r.url;
  j["derived_keywords"] = r.derived_keywords;
  j["cluster_ids"] = std::vector<int>(r.cluster_ids.begin(), r.cluster_ids.end());
  return j;
}

PaperRecord record_from_json(const nlohmann::json& object) {
  const json f = canonicalize_fields(object);
  auto get = [&](const char* name) -> std::string {
    return f.contains(name) ? scalar_string(f[name]) : std::string{};
  };

  PaperRecord r;
  r.title = get("title");
  if (r.title.empty()) malformed("missing title");
  r.identifier = get("identifier");
  if (auto doi = get("doi"); !doi.empty()) r.doi = std::move(doi);
  if (r.identifier.empty()) {
    if (!r.doi) malformed("missing identifier");
    r.identifier = "doi:" + *r.doi;
  }
  r.cover_date = get("coverDate");
  if (r.cover_date.empty()) malformed("missing coverDate");
  if (!parse_date(r.cover_date)) malformed("invalid coverDate");

  r.abstract = get("description");
  if (f.contains("authkeywords")) r.author_keywords = string_list(f["authkeywords"], '|');
  r.subtype_description = get("subtypeDescription");
  r.aggregation_type = get("aggregationType");
  r.publication_name = get("publicationName");
  if (f.contains("author_names")) r.author_names = string_list(f["author_names"], ';');
  if (auto url = get("url"); !url.empty()) r.url = std::move(url);

  if (auto cites = get("citedby_count"); !cites.empty()) {
    std::int64_t n = 0;
    std::size_t used = 0;
    try {
      n = std::stoll(cites, &used);
    } catch (const std::exception&) {
      malformed("invalid citedby_count");
    }
    if (used != cites.size() || n < 0) malformed("invalid citedby_count");
    r.citedby_count = n;
  }
  if (f.contains("derived_keywords")) r.derived_keywords = string_list(f["derived_keywords"], '|');
  if (f.contains("cluster_ids") && f["cluster_ids"].is_array()) {
    for (const auto& c : f["cluster_ids"]) {
      if (!c.is_number_integer()) malformed("invalid cluster_ids");
      r.cluster_ids.insert(c.get<int>());
    }
  }
  return r;
}

std::string dedupe_key(const PaperRecord& record, const text::AbbreviationTable& abbreviations) {
  if (record.doi && !record.doi->empty()) return "doi:" + lower(*record.doi);
  if (!record.identifier.empty()) return "id:" + record.identifier;
  return "title:" + text::normalize_keyword(record.title, abbreviations);
}

std::set<std::string> paper_keywords(const PaperRecord& record,
                                     const text::AbbreviationTable& abbreviations) {
  std::set<std::string> out;
  if (record.has_author_keywords()) {
    for (const auto& raw : record.author_keywords) {
      auto kw = text::normalize_keyword(raw, abbreviations);
      if (!kw.empty()) out.insert(std::move(kw));
    }
  } else {
    out.insert(record.derived_keywords.begin(), record.derived_keywords.end());
  }
  return out;
}

InputFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = lower(path.extension().string());
  if (ext == ".csv") return InputFormat::csv;
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return InputFormat::jsonl;
  throw Error(ErrorCode::invalid_argument,
              fmt::format("cannot infer input format from '{}'; use jsonl or csv", path.string()));
}

CorpusStore::CorpusStore(text::AbbreviationTable abbreviations)
    : abbreviations_(std::move(abbreviations)) {}

CorpusStore CorpusStore::load(const std::filesystem::path& path,
                              text::AbbreviationTable abbreviations) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::precondition, fmt::format("cannot open corpus store {}", path.string()));
  }
  CorpusStore store(std::move(abbreviations));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      store.insert(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::data_error,
                  fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return store;
}

void CorpusStore::write_jsonl(std::ostream& out) const {
  for (const auto& r : records_) out << to_json(r).dump() << '\n';
}

void CorpusStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::invalid_argument, fmt::format("cannot write {}", path.string()));
  }
  write_jsonl(out);
}

bool CorpusStore::is_duplicate(const PaperRecord& record) const {
  return keys_.contains(dedupe_key(record, abbreviations_)) ||
         by_identifier_.contains(record.identifier);
}

bool CorpusStore::insert(PaperRecord record) {
  if (is_duplicate(record)) return false;
  keys_.insert(dedupe_key(record, abbreviations_));
  by_identifier_.emplace(record.identifier, records_.size());
  records_.push_back(std::move(record));
  return true;
}

const PaperRecord* CorpusStore::find(std::string_view identifier) const {
  const auto it = by_identifier_.find(std::string(identifier));
  return it == by_identifier_.end() ? nullptr : &records_[it->second];
}

std::vector<std::vector<std::string>> parse_csv(std::string_view s) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < s.size() && s[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        if (any || !field.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        row.clear();
        field.clear();
        any = false;
        break;
      default:
        field += c;
        any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::data_error, "unterminated quoted CSV field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

IngestReport ingest_records(std::istream& source, InputFormat format, CorpusStore& store) {
  if (!source) throw Error(ErrorCode::invalid_argument, "unreadable record stream");
  IngestReport report;
  auto accept = [&](std::size_t line_no, const json& object) {
    try {
      auto record = record_from_json(object);
      if (store.insert(std::move(record))) {
        ++report.added;
      } else {
        ++report.duplicates_dropped;
      }
    } catch (const Error& e) {
      report.malformed.push_back({line_no, e.what()});
    }
  };

  if (format == InputFormat::jsonl) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(source, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      json object;
      try {
        object = json::parse(line);
      } catch (const json::parse_error&) {
        report.malformed.push_back({line_no, "invalid JSON"});
        continue;
      }
      accept(line_no, object);
    }
    if (source.bad()) throw Error(ErrorCode::data_error, "read error in record stream");
    return report;
  }

  std::ostringstream buffer;
  buffer << source.rdbuf();
  if (source.bad()) throw Error(ErrorCode::data_error, "read error in record stream");
  const auto rows = parse_csv(buffer.str());
  if (rows.empty()) return report;
  const auto& header = rows.front();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      report.malformed.push_back(
          {r, fmt::format("expected {} columns, found {}", header.size(), row.size())});
      continue;
    }
    json object = json::object();
    for (std::size_t c = 0; c < header.size(); ++c) object[header[c]] = row[c];
    accept(r, object);
  }
  return report;
}

IngestReport ingest_file(const std::filesystem::path& path, CorpusStore& store,
                         std::optional<InputFormat> format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::not_found, fmt::format("cannot open {}", path.string()));
  return ingest_records(in, format.value_or(format_from_path(path)), store);
}

bool KeywordLibrary::contains(std::string_view keyword) const {
  return entries_.find(keyword) != entries_.end();
}

std::size_t KeywordLibrary::count(std::string_view keyword) const {
  const auto it = entries_.find(keyword);
  return it == entries_.end() ? 0 : it->second;
}

std::vector<std::string> KeywordLibrary::keywords() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, _] : entries_) out.push_back(k);
  return out;
}

nlohmann::ordered_json KeywordLibrary::to_json() const {
  nlohmann::ordered_json j;
  j["size"] = entries_.size();
  nlohmann::ordered_json kws = nlohmann::ordered_json::object();
  for (const auto& [k, n] : entries_) kws[k] = n;
  j["keywords"] = std::move(kws);
  return j;
}

KeywordLibrary KeywordLibrary::from_json(const nlohmann::json& j) {
  std::map<std::string, std::size_t, std::less<>> entries;
  for (const auto& [k, n] : j.at("keywords").items()) entries[k] = n.get<std::size_t>();
  if (j.contains("size") && j["size"].get<std::size_t>() != entries.size()) {
    throw Error(ErrorCode::data_error, "keyword library size does not match its entries");
  }
  return KeywordLibrary(std::move(entries));
}

void KeywordLibrary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::invalid_argument, fmt::format("cannot write {}", path.string()));
  out << to_json().dump(2) << '\n';
}

KeywordLibrary KeywordLibrary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::precondition, fmt::format("cannot open keyword library {}", path.string()));
  }
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::data_error, fmt::format("{}: {}", path.string(), e.what()));
  }
}

KeywordLibrary build_keyword_library(std::span<const PaperRecord> papers,
                                     const text::AbbreviationTable& abbreviations) {
  std::map<std::string, std::size_t, std::less<>> entries;
  for (const auto& paper : papers) {
    if (!paper.has_author_keywords()) continue;
    for (const auto& kw : paper_keywords(paper, abbreviations)) ++entries[kw];
  }
  return KeywordLibrary(std::move(entries));
}

}  // namespace litmine::corpus
