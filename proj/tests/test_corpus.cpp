#include <doctest.h>

#include <filesystem>
#include <map>
#include <sstream>

#include "litmine/corpus.hpp"
#include "litmine/error.hpp"

using namespace litmine;
using namespace litmine::corpus;

namespace {

const char* kThree =
    R"({"identifier":"S1","doi":"10.1/a","title":"Cyber insurance pricing","description":"Premiums and losses.","authkeywords":"Cyber Insurance | Cyber-Risk","coverDate":"2020-03-01","citedby_count":4})"
    "\n"
    R"({"identifier":"S2","title":"Intrusion detection","description":"Deep models.","authkeywords":"IDS | Deep Learning","coverDate":"2021-07-15"})"
    "\n"
    R"({"dc:identifier":"S3","dc:title":"Phishing at scale","dc:description":"Email study.","prism:coverDate":"2019-01-31","citedby-count":"12"})"
    "\n";

IngestReport ingest_string(const std::string& s, CorpusStore& store, InputFormat f = InputFormat::jsonl) {
  std::istringstream in(s);
  return ingest_records(in, f, store);
}

std::filesystem::path temp_dir(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("fresh records are added, re-ingestion drops them all") {
  CorpusStore store;
  auto first = ingest_string(kThree, store);
  CHECK(first.added == 3);
  CHECK(first.duplicates_dropped == 0);
  CHECK(first.malformed.empty());

  auto second = ingest_string(kThree, store);
  CHECK(second.added == 0);
  CHECK(second.duplicates_dropped == 3);
  CHECK(second.seen() == 3);
  CHECK(store.size() == 3);

  const auto* s3 = store.find("S3");
  REQUIRE(s3 != nullptr);
  CHECK(s3->citedby_count == 12);
  CHECK(s3->title == "Phishing at scale");
}

TEST_CASE("malformed records are counted with a reason and skipped") {
  CorpusStore store;
  const std::string lines =
      R"({"identifier":"A","description":"x","coverDate":"2020-01-01"})"
      "\n"
      "not json\n"
      R"({"identifier":"B","title":"t","coverDate":"2021-02-30"})"
      "\n"
      R"({"title":"no id","coverDate":"2021-02-01"})"
      "\n"
      R"({"identifier":"C","title":"ok","coverDate":"2021-02-01","citedby_count":-3})"
      "\n";
  const auto report = ingest_string(lines, store);
  CHECK(report.added == 0);
  REQUIRE(report.malformed.size() == 5);
  CHECK(report.malformed[0].reason == "missing title");
  CHECK(report.malformed[0].line == 1);
  CHECK(report.malformed[1].reason == "invalid JSON");
  CHECK(report.malformed[2].reason == "invalid coverDate");
  CHECK(report.malformed[3].reason == "missing identifier");
  CHECK(report.malformed[4].reason == "invalid citedby_count");
  CHECK(report.seen() == 5);
}

TEST_CASE("CSV with Scopus-style headers") {
  CorpusStore store;
  const std::string csv =
      "dc:identifier,dc:title,dc:description,authkeywords,prism:coverDate,subtypeDescription,author_names\n"
      "X1,\"Risk, measured\",\"Abstract with \"\"quotes\"\"\",Cyber Risk | Loss,2018-05-05,Review,A One;B Two\n"
      "X2,short row\n";
  const auto report = ingest_string(csv, store, InputFormat::csv);
  CHECK(report.added == 1);
  CHECK(report.malformed.size() == 1);
  const auto* x1 = store.find("X1");
  REQUIRE(x1 != nullptr);
  CHECK(x1->title == "Risk, measured");
  CHECK(x1->abstract == "Abstract with \"quotes\"");
  CHECK(x1->author_keywords == std::vector<std::string>{"Cyber Risk", "Loss"});
  CHECK(x1->author_names == std::vector<std::string>{"A One", "B Two"});
  CHECK(x1->subtype_description == "Review");
}

TEST_CASE("dedupe key priority") {
  const auto abbr = text::AbbreviationTable::defaults();
  PaperRecord a, b;
  a.identifier = "1";
  b.identifier = "2";
  a.doi = "10.5/XY";
  b.doi = "10.5/xy";
  CHECK(dedupe_key(a, abbr) == dedupe_key(b, abbr));

  a.doi.reset();
  b.doi.reset();
  b.identifier = "1";
  CHECK(dedupe_key(a, abbr) == dedupe_key(b, abbr));

  a.identifier.clear();
  b.identifier.clear();
  a.title = "Cyber-Security Economics";
  b.title = "cyber security economics";
  CHECK(dedupe_key(a, abbr) == dedupe_key(b, abbr));
  b.title = "cyber security economy";
  CHECK(dedupe_key(a, abbr) != dedupe_key(b, abbr));
}

TEST_CASE("date validation") {
  CHECK(parse_date("2020-02-29").has_value());
  CHECK_FALSE(parse_date("2021-02-29").has_value());
  CHECK_FALSE(parse_date("2021-13-01").has_value());
  CHECK_FALSE(parse_date("2021-1-01").has_value());
  CHECK(parse_date("2000-02-29").has_value());
  CHECK_FALSE(parse_date("1900-02-29").has_value());
}

TEST_CASE("keyword library union and counts") {
  const auto abbr = text::AbbreviationTable::defaults();
  std::vector<PaperRecord> papers(3);
  papers[0].author_keywords = {"a", "B"};
  papers[1].author_keywords = {"b", "c", "C"};
  const auto lib = build_keyword_library(papers, abbr);
  CHECK(lib.keywords() == std::vector<std::string>{"a", "b", "c"});
  CHECK(lib.count("b") == 2);
  CHECK(lib.count("c") == 1);

  std::vector<PaperRecord> none(2);
  CHECK(build_keyword_library(none, abbr).size() == 0);
}

TEST_CASE("fixture library matches a one-pass set-union tally") {
  CorpusStore store;
  const auto report = ingest_file(std::filesystem::path(LITMINE_FIXTURES) / "corpus40.jsonl", store);
  CHECK(report.added == 40);
  const auto lib = build_keyword_library(store.records(), store.abbreviations());
  const std::map<std::string, std::size_t> expected = {
      {"anomaly detection", 2}, {"authentication", 5}, {"compliance", 3},
      {"critical infrastructure", 2}, {"cyber insurance", 6}, {"cyber physical systems", 4},
      {"cyber risk", 4}, {"data protection", 2}, {"deep learning", 2},
      {"differential privacy", 1}, {"edge computing", 7}, {"email security", 3},
      {"gdpr", 1}, {"human factors", 3}, {"industrial control systems", 3},
      {"internet of things", 5}, {"internet of things security", 1}, {"intrusion detection", 4},
      {"loss modeling", 3}, {"machine learning", 2}, {"network security", 2},
      {"phishing", 3}, {"premium pricing", 6}, {"privacy", 2}, {"resilience", 5},
      {"risk management", 5}, {"security awareness", 5}, {"smart home", 3},
      {"social engineering", 4}, {"supervisory control and data acquisition", 2}};
  CHECK(lib.size() == expected.size());
  for (const auto& [kw, n] : expected) {
    CAPTURE(kw);
    CHECK(lib.count(kw) == n);
  }
  for (const auto& kw : lib.keywords()) CHECK(text::normalize_keyword(kw, store.abbreviations()) == kw);
}

TEST_CASE("library size never shrinks as papers arrive") {
  CorpusStore store;
  const auto path = std::filesystem::path(LITMINE_FIXTURES) / "corpus40.jsonl";
  ingest_file(path, store);
  std::vector<PaperRecord> prefix;
  std::size_t last = 0;
  for (const auto& p : store.records()) {
    prefix.push_back(p);
    const auto m = build_keyword_library(prefix, store.abbreviations()).size();
    CHECK(m >= last);
    last = m;
  }
}

TEST_CASE("store and library round-trip through files") {
  const auto dir = temp_dir("litmine_corpus_rt");
  CorpusStore store;
  ingest_string(kThree, store);
  store.save(dir / "c.jsonl");
  const auto loaded = CorpusStore::load(dir / "c.jsonl");
  REQUIRE(loaded.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(to_json(loaded.records()[i]) == to_json(store.records()[i]));

  const auto lib = build_keyword_library(store.records(), store.abbreviations());
  lib.save(dir / "lib.json");
  CHECK(KeywordLibrary::load(dir / "lib.json").entries() == lib.entries());

  auto again = CorpusStore::load(dir / "c.jsonl");
  std::istringstream in(kThree);
  CHECK(ingest_records(in, InputFormat::jsonl, again).added == 0);
}
