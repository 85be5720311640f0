#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "litmine/corpus.hpp"

namespace litmine::association {

using ItemSet = std::vector<int>;  // sorted, distinct cluster ids

struct Transaction {
  std::string paper_id;
  ItemSet items;
};

struct TransactionSet {
  std::vector<Transaction> transactions;
  std::size_t excluded = 0;  // papers with an empty cluster set
};

/// One transaction per paper whose `cluster_ids` set is non-empty.
TransactionSet build_transactions(std::span<const corpus::PaperRecord> papers);

/// Same, deriving each paper's cluster set from its keywords.
TransactionSet build_transactions(std::span<const corpus::PaperRecord> papers,
                                  const std::map<std::string, int, std::less<>>& assignments,
                                  const text::AbbreviationTable& abbreviations);

struct FrequentItemset {
  ItemSet items;
  std::size_t count = 0;
  double support = 0.0;
};

/// Level-wise Apriori. Itemsets up to `max_len` with support >= min_support,
/// ordered by size then lexicographically. Throws if min_support <= 0.
std::vector<FrequentItemset> frequent_itemsets(std::span<const Transaction> transactions,
                                               double min_support, std::size_t max_len);

struct RuleMetrics {
  double antecedent_support = 0.0;
  double consequent_support = 0.0;
  double support = 0.0;
  double confidence = 0.0;
  double lift = 0.0;
};

/// confidence = support / antecedent_support, lift = confidence / consequent_support.
/// Throws Error(invalid_argument, "undefined metric") on a zero denominator.
RuleMetrics metrics_from_supports(double antecedent_support, double consequent_support,
                                  double support);

/// Counts supports directly over `transactions`.
RuleMetrics rule_metrics(const ItemSet& lhs, const ItemSet& rhs,
                         std::span<const Transaction> transactions);

struct AssociationRule {
  ItemSet lhs;
  ItemSet rhs;
  RuleMetrics metrics;
};

struct RuleFilter {
  double min_support = 0.05;
  double min_confidence = 0.5;
  double min_lift = 1.5;
  std::size_t max_len = 3;      // cap on |lhs| + |rhs|
  bool singleton_rhs = true;    // consequents of one cluster only
};

/// Rules from every frequent itemset of size >= 2 (and <= max_len) that
/// pass all thresholds; sorted by lift desc, support desc, lhs, rhs.
std::vector<AssociationRule> generate_rules(std::span<const FrequentItemset> itemsets,
                                            std::span<const Transaction> transactions,
                                            const RuleFilter& filter);

/// Convenience: frequent itemsets + rule generation with one filter.
std::vector<AssociationRule> mine_rules(std::span<const Transaction> transactions,
                                        const RuleFilter& filter);

/// "C3" or "(C3, C8)".
std::string format_itemset(const ItemSet& items);

/// Header plus one row per rule, columns as in the published rule table.
void write_rules_csv(std::ostream& out, std::span<const AssociationRule> rules);
std::string rules_csv(std::span<const AssociationRule> rules);

nlohmann::ordered_json rule_to_json(const AssociationRule& rule);
nlohmann::ordered_json rules_to_json(std::span<const AssociationRule> rules);
std::vector<AssociationRule> rules_from_json(const nlohmann::json& j);

void save_rules(const std::filesystem::path& json_path, std::span<const AssociationRule> rules);
std::vector<AssociationRule> load_rules(const std::filesystem::path& json_path);

}  // namespace litmine::association
