#include "litmine/association.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "litmine/clustering.hpp"
#include "litmine/error.hpp"

namespace litmine::association {
namespace {

bool contains_all(const ItemSet& transaction, const ItemSet& items) {
  return std::includes(transaction.begin(), transaction.end(), items.begin(), items.end());
}

std::size_t count_containing(std::span<const Transaction> transactions, const ItemSet& items) {
  return static_cast<std::size_t>(std::count_if(
      transactions.begin(), transactions.end(),
      [&](const Transaction& t) { return contains_all(t.items, items); }));
}

// Joins frequent (k)-itemsets sharing their first k-1 items, then drops
// candidates with an infrequent k-subset.
std::vector<ItemSet> next_candidates(const std::vector<ItemSet>& level) {
  std::set<ItemSet> frequent(level.begin(), level.end());
  std::vector<ItemSet> out;
  for (std::size_t a = 0; a < level.size(); ++a) {
    for (std::size_t b = a + 1; b < level.size(); ++b) {
      const auto& x = level[a];
      const auto& y = level[b];
      if (!std::equal(x.begin(), x.end() - 1, y.begin(), y.end() - 1)) break;
      ItemSet cand = x;
      cand.push_back(y.back());
      bool pruned = false;
      for (std::size_t drop = 0; drop + 2 < cand.size() && !pruned; ++drop) {
        ItemSet sub;
        for (std::size_t i = 0; i < cand.size(); ++i) {
          if (i != drop) sub.push_back(cand[i]);
        }
        pruned = !frequent.contains(sub);
      }
      if (!pruned) out.push_back(std::move(cand));
    }
  }
  return out;
}

bool rule_less(const AssociationRule& a, const AssociationRule& b) {
  if (a.metrics.lift != b.metrics.lift) return a.metrics.lift > b.metrics.lift;
  if (a.metrics.support != b.metrics.support) return a.metrics.support > b.metrics.support;
  if (a.lhs != b.lhs) return a.lhs < b.lhs;
  return a.rhs < b.rhs;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

TransactionSet build_transactions(std::span<const corpus::PaperRecord> papers) {
  TransactionSet set;
  for (const auto& p : papers) {
    if (p.cluster_ids.empty()) {
      ++set.excluded;
      continue;
    }
    set.transactions.push_back({p.identifier, ItemSet(p.cluster_ids.begin(), p.cluster_ids.end())});
  }
  return set;
}

TransactionSet build_transactions(std::span<const corpus::PaperRecord> papers,
                                  const std::map<std::string, int, std::less<>>& assignments,
                                  const text::AbbreviationTable& abbreviations) {
  TransactionSet set;
  for (const auto& p : papers) {
    const auto clusters =
        clustering::paper_clusters(corpus::paper_keywords(p, abbreviations), assignments);
    if (clusters.empty()) {
      ++set.excluded;
      continue;
    }
    set.transactions.push_back({p.identifier, ItemSet(clusters.begin(), clusters.end())});
  }
  return set;
}

std::vector<FrequentItemset> frequent_itemsets(std::span<const Transaction> transactions,
                                               double min_support, std::size_t max_len) {
  if (!(min_support > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "min_support must be > 0");
  }
  if (transactions.empty()) throw Error(ErrorCode::invalid_argument, "no transactions");
  const double n = static_cast<double>(transactions.size());

  std::vector<FrequentItemset> out;
  std::map<int, std::size_t> singles;
  for (const auto& t : transactions) {
    for (int item : t.items) ++singles[item];
  }
  std::vector<ItemSet> level;
  for (const auto& [item, count] : singles) {
    const double s = static_cast<double>(count) / n;
    if (s >= min_support) {
      out.push_back({{item}, count, s});
      level.push_back({item});
    }
  }

  for (std::size_t size = 2; size <= max_len && level.size() >= 2; ++size) {
    auto candidates = next_candidates(level);
    std::vector<std::size_t> counts(candidates.size(), 0);
    for (const auto& t : transactions) {
      if (t.items.size() < size) continue;
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (contains_all(t.items, candidates[c])) ++counts[c];
      }
    }
    level.clear();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double s = static_cast<double>(counts[c]) / n;
      if (s >= min_support) {
        out.push_back({candidates[c], counts[c], s});
        level.push_back(std::move(candidates[c]));
      }
    }
  }
  return out;
}

RuleMetrics metrics_from_supports(double antecedent_support, double consequent_support,
                                  double support) {
  if (!(antecedent_support > 0.0) || !(consequent_support > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "undefined metric");
  }
  RuleMetrics m;
  m.antecedent_support = antecedent_support;
  m.consequent_support = consequent_support;
  m.support = support;
  m.confidence = support / antecedent_support;
  m.lift = m.confidence / consequent_support;
  return m;
}

RuleMetrics rule_metrics(const ItemSet& lhs, const ItemSet& rhs,
                         std::span<const Transaction> transactions) {
  if (lhs.empty() || rhs.empty()) {
    throw Error(ErrorCode::invalid_argument, "rule sides must be non-empty");
  }
  ItemSet joint;
  std::set_union(lhs.begin(), lhs.end(), rhs.begin(), rhs.end(), std::back_inserter(joint));
  if (joint.size() != lhs.size() + rhs.size()) {
    throw Error(ErrorCode::invalid_argument, "rule sides must be disjoint");
  }
  if (transactions.empty()) throw Error(ErrorCode::invalid_argument, "undefined metric");
  const double n = static_cast<double>(transactions.size());
  return metrics_from_supports(static_cast<double>(count_containing(transactions, lhs)) / n,
                               static_cast<double>(count_containing(transactions, rhs)) / n,
                               static_cast<double>(count_containing(transactions, joint)) / n);
}

std::vector<AssociationRule> generate_rules(std::span<const FrequentItemset> itemsets,
                                            std::span<const Transaction> transactions,
                                            const RuleFilter& filter) {
  std::map<ItemSet, double> support;
  for (const auto& f : itemsets) support[f.items] = f.support;
  const double n = static_cast<double>(transactions.size());
  auto lookup = [&](const ItemSet& s) {
    if (const auto it = support.find(s); it != support.end()) return it->second;
    return static_cast<double>(count_containing(transactions, s)) / n;
  };

  std::vector<AssociationRule> rules;
  for (const auto& f : itemsets) {
    const std::size_t size = f.items.size();
    if (size < 2 || size > filter.max_len || f.support < filter.min_support) continue;
    // Every non-empty proper subset as the consequent.
    const std::uint64_t full = (std::uint64_t{1} << size) - 1;
    for (std::uint64_t mask = 1; mask < full; ++mask) {
      if (filter.singleton_rhs && std::popcount(mask) != 1) continue;
      AssociationRule rule;
      for (std::size_t i = 0; i < size; ++i) {
        ((mask >> i) & 1 ? rule.rhs : rule.lhs).push_back(f.items[i]);
      }
      rule.metrics = metrics_from_supports(lookup(rule.lhs), lookup(rule.rhs), f.support);
      if (rule.metrics.confidence >= filter.min_confidence && rule.metrics.lift >= filter.min_lift) {
        rules.push_back(std::move(rule));
      }
    }
  }
  std::sort(rules.begin(), rules.end(), rule_less);
  return rules;
}

std::vector<AssociationRule> mine_rules(std::span<const Transaction> transactions,
                                        const RuleFilter& filter) {
  const auto itemsets = frequent_itemsets(transactions, filter.min_support, filter.max_len);
  return generate_rules(itemsets, transactions, filter);
}

std::string format_itemset(const ItemSet& items) {
  if (items.size() == 1) return fmt::format("C{}", items.front());
  std::string out = "(";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += fmt::format("C{}", items[i]);
  }
  return out + ")";
}

void write_rules_csv(std::ostream& out, std::span<const AssociationRule> rules) {
  out << "antecedents,consequents,antecedent support,consequent support,support,confidence,lift\n";
  for (const auto& r : rules) {
    out << csv_field(format_itemset(r.lhs)) << ',' << csv_field(format_itemset(r.rhs)) << ','
        << fmt::format("{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.metrics.antecedent_support,
                       r.metrics.consequent_support, r.metrics.support, r.metrics.confidence,
                       r.metrics.lift);
  }
}

std::string rules_csv(std::span<const AssociationRule> rules) {
  std::ostringstream ss;
  write_rules_csv(ss, rules);
  return ss.str();
}

nlohmann::ordered_json rule_to_json(const AssociationRule& r) {
  nlohmann::ordered_json j;
  j["antecedents"] = r.lhs;
  j["consequents"] = r.rhs;
  j["antecedent support"] = r.metrics.antecedent_support;
  j["consequent support"] = r.metrics.consequent_support;
  j["support"] = r.metrics.support;
  j["confidence"] = r.metrics.confidence;
  j["lift"] = r.metrics.lift;
  return j;
}

nlohmann::ordered_json rules_to_json(std::span<const AssociationRule> rules) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rules) arr.push_back(rule_to_json(r));
  return arr;
}

std::vector<AssociationRule> rules_from_json(const nlohmann::json& j) {
  std::vector<AssociationRule> out;
  for (const auto& item : j) {
    AssociationRule r;
    r.lhs = item.at("antecedents").get<ItemSet>();
    r.rhs = item.at("consequents").get<ItemSet>();
    r.metrics.antecedent_support = item.at("antecedent support").get<double>();
    r.metrics.consequent_support = item.at("consequent support").get<double>();
    r.metrics.support = item.at("support").get<double>();
    r.metrics.confidence = item.at("confidence").get<double>();
    r.metrics.lift = item.at("lift").get<double>();
    out.push_back(std::move(r));
  }
  return out;
}

void save_rules(const std::filesystem::path& json_path, std::span<const AssociationRule> rules) {
  std::ofstream out(json_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::invalid_argument, fmt::format("cannot write {}", json_path.string()));
  out << rules_to_json(rules).dump(2) << '\n';
}

std::vector<AssociationRule> load_rules(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) {
    throw Error(ErrorCode::precondition, fmt::format("cannot open rules {}", json_path.string()));
  }
  try {
    return rules_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::data_error, fmt::format("{}: {}", json_path.string(), e.what()));
  }
}

}  // namespace litmine::association
