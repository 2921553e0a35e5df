#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"

namespace carp {

enum class Category : std::uint8_t { economic, environmental, geopolitical, societal, technological };

inline constexpr std::array<Category, 5> kAllCategories = {
    Category::economic, Category::environmental, Category::geopolitical, Category::societal,
    Category::technological};

inline constexpr std::string_view to_string(Category c) {
  switch (c) {
    case Category::economic: return "economic";
    case Category::environmental: return "environmental";
    case Category::geopolitical: return "geopolitical";
    case Category::societal: return "societal";
    case Category::technological: return "technological";
  }
  return "?";
}

inline Category parse_category(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (Category c : kAllCategories)
    if (to_string(c) == lower) return c;
  throw DataError("unknown risk category '" + std::string(s) + "'");
}

struct Risk {
  std::string id;
  std::string numeric_code;
  std::string name;
  Category category = Category::economic;
  double raw_likelihood = 0.0;         // survey scale units
  double normalized_likelihood = 0.0;  // L_i, strictly inside (0, 1)
};

// How raw survey likelihoods become L_i. WEF scales changed between report
// years, so the scale maximum is configurable and pre-normalized input is
// accepted as is.
struct LikelihoodScale {
  double scale_max = 5.0;
  double epsilon = 0.5;
  bool prenormalized = false;
};

// L = l / (scale_max + epsilon). Strictly inside (0, 1) for 0 < l <= scale_max.
inline double normalize_likelihood(double l, double scale_max, double epsilon) {
  if (!(scale_max > 0.0) || !std::isfinite(scale_max))
    throw DataError("likelihood scale maximum must be positive");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw DataError("likelihood epsilon must be positive");
  if (!(l > 0.0) || l > scale_max)
    throw DataError("likelihood " + csv::fmt_double(l) + " outside (0, " +
                    csv::fmt_double(scale_max) + "]");
  return l / (scale_max + epsilon);
}

inline double normalize_likelihood(double l, const LikelihoodScale& scale) {
  if (scale.prenormalized) {
    if (!(l > 0.0 && l < 1.0))
      throw DataError("pre-normalized likelihood " + csv::fmt_double(l) + " outside (0, 1)");
    return l;
  }
  return normalize_likelihood(l, scale.scale_max, scale.epsilon);
}

struct ExpertPairCount {
  std::string risk_a;
  std::string risk_b;
  std::uint32_t count = 0;
};

// One year's risk catalog plus its undirected interconnection graph. The
// dynamics only use the unweighted adjacency; w_ij is kept for reporting.
class RiskNetwork {
 public:
  RiskNetwork() = default;

  // `pair_counts` is an R x R symmetric matrix (row-major) of expert counts.
  RiskNetwork(std::string year, std::vector<Risk> risks, std::vector<std::uint32_t> pair_counts)
      : year_(std::move(year)), risks_(std::move(risks)), counts_(std::move(pair_counts)) {
    const std::size_t n = risks_.size();
    if (n == 0) throw DataError("empty risk catalog");
    if (counts_.size() != n * n) throw DataError("pair count matrix has wrong dimension");
    for (std::size_t i = 0; i < n; ++i) {
      const Risk& r = risks_[i];
      if (r.id.empty()) throw DataError("risk with empty id");
      if (!index_.emplace(r.id, i).second) throw DataError("duplicate risk id '" + r.id + "'");
      if (!(r.normalized_likelihood >= 0.0 && r.normalized_likelihood < 1.0))
        throw DataError("risk '" + r.id + "' has normalized likelihood outside [0, 1)");
    }
    neighbors_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (counts_[i * n + i] != 0) throw DataError("self-pair for risk '" + risks_[i].id + "'");
      for (std::size_t j = 0; j < n; ++j) {
        if (counts_[i * n + j] != counts_[j * n + i]) throw DataError("pair counts not symmetric");
        if (counts_[i * n + j] > 0) {
          neighbors_[i].push_back(static_cast<std::uint32_t>(j));
          pair_max_ = std::max(pair_max_, counts_[i * n + j]);
        }
      }
      edges_ += neighbors_[i].size();
    }
    edges_ /= 2;
  }

  const std::string& year() const { return year_; }
  std::size_t size() const { return risks_.size(); }
  const std::vector<Risk>& risks() const { return risks_; }
  const Risk& risk(std::size_t i) const { return risks_[i]; }

  std::optional<std::size_t> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t index_of(std::string_view id) const {
    auto i = find(id);
    if (!i) throw DataError("unknown risk id '" + std::string(id) + "'");
    return *i;
  }

  const std::vector<std::uint32_t>& neighbors(std::size_t i) const { return neighbors_[i]; }
  std::size_t degree(std::size_t i) const { return neighbors_[i].size(); }
  bool adjacent(std::size_t i, std::size_t j) const { return counts_[i * size() + j] > 0; }
  std::uint32_t pair_count(std::size_t i, std::size_t j) const { return counts_[i * size() + j]; }
  std::uint32_t pair_max() const { return pair_max_; }
  std::size_t edge_count() const { return edges_; }

  // w_ij = sqrt(count_ij / pair_max).
  double weight(std::size_t i, std::size_t j) const {
    if (pair_max_ == 0) return 0.0;
    return std::sqrt(static_cast<double>(pair_count(i, j)) / static_cast<double>(pair_max_));
  }

  std::vector<double> likelihoods() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = risks_[i].normalized_likelihood;
    return out;
  }

  // Same catalog, no edges (the independent model).
  RiskNetwork without_edges() const {
    return RiskNetwork(year_, risks_, std::vector<std::uint32_t>(size() * size(), 0));
  }

  // Catalog and graph with risk `k` removed.
  RiskNetwork without_risk(std::size_t k) const {
    const std::size_t n = size();
    if (n < 2) throw DataError("cannot remove the only risk");
    std::vector<Risk> kept;
    std::vector<std::uint32_t> counts;
    counts.reserve((n - 1) * (n - 1));
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k) continue;
      kept.push_back(risks_[i]);
      for (std::size_t j = 0; j < n; ++j)
        if (j != k) counts.push_back(pair_count(i, j));
    }
    return RiskNetwork(year_, std::move(kept), std::move(counts));
  }

 private:
  std::string year_;
  std::vector<Risk> risks_;
  std::vector<std::uint32_t> counts_;
  std::vector<std::vector<std::uint32_t>> neighbors_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint32_t pair_max_ = 0;
  std::size_t edges_ = 0;
};

namespace detail {

inline double parse_double(const std::string& s, std::string_view what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("invalid " + std::string(what) + " '" + s + "'");
  }
}

inline std::uint32_t parse_count(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 9)
    throw DataError("invalid pair count '" + s + "'");
  return static_cast<std::uint32_t>(std::stoul(s));
}

inline int require_column(const csv::Table& t, std::string_view name, std::string_view file) {
  int c = t.column(name);
  if (c < 0) throw DataError(std::string(file) + ": missing column '" + std::string(name) + "'");
  return c;
}

}  // namespace detail

inline std::vector<Risk> parse_risk_catalog(const csv::Table& t, const LikelihoodScale& scale) {
  const int c_id = detail::require_column(t, "id", "risks");
  const int c_code = detail::require_column(t, "numeric_code", "risks");
  const int c_name = detail::require_column(t, "name", "risks");
  const int c_cat = detail::require_column(t, "category", "risks");
  const int c_lik = detail::require_column(t, "likelihood", "risks");
  if (t.rows.empty()) throw DataError("empty risk catalog");
  std::vector<Risk> risks;
  risks.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    Risk r;
    r.id = row[c_id];
    r.numeric_code = row[c_code];
    r.name = row[c_name];
    r.category = parse_category(row[c_cat]);
    r.raw_likelihood = detail::parse_double(row[c_lik], "likelihood");
    r.normalized_likelihood = normalize_likelihood(r.raw_likelihood, scale);
    risks.push_back(std::move(r));
  }
  return risks;
}

inline std::vector<ExpertPairCount> parse_pair_counts(const csv::Table& t) {
  const int c_a = detail::require_column(t, "risk_a", "pairs");
  const int c_b = detail::require_column(t, "risk_b", "pairs");
  const int c_n = detail::require_column(t, "count", "pairs");
  std::vector<ExpertPairCount> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) out.push_back({row[c_a], row[c_b], detail::parse_count(row[c_n])});
  return out;
}

inline RiskNetwork build_network(std::string year, std::vector<Risk> risks,
                                 std::span<const ExpertPairCount> pairs) {
  if (risks.empty()) throw DataError("empty risk catalog");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < risks.size(); ++i)
    if (!index.emplace(risks[i].id, i).second)
      throw DataError("duplicate risk id '" + risks[i].id + "'");
  const std::size_t n = risks.size();
  std::vector<std::uint32_t> counts(n * n, 0);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& p : pairs) {
    auto a = index.find(p.risk_a), b = index.find(p.risk_b);
    if (a == index.end()) throw DataError("pair references unknown risk '" + p.risk_a + "'");
    if (b == index.end()) throw DataError("pair references unknown risk '" + p.risk_b + "'");
    if (a->second == b->second) throw DataError("self-pair for risk '" + p.risk_a + "'");
    auto key = std::minmax(a->second, b->second);
    if (!seen.insert(key).second)
      throw DataError("duplicate pair " + p.risk_a + "," + p.risk_b);
    counts[a->second * n + b->second] = p.count;
    counts[b->second * n + a->second] = p.count;
  }
  return RiskNetwork(std::move(year), std::move(risks), std::move(counts));
}

inline RiskNetwork load_network(const csv::Table& catalog, const csv::Table& pairs,
                                const LikelihoodScale& scale = {}, std::string year = "") {
  auto counts = parse_pair_counts(pairs);
  return build_network(std::move(year), parse_risk_catalog(catalog, scale), counts);
}

inline RiskNetwork load_network(const std::string& risks_path, const std::string& pairs_path,
                                const LikelihoodScale& scale = {}, std::string year = "") {
  return load_network(csv::read_file(risks_path), csv::read_file(pairs_path), scale,
                      std::move(year));
}

inline void write_risks_csv(std::ostream& out, const RiskNetwork& net) {
  out << "id,numeric_code,name,category,likelihood\n";
  for (const Risk& r : net.risks())
    out << csv::quote(r.id) << ',' << csv::quote(r.numeric_code) << ',' << csv::quote(r.name) << ','
        << to_string(r.category) << ',' << csv::fmt_double(r.raw_likelihood) << '\n';
}

inline void write_pairs_csv(std::ostream& out, const RiskNetwork& net) {
  out << "risk_a,risk_b,count\n";
  for (std::size_t i = 0; i < net.size(); ++i)
    for (std::size_t j = i + 1; j < net.size(); ++j)
      if (net.pair_count(i, j) > 0)
        out << csv::quote(net.risk(i).id) << ',' << csv::quote(net.risk(j).id) << ','
            << net.pair_count(i, j) << '\n';
}

// ---------------------------------------------------------------------------
// Historical event matrix

// Months since year 0 for a `YYYY-MM` label.
inline int parse_month(std::string_view s) {
  if (s.size() != 7 || s[4] != '-') throw DataError("invalid month '" + std::string(s) + "'");
  for (std::size_t k : {0, 1, 2, 3, 5, 6})
    if (s[k] < '0' || s[k] > '9') throw DataError("invalid month '" + std::string(s) + "'");
  int year = std::stoi(std::string(s.substr(0, 4)));
  int month = std::stoi(std::string(s.substr(5, 2)));
  if (month < 1 || month > 12) throw DataError("invalid month '" + std::string(s) + "'");
  return year * 12 + (month - 1);
}

inline std::string format_month(int serial) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", serial / 12, serial % 12 + 1);
  return buf;
}

// R risks x T months of binary states, risks in network order.
class HistoryMatrix {
 public:
  HistoryMatrix() = default;

  HistoryMatrix(std::vector<std::string> risk_ids, std::vector<std::string> months,
                std::vector<std::uint8_t> states)
      : ids_(std::move(risk_ids)), months_(std::move(months)), states_(std::move(states)) {
    if (states_.size() != ids_.size() * months_.size())
      throw DataError("history dimension mismatch");
    for (auto s : states_)
      if (s > 1) throw DataError("non-binary history state");
  }

  std::size_t risks() const { return ids_.size(); }
  std::size_t months() const { return months_.size(); }
  std::size_t cell_count() const { return states_.size(); }
  const std::vector<std::string>& risk_ids() const { return ids_; }
  const std::vector<std::string>& month_labels() const { return months_; }

  std::uint8_t at(std::size_t risk, std::size_t month) const {
    return states_[risk * months_.size() + month];
  }
  void set(std::size_t risk, std::size_t month, std::uint8_t v) {
    states_[risk * months_.size() + month] = v ? 1 : 0;
  }

  std::vector<std::uint8_t> month_state(std::size_t month) const {
    std::vector<std::uint8_t> s(risks());
    for (std::size_t i = 0; i < risks(); ++i) s[i] = at(i, month);
    return s;
  }

  std::size_t active_months(std::size_t risk) const {
    std::size_t n = 0;
    for (std::size_t t = 0; t < months(); ++t) n += at(risk, t);
    return n;
  }

  bool operator==(const HistoryMatrix&) const = default;

 private:
  std::vector<std::string> ids_;
  std::vector<std::string> months_;
  std::vector<std::uint8_t> states_;
};

namespace detail {

inline std::uint8_t parse_state(const std::string& s) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw DataError("non-binary state value '" + s + "'");
}

inline std::vector<std::string> contiguous_months(std::vector<int> serials) {
  std::sort(serials.begin(), serials.end());
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < serials.size(); ++k) {
    if (k > 0 && serials[k] == serials[k - 1]) throw DataError("duplicate month " + format_month(serials[k]));
    if (k > 0 && serials[k] != serials[k - 1] + 1)
      throw DataError("gap in month sequence after " + format_month(serials[k - 1]));
    labels.push_back(format_month(serials[k]));
  }
  return labels;
}

}  // namespace detail

// Accepts the long form `month,risk_id,state` or the wide form
// `month,<id1>,<id2>,...`. Every network risk needs every month; there is no
// imputation.
inline HistoryMatrix load_history(const csv::Table& t, const RiskNetwork& net) {
  const std::size_t R = net.size();
  if (t.header.empty() || t.header[0] != "month") throw DataError("history: first column must be 'month'");
  const bool long_form = t.header.size() == 3 && t.header[1] == "risk_id" && t.header[2] == "state";
  std::vector<int> serials;
  std::map<int, std::vector<std::int8_t>> cells;  // month serial -> per-risk state, -1 missing

  auto row_for = [&](int serial) -> std::vector<std::int8_t>& {
    auto it = cells.find(serial);
    if (it == cells.end()) {
      it = cells.emplace(serial, std::vector<std::int8_t>(R, -1)).first;
      serials.push_back(serial);
    }
    return it->second;
  };

  if (long_form) {
    for (const auto& row : t.rows) {
      auto i = net.find(row[1]);
      if (!i) throw DataError("history references risk '" + row[1] + "' absent from network");
      auto& cell = row_for(parse_month(row[0]))[*i];
      if (cell != -1) throw DataError("duplicate history cell " + row[0] + "," + row[1]);
      cell = static_cast<std::int8_t>(detail::parse_state(row[2]));
    }
  } else {
    std::vector<std::size_t> col_risk(t.header.size());
    std::set<std::size_t> seen;
    for (std::size_t c = 1; c < t.header.size(); ++c) {
      auto i = net.find(t.header[c]);
      if (!i) throw DataError("history references risk '" + t.header[c] + "' absent from network");
      if (!seen.insert(*i).second) throw DataError("duplicate history column '" + t.header[c] + "'");
      col_risk[c] = *i;
    }
    for (const auto& row : t.rows) {
      int serial = parse_month(row[0]);
      if (cells.count(serial)) throw DataError("duplicate month " + row[0]);
      auto& states = row_for(serial);
      for (std::size_t c = 1; c < row.size(); ++c)
        states[col_risk[c]] = static_cast<std::int8_t>(detail::parse_state(row[c]));
    }
  }
  if (serials.size() < 2) throw DataError("history needs at least two months");
  auto labels = detail::contiguous_months(serials);
  std::sort(serials.begin(), serials.end());
  const std::size_t T = serials.size();
  std::vector<std::uint8_t> states(R * T);
  for (std::size_t t_idx = 0; t_idx < T; ++t_idx) {
    const auto& row = cells.at(serials[t_idx]);
    for (std::size_t i = 0; i < R; ++i) {
      if (row[i] < 0)
        throw DataError("missing history cell for risk '" + net.risk(i).id + "' in " + labels[t_idx]);
      states[i * T + t_idx] = static_cast<std::uint8_t>(row[i]);
    }
  }
  std::vector<std::string> ids;
  for (const Risk& r : net.risks()) ids.push_back(r.id);
  return HistoryMatrix(std::move(ids), std::move(labels), std::move(states));
}

inline HistoryMatrix load_history(const std::string& path, const RiskNetwork& net) {
  return load_history(csv::read_file(path), net);
}

// Wide form.
inline void write_history_csv(std::ostream& out, const HistoryMatrix& h) {
  out << "month";
  for (const auto& id : h.risk_ids()) out << ',' << csv::quote(id);
  out << '\n';
  for (std::size_t t = 0; t < h.months(); ++t) {
    out << h.month_labels()[t];
    for (std::size_t i = 0; i < h.risks(); ++i) out << ',' << int(h.at(i, t));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Cross-year risk index mapping

struct MappingEntry {
  std::string numeric_code;  // e.g. "07c"
  std::string year;
  std::string year_index;    // that year's report index, e.g. "10"
};

class CrossYearMapping {
 public:
  CrossYearMapping() = default;

  explicit CrossYearMapping(std::vector<MappingEntry> entries) : entries_(std::move(entries)) {
    std::map<std::pair<std::string, std::string>, std::string> by_index;
    std::set<std::pair<std::string, std::string>> by_code;
    for (const auto& e : entries_) {
      if (e.numeric_code.empty() || e.year.empty() || e.year_index.empty())
        throw DataError("mapping row with empty field");
      auto [it, fresh] = by_index.emplace(std::pair{e.year, e.year_index}, e.numeric_code);
      if (!fresh && it->second != e.numeric_code)
        throw DataError("mapping: " + e.year + " index " + e.year_index + " mapped to both " +
                        it->second + " and " + e.numeric_code);
      if (!by_code.emplace(e.numeric_code, e.year).second)
        throw DataError("mapping: code " + e.numeric_code + " listed twice for " + e.year);
    }
  }

  const std::vector<MappingEntry>& entries() const { return entries_; }

  std::set<std::string> codes_for_year(std::string_view year) const {
    std::set<std::string> out;
    for (const auto& e : entries_)
      if (e.year == year) out.insert(e.numeric_code);
    return out;
  }

  std::optional<std::string> year_index(std::string_view code, std::string_view year) const {
    for (const auto& e : entries_)
      if (e.numeric_code == code && e.year == year) return e.year_index;
    return std::nullopt;
  }

  bool has_year(std::string_view year) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.year == year; });
  }

 private:
  std::vector<MappingEntry> entries_;
};

inline CrossYearMapping load_mapping(const csv::Table& t) {
  const int c_code = detail::require_column(t, "numeric_code", "mapping");
  const int c_year = detail::require_column(t, "year", "mapping");
  const int c_idx = detail::require_column(t, "year_index", "mapping");
  std::vector<MappingEntry> entries;
  for (const auto& row : t.rows) entries.push_back({row[c_code], row[c_year], row[c_idx]});
  return CrossYearMapping(std::move(entries));
}

inline CrossYearMapping load_mapping(const std::string& path) {
  return load_mapping(csv::read_file(path));
}

struct CodeGroupChange {
  std::vector<std::string> from;  // codes in the earlier snapshot
  std::vector<std::string> to;    // codes in the later snapshot
};

struct AlignmentReport {
  std::string year_a, year_b;
  std::vector<std::string> matched;   // same code in both
  std::vector<std::string> vanished;  // in a, nothing related in b
  std::vector<std::string> appeared;  // in b, nothing related in a
  std::vector<CodeGroupChange> merged;    // several a codes -> one b code
  std::vector<CodeGroupChange> split;     // one a code -> several b codes
  std::vector<CodeGroupChange> renamed;   // one-to-one within a code family
  std::vector<CodeGroupChange> regrouped; // many-to-many within a code family
};

// Code family: the leading digits, so "14b" and "14a" are related.
inline std::string code_family(std::string_view code) {
  std::size_t k = 0;
  while (k < code.size() && code[k] >= '0' && code[k] <= '9') ++k;
  return std::string(code.substr(0, k == 0 ? code.size() : k));
}

inline AlignmentReport align_codes(const std::set<std::string>& a, const std::set<std::string>& b,
                                   std::string year_a = "", std::string year_b = "") {
  AlignmentReport rep;
  rep.year_a = std::move(year_a);
  rep.year_b = std::move(year_b);
  std::map<std::string, std::pair<std::vector<std::string>, std::vector<std::string>>> families;
  std::map<std::string, bool> family_matched;
  for (const auto& c : a) {
    if (b.count(c)) {
      rep.matched.push_back(c);
      family_matched[code_family(c)] = true;
    } else {
      families[code_family(c)].first.push_back(c);
    }
  }
  for (const auto& c : b)
    if (!a.count(c)) families[code_family(c)].second.push_back(c);

  for (auto& [fam, sides] : families) {
    auto& [only_a, only_b] = sides;
    if (only_b.empty()) {
      for (auto& c : only_a) rep.vanished.push_back(c);
    } else if (only_a.empty()) {
      for (auto& c : only_b) rep.appeared.push_back(c);
    } else if (only_a.size() > 1 && only_b.size() == 1) {
      rep.merged.push_back({only_a, only_b});
    } else if (only_a.size() == 1 && only_b.size() > 1) {
      rep.split.push_back({only_a, only_b});
    } else if (only_a.size() == 1 && only_b.size() == 1) {
      rep.renamed.push_back({only_a, only_b});
    } else {
      rep.regrouped.push_back({only_a, only_b});
    }
  }
  return rep;
}

// Aligns two catalogs through their numeric codes. Codes missing from the
// mapping for the catalog's year are a data error when the year is mapped.
inline AlignmentReport map_cross_year(const RiskNetwork& a, const RiskNetwork& b,
                                      const CrossYearMapping& mapping) {
  auto codes_of = [&](const RiskNetwork& net) {
    std::set<std::string> codes;
    const bool check = mapping.has_year(net.year());
    for (const Risk& r : net.risks()) {
      if (r.numeric_code.empty()) throw DataError("risk '" + r.id + "' has no numeric code");
      if (check && !mapping.year_index(r.numeric_code, net.year()))
        throw DataError("code " + r.numeric_code + " not in mapping for " + net.year());
      if (!codes.insert(r.numeric_code).second)
        throw DataError("numeric code " + r.numeric_code + " used twice in " + net.year());
    }
    return codes;
  };
  return align_codes(codes_of(a), codes_of(b), a.year(), b.year());
}

inline AlignmentReport map_cross_year(const CrossYearMapping& mapping, const std::string& year_a,
                                      const std::string& year_b) {
  if (!mapping.has_year(year_a)) throw DataError("mapping has no year " + year_a);
  if (!mapping.has_year(year_b)) throw DataError("mapping has no year " + year_b);
  return align_codes(mapping.codes_for_year(year_a), mapping.codes_for_year(year_b), year_a, year_b);
}

}  // namespace carp
