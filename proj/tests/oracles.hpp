#pragma once

// Independent reference implementations the tests check the library against.
// Each one deliberately uses a different algorithm than the library code.

#include <cmath>
#include <cstddef>
#include <functional>
#include <regex>
#include <string>
#include <vector>

#include "sumrank/ranker.hpp"
#include "sumrank/rouge.hpp"

namespace testkit {

using sumrank::TokenList;

// Clipped n-gram overlap by greedy pairwise matching with used flags, no hash
// maps involved.
inline std::size_t oracle_ngram_overlap(const TokenList& hyp,
                                        const TokenList& ref, std::size_t n) {
  auto grams = [n](const TokenList& tokens) {
    std::vector<TokenList> out;
    if (tokens.size() >= n)
      for (std::size_t i = 0; i + n <= tokens.size(); ++i)
        out.emplace_back(tokens.begin() + i, tokens.begin() + i + n);
    return out;
  };
  std::vector<TokenList> h = grams(hyp);
  std::vector<TokenList> r = grams(ref);
  std::vector<bool> used(r.size(), false);
  std::size_t matches = 0;
  for (const auto& g : h) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (!used[j] && r[j] == g) {
        used[j] = true;
        ++matches;
        break;
      }
    }
  }
  return matches;
}

// Full-table LCS, classic quadratic dynamic program.
inline std::size_t oracle_lcs(const TokenList& a, const TokenList& b) {
  std::vector<std::vector<std::size_t>> table(
      a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      table[i][j] = a[i - 1] == b[j - 1]
                        ? table[i - 1][j - 1] + 1
                        : std::max(table[i - 1][j], table[i][j - 1]);
  return table[a.size()][b.size()];
}

inline sumrank::RougeScore oracle_rouge_n(const TokenList& hyp,
                                          const TokenList& ref,
                                          std::size_t n) {
  std::size_t h = hyp.size() >= n ? hyp.size() - n + 1 : 0;
  std::size_t r = ref.size() >= n ? ref.size() - n + 1 : 0;
  if (h == 0 || r == 0) return {};
  double overlap = static_cast<double>(oracle_ngram_overlap(hyp, ref, n));
  return sumrank::make_rouge(overlap / static_cast<double>(h),
                             overlap / static_cast<double>(r));
}

inline sumrank::RougeScore oracle_rouge_l(const TokenList& hyp,
                                          const TokenList& ref) {
  if (hyp.empty() || ref.empty()) return {};
  double lcs = static_cast<double>(oracle_lcs(hyp, ref));
  return sumrank::make_rouge(lcs / static_cast<double>(hyp.size()),
                             lcs / static_cast<double>(ref.size()));
}

// BM25 straight from the formula, recomputing every statistic by scanning the
// raw token lists.
inline double oracle_bm25_score(const std::vector<TokenList>& docs,
                                const TokenList& query, std::size_t doc_index,
                                double k1, double b) {
  double n = static_cast<double>(docs.size());
  double total_len = 0.0;
  for (const auto& d : docs) total_len += static_cast<double>(d.size());
  double avgdl = total_len / n;
  const TokenList& doc = docs[doc_index];
  double score = 0.0;
  for (const auto& term : query) {
    double df = 0.0;
    for (const auto& d : docs) {
      for (const auto& t : d) {
        if (t == term) {
          df += 1.0;
          break;
        }
      }
    }
    double tf = 0.0;
    for (const auto& t : doc)
      if (t == term) tf += 1.0;
    if (tf == 0.0) continue;
    double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    double len_norm =
        avgdl > 0.0 ? static_cast<double>(doc.size()) / avgdl : 0.0;
    score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len_norm));
  }
  return score;
}

// Reference candidate parser built on std::regex line classification.
struct OracleParse {
  std::vector<std::string> candidates;
  bool ok = false;
};

inline OracleParse oracle_parse_candidates(const std::string& text, int k) {
  static const std::regex label_re(R"(^\s*(\d+)[.:](?:\s+(.*))?$)");
  OracleParse result;
  std::vector<long> labels;
  std::vector<std::vector<std::string>> pieces;
  std::string line;
  std::vector<std::string> lines;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(line);
      line.clear();
    } else {
      line += c;
    }
  }
  lines.push_back(line);
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    std::smatch m;
    if (std::regex_match(l, m, label_re)) {
      labels.push_back(std::stol(m[1].str()));
      pieces.push_back({});
      if (m[2].matched) pieces.back().push_back(m[2].str());
    } else if (!labels.empty()) {
      pieces.back().push_back(l);
    }
  }
  if (static_cast<long>(labels.size()) != k) return result;
  for (long i = 0; i < k; ++i)
    if (labels[static_cast<std::size_t>(i)] != i + 1) return result;
  static const std::regex trim_re(R"(^\s+|\s+$)");
  for (auto& parts : pieces) {
    std::string joined;
    for (auto& p : parts) {
      std::string t = std::regex_replace(p, trim_re, "");
      if (t.empty()) continue;
      if (!joined.empty()) joined += ' ';
      joined += t;
    }
    if (joined.empty()) return result;
    result.candidates.push_back(joined);
  }
  result.ok = true;
  return result;
}

// Central finite differences of a scalar function over one net parameter.
inline double finite_difference(std::function<double()> loss, double& param,
                                double h = 1e-5) {
  double saved = param;
  param = saved + h;
  double up = loss();
  param = saved - h;
  double down = loss();
  param = saved;
  return (up - down) / (2.0 * h);
}

// Loss evaluated by forward passes only; the gradient under test never runs.
inline double forward_info_nce(const sumrank::ProjectionNet& net,
                               const sumrank::InstanceFeatures& features,
                               std::size_t positive_index, double tau) {
  sumrank::Vec anchor = sumrank::project(net, features.anchor);
  std::vector<sumrank::Vec> projections;
  for (const auto& c : features.candidates)
    projections.push_back(sumrank::project(net, c));
  return sumrank::info_nce_loss(anchor, projections, positive_index, tau);
}

}  // namespace testkit
