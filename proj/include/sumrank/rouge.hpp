#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sumrank/errors.hpp"

namespace sumrank {

/// Precision / recall / F1 triple, each in [0, 1].
/// F1 is 2pr/(p+r) when p+r > 0 and 0 otherwise.
struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline RougeScore make_rouge(double precision, double recall) {
  RougeScore s;
  s.precision = precision;
  s.recall = recall;
  if (precision + recall > 0.0)
    s.f1 = 2.0 * precision * recall / (precision + recall);
  return s;
}

using TokenList = std::vector<std::string>;
using Tokenizer = std::function<TokenList(const std::string&)>;

/// Default tokenizer: lowercase, maximal runs of ASCII alphanumerics are
/// tokens, everything else separates. Callers that need different
/// preprocessing (stemming, stopwords) pass their own Tokenizer where one is
/// accepted.
inline TokenList tokenize(const std::string& text) {
  TokenList tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace detail {

// n-grams as '\x1f'-joined keys with multiset counts.
inline std::unordered_map<std::string, int> ngram_counts(const TokenList& tokens,
                                                         int n) {
  std::unordered_map<std::string, int> counts;
  if (n <= 0 || tokens.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t j = 1; j < static_cast<std::size_t>(n); ++j) {
      key.push_back('\x1f');
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

inline std::size_t lcs_length(const TokenList& a, const TokenList& b) {
  if (a.empty() || b.empty()) return 0;
  // Two-row dynamic program over the full token sequences.
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace detail

/// ROUGE-N: clipped n-gram multiset overlap between hypothesis and reference.
/// Precision divides by the hypothesis n-gram count, recall by the
/// reference's. Either side without n-grams yields the all-zero score.
inline RougeScore rouge_n(const TokenList& hypothesis, const TokenList& reference,
                          int n) {
  if (n < 1) throw Error("rouge_n: n must be >= 1");
  auto hyp = detail::ngram_counts(hypothesis, n);
  auto ref = detail::ngram_counts(reference, n);
  std::size_t hyp_total = 0, ref_total = 0;
  for (const auto& [k, c] : hyp) hyp_total += static_cast<std::size_t>(c);
  for (const auto& [k, c] : ref) ref_total += static_cast<std::size_t>(c);
  if (hyp_total == 0 || ref_total == 0) return {};
  std::size_t overlap = 0;
  for (const auto& [key, count] : hyp) {
    auto it = ref.find(key);
    if (it != ref.end())
      overlap += static_cast<std::size_t>(std::min(count, it->second));
  }
  return make_rouge(static_cast<double>(overlap) / static_cast<double>(hyp_total),
                    static_cast<double>(overlap) / static_cast<double>(ref_total));
}

/// ROUGE-L over the full token sequences: precision = LCS/|hyp|,
/// recall = LCS/|ref|. Either side empty yields the all-zero score.
inline RougeScore rouge_l(const TokenList& hypothesis,
                          const TokenList& reference) {
  if (hypothesis.empty() || reference.empty()) return {};
  auto lcs = static_cast<double>(detail::lcs_length(hypothesis, reference));
  return make_rouge(lcs / static_cast<double>(hypothesis.size()),
                    lcs / static_cast<double>(reference.size()));
}

/// Corpus-level report: per-pair scores averaged arithmetically, component by
/// component (macro average).
struct RougeReport {
  RougeScore r1;
  RougeScore r2;
  RougeScore rl;
  std::size_t n_pairs = 0;
};

/// Scores every (hypothesis, reference) pair with ROUGE-1/2/L and averages.
/// References must be non-empty strings; the pair list must be non-empty.
inline RougeReport corpus_rouge(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const Tokenizer& tok = tokenize) {
  if (pairs.empty()) throw Error("corpus_rouge: empty pair list");
  RougeReport report;
  auto add = [](RougeScore& acc, const RougeScore& s) {
    acc.precision += s.precision;
    acc.recall += s.recall;
    acc.f1 += s.f1;
  };
  for (const auto& [hyp_text, ref_text] : pairs) {
    if (ref_text.empty())
      throw Error("corpus_rouge: empty reference string");
    TokenList hyp = tok(hyp_text);
    TokenList ref = tok(ref_text);
    add(report.r1, rouge_n(hyp, ref, 1));
    add(report.r2, rouge_n(hyp, ref, 2));
    add(report.rl, rouge_l(hyp, ref));
  }
  auto scale = [&](RougeScore& s) {
    s.precision /= static_cast<double>(pairs.size());
    s.recall /= static_cast<double>(pairs.size());
    s.f1 /= static_cast<double>(pairs.size());
  };
  scale(report.r1);
  scale(report.r2);
  scale(report.rl);
  report.n_pairs = pairs.size();
  return report;
}

}  // namespace sumrank
