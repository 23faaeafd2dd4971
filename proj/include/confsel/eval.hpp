#ifndef CONFSEL_EVAL_HPP
#define CONFSEL_EVAL_HPP

#include <string>
#include <utility>
#include <vector>

namespace confsel {

using TokenSeq = std::vector<std::string>;
using RefHypPair = std::pair<TokenSeq, TokenSeq>;

struct ErrorBreakdown {
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int ref_tokens = 0;
};

// Corpus-level WER: S/D/I pooled over all pairs, divided by total
// reference tokens. Can exceed 1.
struct WerResult {
  double wer = 0.0;
  ErrorBreakdown breakdown;
};

WerResult wer(const std::vector<RefHypPair>& pairs);

// fraction of pairs whose hypothesis differs from the reference
double ser(const std::vector<RefHypPair>& pairs);

struct HistogramReport {
  std::vector<double> bin_edges;   // n_bins + 1 edges over [0, 1]
  std::vector<double> bin_masses;  // sums to 1
  // one (threshold, fraction of scores < threshold) per query threshold
  std::vector<std::pair<double, double>> cumulative;
};

HistogramReport confidence_histogram(const std::vector<double>& scores,
                                     const std::vector<double>& thresholds,
                                     int n_bins = 100);

}  // namespace confsel

#endif  // CONFSEL_EVAL_HPP
