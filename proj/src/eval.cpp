#include "confsel/eval.hpp"

#include <algorithm>
#include <cmath>

#include "confsel/alignment.hpp"
#include "confsel/util.hpp"

namespace confsel {

WerResult wer(const std::vector<RefHypPair>& pairs) {
  require(!pairs.empty(), "wer: empty pair list");
  WerResult r;
  for (const auto& [ref, hyp] : pairs) {
    require(!ref.empty(), "wer: empty reference in pair");
    Alignment a = align(ref, hyp);
    r.breakdown.substitutions += a.substitutions;
    r.breakdown.deletions += a.deletions;
    r.breakdown.insertions += a.insertions;
    r.breakdown.ref_tokens += static_cast<int>(ref.size());
  }
  r.wer = static_cast<double>(r.breakdown.substitutions +
                              r.breakdown.deletions +
                              r.breakdown.insertions) /
          r.breakdown.ref_tokens;
  return r;
}

double ser(const std::vector<RefHypPair>& pairs) {
  require(!pairs.empty(), "ser: empty pair list");
  int errs = 0;
  for (const auto& [ref, hyp] : pairs)
    if (ref != hyp) ++errs;
  return static_cast<double>(errs) / pairs.size();
}

HistogramReport confidence_histogram(const std::vector<double>& scores,
                                     const std::vector<double>& thresholds,
                                     int n_bins) {
  require(!scores.empty(), "confidence_histogram: no scores");
  require(n_bins >= 1, "confidence_histogram: n_bins must be >= 1");
  for (double s : scores)
    require(s >= 0.0 && s <= 1.0, "confidence_histogram: score outside [0,1]");

  HistogramReport rep;
  rep.bin_edges.resize(n_bins + 1);
  for (int i = 0; i <= n_bins; ++i)
    rep.bin_edges[i] = static_cast<double>(i) / n_bins;
  rep.bin_masses.assign(n_bins, 0.0);
  const double w = 1.0 / scores.size();
  for (double s : scores) {
    int b = std::min(static_cast<int>(s * n_bins), n_bins - 1);
    rep.bin_masses[b] += w;
  }
  for (double t : thresholds) {
    int below = 0;
    for (double s : scores)
      if (s < t) ++below;
    rep.cumulative.emplace_back(t, static_cast<double>(below) / scores.size());
  }
  return rep;
}

}  // namespace confsel
