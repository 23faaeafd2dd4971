#ifndef CONFSEL_LM_HPP
#define CONFSEL_LM_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "confsel/eval.hpp"  // TokenSeq

namespace confsel {

// Token ids are packed 21 bits per position into a uint64 n-gram key,
// which caps the order at 3 and the vocabulary at 2^21 entries. That is
// the scale this lab targets (trigram models throughout).
class Vocab {
 public:
  static constexpr const char* kBos = "<s>";
  static constexpr const char* kEos = "</s>";
  static constexpr const char* kUnk = "<unk>";
  static constexpr int kBosId = 0;
  static constexpr int kEosId = 1;
  static constexpr int kUnkId = 2;

  Vocab();  // reserved tokens only

  // tokens are deduplicated and inserted in sorted order after the
  // reserved entries, so ids are a pure function of the token set
  static Vocab from_tokens(const std::vector<std::string>& tokens);

  int add(const std::string& tok);
  int id(const std::string& tok) const;  // -1 if absent
  int id_or_unk(const std::string& tok) const;
  bool contains(const std::string& tok) const { return id(tok) >= 0; }
  const std::string& token(int id) const { return id_to_tok_.at(id); }
  int size() const { return static_cast<int>(id_to_tok_.size()); }
  const std::vector<std::string>& tokens() const { return id_to_tok_; }

  bool operator==(const Vocab& o) const { return id_to_tok_ == o.id_to_tok_; }

 private:
  std::vector<std::string> id_to_tok_;
  std::unordered_map<std::string, int> tok_to_id_;
};

namespace gram {
constexpr int kBits = 21;
constexpr uint64_t kMask = (uint64_t{1} << kBits) - 1;
constexpr int kMaxOrder = 3;

inline uint64_t append(uint64_t key, int id) {
  return (key << kBits) | static_cast<uint64_t>(id);
}
inline uint64_t pack(std::span<const int> ids) {
  uint64_t k = 0;
  for (int id : ids) k = append(k, id);
  return k;
}
// (w1..wn) -> (w1..w_{n-1})
inline uint64_t context(uint64_t key) { return key >> kBits; }
// (w1..wn) -> (w2..wn)
inline uint64_t drop_first(uint64_t key, int n) {
  return key & ((uint64_t{1} << (kBits * (n - 1))) - 1);
}
inline int last(uint64_t key) { return static_cast<int>(key & kMask); }
inline int first(uint64_t key, int n) {
  return static_cast<int>(key >> (kBits * (n - 1)));
}
inline std::vector<int> unpack(uint64_t key, int n) {
  std::vector<int> ids(n);
  for (int i = n - 1; i >= 0; --i) {
    ids[i] = static_cast<int>(key & kMask);
    key >>= kBits;
  }
  return ids;
}
}  // namespace gram

struct NGramCounts {
  int order = 3;
  Vocab vocab;
  // tables[n-1]: packed n-gram -> count
  std::vector<std::unordered_map<uint64_t, int64_t>> tables;

  int64_t get(int n, uint64_t key) const {
    auto it = tables[n - 1].find(key);
    return it == tables[n - 1].end() ? 0 : it->second;
  }
};

// Sentences are padded with a single <s> and </s>; counts cover every
// order 1..order. When a vocabulary is pinned, out-of-vocabulary tokens
// count as <unk>.
NGramCounts count(const std::vector<TokenSeq>& corpus, int order,
                  const std::optional<Vocab>& pinned_vocab = std::nullopt);

struct Discounts {
  double d1 = 0.5, d2 = 1.0, d3plus = 1.5;
  bool fallback = false;  // counts-of-counts were degenerate
  double of(int64_t count) const {
    if (count <= 0) return 0.0;
    if (count == 1) return d1;
    if (count == 2) return d2;
    return d3plus;
  }
};

struct NGramModel {
  int order = 3;
  Vocab vocab;
  // prob[n-1]: packed n-gram -> log10 probability
  std::vector<std::unordered_map<uint64_t, double>> prob;
  // backoff[n-1]: packed n-gram context -> log10 backoff weight,
  // populated for orders 1..order-1
  std::vector<std::unordered_map<uint64_t, double>> backoff;
  std::vector<Discounts> discounts;  // estimation metadata, per order

  // conditional log10 P(word | context); context is oldest-first and is
  // truncated on the left to order-1 tokens
  double log10_prob(std::span<const int> context, int word) const;

  int64_t ngram_count(int n) const {
    return static_cast<int64_t>(prob[n - 1].size());
  }
};

// Interpolated modified Kneser-Ney (three discounts per order from
// counts-of-counts), converted to the standard backoff representation.
// <s> is excluded from the predicted vocabulary and written with the
// conventional -99 log10 unigram score.
NGramModel estimate_kn(const NGramCounts& counts);

struct InterpolatedLM {
  std::vector<std::shared_ptr<const NGramModel>> components;
  std::vector<double> weights;

  static InterpolatedLM single(std::shared_ptr<const NGramModel> m);
  // linear mixture evaluated on token strings; each component applies
  // its own vocabulary mapping
  double log10_prob(const TokenSeq& context, const std::string& word) const;
};

struct PerplexityResult {
  double perplexity = 0.0;
  int64_t scored_tokens = 0;
  int64_t oov_tokens = 0;  // tokens scored through <unk>
  double log10_sum = 0.0;
};

PerplexityResult perplexity(const NGramModel& lm,
                            const std::vector<TokenSeq>& text,
                            bool include_eos = true);
PerplexityResult perplexity(const InterpolatedLM& lm,
                            const std::vector<TokenSeq>& text,
                            bool include_eos = true);

struct FitWeightsResult {
  std::vector<double> weights;
  int iterations = 0;
  std::vector<double> ll_trace;  // held-out log10-likelihood per iteration
};

// EM for the linear-mixture weights, uniform initialization, stopping
// when the held-out log-likelihood gain drops below 1e-6 (or 100
// iterations). The likelihood is non-decreasing at every step.
FitWeightsResult fit_weights(
    const std::vector<std::shared_ptr<const NGramModel>>& components,
    const std::vector<TokenSeq>& heldout, bool include_eos = true);

// Entropy pruning: drop n-grams (orders >= 2) whose removal, with the
// context's backoff weight recomputed, changes the model by less than
// `threshold` weighted relative entropy (nats). N-grams that are the
// context of a stored higher-order entry are kept.
NGramModel prune(const NGramModel& lm, double threshold);

// union of the base vocabulary and tokens occurring >= min_count times
// in the new transcripts
Vocab update_vocab(const Vocab& base,
                   const std::vector<TokenSeq>& transcripts,
                   int min_count = 2);

void write_arpa(const NGramModel& model, const std::string& path);
NGramModel read_arpa(const std::string& path);

// exhaustive sum of P(w|context) over the full vocabulary, for
// normalization checks
double sum_prob(const NGramModel& model, std::span<const int> context);

}  // namespace confsel

#endif  // CONFSEL_LM_HPP
