#ifndef CONFSEL_CHANNEL_HPP
#define CONFSEL_CHANNEL_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "confsel/corpus.hpp"
#include "confsel/eval.hpp"
#include "confsel/lm.hpp"

namespace confsel {

// Noisy token channel standing in for the acoustic model. Per reference
// token: delete with p_del, otherwise emit from the token's substitution
// row; after each position, insert one token from ins_dist with p_ins.
struct ChannelModel {
  std::vector<std::string> vocab;  // sorted
  std::vector<std::vector<double>> sub;  // sub[true][observed]
  double p_del = 0.0;
  double p_ins = 0.0;
  std::vector<double> ins_dist;
  double smoothing_alpha = 1.0;

  int token_index(const std::string& tok) const;
  void validate() const;

  // identity channel over the given vocabulary
  static ChannelModel identity(std::vector<std::string> vocab);
  // diagonal-dominant rows with seeded random off-diagonal spread
  static ChannelModel default_generator(std::vector<std::string> vocab,
                                        uint64_t seed, double diagonal = 0.85,
                                        double p_del = 0.03,
                                        double p_ins = 0.03);

  std::string to_json_string() const;
  static ChannelModel from_json_string(const std::string& text);
  void save(const std::string& path) const;
  static ChannelModel load(const std::string& path);
};

TokenSeq corrupt(const TokenSeq& reference, const ChannelModel& channel,
                 uint64_t seed);

// ln P(observed | true_seq) under the generative process, summed over
// alignments by dynamic programming; -inf when unreachable
double channel_log_likelihood(const ChannelModel& channel,
                              std::span<const int> true_ids,
                              std::span<const int> observed_ids);

struct TokenScore {
  std::string token;
  double raw_posterior = 1.0;
  int n_alternatives = 1;  // distinct aligned tokens in this slot
  double slot_mass = 1.0;  // posterior mass aligned to the slot (non-eps)
  std::optional<double> calibrated;
};

struct NBestEntry {
  TokenSeq tokens;
  double log_score;  // ln P_channel + ln P_lm, joint with </s>
};

struct DecodeResult {
  std::string utterance_id;
  TokenSeq best;
  std::vector<NBestEntry> nbest;  // descending score; nbest[0].tokens == best
  std::vector<TokenScore> token_scores;
  double utterance_confidence = 0.0;  // filled by the confidence module
};

// Beam search over true-token sequences of length |observed| +/- 2,
// scored by channel likelihood times LM probability. Slot posteriors
// come from aligning each n-best entry to the best hypothesis.
DecodeResult decode(const TokenSeq& observed, const ChannelModel& channel,
                    const InterpolatedLM& lm, int beam, int nbest_size,
                    const std::string& utterance_id = "");

// Re-estimate the channel from aligned (reference, observed) pairs with
// per-pair weights. Weights are normalized to unit mean first, so
// rescaling them all does not move the smoothed estimates. When vocab is
// empty it defaults to the union of tokens in the pairs.
ChannelModel train_channel(const std::vector<RefHypPair>& pairs,
                           const std::vector<double>& weights, double alpha,
                           std::vector<std::string> vocab = {});

// decodes every utterance and pools corpus-level WER over
// (reference, best) pairs
double wer_of_channel(const ChannelModel& channel, const InterpolatedLM& lm,
                      const std::vector<Utterance>& eval_set, int beam,
                      int nbest_size, int n_threads = 0);

}  // namespace confsel

#endif  // CONFSEL_CHANNEL_HPP
