#include "confsel/lm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "confsel/util.hpp"

namespace confsel {

namespace {
constexpr double kLogProbFloor = -99.0;  // conventional <s> score

double log10_from_ln(double x) { return x / M_LN10; }
}  // namespace

Vocab::Vocab() {
  add(kBos);
  add(kEos);
  add(kUnk);
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
  Vocab v;
  std::set<std::string> uniq(tokens.begin(), tokens.end());
  for (const auto& t : uniq) v.add(t);
  return v;
}

int Vocab::add(const std::string& tok) {
  auto it = tok_to_id_.find(tok);
  if (it != tok_to_id_.end()) return it->second;
  int id = static_cast<int>(id_to_tok_.size());
  require(id < static_cast<int>(gram::kMask),
          "vocabulary exceeds the 2^21 id space");
  id_to_tok_.push_back(tok);
  tok_to_id_.emplace(tok, id);
  return id;
}

int Vocab::id(const std::string& tok) const {
  auto it = tok_to_id_.find(tok);
  return it == tok_to_id_.end() ? -1 : it->second;
}

int Vocab::id_or_unk(const std::string& tok) const {
  int i = id(tok);
  return i >= 0 ? i : kUnkId;
}

NGramCounts count(const std::vector<TokenSeq>& corpus, int order,
                  const std::optional<Vocab>& pinned_vocab) {
  require(order >= 1 && order <= gram::kMaxOrder,
          "count: order must be in 1.." + std::to_string(gram::kMaxOrder));
  require(!corpus.empty(), "count: empty corpus");

  NGramCounts c;
  c.order = order;
  if (pinned_vocab) {
    c.vocab = *pinned_vocab;
  } else {
    std::vector<std::string> toks;
    for (const auto& sent : corpus)
      toks.insert(toks.end(), sent.begin(), sent.end());
    c.vocab = Vocab::from_tokens(toks);
  }
  c.tables.resize(order);

  std::vector<int> padded;
  for (const auto& sent : corpus) {
    padded.clear();
    padded.push_back(Vocab::kBosId);
    for (const auto& t : sent) padded.push_back(c.vocab.id_or_unk(t));
    padded.push_back(Vocab::kEosId);
    const int len = static_cast<int>(padded.size());
    for (int n = 1; n <= order; ++n) {
      for (int i = 0; i + n <= len; ++i) {
        uint64_t key = gram::pack(std::span(padded).subspan(i, n));
        ++c.tables[n - 1][key];
      }
    }
  }
  return c;
}

double NGramModel::log10_prob(std::span<const int> context, int word) const {
  int m = std::min<int>(static_cast<int>(context.size()), order - 1);
  std::span<const int> ctx = context.subspan(context.size() - m, m);
  double bow_acc = 0.0;
  for (int k = m; k >= 0; --k) {
    uint64_t ctx_key = gram::pack(ctx.subspan(ctx.size() - k, k));
    uint64_t key = gram::append(ctx_key, word);
    auto it = prob[k].find(key);
    if (it != prob[k].end()) return bow_acc + it->second;
    if (k > 0) {
      auto bit = backoff[k - 1].find(ctx_key);
      if (bit != backoff[k - 1].end()) bow_acc += bit->second;
    }
  }
  raise("log10_prob: word id " + std::to_string(word) +
        " has no unigram entry (not a vocabulary member?)");
}

namespace {

// keys of one count table in sorted order, so that floating-point
// accumulation is reproducible
std::vector<uint64_t> sorted_keys(
    const std::unordered_map<uint64_t, int64_t>& m) {
  std::vector<uint64_t> keys;
  keys.reserve(m.size());
  for (const auto& [k, v] : m) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::vector<uint64_t> sorted_keys_d(
    const std::unordered_map<uint64_t, double>& m) {
  std::vector<uint64_t> keys;
  keys.reserve(m.size());
  for (const auto& [k, v] : m) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  return keys;
}

Discounts estimate_discounts(const std::unordered_map<uint64_t, int64_t>& counts,
                             bool skip_bos_unigram, int n) {
  int64_t n1 = 0, n2 = 0, n3 = 0, n4 = 0;
  for (const auto& [key, c] : counts) {
    if (skip_bos_unigram && key == static_cast<uint64_t>(Vocab::kBosId))
      continue;
    if (c == 1) ++n1;
    else if (c == 2) ++n2;
    else if (c == 3) ++n3;
    else if (c == 4) ++n4;
  }
  Discounts d;
  if (n1 == 0 || n2 == 0) {
    d.fallback = true;
    warn("order-" + std::to_string(n) +
         " counts-of-counts degenerate (n1=" + std::to_string(n1) +
         ", n2=" + std::to_string(n2) + "); using fallback discounts");
  } else {
    double y = static_cast<double>(n1) / (n1 + 2.0 * n2);
    d.d1 = 1.0 - 2.0 * y * n2 / n1;
    if (n3 == 0) {
      warn("order-" + std::to_string(n) + " n3=0; fallback D2");
    } else {
      d.d2 = 2.0 - 3.0 * y * n3 / n2;
      if (n4 == 0)
        warn("order-" + std::to_string(n) + " n4=0; fallback D3+");
      else
        d.d3plus = 3.0 - 4.0 * y * n4 / n3;
    }
  }
  d.d1 = std::clamp(d.d1, 0.0, 1.0 - 1e-6);
  d.d2 = std::clamp(d.d2, 0.0, 2.0 - 1e-6);
  d.d3plus = std::clamp(d.d3plus, 0.0, 3.0 - 1e-6);
  return d;
}

}  // namespace

NGramModel estimate_kn(const NGramCounts& counts) {
  const int order = counts.order;
  require(order >= 1 && order <= gram::kMaxOrder, "estimate_kn: bad order");
  for (int n = 1; n <= order; ++n)
    require(!counts.tables[n - 1].empty(),
            "estimate_kn: no order-" + std::to_string(n) + " counts");

  // Adjusted counts: raw at the top order and for <s>-initial n-grams
  // (those are genuinely observed sentence starts, never continuations);
  // continuation type counts everywhere else.
  std::vector<std::unordered_map<uint64_t, int64_t>> adjusted(order);
  adjusted[order - 1] = counts.tables[order - 1];
  for (int n = order - 1; n >= 1; --n) {
    auto& adj = adjusted[n - 1];
    for (const auto& [key, c] : counts.tables[n]) {
      (void)c;
      ++adj[gram::drop_first(key, n + 1)];
    }
    for (const auto& [key, c] : counts.tables[n - 1])
      if (gram::first(key, n) == Vocab::kBosId) adj[key] = c;
  }

  NGramModel model;
  model.order = order;
  model.vocab = counts.vocab;
  model.prob.resize(order);
  model.backoff.resize(order > 1 ? order - 1 : 0);
  model.discounts.resize(order);
  for (int n = 1; n <= order; ++n)
    model.discounts[n - 1] =
        estimate_discounts(adjusted[n - 1], /*skip_bos_unigram=*/n == 1, n);

  // unigrams: distribution over everything except <s>, interpolated with
  // the uniform base
  {
    const Discounts& d = model.discounts[0];
    const int v_pred = model.vocab.size() - 1;  // <s> excluded
    double total = 0.0;
    std::vector<int64_t> uni(model.vocab.size(), 0);
    for (const auto& [key, c] : adjusted[0]) {
      int w = static_cast<int>(key);
      if (w == Vocab::kBosId) continue;
      uni[w] = c;
      total += static_cast<double>(c);
    }
    require(total > 0, "estimate_kn: no unigram mass");
    double gamma_num = 0.0;
    for (int w = 0; w < model.vocab.size(); ++w)
      if (w != Vocab::kBosId) gamma_num += d.of(uni[w]);
    const double gamma = gamma_num / total;
    const double base = 1.0 / v_pred;
    for (int w = 0; w < model.vocab.size(); ++w) {
      if (w == Vocab::kBosId) {
        model.prob[0][static_cast<uint64_t>(w)] = kLogProbFloor;
        continue;
      }
      double p = std::max(static_cast<double>(uni[w]) - d.of(uni[w]), 0.0) /
                     total +
                 gamma * base;
      model.prob[0][static_cast<uint64_t>(w)] = std::log10(p);
    }
  }

  // higher orders, bottom-up, storing the full interpolated probability
  // and gamma as the backoff weight
  for (int n = 2; n <= order; ++n) {
    const Discounts& d = model.discounts[n - 1];
    auto keys = sorted_keys(adjusted[n - 1]);
    // grams with a shared context are contiguous in sorted packed order
    size_t i = 0;
    while (i < keys.size()) {
      uint64_t ctx = gram::context(keys[i]);
      size_t j = i;
      double total = 0.0;
      double gamma_num = 0.0;
      while (j < keys.size() && gram::context(keys[j]) == ctx) {
        int64_t a = adjusted[n - 1].at(keys[j]);
        total += static_cast<double>(a);
        gamma_num += d.of(a);
        ++j;
      }
      const double gamma = gamma_num / total;
      std::vector<int> ctx_ids = gram::unpack(ctx, n - 1);
      std::span<const int> lower_ctx =
          std::span(ctx_ids).subspan(1, ctx_ids.size() - 1);
      for (size_t k = i; k < j; ++k) {
        int64_t a = adjusted[n - 1].at(keys[k]);
        int w = gram::last(keys[k]);
        double p_lower = std::pow(10.0, model.log10_prob(lower_ctx, w));
        double p =
            std::max(static_cast<double>(a) - d.of(a), 0.0) / total +
            gamma * p_lower;
        model.prob[n - 1][keys[k]] = std::log10(p);
      }
      model.backoff[n - 2][ctx] = std::log10(gamma);
      i = j;
    }
  }
  return model;
}

InterpolatedLM InterpolatedLM::single(std::shared_ptr<const NGramModel> m) {
  InterpolatedLM lm;
  lm.components.push_back(std::move(m));
  lm.weights.push_back(1.0);
  return lm;
}

double InterpolatedLM::log10_prob(const TokenSeq& context,
                                  const std::string& word) const {
  require(!components.empty(), "InterpolatedLM: no components");
  double p = 0.0;
  for (size_t k = 0; k < components.size(); ++k) {
    const auto& m = *components[k];
    std::vector<int> ctx;
    ctx.reserve(context.size());
    for (const auto& t : context)
      ctx.push_back(t == Vocab::kBos ? Vocab::kBosId : m.vocab.id_or_unk(t));
    int w = word == Vocab::kEos ? Vocab::kEosId : m.vocab.id_or_unk(word);
    p += weights[k] * std::pow(10.0, m.log10_prob(ctx, w));
  }
  return std::log10(p);
}

namespace {

struct Event {
  TokenSeq context;  // includes <s> padding, oldest first
  std::string word;
  bool oov;  // word is not known to the reference vocabulary
};

std::vector<Event> text_events(const std::vector<TokenSeq>& text, int order,
                               const Vocab& vocab, bool include_eos) {
  std::vector<Event> events;
  for (const auto& sent : text) {
    std::vector<std::string> hist{Vocab::kBos};
    for (const auto& tok : sent) {
      Event e;
      size_t m = std::min<size_t>(hist.size(), order - 1);
      e.context.assign(hist.end() - m, hist.end());
      e.word = tok;
      e.oov = !vocab.contains(tok);
      events.push_back(std::move(e));
      hist.push_back(tok);
    }
    if (include_eos) {
      Event e;
      size_t m = std::min<size_t>(hist.size(), order - 1);
      e.context.assign(hist.end() - m, hist.end());
      e.word = Vocab::kEos;
      e.oov = false;
      events.push_back(std::move(e));
    }
  }
  return events;
}

PerplexityResult perplexity_impl(const InterpolatedLM& lm,
                                 const std::vector<TokenSeq>& text,
                                 bool include_eos) {
  require(!text.empty(), "perplexity: empty text");
  const auto& v0 = lm.components.front()->vocab;
  int order = lm.components.front()->order;
  auto events = text_events(text, order, v0, include_eos);
  require(!events.empty(), "perplexity: no scoreable tokens");
  PerplexityResult r;
  for (const auto& e : events) {
    double lp = lm.log10_prob(e.context, e.word);
    require(std::isfinite(lp), "perplexity: token got zero probability");
    r.log10_sum += lp;
    if (e.oov) ++r.oov_tokens;
  }
  r.scored_tokens = static_cast<int64_t>(events.size());
  r.perplexity = std::pow(10.0, -r.log10_sum / r.scored_tokens);
  return r;
}

}  // namespace

PerplexityResult perplexity(const NGramModel& lm,
                            const std::vector<TokenSeq>& text,
                            bool include_eos) {
  auto holder = std::shared_ptr<const NGramModel>(&lm, [](const NGramModel*) {});
  return perplexity_impl(InterpolatedLM::single(holder), text, include_eos);
}

PerplexityResult perplexity(const InterpolatedLM& lm,
                            const std::vector<TokenSeq>& text,
                            bool include_eos) {
  return perplexity_impl(lm, text, include_eos);
}

FitWeightsResult fit_weights(
    const std::vector<std::shared_ptr<const NGramModel>>& components,
    const std::vector<TokenSeq>& heldout, bool include_eos) {
  require(!components.empty(), "fit_weights: no components");
  require(!heldout.empty(), "fit_weights: empty held-out text");
  const int order = components.front()->order;
  const size_t n_comp = components.size();

  // per-event linear probabilities of each component, computed once
  auto events = text_events(heldout, order, components.front()->vocab,
                            include_eos);
  require(!events.empty(), "fit_weights: no scoreable tokens");
  std::vector<std::vector<double>> p(events.size(),
                                     std::vector<double>(n_comp));
  for (size_t t = 0; t < events.size(); ++t) {
    for (size_t k = 0; k < n_comp; ++k) {
      const auto& m = *components[k];
      std::vector<int> ctx;
      for (const auto& tok : events[t].context)
        ctx.push_back(tok == Vocab::kBos ? Vocab::kBosId
                                         : m.vocab.id_or_unk(tok));
      int w = events[t].word == Vocab::kEos
                  ? Vocab::kEosId
                  : m.vocab.id_or_unk(events[t].word);
      p[t][k] = std::pow(10.0, m.log10_prob(ctx, w));
    }
  }

  FitWeightsResult res;
  res.weights.assign(n_comp, 1.0 / n_comp);
  if (n_comp == 1) {
    res.weights[0] = 1.0;
    return res;
  }

  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 100; ++iter) {
    double ll = 0.0;
    std::vector<double> resp(n_comp, 0.0);
    for (size_t t = 0; t < events.size(); ++t) {
      double mix = 0.0;
      for (size_t k = 0; k < n_comp; ++k) mix += res.weights[k] * p[t][k];
      ll += std::log10(mix);
      for (size_t k = 0; k < n_comp; ++k)
        resp[k] += res.weights[k] * p[t][k] / mix;
    }
    require(iter == 0 || ll >= prev_ll - 1e-9,
            "fit_weights: EM log-likelihood decreased");
    res.ll_trace.push_back(ll);
    res.iterations = iter + 1;
    bool converged = iter > 0 && (ll - prev_ll) < 1e-6;
    prev_ll = ll;
    for (size_t k = 0; k < n_comp; ++k)
      res.weights[k] = resp[k] / events.size();
    if (converged) break;
  }
  return res;
}

Vocab update_vocab(const Vocab& base, const std::vector<TokenSeq>& transcripts,
                   int min_count) {
  std::unordered_map<std::string, int> freq;
  for (const auto& sent : transcripts)
    for (const auto& tok : sent) ++freq[tok];
  std::vector<std::string> toks = base.tokens();
  for (const auto& [tok, c] : freq)
    if (c >= min_count) toks.push_back(tok);
  return Vocab::from_tokens(toks);
}

double sum_prob(const NGramModel& model, std::span<const int> context) {
  double sum = 0.0;
  for (int w = 0; w < model.vocab.size(); ++w)
    sum += std::pow(10.0, model.log10_prob(context, w));
  return sum;
}

}  // namespace confsel
