#include "confsel/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <set>
#include <thread>

#include <json.hpp>

#include "confsel/alignment.hpp"
#include "confsel/rng.hpp"
#include "confsel/util.hpp"

namespace confsel {

using nlohmann::json;

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

int ChannelModel::token_index(const std::string& tok) const {
  auto it = std::lower_bound(vocab.begin(), vocab.end(), tok);
  if (it == vocab.end() || *it != tok) return -1;
  return static_cast<int>(it - vocab.begin());
}

void ChannelModel::validate() const {
  const size_t v = vocab.size();
  require(v > 0, "channel: empty vocabulary");
  require(std::is_sorted(vocab.begin(), vocab.end()), "channel: vocab not sorted");
  require(sub.size() == v, "channel: sub table has wrong row count");
  for (const auto& row : sub) {
    require(row.size() == v, "channel: sub row has wrong width");
    double s = 0;
    for (double p : row) {
      require(p >= 0, "channel: negative substitution probability");
      s += p;
    }
    require(std::abs(s - 1.0) <= 1e-9, "channel: sub row does not sum to 1");
  }
  require(ins_dist.size() == v, "channel: ins_dist has wrong size");
  double s = 0;
  for (double p : ins_dist) s += p;
  require(std::abs(s - 1.0) <= 1e-9, "channel: ins_dist does not sum to 1");
  require(p_del >= 0 && p_del < 1, "channel: p_del outside [0,1)");
  require(p_ins >= 0 && p_ins < 1, "channel: p_ins outside [0,1)");
  require(p_del + p_ins < 1, "channel: p_del + p_ins must be < 1");
  require(smoothing_alpha > 0, "channel: smoothing_alpha must be positive");
}

ChannelModel ChannelModel::identity(std::vector<std::string> vocab) {
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  ChannelModel m;
  m.vocab = std::move(vocab);
  const size_t v = m.vocab.size();
  m.sub.assign(v, std::vector<double>(v, 0.0));
  for (size_t i = 0; i < v; ++i) m.sub[i][i] = 1.0;
  m.ins_dist.assign(v, 1.0 / v);
  return m;
}

ChannelModel ChannelModel::default_generator(std::vector<std::string> vocab,
                                             uint64_t seed, double diagonal,
                                             double p_del, double p_ins) {
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  ChannelModel m;
  m.vocab = std::move(vocab);
  m.p_del = p_del;
  m.p_ins = p_ins;
  const size_t v = m.vocab.size();
  require(v >= 2, "default_generator: need at least two tokens");
  m.sub.assign(v, std::vector<double>(v, 0.0));
  Rng rng(seed);
  for (size_t i = 0; i < v; ++i) {
    std::vector<double> g(v, 0.0);
    double total = 0;
    for (size_t j = 0; j < v; ++j) {
      if (j == i) continue;
      g[j] = -std::log(1.0 - rng.next_double());
      total += g[j];
    }
    for (size_t j = 0; j < v; ++j)
      m.sub[i][j] = (j == i) ? diagonal : (1.0 - diagonal) * g[j] / total;
  }
  m.ins_dist.assign(v, 1.0 / v);
  m.validate();
  return m;
}

TokenSeq corrupt(const TokenSeq& reference, const ChannelModel& channel,
                 uint64_t seed) {
  Rng rng(seed);
  TokenSeq out;
  for (const auto& tok : reference) {
    int t = channel.token_index(tok);
    require(t >= 0, "corrupt: reference token '" + tok + "' not in channel vocab");
    if (rng.next_double() >= channel.p_del) {
      size_t o = rng.next_categorical(channel.sub[t]);
      out.push_back(channel.vocab[o]);
    }
    if (rng.next_double() < channel.p_ins) {
      size_t o = rng.next_categorical(channel.ins_dist);
      out.push_back(channel.vocab[o]);
    }
  }
  return out;
}

double channel_log_likelihood(const ChannelModel& channel,
                              std::span<const int> true_ids,
                              std::span<const int> observed_ids) {
  const int m = static_cast<int>(true_ids.size());
  const int n = static_cast<int>(observed_ids.size());
  std::vector<double> row(n + 1, 0.0);
  row[0] = 1.0;
  for (int j = 1; j <= n; ++j) row[j] = 0.0;
  std::vector<double> next(n + 1, 0.0);
  const double pd = channel.p_del, pi = channel.p_ins;
  for (int i = 1; i <= m; ++i) {
    const auto& srow = channel.sub[true_ids[i - 1]];
    for (int j = 0; j <= n; ++j) {
      double acc = pd * (1 - pi) * row[j];
      if (j >= 1) {
        double ins_j = channel.ins_dist[observed_ids[j - 1]];
        acc += pd * pi * ins_j * row[j - 1];
        acc += (1 - pd) * (1 - pi) * srow[observed_ids[j - 1]] * row[j - 1];
        if (j >= 2)
          acc += (1 - pd) * pi * srow[observed_ids[j - 2]] * ins_j * row[j - 2];
      }
      next[j] = acc;
    }
    std::swap(row, next);
  }
  return row[n] > 0 ? std::log(row[n]) : kNegInf;
}

namespace {

// beam-search hypothesis: true-token prefix plus the channel DP row and
// the LM prefix score
struct Hyp {
  std::vector<int> tokens;     // channel vocab ids
  std::vector<double> row;     // P(observed[0..j) | tokens)
  double lm_log10 = 0.0;       // prefix LM score, log10
  double prune_score = 0.0;    // ln(max row) + ln(10)*lm_log10
};

// per-component mapping from channel vocab ids to LM vocab ids
struct LmMaps {
  std::vector<std::vector<int>> ids;  // [component][channel_id]
  const InterpolatedLM* lm;

  double log10_next(std::span<const int> chan_ctx, int chan_word) const {
    double p = 0.0;
    for (size_t k = 0; k < lm->components.size(); ++k) {
      const auto& m = *lm->components[k];
      std::vector<int> ctx;
      ctx.reserve(chan_ctx.size() + 1);
      ctx.push_back(Vocab::kBosId);
      for (int c : chan_ctx) ctx.push_back(ids[k][c]);
      int w = chan_word < 0 ? Vocab::kEosId : ids[k][chan_word];
      p += lm->weights[k] * std::pow(10.0, m.log10_prob(ctx, w));
    }
    return std::log10(p);
  }
};

}  // namespace

DecodeResult decode(const TokenSeq& observed, const ChannelModel& channel,
                    const InterpolatedLM& lm, int beam, int nbest_size,
                    const std::string& utterance_id) {
  require(beam >= 1, "decode: beam must be >= 1");
  require(nbest_size >= 1, "decode: nbest_size must be >= 1");
  require(!lm.components.empty(), "decode: LM has no components");

  DecodeResult res;
  res.utterance_id = utterance_id;

  std::vector<int> obs;
  obs.reserve(observed.size());
  for (const auto& tok : observed) {
    int o = channel.token_index(tok);
    require(o >= 0, "decode: observed token '" + tok + "' not in channel vocab");
    obs.push_back(o);
  }
  const int n = static_cast<int>(obs.size());

  LmMaps maps;
  maps.lm = &lm;
  maps.ids.resize(lm.components.size());
  for (size_t k = 0; k < lm.components.size(); ++k) {
    maps.ids[k].resize(channel.vocab.size());
    for (size_t c = 0; c < channel.vocab.size(); ++c)
      maps.ids[k][c] = lm.components[k]->vocab.id_or_unk(channel.vocab[c]);
  }

  if (n == 0) {
    // nothing observed: the empty hypothesis with posterior one
    NBestEntry e;
    e.log_score = M_LN10 * maps.log10_next({}, -1);
    res.best = {};
    res.nbest = {e};
    return res;
  }

  const int len_lo = std::max(0, n - 2);
  const int len_hi = n + 2;
  const int v = static_cast<int>(channel.vocab.size());

  std::vector<Hyp> frontier(1);
  frontier[0].row.assign(n + 1, 0.0);
  frontier[0].row[0] = 1.0;
  frontier[0].prune_score = 0.0;

  struct Completion {
    std::vector<int> tokens;
    double score;
  };
  std::vector<Completion> completions;
  auto try_complete = [&](const Hyp& h) {
    if (static_cast<int>(h.tokens.size()) < len_lo) return;
    if (h.row[n] <= 0.0) return;
    double s = std::log(h.row[n]) +
               M_LN10 * (h.lm_log10 + maps.log10_next(h.tokens, -1));
    if (std::isfinite(s)) completions.push_back({h.tokens, s});
  };

  try_complete(frontier[0]);
  const double pd = channel.p_del, pi = channel.p_ins;
  for (int step = 1; step <= len_hi; ++step) {
    std::vector<Hyp> extended;
    extended.reserve(frontier.size() * v);
    for (const auto& h : frontier) {
      for (int w = 0; w < v; ++w) {
        Hyp e;
        e.tokens = h.tokens;
        e.tokens.push_back(w);
        e.row.assign(n + 1, 0.0);
        const auto& srow = channel.sub[w];
        double best_cell = 0.0;
        for (int j = 0; j <= n; ++j) {
          double acc = pd * (1 - pi) * h.row[j];
          if (j >= 1) {
            double ins_j = channel.ins_dist[obs[j - 1]];
            acc += pd * pi * ins_j * h.row[j - 1];
            acc += (1 - pd) * (1 - pi) * srow[obs[j - 1]] * h.row[j - 1];
            if (j >= 2)
              acc += (1 - pd) * pi * srow[obs[j - 2]] * ins_j * h.row[j - 2];
          }
          e.row[j] = acc;
          best_cell = std::max(best_cell, acc);
        }
        if (best_cell <= 0.0) continue;  // dead path
        e.lm_log10 =
            h.lm_log10 + maps.log10_next(std::span(h.tokens), w);
        e.prune_score = std::log(best_cell) + M_LN10 * e.lm_log10;
        extended.push_back(std::move(e));
      }
    }
    if (extended.empty()) break;
    // deterministic beam: score descending, token sequence as tie-break
    std::sort(extended.begin(), extended.end(), [](const Hyp& a, const Hyp& b) {
      if (a.prune_score != b.prune_score) return a.prune_score > b.prune_score;
      return a.tokens < b.tokens;
    });
    if (static_cast<int>(extended.size()) > beam) extended.resize(beam);
    for (const auto& h : extended) try_complete(h);
    frontier = std::move(extended);
  }

  if (completions.empty()) {
    // narrow beams can dead-end; the observed sequence itself always has
    // nonzero probability under a smoothed channel
    Hyp h;
    h.tokens = obs;
    h.row.assign(n + 1, 0.0);
    h.row[0] = 1.0;
    std::vector<double> next(n + 1, 0.0);
    std::vector<double> cur = h.row;
    for (int i = 1; i <= n; ++i) {
      const auto& srow = channel.sub[obs[i - 1]];
      for (int j = 0; j <= n; ++j) {
        double acc = pd * (1 - pi) * cur[j];
        if (j >= 1) {
          double ins_j = channel.ins_dist[obs[j - 1]];
          acc += pd * pi * ins_j * cur[j - 1];
          acc += (1 - pd) * (1 - pi) * srow[obs[j - 1]] * cur[j - 1];
          if (j >= 2)
            acc += (1 - pd) * pi * srow[obs[j - 2]] * ins_j * cur[j - 2];
        }
        next[j] = acc;
      }
      std::swap(cur, next);
    }
    double lm_sum = 0.0;
    for (int i = 0; i < n; ++i)
      lm_sum += maps.log10_next(std::span(obs).first(i), obs[i]);
    double s = (cur[n] > 0 ? std::log(cur[n]) : kNegInf) +
               M_LN10 * (lm_sum + maps.log10_next(obs, -1));
    require(std::isfinite(s), "decode: no reachable hypothesis");
    completions.push_back({obs, s});
  }

  std::sort(completions.begin(), completions.end(),
            [](const Completion& a, const Completion& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.tokens < b.tokens;
            });
  if (static_cast<int>(completions.size()) > nbest_size)
    completions.resize(nbest_size);

  auto to_tokens = [&](const std::vector<int>& ids) {
    TokenSeq t;
    t.reserve(ids.size());
    for (int id : ids) t.push_back(channel.vocab[id]);
    return t;
  };
  for (const auto& c : completions)
    res.nbest.push_back({to_tokens(c.tokens), c.score});
  res.best = res.nbest.front().tokens;

  // posterior weights over the n-best list
  double max_s = completions.front().score;
  std::vector<double> w(completions.size());
  double z = 0.0;
  for (size_t i = 0; i < completions.size(); ++i) {
    w[i] = std::exp(completions[i].score - max_s);
    z += w[i];
  }
  for (auto& x : w) x /= z;

  // sausage slots: align every entry to the best hypothesis
  const int n_slots = static_cast<int>(res.best.size());
  std::vector<std::map<std::string, double>> slot_mass(n_slots);
  for (size_t e = 0; e < res.nbest.size(); ++e) {
    if (e == 0) {
      for (int s = 0; s < n_slots; ++s) slot_mass[s][res.best[s]] += w[e];
      continue;
    }
    Alignment a = align(res.best, res.nbest[e].tokens);
    for (const auto& p : a.pairs) {
      if (p.op == EditOp::kMatch || p.op == EditOp::kSub)
        slot_mass[p.ref_index][res.nbest[e].tokens[p.hyp_index]] += w[e];
      // deletions leave epsilon mass (1 - slot total); insertions fall
      // outside the sausage approximation
    }
  }
  res.token_scores.resize(n_slots);
  for (int s = 0; s < n_slots; ++s) {
    TokenScore& ts = res.token_scores[s];
    ts.token = res.best[s];
    double total = 0.0;
    for (const auto& [tok, mass] : slot_mass[s]) total += mass;
    ts.slot_mass = std::min(total, 1.0);
    ts.raw_posterior = std::min(slot_mass[s][res.best[s]], 1.0);
    ts.n_alternatives = static_cast<int>(slot_mass[s].size());
  }
  return res;
}

ChannelModel train_channel(const std::vector<RefHypPair>& pairs,
                           const std::vector<double>& weights, double alpha,
                           std::vector<std::string> vocab) {
  require(!pairs.empty(), "train_channel: no pairs");
  require(weights.size() == pairs.size(),
          "train_channel: weights/pairs size mismatch");
  require(alpha > 0, "train_channel: alpha must be positive");
  double wsum = 0.0;
  for (double w : weights) {
    require(w >= 0, "train_channel: negative weight");
    wsum += w;
  }
  require(wsum > 0, "train_channel: all weights zero");
  const double mean_w = wsum / weights.size();

  if (vocab.empty()) {
    std::set<std::string> toks;
    for (const auto& [r, o] : pairs) {
      toks.insert(r.begin(), r.end());
      toks.insert(o.begin(), o.end());
    }
    vocab.assign(toks.begin(), toks.end());
  } else {
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  }

  ChannelModel m;
  m.vocab = std::move(vocab);
  m.smoothing_alpha = alpha;
  const size_t v = m.vocab.size();
  std::vector<std::vector<double>> sub_c(v, std::vector<double>(v, 0.0));
  std::vector<double> ins_c(v, 0.0);
  double del_total = 0.0, emit_total = 0.0, ins_total = 0.0;

  for (size_t i = 0; i < pairs.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const double w = weights[i] / mean_w;
    const auto& [ref, obs] = pairs[i];
    Alignment a = align(ref, obs);
    for (const auto& p : a.pairs) {
      switch (p.op) {
        case EditOp::kMatch:
        case EditOp::kSub: {
          int t = m.token_index(ref[p.ref_index]);
          int o = m.token_index(obs[p.hyp_index]);
          require(t >= 0 && o >= 0, "train_channel: token outside vocab");
          sub_c[t][o] += w;
          emit_total += w;
          break;
        }
        case EditOp::kDel:
          del_total += w;
          break;
        case EditOp::kIns: {
          int o = m.token_index(obs[p.hyp_index]);
          require(o >= 0, "train_channel: token outside vocab");
          ins_c[o] += w;
          ins_total += w;
          break;
        }
      }
    }
  }

  const double true_total = emit_total + del_total;
  m.p_del = (del_total + alpha) / (true_total + 2 * alpha);
  m.p_ins = (ins_total + alpha) / (true_total + 2 * alpha);
  // insertion counts can exceed positions; keep the process well-defined
  if (m.p_del + m.p_ins >= 0.99) {
    double scale = 0.99 / (m.p_del + m.p_ins);
    m.p_del *= scale;
    m.p_ins *= scale;
    warn("train_channel: p_del + p_ins rescaled to stay below 1");
  }
  m.sub.assign(v, std::vector<double>(v, 0.0));
  for (size_t t = 0; t < v; ++t) {
    double row_total = 0.0;
    for (size_t o = 0; o < v; ++o) row_total += sub_c[t][o];
    for (size_t o = 0; o < v; ++o)
      m.sub[t][o] = (sub_c[t][o] + alpha) / (row_total + alpha * v);
  }
  m.ins_dist.assign(v, 0.0);
  for (size_t o = 0; o < v; ++o)
    m.ins_dist[o] = (ins_c[o] + alpha) / (ins_total + alpha * v);
  m.validate();
  return m;
}

double wer_of_channel(const ChannelModel& channel, const InterpolatedLM& lm,
                      const std::vector<Utterance>& eval_set, int beam,
                      int nbest_size, int n_threads) {
  require(!eval_set.empty(), "wer_of_channel: empty eval set");
  for (const auto& u : eval_set)
    require(u.reference && !u.reference->empty(),
            "wer_of_channel: utterance '" + u.id + "' has no reference");
  if (n_threads <= 0)
    n_threads = static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, n_threads);

  std::vector<RefHypPair> scored(eval_set.size());
  auto work = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      DecodeResult d =
          decode(eval_set[i].observed, channel, lm, beam, nbest_size,
                 eval_set[i].id);
      scored[i] = {*eval_set[i].reference, d.best};
    }
  };
  if (n_threads == 1 || eval_set.size() < 16) {
    work(0, eval_set.size());
  } else {
    std::vector<std::future<void>> futs;
    size_t chunk = (eval_set.size() + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      size_t b = t * chunk;
      size_t e = std::min(eval_set.size(), b + chunk);
      if (b >= e) break;
      futs.push_back(std::async(std::launch::async, work, b, e));
    }
    for (auto& f : futs) f.get();
  }
  return wer(scored).wer;
}

std::string ChannelModel::to_json_string() const {
  json j;
  j["vocab"] = vocab;
  json sub_j = json::object();
  for (size_t t = 0; t < vocab.size(); ++t) {
    json row = json::object();
    for (size_t o = 0; o < vocab.size(); ++o) row[vocab[o]] = sub[t][o];
    sub_j[vocab[t]] = std::move(row);
  }
  j["sub"] = std::move(sub_j);
  j["p_del"] = p_del;
  j["p_ins"] = p_ins;
  json ins_j = json::object();
  for (size_t o = 0; o < vocab.size(); ++o) ins_j[vocab[o]] = ins_dist[o];
  j["ins_dist"] = std::move(ins_j);
  j["smoothing_alpha"] = smoothing_alpha;
  return j.dump();
}

ChannelModel ChannelModel::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    raise(std::string("channel JSON parse failure: ") + e.what());
  }
  ChannelModel m;
  m.vocab = j.at("vocab").get<std::vector<std::string>>();
  require(std::is_sorted(m.vocab.begin(), m.vocab.end()),
          "channel JSON: vocab must be sorted");
  const size_t v = m.vocab.size();
  m.sub.assign(v, std::vector<double>(v, 0.0));
  for (size_t t = 0; t < v; ++t)
    for (size_t o = 0; o < v; ++o)
      m.sub[t][o] = j.at("sub").at(m.vocab[t]).value(m.vocab[o], 0.0);
  m.p_del = j.at("p_del").get<double>();
  m.p_ins = j.at("p_ins").get<double>();
  m.ins_dist.assign(v, 0.0);
  for (size_t o = 0; o < v; ++o)
    m.ins_dist[o] = j.at("ins_dist").value(m.vocab[o], 0.0);
  m.smoothing_alpha = j.value("smoothing_alpha", 1.0);
  m.validate();
  return m;
}

void ChannelModel::save(const std::string& path) const {
  std::ofstream out(path);
  require(out.good(), "channel save: cannot write '" + path + "'");
  out << to_json_string() << "\n";
}

ChannelModel ChannelModel::load(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "channel load: cannot read '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_string(text);
}

}  // namespace confsel
