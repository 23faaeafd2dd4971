#ifndef CONFSEL_CORPUS_HPP
#define CONFSEL_CORPUS_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace confsel {

enum class Origin { kBaseline, kPool, kDev, kTest };

std::string origin_name(Origin o);
Origin origin_from_name(const std::string& name);

struct Utterance {
  std::string id;
  // human transcript; absent for pool items until selection reveals it
  std::optional<std::vector<std::string>> reference;
  // channel-corrupted surface form, the audio stand-in
  std::vector<std::string> observed;
  // transcription-cost proxy; equals observed token count once the
  // channel has synthesized the observed side
  int duration_units = 0;
  Origin origin = Origin::kPool;

  bool operator==(const Utterance&) const = default;
};

struct CorpusSplit {
  std::vector<Utterance> baseline;
  std::vector<Utterance> pool;
  std::vector<Utterance> dev;
  std::vector<Utterance> test;
  int64_t seed = 0;

  bool operator==(const CorpusSplit&) const = default;
};

struct BudgetLedger {
  // 10k tokens ~ one simulated hour by default
  double hours_per_unit = 1.0 / 10000.0;
  double spent_hours = 0.0;

  double hours(int64_t duration_units) const {
    return duration_units * hours_per_unit;
  }
};

enum class CorpusFormat { kPlainLines, kJsonl };

// plain-lines: one whitespace-tokenized sentence per line, lowercased on
// ingestion; ids are "u<line>" (0-based). jsonl: one record per line with
// at least a "reference" array.
std::vector<Utterance> ingest(const std::string& path, CorpusFormat format);

// deterministic shuffle keyed by seed, then contiguous partition into
// (baseline, pool, dev, test); ratios must lie on the simplex
CorpusSplit split(const std::vector<Utterance>& corpus,
                  const std::array<double, 4>& ratios, int64_t seed);

void save_split(const CorpusSplit& s, const std::string& path);
CorpusSplit load_split(const std::string& path);

}  // namespace confsel

#endif  // CONFSEL_CORPUS_HPP
