#include "confsel/corpus.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <json.hpp>

#include "confsel/rng.hpp"
#include "confsel/util.hpp"

namespace confsel {

using nlohmann::json;

namespace {
constexpr int kCorpusVersion = 1;
}

std::string origin_name(Origin o) {
  switch (o) {
    case Origin::kBaseline: return "baseline";
    case Origin::kPool: return "pool";
    case Origin::kDev: return "dev";
    case Origin::kTest: return "test";
  }
  raise("unreachable origin");
}

Origin origin_from_name(const std::string& name) {
  if (name == "baseline") return Origin::kBaseline;
  if (name == "pool") return Origin::kPool;
  if (name == "dev") return Origin::kDev;
  if (name == "test") return Origin::kTest;
  raise("unknown origin '" + name + "'");
}

std::vector<Utterance> ingest(const std::string& path, CorpusFormat format) {
  std::ifstream in(path);
  require(in.good(), "ingest: cannot read '" + path + "'");
  std::vector<Utterance> out;
  std::string line;
  int line_no = 0;
  for (; std::getline(in, line); ++line_no) {
    if (format == CorpusFormat::kPlainLines) {
      auto toks = tokenize(lowercase(line));
      if (toks.empty()) continue;
      Utterance u;
      u.id = "u" + std::to_string(line_no);
      u.reference = toks;
      u.duration_units = static_cast<int>(toks.size());
      out.push_back(std::move(u));
    } else {
      if (line.empty()) continue;
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::exception& e) {
        raise("ingest: malformed JSONL at line " + std::to_string(line_no) +
              ": " + e.what());
      }
      if (!rec.contains("reference") || !rec["reference"].is_array())
        raise("ingest: JSONL record at line " + std::to_string(line_no) +
              " is missing \"reference\"");
      Utterance u;
      u.id = rec.value("id", "u" + std::to_string(line_no));
      std::vector<std::string> toks;
      for (const auto& t : rec["reference"])
        toks.push_back(lowercase(t.get<std::string>()));
      u.reference = toks;
      u.duration_units = static_cast<int>(toks.size());
      out.push_back(std::move(u));
    }
  }
  require(!out.empty(), "empty corpus: '" + path + "'");
  return out;
}

CorpusSplit split(const std::vector<Utterance>& corpus,
                  const std::array<double, 4>& ratios, int64_t seed) {
  require(!corpus.empty(), "split: empty corpus");
  double sum = 0;
  for (double r : ratios) {
    require(r >= 0.0, "split: negative ratio");
    sum += r;
  }
  require(std::abs(sum - 1.0) <= 1e-9, "split: ratios do not sum to 1");

  std::vector<size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(static_cast<uint64_t>(seed) * 0x9e3779b97f4a7c15ull + 0x5851f42d4c957f2dull);
  rng.shuffle(order);

  const auto n = static_cast<double>(corpus.size());
  std::array<size_t, 5> bounds{};
  double cum = 0;
  bounds[0] = 0;
  for (int k = 0; k < 4; ++k) {
    cum += ratios[k];
    bounds[k + 1] = static_cast<size_t>(std::llround(cum * n));
  }
  bounds[4] = corpus.size();

  CorpusSplit out;
  out.seed = seed;
  std::array<std::vector<Utterance>*, 4> sets{&out.baseline, &out.pool,
                                              &out.dev, &out.test};
  std::array<Origin, 4> origins{Origin::kBaseline, Origin::kPool, Origin::kDev,
                                Origin::kTest};
  for (int k = 0; k < 4; ++k) {
    for (size_t i = bounds[k]; i < bounds[k + 1]; ++i) {
      Utterance u = corpus[order[i]];
      u.origin = origins[k];
      sets[k]->push_back(std::move(u));
    }
  }
  return out;
}

namespace {

json utterance_to_json(const Utterance& u) {
  json rec;
  rec["id"] = u.id;
  rec["reference"] = u.reference ? json(*u.reference) : json(nullptr);
  rec["observed"] = u.observed;
  rec["duration_units"] = u.duration_units;
  rec["origin"] = origin_name(u.origin);
  return rec;
}

Utterance utterance_from_json(const json& rec, int line_no) {
  Utterance u;
  try {
    u.id = rec.at("id").get<std::string>();
    if (!rec.at("reference").is_null())
      u.reference = rec.at("reference").get<std::vector<std::string>>();
    u.observed = rec.at("observed").get<std::vector<std::string>>();
    u.duration_units = rec.at("duration_units").get<int>();
    u.origin = origin_from_name(rec.at("origin").get<std::string>());
  } catch (const json::exception& e) {
    raise("corpus record at line " + std::to_string(line_no) + ": " + e.what());
  }
  return u;
}

}  // namespace

void save_split(const CorpusSplit& s, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "save_split: cannot write '" + path + "'");
  json header;
  header["confsel_corpus_version"] = kCorpusVersion;
  header["seed"] = s.seed;
  out << header.dump() << "\n";
  for (const auto* set : {&s.baseline, &s.pool, &s.dev, &s.test})
    for (const auto& u : *set) out << utterance_to_json(u).dump() << "\n";
  require(out.good(), "save_split: write failure on '" + path + "'");
}

CorpusSplit load_split(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "load_split: cannot read '" + path + "'");
  std::string line;
  require(static_cast<bool>(std::getline(in, line)),
          "load_split: empty file '" + path + "'");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    raise("load_split: bad header: " + std::string(e.what()));
  }
  require(header.contains("confsel_corpus_version"),
          "load_split: missing corpus version header");
  int version = header["confsel_corpus_version"].get<int>();
  require(version == kCorpusVersion,
          "load_split: unsupported corpus version " + std::to_string(version));

  CorpusSplit s;
  s.seed = header.value("seed", int64_t{0});
  std::unordered_set<std::string> seen;
  int line_no = 1;
  for (; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      raise("load_split: malformed record at line " + std::to_string(line_no) +
            ": " + e.what());
    }
    Utterance u = utterance_from_json(rec, line_no);
    require(seen.insert(u.id).second, "load_split: duplicate id '" + u.id + "'");
    switch (u.origin) {
      case Origin::kBaseline: s.baseline.push_back(std::move(u)); break;
      case Origin::kPool: s.pool.push_back(std::move(u)); break;
      case Origin::kDev: s.dev.push_back(std::move(u)); break;
      case Origin::kTest: s.test.push_back(std::move(u)); break;
    }
  }
  return s;
}

}  // namespace confsel
