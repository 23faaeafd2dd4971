#include <cstdio>
#include <fstream>
#include <sstream>

#include "confsel/lm.hpp"
#include "confsel/util.hpp"

namespace confsel {

namespace {

std::string fmt_log(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::vector<uint64_t> sorted_model_keys(
    const std::unordered_map<uint64_t, double>& m) {
  std::vector<uint64_t> keys;
  keys.reserve(m.size());
  for (const auto& [k, v] : m) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace

void write_arpa(const NGramModel& model, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "write_arpa: cannot write '" + path + "'");
  out << "\\data\\\n";
  for (int n = 1; n <= model.order; ++n)
    out << "ngram " << n << "=" << model.prob[n - 1].size() << "\n";
  for (int n = 1; n <= model.order; ++n) {
    out << "\n\\" << n << "-grams:\n";
    for (uint64_t key : sorted_model_keys(model.prob[n - 1])) {
      out << fmt_log(model.prob[n - 1].at(key));
      auto ids = gram::unpack(key, n);
      for (size_t i = 0; i < ids.size(); ++i)
        out << (i == 0 ? "\t" : " ") << model.vocab.token(ids[i]);
      if (n < model.order) {
        auto it = model.backoff[n - 1].find(key);
        if (it != model.backoff[n - 1].end()) out << "\t" << fmt_log(it->second);
      }
      out << "\n";
    }
  }
  out << "\n\\end\\\n";
  require(out.good(), "write_arpa: write failure on '" + path + "'");
}

NGramModel read_arpa(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "read_arpa: cannot read '" + path + "'");
  std::string line;
  int line_no = 0;
  auto next_line = [&](std::string& l) {
    if (!std::getline(in, l)) return false;
    ++line_no;
    if (!l.empty() && l.back() == '\r') l.pop_back();
    return true;
  };
  auto fail = [&](const std::string& msg) -> void {
    raise("read_arpa: " + msg + " at line " + std::to_string(line_no) +
          " of '" + path + "'");
  };

  // header
  bool saw_data = false;
  while (next_line(line)) {
    if (line.empty()) continue;
    if (line == "\\data\\") {
      saw_data = true;
      break;
    }
    fail("expected \\data\\ header, got '" + line + "'");
  }
  if (!saw_data) fail("missing \\data\\ header");

  std::vector<int64_t> declared;  // per order
  while (next_line(line)) {
    if (line.empty()) break;
    int n = 0;
    int64_t c = 0;
    if (std::sscanf(line.c_str(), "ngram %d=%lld", &n,
                    reinterpret_cast<long long*>(&c)) != 2)
      fail("malformed count line '" + line + "'");
    if (n != static_cast<int>(declared.size()) + 1)
      fail("out-of-order ngram count line '" + line + "'");
    declared.push_back(c);
  }
  if (declared.empty()) fail("no ngram counts declared");
  const int order = static_cast<int>(declared.size());
  require(order <= gram::kMaxOrder, "read_arpa: order exceeds supported max");

  NGramModel model;
  model.order = order;
  model.prob.resize(order);
  model.backoff.resize(order > 1 ? order - 1 : 0);
  model.discounts.resize(order);

  for (int n = 1; n <= order; ++n) {
    // locate the section header
    bool found = false;
    while (next_line(line)) {
      if (line.empty()) continue;
      std::string want = "\\" + std::to_string(n) + "-grams:";
      if (line == want) {
        found = true;
        break;
      }
      fail("expected '" + want + "', got '" + line + "'");
    }
    if (!found) fail("missing \\" + std::to_string(n) + "-grams: section");

    int64_t seen = 0;
    while (next_line(line)) {
      if (line.empty()) break;
      if (line[0] == '\\') fail("section ended early: expected " +
                                std::to_string(declared[n - 1]) +
                                " entries, got " + std::to_string(seen));
      std::istringstream iss(line);
      double logp;
      if (!(iss >> logp)) fail("malformed n-gram line '" + line + "'");
      std::vector<int> ids(n);
      for (int i = 0; i < n; ++i) {
        std::string tok;
        if (!(iss >> tok)) fail("truncated n-gram line '" + line + "'");
        if (n == 1) {
          ids[i] = model.vocab.add(tok);
        } else {
          int id = model.vocab.id(tok);
          if (id < 0) fail("token '" + tok + "' has no unigram entry");
          ids[i] = id;
        }
      }
      uint64_t key = gram::pack(ids);
      model.prob[n - 1][key] = logp;
      double bow;
      if (iss >> bow) {
        if (n >= order) fail("unexpected backoff on highest-order line");
        model.backoff[n - 1][key] = bow;
      }
      std::string extra;
      if (iss >> extra) fail("trailing fields on line '" + line + "'");
      ++seen;
    }
    if (seen != declared[n - 1])
      fail("\\" + std::to_string(n) + "-grams: declared " +
           std::to_string(declared[n - 1]) + " entries, found " +
           std::to_string(seen));
  }

  bool saw_end = false;
  while (next_line(line)) {
    if (line.empty()) continue;
    if (line == "\\end\\") {
      saw_end = true;
      break;
    }
    fail("unexpected content '" + line + "'");
  }
  if (!saw_end) raise("read_arpa: missing \\end\\ in '" + path + "'");
  return model;
}

}  // namespace confsel
