#ifndef CONFSEL_ALIGNMENT_HPP
#define CONFSEL_ALIGNMENT_HPP

#include <string>
#include <vector>

namespace confsel {

enum class EditOp { kMatch, kSub, kDel, kIns };

struct AlignedPair {
  EditOp op;
  // index into the reference / hypothesis for the consumed token,
  // -1 where the side is not consumed (kDel has hyp = -1, kIns ref = -1)
  int ref_index;
  int hyp_index;
};

struct Alignment {
  std::vector<AlignedPair> pairs;
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int matches = 0;
  int distance() const { return substitutions + deletions + insertions; }
};

// Levenshtein alignment with unit costs. Backtrace ties are resolved by
// preferring substitution over deletion over insertion, which keeps
// downstream counts deterministic.
Alignment align(const std::vector<std::string>& ref,
                const std::vector<std::string>& hyp);

int edit_distance(const std::vector<std::string>& ref,
                  const std::vector<std::string>& hyp);

}  // namespace confsel

#endif  // CONFSEL_ALIGNMENT_HPP
