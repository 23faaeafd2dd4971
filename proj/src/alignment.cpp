#include "confsel/alignment.hpp"

#include <algorithm>

namespace confsel {

Alignment align(const std::vector<std::string>& ref,
                const std::vector<std::string>& hyp) {
  const int nr = static_cast<int>(ref.size());
  const int nh = static_cast<int>(hyp.size());
  // cost[i][j] = edit distance between ref[0..i) and hyp[0..j)
  std::vector<std::vector<int>> cost(nr + 1, std::vector<int>(nh + 1, 0));
  for (int i = 1; i <= nr; ++i) cost[i][0] = i;
  for (int j = 1; j <= nh; ++j) cost[0][j] = j;
  for (int i = 1; i <= nr; ++i) {
    for (int j = 1; j <= nh; ++j) {
      int sub = cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      int del = cost[i - 1][j] + 1;
      int ins = cost[i][j - 1] + 1;
      cost[i][j] = std::min({sub, del, ins});
    }
  }

  Alignment out;
  int i = nr, j = nh;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        cost[i][j] == cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      bool match = ref[i - 1] == hyp[j - 1];
      out.pairs.push_back({match ? EditOp::kMatch : EditOp::kSub, i - 1, j - 1});
      match ? ++out.matches : ++out.substitutions;
      --i, --j;
    } else if (i > 0 && cost[i][j] == cost[i - 1][j] + 1) {
      out.pairs.push_back({EditOp::kDel, i - 1, -1});
      ++out.deletions;
      --i;
    } else {
      out.pairs.push_back({EditOp::kIns, -1, j - 1});
      ++out.insertions;
      --j;
    }
  }
  std::reverse(out.pairs.begin(), out.pairs.end());
  return out;
}

int edit_distance(const std::vector<std::string>& ref,
                  const std::vector<std::string>& hyp) {
  return align(ref, hyp).distance();
}

}  // namespace confsel
