#ifndef CONFSEL_UTIL_HPP
#define CONFSEL_UTIL_HPP

#include <cstdint>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace confsel {

// All recoverable errors surface as ConfselError with a human-readable
// message (file/line context included by the caller where useful).
class ConfselError : public std::runtime_error {
 public:
  explicit ConfselError(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void raise(const std::string& msg) {
  throw ConfselError(msg);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) raise(msg);
}

inline void warn(const std::string& msg) {
  std::cerr << "confsel warning: " << msg << "\n";
}

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream iss(line);
  std::string t;
  while (iss >> t) toks.push_back(t);
  return toks;
}

inline std::string lowercase(std::string s) {
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

inline std::string join(const std::vector<std::string>& toks,
                         const std::string& sep = " ") {
  std::string out;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (i) out += sep;
    out += toks[i];
  }
  return out;
}

// FNV-1a, used for seed derivation and config hashing. Stable across
// platforms, unlike std::hash.
inline uint64_t fnv1a(const std::string& s, uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t fnv1a_mix(uint64_t h, uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace confsel

#endif  // CONFSEL_UTIL_HPP
