#pragma once

// Brute-force reference implementations used as oracles. These stay
// deliberately naive and share no code with the library: tokenization is a
// separate decoder, F1 uses greedy flag matching, ROUGE-n scans n-gram
// lists quadratically, LCS is memoized recursion, and the pool reference
// is a flat vector with linear scans.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace testref {

inline bool ref_is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline bool ref_unicode_punct(std::uint32_t cp) {
  if (cp >= 0x00A1 && cp <= 0x00BF && cp != 0x00AA && cp != 0x00BA) {
    return true;
  }
  if (cp == 0x00D7 || cp == 0x00F7) return true;
  if (cp >= 0x2000 && cp <= 0x206F) return true;
  if (cp >= 0x2E00 && cp <= 0x2E7F) return true;
  if (cp >= 0x3000 && cp <= 0x303F) return true;
  if (cp >= 0xFE30 && cp <= 0xFE4F) return true;
  if (cp >= 0xFF01 && cp <= 0xFF0F) return true;
  if (cp >= 0xFF1A && cp <= 0xFF20) return true;
  if (cp >= 0xFF3B && cp <= 0xFF40) return true;
  if (cp >= 0xFF5B && cp <= 0xFF65) return true;
  return false;
}

// Apply the normalization rules one at a time over decoded code points.
inline std::vector<std::string> ref_tokens(const std::string& text,
                                           bool drop_articles) {
  std::string spaced;
  std::size_t i = 0;
  const auto size = text.size();
  while (i < size) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if ((b0 & 0x80u) == 0) {
      len = 1;
    } else if ((b0 & 0xE0u) == 0xC0u) {
      len = 2;
    } else if ((b0 & 0xF0u) == 0xE0u) {
      len = 3;
    } else if ((b0 & 0xF8u) == 0xF0u) {
      len = 4;
    }
    if (i + len > size) len = 1;
    if (len == 1) {
      const char c = text[i];
      if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
        spaced += c;
      } else if (c >= 'A' && c <= 'Z') {
        spaced += static_cast<char>(c - 'A' + 'a');
      } else {
        spaced += ' ';
      }
    } else {
      std::uint32_t cp = 0;
      switch (len) {
        case 2: cp = b0 & 0x1Fu; break;
        case 3: cp = b0 & 0x0Fu; break;
        default: cp = b0 & 0x07u; break;
      }
      bool valid = true;
      for (std::size_t k = 1; k < len; ++k) {
        const auto bk = static_cast<unsigned char>(text[i + k]);
        if ((bk & 0xC0u) != 0x80u) {
          valid = false;
          break;
        }
        cp = (cp << 6) | (bk & 0x3Fu);
      }
      if (!valid) {
        spaced += ' ';
        len = 1;
      } else if (ref_unicode_punct(cp)) {
        spaced += ' ';
      } else {
        spaced.append(text, i, len);
      }
    }
    i += len;
  }
  std::vector<std::string> tokens;
  std::string current;
  for (char c : spaced + " ") {
    if (c == ' ') {
      if (!current.empty()) {
        if (!drop_articles ||
            (current != "a" && current != "an" && current != "the")) {
          tokens.push_back(current);
        }
        current.clear();
      }
    } else {
      current += c;
    }
  }
  return tokens;
}

inline double ref_token_f1(const std::string& pred, const std::string& gold) {
  const auto p = ref_tokens(pred, true);
  const auto g = ref_tokens(gold, true);
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::vector<bool> used(g.size(), false);
  std::size_t overlap = 0;
  for (const auto& token : p) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (!used[j] && g[j] == token) {
        used[j] = true;
        ++overlap;
        break;
      }
    }
  }
  return 2.0 * static_cast<double>(overlap) /
         static_cast<double>(p.size() + g.size());
}

inline std::vector<std::vector<std::string>> ref_ngrams(
    const std::vector<std::string>& tokens, int n) {
  std::vector<std::vector<std::string>> grams;
  if (n < 1 || tokens.size() < static_cast<std::size_t>(n)) return grams;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    grams.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
  }
  return grams;
}

inline double ref_rouge_n(const std::string& candidate,
                          const std::string& reference, int n) {
  const auto cand = ref_ngrams(ref_tokens(candidate, false), n);
  const auto ref = ref_ngrams(ref_tokens(reference, false), n);
  if (cand.empty() || ref.empty()) return 0.0;
  std::vector<bool> used(ref.size(), false);
  std::size_t overlap = 0;
  for (const auto& gram : cand) {
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (!used[j] && ref[j] == gram) {
        used[j] = true;
        ++overlap;
        break;
      }
    }
  }
  const double precision =
      static_cast<double>(overlap) / static_cast<double>(cand.size());
  const double recall =
      static_cast<double>(overlap) / static_cast<double>(ref.size());
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

inline std::size_t ref_lcs(const std::vector<std::string>& a,
                           const std::vector<std::string>& b, std::size_t i,
                           std::size_t j, std::vector<int>& memo) {
  if (i == a.size() || j == b.size()) return 0;
  int& slot = memo[i * b.size() + j];
  if (slot >= 0) return static_cast<std::size_t>(slot);
  std::size_t best;
  if (a[i] == b[j]) {
    best = 1 + ref_lcs(a, b, i + 1, j + 1, memo);
  } else {
    best = std::max(ref_lcs(a, b, i + 1, j, memo),
                    ref_lcs(a, b, i, j + 1, memo));
  }
  slot = static_cast<int>(best);
  return best;
}

inline double ref_rouge_l(const std::string& candidate,
                          const std::string& reference) {
  const auto cand = ref_tokens(candidate, false);
  const auto ref = ref_tokens(reference, false);
  if (cand.empty() || ref.empty()) return 0.0;
  std::vector<int> memo(cand.size() * ref.size(), -1);
  const auto lcs = static_cast<double>(ref_lcs(cand, ref, 0, 0, memo));
  const double precision = lcs / static_cast<double>(cand.size());
  const double recall = lcs / static_cast<double>(ref.size());
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

inline double ref_rouge_avg(const std::string& candidate,
                            const std::string& reference) {
  return (ref_rouge_n(candidate, reference, 1) +
          ref_rouge_n(candidate, reference, 2) +
          ref_rouge_l(candidate, reference)) /
         3.0;
}

// ---------------------------------------------------------------------------
// Literal pool reference: dedup by normalized evidence, refresh recency on
// the same label, latest classification wins on the opposite label.

struct RefPoolEntry {
  std::string key;
  std::string evidence;
  bool is_fact = false;
  double score = 0.0;
};

struct RefPools {
  std::vector<RefPoolEntry> facts;
  std::vector<RefPoolEntry> nonfacts;

  static std::string key_of(const std::string& evidence) {
    std::string key;
    for (const auto& token : ref_tokens(evidence, true)) {
      if (!key.empty()) key += ' ';
      key += token;
    }
    return key;
  }

  void add(const std::string& evidence, bool is_fact, double score) {
    const std::string key = key_of(evidence);
    auto& target = is_fact ? facts : nonfacts;
    auto& other = is_fact ? nonfacts : facts;
    for (auto it = target.begin(); it != target.end(); ++it) {
      if (it->key == key) {
        target.erase(it);
        target.push_back(RefPoolEntry{key, evidence, is_fact, score});
        return;
      }
    }
    for (auto it = other.begin(); it != other.end(); ++it) {
      if (it->key == key) {
        other.erase(it);
        break;
      }
    }
    target.push_back(RefPoolEntry{key, evidence, is_fact, score});
  }
};

}  // namespace testref
