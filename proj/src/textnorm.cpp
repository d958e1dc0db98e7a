#include "refinery/textnorm.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>

namespace refinery {
namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// Decode one UTF-8 code point starting at i, advancing i past it.
// Malformed sequences fall back to the single byte value.
std::uint32_t next_codepoint(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  std::uint32_t cp = b0;
  if (b0 >= 0xF0) {
    len = 4;
    cp = b0 & 0x07u;
  } else if (b0 >= 0xE0) {
    len = 3;
    cp = b0 & 0x0Fu;
  } else if (b0 >= 0xC0) {
    len = 2;
    cp = b0 & 0x1Fu;
  }
  if (len == 1 || i + len > s.size()) {
    ++i;
    return b0;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto bk = static_cast<unsigned char>(s[i + k]);
    if ((bk & 0xC0u) != 0x80u) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | (bk & 0x3Fu);
  }
  i += len;
  return cp;
}

// Typographic punctuation that should separate tokens just like ASCII
// punctuation does: Latin-1 punctuation/symbols, general punctuation
// (dashes, curly quotes, ellipsis, primes), CJK punctuation, fullwidth
// forms. Non-ASCII letters pass through untouched.
bool is_punct_codepoint(std::uint32_t cp) {
  if ((cp >= 0x00A1 && cp <= 0x00BF && cp != 0x00AA && cp != 0x00BA) ||
      cp == 0x00D7 || cp == 0x00F7) {
    return true;
  }
  if (cp >= 0x2000 && cp <= 0x206F) return true;   // general punctuation
  if (cp >= 0x2E00 && cp <= 0x2E7F) return true;   // supplemental punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return true;   // CJK symbols
  if (cp >= 0xFE30 && cp <= 0xFE4F) return true;   // CJK compat forms
  if (cp >= 0xFF01 && cp <= 0xFF0F) return true;   // fullwidth ! .. /
  if (cp >= 0xFF1A && cp <= 0xFF20) return true;   // fullwidth : .. @
  if (cp >= 0xFF3B && cp <= 0xFF40) return true;   // fullwidth [ .. `
  if (cp >= 0xFF5B && cp <= 0xFF65) return true;   // fullwidth { .. halfwidth .
  return false;
}

const std::set<std::string>& article_set() {
  static const std::set<std::string> articles = {"a", "an", "the"};
  return articles;
}

// Words whose trailing dot does not end a sentence. Matched
// case-insensitively against the whitespace-delimited word ending at the
// candidate dot.
const std::set<std::string>& abbreviation_set() {
  static const std::set<std::string> abbrevs = {
      "fig.",  "figs.", "eq.",   "eqs.",  "sec.",  "secs.", "no.",
      "al.",   "e.g.",  "i.e.",  "etc.",  "vs.",   "cf.",   "resp.",
      "ca.",   "approx.", "dr.", "prof.", "st.",
  };
  return abbrevs;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

// End offsets (one past the terminal character) of each sentence.
// The final offset is always text.size() when any non-space content
// trails the last boundary.
std::vector<std::size_t> sentence_end_offsets(std::string_view text) {
  std::vector<std::size_t> ends;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    // Must be followed by whitespace and an uppercase/digit start.
    std::size_t j = i + 1;
    if (j >= text.size() || !is_ascii_space(text[j])) continue;
    while (j < text.size() && is_ascii_space(text[j])) ++j;
    if (j >= text.size()) continue;
    const auto nc = static_cast<unsigned char>(text[j]);
    if (!(std::isupper(nc) || std::isdigit(nc))) continue;
    if (c == '.') {
      // The word ending at this dot may be a known abbreviation.
      std::size_t w = i;
      while (w > 0 && !is_ascii_space(text[w - 1])) --w;
      const std::string word = to_lower_ascii(text.substr(w, i + 1 - w));
      if (abbreviation_set().count(word) > 0) continue;
    }
    ends.push_back(i + 1);
  }
  // Trailing content without terminal punctuation still forms a sentence.
  std::size_t tail = ends.empty() ? 0 : ends.back();
  for (std::size_t i = tail; i < text.size(); ++i) {
    if (!is_ascii_space(text[i])) {
      ends.push_back(text.size());
      break;
    }
  }
  return ends;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_ascii_space(s[b])) ++b;
  while (e > b && is_ascii_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::map<std::string, int> ngram_counts(const TokenSequence& tokens, int n) {
  std::map<std::string, int> counts;
  if (n <= 0 || tokens.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      if (k > 0) key += '\x1f';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

double f_measure(double precision, double recall) {
  const double denom = precision + recall;
  if (denom <= 0.0) return 0.0;
  return 2.0 * precision * recall / denom;
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const std::uint32_t cp = next_codepoint(text, i);
    if (cp < 0x80) {
      const auto c = static_cast<unsigned char>(cp);
      if (std::isalnum(c)) {
        cleaned += static_cast<char>(std::tolower(c));
      } else {
        cleaned += ' ';
      }
    } else if (is_punct_codepoint(cp)) {
      cleaned += ' ';
    } else {
      cleaned.append(text.substr(start, i - start));
    }
  }
  TokenSequence tokens;
  std::size_t pos = 0;
  while (pos < cleaned.size()) {
    while (pos < cleaned.size() && cleaned[pos] == ' ') ++pos;
    std::size_t end = pos;
    while (end < cleaned.size() && cleaned[end] != ' ') ++end;
    if (end > pos) tokens.push_back(cleaned.substr(pos, end - pos));
    pos = end;
  }
  return tokens;
}

TokenSequence normalize(std::string_view text) {
  TokenSequence tokens = tokenize(text);
  tokens.erase(std::remove_if(tokens.begin(), tokens.end(),
                              [](const std::string& t) {
                                return article_set().count(t) > 0;
                              }),
               tokens.end());
  return tokens;
}

std::string join_tokens(const TokenSequence& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

double token_f1(std::string_view pred, std::string_view gold) {
  const TokenSequence p = normalize(pred);
  const TokenSequence g = normalize(gold);
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::map<std::string, int> pc;
  for (const auto& t : p) ++pc[t];
  std::size_t overlap = 0;
  std::map<std::string, int> gc;
  for (const auto& t : g) ++gc[t];
  for (const auto& [token, count] : pc) {
    auto it = gc.find(token);
    if (it != gc.end()) overlap += std::min(count, it->second);
  }
  return 2.0 * static_cast<double>(overlap) /
         static_cast<double>(p.size() + g.size());
}

double rouge_n(std::string_view candidate, std::string_view reference,
               int n) {
  const TokenSequence cand = tokenize(candidate);
  const TokenSequence ref = tokenize(reference);
  const auto cand_counts = ngram_counts(cand, n);
  const auto ref_counts = ngram_counts(ref, n);
  std::size_t cand_total = 0;
  std::size_t ref_total = 0;
  for (const auto& [k, v] : cand_counts) cand_total += v;
  for (const auto& [k, v] : ref_counts) ref_total += v;
  if (cand_total == 0 || ref_total == 0) return 0.0;
  std::size_t overlap = 0;
  for (const auto& [key, count] : cand_counts) {
    auto it = ref_counts.find(key);
    if (it != ref_counts.end()) overlap += std::min(count, it->second);
  }
  const double precision =
      static_cast<double>(overlap) / static_cast<double>(cand_total);
  const double recall =
      static_cast<double>(overlap) / static_cast<double>(ref_total);
  return f_measure(precision, recall);
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const TokenSequence cand = tokenize(candidate);
  const TokenSequence ref = tokenize(reference);
  if (cand.empty() || ref.empty()) return 0.0;
  const auto lcs = static_cast<double>(lcs_length(cand, ref));
  const double precision = lcs / static_cast<double>(cand.size());
  const double recall = lcs / static_cast<double>(ref.size());
  return f_measure(precision, recall);
}

double rouge_avg(std::string_view candidate, std::string_view reference) {
  return (rouge_n(candidate, reference, 1) +
          rouge_n(candidate, reference, 2) + rouge_l(candidate, reference)) /
         3.0;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::size_t start = 0;
  for (std::size_t end : sentence_end_offsets(text)) {
    std::string piece = trim(text.substr(start, end - start));
    if (!piece.empty()) sentences.push_back(std::move(piece));
    start = end;
  }
  return sentences;
}

std::size_t count_tokens(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    if (is_ascii_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

std::string truncate_to_budget(std::string_view text,
                               std::size_t max_tokens) {
  if (count_tokens(text) <= max_tokens) return std::string(text);

  // End offset of the max_tokens-th whitespace token.
  std::size_t token_cut = 0;
  std::size_t seen = 0;
  bool in_token = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_ascii_space(text[i])) {
      in_token = false;
    } else {
      if (!in_token) {
        if (seen == max_tokens) break;
        ++seen;
        in_token = true;
      }
      token_cut = i + 1;
    }
  }

  // Prefer the last sentence boundary whose prefix fits the budget.
  std::size_t sentence_cut = 0;
  for (std::size_t end : sentence_end_offsets(text)) {
    if (count_tokens(text.substr(0, end)) <= max_tokens) {
      sentence_cut = end;
    } else {
      break;
    }
  }

  std::string_view out = text.substr(0, sentence_cut > 0 ? sentence_cut : token_cut);
  while (!out.empty() && is_ascii_space(out.back())) out.remove_suffix(1);
  return std::string(out);
}

}  // namespace refinery
