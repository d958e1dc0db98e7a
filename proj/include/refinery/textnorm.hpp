#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace refinery {

/// Lowercased tokens produced by the normalization pipeline.
using TokenSequence = std::vector<std::string>;

/// Lowercase, map punctuation (ASCII and common typographic code points) to
/// spaces, collapse whitespace, split. Articles are kept.
TokenSequence tokenize(std::string_view text);

/// tokenize() followed by removal of the articles {a, an, the}. This is the
/// token representation behind answer similarity scores.
TokenSequence normalize(std::string_view text);

std::string join_tokens(const TokenSequence& tokens);

/// Multiset-overlap F1 over normalize()d tokens.
/// Both sides empty -> 1.0; exactly one empty -> 0.0.
double token_f1(std::string_view pred, std::string_view gold);

/// F-measure over clipped n-gram multiset overlap of tokenize()d text
/// (articles kept). 0.0 when either side has no n-grams.
double rouge_n(std::string_view candidate, std::string_view reference, int n);

/// F-measure from longest-common-subsequence length over tokenize()d text.
double rouge_l(std::string_view candidate, std::string_view reference);

/// Arithmetic mean of rouge_n(..., 1), rouge_n(..., 2) and rouge_l.
double rouge_avg(std::string_view candidate, std::string_view reference);

/// Split on {. ! ?} followed by whitespace and an uppercase/digit start,
/// with a fixed abbreviation exception list (Fig., et al., e.g., ...).
/// Pieces are trimmed; empty pieces are dropped.
std::vector<std::string> split_sentences(std::string_view text);

/// Number of whitespace-delimited tokens.
std::size_t count_tokens(std::string_view text);

/// Longest prefix whose whitespace-token count fits the budget, cut at the
/// last sentence boundary that fits when one exists, otherwise at the
/// token boundary. Returns the input unchanged when it already fits.
std::string truncate_to_budget(std::string_view text, std::size_t max_tokens);

}  // namespace refinery
