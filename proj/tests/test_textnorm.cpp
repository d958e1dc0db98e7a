#include "refinery/textnorm.hpp"

#include <random>

#include "doctest.h"

#include "reference_impls.hpp"

using namespace refinery;

namespace {

std::string random_text(std::mt19937& rng, bool with_punct) {
  static const std::vector<std::string> words = {
      "a",      "an",     "the",    "cat",     "sat",    "apple",
      "day",    "graph",  "model",  "corpus",  "tokens", "Fig",
      "eval",   "strong", "result", "baseline"};
  static const std::vector<std::string> punct = {".", ",",  "!", "?",
                                                 ";", "—", "’", "-"};
  std::string out;
  const std::size_t n = rng() % 12;
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.empty()) out += rng() % 4 == 0 ? "  " : " ";
    out += words[rng() % words.size()];
    if (with_punct && rng() % 3 == 0) out += punct[rng() % punct.size()];
  }
  return out;
}

}  // namespace

TEST_CASE("normalize applies the four rules") {
  CHECK(normalize("The cat sat.") == TokenSequence{"cat", "sat"});
  CHECK(normalize("").empty());
  CHECK(normalize("An  apple—a day") == TokenSequence{"apple", "day"});
  CHECK(tokenize("The cat sat.") == TokenSequence{"the", "cat", "sat"});
}

TEST_CASE("normalize is idempotent on its rejoined output") {
  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    const std::string text = random_text(rng, true);
    const TokenSequence once = normalize(text);
    CHECK(normalize(join_tokens(once)) == once);
  }
}

TEST_CASE("token_f1 hand cases") {
  CHECK(token_f1("The cat sat.", "cat sat down") == doctest::Approx(0.8));
  CHECK(token_f1("alpha", "beta") == 0.0);
  CHECK(token_f1("", "") == 1.0);
  CHECK(token_f1("...", "?!") == 1.0);  // both normalize to empty
  CHECK(token_f1("alpha", "") == 0.0);
  CHECK(token_f1("", "alpha") == 0.0);
}

TEST_CASE("token_f1 identity, symmetry and range") {
  std::mt19937 rng(12);
  for (int i = 0; i < 200; ++i) {
    const std::string a = random_text(rng, true);
    const std::string b = random_text(rng, true);
    const double ab = token_f1(a, b);
    CHECK(ab == token_f1(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    if (!normalize(a).empty()) CHECK(token_f1(a, a) == 1.0);
  }
}

TEST_CASE("token_f1 clips repeated tokens") {
  // pred {a:2, b:1}, gold {a:1, b:2} -> overlap 2 of sizes 3 and 3.
  CHECK(token_f1("x x y", "x y y") == doctest::Approx(2.0 * 2.0 / 6.0));
}

TEST_CASE("rouge_n hand cases") {
  CHECK(rouge_n("a b c", "a b d", 1) == doctest::Approx(2.0 / 3.0));
  CHECK(rouge_n("a b c", "a b c", 2) == 1.0);
  CHECK(rouge_n("a", "a b", 2) == 0.0);
  CHECK(rouge_n("", "a b", 1) == 0.0);
  // Articles are kept by the rouge tokenizer.
  CHECK(rouge_n("the cat", "cat", 1) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("rouge_l hand cases") {
  CHECK(rouge_l("a b c d", "a c b d") == doctest::Approx(0.75));
  CHECK(rouge_l("a b", "a b") == 1.0);
  CHECK(rouge_l("a", "b") == 0.0);
}

TEST_CASE("rouge_avg equals the mean of its components") {
  std::mt19937 rng(13);
  for (int i = 0; i < 100; ++i) {
    const std::string a = random_text(rng, false);
    const std::string b = random_text(rng, false);
    const double mean =
        (rouge_n(a, b, 1) + rouge_n(a, b, 2) + rouge_l(a, b)) / 3.0;
    CHECK(rouge_avg(a, b) == mean);
  }
  CHECK(rouge_avg("same text here", "same text here") == 1.0);
  CHECK(rouge_avg("alpha beta", "gamma delta") == 0.0);
}

TEST_CASE("rouge_avg oracle-derived value") {
  // rouge_1 = 2/3, rouge_2 = 1/2 (bigram "a b" is shared), rouge_l = 2/3.
  const double expected = (2.0 / 3.0 + 0.5 + 2.0 / 3.0) / 3.0;
  CHECK(rouge_avg("a b c", "a b d") == doctest::Approx(expected));
  CHECK(rouge_avg("a b c", "a b d") ==
        doctest::Approx(testref::ref_rouge_avg("a b c", "a b d")));
  CHECK(expected == doctest::Approx(11.0 / 18.0));
}

TEST_CASE("metrics agree with the brute-force reference") {
  std::mt19937 rng(14);
  for (int i = 0; i < 150; ++i) {
    const std::string a = random_text(rng, true);
    const std::string b = random_text(rng, true);
    CHECK(token_f1(a, b) == testref::ref_token_f1(a, b));
    CHECK(rouge_n(a, b, 1) ==
          doctest::Approx(testref::ref_rouge_n(a, b, 1)).epsilon(1e-12));
    CHECK(rouge_n(a, b, 2) ==
          doctest::Approx(testref::ref_rouge_n(a, b, 2)).epsilon(1e-12));
    CHECK(rouge_l(a, b) ==
          doctest::Approx(testref::ref_rouge_l(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("split_sentences") {
  CHECK(split_sentences("A. B? C!") ==
        std::vector<std::string>{"A.", "B?", "C!"});
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("Fig. 2 shows X. Done.") ==
        std::vector<std::string>{"Fig. 2 shows X.", "Done."});
  CHECK(split_sentences("et al. 2020 agree. Next point.") ==
        std::vector<std::string>{"et al. 2020 agree.", "Next point."});
  CHECK(split_sentences("no terminal punctuation") ==
        std::vector<std::string>{"no terminal punctuation"});
  // Lowercase continuation does not split.
  CHECK(split_sentences("approx. values are fine. done") ==
        std::vector<std::string>{"approx. values are fine. done"});
}

TEST_CASE("split_sentences preserves non-whitespace characters in order") {
  std::mt19937 rng(15);
  for (int i = 0; i < 150; ++i) {
    const std::string text = random_text(rng, true);
    std::string joined;
    for (const auto& sentence : split_sentences(text)) {
      if (!joined.empty()) joined += ' ';
      joined += sentence;
      CHECK(!sentence.empty());
    }
    std::string expect;
    std::string got;
    for (char c : text) {
      if (!std::isspace(static_cast<unsigned char>(c))) expect += c;
    }
    for (char c : joined) {
      if (!std::isspace(static_cast<unsigned char>(c))) got += c;
    }
    CHECK(got == expect);
  }
}

TEST_CASE("truncate_to_budget") {
  CHECK(truncate_to_budget("one two three", 2048) == "one two three");
  CHECK(truncate_to_budget("one two three four five", 3) == "one two three");

  // Prefers the sentence boundary that fits.
  const std::string text = "First part here. Second bit follows. Third one.";
  const std::string cut = truncate_to_budget(text, 4);
  CHECK(cut == "First part here.");

  std::string long_text;
  for (int i = 0; i < 3000; ++i) {
    long_text += "tok" + std::to_string(i);
    long_text += i % 9 == 8 ? ". " : " ";
  }
  const std::string prefix = truncate_to_budget(long_text, 2048);
  CHECK(count_tokens(prefix) <= 2048);
  CHECK(long_text.substr(0, prefix.size()) == prefix);
}

TEST_CASE("truncate_to_budget output is a bounded prefix") {
  std::mt19937 rng(16);
  for (int i = 0; i < 150; ++i) {
    const std::string text = random_text(rng, true);
    const std::size_t budget = 1 + rng() % 8;
    const std::string out = truncate_to_budget(text, budget);
    CHECK(count_tokens(out) <= budget);
    CHECK(text.substr(0, out.size()) == out);
  }
}
