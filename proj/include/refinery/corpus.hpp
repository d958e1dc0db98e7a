#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace refinery {

enum class QaLevel { beginner, student, expert };
enum class QaSource { human, model_generated };

std::string_view to_string(QaLevel level);
std::string_view to_string(QaSource source);
std::optional<QaLevel> qa_level_from_string(std::string_view name);
std::optional<QaSource> qa_source_from_string(std::string_view name);

struct QAPair {
  std::string qid;
  std::string question;
  std::string gold_answer;
  std::optional<QaLevel> level;
  QaSource source = QaSource::human;

  bool operator==(const QAPair&) const = default;
};

struct Document {
  std::string id;
  std::string title;
  std::string body;
  std::optional<std::string> reference_summary;
  std::vector<QAPair> qa_pairs;

  const QAPair* find_qa(std::string_view qid) const;

  bool operator==(const Document&) const = default;
};

struct Corpus {
  std::vector<Document> documents;
  std::string provenance;

  const Document* find(std::string_view id) const;
};

struct CorpusStats {
  std::size_t documents = 0;
  std::size_t qa_pairs = 0;
  std::size_t beginner = 0;
  std::size_t student = 0;
  std::size_t expert = 0;
  std::size_t unleveled = 0;

  bool operator==(const CorpusStats&) const = default;
};

struct LoadReport {
  Corpus corpus;
  std::size_t skipped = 0;              // invalid records dropped (lenient mode)
  std::vector<std::string> warnings;    // unknown fields, skipped records
};

/// Every invariant violation in the document, not just the first.
/// Violations are data, not failures; an empty list means valid.
std::vector<std::string> validate_document(const Document& doc);

/// Load a JSONL corpus (one document object per line). A line that is not
/// valid JSON throws CorpusError in both modes. A record violating the
/// schema throws in strict mode (naming the record and field) and is
/// skipped + counted otherwise.
LoadReport load_corpus(const std::filesystem::path& path, bool strict);

/// Same contract over an already-open stream (embedded fixtures, tests).
LoadReport load_corpus_stream(std::istream& in, std::string_view provenance,
                              bool strict);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

std::string document_to_json_line(const Document& doc);

CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace refinery
