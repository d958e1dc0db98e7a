#include "refinery/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "refinery/errors.hpp"

namespace refinery {
namespace {

using nlohmann::json;

const std::set<std::string>& known_document_keys() {
  static const std::set<std::string> keys = {"id", "title", "body",
                                             "reference_summary", "qa"};
  return keys;
}

const std::set<std::string>& known_qa_keys() {
  static const std::set<std::string> keys = {"qid", "question", "answer",
                                             "level", "source"};
  return keys;
}

std::string get_string(const json& obj, const char* key,
                       std::vector<std::string>& violations,
                       const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) {
    violations.push_back(where + "." + key + ": expected a string");
    return {};
  }
  return it->get<std::string>();
}

Document parse_document(const json& obj, std::size_t line_no,
                        std::vector<std::string>& violations,
                        std::vector<std::string>& warnings) {
  Document doc;
  const std::string where = "line " + std::to_string(line_no);
  if (!obj.is_object()) {
    violations.push_back(where + ": expected a JSON object");
    return doc;
  }
  for (const auto& [key, value] : obj.items()) {
    if (known_document_keys().count(key) == 0) {
      warnings.push_back(where + ": ignoring unknown field \"" + key + "\"");
    }
  }
  doc.id = get_string(obj, "id", violations, where);
  doc.title = get_string(obj, "title", violations, where);
  doc.body = get_string(obj, "body", violations, where);
  if (auto it = obj.find("reference_summary");
      it != obj.end() && !it->is_null()) {
    if (it->is_string()) {
      doc.reference_summary = it->get<std::string>();
    } else {
      violations.push_back(where + ".reference_summary: expected a string");
    }
  }
  if (auto it = obj.find("qa"); it != obj.end() && !it->is_null()) {
    if (!it->is_array()) {
      violations.push_back(where + ".qa: expected an array");
    } else {
      std::size_t idx = 0;
      for (const auto& entry : *it) {
        const std::string qa_where =
            where + ".qa[" + std::to_string(idx) + "]";
        if (!entry.is_object()) {
          violations.push_back(qa_where + ": expected an object");
          ++idx;
          continue;
        }
        for (const auto& [key, value] : entry.items()) {
          if (known_qa_keys().count(key) == 0) {
            warnings.push_back(qa_where + ": ignoring unknown field \"" +
                               key + "\"");
          }
        }
        QAPair qa;
        qa.qid = get_string(entry, "qid", violations, qa_where);
        qa.question = get_string(entry, "question", violations, qa_where);
        qa.gold_answer = get_string(entry, "answer", violations, qa_where);
        if (auto lv = entry.find("level"); lv != entry.end() && !lv->is_null()) {
          if (!lv->is_string()) {
            violations.push_back(qa_where + ".level: expected string or null");
          } else if (auto parsed = qa_level_from_string(lv->get<std::string>())) {
            qa.level = *parsed;
          } else {
            violations.push_back(qa_where + ".level: unknown level \"" +
                                 lv->get<std::string>() + "\"");
          }
        }
        if (auto sv = entry.find("source"); sv != entry.end() && !sv->is_null()) {
          if (!sv->is_string()) {
            violations.push_back(qa_where + ".source: expected a string");
          } else if (auto parsed = qa_source_from_string(sv->get<std::string>())) {
            qa.source = *parsed;
          } else {
            violations.push_back(qa_where + ".source: unknown source \"" +
                                 sv->get<std::string>() + "\"");
          }
        }
        doc.qa_pairs.push_back(std::move(qa));
        ++idx;
      }
    }
  }
  return doc;
}

json document_to_json(const Document& doc) {
  json qa = json::array();
  for (const auto& pair : doc.qa_pairs) {
    json entry;
    entry["qid"] = pair.qid;
    entry["question"] = pair.question;
    entry["answer"] = pair.gold_answer;
    entry["level"] = pair.level ? json(std::string(to_string(*pair.level)))
                                : json(nullptr);
    entry["source"] = std::string(to_string(pair.source));
    qa.push_back(std::move(entry));
  }
  json obj;
  obj["id"] = doc.id;
  obj["title"] = doc.title;
  obj["body"] = doc.body;
  obj["reference_summary"] =
      doc.reference_summary ? json(*doc.reference_summary) : json(nullptr);
  obj["qa"] = std::move(qa);
  return obj;
}

}  // namespace

std::string_view to_string(QaLevel level) {
  switch (level) {
    case QaLevel::beginner: return "beginner";
    case QaLevel::student: return "student";
    case QaLevel::expert: return "expert";
  }
  return "beginner";
}

std::string_view to_string(QaSource source) {
  return source == QaSource::human ? "human" : "model_generated";
}

std::optional<QaLevel> qa_level_from_string(std::string_view name) {
  if (name == "beginner") return QaLevel::beginner;
  if (name == "student") return QaLevel::student;
  if (name == "expert") return QaLevel::expert;
  return std::nullopt;
}

std::optional<QaSource> qa_source_from_string(std::string_view name) {
  if (name == "human") return QaSource::human;
  if (name == "model_generated") return QaSource::model_generated;
  return std::nullopt;
}

const QAPair* Document::find_qa(std::string_view qid) const {
  for (const auto& pair : qa_pairs) {
    if (pair.qid == qid) return &pair;
  }
  return nullptr;
}

const Document* Corpus::find(std::string_view id) const {
  for (const auto& doc : documents) {
    if (doc.id == id) return &doc;
  }
  return nullptr;
}

std::vector<std::string> validate_document(const Document& doc) {
  std::vector<std::string> violations;
  if (doc.id.empty()) violations.push_back("id: must be non-empty");
  if (doc.body.empty()) violations.push_back("body: must be non-empty");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc.qa_pairs.size(); ++i) {
    const auto& qa = doc.qa_pairs[i];
    const std::string where = "qa[" + std::to_string(i) + "]";
    if (qa.qid.empty()) violations.push_back(where + ".qid: must be non-empty");
    if (qa.question.empty()) {
      violations.push_back(where + ".question: must be non-empty");
    }
    if (qa.gold_answer.empty()) {
      violations.push_back(where + ".answer: must be non-empty");
    }
    if (!qa.qid.empty() && !seen.insert(qa.qid).second) {
      violations.push_back(where + ".qid: duplicate qid \"" + qa.qid + "\"");
    }
  }
  return violations;
}

LoadReport load_corpus(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) {
    throw CorpusError("cannot read corpus file: " + path.string());
  }
  return load_corpus_stream(in, path.stem().string(), strict);
}

LoadReport load_corpus_stream(std::istream& in, std::string_view provenance,
                              bool strict) {
  LoadReport report;
  report.corpus.provenance = std::string(provenance);
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw CorpusError(std::string(provenance) + ":" +
                        std::to_string(line_no) +
                        ": malformed JSON: " + e.what());
    }
    std::vector<std::string> violations;
    Document doc = parse_document(obj, line_no, violations, report.warnings);
    for (const auto& v : validate_document(doc)) {
      violations.push_back("line " + std::to_string(line_no) + ": " + v);
    }
    if (violations.empty() && !seen_ids.insert(doc.id).second) {
      violations.push_back("line " + std::to_string(line_no) +
                           ": duplicate document id \"" + doc.id + "\"");
    }
    if (!violations.empty()) {
      std::string label = doc.id.empty() ? "<no id>" : doc.id;
      if (strict) {
        std::ostringstream msg;
        msg << provenance << ": record " << label << " invalid:";
        for (const auto& v : violations) msg << "\n  " << v;
        throw CorpusError(msg.str());
      }
      ++report.skipped;
      report.warnings.push_back("skipped record " + label + " (" +
                                violations.front() + ")");
      continue;
    }
    report.corpus.documents.push_back(std::move(doc));
  }
  return report;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw CorpusError("cannot write corpus file: " + path.string());
  }
  for (const auto& doc : corpus.documents) {
    out << document_to_json_line(doc) << '\n';
  }
}

std::string document_to_json_line(const Document& doc) {
  return document_to_json(doc).dump();
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  stats.documents = corpus.documents.size();
  for (const auto& doc : corpus.documents) {
    stats.qa_pairs += doc.qa_pairs.size();
    for (const auto& qa : doc.qa_pairs) {
      if (!qa.level) {
        ++stats.unleveled;
      } else if (*qa.level == QaLevel::beginner) {
        ++stats.beginner;
      } else if (*qa.level == QaLevel::student) {
        ++stats.student;
      } else {
        ++stats.expert;
      }
    }
  }
  return stats;
}

}  // namespace refinery
