#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out_file =
      fs::temp_directory_path() /
      ("refinery_cli_out_" + std::to_string(counter) + ".txt");
  const fs::path err_file =
      fs::temp_directory_path() /
      ("refinery_cli_err_" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string command = std::string(REFINERY_CLI_PATH) + " " + args +
                              " > " + out_file.string() + " 2> " +
                              err_file.string();
  const int status = std::system(command.c_str());
  CliResult result;
  result.exit_code = WEXITSTATUS(status);
  result.out = read_all(out_file);
  result.err = read_all(err_file);
  fs::remove(out_file);
  fs::remove(err_file);
  return result;
}

fs::path fixture(const char* name) {
  return fs::path(REFINERY_FIXTURE_DIR) / name;
}

fs::path fresh_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("validate exit codes") {
  CHECK(run_cli("validate --corpus " + fixture("tiny_valid.jsonl").string())
            .exit_code == 0);
  const CliResult broken =
      run_cli("validate --corpus " + fixture("tiny_invalid.jsonl").string());
  CHECK(broken.exit_code == 1);
  CHECK(broken.err.find("question") != std::string::npos);
  CHECK(run_cli("validate --corpus /no/such/file.jsonl").exit_code == 2);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run_cli("run --out /tmp/refinery_nowhere").exit_code == 2);
  CHECK(run_cli("bogus-subcommand").exit_code == 2);
  const fs::path dir = fresh_dir("refinery_cli_badspec");
  CHECK(run_cli("run --corpus " + fixture("tiny_valid.jsonl").string() +
                " --out " + dir.string() +
                " --summarizer teapot:foo --feedback mock")
            .exit_code == 2);
}

TEST_CASE("mock run produces deterministic traces and a manifest") {
  const fs::path dir_a = fresh_dir("refinery_cli_run_a");
  const fs::path dir_b = fresh_dir("refinery_cli_run_b");
  const std::string base = "run --mock --corpus " +
                           fixture("tiny_valid.jsonl").string() + " --seed 9";
  CHECK(run_cli(base + " --out " + dir_a.string()).exit_code == 0);
  CHECK(run_cli(base + " --out " + dir_b.string()).exit_code == 0);

  for (const char* name :
       {"glownet-2024.trace.jsonl", "tabqa-2024.trace.jsonl"}) {
    const std::string first = read_all(dir_a / name);
    const std::string second = read_all(dir_b / name);
    CHECK(!first.empty());
    CHECK(first == second);
  }
  CHECK(fs::exists(dir_a / "glownet-2024.summary.txt"));
  CHECK(fs::exists(dir_a / "run.json"));
}

TEST_CASE("manifest echoes the built-in defaults") {
  const fs::path dir = fresh_dir("refinery_cli_defaults");
  REQUIRE(run_cli("run --mock --corpus " +
                  fixture("tiny_valid.jsonl").string() + " --out " +
                  dir.string())
              .exit_code == 0);
  const json manifest = json::parse(read_all(dir / "run.json"));
  const json& config = manifest.at("config");
  CHECK(config.at("max_steps") == 8);
  CHECK(config.at("batch_size") == 4);
  CHECK(config.at("epsilon") == 0.5);
  CHECK(config.at("prompt_family") == "baseline_2");
  CHECK(config.at("sampling") == "without_replacement");
  CHECK(config.at("summarizer_params").at("num_beams") == 2);
  CHECK(config.at("summarizer_params").at("temperature") == 1.3);
  CHECK(config.at("summarizer_params").at("no_repeat_ngram") == 3);
  CHECK(config.at("summarizer_params").at("max_input_tokens") == 2048);
  CHECK(config.at("summarizer_params").at("max_new_tokens") == 200);
  CHECK(config.at("summarizer_params").at("min_new_tokens") == 100);
  CHECK(config.at("feedback_params").at("max_input_tokens") == 512);
  CHECK(config.at("feedback_params").at("max_new_tokens") == 100);
  CHECK(config.at("feedback_params").at("min_new_tokens") == 10);
  CHECK(manifest.at("documents").size() == 2);
  CHECK(manifest.at("engine_version").is_string());
}

TEST_CASE("config precedence: flag beats file beats default") {
  const fs::path dir = fresh_dir("refinery_cli_precedence");
  const fs::path config_path =
      fs::temp_directory_path() / "refinery_cli_config.json";
  {
    std::ofstream config_file(config_path);
    config_file << R"({"max_steps": 3, "epsilon": 0.25})";
  }
  const std::string base = "run --mock --corpus " +
                           fixture("tiny_valid.jsonl").string() +
                           " --config " + config_path.string();

  REQUIRE(run_cli(base + " --out " + dir.string()).exit_code == 0);
  json manifest = json::parse(read_all(dir / "run.json"));
  CHECK(manifest.at("config").at("max_steps") == 3);     // from file
  CHECK(manifest.at("config").at("epsilon") == 0.25);    // from file
  CHECK(manifest.at("config").at("batch_size") == 4);    // default

  const fs::path dir2 = fresh_dir("refinery_cli_precedence2");
  REQUIRE(run_cli(base + " --max-steps 2 --out " + dir2.string())
              .exit_code == 0);
  manifest = json::parse(read_all(dir2 / "run.json"));
  CHECK(manifest.at("config").at("max_steps") == 2);     // flag wins
  CHECK(manifest.at("config").at("epsilon") == 0.25);    // file still applies
  fs::remove(config_path);
}

TEST_CASE("eval writes a report with aggregates, rouge and curves") {
  const fs::path dir = fresh_dir("refinery_cli_eval_run");
  REQUIRE(run_cli("run --mock --corpus " +
                  fixture("tiny_valid.jsonl").string() + " --out " +
                  dir.string() + " --max-steps 3")
              .exit_code == 0);
  const CliResult eval = run_cli(
      "eval --run " + dir.string() + " --corpus " +
      fixture("tiny_valid.jsonl").string() + " --feedback mock --rouge --curve");
  CHECK(eval.exit_code == 0);
  const json report = json::parse(read_all(dir / "report.json"));
  CHECK(report.at("per_document").size() == 2);
  CHECK(report.at("aggregate").at("qa_consistency").is_number());
  CHECK(report.at("aggregate").at("rouge").is_number());
  CHECK(report.at("curves").size() == 2);
  double qa_sum = 0.0;
  double rouge_sum = 0.0;
  for (const auto& doc : report.at("per_document")) {
    CHECK(doc.at("qa_consistency").is_number());
    CHECK(doc.at("rouge").is_number());
    qa_sum += doc.at("qa_consistency").get<double>();
    rouge_sum += doc.at("rouge").get<double>();
  }
  // Aggregates equal the mean of the per-document values exactly.
  CHECK(report.at("aggregate").at("qa_consistency").get<double>() ==
        qa_sum / 2.0);
  CHECK(report.at("aggregate").at("rouge").get<double>() == rouge_sum / 2.0);
}

TEST_CASE("eval warns when rouge is requested without references") {
  const fs::path bare_corpus =
      fs::temp_directory_path() / "refinery_cli_bare.jsonl";
  {
    std::ofstream out(bare_corpus);
    out << R"({"id": "bare", "title": "t", "body": "Some body text here.", "reference_summary": null, "qa": [{"qid": "q1", "question": "Much?", "answer": "yes", "level": null, "source": "human"}]})"
        << '\n';
  }
  const fs::path dir = fresh_dir("refinery_cli_eval_bare");
  REQUIRE(run_cli("run --mock --corpus " + bare_corpus.string() + " --out " +
                  dir.string() + " --max-steps 1")
              .exit_code == 0);
  const CliResult eval =
      run_cli("eval --run " + dir.string() + " --corpus " +
              bare_corpus.string() + " --feedback mock --rouge");
  CHECK(eval.exit_code == 0);
  CHECK(eval.err.find("no reference summary") != std::string::npos);
  const json report = json::parse(read_all(dir / "report.json"));
  CHECK(report.at("per_document")[0].at("rouge").is_null());
  fs::remove(bare_corpus);
}

TEST_CASE("compare emits one CSV row per strategy") {
  const fs::path dir_a = fresh_dir("refinery_cli_cmp_a");
  const fs::path dir_b = fresh_dir("refinery_cli_cmp_b");
  const std::string base = "run --mock --corpus " +
                           fixture("tiny_valid.jsonl").string() +
                           " --max-steps 2";
  REQUIRE(run_cli(base + " --out " + dir_a.string()).exit_code == 0);
  REQUIRE(run_cli(base + " --out " + dir_b.string()).exit_code == 0);

  const CliResult both = run_cli(
      "compare --strategy isqa=" + dir_a.string() +
      " --strategy generic=" + dir_b.string() + " --corpus " +
      fixture("tiny_valid.jsonl").string() + " --feedback mock");
  CHECK(both.exit_code == 0);
  CHECK(both.out.rfind("strategy,qa_consistency,rouge,n_docs\n", 0) == 0);
  CHECK(std::count(both.out.begin(), both.out.end(), '\n') == 3);

  const CliResult single = run_cli(
      "compare --strategy only=" + dir_a.string() + " --corpus " +
      fixture("tiny_valid.jsonl").string() + " --feedback mock");
  CHECK(single.exit_code == 0);
  CHECK(std::count(single.out.begin(), single.out.end(), '\n') == 2);
}

TEST_CASE("compare rejects mismatched document sets") {
  const fs::path dir_a = fresh_dir("refinery_cli_mismatch_a");
  const fs::path dir_b = fresh_dir("refinery_cli_mismatch_b");
  const std::string base = "run --mock --corpus " +
                           fixture("tiny_valid.jsonl").string() +
                           " --max-steps 1";
  REQUIRE(run_cli(base + " --out " + dir_a.string()).exit_code == 0);
  REQUIRE(run_cli(base + " --out " + dir_b.string()).exit_code == 0);
  fs::remove(dir_b / "tabqa-2024.trace.jsonl");

  const CliResult result = run_cli(
      "compare --strategy full=" + dir_a.string() +
      " --strategy short=" + dir_b.string() + " --corpus " +
      fixture("tiny_valid.jsonl").string() + " --feedback mock");
  CHECK(result.exit_code == 1);
  CHECK(result.err.find("tabqa-2024") != std::string::npos);
}

TEST_CASE("demo runs fast, deterministically, and shows a pool move") {
  const auto started = std::chrono::steady_clock::now();
  const CliResult first = run_cli("demo");
  const auto elapsed = std::chrono::duration_cast<std::chrono::seconds>(
      std::chrono::steady_clock::now() - started);
  CHECK(first.exit_code == 0);
  CHECK(elapsed.count() < 5);
  CHECK(first.out.find("(moved to ") != std::string::npos);
  CHECK(first.out.find("final summary:") != std::string::npos);

  const CliResult second = run_cli("demo");
  CHECK(second.exit_code == 0);
  CHECK(first.out == second.out);
}
