#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "json.hpp"
#include "memrouter/config.hpp"
#include "memrouter/corpus.hpp"
#include "memrouter/digest.hpp"
#include "memrouter/error.hpp"
#include "util.hpp"

using namespace memrouter;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" MEMROUTER_CLI "' " + args +
                          " > out.txt 2> err.txt";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

json read_json(const fs::path& p) { return json::parse(testutil::read_file(p)); }

std::vector<json> answers_without_latency(const fs::path& p) {
  std::vector<json> out;
  std::istringstream in(testutil::read_file(p));
  for (std::string line; std::getline(in, line);) {
    auto j = json::parse(line);
    j.erase("latency_ms");
    out.push_back(std::move(j));
  }
  return out;
}

fs::path prepared_workspace(const std::string& name) {
  auto dir = testutil::scratch_dir(name);
  REQUIRE(run(dir, "synth --kind planted --conversations 10 --out corpus.jsonl --labels labels.jsonl") == 0);
  testutil::write_file(dir / "run.conf",
                       "# cli test\n"
                       "paths.corpus = corpus.jsonl\n"
                       "paths.labels = labels.jsonl\n"
                       "eval.resamples = 1000\n");
  return dir;
}

}  // namespace

TEST_CASE("config parsing") {
  RunConfig d;
  CHECK(d.get("retrieval.k") == "60");
  CHECK(d.get_double("retrieval.lambda") == 0.7);
  CHECK(d.get_int("qa.max_inflight") == 4);

  auto c = RunConfig::parse("# comment\n\n  retrieval.k = 20  \nsplit=1:1:3\n");
  CHECK(c.get_int("retrieval.k") == 20);
  CHECK(c.get("split") == "1:1:3");
  CHECK(c.get("router.threshold") == "0.5");
  CHECK(c.hash() != d.hash());
  CHECK(c.hash() == RunConfig::parse("split = 1:1:3\nretrieval.k = 20\n").hash());
  CHECK(d.hash().size() == 64);

  CHECK_THROWS_AS(RunConfig::parse("retrieval.kk = 3\n"), ParseError);
  CHECK_THROWS_AS(RunConfig::parse("no equals sign\n"), ParseError);
  CHECK_THROWS_AS(d.set("nope", "1"), InvariantError);
  c.set("retrieval.lambda", "abc");
  CHECK_THROWS_AS(c.get_double("retrieval.lambda"), ParseError);
  c.set("retrieval.k", "-3");
  CHECK_THROWS_AS(c.get_u64("retrieval.k"), ParseError);

  auto dir = testutil::scratch_dir("config");
  testutil::write_file(dir / "a.conf", "paths.corpus = data/c.jsonl\npaths.labels = /abs/l.jsonl\n");
  auto loaded = RunConfig::load((dir / "a.conf").string());
  CHECK(loaded.get("paths.corpus") == (dir / "data/c.jsonl").string());
  CHECK(loaded.get("paths.labels") == "/abs/l.jsonl");
  CHECK_THROWS_AS(loaded.require_inputs({"paths.corpus"}), InvariantError);
  CHECK_THROWS_AS(RunConfig().require_inputs({"paths.corpus"}), InvariantError);
  fs::remove_all(dir);
}

TEST_CASE("manifest records config, seeds and output digests") {
  auto dir = testutil::scratch_dir("manifest");
  const auto file = (dir / "x.bin").string();
  testutil::write_file(file, "payload");
  RunConfig c;
  c.set("train.seed", "99");
  auto m = Manifest::for_run("train", c);
  m.add_output(file);
  CHECK(m.config_hash == c.hash());
  CHECK(m.seeds.at("train.seed") == 99);
  CHECK(m.outputs.at(file) == to_hex(sha256(std::string_view("payload"))));
  m.write((dir / "m.json").string());
  auto j = read_json(dir / "m.json");
  CHECK(j["command"] == "train");
  CHECK(j["config"]["train.seed"] == "99");
  CHECK(j["outputs"][file] == m.outputs.at(file));
  fs::remove_all(dir);
}

TEST_CASE("synth writes a loadable corpus and non-test labels") {
  auto dir = prepared_workspace("synth");
  const auto corpus = load_corpus((dir / "corpus.jsonl").string());
  CHECK(corpus.size() == 10);
  const auto labels = load_labels((dir / "labels.jsonl").string(), corpus);
  RunConfig c;
  const auto split = apply_split(corpus, c.split(corpus));
  for (const auto& [key, rec] : labels) CHECK_FALSE(split.is_test(rec.conversation_id));
  CHECK(labels.size() > 0);

  auto again = testutil::scratch_dir("synth2");
  REQUIRE(run(again, "synth --kind planted --conversations 10 --out corpus.jsonl") == 0);
  CHECK(testutil::read_file(again / "corpus.jsonl") == testutil::read_file(dir / "corpus.jsonl"));
  CHECK(run(again, "synth --kind nonsense --out x.jsonl") != 0);
  fs::remove_all(dir);
  fs::remove_all(again);
}

TEST_CASE("train, route, ingest, eval, sweep round trip") {
  auto dir = prepared_workspace("pipeline");
  REQUIRE(run(dir, "--config run.conf train --epochs 3") == 0);
  const auto ckpt = testutil::read_file(dir / "router.mrrtr");
  CHECK_FALSE(ckpt.empty());
  auto report = read_json(dir / "reports/train_report.json");
  CHECK(report["epochs"] == 3);
  CHECK(report["validation_accuracy"].size() == 4);
  auto manifest = read_json(dir / "reports/train.manifest.json");
  CHECK(manifest["outputs"]["router.mrrtr"] ==
        to_hex(sha256(std::string_view(ckpt))));

  SUBCASE("retraining is bitwise reproducible and reuses the cache") {
    REQUIRE(run(dir, "--config run.conf train --epochs 3") == 0);
    CHECK(testutil::read_file(dir / "router.mrrtr") == ckpt);
    CHECK(testutil::read_file(dir / "err.txt").find("0 embedded") != std::string::npos);
  }

  SUBCASE("route prints one decision per turn") {
    REQUIRE(run(dir, "--config run.conf route --conversation conv-003") == 0);
    const auto corpus = load_corpus((dir / "corpus.jsonl").string());
    std::size_t lines = 0;
    std::istringstream in(testutil::read_file(dir / "reports/route.jsonl"));
    for (std::string line; std::getline(in, line);) {
      auto j = json::parse(line);
      CHECK(j["conversation_id"] == "conv-003");
      CHECK((j["op"] == "ADD" || j["op"] == "NOOP"));
      ++lines;
    }
    CHECK(lines == corpus[3].turn_count());
  }

  SUBCASE("ingest persists stores without generation calls") {
    REQUIRE(run(dir, "--config run.conf ingest --policy router --budget 0.45") == 0);
    CHECK(testutil::read_file(dir / "out.txt").find("generation calls 0") != std::string::npos);
    std::size_t stores = 0;
    for (const auto& e : fs::directory_iterator(dir / "store")) {
      stores += e.path().extension() == ".jsonl";
    }
    CHECK(stores == 8);
  }

  SUBCASE("eval reports read-path calls only and is reproducible") {
    REQUIRE(run(dir, "--config run.conf eval --policy router --budget 0.45") == 0);
    auto r = read_json(dir / "reports/eval_report.json");
    CHECK(r["generation_calls"]["write_path"] == 0);
    CHECK(r["generation_calls"]["read_path"] == r["questions"]);
    CHECK(r["questions"].get<int>() > 0);
    const auto answers = answers_without_latency(dir / "reports/eval_answers.jsonl");
    REQUIRE(run(dir, "--config run.conf eval --policy router --budget 0.45") == 0);
    auto again = read_json(dir / "reports/eval_report.json");
    CHECK(again["overall"] == r["overall"]);
    CHECK(answers_without_latency(dir / "reports/eval_answers.jsonl") == answers);
    CHECK(testutil::read_file(dir / "out.txt").find("router") != std::string::npos);
  }

  SUBCASE("sweep store fraction is monotone in the threshold") {
    REQUIRE(run(dir, "--config run.conf sweep --policy router --thresholds 0.2:0.8:0.3") == 0);
    auto rows = read_json(dir / "reports/sweep.json");
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i]["store_fraction"].get<double>() <= rows[i - 1]["store_fraction"].get<double>());
    }
  }

  SUBCASE("policies and grid") {
    REQUIRE(run(dir, "--config run.conf --set paths.mlp_checkpoint=mlp.mrrtr train --mlp-only --epochs 2") == 0);
    REQUIRE(run(dir, "--config run.conf policies --budget 0.45") == 0);
    auto rows = read_json(dir / "reports/policies.json");
    CHECK(rows.size() == 6);
    REQUIRE(run(dir, "--config run.conf grid --budget 0.45") == 0);
    auto grid = read_json(dir / "reports/grid.json");
    CHECK(grid["cells"].size() == 20);
    CHECK(grid["policy"].size() == 4);
    CHECK(grid["separate"].size() == 1);
  }

  fs::remove_all(dir);
}

TEST_CASE("failures exit non-zero and leave a partial marker") {
  auto dir = testutil::scratch_dir("fail");
  testutil::write_file(dir / "run.conf", "paths.corpus = missing.jsonl\n");
  CHECK(run(dir, "--config run.conf eval --policy random --budget 0.5") == 1);
  CHECK(fs::exists(dir / "reports/eval.partial"));
  CHECK_FALSE(fs::exists(dir / "reports/eval.manifest.json"));
  CHECK(testutil::read_file(dir / "err.txt").find("missing.jsonl") != std::string::npos);

  testutil::write_file(dir / "bad.conf", "retrieval.kay = 3\n");
  CHECK(run(dir, "--config bad.conf eval --policy random") != 0);
  CHECK(run(dir, "--set retrieval.k eval --policy random") != 0);
  CHECK(run(dir, "") != 0);
  fs::remove_all(dir);
}
