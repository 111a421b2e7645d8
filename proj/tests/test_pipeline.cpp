#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <newsrank/pipeline.hpp>

using namespace newsrank;

namespace {

std::string fixture(const char* name) { return std::string(FIXTURE_DIR "/") + name; }

PipelineConfig fixture_config(const std::string& scratch_name) {
  auto scratch = std::filesystem::temp_directory_path() / "newsrank_pipe" / scratch_name;
  std::filesystem::remove_all(scratch);
  std::filesystem::create_directories(scratch);
  PipelineConfig cfg;
  cfg.paths.questions = fixture("questions.jsonl");
  cfg.paths.articles = fixture("articles.jsonl");
  cfg.paths.forecasts = fixture("forecasts.jsonl");
  cfg.paths.out = (scratch / "out").string();
  cfg.paths.cache = (scratch / "cache").string();
  cfg.backend.seed = 42;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("defaults match the published configuration") {
  PipelineConfig cfg;
  CHECK(cfg.retrieval.K == 50);
  CHECK(cfg.retrieval.k1 == 1.2);
  CHECK(cfg.retrieval.b == 0.75);
  CHECK(cfg.rerank.G == 5);
  CHECK(cfg.rerank.l == 5);
  CHECK(cfg.rerank.N == 10);
  CHECK(cfg.rerank.B == 20);
  CHECK(cfg.rerank.epsilon == 0.05);
  CHECK(cfg.rerank.theta == 0.0);
  CHECK(cfg.summarize.min_tokens == 64);
  CHECK(cfg.summarize.max_output_tokens == 512);
  CHECK(cfg.targets.R == 20);
  CHECK(cfg.targets.lambda == 0.1);
  CHECK(cfg.split.cutoff == "2021-07-01");
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config validation names the offending field") {
  PipelineConfig cfg;
  SECTION("K below N") {
    cfg.retrieval.K = 5;
    cfg.rerank.N = 10;
    CHECK_THROWS_WITH(cfg.validate(), "invalid config field retrieval.K: must be >= rerank.N");
  }
  SECTION("epsilon bounds") {
    cfg.rerank.epsilon = 1.0;
    CHECK_THROWS_WITH(cfg.validate(), "invalid config field rerank.epsilon: must be in (0, 1)");
  }
  SECTION("inverse convention") {
    cfg.targets.inverse = "midpoint";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SECTION("backend kind") {
    cfg.backend.kind = "imaginary";
    CHECK_THROWS_WITH(cfg.validate(), "invalid config field backend.kind: expected mock or live");
  }
  SECTION("cutoff must parse") {
    cfg.split.cutoff = "mid 2021";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_CASE("fingerprint tracks every scoring knob") {
  PipelineConfig a, b;
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.fingerprint().size() == 16);
  b.retrieval.K = 51;
  CHECK(a.fingerprint() != b.fingerprint());
  b = a;
  b.rerank.theta = 0.25;
  CHECK(a.fingerprint() != b.fingerprint());
  b = a;
  b.backend.seed = 1;
  CHECK(a.fingerprint() != b.fingerprint());
  // Paths are deliberately not part of it: the same run in a different
  // directory is the same run.
  b = a;
  b.paths.out = "elsewhere";
  CHECK(a.fingerprint() == b.fingerprint());

  SECTION("the descriptor mirrors the constructed backend") {
    PipelineConfig cfg = fixture_config("descriptor");
    auto backend = cfg.make_backend();
    CHECK(backend->backend_id() == cfg.backend_descriptor());
  }
}

TEST_CASE("ingest writes the canonical corpus and a validation report") {
  PipelineConfig cfg = fixture_config("ingest");
  LoadResult res = run_ingest(cfg);
  CHECK(res.questions.size() == 12);
  CHECK(res.articles.size() == 60);

  ArtifactPaths ap(cfg);
  REQUIRE(std::filesystem::exists(ap.questions()));
  REQUIRE(std::filesystem::exists(ap.articles()));
  REQUIRE(std::filesystem::exists(ap.validation()));

  json validation = json::parse(slurp(ap.validation()));
  CHECK(validation["fingerprint"] == cfg.fingerprint());
  CHECK(validation["counts"]["tf"] == 6);
  CHECK(validation["counts"]["mcq"] == 3);
  CHECK(validation["counts"]["num"] == 3);
  CHECK(validation["counts"]["total"] == 12);
  CHECK(validation["split"]["cutoff"] == "2021-07-01");
  CHECK(validation["split"]["train"]["tf"] == 4);
  CHECK(validation["split"]["train"]["mcq"] == 2);
  CHECK(validation["split"]["train"]["num"] == 3);
  CHECK(validation["split"]["test"]["tf"] == 2);
  CHECK(validation["violations"].empty());
  // q12 has no crowd series anywhere; that is a notice, not a reject.
  CHECK(validation["load_report"]["rejects"].empty());
  REQUIRE(validation["load_report"]["flags"].size() == 1);

  SECTION("canonical artifacts start with a fingerprint header") {
    std::ifstream in(ap.questions());
    std::string first;
    std::getline(in, first);
    json meta = json::parse(first);
    CHECK(meta["_meta"]["fingerprint"] == cfg.fingerprint());
  }
  SECTION("the canonical corpus reloads cleanly") {
    LoadResult back = load_canonical(ap);
    CHECK(back.questions.size() == 12);
    CHECK(back.articles.size() == 60);
    CHECK(back.questions.find("q01")->crowd_series.size() == 3);
  }
}

TEST_CASE("stages refuse to run before their inputs exist") {
  PipelineConfig cfg = fixture_config("stage_order");
  CHECK_THROWS_WITH(run_retrieve(cfg), "requires: ingest");
  run_ingest(cfg);
  CHECK_THROWS_WITH(run_retrieve(cfg), "requires: index");
  run_index(cfg);
  CHECK_THROWS_WITH(run_curve(cfg), "requires: retrieve");
  run_retrieve(cfg);
  CHECK_THROWS_WITH(run_rerank(cfg), "requires: curve");
  run_curve(cfg);
  CHECK_THROWS_WITH(run_summarize(cfg), "requires: rerank");
  run_rerank(cfg);
  CHECK_THROWS_WITH(run_assemble(cfg), "requires: summarize");
  run_summarize(cfg);
  CHECK_THROWS_WITH(run_loss(cfg), "requires: assemble");
  CHECK_NOTHROW(run_assemble(cfg));
}

TEST_CASE("the full chain produces every artifact on the fixture") {
  PipelineConfig cfg = fixture_config("full_chain");
  run_all(cfg);

  ArtifactPaths ap(cfg);
  for (const auto& path : {ap.questions(), ap.articles(), ap.validation(), ap.index(),
                           ap.retrieved(), ap.curve(), ap.reranked(), ap.summaries(),
                           ap.assembled()}) {
    INFO(path);
    CHECK(std::filesystem::exists(path));
  }
  // No predictions configured: the model-output stages do not run.
  CHECK_FALSE(std::filesystem::exists(ap.loss()));
  CHECK_FALSE(std::filesystem::exists(ap.metrics()));

  SECTION("reranked lists respect the survivor budget") {
    std::map<std::string, int> per_question;
    read_artifact_jsonl(ap.reranked(), [&](const json& obj) {
      per_question[obj.at("qid").get<std::string>()]++;
      CHECK(obj.contains("samples"));
      CHECK(obj.at("s").get<double>() >= 0.0);
    });
    CHECK_FALSE(per_question.empty());
    for (const auto& [qid, n] : per_question) {
      CHECK(n <= cfg.rerank.N);
      CHECK(qid.substr(0, 1) == "q");
    }
  }
  SECTION("assembled records cover every question and parse back") {
    size_t records = 0;
    read_artifact_jsonl(ap.assembled(), [&](const json& obj) {
      AssembledRecord rec = record_from_json(obj);
      CHECK_FALSE(rec.question_id.empty());
      ++records;
    });
    CHECK(records == 12);
  }
  SECTION("the curve has the configured bin count") {
    std::ifstream in(ap.curve());
    RecencyCurve curve = parse_recency_curve(in);
    CHECK(curve.bins == cfg.rerank.B);
    for (double v : curve.normalized_values) {
      CHECK(v >= cfg.rerank.epsilon);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("reruns are byte-identical") {
  PipelineConfig one = fixture_config("repeat_one");
  PipelineConfig two = fixture_config("repeat_two");
  run_all(one);
  run_all(two);
  for (const char* name : {"questions.jsonl", "articles.jsonl", "index.json",
                           "retrieved.jsonl", "curve.csv", "reranked.jsonl",
                           "summaries.jsonl", "assembled.jsonl", "validation.json"}) {
    INFO(name);
    CHECK(slurp(one.paths.out + "/" + name) == slurp(two.paths.out + "/" + name));
  }
}

TEST_CASE("loss stage scores supplied model outputs against assembled targets") {
  PipelineConfig cfg = fixture_config("loss");
  run_all(cfg);
  ArtifactPaths ap(cfg);

  // Build predictions from the assembled records so the u vectors line up.
  std::map<std::string, AssembledRecord> records;
  read_artifact_jsonl(ap.assembled(), [&](const json& obj) {
    AssembledRecord rec = record_from_json(obj);
    records[rec.question_id] = std::move(rec);
  });
  REQUIRE(records.size() == 12);

  auto preds_path = cfg.paths.out + "/model_preds.jsonl";
  {
    std::ofstream os(preds_path);
    for (const auto& [qid, rec] : records) {
      json line;
      line["qid"] = qid;
      json pred = json::object();
      if (rec.qtype == QType::NUM) {
        // Spread mass over the bin labels, most of it on the truth.
        pred[rec.answer_text] = 0.9;
        pred[rec.answer_text == "1" ? "2" : "1"] = 0.1;
      } else {
        pred[rec.answer_text] = 0.9;
        pred[rec.answer_text == "yes" ? "no" : "yes"] = 0.1;
      }
      line["pred"] = pred;
      line["u"] = rec.alignment_targets;  // perfectly aligned confidences
      os << line.dump() << "\n";
    }
  }
  cfg.paths.predictions = preds_path;

  json out = run_loss(cfg);
  CHECK(out["aggregate"]["count"] == 12);
  CHECK(out["skipped"].empty());
  double mean_total = out["aggregate"]["mean_total"].get<double>();
  double mean_decoder = out["aggregate"]["mean_decoder"].get<double>();
  CHECK(mean_total > 0.0);
  CHECK(mean_decoder >= -std::log(0.9) - 1e-12);
  CHECK(std::filesystem::exists(ap.loss()));
  for (const auto& [qid, entry] : out["per_question"].items()) {
    CHECK(entry["total"].get<double>() >= 0.0);
    CHECK_FALSE(entry["gt_clipped"].get<bool>());
  }

  SECTION("answer-only prediction lines are skipped, not scored") {
    cfg.paths.predictions = fixture("predictions.jsonl");
    json sparse = run_loss(cfg);
    CHECK(sparse["aggregate"]["count"] == 0);
    CHECK(sparse["skipped"].size() == 12);
  }
  SECTION("a wrong-length u vector is a data error") {
    const auto& victim = *records.begin();
    auto bad_path = cfg.paths.out + "/bad_preds.jsonl";
    {
      std::ofstream os(bad_path);
      json line;
      line["qid"] = victim.first;
      line["pred"] = {{victim.second.answer_text, 1.0}};
      line["u"] = std::vector<double>(victim.second.alignment_targets.size() + 1, 0.5);
      os << line.dump() << "\n";
    }
    cfg.paths.predictions = bad_path;
    CHECK_THROWS_WITH(run_loss(cfg),
                      "prediction u length mismatch for question " + victim.first);
  }
}

TEST_CASE("eval stage reports the fixture scorecard") {
  PipelineConfig cfg = fixture_config("eval");
  cfg.paths.predictions = fixture("predictions.jsonl");
  run_ingest(cfg);
  MetricsReport rep = run_eval(cfg);

  // 4 of 6 binary and 2 of 3 multiple choice are right; the numeric guesses
  // miss by 0.02, 0.07 and 0.00.
  CHECK(rep.tf_count == 6);
  CHECK_THAT(rep.tf_accuracy, Catch::Matchers::WithinAbs(400.0 / 6.0, 1e-9));
  CHECK(rep.mcq_count == 3);
  CHECK_THAT(rep.mcq_accuracy, Catch::Matchers::WithinAbs(200.0 / 3.0, 1e-9));
  CHECK(rep.num_count == 3);
  CHECK_THAT(rep.num_abs_error, Catch::Matchers::WithinAbs(3.0, 1e-9));
  CHECK(rep.unanswered.empty());
  CHECK(rep.flagged.empty());

  ArtifactPaths ap(cfg);
  json metrics = json::parse(slurp(ap.metrics()));
  CHECK(metrics["fingerprint"] == cfg.fingerprint());
  CHECK(metrics["tf"]["count"] == 6);
}
