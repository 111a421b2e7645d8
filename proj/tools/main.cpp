#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <newsrank/newsrank.hpp>

namespace {

using namespace newsrank;

void register_options(CLI::App& app, PipelineConfig& cfg) {
  app.add_option("--paths.questions", cfg.paths.questions,
                 "Questions file (JSONL, or published-layout JSON array)");
  app.add_option("--paths.articles", cfg.paths.articles, "Articles JSONL");
  app.add_option("--paths.forecasts", cfg.paths.forecasts,
                 "Optional standalone crowd-forecast JSONL");
  app.add_option("--paths.predictions", cfg.paths.predictions,
                 "Model predictions JSONL for the loss/eval stages");
  app.add_option("--paths.out", cfg.paths.out, "Artifact directory")
      ->capture_default_str();
  app.add_option("--paths.cache", cfg.paths.cache, "Response cache directory")
      ->capture_default_str();

  app.add_option("--retrieval.K", cfg.retrieval.K, "Initial candidates per question")
      ->capture_default_str();
  app.add_option("--retrieval.k1", cfg.retrieval.k1, "BM25 k1")->capture_default_str();
  app.add_option("--retrieval.b", cfg.retrieval.b, "BM25 b")->capture_default_str();

  app.add_option("--rerank.G", cfg.rerank.G, "Relevance rating scale size")
      ->capture_default_str();
  app.add_option("--rerank.l", cfg.rerank.l, "Relevance draws per pair")
      ->capture_default_str();
  app.add_option("--rerank.N", cfg.rerank.N, "Survivors per question")
      ->capture_default_str();
  app.add_option("--rerank.B", cfg.rerank.B, "Recency curve bins")->capture_default_str();
  app.add_option("--rerank.epsilon", cfg.rerank.epsilon, "Recency curve floor")
      ->capture_default_str();
  app.add_option("--rerank.theta", cfg.rerank.theta, "Combined-score threshold")
      ->capture_default_str();

  app.add_option("--summarize.min_tokens", cfg.summarize.min_tokens,
                 "Bodies at or under this token count bypass summarization")
      ->capture_default_str();
  app.add_option("--summarize.max_output_tokens", cfg.summarize.max_output_tokens,
                 "Summary output budget")
      ->capture_default_str();
  app.add_option("--summarize.mock_sentences", cfg.summarize.mock_sentences,
                 "Sentences the mock backend keeps")
      ->capture_default_str();

  app.add_option("--targets.R", cfg.targets.R, "Numerical answer bins")
      ->capture_default_str();
  app.add_option("--targets.lambda", cfg.targets.lambda, "Alignment loss weight")
      ->capture_default_str();
  app.add_option("--targets.inverse", cfg.targets.inverse,
                 "Unbinning convention: bin_midpoint or paper_literal")
      ->capture_default_str();

  app.add_option("--backend.kind", cfg.backend.kind, "mock or live")
      ->capture_default_str();
  app.add_option("--backend.base_url", cfg.backend.base_url,
                 "Live API base URL, e.g. https://api.example.com/v1");
  app.add_option("--backend.model", cfg.backend.model, "Live model id");
  app.add_option("--backend.api_key_env", cfg.backend.api_key_env,
                 "Environment variable holding the API key")
      ->capture_default_str();
  app.add_option("--backend.seed", cfg.backend.seed, "Mock backend seed")
      ->capture_default_str();
  app.add_option("--backend.concurrency", cfg.backend.concurrency,
                 "Max in-flight backend requests")
      ->capture_default_str();
  app.add_option("--backend.max_retries", cfg.backend.max_retries,
                 "Retries after a transient failure")
      ->capture_default_str();
  app.add_option("--backend.retry_initial_ms", cfg.backend.retry_initial_ms,
                 "First backoff delay, doubled per retry")
      ->capture_default_str();

  app.add_option("--split.cutoff", cfg.split.cutoff,
                 "Questions expiring before this date form the training split")
      ->capture_default_str();
}

int dispatch(const std::string& stage, const PipelineConfig& cfg) {
  ArtifactPaths ap(cfg);
  if (stage == "ingest") {
    auto res = run_ingest(cfg);
    std::cout << "ingested " << res.questions.size() << " questions, "
              << res.articles.size() << " articles";
    if (!res.report.rejects.empty())
      std::cout << " (" << res.report.rejects.size() << " rejected lines)";
    std::cout << " -> " << ap.questions() << ", " << ap.articles() << "\n";
    std::cout << "validation report -> " << ap.validation() << "\n";
  } else if (stage == "index") {
    run_index(cfg);
    std::cout << "index -> " << ap.index() << "\n";
  } else if (stage == "retrieve") {
    run_retrieve(cfg);
    std::cout << "candidates -> " << ap.retrieved() << "\n";
  } else if (stage == "curve") {
    auto curve = run_curve(cfg);
    std::cout << "recency curve (" << curve.bins << " bins) -> " << ap.curve() << "\n";
  } else if (stage == "rerank") {
    run_rerank(cfg);
    std::cout << "re-ranked selection -> " << ap.reranked() << "\n";
  } else if (stage == "summarize") {
    auto batch = run_summarize(cfg);
    std::cout << "summaries (" << batch.summaries.size() << " ok, "
              << batch.failures.size() << " failed) -> " << ap.summaries() << "\n";
  } else if (stage == "assemble") {
    auto flags = run_assemble(cfg);
    std::cout << "assembled records -> " << ap.assembled() << "\n";
    for (const auto& f : flags) std::cerr << "note: " << f << "\n";
  } else if (stage == "loss") {
    auto out = run_loss(cfg);
    std::cout << "loss report (" << out["aggregate"]["count"] << " questions, mean total "
              << out["aggregate"]["mean_total"] << ") -> " << ap.loss() << "\n";
  } else if (stage == "eval") {
    auto rep = run_eval(cfg);
    std::cout << "metrics: tf " << rep.tf_accuracy << " (" << rep.tf_count << "), mcq "
              << rep.mcq_accuracy << " (" << rep.mcq_count << "), num err "
              << rep.num_abs_error << " (" << rep.num_count << ") -> " << ap.metrics()
              << "\n";
  } else if (stage == "all") {
    run_all(cfg);
    std::cout << "pipeline complete -> " << cfg.paths.out << "\n";
  } else {
    std::cerr << "unknown stage: " << stage << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"News retrieval, re-ranking and context distillation for event forecasting"};
  app.set_version_flag("--version", "newsrank 0.1.0");
  app.set_config("--config", "", "Config file; sections map to dotted option names");
  app.require_subcommand(1);

  newsrank::PipelineConfig cfg;
  register_options(app, cfg);

  const char* stages[] = {"ingest",    "index",    "retrieve", "curve", "rerank",
                          "summarize", "assemble", "loss",     "eval",  "all"};
  const char* blurbs[] = {
      "Validate raw inputs and write the canonical dataset",
      "Build the lexical index over the canonical articles",
      "BM25 top-K candidates per question, window-restricted",
      "Estimate the recency curve from training-split crowd data",
      "Rate relevance through the backend and keep the filtered top-N",
      "Distill selected articles into summaries",
      "Export chronologically ordered reader inputs with targets",
      "Score external predictions under the training objective",
      "Report accuracy and absolute-error metrics",
      "Run every stage in order"};
  for (size_t i = 0; i < std::size(stages); ++i) {
    auto* sub = app.add_subcommand(stages[i], blurbs[i]);
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    cfg.validate();
    return dispatch(app.get_subcommands().front()->get_name(), cfg);
  } catch (const newsrank::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const newsrank::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const newsrank::BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return 3;
  } catch (const newsrank::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
