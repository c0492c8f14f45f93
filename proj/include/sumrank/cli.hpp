#pragma once

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sumrank/config.hpp"
#include "sumrank/corpus.hpp"
#include "sumrank/errors.hpp"
#include "sumrank/eval.hpp"
#include "sumrank/generate.hpp"
#include "sumrank/ranker.hpp"
#include "sumrank/retrieval.hpp"
#include "sumrank/transports_http.hpp"

namespace sumrank {

inline std::unique_ptr<EmbeddingProvider> make_provider(
    const ProviderSpec& spec) {
  if (spec.kind == "hashed")
    return std::make_unique<HashedProjectionProvider>(spec.dim, spec.seed);
  if (spec.kind == "precomputed") {
    if (spec.path.empty())
      throw ConfigError("precomputed provider requires provider.path");
    return std::make_unique<PrecomputedEmbeddingProvider>(spec.path);
  }
  if (spec.kind == "remote") {
    RemoteEmbeddingConfig cfg;
    cfg.url = spec.url;
    cfg.model = spec.model;
    cfg.dim = spec.dim;
    cfg.api_key_env = spec.api_key_env;
    if (cfg.url.empty() || cfg.model.empty())
      throw ConfigError("remote provider requires provider.url and provider.model");
    return std::make_unique<RemoteEmbeddingProvider>(std::move(cfg));
  }
  throw ConfigError("unknown provider kind \"" + spec.kind + "\"");
}

/// Owns the transport chain; active() is what the pipeline talks to (the
/// recorder when record_path is set, the base transport otherwise).
struct TransportStack {
  std::unique_ptr<ChatTransport> base;
  std::unique_ptr<ChatTransport> recorder;

  ChatTransport& active() { return recorder ? *recorder : *base; }
};

inline TransportStack make_transport(const TransportSpec& spec,
                                     const std::string& record_path) {
  TransportStack stack;
  if (spec.kind == "replay") {
    if (spec.path.empty())
      throw ConfigError("replay transport requires transport.path");
    stack.base = std::make_unique<ReplayTransport>(spec.path);
  } else if (spec.kind == "live") {
    if (spec.url.empty())
      throw ConfigError("live transport requires transport.url");
    LiveChatConfig cfg;
    cfg.url = spec.url;
    cfg.api_key_env = spec.api_key_env;
    stack.base = std::make_unique<LiveChatTransport>(std::move(cfg));
  } else {
    throw ConfigError("unknown transport kind \"" + spec.kind + "\"");
  }
  if (!record_path.empty())
    stack.recorder =
        std::make_unique<RecordingTransport>(*stack.base, record_path);
  return stack;
}

namespace cli_detail {

inline std::string fixed(double value, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

/// Flag overrides shared by every subcommand. Resolution order is flags over
/// file over defaults.
struct CommonFlags {
  std::string config_path;
  RunConfig flags;

  CLI::Option* test_corpus = nullptr;
  CLI::Option* pool_corpus = nullptr;
  CLI::Option* mode = nullptr;
  CLI::Option* strategy = nullptr;
  CLI::Option* k = nullptr;
  CLI::Option* max_format_retries = nullptr;
  CLI::Option* temperature = nullptr;
  CLI::Option* model_name = nullptr;
  CLI::Option* provider_kind = nullptr;
  CLI::Option* provider_dim = nullptr;
  CLI::Option* provider_seed = nullptr;
  CLI::Option* provider_path = nullptr;
  CLI::Option* provider_url = nullptr;
  CLI::Option* provider_model = nullptr;
  CLI::Option* replay = nullptr;
  CLI::Option* endpoint = nullptr;
  CLI::Option* record = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* ranker_model = nullptr;
  CLI::Option* output_dir = nullptr;
  CLI::Option* parallelism = nullptr;
  CLI::Option* exclude_self = nullptr;
  CLI::Option* tau = nullptr;
  CLI::Option* lr_backbone = nullptr;
  CLI::Option* lr_head = nullptr;
  CLI::Option* epochs_phase1 = nullptr;
  CLI::Option* epochs_phase2 = nullptr;
  CLI::Option* batch_size = nullptr;
  CLI::Option* train_seed = nullptr;
  CLI::Option* hidden_dim = nullptr;
  CLI::Option* proj_dim = nullptr;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (JSON)");
    test_corpus = sub->add_option("--test-corpus", flags.test_corpus,
                                  "corpus to run over");
    pool_corpus = sub->add_option("--pool-corpus", flags.pool_corpus,
                                  "demonstration pool corpus");
    mode = sub->add_option("--mode", flags.mode, "eval mode");
    strategy =
        sub->add_option("--strategy", flags.strategy, "retrieval strategy");
    k = sub->add_option("--k", flags.generation.k, "candidates per document");
    max_format_retries =
        sub->add_option("--max-format-retries",
                        flags.generation.max_format_retries, "retry budget");
    temperature = sub->add_option(
        "--temperature", flags.generation.sampling_temperature,
        "sampling temperature");
    model_name = sub->add_option("--model-name", flags.generation.model_name,
                                 "chat model name");
    provider_kind = sub->add_option("--provider-kind", flags.provider.kind,
                                    "hashed | precomputed | remote");
    provider_dim = sub->add_option("--provider-dim", flags.provider.dim,
                                   "embedding dimension");
    provider_seed = sub->add_option("--provider-seed", flags.provider.seed,
                                    "hashed provider seed");
    provider_path = sub->add_option("--provider-path", flags.provider.path,
                                    "precomputed embeddings file");
    provider_url = sub->add_option("--provider-url", flags.provider.url,
                                   "remote embeddings endpoint");
    provider_model = sub->add_option("--provider-model", flags.provider.model,
                                     "remote embeddings model");
    replay = sub->add_option("--replay", flags.transport.path,
                             "replay transport from this recording file");
    endpoint = sub->add_option("--endpoint", flags.transport.url,
                               "live chat-completions endpoint");
    record = sub->add_option("--record", flags.record_path,
                             "append recordings to this file");
    seed = sub->add_option("--seed", flags.seed, "run seed");
    ranker_model = sub->add_option("--ranker-model", flags.ranker_model,
                                   "trained ranker checkpoint");
    output_dir =
        sub->add_option("--output-dir", flags.output_dir, "output directory");
    parallelism = sub->add_option("--parallelism", flags.parallelism,
                                  "max in-flight requests");
    exclude_self = sub->add_flag("--exclude-self", flags.exclude_self,
                                 "never use a document as its own demo");
    tau = sub->add_option("--tau", flags.train.train.tau,
                          "contrastive temperature");
    lr_backbone = sub->add_option("--lr-backbone", flags.train.train.lr_backbone,
                                  "phase-1 learning rate");
    lr_head = sub->add_option("--lr-head", flags.train.train.lr_head,
                              "phase-2 learning rate");
    epochs_phase1 = sub->add_option(
        "--epochs-phase1", flags.train.train.epochs_phase1, "phase-1 epochs");
    epochs_phase2 = sub->add_option(
        "--epochs-phase2", flags.train.train.epochs_phase2, "phase-2 epochs");
    batch_size = sub->add_option("--batch-size", flags.train.train.batch_size,
                                 "phase-1 batch size");
    train_seed =
        sub->add_option("--train-seed", flags.train.train.seed, "training seed");
    hidden_dim = sub->add_option("--hidden-dim", flags.train.hidden_dim,
                                 "backbone hidden width");
    proj_dim = sub->add_option("--proj-dim", flags.train.proj_dim,
                               "projection dimension");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) {
      json value;
      try {
        value = json::parse(read_file(config_path));
      } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse config " + config_path + ": " +
                          e.what());
      }
      apply_config_json(cfg, value);
    }
    auto set = [](CLI::Option* opt) { return opt != nullptr && opt->count() > 0; };
    if (set(test_corpus)) cfg.test_corpus = flags.test_corpus;
    if (set(pool_corpus)) cfg.pool_corpus = flags.pool_corpus;
    if (set(mode)) cfg.mode = flags.mode;
    if (set(strategy)) cfg.strategy = flags.strategy;
    if (set(k)) cfg.generation.k = flags.generation.k;
    if (set(max_format_retries))
      cfg.generation.max_format_retries = flags.generation.max_format_retries;
    if (set(temperature))
      cfg.generation.sampling_temperature = flags.generation.sampling_temperature;
    if (set(model_name)) cfg.generation.model_name = flags.generation.model_name;
    if (set(provider_kind)) cfg.provider.kind = flags.provider.kind;
    if (set(provider_dim)) cfg.provider.dim = flags.provider.dim;
    if (set(provider_seed)) cfg.provider.seed = flags.provider.seed;
    if (set(provider_path)) cfg.provider.path = flags.provider.path;
    if (set(provider_url)) cfg.provider.url = flags.provider.url;
    if (set(provider_model)) cfg.provider.model = flags.provider.model;
    if (set(replay)) {
      cfg.transport.kind = "replay";
      cfg.transport.path = flags.transport.path;
    }
    if (set(endpoint)) {
      cfg.transport.kind = "live";
      cfg.transport.url = flags.transport.url;
    }
    if (set(record)) cfg.record_path = flags.record_path;
    if (set(seed)) cfg.seed = flags.seed;
    if (set(ranker_model)) cfg.ranker_model = flags.ranker_model;
    if (set(output_dir)) cfg.output_dir = flags.output_dir;
    if (set(parallelism)) cfg.parallelism = flags.parallelism;
    if (set(exclude_self)) cfg.exclude_self = flags.exclude_self;
    if (set(tau)) cfg.train.train.tau = flags.train.train.tau;
    if (set(lr_backbone)) cfg.train.train.lr_backbone = flags.train.train.lr_backbone;
    if (set(lr_head)) cfg.train.train.lr_head = flags.train.train.lr_head;
    if (set(epochs_phase1))
      cfg.train.train.epochs_phase1 = flags.train.train.epochs_phase1;
    if (set(epochs_phase2))
      cfg.train.train.epochs_phase2 = flags.train.train.epochs_phase2;
    if (set(batch_size)) cfg.train.train.batch_size = flags.train.train.batch_size;
    if (set(train_seed)) cfg.train.train.seed = flags.train.train.seed;
    if (set(hidden_dim)) cfg.train.hidden_dim = flags.train.hidden_dim;
    if (set(proj_dim)) cfg.train.proj_dim = flags.train.proj_dim;
    return cfg;
  }
};

inline std::string default_out(const RunConfig& cfg, const std::string& name,
                               const std::string& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  std::filesystem::create_directories(cfg.output_dir);
  return (std::filesystem::path(cfg.output_dir) / name).string();
}

inline EvalOptions eval_options(const RunConfig& cfg) {
  EvalOptions options;
  options.generation = cfg.generation;
  options.strategy = parse_strategy(cfg.strategy);
  options.seed = cfg.seed;
  options.parallelism = cfg.parallelism;
  options.exclude_self = cfg.exclude_self;
  return options;
}

/// Demonstrations for the generate subcommand, reusing the eval picker.
inline std::vector<std::optional<Document>> pick_demos_for_generate(
    const std::string& demo_mode, const Corpus& corpus, const Corpus& pool,
    const EmbeddingProvider* provider, const EvalOptions& options) {
  EvalMode mode;
  if (demo_mode == "none")
    mode = EvalMode::zero;
  else if (demo_mode == "random")
    mode = EvalMode::random_demo;
  else if (demo_mode == "similar")
    mode = EvalMode::similar_demo;
  else if (demo_mode == "upper_bound")
    mode = EvalMode::upper_bound;
  else
    throw ConfigError("unknown demo mode \"" + demo_mode + "\"");
  return detail::pick_demonstrations(mode, corpus, pool, provider, options);
}

inline int cmd_stats(const std::string& corpus_path) {
  Corpus corpus = load_corpus(corpus_path);
  CorpusStats stats = corpus_stats(corpus);
  std::cout << "corpus: " << corpus.name << "\n"
            << "documents: " << stats.count << "\n"
            << "avg_text_tokens: " << fixed(stats.avg_text_tokens) << "\n"
            << "avg_summary_tokens: " << fixed(stats.avg_summary_tokens)
            << "\n";
  return 0;
}

inline int cmd_retrieve(const CommonFlags& common,
                        const std::string& corpus_path,
                        const std::string& query, std::size_t top_k) {
  RunConfig cfg = common.resolve();
  Corpus corpus = load_corpus(corpus_path);
  RetrievalStrategy strategy = parse_strategy(cfg.strategy);
  std::vector<RetrievalHit> hits;
  if (strategy == RetrievalStrategy::bm25) {
    hits = retrieve_sparse(build_bm25(corpus), query, top_k);
  } else if (strategy == RetrievalStrategy::dense) {
    auto provider = make_provider(cfg.provider);
    hits = retrieve_dense(*provider, corpus, query, top_k);
  } else {
    hits = retrieve_rouge(corpus, query, top_k);
  }
  for (const auto& hit : hits)
    std::cout << hit.doc_id << "\t" << fixed(hit.score, 6) << "\n";
  return 0;
}

inline int cmd_generate(const CommonFlags& common, const std::string& out_path,
                        const std::string& demo_mode, bool concat,
                        bool no_demo_summary) {
  RunConfig cfg = common.resolve();
  cfg.generation.validate();
  if (cfg.test_corpus.empty())
    throw ConfigError("generate requires test_corpus");
  Corpus corpus = load_corpus(cfg.test_corpus);
  Corpus pool =
      cfg.pool_corpus.empty() ? corpus : load_corpus(cfg.pool_corpus);
  TransportStack transport = make_transport(cfg.transport, cfg.record_path);

  EvalOptions options = eval_options(cfg);
  std::unique_ptr<EmbeddingProvider> provider;
  if (demo_mode == "similar" &&
      options.strategy == RetrievalStrategy::dense)
    provider = make_provider(cfg.provider);
  auto demos = pick_demos_for_generate(demo_mode, corpus, pool,
                                       provider.get(), options);
  if (concat && demo_mode == "none")
    throw ConfigError("--concat requires a demo mode");

  std::vector<GenerationOutcome> outcomes(corpus.size());
  bool with_summary = !no_demo_summary;
  run_bounded(corpus.size(), cfg.parallelism, [&](std::size_t i) {
    if (concat) {
      outcomes[i] = generate_concatenated(transport.active(), *demos[i],
                                          corpus.documents[i], cfg.generation,
                                          with_summary);
    } else {
      outcomes[i] =
          generate_candidates(transport.active(), demos[i],
                              corpus.documents[i], cfg.generation, with_summary);
    }
  });

  std::string out = default_out(cfg, "candidates.jsonl", out_path);
  write_outcomes(out, outcomes);
  std::size_t skipped = 0;
  for (const auto& o : outcomes)
    if (!o.ok()) ++skipped;
  std::cout << "generated " << (outcomes.size() - skipped)
            << " candidate sets, " << skipped << " skipped -> " << out << "\n";
  return 0;
}

inline int cmd_train_ranker(const CommonFlags& common,
                            const std::string& corpus_path,
                            const std::string& candidates_path,
                            const std::string& instances_path,
                            const std::string& out_path,
                            const std::string& save_instances) {
  RunConfig cfg = common.resolve();
  Corpus corpus = load_corpus(corpus_path);
  std::vector<TrainingInstance> instances;
  if (!instances_path.empty()) {
    instances = read_training_instances(instances_path, corpus);
  } else if (!candidates_path.empty()) {
    instances =
        build_training_instances(corpus, read_outcomes(candidates_path));
  } else {
    throw ConfigError("train-ranker requires --candidates or --instances");
  }
  if (!save_instances.empty())
    write_training_instances(save_instances, instances);

  auto provider = make_provider(cfg.provider);
  TrainResult result = train_ranker(instances, cfg.train.train, *provider,
                                    cfg.train.hidden_dim, cfg.train.proj_dim);
  std::string out = default_out(cfg, "ranker.json", out_path);
  save_model(result.model, out);
  std::cout << "trained on " << instances.size() << " instances\n";
  if (!result.phase1_loss.empty())
    std::cout << "phase1 loss: " << fixed(result.phase1_loss.front(), 6)
              << " -> " << fixed(result.phase1_loss.back(), 6) << "\n";
  if (!result.phase2_loss.empty())
    std::cout << "phase2 loss: " << fixed(result.phase2_loss.front(), 6)
              << " -> " << fixed(result.phase2_loss.back(), 6) << "\n";
  std::cout << "model -> " << out << "\n";
  return 0;
}

inline int cmd_rank(const CommonFlags& common, const std::string& corpus_path,
                    const std::string& candidates_path,
                    const std::string& out_path) {
  RunConfig cfg = common.resolve();
  if (cfg.ranker_model.empty())
    throw ConfigError("rank requires ranker_model");
  Corpus corpus = load_corpus(corpus_path);
  RankerModel model = load_model(cfg.ranker_model);
  auto provider = make_provider(cfg.provider);
  auto outcomes = read_outcomes(candidates_path);

  std::string out = default_out(cfg, "ranked.jsonl", out_path);
  JsonlWriter writer(out);
  std::size_t ranked = 0;
  for (const auto& outcome : outcomes) {
    json record;
    if (!outcome.ok()) {
      record = outcome_to_json(outcome);
      writer.write(record);
      continue;
    }
    const CandidateSet& set = *outcome.candidates;
    const Document* doc = corpus.find(set.doc_id);
    if (doc == nullptr)
      throw Error("candidate doc \"" + set.doc_id + "\" not found in corpus");
    std::vector<double> scores =
        score_candidates(model, *doc, set.candidates, *provider);
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
      if (scores[i] > scores[best]) best = i;
    record["doc_id"] = set.doc_id;
    record["selected"] = best;
    record["scores"] = scores;
    writer.write(record);
    ++ranked;
  }
  std::cout << "ranked " << ranked << " candidate sets -> " << out << "\n";
  return 0;
}

inline int cmd_evaluate(const CommonFlags& common,
                        const std::string& report_path) {
  RunConfig cfg = common.resolve();
  cfg.validate();
  if (cfg.test_corpus.empty())
    throw ConfigError("evaluate requires test_corpus");
  Corpus test = load_corpus(cfg.test_corpus);
  Corpus pool = cfg.pool_corpus.empty() ? test : load_corpus(cfg.pool_corpus);
  TransportStack transport = make_transport(cfg.transport, cfg.record_path);
  EvalMode mode = parse_mode(cfg.mode);
  EvalOptions options = eval_options(cfg);

  std::unique_ptr<EmbeddingProvider> provider;
  if (mode == EvalMode::pads ||
      (mode_uses_demo(mode) && options.strategy == RetrievalStrategy::dense))
    provider = make_provider(cfg.provider);
  std::optional<RankerModel> model;
  if (mode == EvalMode::pads) model = load_model(cfg.ranker_model);

  EvalReport report =
      run_mode(mode, test, pool, transport.active(), provider.get(),
               model ? &*model : nullptr, options);
  std::string out = default_out(
      cfg, "report_" + report.mode + ".json", report_path);
  write_report(out, report);
  std::cout << render_report_table({report});
  std::cout << "report -> " << out << "\n";
  return 0;
}

inline int cmd_spread(const CommonFlags& common, const std::string& corpus_path,
                      const std::string& candidates_path) {
  Corpus corpus = load_corpus(corpus_path);
  auto outcomes = read_outcomes(candidates_path);
  std::vector<CandidateSet> sets;
  for (const auto& outcome : outcomes)
    if (outcome.ok()) sets.push_back(*outcome.candidates);
  SpreadStats stats = candidate_spread(sets, corpus);
  std::cout << spread_to_json(stats).dump(2) << "\n";
  (void)common;
  return 0;
}

inline int cmd_compare_retrievers(const CommonFlags& common) {
  RunConfig cfg = common.resolve();
  if (cfg.test_corpus.empty())
    throw ConfigError("compare-retrievers requires test_corpus");
  Corpus test = load_corpus(cfg.test_corpus);
  Corpus pool = cfg.pool_corpus.empty() ? test : load_corpus(cfg.pool_corpus);
  TransportStack transport = make_transport(cfg.transport, cfg.record_path);
  EvalOptions options = eval_options(cfg);
  auto provider = make_provider(cfg.provider);

  std::vector<EvalReport> reports;
  reports.push_back(run_mode(EvalMode::zero, test, pool, transport.active(),
                             provider.get(), nullptr, options));
  for (RetrievalStrategy strategy :
       {RetrievalStrategy::bm25, RetrievalStrategy::dense,
        RetrievalStrategy::rouge}) {
    EvalOptions arm = options;
    arm.strategy = strategy;
    EvalReport report = run_mode(EvalMode::similar_demo, test, pool,
                                 transport.active(), provider.get(), nullptr,
                                 arm);
    report.mode = std::string("similar_demo[") + to_string(strategy) + "]";
    reports.push_back(std::move(report));
  }
  std::cout << render_report_table(reports);
  const RougeReport& base = reports.front().rouge;
  std::cout << "\ndelta vs zero (x100):\n";
  for (std::size_t i = 1; i < reports.size(); ++i) {
    char line[160];
    std::snprintf(line, sizeof line, "%-26s%+8.1f%+8.1f%+8.1f\n",
                  reports[i].mode.c_str(),
                  (reports[i].rouge.r1.f1 - base.r1.f1) * 100.0,
                  (reports[i].rouge.r2.f1 - base.r2.f1) * 100.0,
                  (reports[i].rouge.rl.f1 - base.rl.f1) * 100.0);
    std::cout << line;
  }
  return 0;
}

}  // namespace cli_detail

/// Entry point behind main(): parses the subcommand, wires the pipeline, and
/// maps errors to exit codes (0 ok, 1 usage, 2 runtime failure).
inline int run_command(int argc, const char* const* argv) {
  CLI::App app{"domain-salient summarization pipeline"};
  app.require_subcommand(1);

  struct SubState {
    cli_detail::CommonFlags common;
    std::string corpus_path;
    std::string query;
    std::size_t top_k = 3;
    std::string out_path;
    std::string report_path;
    std::string candidates_path;
    std::string instances_path;
    std::string save_instances;
    std::string demo_mode = "none";
    bool concat = false;
    bool no_demo_summary = false;
  };
  auto states = std::make_shared<std::vector<std::unique_ptr<SubState>>>();
  auto add_state = [&]() {
    states->push_back(std::make_unique<SubState>());
    return states->back().get();
  };

  int exit_code = 0;
  auto run = [&exit_code](auto&& fn) {
    exit_code = fn();
  };

  {
    auto* s = add_state();
    auto* sub = app.add_subcommand("stats", "describe a corpus");
    sub->add_option("--corpus", s->corpus_path, "corpus file")->required();
    sub->callback([&run, s] {
      run([s] { return cli_detail::cmd_stats(s->corpus_path); });
    });
  }
  {
    auto* s = add_state();
    auto* sub = app.add_subcommand("retrieve", "query a corpus");
    s->common.attach(sub);
    sub->add_option("--corpus", s->corpus_path, "corpus file")->required();
    sub->add_option("--query", s->query, "query text")->required();
    sub->add_option("--top-k", s->top_k, "hits to print");
    sub->callback([&run, s] {
      run([s] {
        return cli_detail::cmd_retrieve(s->common, s->corpus_path, s->query,
                                        s->top_k);
      });
    });
  }
  {
    auto* s = add_state();
    auto* sub = app.add_subcommand("generate", "generate candidate summaries");
    s->common.attach(sub);
    sub->add_option("--out", s->out_path, "candidates output file");
    sub->add_option("--demo-mode", s->demo_mode,
                    "none | random | similar | upper_bound");
    sub->add_flag("--concat", s->concat,
                  "single-turn concatenation instead of multi-turn");
    sub->add_flag("--no-demo-summary", s->no_demo_summary,
                  "present the demonstration without its summary");
    sub->callback([&run, s] {
      run([s] {
        return cli_detail::cmd_generate(s->common, s->out_path, s->demo_mode,
                                        s->concat, s->no_demo_summary);
      });
    });
  }
  {
    auto* s = add_state();
    auto* sub = app.add_subcommand("train-ranker", "two-phase ranker training");
    s->common.attach(sub);
    sub->add_option("--corpus", s->corpus_path, "training corpus")->required();
    sub->add_option("--candidates", s->candidates_path,
                    "generated candidates file");
    sub->add_option("--instances", s->instances_path,
                    "prepared training instances file");
    sub->add_option("--out", s->out_path, "model output path");
    sub->add_option("--save-instances", s->save_instances,
                    "also write prepared instances here");
    sub->callback([&run, s] {
      run([s] {
        return cli_detail::cmd_train_ranker(s->common, s->corpus_path,
                                            s->candidates_path,
                                            s->instances_path, s->out_path,
                                            s->save_instances);
      });
    });
  }
  {
    auto* s = add_state();
    auto* sub = app.add_subcommand("rank", "score candidates with a model");
    s->common.attach(sub);
    sub->add_option("--corpus", s->corpus_path, "corpus file")->required();
    sub->add_option("--candidates", s->candidates_path, "candidates file")
        ->required();
    sub->add_option("--out", s->out_path, "ranked output file");
    sub->callback([&run, s] {
      run([s] {
        return cli_detail::cmd_rank(s->common, s->corpus_path,
                                    s->candidates_path, s->out_path);
      });
    });
  }
  {
    auto* s = add_state();
    auto* sub = app.add_subcommand("evaluate", "run one experimental arm");
    s->common.attach(sub);
    sub->add_option("--report-out", s->report_path, "report output path");
    sub->callback([&run, s] {
      run([s] { return cli_detail::cmd_evaluate(s->common, s->report_path); });
    });
  }
  {
    auto* s = add_state();
    auto* sub = app.add_subcommand("spread", "candidate score dispersion");
    s->common.attach(sub);
    sub->add_option("--corpus", s->corpus_path, "corpus file")->required();
    sub->add_option("--candidates", s->candidates_path, "candidates file")
        ->required();
    sub->callback([&run, s] {
      run([s] {
        return cli_detail::cmd_spread(s->common, s->corpus_path,
                                      s->candidates_path);
      });
    });
  }
  {
    auto* s = add_state();
    auto* sub = app.add_subcommand("compare-retrievers",
                                   "similar_demo arms against zero-shot");
    s->common.attach(sub);
    sub->callback([&run, s] {
      run([s] { return cli_detail::cmd_compare_retrievers(s->common); });
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}

}  // namespace sumrank
