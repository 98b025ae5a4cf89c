#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cwrank/baseline.hpp"
#include "cwrank/corpus.hpp"
#include "cwrank/manifest.hpp"
#include "cwrank/metrics.hpp"
#include "cwrank/projection.hpp"
#include "cwrank/train.hpp"

namespace {

using namespace cwrank;

constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitUndefinedMetric = 4;

struct TaggedFile {
  Language language;
  std::string path;
};

// "lang:path", e.g. "en:data/dataset_train_en.tsv"
TaggedFile parse_tagged(const std::string& spec) {
  const std::size_t colon = spec.find(':');
  if (colon == std::string::npos || colon == 0)
    throw CorpusError("expected lang:path, got '" + spec + "'");
  return {language_from_string(spec.substr(0, colon)), spec.substr(colon + 1)};
}

std::vector<TaggedFile> parse_tagged_list(const std::vector<std::string>& specs) {
  std::vector<TaggedFile> out;
  for (const std::string& s : specs) out.push_back(parse_tagged(s));
  return out;
}

void write_output(const std::string& path, const RunManifest& manifest,
                  const std::string& body) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write output file: " + path);
  char checksum[32];
  std::snprintf(checksum, sizeof(checksum), "%016llx",
                static_cast<unsigned long long>(manifest.checksum()));
  out << "# manifest_checksum=" << checksum << '\n' << body;
}

struct SchemaFlags {
  ColumnSchema schema;
  void attach(CLI::App* cmd) {
    cmd->add_option("--col-topic", schema.topic, "topic id column name");
    cmd->add_option("--col-id", schema.id, "sample id column name");
    cmd->add_option("--col-text", schema.text, "text column name");
    cmd->add_option("--col-label", schema.label, "label column name");
  }
};

struct TrainFlags {
  TrainConfig config;
  void attach(CLI::App* cmd) {
    cmd->add_option("--alpha", config.alpha, "CWD loss weight in [0,1]")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--epochs", config.epochs, "training epochs");
    cmd->add_option("--batch-size", config.batch_size, "batch size");
    cmd->add_option("--chunks", config.chunks, "ensemble chunk count k");
    cmd->add_option("--lr", config.lr, "AdamW learning rate");
    cmd->add_option("--weight-decay", config.weight_decay, "decoupled decay");
    cmd->add_option("--data-seed", config.data_seed, "chunking/shuffle seed");
    cmd->add_option("--init-seed", config.init_seed, "weight init seed");
    cmd->add_option("--embed-dim", config.embed_dim, "embedding width d");
    cmd->add_option("--hidden-dim", config.hidden_dim, "shared/head width h");
    cmd->add_option("--hash-vocab", config.encoder.hash_vocab_size,
                    "hash vocabulary size (power of two)");
    cmd->add_option("--hash-seed", config.encoder.hash_seed, "token hash seed");
    cmd->add_flag("--single-chunk", config.train_on_single_chunk,
                  "train member i on chunk i alone instead of leave-one-out");
    cmd->add_flag("--class-weights", config.class_weighting,
                  "inverse-frequency class weights");
    cmd->add_option("--run-id", config.run_id, "run id for prediction output");
  }
  void fill_manifest(RunManifest& m) const {
    m.set("alpha", config.alpha);
    m.set("epochs", static_cast<long long>(config.epochs));
    m.set("batch_size", static_cast<long long>(config.batch_size));
    m.set("chunks", static_cast<long long>(config.chunks));
    m.set("lr", config.lr);
    m.set("beta1", config.beta1);
    m.set("beta2", config.beta2);
    m.set("eps", config.eps);
    m.set("weight_decay", config.weight_decay);
    m.set("data_seed", config.data_seed);
    m.set("init_seed", config.init_seed);
    m.set("embed_dim", static_cast<std::uint64_t>(config.embed_dim));
    m.set("hidden_dim", static_cast<std::uint64_t>(config.hidden_dim));
    m.set("hash_vocab_size",
          static_cast<std::uint64_t>(config.encoder.hash_vocab_size));
    m.set("hash_seed", config.encoder.hash_seed);
    m.set("train_on_single_chunk",
          std::string(config.train_on_single_chunk ? "true" : "false"));
    m.set("class_weighting", std::string(config.class_weighting ? "true" : "false"));
    m.set("run_id", config.run_id);
    m.set("model_format_version", std::string("1"));
  }
};

Dataset load_merged(const std::vector<TaggedFile>& files, Split split,
                    const ColumnSchema& schema, bool require_label = true) {
  std::vector<Dataset> parts;
  for (const TaggedFile& f : files)
    parts.push_back(load_dataset(f.path, f.language, split, schema, require_label));
  return merge(parts);
}

// ---- subcommands ------------------------------------------------------

int cmd_stats(const std::vector<std::string>& train_specs,
              const std::vector<std::string>& dev_specs,
              const std::vector<std::string>& test_specs,
              const ColumnSchema& schema, const std::string& out_path) {
  std::vector<Dataset> datasets;
  for (const TaggedFile& f : parse_tagged_list(train_specs))
    datasets.push_back(load_dataset(f.path, f.language, Split::train, schema));
  for (const TaggedFile& f : parse_tagged_list(dev_specs))
    datasets.push_back(load_dataset(f.path, f.language, Split::dev, schema));
  for (const TaggedFile& f : parse_tagged_list(test_specs))
    datasets.push_back(load_dataset(f.path, f.language, Split::test, schema));
  if (datasets.empty()) throw CorpusError("stats: no input files given");

  const std::string table = stats_to_tsv(compute_stats(datasets));
  if (out_path.empty()) {
    std::cout << table;
  } else {
    RunManifest m;
    for (const Dataset& d : datasets)
      for (const std::string& p : d.provenance) m.set("input:" + p, std::string("1"));
    write_output(out_path, m, table);
  }
  return 0;
}

int cmd_train(const std::vector<std::string>& train_specs,
              const ColumnSchema& schema, TrainFlags& flags,
              const std::string& model_path, std::string manifest_path,
              const std::string& log_path) {
  const Dataset train_data =
      load_merged(parse_tagged_list(train_specs), Split::train, schema);

  RunManifest manifest;
  flags.fill_manifest(manifest);
  for (std::size_t i = 0; i < train_specs.size(); ++i)
    manifest.set("train_file:" + std::to_string(i), train_specs[i]);
  manifest.set("model_path", model_path);
  if (manifest_path.empty()) manifest_path = model_path + ".manifest";
  manifest.write(manifest_path);  // before any training step

  std::vector<TrainLogEntry> log;
  const EnsembleModel model =
      train_ensemble(train_data, flags.config, log_path.empty() ? nullptr : &log);
  save_model(model, model_path);

  if (!log_path.empty()) {
    std::ostringstream body;
    body.precision(17);
    body << "step\tj_cwd\tj_li\tj_joint\n";
    for (const TrainLogEntry& e : log)
      body << e.step << '\t' << e.j_cwd << '\t' << e.j_li << '\t' << e.j_joint
           << '\n';
    write_output(log_path, manifest, body.str());
  }
  std::cerr << "trained " << model.members.size() << " members on "
            << train_data.size() << " samples\n";
  return 0;
}

int cmd_predict(const std::string& model_path,
                const std::vector<std::string>& data_specs,
                const ColumnSchema& schema, const std::string& out_path) {
  const EnsembleModel model = load_model(model_path);
  Dataset data;
  {
    std::vector<Dataset> parts;
    for (const TaggedFile& f : parse_tagged_list(data_specs))
      parts.push_back(load_dataset(f.path, f.language, Split::test, schema,
                                   /*require_label=*/false));
    data = merge(parts);
  }
  const std::vector<Prediction> predictions = predict(model, data);

  RunManifest manifest;
  manifest.set("model_path", model_path);
  manifest.set("run_id", model.config.run_id);
  const std::string body = predictions_to_tsv(predictions, model.config.run_id);
  if (out_path.empty())
    std::cout << body;
  else
    write_output(out_path, manifest, body);
  return 0;
}

std::vector<Prediction> read_predictions_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open prediction file: " + path);
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    Prediction p;
    std::string score;
    if (!std::getline(fields, p.topic_id, '\t') ||
        !std::getline(fields, p.id, '\t') || !std::getline(fields, score, '\t'))
      throw CorpusError(path + ":" + std::to_string(line_no) +
                        ": expected topic<TAB>id<TAB>score<TAB>run_id");
    p.score = std::stod(score);
    out.push_back(std::move(p));
  }
  return out;
}

int cmd_evaluate(const std::string& gold_spec, const std::string& pred_path,
                 const ColumnSchema& schema, const std::string& out_path) {
  const TaggedFile gold_file = parse_tagged(gold_spec);
  const Dataset gold_data =
      load_dataset(gold_file.path, gold_file.language, Split::test, schema);
  const std::vector<Prediction> predictions = read_predictions_tsv(pred_path);

  const MetricsReport report =
      evaluate(predictions, gold_from_dataset(gold_data));
  const std::string body =
      report_header_tsv() + "\n" + report_row_tsv(report) + "\n";
  if (out_path.empty()) {
    std::cout << body;
  } else {
    RunManifest manifest;
    manifest.set("gold", gold_spec);
    manifest.set("predictions", pred_path);
    write_output(out_path, manifest, body);
  }
  if (!report.map)
    throw UndefinedMetricError(
        "evaluate: MAP/R-Rank/R-Prec undefined (gold has no positives)");
  return 0;
}

int cmd_sweep(const std::vector<std::string>& train_specs,
              const std::vector<std::string>& dev_specs,
              const ColumnSchema& schema, TrainFlags& flags,
              std::vector<double> alphas, const std::string& out_path) {
  const Dataset train_data =
      load_merged(parse_tagged_list(train_specs), Split::train, schema);
  const Dataset dev_data =
      load_merged(parse_tagged_list(dev_specs), Split::dev, schema);
  if (alphas.empty()) alphas = {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

  RunManifest manifest;
  flags.fill_manifest(manifest);
  for (double a : alphas) manifest.set("sweep_alpha:" + std::to_string(a), a);

  const SweepResult result = alpha_sweep(train_data, dev_data, flags.config, alphas);

  std::ostringstream body;
  body << "alpha\t" << report_header_tsv() << '\n';
  body.setf(std::ios::fixed);
  body.precision(4);
  for (const SweepRow& row : result.rows)
    body << row.alpha << '\t' << report_row_tsv(row.report) << '\n';
  body << "# argmax_alpha_by_map\t" << result.best_alpha << '\n';

  if (out_path.empty())
    std::cout << body.str();
  else
    write_output(out_path, manifest, body.str());
  return 0;
}

int cmd_baseline(const std::vector<std::string>& train_specs,
                 const std::vector<std::string>& gold_specs,
                 const ColumnSchema& schema, bool pooled, double lambda,
                 int epochs, std::uint64_t seed, int min_df,
                 const std::string& out_path, const std::string& report_path) {
  const std::vector<TaggedFile> train_files = parse_tagged_list(train_specs);
  const std::vector<TaggedFile> gold_files = parse_tagged_list(gold_specs);

  RunManifest manifest;
  manifest.set("lambda", lambda);
  manifest.set("epochs", static_cast<long long>(epochs));
  manifest.set("seed", seed);
  manifest.set("min_df", static_cast<long long>(min_df));
  manifest.set("pooled", std::string(pooled ? "true" : "false"));

  std::ostringstream predictions_body, report_body;
  report_body << "language\t" << report_header_tsv() << '\n';

  auto run_one = [&](const Dataset& train, const Dataset& gold,
                     const std::string& tag) {
    const UnigramVectorizer vectorizer = fit_vectorizer(train, min_df);
    const SvmTrainResult trained =
        train_svm(train, vectorizer, lambda, epochs, seed);
    const std::vector<Prediction> preds =
        svm_score(trained.model, vectorizer, gold);
    predictions_body << predictions_to_tsv(preds, "svm-" + tag);
    const MetricsReport report = evaluate(preds, gold_from_dataset(gold));
    report_body << tag << '\t' << report_row_tsv(report) << '\n';
  };

  if (pooled) {
    std::vector<Dataset> parts;
    for (const TaggedFile& f : train_files)
      parts.push_back(load_dataset(f.path, f.language, Split::train, schema));
    const Dataset train = merge(parts);
    for (const TaggedFile& g : gold_files)
      run_one(train, load_dataset(g.path, g.language, Split::test, schema),
              to_string(g.language));
  } else {
    for (const TaggedFile& g : gold_files) {
      const TaggedFile* match = nullptr;
      for (const TaggedFile& t : train_files)
        if (t.language == g.language) match = &t;
      if (!match)
        throw CorpusError(std::string("baseline: no training file for language ") +
                          to_string(g.language));
      run_one(load_dataset(match->path, match->language, Split::train, schema),
              load_dataset(g.path, g.language, Split::test, schema),
              to_string(g.language));
    }
  }

  if (out_path.empty())
    std::cout << predictions_body.str();
  else
    write_output(out_path, manifest, predictions_body.str());
  if (report_path.empty())
    std::cout << report_body.str();
  else
    write_output(report_path, manifest, report_body.str());
  return 0;
}

int cmd_project(const std::string& model_path,
                const std::vector<std::string>& data_specs,
                const ColumnSchema& schema, const std::string& method,
                int member, double perplexity, int iterations,
                std::uint64_t seed, const std::string& out_path,
                const std::string& embeddings_path) {
  const EnsembleModel model = load_model(model_path);
  Dataset data;
  {
    std::vector<Dataset> parts;
    for (const TaggedFile& f : parse_tagged_list(data_specs))
      parts.push_back(load_dataset(f.path, f.language, Split::test, schema,
                                   /*require_label=*/false));
    data = merge(parts);
  }

  const EmbeddingMatrix embeddings = extract_embeddings(model, data, member);
  RunManifest manifest;
  manifest.set("model_path", model_path);
  manifest.set("method", method);
  manifest.set("seed", seed);

  if (!embeddings_path.empty())
    write_output(embeddings_path, manifest, embeddings_to_tsv(embeddings));

  ProjectionResult result;
  if (method == "pca") {
    result = pca_2d(embeddings);
    std::cerr << "explained variance ratios: "
              << result.explained_variance_ratio[0] << ", "
              << result.explained_variance_ratio[1] << '\n';
  } else if (method == "tsne") {
    result = tsne_2d(embeddings, perplexity, iterations, seed);
    std::cerr << "final KL: " << result.kl_trace.back().second << '\n';
  } else {
    throw CorpusError("project: unknown method '" + method + "'");
  }

  const std::string body = projection_to_tsv(result, embeddings.meta);
  if (out_path.empty())
    std::cout << body;
  else
    write_output(out_path, manifest, body);

  // language-pair overlap, skipped for single-language input
  std::vector<Language> langs;
  for (const EmbeddingMeta& m : embeddings.meta)
    if (std::find(langs.begin(), langs.end(), m.language) == langs.end())
      langs.push_back(m.language);
  if (langs.size() >= 2) {
    for (const auto& [pair, value] : overlap_statistic(result, embeddings.meta))
      std::cerr << "overlap " << to_string(pair.first) << "-"
                << to_string(pair.second) << ": " << value << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multilingual check-worthiness ranking experiments"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; flags override");

  ColumnSchema schema;
  std::vector<std::string> train_specs, dev_specs, test_specs, data_specs,
      gold_specs;
  std::string model_path, out_path, manifest_path, log_path, pred_path,
      gold_spec, report_path, embeddings_path, method = "tsne";
  std::vector<double> alphas;
  TrainFlags train_flags;
  TrainFlags sweep_flags;
  bool pooled = false;
  double lambda = 1e-4, perplexity = 30.0;
  int svm_epochs = 50, min_df = 2, member = -1, iterations = 1000;
  std::uint64_t seed = 1;

  auto* stats = app.add_subcommand("stats", "Table-1 style dataset statistics");
  stats->add_option("--train", train_specs, "lang:path of a training file");
  stats->add_option("--dev", dev_specs, "lang:path of a dev file");
  stats->add_option("--test", test_specs, "lang:path of a test file");
  stats->add_option("--out", out_path, "output TSV path (default stdout)");
  SchemaFlags stats_schema;
  stats_schema.attach(stats);

  auto* train = app.add_subcommand("train", "train the joint ensemble");
  train->add_option("--train", train_specs, "lang:path of a training file")
      ->required();
  train->add_option("--model", model_path, "output model file")->required();
  train->add_option("--manifest", manifest_path, "manifest path");
  train->add_option("--log", log_path, "per-step loss trace TSV");
  SchemaFlags train_schema;
  train_schema.attach(train);
  train_flags.attach(train);

  auto* predict = app.add_subcommand("predict", "score a dataset");
  predict->add_option("--model", model_path, "model file")->required();
  predict->add_option("--data", data_specs, "lang:path to score")->required();
  predict->add_option("--out", out_path, "prediction TSV path");
  SchemaFlags predict_schema;
  predict_schema.attach(predict);

  auto* evaluate = app.add_subcommand("evaluate", "ranking metrics");
  evaluate->add_option("--gold", gold_spec, "lang:path of the gold file")
      ->required();
  evaluate->add_option("--pred", pred_path, "prediction TSV")->required();
  evaluate->add_option("--out", out_path, "report TSV path");
  SchemaFlags eval_schema;
  eval_schema.attach(evaluate);

  auto* sweep = app.add_subcommand("sweep", "alpha ablation sweep");
  sweep->add_option("--train", train_specs, "lang:path of a training file")
      ->required();
  sweep->add_option("--dev", dev_specs, "lang:path of a dev file")->required();
  sweep->add_option("--alphas", alphas, "alpha grid (default 0.3..0.9)");
  sweep->add_option("--out", out_path, "sweep report TSV path");
  SchemaFlags sweep_schema;
  sweep_schema.attach(sweep);
  sweep_flags.attach(sweep);

  auto* baseline = app.add_subcommand("baseline", "unigram SVM baseline");
  baseline->add_option("--train", train_specs, "lang:path of a training file")
      ->required();
  baseline->add_option("--gold", gold_specs, "lang:path to score and evaluate")
      ->required();
  baseline->add_flag("--pooled", pooled, "train one model on the merged pool");
  baseline->add_option("--lambda", lambda, "hinge regularization");
  baseline->add_option("--epochs", svm_epochs, "subgradient epochs");
  baseline->add_option("--seed", seed, "shuffle seed");
  baseline->add_option("--min-df", min_df, "vocabulary document-frequency floor");
  baseline->add_option("--out", out_path, "prediction TSV path");
  baseline->add_option("--report", report_path, "metrics TSV path");
  SchemaFlags baseline_schema;
  baseline_schema.attach(baseline);

  auto* project = app.add_subcommand("project", "2-D embedding projection");
  project->add_option("--model", model_path, "model file")->required();
  project->add_option("--data", data_specs, "lang:path to project")->required();
  project->add_option("--method", method, "pca or tsne");
  project->add_option("--member", member, "member index, -1 = mean");
  project->add_option("--perplexity", perplexity, "tsne perplexity");
  project->add_option("--iterations", iterations, "tsne iterations");
  project->add_option("--seed", seed, "tsne init seed");
  project->add_option("--out", out_path, "coordinates TSV path");
  project->add_option("--embeddings-out", embeddings_path,
                      "raw shared-representation TSV");
  SchemaFlags project_schema;
  project_schema.attach(project);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (stats->parsed())
      return cmd_stats(train_specs, dev_specs, test_specs, stats_schema.schema,
                       out_path);
    if (train->parsed())
      return cmd_train(train_specs, train_schema.schema, train_flags,
                       model_path, manifest_path, log_path);
    if (predict->parsed())
      return cmd_predict(model_path, data_specs, predict_schema.schema, out_path);
    if (evaluate->parsed())
      return cmd_evaluate(gold_spec, pred_path, eval_schema.schema, out_path);
    if (sweep->parsed())
      return cmd_sweep(train_specs, dev_specs, sweep_schema.schema, sweep_flags,
                       alphas, out_path);
    if (baseline->parsed())
      return cmd_baseline(train_specs, gold_specs, baseline_schema.schema,
                          pooled, lambda, svm_epochs, seed, min_df, out_path,
                          report_path);
    if (project->parsed())
      return cmd_project(model_path, data_specs, project_schema.schema, method,
                         member, perplexity, iterations, seed, out_path,
                         embeddings_path);
  } catch (const UndefinedMetricError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUndefinedMetric;
  } catch (const CorpusError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ModelFileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
