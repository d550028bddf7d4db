// Command-line front end: dataset statistics, validation splits, training,
// prediction, evaluation, submission validation and gradient checking.
//
// Exit codes: 0 success, 1 validation/metric failure, 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mlc/checkpoint.hpp"
#include "mlc/gradcheck.hpp"
#include "mlc/io.hpp"
#include "mlc/label_space.hpp"
#include "mlc/losses.hpp"
#include "mlc/metrics.hpp"
#include "mlc/model.hpp"
#include "mlc/training.hpp"

namespace {

int cmd_stats(const std::string& data, std::size_t top_n, std::size_t max_count) {
  const mlc::Dataset d = mlc::load_dataset(data);
  std::cout << mlc::stats_to_csv(d, top_n, max_count);
  return 0;
}

int cmd_split(const std::string& data, std::uint64_t seed, const std::string& out_dir) {
  const mlc::Dataset d = mlc::load_dataset(data);
  const auto [val1, val2] = mlc::split_validation(d, seed);
  std::filesystem::create_directories(out_dir);
  for (const auto& [name, part] :
       {std::pair{std::string("val1.txt"), &val1}, {std::string("val2.txt"), &val2}}) {
    std::ofstream os(std::filesystem::path(out_dir) / name, std::ios::binary);
    for (const auto& s : part->samples) os << s.sample_id << '\n';
  }
  std::cout << "val1: " << val1.samples.size() << " samples, val2: " << val2.samples.size()
            << " samples\n";
  return 0;
}

struct TrainArgs {
  std::string train_dir, val_dir, config_path, checkpoint_path, history_path;
  // flag overrides, applied after the config file
  std::vector<std::pair<std::string, std::string>> overrides;
};

int cmd_train(const TrainArgs& args) {
  mlc::CliTrainConfig cfg;
  if (!args.config_path.empty()) cfg = mlc::load_train_config(args.config_path);
  for (const auto& [k, v] : args.overrides) mlc::apply_config_entry(cfg, k, v);

  const mlc::Dataset train_set = mlc::load_dataset(args.train_dir);
  const mlc::Dataset val_set = mlc::load_dataset(args.val_dir, &train_set.vocabulary);
  if (train_set.samples.empty()) throw std::runtime_error("empty training set");

  mlc::HeadConfig head;
  head.hidden_sizes = cfg.hidden_sizes;
  head.dropout_p = cfg.dropout;
  head.output_size = train_set.vocabulary.size();
  head.seed = cfg.training.seed;
  const mlc::ModelParams initial =
      mlc::init_model(head, train_set.samples.front().features.dim());

  const mlc::TrainResult result = mlc::train(initial, train_set, val_set, cfg.training);

  mlc::save_checkpoint(args.checkpoint_path, result.best_params, train_set.vocabulary,
                       cfg.training.threshold);
  std::ofstream os(args.history_path, std::ios::binary);
  os << mlc::history_to_csv(result.history);
  if (!os) throw std::runtime_error("cannot write history: " + args.history_path);

  double best = 0.0;
  std::size_t best_epoch = 0;
  for (const auto& r : result.history)
    if (r.val_f1 > best + 1e-12 && (best = r.val_f1, true)) best_epoch = r.epoch;
  std::cout << "trained " << result.history.size() << " epochs, best val F1 " << best
            << " at epoch " << best_epoch << '\n';
  return 0;
}

int cmd_predict(const std::string& checkpoint_path, const std::string& data,
                const std::string& out, std::optional<double> threshold) {
  const mlc::Checkpoint ckpt = mlc::load_checkpoint(checkpoint_path);
  const mlc::Dataset d = mlc::load_dataset(data, &ckpt.vocabulary);
  const mlc::Matrix x = mlc::features_to_matrix(d.samples);
  const mlc::Matrix scores = mlc::forward(ckpt.params, x, mlc::RunMode::eval);
  std::vector<std::string> ids;
  for (const auto& s : d.samples) ids.push_back(s.sample_id);
  const auto records = mlc::predictions_to_records(scores, ids, ckpt.vocabulary,
                                              threshold.value_or(ckpt.threshold));
  mlc::write_submission(records, out);
  std::cout << "wrote " << records.size() << " predictions to " << out << '\n';
  return 0;
}

int cmd_evaluate(const std::string& truth_path, const std::string& pred_path) {
  const auto truth_rows = mlc::parse_concepts_file(truth_path);
  const auto pred_rows = mlc::parse_concepts_file(pred_path);
  std::map<std::string, std::set<mlc::ConceptId>> pred_by_id;
  for (const auto& r : pred_rows)
    pred_by_id[r.sample_id] = std::set<mlc::ConceptId>(r.concepts.begin(), r.concepts.end());

  std::vector<std::set<mlc::ConceptId>> all_sets;
  for (const auto& r : truth_rows)
    all_sets.emplace_back(r.concepts.begin(), r.concepts.end());
  for (const auto& r : pred_rows)
    all_sets.emplace_back(r.concepts.begin(), r.concepts.end());
  const mlc::LabelVocabulary vocab = mlc::build_vocabulary(all_sets);

  std::vector<mlc::MultiHotVector> truths, preds;
  for (const auto& r : truth_rows) {
    truths.push_back(
        mlc::encode(std::set<mlc::ConceptId>(r.concepts.begin(), r.concepts.end()), vocab));
    auto it = pred_by_id.find(r.sample_id);
    preds.push_back(it == pred_by_id.end() ? mlc::MultiHotVector(vocab.size())
                                           : mlc::encode(it->second, vocab));
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g\n", mlc::mean_f1(truths, preds));
  std::cout << buf;
  return 0;
}

int cmd_validate_submission(const std::string& path, const std::string& vocab_from) {
  std::optional<mlc::LabelVocabulary> vocab;
  if (!vocab_from.empty()) {
    std::vector<std::set<mlc::ConceptId>> sets;
    for (const auto& r : mlc::parse_concepts_file(vocab_from))
      sets.emplace_back(r.concepts.begin(), r.concepts.end());
    vocab = mlc::build_vocabulary(sets);
  }
  const auto violations = mlc::validate_submission(path, vocab ? &*vocab : nullptr);
  if (violations.empty()) {
    std::cout << "ok\n";
    return 0;
  }
  for (const auto& v : violations) std::cerr << v << '\n';
  std::cerr << violations.size() << " violation(s)\n";
  return 1;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t instances) {
  std::mt19937_64 rng(seed);
  const std::vector<mlc::LossKind> kinds = {
      mlc::LossKind::bce, mlc::LossKind::one_minus_soft_f1, mlc::LossKind::product,
      mlc::LossKind::sum};
  mlc::HeadConfig head;
  head.hidden_sizes = {2};
  head.dropout_p = 0.0;
  head.output_size = 3;
  bool ok = true;
  for (auto kind : kinds) {
    mlc::LossSpec spec{kind, 1e-7};
    double loss_err = 0.0, model_err = 0.0;
    for (std::size_t i = 0; i < instances; ++i) {
      loss_err = std::max(loss_err, mlc::loss_gradient_max_rel_error(spec, 3, 5, rng));
      model_err = std::max(model_err, mlc::model_gradient_max_rel_error(spec, head, 4, 3, rng));
    }
    const bool pass = loss_err < 1e-4 && model_err < 1e-4;
    ok = ok && pass;
    std::printf("%-10s max rel error: loss-grad %.3e, param-grad %.3e  [%s]\n",
                mlc::loss_kind_name(kind), loss_err, model_err, pass ? "ok" : "FAIL");
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-label concept classification toolkit"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::string data, out_dir = ".", truth_path, pred_path, checkpoint_path, submission_path,
              vocab_from;
  std::size_t top_n = 30, max_count = 50, instances = 20;
  std::uint64_t seed = 0;
  double threshold_flag = -1.0;

  auto* stats = app.add_subcommand("stats", "Label statistics and histograms as CSV");
  stats->add_option("--data", data, "dataset directory")->required();
  stats->add_option("--top", top_n, "top-N concepts in the frequency histogram");
  stats->add_option("--max-count", max_count, "truncation of the per-image CUI count histogram");

  auto* split = app.add_subcommand("split", "Shuffle and halve a dataset into val1/val2");
  split->add_option("--data", data, "dataset directory")->required();
  split->add_option("--seed", seed, "shuffle seed")->required();
  split->add_option("--out", out_dir, "output directory for val1.txt/val2.txt");

  TrainArgs targs;
  auto* train = app.add_subcommand("train", "Train the classification head");
  train->add_option("--train", targs.train_dir, "training dataset directory")->required();
  train->add_option("--val", targs.val_dir, "validation dataset directory")->required();
  train->add_option("--config", targs.config_path, "key=value training config file");
  train->add_option("--checkpoint", targs.checkpoint_path, "output checkpoint")->required();
  train->add_option("--history", targs.history_path, "output history CSV")->required();
  std::map<std::string, std::string> flag_keys = {
      {"--loss", "loss"},           {"--batch-size", "batch_size"},
      {"--lr", "learning_rate"},    {"--epochs", "max_epochs"},
      {"--threshold", "threshold"}, {"--hidden", "hidden_sizes"},
      {"--dropout", "dropout"},     {"--augment", "augmentation"},
      {"--es-patience", "es_patience"}};
  std::map<std::string, std::string> flag_values;
  for (const auto& [flag, key] : flag_keys)
    train->add_option(flag, flag_values[flag], "overrides config key " + key);
  train->add_option("--seed", flag_values["--seed"], "overrides config key seed")->required();

  auto* predict = app.add_subcommand("predict", "Write a submission file from a checkpoint");
  predict->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  predict->add_option("--data", data, "input dataset directory")->required();
  predict->add_option("--out", submission_path, "output submission file")->required();
  predict->add_option("--threshold", threshold_flag, "override the checkpoint threshold");

  auto* evaluate = app.add_subcommand("evaluate", "Mean F1 between two concepts files");
  evaluate->add_option("--truth", truth_path, "ground-truth concepts file")->required();
  evaluate->add_option("--pred", pred_path, "predicted concepts file")->required();

  auto* validate = app.add_subcommand("validate-submission", "Check submission constraints");
  validate->add_option("--file", submission_path, "submission file")->required();
  validate->add_option("--vocab-from", vocab_from, "concepts file defining the vocabulary");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--seed", seed, "rng seed")->required();
  gradcheck->add_option("--instances", instances, "random instances per loss");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (stats->parsed()) return cmd_stats(data, top_n, max_count);
    if (split->parsed()) return cmd_split(data, seed, out_dir);
    if (train->parsed()) {
      // flags override file values; --seed is always explicit
      for (const auto& [flag, key] : flag_keys)
        if (train->count(flag)) targs.overrides.emplace_back(key, flag_values[flag]);
      targs.overrides.emplace_back("seed", flag_values["--seed"]);
      return cmd_train(targs);
    }
    if (predict->parsed())
      return cmd_predict(checkpoint_path, data, submission_path,
                         threshold_flag > 0.0 ? std::optional<double>(threshold_flag)
                                              : std::nullopt);
    if (evaluate->parsed()) return cmd_evaluate(truth_path, pred_path);
    if (validate->parsed()) return cmd_validate_submission(submission_path, vocab_from);
    if (gradcheck->parsed()) return cmd_gradcheck(seed, instances);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
