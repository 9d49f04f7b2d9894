// Command-line front end: generate -> train -> evaluate / compare /
// attribute / roc-export with file-based handoff between stages.

#include <CLI11.hpp>
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "touchpred/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"touchpoint purchase-prediction pipeline"};
  app.require_subcommand(1);

  touchpred::GenerateOptions gen;
  CLI::App* generate = app.add_subcommand(
      "generate", "Generate a synthetic population (events.csv, purchases.csv, groundtruth.json)");
  generate->add_option("--scenario", gen.scenario, "Planted mechanism: default, interaction, decay")
      ->capture_default_str();
  generate->add_option("--users", gen.n_users, "Number of users")->capture_default_str();
  generate->add_option("--months", gen.months, "Collection window length in months")
      ->capture_default_str();
  generate->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  generate->add_option("--out", gen.out_dir, "Output directory")->required();
  generate->callback([&] {
    touchpred::run_generate(gen);
    std::cout << "generate: wrote " << gen.out_dir.string() << "\n";
  });

  touchpred::TrainOptions train;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Train the ensemble (ensemble.json, metrics.json)");
  train_cmd->add_option("--data", train.data_dir, "Data directory from `generate`")->required();
  train_cmd->add_option("--out", train.out_dir, "Output directory")->required();
  train_cmd->add_option("--lookback", train.lookback, "Lookback preset: 1m, 3m, 12m, full")
      ->capture_default_str();
  train_cmd->add_option("--profile", train.profile, "desk (500 epochs, K=5) or paper (10000, K=10)")
      ->capture_default_str();
  train_cmd->add_option("--rule", train.rule, "Threshold rule: arithmetic or geometric")
      ->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "Seed for windows, split, and members")
      ->capture_default_str();
  train_cmd->add_option("--epochs", train.epochs_override, "Override profile epoch count");
  train_cmd->add_option("--members", train.members_override, "Override profile ensemble size");
  train_cmd->add_option("--threads", train.threads,
                        "Worker threads (0 = TOUCHPRED_THREADS env or hardware)");
  train_cmd->callback([&] {
    touchpred::run_train(train);
    std::cout << "train: wrote " << train.out_dir.string() << "\n";
  });

  touchpred::EvaluateOptions eval;
  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "Evaluate a trained ensemble on its test split");
  eval_cmd->add_option("--data", eval.data_dir, "Data directory")->required();
  eval_cmd->add_option("--model", eval.model_dir, "Model directory from `train`")->required();
  eval_cmd->add_option("--out", eval.out_dir, "Output directory")->required();
  eval_cmd->callback([&] {
    touchpred::run_evaluate(eval);
    std::cout << "evaluate: wrote " << eval.out_dir.string() << "\n";
  });

  touchpred::CompareOptions cmp;
  CLI::App* cmp_cmd =
      app.add_subcommand("compare", "Compare the ensemble against baselines (comparison.csv)");
  cmp_cmd->add_option("--data", cmp.data_dir, "Data directory")->required();
  cmp_cmd->add_option("--model", cmp.model_dir, "Model directory")->required();
  cmp_cmd->add_option("--out", cmp.out_dir, "Output directory")->required();
  cmp_cmd->add_option("--baselines", cmp.baselines, "Comma list from: logistic, nb, knn")
      ->capture_default_str();
  cmp_cmd->callback([&] {
    touchpred::run_compare(cmp);
    std::cout << "compare: wrote " << cmp.out_dir.string() << "\n";
  });

  touchpred::AttributeOptions attr;
  CLI::App* attr_cmd = app.add_subcommand(
      "attribute", "Shapley attribution over test rows (importance.csv, beeswarm.csv)");
  attr_cmd->add_option("--data", attr.data_dir, "Data directory")->required();
  attr_cmd->add_option("--model", attr.model_dir, "Model directory")->required();
  attr_cmd->add_option("--out", attr.out_dir, "Output directory")->required();
  attr_cmd->add_option("--rows", attr.rows, "Test rows to attribute")->capture_default_str();
  attr_cmd->add_option("--background", attr.background, "Background sample size")
      ->capture_default_str();
  attr_cmd->add_option("--nperm", attr.n_perm, "Permutations per row")->capture_default_str();
  attr_cmd->add_option("--threads", attr.threads,
                       "Worker threads (0 = TOUCHPRED_THREADS env or hardware)");
  attr_cmd->callback([&] {
    touchpred::run_attribute(attr);
    std::cout << "attribute: wrote " << attr.out_dir.string() << "\n";
  });

  touchpred::RocExportOptions roc;
  CLI::App* roc_cmd =
      app.add_subcommand("roc-export", "Export the test ROC curve (roc.csv, metrics.json)");
  roc_cmd->add_option("--data", roc.data_dir, "Data directory")->required();
  roc_cmd->add_option("--model", roc.model_dir, "Model directory")->required();
  roc_cmd->add_option("--out", roc.out_dir, "Output directory")->required();
  roc_cmd->callback([&] {
    touchpred::run_roc_export(roc);
    std::cout << "roc-export: wrote " << roc.out_dir.string() << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
