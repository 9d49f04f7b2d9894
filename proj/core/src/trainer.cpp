#include "touchpred/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "touchpred/rng.hpp"

namespace touchpred {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t kBatchShuffleStream = 0x62617463685f7065ULL;

std::vector<int> to_int_labels(const Dataset& data) {
  std::vector<int> labels(data.y.size());
  for (std::size_t i = 0; i < data.y.size(); ++i) labels[i] = data.y[i];
  return labels;
}

void validate_config(const TrainConfig& config) {
  if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (config.eval_every < 1) throw std::invalid_argument("train: eval_every must be >= 1");
  if (!(config.learning_rate > 0.0)) {
    throw std::invalid_argument("train: learning_rate must be positive");
  }
  if (config.batch_size < 0) throw std::invalid_argument("train: batch_size must be >= 0");
  if (config.seeds.empty()) throw std::invalid_argument("train: seeds must be non-empty");
  std::unordered_set<std::uint64_t> seen(config.seeds.begin(), config.seeds.end());
  if (seen.size() != config.seeds.size()) {
    throw std::invalid_argument("train: ensemble seeds must be distinct");
  }
}

TrainedModel train_on_matrices(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train,
                               const Eigen::MatrixXd& x_val, const std::vector<int>& val_labels,
                               const TrainConfig& config, std::uint64_t seed) {
  AdamConfig adam_config;
  adam_config.learning_rate = config.learning_rate;

  TrainedModel model;
  model.init_seed = seed;
  model.loss_trace.reserve(static_cast<std::size_t>(config.epochs));

  NetworkParams params = init_params(config.arch, seed);
  AdamState adam = make_adam_state(params, adam_config);
  NetworkParams best = params;
  double best_auroc = -1.0;
  int best_epoch = 0;

  const auto n = static_cast<std::int64_t>(x_train.rows());
  rng::Engine shuffler = rng::Engine::streamed(seed, kBatchShuffleStream);
  std::vector<std::int64_t> order;
  if (config.batch_size > 0) {
    order.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  }

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    if (config.batch_size == 0 || config.batch_size >= n) {
      LossGrad lg = loss_and_grad(params, x_train, y_train);
      adam_step(adam, params, lg.gradients);
      epoch_loss = lg.loss;
    } else {
      shuffler.shuffle(order.begin(), order.end());
      for (std::int64_t start = 0; start < n; start += config.batch_size) {
        const std::int64_t count = std::min<std::int64_t>(config.batch_size, n - start);
        Eigen::MatrixXd xb(count, x_train.cols());
        Eigen::VectorXd yb(count);
        for (std::int64_t r = 0; r < count; ++r) {
          xb.row(r) = x_train.row(order[static_cast<std::size_t>(start + r)]);
          yb(r) = y_train(order[static_cast<std::size_t>(start + r)]);
        }
        LossGrad lg = loss_and_grad(params, xb, yb);
        adam_step(adam, params, lg.gradients);
        epoch_loss += lg.loss * static_cast<double>(count);
      }
      epoch_loss /= static_cast<double>(n);
    }
    if (!std::isfinite(epoch_loss)) {
      throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
    }
    model.loss_trace.push_back(epoch_loss);

    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      Eigen::VectorXd scores = forward_batch(params, x_val);
      const std::vector<double> score_vec(scores.data(), scores.data() + scores.size());
      const double val_auroc = auroc(score_vec, val_labels);
      if (val_auroc > best_auroc) {  // ties keep the earliest epoch
        best_auroc = val_auroc;
        best_epoch = epoch;
        best = params;
      }
    }
  }

  model.params = std::move(best);
  model.best_epoch = best_epoch;
  model.best_val_auroc = best_auroc;
  return model;
}

}  // namespace

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("TOUCHPRED_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

TrainedModel train_model(const Dataset& train, const Dataset& val, const TrainConfig& config,
                         std::uint64_t seed) {
  validate_config(config);
  if (train.empty() || val.empty()) {
    throw std::invalid_argument("train: train and validation sets must be non-empty");
  }
  return train_on_matrices(train.feature_matrix(), train.label_vector(), val.feature_matrix(),
                           to_int_labels(val), config, seed);
}

EnsembleModel train_ensemble(const Dataset& train, const Dataset& val, const TrainConfig& config) {
  validate_config(config);
  if (train.empty() || val.empty()) {
    throw std::invalid_argument("train: train and validation sets must be non-empty");
  }
  const Eigen::MatrixXd x_train = train.feature_matrix();
  const Eigen::VectorXd y_train = train.label_vector();
  const Eigen::MatrixXd x_val = val.feature_matrix();
  const std::vector<int> val_labels = to_int_labels(val);

  const std::size_t member_count = config.seeds.size();
  std::vector<TrainedModel> members(member_count);
  const int threads =
      std::min<int>(resolve_threads(config.threads), static_cast<int>(member_count));

  // Members are independent given their seeds, so any schedule yields the
  // same models; exceptions are rethrown on the calling thread.
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= member_count) return;
      try {
        members[k] =
            train_on_matrices(x_train, y_train, x_val, val_labels, config, config.seeds[k]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  EnsembleModel ensemble;
  ensemble.members = std::move(members);
  ensemble.arch = config.arch;
  ensemble.rule = config.threshold_rule;
  ensemble.threshold = select_threshold(ensemble, val, config.threshold_rule);
  return ensemble;
}

Eigen::VectorXd ensemble_scores(const EnsembleModel& ensemble, const Eigen::MatrixXd& X) {
  if (ensemble.members.empty()) {
    throw std::invalid_argument("ensemble_scores: ensemble has no members");
  }
  Eigen::VectorXd total = Eigen::VectorXd::Zero(X.rows());
  for (const TrainedModel& member : ensemble.members) {
    total += forward_batch(member.params, X);
  }
  return total / static_cast<double>(ensemble.members.size());
}

double ensemble_predict(const EnsembleModel& ensemble, const Eigen::VectorXd& x) {
  Eigen::MatrixXd row(1, x.size());
  row.row(0) = x.transpose();
  return ensemble_scores(ensemble, row)(0);
}

double select_threshold(const EnsembleModel& ensemble, const Dataset& val, ThresholdRule rule) {
  const Eigen::VectorXd scores = ensemble_scores(ensemble, val.feature_matrix());
  const std::vector<double> score_vec(scores.data(), scores.data() + scores.size());
  return select_threshold_scores(score_vec, to_int_labels(val), rule).threshold;
}

int classify(const EnsembleModel& ensemble, const Eigen::VectorXd& x) {
  return ensemble_predict(ensemble, x) > ensemble.threshold ? 1 : 0;
}

std::string ensemble_to_json_string(const EnsembleModel& ensemble) {
  ordered_json doc;
  doc["format"] = "touchpred-ensemble-v1";
  doc["architecture"] = {{"input_dim", ensemble.arch.input_dim},
                         {"hidden", ensemble.arch.hidden},
                         {"output_dim", ensemble.arch.output_dim}};
  doc["threshold"] = ensemble.threshold;
  doc["threshold_rule"] = threshold_rule_name(ensemble.rule);
  ordered_json members = ordered_json::array();
  for (const TrainedModel& member : ensemble.members) {
    ordered_json m;
    m["best_epoch"] = member.best_epoch;
    m["best_val_auroc"] = member.best_val_auroc;
    m["params"] = ordered_json::parse(params_to_json_string(member.params, member.init_seed));
    members.push_back(std::move(m));
  }
  doc["members"] = std::move(members);
  return doc.dump(2) + "\n";
}

EnsembleModel ensemble_from_json_string(const std::string& text) {
  const ordered_json doc = ordered_json::parse(text);
  if (!doc.contains("members") || !doc["members"].is_array() || doc["members"].empty()) {
    throw std::runtime_error("ensemble: missing or empty members array");
  }
  EnsembleModel ensemble;
  const auto& arch_json = doc.at("architecture");
  ensemble.arch.input_dim = arch_json.at("input_dim").get<int>();
  ensemble.arch.hidden = arch_json.at("hidden").get<std::vector<int>>();
  ensemble.arch.output_dim = arch_json.at("output_dim").get<int>();
  ensemble.threshold = doc.at("threshold").get<double>();
  ensemble.rule = threshold_rule_from_name(doc.at("threshold_rule").get<std::string>());
  for (const auto& m : doc.at("members")) {
    TrainedModel member;
    member.best_epoch = m.at("best_epoch").get<int>();
    member.best_val_auroc = m.at("best_val_auroc").get<double>();
    member.params = params_from_json_string(m.at("params").dump(), &member.init_seed);
    if (!(member.params.architecture() == ensemble.arch)) {
      throw std::runtime_error("ensemble: member architecture mismatch");
    }
    ensemble.members.push_back(std::move(member));
  }
  return ensemble;
}

void save_ensemble(const EnsembleModel& ensemble, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << ensemble_to_json_string(ensemble);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

EnsembleModel load_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ensemble_from_json_string(text);
}

}  // namespace touchpred
