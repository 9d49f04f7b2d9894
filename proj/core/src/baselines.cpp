#include "touchpred/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "touchpred/mlp.hpp"
#include "text_io.hpp"

namespace touchpred {

namespace {

struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // population stddev, 1.0 where a column is constant
};

Standardizer fit_standardizer(const Eigen::MatrixXd& X) {
  Standardizer s;
  const auto n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean();
  Eigen::MatrixXd centered = X.rowwise() - s.mean.transpose();
  s.scale = (centered.array().square().colwise().sum() / n).sqrt();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    if (s.scale(j) == 0.0) s.scale(j) = 1.0;
  }
  return s;
}

Eigen::MatrixXd apply_standardizer(const Standardizer& s, const Eigen::MatrixXd& X) {
  return (X.rowwise() - s.mean.transpose()).array().rowwise() / s.scale.transpose().array();
}

void require_both_classes(const Dataset& train, const char* who) {
  bool has_pos = false;
  bool has_neg = false;
  for (std::int8_t y : train.y) (y != 0 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    throw std::invalid_argument(std::string(who) + ": training data needs both classes");
  }
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

template <typename Model>
MetricsSummary evaluate_model(const Model& model, const Dataset& val, const Dataset& test,
                              ThresholdRule rule) {
  const Eigen::VectorXd val_scores = model.scores(val.feature_matrix());
  const Eigen::VectorXd test_scores = model.scores(test.feature_matrix());
  std::vector<int> val_labels(val.y.begin(), val.y.end());
  std::vector<int> test_labels(test.y.begin(), test.y.end());
  const std::vector<double> vs(val_scores.data(), val_scores.data() + val_scores.size());
  const std::vector<double> ts(test_scores.data(), test_scores.data() + test_scores.size());
  const double tau = select_threshold_scores(vs, val_labels, rule).threshold;
  return summarize_at(ts, test_labels, tau);
}

}  // namespace

double LogisticModel::predict(const Eigen::VectorXd& x) const {
  return sigmoid(weights.dot(x) + bias);
}

Eigen::VectorXd LogisticModel::scores(const Eigen::MatrixXd& X) const {
  Eigen::ArrayXd z = (X * weights).array() + bias;
  return (1.0 / (1.0 + (-z).exp())).matrix();
}

LogisticModel fit_logistic(const Dataset& train, const LogisticConfig& config) {
  require_both_classes(train, "fit_logistic");
  if (config.epochs < 1) throw std::invalid_argument("fit_logistic: epochs must be >= 1");
  if (!(config.learning_rate > 0.0)) {
    throw std::invalid_argument("fit_logistic: learning_rate must be positive");
  }

  const Eigen::MatrixXd x_raw = train.feature_matrix();
  const Eigen::VectorXd y = train.label_vector();
  const Standardizer std_fit = fit_standardizer(x_raw);
  const Eigen::MatrixXd x_std = apply_standardizer(std_fit, x_raw);
  const double lambda =
      config.l2 >= 0.0 ? config.l2 : 1.0 / static_cast<double>(train.size());

  // A single sigmoid layer is exactly logistic regression, so the network
  // loss/optimizer path is reused; the L2 term touches weights only.
  Architecture arch;
  arch.input_dim = static_cast<int>(x_std.cols());
  arch.hidden.clear();
  arch.output_dim = 1;
  NetworkParams params = zeros_like(init_params(arch, 0));
  AdamConfig adam_config;
  adam_config.learning_rate = config.learning_rate;
  AdamState adam = make_adam_state(params, adam_config);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    LossGrad lg = loss_and_grad(params, x_std, y);
    lg.gradients.weights[0] += 2.0 * lambda * params.weights[0];
    adam_step(adam, params, lg.gradients);
  }

  LogisticModel model;
  const Eigen::VectorXd w_std = params.weights[0].col(0);
  model.weights = (w_std.array() / std_fit.scale.array()).matrix();
  model.bias = params.biases[0](0) - (w_std.array() * std_fit.mean.array() /
                                      std_fit.scale.array())
                                         .sum();
  return model;
}

double GaussianNBModel::predict(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd z = log1p_features ? x.array().log1p().matrix() : x;
  auto log_likelihood = [&](const Eigen::VectorXd& mean, const Eigen::VectorXd& var,
                            double log_prior) {
    const Eigen::ArrayXd d = (z - mean).array();
    return log_prior -
           0.5 * (d.square() / var.array() + var.array().log() + std::log(2.0 * std::numbers::pi))
                     .sum();
  };
  const double lp = log_likelihood(mean_pos, var_pos, log_prior_pos);
  const double ln = log_likelihood(mean_neg, var_neg, log_prior_neg);
  return 1.0 / (1.0 + std::exp(ln - lp));
}

Eigen::VectorXd GaussianNBModel::scores(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict(X.row(i).transpose());
  return out;
}

GaussianNBModel fit_gaussian_nb(const Dataset& train, bool log1p_features) {
  require_both_classes(train, "fit_gaussian_nb");
  Eigen::MatrixXd X = train.feature_matrix();
  if (log1p_features) X = X.array().log1p().matrix();
  const Eigen::Index d = X.cols();

  std::vector<Eigen::Index> pos_rows;
  std::vector<Eigen::Index> neg_rows;
  for (std::size_t i = 0; i < train.y.size(); ++i) {
    (train.y[i] != 0 ? pos_rows : neg_rows).push_back(static_cast<Eigen::Index>(i));
  }

  auto moments = [&](const std::vector<Eigen::Index>& rows, Eigen::VectorXd& mean,
                     Eigen::VectorXd& var) {
    mean = Eigen::VectorXd::Zero(d);
    for (Eigen::Index r : rows) mean += X.row(r).transpose();
    mean /= static_cast<double>(rows.size());
    var = Eigen::VectorXd::Zero(d);
    for (Eigen::Index r : rows) {
      var += (X.row(r).transpose() - mean).array().square().matrix();
    }
    var /= static_cast<double>(rows.size());
  };

  GaussianNBModel model;
  moments(pos_rows, model.mean_pos, model.var_pos);
  moments(neg_rows, model.mean_neg, model.var_neg);

  // Floor relative to the largest overall feature variance (absolute floor
  // when every feature is constant).
  const Eigen::VectorXd overall_mean = X.colwise().mean();
  const Eigen::VectorXd overall_var =
      ((X.rowwise() - overall_mean.transpose()).array().square().colwise().sum() /
       static_cast<double>(X.rows()))
          .transpose();
  const double max_var = overall_var.maxCoeff();
  const double floor = max_var > 0.0 ? 1e-9 * max_var : 1e-9;
  model.var_pos = model.var_pos.cwiseMax(floor);
  model.var_neg = model.var_neg.cwiseMax(floor);

  const double n = static_cast<double>(train.size());
  model.log_prior_pos = std::log(static_cast<double>(pos_rows.size()) / n);
  model.log_prior_neg = std::log(static_cast<double>(neg_rows.size()) / n);
  model.log1p_features = log1p_features;
  return model;
}

double KnnModel::predict(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd row(1, x.size());
  row.row(0) = x.transpose();
  return scores(row)(0);
}

Eigen::VectorXd KnnModel::scores(const Eigen::MatrixXd& X) const {
  const Eigen::Index n_train = train_features.rows();
  if (n_train == 0) throw std::logic_error("knn: model has no training rows");
  const int kk = std::min<int>(k, static_cast<int>(n_train));
  const Eigen::MatrixXd Q =
      (X.rowwise() - feature_mean.transpose()).array().rowwise() /
      feature_scale.transpose().array();

  Eigen::VectorXd out(X.rows());
  const Eigen::VectorXd train_sq = train_features.rowwise().squaredNorm();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n_train));
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    // Squared distances via the expansion |t - q|^2 = |t|^2 - 2 t.q + |q|^2;
    // the |q|^2 term is constant per query and cannot change the ordering,
    // but distance ties must be exact, so compare full squared distances.
    Eigen::VectorXd dist =
        (train_sq - 2.0 * (train_features * Q.row(i).transpose())).array() +
        Q.row(i).squaredNorm();
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + kk, idx.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        if (dist(a) != dist(b)) return dist(a) < dist(b);
                        return a < b;
                      });
    int votes = 0;
    for (int j = 0; j < kk; ++j) votes += labels[static_cast<std::size_t>(idx[j])] != 0 ? 1 : 0;
    out(i) = static_cast<double>(votes) / static_cast<double>(kk);
  }
  return out;
}

KnnModel fit_knn(const Dataset& train, int k) {
  require_both_classes(train, "fit_knn");
  if (k < 1) throw std::invalid_argument("fit_knn: k must be >= 1");
  const Eigen::MatrixXd X = train.feature_matrix();
  const Standardizer s = fit_standardizer(X);
  KnnModel model;
  model.k = k;
  model.feature_mean = s.mean;
  model.feature_scale = s.scale;
  model.train_features = apply_standardizer(s, X);
  model.labels = train.y;
  return model;
}

std::vector<ComparisonRow> compare_models(const EnsembleModel& ensemble, const Dataset& train,
                                          const Dataset& val, const Dataset& test,
                                          ThresholdRule rule) {
  if (train.empty() || val.empty() || test.empty()) {
    throw std::invalid_argument("compare_models: train/val/test must be non-empty");
  }
  std::vector<ComparisonRow> rows;
  rows.reserve(4);

  {
    const Eigen::VectorXd val_scores = ensemble_scores(ensemble, val.feature_matrix());
    const Eigen::VectorXd test_scores = ensemble_scores(ensemble, test.feature_matrix());
    std::vector<int> val_labels(val.y.begin(), val.y.end());
    std::vector<int> test_labels(test.y.begin(), test.y.end());
    const std::vector<double> vs(val_scores.data(), val_scores.data() + val_scores.size());
    const std::vector<double> ts(test_scores.data(), test_scores.data() + test_scores.size());
    const double tau = select_threshold_scores(vs, val_labels, rule).threshold;
    rows.push_back({"ensemble", summarize_at(ts, test_labels, tau)});
  }
  rows.push_back({"logistic", evaluate_model(fit_logistic(train), val, test, rule)});
  rows.push_back({"naive_bayes", evaluate_model(fit_gaussian_nb(train), val, test, rule)});
  rows.push_back({"knn", evaluate_model(fit_knn(train), val, test, rule)});
  return rows;
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows,
                          const std::filesystem::path& path) {
  detail::CsvWriter out(path);
  std::string& buf = out.buffer();
  buf += "model,auroc,tpr,tnr,balanced_accuracy\n";
  for (const ComparisonRow& r : rows) {
    buf += r.model;
    buf += ',';
    detail::append_double(buf, r.metrics.auroc);
    buf += ',';
    detail::append_double(buf, r.metrics.tpr);
    buf += ',';
    detail::append_double(buf, r.metrics.tnr);
    buf += ',';
    detail::append_double(buf, r.metrics.balanced_accuracy);
    buf += '\n';
    out.maybe_flush();
  }
}

}  // namespace touchpred
