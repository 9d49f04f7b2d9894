#include "touchpred/mlp.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "touchpred/rng.hpp"

namespace touchpred {

namespace {

using json = nlohmann::ordered_json;

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z) { return 1.0 / (1.0 + (-z).exp()); }

void check_arch(const Architecture& arch) {
  if (arch.input_dim < 1 || arch.output_dim < 1) {
    throw std::invalid_argument("architecture dims must be >= 1");
  }
  for (int w : arch.hidden) {
    if (w < 1) throw std::invalid_argument("hidden widths must be >= 1");
  }
  if (arch.output_dim != 1) {
    throw std::invalid_argument("binary classifier network requires output_dim == 1");
  }
}

}  // namespace

std::vector<int> Architecture::layer_dims() const {
  std::vector<int> dims;
  dims.reserve(hidden.size() + 2);
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);
  return dims;
}

Architecture NetworkParams::architecture() const {
  Architecture arch;
  if (weights.empty()) throw std::logic_error("empty NetworkParams");
  arch.input_dim = static_cast<int>(weights.front().rows());
  arch.hidden.clear();
  for (std::size_t l = 0; l + 1 < weights.size(); ++l) {
    arch.hidden.push_back(static_cast<int>(weights[l].cols()));
  }
  arch.output_dim = static_cast<int>(weights.back().cols());
  return arch;
}

bool NetworkParams::same_shape(const NetworkParams& other) const {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != other.weights[l].rows() || weights[l].cols() != other.weights[l].cols()) {
      return false;
    }
    if (biases[l].size() != other.biases[l].size()) return false;
  }
  return true;
}

std::int64_t param_count(const Architecture& arch) {
  check_arch(arch);
  const auto dims = arch.layer_dims();
  std::int64_t total = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    total += static_cast<std::int64_t>(dims[l]) * dims[l + 1] + dims[l + 1];
  }
  return total;
}

NetworkParams init_params(const Architecture& arch, std::uint64_t seed) {
  check_arch(arch);
  const auto dims = arch.layer_dims();
  NetworkParams params;
  rng::Engine eng = rng::Engine::streamed(seed, 0x696e6974ULL);  // "init"
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_in, fan_out);
    for (int i = 0; i < fan_in; ++i) {
      for (int j = 0; j < fan_out; ++j) {
        w(i, j) = eng.uniform(-bound, bound);
      }
    }
    params.weights.push_back(std::move(w));
    params.biases.emplace_back(Eigen::VectorXd::Zero(fan_out));
  }
  return params;
}

NetworkParams zeros_like(const NetworkParams& params) {
  NetworkParams z;
  z.weights.reserve(params.weights.size());
  z.biases.reserve(params.biases.size());
  for (const auto& w : params.weights) z.weights.emplace_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : params.biases) z.biases.emplace_back(Eigen::VectorXd::Zero(b.size()));
  return z;
}

Eigen::VectorXd forward_batch(const NetworkParams& params, const Eigen::MatrixXd& X) {
  if (params.weights.empty()) throw std::invalid_argument("uninitialized network");
  if (X.cols() != params.weights.front().rows()) {
    throw std::invalid_argument("forward: input dimension mismatch");
  }
  Eigen::MatrixXd a = X;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    Eigen::MatrixXd z = a * params.weights[l];
    z.rowwise() += params.biases[l].transpose();
    a = sigmoid(z.array()).matrix();
  }
  return a.col(0);
}

double forward(const NetworkParams& params, const Eigen::VectorXd& x) {
  return forward_batch(params, x.transpose())(0);
}

LossGrad loss_and_grad(const NetworkParams& params, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows();
  if (n == 0) throw std::invalid_argument("loss_and_grad: empty batch");
  if (y.size() != n) throw std::invalid_argument("loss_and_grad: labels/features size mismatch");
  if (X.cols() != params.weights.front().rows()) {
    throw std::invalid_argument("loss_and_grad: input dimension mismatch");
  }

  const std::size_t num_layers = params.weights.size();
  std::vector<Eigen::MatrixXd> activations;
  activations.reserve(num_layers + 1);
  activations.push_back(X);
  for (std::size_t l = 0; l < num_layers; ++l) {
    Eigen::MatrixXd z = activations.back() * params.weights[l];
    z.rowwise() += params.biases[l].transpose();
    activations.push_back(sigmoid(z.array()).matrix());
  }

  const Eigen::ArrayXd p = activations.back().col(0).array();
  const Eigen::ArrayXd pc = p.max(kProbClamp).min(1.0 - kProbClamp);
  const Eigen::ArrayXd ya = y.array();
  const double loss =
      -(ya * pc.log() + (1.0 - ya) * (1.0 - pc).log()).mean();

  // d loss / d z_out. Inside the clamp this is (p - y)/n; where the clamp is
  // active the clamped loss is locally constant in p, so the derivative is 0.
  Eigen::ArrayXd dz = (pc - ya) / static_cast<double>(n);
  dz = (p < kProbClamp || p > 1.0 - kProbClamp).select(Eigen::ArrayXd::Zero(n), dz);

  LossGrad out;
  out.loss = loss;
  out.gradients.weights.resize(num_layers);
  out.gradients.biases.resize(num_layers);

  Eigen::MatrixXd delta = dz.matrix();
  for (std::size_t l = num_layers; l-- > 0;) {
    out.gradients.weights[l] = activations[l].transpose() * delta;
    out.gradients.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      const Eigen::ArrayXXd a = activations[l].array();
      delta = ((delta * params.weights[l].transpose()).array() * a * (1.0 - a)).matrix();
    }
  }
  return out;
}

AdamState make_adam_state(const NetworkParams& params, const AdamConfig& config) {
  AdamState state;
  state.first_moment = zeros_like(params);
  state.second_moment = zeros_like(params);
  state.step = 0;
  state.config = config;
  return state;
}

void adam_step(AdamState& state, NetworkParams& params, const NetworkParams& gradients) {
  if (!params.same_shape(gradients) || !params.same_shape(state.first_moment)) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  for (const auto& g : gradients.weights) {
    if (!g.allFinite()) throw std::runtime_error("adam_step: non-finite weight gradient");
  }
  for (const auto& g : gradients.biases) {
    if (!g.allFinite()) throw std::runtime_error("adam_step: non-finite bias gradient");
  }

  const AdamConfig& c = state.config;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));

  auto update = [&](auto& theta, auto& m, auto& v, const auto& g) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    theta.array() -= c.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
  };

  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l], state.first_moment.weights[l], state.second_moment.weights[l],
           gradients.weights[l]);
    update(params.biases[l], state.first_moment.biases[l], state.second_moment.biases[l],
           gradients.biases[l]);
  }
}

std::string params_to_json_string(const NetworkParams& params, std::uint64_t init_seed) {
  const Architecture arch = params.architecture();
  json j;
  j["architecture"] = {{"input_dim", arch.input_dim}, {"hidden", arch.hidden}, {"output_dim", arch.output_dim}};
  json weights = json::array();
  for (const auto& w : params.weights) {
    json flat = json::array();
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index jj = 0; jj < w.cols(); ++jj) flat.push_back(w(i, jj));
    }
    weights.push_back(std::move(flat));
  }
  j["weights"] = std::move(weights);
  json biases = json::array();
  for (const auto& b : params.biases) {
    json flat = json::array();
    for (Eigen::Index i = 0; i < b.size(); ++i) flat.push_back(b(i));
    biases.push_back(std::move(flat));
  }
  j["biases"] = std::move(biases);
  j["init_seed"] = init_seed;
  return j.dump();
}

NetworkParams params_from_json_string(const std::string& text, std::uint64_t* init_seed) {
  const json j = json::parse(text);
  Architecture arch;
  arch.input_dim = j.at("architecture").at("input_dim").get<int>();
  arch.hidden = j.at("architecture").at("hidden").get<std::vector<int>>();
  arch.output_dim = j.at("architecture").at("output_dim").get<int>();
  const auto dims = arch.layer_dims();

  NetworkParams params;
  const json& weights = j.at("weights");
  const json& biases = j.at("biases");
  if (weights.size() != dims.size() - 1 || biases.size() != dims.size() - 1) {
    throw std::runtime_error("model json: layer count mismatch");
  }
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const json& flat = weights.at(l);
    if (flat.size() != static_cast<std::size_t>(fan_in) * static_cast<std::size_t>(fan_out)) {
      throw std::runtime_error("model json: weight matrix size mismatch");
    }
    Eigen::MatrixXd w(fan_in, fan_out);
    std::size_t idx = 0;
    for (int i = 0; i < fan_in; ++i) {
      for (int jj = 0; jj < fan_out; ++jj) w(i, jj) = flat.at(idx++).get<double>();
    }
    params.weights.push_back(std::move(w));
    const json& bflat = biases.at(l);
    if (bflat.size() != static_cast<std::size_t>(fan_out)) {
      throw std::runtime_error("model json: bias vector size mismatch");
    }
    Eigen::VectorXd b(fan_out);
    for (int i = 0; i < fan_out; ++i) b(i) = bflat.at(static_cast<std::size_t>(i)).get<double>();
    params.biases.push_back(std::move(b));
  }
  if (init_seed != nullptr) *init_seed = j.value("init_seed", std::uint64_t{0});
  return params;
}

}  // namespace touchpred
