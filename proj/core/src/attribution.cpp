#include "touchpred/attribution.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "touchpred/rng.hpp"
#include "touchpred/touchpoints.hpp"
#include "text_io.hpp"

namespace touchpred {

namespace {

constexpr std::uint64_t kPermutationStream = 0x73686170706572ULL;

void check_background(const Eigen::MatrixXd& background, Eigen::Index dim) {
  if (background.rows() < 1) {
    throw std::invalid_argument("shapley: background must have at least one row");
  }
  if (background.cols() != dim) {
    throw std::invalid_argument("shapley: background width must match the input dimension");
  }
}

}  // namespace

Eigen::MatrixXd sample_background(const Dataset& train, int size, std::uint64_t seed) {
  if (train.empty()) throw std::invalid_argument("sample_background: empty dataset");
  if (size < 1) throw std::invalid_argument("sample_background: size must be >= 1");
  const Eigen::MatrixXd all = train.feature_matrix();
  const auto n = all.rows();
  if (size >= n) return all;

  // Partial Fisher-Yates: the first `size` entries of the permutation.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  rng::Engine eng = rng::Engine::streamed(seed, 0x6261636b67ULL);  // "backg"
  for (int i = 0; i < size; ++i) {
    const auto j = static_cast<Eigen::Index>(
        eng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(i + j)]);
  }
  Eigen::MatrixXd out(size, all.cols());
  for (int i = 0; i < size; ++i) out.row(i) = all.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<double> shapley_exact(const BatchScoreFn& f, const Eigen::VectorXd& x,
                                  const Eigen::MatrixXd& background,
                                  const std::vector<int>& active_dims) {
  check_background(background, x.size());
  const int d = static_cast<int>(active_dims.size());
  if (d < 1) throw std::invalid_argument("shapley_exact: active_dims must be non-empty");
  if (d > kExactShapleyMaxDims) {
    throw std::invalid_argument(
        "shapley_exact: dimension above the 2^d enumeration cap; use shapley_permutation");
  }
  std::unordered_set<int> seen;
  for (int dim : active_dims) {
    if (dim < 0 || dim >= x.size()) {
      throw std::invalid_argument("shapley_exact: active dim out of range");
    }
    if (!seen.insert(dim).second) {
      throw std::invalid_argument("shapley_exact: active dims must be distinct");
    }
  }

  const auto B = background.rows();
  const std::size_t n_masks = std::size_t{1} << d;

  // v(S): features in S (within active_dims) come from x, the rest of the
  // active features from the background row; inactive features stay at x.
  std::vector<double> v(n_masks);
  Eigen::MatrixXd rows(B, x.size());
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    rows = background;
    for (Eigen::Index c = 0; c < x.size(); ++c) {
      bool from_x = true;
      for (int k = 0; k < d; ++k) {
        if (active_dims[static_cast<std::size_t>(k)] == static_cast<int>(c)) {
          from_x = (mask >> k) & 1U;
          break;
        }
      }
      if (from_x) rows.col(c).setConstant(x(c));
    }
    v[mask] = f(rows).mean();
  }

  std::vector<double> fact(static_cast<std::size_t>(d) + 1, 1.0);
  for (int i = 1; i <= d; ++i) {
    fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i - 1)] * i;
  }

  std::vector<double> phi(static_cast<std::size_t>(d), 0.0);
  for (int k = 0; k < d; ++k) {
    const std::size_t bit = std::size_t{1} << k;
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      const int s = std::popcount(mask);
      const double weight = fact[static_cast<std::size_t>(s)] *
                            fact[static_cast<std::size_t>(d - 1 - s)] /
                            fact[static_cast<std::size_t>(d)];
      phi[static_cast<std::size_t>(k)] += weight * (v[mask | bit] - v[mask]);
    }
  }
  return phi;
}

Eigen::VectorXd shapley_permutation(const BatchScoreFn& f, const Eigen::VectorXd& x,
                                    const Eigen::MatrixXd& background, int n_perm,
                                    std::uint64_t seed) {
  check_background(background, x.size());
  if (n_perm < 1) throw std::invalid_argument("shapley_permutation: n_perm must be >= 1");
  const auto d = static_cast<int>(x.size());
  const int pairs = (n_perm + 1) / 2;
  const int walk_rows = d + 1;

  rng::Engine eng = rng::Engine::streamed(seed, kPermutationStream);
  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);

  // Materialize every walk row first (the walks do not depend on f), then
  // score them in one batched call.
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(2 * pairs * walk_rows), d);
  std::vector<int> perms(static_cast<std::size_t>(pairs) * static_cast<std::size_t>(d));
  Eigen::VectorXd z(d);
  Eigen::Index r = 0;
  for (int p = 0; p < pairs; ++p) {
    eng.shuffle(perm.begin(), perm.end());
    const auto b = static_cast<Eigen::Index>(
        eng.below(static_cast<std::uint64_t>(background.rows())));
    std::copy(perm.begin(), perm.end(), perms.begin() + static_cast<std::size_t>(p) * d);

    z = background.row(b).transpose();
    rows.row(r++) = z.transpose();
    for (int k = 0; k < d; ++k) {
      z(perm[static_cast<std::size_t>(k)]) = x(perm[static_cast<std::size_t>(k)]);
      rows.row(r++) = z.transpose();
    }
    z = background.row(b).transpose();
    rows.row(r++) = z.transpose();
    for (int k = 0; k < d; ++k) {
      z(perm[static_cast<std::size_t>(d - 1 - k)]) = x(perm[static_cast<std::size_t>(d - 1 - k)]);
      rows.row(r++) = z.transpose();
    }
  }

  const Eigen::VectorXd scores = f(rows);
  if (scores.size() != rows.rows()) {
    throw std::runtime_error("shapley_permutation: scoring function returned a wrong-sized batch");
  }

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(d);
  r = 0;
  for (int p = 0; p < pairs; ++p) {
    const int* pp = perms.data() + static_cast<std::size_t>(p) * d;
    for (int k = 0; k < d; ++k) {
      phi(pp[k]) += scores(r + k + 1) - scores(r + k);
    }
    r += walk_rows;
    for (int k = 0; k < d; ++k) {
      phi(pp[d - 1 - k]) += scores(r + k + 1) - scores(r + k);
    }
    r += walk_rows;
  }
  return phi / static_cast<double>(2 * pairs);
}

ShapleyMatrix attribute_dataset(const EnsembleModel& ensemble, const Dataset& data,
                                const Eigen::MatrixXd& background,
                                const AttributionConfig& config) {
  if (data.empty()) throw std::invalid_argument("attribute_dataset: empty dataset");
  check_background(background, kNumTouchpoints);
  if (config.n_perm < 1) throw std::invalid_argument("attribute_dataset: n_perm must be >= 1");

  const BatchScoreFn f = [&ensemble](const Eigen::MatrixXd& X) {
    return ensemble_scores(ensemble, X);
  };

  ShapleyMatrix result;
  result.base_value = f(background).mean();
  const Eigen::MatrixXd features = data.feature_matrix();
  const auto n = features.rows();
  result.values.resize(n, kNumTouchpoints);

  const int threads =
      std::min<int>(resolve_threads(config.threads), static_cast<int>(std::max<Eigen::Index>(n, 1)));
  std::atomic<Eigen::Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    while (true) {
      const Eigen::Index i = next.fetch_add(1);
      if (i >= n) return;
      try {
        result.values.row(i) =
            shapley_permutation(f, features.row(i).transpose(), background, config.n_perm,
                                rng::mix(config.seed, static_cast<std::uint64_t>(i)))
                .transpose();
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
  return result;
}

std::vector<RankedFeature> rank_features(const ShapleyMatrix& matrix) {
  if (matrix.values.rows() < 1 || matrix.values.cols() != kNumTouchpoints) {
    throw std::invalid_argument("rank_features: matrix must be non-empty with 31 columns");
  }
  std::vector<RankedFeature> ranking;
  ranking.reserve(kNumTouchpoints);
  const auto n = static_cast<double>(matrix.values.rows());
  for (int code = 1; code <= kNumTouchpoints; ++code) {
    RankedFeature rf;
    rf.code = code;
    rf.name = std::string(touchpoint_name(code));
    rf.mean_abs_phi = matrix.values.col(code - 1).cwiseAbs().sum() / n;
    ranking.push_back(std::move(rf));
  }
  std::sort(ranking.begin(), ranking.end(), [](const RankedFeature& a, const RankedFeature& b) {
    if (a.mean_abs_phi != b.mean_abs_phi) return a.mean_abs_phi > b.mean_abs_phi;
    return a.code < b.code;
  });
  return ranking;
}

void export_beeswarm(const ShapleyMatrix& matrix, const Dataset& data,
                     const std::filesystem::path& path) {
  if (static_cast<std::size_t>(matrix.values.rows()) != data.size()) {
    throw std::invalid_argument("export_beeswarm: matrix rows must align with dataset rows");
  }
  const std::vector<RankedFeature> ranking = rank_features(matrix);
  detail::CsvWriter out(path);
  std::string& buf = out.buffer();
  buf += "user_idx,code,feature_name,count,phi\n";
  for (const RankedFeature& rf : ranking) {
    const auto col = static_cast<Eigen::Index>(rf.code - 1);
    for (std::size_t i = 0; i < data.size(); ++i) {
      detail::append_int(buf, i);
      buf += ',';
      detail::append_int(buf, rf.code);
      buf += ',';
      buf += rf.name;
      buf += ',';
      detail::append_int(buf, data.x[i][static_cast<std::size_t>(rf.code - 1)]);
      buf += ',';
      detail::append_double(buf, matrix.values(static_cast<Eigen::Index>(i), col));
      buf += '\n';
      out.maybe_flush();
    }
  }
}

void write_importance_csv(const std::vector<RankedFeature>& ranking,
                          const std::filesystem::path& path) {
  detail::CsvWriter out(path);
  std::string& buf = out.buffer();
  buf += "rank,code,feature_name,mean_abs_phi\n";
  int rank = 1;
  for (const RankedFeature& rf : ranking) {
    detail::append_int(buf, rank++);
    buf += ',';
    detail::append_int(buf, rf.code);
    buf += ',';
    buf += rf.name;
    buf += ',';
    detail::append_double(buf, rf.mean_abs_phi);
    buf += '\n';
    out.maybe_flush();
  }
}

}  // namespace touchpred
