#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "forte/signal.hpp"

namespace forte {

inline constexpr std::size_t kForceFeatureDim = 24;
inline constexpr std::array<double, 3> kForceMeanWindowsS{2.5, 5.0, 10.0};

/// Full: current frame plus three trailing means (24 values). CurrentOnly:
/// the six current channel values.
enum class FeatureSet { Full, CurrentOnly };

std::size_t feature_dim(FeatureSet set);
const char* feature_set_tag(FeatureSet set);
FeatureSet parse_feature_set(const std::string& tag);

struct ForceFeature {
  double t = 0.0;
  std::array<double, kForceFeatureDim> v{};
};

/// Current filtered frame followed by its 2.5 s, 5 s and 10 s means.
ForceFeature build_feature(const ChannelRing& ring, double sample_rate_hz);

/// Leading `feature_dim(set)` components of a full feature.
std::vector<double> project_feature(const ForceFeature& f, FeatureSet set);

struct ForceSample {
  std::vector<double> x;
  double force_n = 0.0;
};

struct ForceTrial {
  std::string id;
  std::string tag;
  std::vector<ForceSample> samples;
};

struct SvrParams {
  double C = 10.0;
  double epsilon = 0.01;
  /// RBF width; <= 0 picks 1 / (dim * median pairwise squared distance).
  double gamma = 0.0;
  double tolerance = 1e-3;
  std::uint64_t max_iterations = 0;  // 0: scaled to the problem size
  double cache_mb = 256.0;
};

class ForceModel {
 public:
  ForceModel() = default;

  double predict(std::span<const double> x) const;
  /// Same kernel expansion without the clamp at zero.
  double decision(std::span<const double> x) const;

  std::size_t dim() const { return dim_; }
  std::size_t num_support_vectors() const { return coefficients_.size(); }
  double gamma() const { return gamma_; }
  double C() const { return C_; }
  double epsilon() const { return epsilon_; }
  double bias() const { return bias_; }
  FeatureSet feature_set() const { return feature_set_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  std::span<const double> support_vector(std::size_t j) const {
    return {support_vectors_.data() + j * dim_, dim_};
  }
  /// Upper bound on |predict(x) - predict(y)| / |x - y|.
  double lipschitz_bound() const;

  std::string to_json() const;
  static ForceModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static ForceModel load(const std::string& path);

  static ForceModel from_parts(std::size_t dim, std::vector<double> support_vectors, std::vector<double> coefficients,
                               double bias, double gamma, double C, double epsilon, FeatureSet set);

 private:
  std::size_t dim_ = 0;
  std::vector<double> support_vectors_;  // row-major, n_sv x dim
  std::vector<double> coefficients_;
  double bias_ = 0.0;
  double gamma_ = 1.0;
  double C_ = 10.0;
  double epsilon_ = 0.01;
  FeatureSet feature_set_ = FeatureSet::Full;
};

struct TrainStats {
  std::uint64_t iterations = 0;
  double kkt_residual = 0.0;  // max violating-pair gap at exit
  double dual_objective = 0.0;
  std::size_t num_samples = 0;
};

/// Solver hit the iteration cap. Carries the best model found so far.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, ForceModel model, TrainStats stats)
      : std::runtime_error(what), model_(std::move(model)), stats_(stats) {}
  const ForceModel& model() const { return model_; }
  const TrainStats& stats() const { return stats_; }

 private:
  ForceModel model_;
  TrainStats stats_;
};

double median_pairwise_sq_distance(std::span<const ForceSample> samples, std::size_t max_pairs = 200000);
double default_gamma(std::span<const ForceSample> samples);

/// Epsilon-insensitive RBF support vector regression by SMO.
ForceModel train_svr(std::span<const ForceSample> samples, const SvrParams& params, TrainStats* stats = nullptr,
                     FeatureSet set = FeatureSet::Full);
ForceModel train(std::span<const ForceTrial> trials, const SvrParams& params, TrainStats* stats = nullptr,
                 FeatureSet set = FeatureSet::Full);

/// Root mean squared prediction error in newtons.
double rmse(const ForceModel& model, std::span<const ForceSample> samples);

struct CrossValidationResult {
  std::vector<double> fold_rmse;
  std::vector<std::size_t> fold_samples;
  std::vector<std::vector<std::string>> fold_test_ids;
  double mean_rmse = 0.0;    // average of per-fold RMSE
  double pooled_rmse = 0.0;  // RMSE over every held-out sample
};

/// Trial-wise k-fold: whole trials are assigned to folds by a seeded shuffle.
CrossValidationResult cross_validate(std::span<const ForceTrial> trials, int folds, const SvrParams& params,
                                     std::uint64_t seed, FeatureSet set = FeatureSet::Full);

/// Streaming estimator: refreshes the force estimate every `hop` frames.
class ForceEstimator {
 public:
  ForceEstimator(const ForceModel& model, double sample_rate_hz, int hop = 20);
  /// Returns true when the estimate was refreshed on this frame.
  bool update(const ChannelRing& ring);
  double force() const { return force_; }

 private:
  const ForceModel* model_;
  double fs_;
  int hop_;
  std::uint64_t seen_ = 0;
  double force_ = 0.0;
  std::vector<double> x_;
};

}  // namespace forte
