#pragma once

#include <array>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "forte/fft.hpp"
#include "forte/signal.hpp"

namespace forte {

/// Symmetric Hann window, w(n) = 0.5 (1 - cos(2 pi n / (N - 1))).
std::vector<double> hann_window(int n);

/// One-sided periodogram of a single Hann-windowed segment, bins 0..N/2, in
/// (normalized pressure)^2 / Hz:  P(k) = |X(k)|^2 / (f_s * sum w^2).
class PsdEstimator {
 public:
  explicit PsdEstimator(const PipelineConfig& cfg);

  std::vector<double> compute(std::span<const double> window) const;
  void compute(std::span<const double> window, std::span<double> psd) const;

  std::size_t num_bins() const { return static_cast<std::size_t>(n_ / 2 + 1); }
  double bin_frequency(std::size_t k) const { return static_cast<double>(k) * fs_ / n_; }
  const std::vector<double>& window() const { return window_; }
  double window_power() const { return window_power_; }

 private:
  int n_;
  double fs_;
  std::vector<double> window_;
  double window_power_;
  RealFft fft_;
  mutable std::vector<double> tapered_;
  mutable std::vector<std::complex<double>> spectrum_;
};

std::vector<double> compute_psd(std::span<const double> window, const PipelineConfig& cfg);

/// Inclusive bin range whose centers fall in [f_min - df/2, f_max + df/2].
struct BandBins {
  std::size_t first = 0;
  std::size_t last = 0;
};
BandBins band_bins(const PipelineConfig& cfg);

/// max over in-band bins of 10 log10(P + eps), in dB.
double psd_feature(std::span<const double> psd, const PipelineConfig& cfg);

struct PsdFeature {
  int sensor = 0;
  double value_db = 0.0;
  double t = 0.0;
};

/// Bounded chronological history of PSD features for one sensor.
class FeatureHistory {
 public:
  explicit FeatureHistory(std::size_t capacity);

  void push(double value_db);
  void clear() { values_.clear(); }
  bool full() const { return values_.size() == capacity_; }
  std::size_t size() const { return values_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<double>& values() const { return values_; }

 private:
  std::size_t capacity_;
  std::deque<double> values_;
};

/// Variance of the history when every consecutive step rises by more than
/// delta; 0 otherwise, and 0 until the history is full.
double gated_variance(const FeatureHistory& history, const PipelineConfig& cfg);
double gated_variance(std::span<const double> history, const PipelineConfig& cfg);

/// Per-finger mean of the sensor variances, zeroed below the group gate.
std::array<double, 2> finger_aggregate(std::span<const double, kNumChannels> variances,
                                       const PipelineConfig& cfg);

struct SlipState {
  std::array<double, kNumChannels> feature_db{};
  std::array<double, kNumChannels> variance_db2{};
  std::array<double, 2> finger_variance_db2{};  // indexed by Finger
  bool eta = false;
  bool rising_edge = false;
  double t = 0.0;
  std::optional<double> last_detection_t;
  std::uint64_t steps = 0;

  double max_finger_variance() const;
  /// Finger with the larger average variance.
  Finger dominant_finger() const;
};

/// Thrown by SlipDetector::step before a full FFT window is available.
class InsufficientSamples : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Streaming slip detector over a ring of filtered frames. `step` runs one
/// detection update over the newest N samples of every channel.
class SlipDetector {
 public:
  explicit SlipDetector(const PipelineConfig& cfg);

  const SlipState& step(const ChannelRing& ring);
  const SlipState& state() const { return state_; }
  const PipelineConfig& config() const { return cfg_; }
  const FeatureHistory& history(std::size_t sensor) const { return histories_[sensor]; }
  void reset();

 private:
  PipelineConfig cfg_;
  PsdEstimator psd_;
  std::vector<FeatureHistory> histories_;
  SlipState state_;
  std::vector<double> window_;
  std::vector<double> spectrum_;
};

/// Filtering plus detection at the configured hop for a stream of
/// baseline-corrected frames.
class SlipPipeline {
 public:
  SlipPipeline(const PipelineConfig& cfg, const ChannelVector& baseline);

  /// Returns the detector state when this frame triggered a detection step.
  const SlipState* push(const SensorFrame& raw);

  const ChannelRing& ring() const { return ring_; }
  const SlipState& state() const { return detector_.state(); }
  const SensorFrame& last_filtered() const { return last_filtered_; }

 private:
  PipelineConfig cfg_;
  Preprocessor pre_;
  ChannelRing ring_;
  SlipDetector detector_;
  SensorFrame last_filtered_;
  int hop_;
  std::uint64_t pushed_ = 0;
};

}  // namespace forte
