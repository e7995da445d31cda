#include "forte/slip.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace forte {

std::vector<double> hann_window(int n) {
  if (n < 2) throw std::invalid_argument("hann_window: N must be >= 2");
  std::vector<double> w(static_cast<std::size_t>(n));
  const double denom = static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / denom));
  // Pin exact symmetry; cos() is not bit-symmetric around the center.
  for (int i = 0; i < n / 2; ++i) w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
  return w;
}

PsdEstimator::PsdEstimator(const PipelineConfig& cfg)
    : n_(cfg.fft_window),
      fs_(cfg.sample_rate_hz),
      window_(hann_window(cfg.fft_window)),
      window_power_(0.0),
      fft_(static_cast<std::size_t>(cfg.fft_window)),
      tapered_(static_cast<std::size_t>(cfg.fft_window)),
      spectrum_(static_cast<std::size_t>(cfg.fft_window / 2 + 1)) {
  for (double w : window_) window_power_ += w * w;
}

void PsdEstimator::compute(std::span<const double> window, std::span<double> psd) const {
  if (window.size() != static_cast<std::size_t>(n_))
    throw std::invalid_argument("compute_psd: window length must equal the FFT size");
  if (psd.size() < num_bins()) throw std::invalid_argument("compute_psd: output too small");
  for (std::size_t i = 0; i < window.size(); ++i) tapered_[i] = window[i] * window_[i];
  fft_.forward(tapered_, spectrum_);
  const double scale = 1.0 / (fs_ * window_power_);
  for (std::size_t k = 0; k < num_bins(); ++k) psd[k] = std::norm(spectrum_[k]) * scale;
}

std::vector<double> PsdEstimator::compute(std::span<const double> window) const {
  std::vector<double> psd(num_bins());
  compute(window, psd);
  return psd;
}

std::vector<double> compute_psd(std::span<const double> window, const PipelineConfig& cfg) {
  return PsdEstimator(cfg).compute(window);
}

BandBins band_bins(const PipelineConfig& cfg) {
  const double df = cfg.bin_width_hz();
  const double lo = cfg.band_min_hz - df / 2.0;
  const double hi = cfg.band_max_hz + df / 2.0;
  const auto max_bin = static_cast<std::size_t>(cfg.fft_window / 2);
  BandBins b;
  b.first = static_cast<std::size_t>(std::max(0.0, std::ceil(lo / df)));
  b.last = std::min(max_bin, static_cast<std::size_t>(std::floor(hi / df)));
  if (b.first > b.last) throw std::invalid_argument("frequency band contains no FFT bins");
  return b;
}

double psd_feature(std::span<const double> psd, const PipelineConfig& cfg) {
  const BandBins b = band_bins(cfg);
  if (psd.size() <= b.last) throw std::invalid_argument("psd_feature: PSD shorter than band");
  double peak = 0.0;
  for (std::size_t k = b.first; k <= b.last; ++k) {
    // Negative or NaN power cannot come out of a periodogram; treat as zero.
    const double p = psd[k] > 0.0 ? psd[k] : 0.0;
    peak = std::max(peak, p);
  }
  // log10 is monotone, so the max commutes with the dB conversion.
  return 10.0 * std::log10(peak + cfg.log_epsilon);
}

// ---------------------------------------------------------------------------

FeatureHistory::FeatureHistory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("FeatureHistory capacity must be positive");
}

void FeatureHistory::push(double value_db) {
  if (values_.size() == capacity_) values_.pop_front();
  values_.push_back(value_db);
}

namespace {

template <typename Range>
double gated_variance_impl(const Range& h, const PipelineConfig& cfg) {
  const auto v = static_cast<std::size_t>(cfg.history_length);
  if (h.size() < v || v < 2) return 0.0;
  const std::size_t off = h.size() - v;
  for (std::size_t k = off; k + 1 < h.size(); ++k)
    if (!(h[k + 1] - h[k] > cfg.monotonic_increment_db)) return 0.0;
  double mean = 0.0;
  for (std::size_t k = off; k < h.size(); ++k) mean += h[k];
  mean /= static_cast<double>(v);
  double ss = 0.0;
  for (std::size_t k = off; k < h.size(); ++k) ss += (h[k] - mean) * (h[k] - mean);
  const double denom =
      cfg.variance_mode == VarianceMode::Population ? static_cast<double>(v) : static_cast<double>(v - 1);
  return ss / denom;
}

}  // namespace

double gated_variance(std::span<const double> history, const PipelineConfig& cfg) {
  return gated_variance_impl(history, cfg);
}

double gated_variance(const FeatureHistory& history, const PipelineConfig& cfg) {
  return gated_variance_impl(history.values(), cfg);
}

std::array<double, 2> finger_aggregate(std::span<const double, kNumChannels> variances,
                                       const PipelineConfig& cfg) {
  std::array<double, 2> mean{};
  for (std::size_t i = 0; i < kNumChannels; ++i) mean[static_cast<std::size_t>(finger_of(i))] += variances[i];
  for (auto& m : mean) m /= static_cast<double>(kChannelsPerFinger);

  const double alpha = cfg.group_variance_gate_db2;
  std::array<double, 2> out{};
  if (cfg.group_gate == GroupGate::AllGroups) {
    const bool all_pass = std::all_of(mean.begin(), mean.end(), [&](double m) { return m >= alpha; });
    if (all_pass) out = mean;
  } else {
    for (std::size_t g = 0; g < 2; ++g) out[g] = mean[g] >= alpha ? mean[g] : 0.0;
  }
  return out;
}

double SlipState::max_finger_variance() const {
  return std::max(finger_variance_db2[0], finger_variance_db2[1]);
}

Finger SlipState::dominant_finger() const {
  return finger_variance_db2[1] > finger_variance_db2[0] ? Finger::Left : Finger::Right;
}

// ---------------------------------------------------------------------------

SlipDetector::SlipDetector(const PipelineConfig& cfg)
    : cfg_(cfg),
      psd_(cfg),
      window_(static_cast<std::size_t>(cfg.fft_window)),
      spectrum_(static_cast<std::size_t>(cfg.fft_window / 2 + 1)) {
  cfg_.validate();
  histories_.reserve(kNumChannels);
  for (std::size_t i = 0; i < kNumChannels; ++i) histories_.emplace_back(static_cast<std::size_t>(cfg.history_length));
}

void SlipDetector::reset() {
  for (auto& h : histories_) h.clear();
  state_ = SlipState{};
}

const SlipState& SlipDetector::step(const ChannelRing& ring) {
  const auto n = static_cast<std::size_t>(cfg_.fft_window);
  if (ring.size() < n) throw InsufficientSamples("slip detection needs a full FFT window");

  for (std::size_t i = 0; i < kNumChannels; ++i) {
    ring.copy_last(i, n, window_);
    if (cfg_.window_detrend) {
      double mean = 0.0;
      for (double v : window_) mean += v;
      mean /= static_cast<double>(n);
      for (double& v : window_) v -= mean;
    }
    psd_.compute(window_, spectrum_);
    const double feature = psd_feature(spectrum_, cfg_);
    state_.feature_db[i] = feature;
    histories_[i].push(feature);
    state_.variance_db2[i] = gated_variance(histories_[i], cfg_);
  }
  state_.finger_variance_db2 = finger_aggregate(state_.variance_db2, cfg_);
  const bool was = state_.eta;
  state_.eta = state_.max_finger_variance() > cfg_.slip_threshold_db2;
  state_.rising_edge = state_.eta && !was;
  state_.t = ring.latest_time();
  if (state_.eta) state_.last_detection_t = state_.t;
  ++state_.steps;
  return state_;
}

SlipPipeline::SlipPipeline(const PipelineConfig& cfg, const ChannelVector& baseline)
    : cfg_(cfg),
      pre_(cfg, baseline),
      ring_(ChannelRing::default_capacity(cfg)),
      detector_(cfg),
      hop_(cfg.hop()) {}

const SlipState* SlipPipeline::push(const SensorFrame& raw) {
  last_filtered_ = pre_.push(raw);
  ring_.push(last_filtered_);
  ++pushed_;
  const auto n = static_cast<std::uint64_t>(cfg_.fft_window);
  if (pushed_ < n || (pushed_ - n) % static_cast<std::uint64_t>(hop_) != 0) return nullptr;
  return &detector_.step(ring_);
}

}  // namespace forte
