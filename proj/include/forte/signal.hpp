#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace forte {

inline constexpr std::size_t kNumChannels = 6;
inline constexpr std::size_t kChannelsPerFinger = 3;

using ChannelVector = std::array<double, kNumChannels>;

enum class Finger : int { Right = 0, Left = 1 };

/// Channel index -> finger. Channels 0..2 are on finger R (distal, middle,
/// root), channels 3..5 on finger L in the same order.
constexpr Finger finger_of(std::size_t channel) {
  return channel < kChannelsPerFinger ? Finger::Right : Finger::Left;
}

const char* finger_name(Finger f);

struct SensorFrame {
  double t = 0.0;
  ChannelVector channels{};
};

enum class VarianceMode { Population, Sample };
enum class GroupGate { PerGroup, AllGroups };

/// Detection and acquisition parameters. Defaults are the published operating
/// point of the detector.
struct PipelineConfig {
  double sample_rate_hz = 2000.0;
  int median_window = 11;
  int fft_window = 400;
  double overlap = 0.99;
  double band_min_hz = 10.0;
  double band_max_hz = 50.0;
  int history_length = 15;
  double monotonic_increment_db = 0.1;
  double group_variance_gate_db2 = 0.6;
  double slip_threshold_db2 = 2.0;
  double log_epsilon = 1e-12;
  VarianceMode variance_mode = VarianceMode::Population;
  GroupGate group_gate = GroupGate::PerGroup;
  int adc_bits = 11;
  double baseline_seconds = 1.0;
  /// Remove each window's mean before tapering. Off by default.
  bool window_detrend = false;

  /// Samples between detection steps, round(N * (1 - O)).
  int hop() const;
  double bin_width_hz() const { return sample_rate_hz / fft_window; }
  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

/// Map an ADC count onto [-1, 1] around `baseline`. The full 2^bits range
/// spans the normalized width of 2.
double normalize_raw(std::int64_t raw, int bits, std::int64_t baseline);

/// Streaming odd-length median filter over one channel. Before `window`
/// samples have been seen, the missing history is filled with the first
/// sample.
class MedianFilter {
 public:
  explicit MedianFilter(int window);

  double push(double x);
  void reset();
  int window() const { return window_; }

 private:
  int window_;
  std::vector<double> ring_;
  std::vector<double> sorted_;
  std::size_t head_ = 0;
  bool primed_ = false;
};

/// Six median filters, one per channel.
class FrameFilter {
 public:
  explicit FrameFilter(int window);
  SensorFrame push(const SensorFrame& frame);
  void reset();

 private:
  std::vector<MedianFilter> filters_;
};

/// Fixed-capacity history of filtered frames. Single writer; readers copy out
/// the windows they need.
class ChannelRing {
 public:
  explicit ChannelRing(std::size_t capacity);

  /// Capacity large enough for the FFT window and a 10 s mean window.
  static std::size_t default_capacity(const PipelineConfig& cfg);

  void push(const SensorFrame& frame);
  void clear();

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return count_ < capacity_ ? count_ : capacity_; }
  std::uint64_t total_pushed() const { return count_; }
  double latest_time() const { return last_t_; }
  SensorFrame latest() const;

  /// Value of `channel` `age` samples ago (age 0 is the newest sample).
  double at(std::size_t channel, std::size_t age) const;

  /// Last k samples of one channel, oldest first. Requires k <= size().
  void copy_last(std::size_t channel, std::size_t k, std::span<double> out) const;
  std::vector<double> last(std::size_t channel, std::size_t k) const;

  /// Per-channel mean over the newest k samples, or over everything held
  /// when fewer than k samples are available.
  ChannelVector mean_last(std::size_t k) const;

  /// Per-channel (max - min) over the newest k samples (or fewer).
  ChannelVector range_last(std::size_t k) const;

 private:
  void resum();

  std::size_t capacity_;
  std::uint64_t count_ = 0;
  std::size_t head_ = 0;  // index of the next write
  double last_t_ = 0.0;
  std::array<std::vector<double>, kNumChannels> values_;
  // prefix_[c][i] is the sum of every value written up to and including slot i
  // since the last re-summation.
  std::array<std::vector<double>, kNumChannels> prefix_;
  std::array<double, kNumChannels> running_{};
  std::uint64_t since_resum_ = 0;
};

/// Mean of the newest `seconds` of filtered data per channel. Shrinks to the
/// available history during warm-up.
ChannelVector window_mean(const ChannelRing& ring, double seconds, double sample_rate_hz);

/// Per-channel mean of the frames with t < t0 + seconds, where t0 is the first
/// frame time.
ChannelVector estimate_baseline(std::span<const SensorFrame> frames, double seconds);

/// Subtracts a per-channel baseline, clamps to [-1, 1] and median filters.
class Preprocessor {
 public:
  Preprocessor(const PipelineConfig& cfg, const ChannelVector& baseline);
  SensorFrame push(const SensorFrame& raw);
  const ChannelVector& baseline() const { return baseline_; }

 private:
  ChannelVector baseline_;
  FrameFilter filter_;
};

}  // namespace forte
