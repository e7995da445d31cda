#include "forte/signal.hpp"

#include <algorithm>
#include <cmath>

namespace forte {

const char* finger_name(Finger f) { return f == Finger::Right ? "R" : "L"; }

int PipelineConfig::hop() const {
  return static_cast<int>(std::lround(fft_window * (1.0 - overlap)));
}

void PipelineConfig::validate() const {
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("sample_rate_hz must be positive");
  if (median_window < 1 || median_window % 2 == 0)
    throw std::invalid_argument("median_window must be odd and positive");
  if (fft_window < 2 || fft_window % 2 != 0) throw std::invalid_argument("fft_window must be even and >= 2");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw std::invalid_argument("overlap must lie in [0, 1)");
  if (hop() < 1) throw std::invalid_argument("overlap leaves a hop of zero samples");
  if (!(band_min_hz < band_max_hz) || band_max_hz > sample_rate_hz / 2.0)
    throw std::invalid_argument("band must satisfy f_min < f_max <= f_s/2");
  if (history_length < 2) throw std::invalid_argument("history_length must be >= 2");
  if (!(log_epsilon > 0.0)) throw std::invalid_argument("log_epsilon must be positive");
  if (adc_bits <= 0) throw std::invalid_argument("adc_bits must be positive");
  if (baseline_seconds < 0.0) throw std::invalid_argument("baseline_seconds must be >= 0");
}

double normalize_raw(std::int64_t raw, int bits, std::int64_t baseline) {
  if (bits <= 0 || bits > 62) throw std::invalid_argument("normalize_raw: bits must lie in [1, 62]");
  const double half_span = std::ldexp(1.0, bits - 1);
  const double v = static_cast<double>(raw - baseline) / half_span;
  return std::clamp(v, -1.0, 1.0);
}

// ---------------------------------------------------------------------------

MedianFilter::MedianFilter(int window) : window_(window) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("median window must be odd and positive");
  ring_.resize(static_cast<std::size_t>(window));
  sorted_.resize(static_cast<std::size_t>(window));
}

void MedianFilter::reset() {
  head_ = 0;
  primed_ = false;
}

double MedianFilter::push(double x) {
  if (!primed_) {
    std::fill(ring_.begin(), ring_.end(), x);
    std::fill(sorted_.begin(), sorted_.end(), x);
    head_ = 0;
    primed_ = true;
    return x;
  }
  const double old = ring_[head_];
  ring_[head_] = x;
  head_ = (head_ + 1) % ring_.size();

  // Replace `old` by `x` in the sorted copy, keeping it ordered.
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), old);
  std::size_t i = static_cast<std::size_t>(it - sorted_.begin());
  sorted_[i] = x;
  while (i > 0 && sorted_[i - 1] > sorted_[i]) {
    std::swap(sorted_[i - 1], sorted_[i]);
    --i;
  }
  while (i + 1 < sorted_.size() && sorted_[i + 1] < sorted_[i]) {
    std::swap(sorted_[i + 1], sorted_[i]);
    ++i;
  }
  return sorted_[sorted_.size() / 2];
}

FrameFilter::FrameFilter(int window) {
  filters_.reserve(kNumChannels);
  for (std::size_t c = 0; c < kNumChannels; ++c) filters_.emplace_back(window);
}

SensorFrame FrameFilter::push(const SensorFrame& frame) {
  SensorFrame out;
  out.t = frame.t;
  for (std::size_t c = 0; c < kNumChannels; ++c) out.channels[c] = filters_[c].push(frame.channels[c]);
  return out;
}

void FrameFilter::reset() {
  for (auto& f : filters_) f.reset();
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::uint64_t kResumInterval = std::uint64_t{1} << 20;
}

ChannelRing::ChannelRing(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ChannelRing capacity must be positive");
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    values_[c].assign(capacity, 0.0);
    prefix_[c].assign(capacity, 0.0);
  }
}

std::size_t ChannelRing::default_capacity(const PipelineConfig& cfg) {
  const auto ten_seconds = static_cast<std::size_t>(std::ceil(10.0 * cfg.sample_rate_hz));
  return std::max<std::size_t>(static_cast<std::size_t>(cfg.fft_window), ten_seconds) + 1;
}

void ChannelRing::clear() {
  count_ = 0;
  head_ = 0;
  last_t_ = 0.0;
  running_.fill(0.0);
  since_resum_ = 0;
}

void ChannelRing::push(const SensorFrame& frame) {
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    const double x = frame.channels[c];
    values_[c][head_] = x;
    running_[c] += x;
    prefix_[c][head_] = running_[c];
  }
  head_ = (head_ + 1) % capacity_;
  ++count_;
  last_t_ = frame.t;
  if (++since_resum_ >= kResumInterval) resum();
}

void ChannelRing::resum() {
  const std::size_t n = size();
  const std::size_t oldest = (head_ + capacity_ - n) % capacity_;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t slot = (oldest + j) % capacity_;
      acc += values_[c][slot];
      prefix_[c][slot] = acc;
    }
    running_[c] = acc;
  }
  since_resum_ = 0;
}

SensorFrame ChannelRing::latest() const {
  SensorFrame f;
  f.t = last_t_;
  if (count_ == 0) return f;
  for (std::size_t c = 0; c < kNumChannels; ++c) f.channels[c] = at(c, 0);
  return f;
}

double ChannelRing::at(std::size_t channel, std::size_t age) const {
  return values_[channel][(head_ + capacity_ - 1 - age) % capacity_];
}

void ChannelRing::copy_last(std::size_t channel, std::size_t k, std::span<double> out) const {
  if (k > size() || out.size() < k) throw std::out_of_range("ChannelRing::copy_last: not enough samples");
  const std::size_t start = (head_ + capacity_ - k) % capacity_;
  const auto& v = values_[channel];
  const std::size_t first = std::min(k, capacity_ - start);
  std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(start), first, out.begin());
  std::copy_n(v.begin(), k - first, out.begin() + static_cast<std::ptrdiff_t>(first));
}

std::vector<double> ChannelRing::last(std::size_t channel, std::size_t k) const {
  std::vector<double> out(k);
  copy_last(channel, k, out);
  return out;
}

ChannelVector ChannelRing::mean_last(std::size_t k) const {
  ChannelVector m{};
  const std::size_t n = std::min(k, size());
  if (n == 0) return m;
  const std::size_t newest = (head_ + capacity_ - 1) % capacity_;
  const std::size_t oldest = (head_ + capacity_ - n) % capacity_;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    const double sum = prefix_[c][newest] - prefix_[c][oldest] + values_[c][oldest];
    m[c] = sum / static_cast<double>(n);
  }
  return m;
}

ChannelVector ChannelRing::range_last(std::size_t k) const {
  ChannelVector r{};
  const std::size_t n = std::min(k, size());
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      const double x = at(c, a);
      if (a == 0 || x < lo) lo = x;
      if (a == 0 || x > hi) hi = x;
    }
    r[c] = hi - lo;
  }
  return r;
}

ChannelVector window_mean(const ChannelRing& ring, double seconds, double sample_rate_hz) {
  if (!(seconds > 0.0)) throw std::invalid_argument("window_mean: window must be positive");
  const auto k = static_cast<std::size_t>(std::llround(seconds * sample_rate_hz));
  return ring.mean_last(std::max<std::size_t>(k, 1));
}

ChannelVector estimate_baseline(std::span<const SensorFrame> frames, double seconds) {
  ChannelVector b{};
  if (frames.empty()) return b;
  const double t_end = frames.front().t + seconds;
  std::size_t n = 0;
  for (const auto& f : frames) {
    if (n > 0 && f.t >= t_end) break;
    for (std::size_t c = 0; c < kNumChannels; ++c) b[c] += f.channels[c];
    ++n;
  }
  for (auto& x : b) x /= static_cast<double>(n);
  return b;
}

Preprocessor::Preprocessor(const PipelineConfig& cfg, const ChannelVector& baseline)
    : baseline_(baseline), filter_(cfg.median_window) {}

SensorFrame Preprocessor::push(const SensorFrame& raw) {
  SensorFrame centered;
  centered.t = raw.t;
  for (std::size_t c = 0; c < kNumChannels; ++c)
    centered.channels[c] = std::clamp(raw.channels[c] - baseline_[c], -1.0, 1.0);
  return filter_.push(centered);
}

}  // namespace forte
