#include "forte/force.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <list>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "forte/io.hpp"

namespace forte {

std::size_t feature_dim(FeatureSet set) { return set == FeatureSet::Full ? kForceFeatureDim : kNumChannels; }

const char* feature_set_tag(FeatureSet set) {
  return set == FeatureSet::Full ? "current6+mean2.5s+mean5s+mean10s" : "current6";
}

FeatureSet parse_feature_set(const std::string& tag) {
  if (tag == "24" || tag == "full" || tag == feature_set_tag(FeatureSet::Full)) return FeatureSet::Full;
  if (tag == "6" || tag == "current" || tag == feature_set_tag(FeatureSet::CurrentOnly)) return FeatureSet::CurrentOnly;
  throw std::invalid_argument("unknown feature set '" + tag + "'");
}

ForceFeature build_feature(const ChannelRing& ring, double sample_rate_hz) {
  ForceFeature f;
  f.t = ring.latest_time();
  if (ring.size() == 0) return f;
  const SensorFrame cur = ring.latest();
  std::copy(cur.channels.begin(), cur.channels.end(), f.v.begin());
  for (std::size_t b = 0; b < kForceMeanWindowsS.size(); ++b) {
    const ChannelVector m = window_mean(ring, kForceMeanWindowsS[b], sample_rate_hz);
    std::copy(m.begin(), m.end(), f.v.begin() + static_cast<std::ptrdiff_t>((b + 1) * kNumChannels));
  }
  return f;
}

std::vector<double> project_feature(const ForceFeature& f, FeatureSet set) {
  return {f.v.begin(), f.v.begin() + static_cast<std::ptrdiff_t>(feature_dim(set))};
}

// ---------------------------------------------------------------------------

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return s;
}

}  // namespace

double ForceModel::decision(std::span<const double> x) const {
  if (x.size() != dim_) throw std::invalid_argument("ForceModel: feature dimension mismatch");
  double acc = bias_;
  const double* sv = support_vectors_.data();
  for (std::size_t j = 0; j < coefficients_.size(); ++j, sv += dim_)
    acc += coefficients_[j] * std::exp(-gamma_ * sq_dist(sv, x.data(), dim_));
  return acc;
}

double ForceModel::predict(std::span<const double> x) const { return std::max(0.0, decision(x)); }

double ForceModel::lipschitz_bound() const {
  double s = 0.0;
  for (double c : coefficients_) s += std::abs(c);
  return s * std::sqrt(2.0 * gamma_ / std::exp(1.0));
}

ForceModel ForceModel::from_parts(std::size_t dim, std::vector<double> support_vectors,
                                  std::vector<double> coefficients, double bias, double gamma, double C,
                                  double epsilon, FeatureSet set) {
  if (dim == 0 || support_vectors.size() != coefficients.size() * dim)
    throw std::invalid_argument("ForceModel: support vector array does not match coefficients");
  ForceModel m;
  m.dim_ = dim;
  m.support_vectors_ = std::move(support_vectors);
  m.coefficients_ = std::move(coefficients);
  m.bias_ = bias;
  m.gamma_ = gamma;
  m.C_ = C;
  m.epsilon_ = epsilon;
  m.feature_set_ = set;
  return m;
}

std::string ForceModel::to_json() const {
  nlohmann::json j;
  j["format"] = "forte-force-model";
  j["version"] = 1;
  j["feature_ordering_tag"] = feature_set_tag(feature_set_);
  j["dim"] = dim_;
  j["gamma"] = gamma_;
  j["C"] = C_;
  j["epsilon"] = epsilon_;
  j["bias"] = bias_;
  j["n_sv"] = coefficients_.size();
  j["coefficients"] = coefficients_;
  auto svs = nlohmann::json::array();
  for (std::size_t i = 0; i < coefficients_.size(); ++i) {
    auto sv = support_vector(i);
    svs.push_back(std::vector<double>(sv.begin(), sv.end()));
  }
  j["support_vectors"] = std::move(svs);
  return j.dump(1) + "\n";
}

ForceModel ForceModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("force model: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "forte-force-model") throw DataError("force model: wrong format tag");
    if (j.at("version").get<int>() != 1) throw DataError("force model: unsupported version");
    const auto set = parse_feature_set(j.at("feature_ordering_tag").get<std::string>());
    const auto dim = j.at("dim").get<std::size_t>();
    const auto n_sv = j.at("n_sv").get<std::size_t>();
    auto coeffs = j.at("coefficients").get<std::vector<double>>();
    const auto& svs = j.at("support_vectors");
    if (coeffs.size() != n_sv || svs.size() != n_sv) throw DataError("force model: n_sv does not match arrays");
    if (dim != feature_dim(set)) throw DataError("force model: dim does not match feature ordering");
    std::vector<double> flat;
    flat.reserve(n_sv * dim);
    for (const auto& sv : svs) {
      auto row = sv.get<std::vector<double>>();
      if (row.size() != dim) throw DataError("force model: support vector has wrong length");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    return from_parts(dim, std::move(flat), std::move(coeffs), j.at("bias").get<double>(),
                      j.at("gamma").get<double>(), j.at("C").get<double>(), j.at("epsilon").get<double>(), set);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("force model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("force model: ") + e.what());
  }
}

void ForceModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << to_json();
}

ForceModel ForceModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open force model '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

// ---------------------------------------------------------------------------

double median_pairwise_sq_distance(std::span<const ForceSample> samples, std::size_t max_pairs) {
  const std::size_t n = samples.size();
  if (n < 2) return 0.0;
  std::vector<double> d;
  const std::size_t total = n * (n - 1) / 2;
  // Deterministic stride through the pair list when it is too long.
  const std::size_t stride = total > max_pairs ? total / max_pairs + 1 : 1;
  std::size_t idx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++idx) {
      if (idx % stride != 0) continue;
      d.push_back(sq_dist(samples[i].x.data(), samples[j].x.data(), samples[i].x.size()));
    }
  }
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

double default_gamma(std::span<const ForceSample> samples) {
  if (samples.empty()) return 1.0;
  const double med = median_pairwise_sq_distance(samples);
  const double dim = static_cast<double>(samples.front().x.size());
  return med > 0.0 ? 1.0 / (dim * med) : 1.0;
}

namespace {

/// Rows of the RBF Gram matrix with least-recently-used eviction.
class KernelCache {
 public:
  KernelCache(std::span<const ForceSample> samples, double gamma, double budget_mb)
      : samples_(samples), gamma_(gamma), n_(samples.size()) {
    const double row_bytes = static_cast<double>(n_) * sizeof(double);
    capacity_ = static_cast<std::size_t>(std::max(2.0, budget_mb * 1024.0 * 1024.0 / row_bytes));
    capacity_ = std::min(capacity_, n_);
  }

  const double* row(std::size_t i) {
    auto it = index_.find(i);
    if (it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->data.data();
    }
    if (index_.size() >= capacity_) {
      auto& victim = lru_.back();
      index_.erase(victim.key);
      lru_.pop_back();
    }
    lru_.push_front(Entry{i, std::vector<double>(n_)});
    index_[i] = lru_.begin();
    double* r = lru_.front().data.data();
    const auto& xi = samples_[i].x;
    for (std::size_t k = 0; k < n_; ++k) r[k] = std::exp(-gamma_ * sq_dist(xi.data(), samples_[k].x.data(), xi.size()));
    return r;
  }

 private:
  struct Entry {
    std::size_t key;
    std::vector<double> data;
  };
  std::span<const ForceSample> samples_;
  double gamma_;
  std::size_t n_;
  std::size_t capacity_;
  std::list<Entry> lru_;
  std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
};

struct SmoResult {
  std::vector<double> alpha;  // 2n: alpha then alpha*
  double rho = 0.0;
  double gap = 0.0;
  double objective = 0.0;
  std::uint64_t iterations = 0;
  bool converged = false;
};

// Dual of epsilon-SVR in the doubled-variable form
//   min 1/2 a'Qa + p'a,  y'a = 0,  0 <= a <= C,
// with y = (+1...,-1...), p = (eps - z, eps + z), Q_ij = y_i y_j K(i mod n, j mod n).
SmoResult solve_smo(std::span<const ForceSample> samples, const SvrParams& params, double gamma) {
  const std::size_t n = samples.size();
  const std::size_t m = 2 * n;
  const double C = params.C;
  constexpr double kTau = 1e-12;
  KernelCache cache(samples, gamma, params.cache_mb);

  auto y = [n](std::size_t t) { return t < n ? 1.0 : -1.0; };
  std::vector<double> alpha(m, 0.0), G(m), p(m);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = params.epsilon - samples[i].force_n;
    p[i + n] = params.epsilon + samples[i].force_n;
  }
  G = p;

  const std::uint64_t cap =
      params.max_iterations > 0 ? params.max_iterations : std::max<std::uint64_t>(10000000, 100 * m);
  SmoResult res;
  std::uint64_t iter = 0;
  double gap = std::numeric_limits<double>::infinity();
  while (true) {
    // Second-order working set selection.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i_sel = m;
    for (std::size_t t = 0; t < m; ++t) {
      if (y(t) > 0) {
        if (alpha[t] < C && -G[t] >= gmax) {
          gmax = -G[t];
          i_sel = t;
        }
      } else if (alpha[t] > 0 && G[t] >= gmax) {
        gmax = G[t];
        i_sel = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::size_t j_sel = m;
    double obj_min = std::numeric_limits<double>::infinity();
    const double* Ki = i_sel < m ? cache.row(i_sel % n) : nullptr;
    const double yi = i_sel < m ? y(i_sel) : 0.0;
    for (std::size_t t = 0; t < m && Ki; ++t) {
      const double qit = yi * y(t) * Ki[t % n];
      if (y(t) > 0) {
        if (alpha[t] > 0) {
          const double diff = gmax + G[t];
          gmax2 = std::max(gmax2, G[t]);
          if (diff > 0) {
            double quad = 2.0 - 2.0 * yi * qit;
            if (quad <= 0) quad = kTau;
            const double obj = -diff * diff / quad;
            if (obj <= obj_min) {
              obj_min = obj;
              j_sel = t;
            }
          }
        }
      } else if (alpha[t] < C) {
        const double diff = gmax - G[t];
        gmax2 = std::max(gmax2, -G[t]);
        if (diff > 0) {
          double quad = 2.0 + 2.0 * yi * qit;
          if (quad <= 0) quad = kTau;
          const double obj = -diff * diff / quad;
          if (obj <= obj_min) {
            obj_min = obj;
            j_sel = t;
          }
        }
      }
    }
    gap = gmax + gmax2;
    if (!(gap >= params.tolerance) || j_sel == m) {
      res.converged = true;
      break;
    }
    if (iter >= cap) break;
    ++iter;

    const std::size_t i = i_sel, j = j_sel;
    Ki = cache.row(i % n);
    const double* Kj = cache.row(j % n);
    const double yj = y(j);
    const double qij = yi * yj * Ki[j % n];
    const double ai_old = alpha[i], aj_old = alpha[j];
    double& ai = alpha[i];
    double& aj = alpha[j];
    if (yi != yj) {
      double quad = 2.0 + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0) {
        if (aj < 0) {
          aj = 0;
          ai = diff;
        }
      } else if (ai < 0) {
        ai = 0;
        aj = -diff;
      }
      if (diff > 0) {
        if (ai > C) {
          ai = C;
          aj = C - diff;
        }
      } else if (aj > C) {
        aj = C;
        ai = C + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > C) {
        if (ai > C) {
          ai = C;
          aj = sum - C;
        }
      } else if (aj < 0) {
        aj = 0;
        ai = sum;
      }
      if (sum > C) {
        if (aj > C) {
          aj = C;
          ai = sum - C;
        }
      } else if (ai < 0) {
        ai = 0;
        aj = sum;
      }
    }
    const double dai = ai - ai_old, daj = aj - aj_old;
    for (std::size_t t = 0; t < m; ++t) {
      const double yt = y(t);
      G[t] += yi * yt * Ki[t % n] * dai + yj * yt * Kj[t % n] * daj;
    }
  }

  // Offset from free variables, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < m; ++t) {
    const double yg = y(t) * G[t];
    if (alpha[t] >= C) {
      if (y(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  res.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (std::isfinite(ub) && std::isfinite(lb) ? (ub + lb) / 2 : 0.0);
  double obj = 0.0;
  for (std::size_t t = 0; t < m; ++t) obj += alpha[t] * (G[t] + p[t]);
  res.objective = obj / 2.0;
  res.gap = std::isfinite(gap) ? std::max(0.0, gap) : 0.0;
  res.iterations = iter;
  res.alpha = std::move(alpha);
  return res;
}

}  // namespace

ForceModel train_svr(std::span<const ForceSample> samples, const SvrParams& params, TrainStats* stats,
                     FeatureSet set) {
  if (samples.empty()) throw std::invalid_argument("train_svr: no samples");
  if (!(params.C > 0.0) || !(params.epsilon >= 0.0) || !(params.tolerance > 0.0))
    throw std::invalid_argument("train_svr: C and tolerance must be positive, epsilon non-negative");
  const std::size_t dim = samples.front().x.size();
  if (dim == 0) throw std::invalid_argument("train_svr: empty feature vectors");
  for (const auto& s : samples) {
    if (s.x.size() != dim) throw std::invalid_argument("train_svr: inconsistent feature dimension");
    if (!std::isfinite(s.force_n) || !std::all_of(s.x.begin(), s.x.end(), [](double v) { return std::isfinite(v); }))
      throw std::invalid_argument("train_svr: non-finite feature or target");
  }
  const double gamma = params.gamma > 0.0 ? params.gamma : default_gamma(samples);
  const SmoResult r = solve_smo(samples, params, gamma);

  const std::size_t n = samples.size();
  std::vector<double> svs, coeffs;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = r.alpha[i] - r.alpha[i + n];
    if (c == 0.0) continue;
    coeffs.push_back(c);
    svs.insert(svs.end(), samples[i].x.begin(), samples[i].x.end());
  }
  ForceModel model =
      ForceModel::from_parts(dim, std::move(svs), std::move(coeffs), -r.rho, gamma, params.C, params.epsilon, set);
  TrainStats st;
  st.iterations = r.iterations;
  st.kkt_residual = r.gap;
  st.dual_objective = r.objective;
  st.num_samples = n;
  if (stats) *stats = st;
  if (!r.converged)
    throw TrainingError("train_svr: iteration cap reached with KKT gap " + format_double(r.gap), std::move(model), st);
  return model;
}

namespace {

std::vector<ForceSample> pool(std::span<const ForceTrial> trials) {
  std::vector<ForceSample> out;
  for (const auto& t : trials) out.insert(out.end(), t.samples.begin(), t.samples.end());
  return out;
}

}  // namespace

ForceModel train(std::span<const ForceTrial> trials, const SvrParams& params, TrainStats* stats, FeatureSet set) {
  if (trials.size() < 2) throw std::invalid_argument("train: need at least two trials");
  const auto samples = pool(trials);
  return train_svr(samples, params, stats, set);
}

double rmse(const ForceModel& model, std::span<const ForceSample> samples) {
  if (samples.empty()) return 0.0;
  double ss = 0.0;
  for (const auto& s : samples) {
    const double e = model.predict(s.x) - s.force_n;
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(samples.size()));
}

CrossValidationResult cross_validate(std::span<const ForceTrial> trials, int folds, const SvrParams& params,
                                     std::uint64_t seed, FeatureSet set) {
  if (folds < 2) throw std::invalid_argument("cross_validate: need at least two folds");
  if (static_cast<std::size_t>(folds) > trials.size())
    throw std::invalid_argument("cross_validate: more folds than trials");
  std::vector<std::size_t> order(trials.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<int> fold_of(trials.size());
  for (std::size_t k = 0; k < order.size(); ++k) fold_of[order[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));

  CrossValidationResult res;
  double pooled_ss = 0.0;
  std::size_t pooled_n = 0;
  for (int f = 0; f < folds; ++f) {
    std::vector<ForceSample> train_set, test_set;
    std::vector<std::string> ids;
    for (std::size_t t = 0; t < trials.size(); ++t) {
      auto& dst = fold_of[t] == f ? test_set : train_set;
      dst.insert(dst.end(), trials[t].samples.begin(), trials[t].samples.end());
      if (fold_of[t] == f) ids.push_back(trials[t].id);
    }
    const ForceModel model = train_svr(train_set, params, nullptr, set);
    const double e = rmse(model, test_set);
    res.fold_rmse.push_back(e);
    res.fold_samples.push_back(test_set.size());
    res.fold_test_ids.push_back(std::move(ids));
    pooled_ss += e * e * static_cast<double>(test_set.size());
    pooled_n += test_set.size();
  }
  res.mean_rmse = std::accumulate(res.fold_rmse.begin(), res.fold_rmse.end(), 0.0) / folds;
  res.pooled_rmse = pooled_n > 0 ? std::sqrt(pooled_ss / static_cast<double>(pooled_n)) : 0.0;
  return res;
}

// ---------------------------------------------------------------------------

ForceEstimator::ForceEstimator(const ForceModel& model, double sample_rate_hz, int hop)
    : model_(&model), fs_(sample_rate_hz), hop_(hop), x_(model.dim()) {
  if (hop < 1) throw std::invalid_argument("ForceEstimator: hop must be positive");
}

bool ForceEstimator::update(const ChannelRing& ring) {
  const bool due = seen_ % static_cast<std::uint64_t>(hop_) == 0;
  ++seen_;
  if (!due) return false;
  const ForceFeature f = build_feature(ring, fs_);
  std::copy_n(f.v.begin(), x_.size(), x_.begin());
  force_ = model_->predict(x_);
  return true;
}

}  // namespace forte
