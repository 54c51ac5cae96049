#pragma once

// Federated batch gradient descent on linear models. The pool holds a global
// model, miners hold disjoint data shards; each epoch every miner computes a
// full-batch gradient on its shard, the pool aggregates them weighted by
// sample count and applies one step. For these models the aggregate equals
// the centralized full-batch gradient, which is what makes the pool's
// training verifiable against a single-node replay.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "pofl/errors.hpp"
#include "pofl/hash.hpp"

namespace pofl {

struct Dataset {
  std::size_t n_features = 0;
  std::size_t n_outputs = 0;
  std::vector<std::vector<double>> x;  // one row per sample
  std::vector<std::vector<double>> y;

  std::size_t size() const { return x.size(); }

  void check() const {
    if (x.size() != y.size()) throw InvalidArgument("dataset: x/y size mismatch");
    for (const auto& row : x)
      if (row.size() != n_features) throw InvalidArgument("dataset: bad feature row");
    for (const auto& row : y)
      if (row.size() != n_outputs) throw InvalidArgument("dataset: bad target row");
  }

  Dataset slice(std::size_t begin, std::size_t count) const {
    Dataset d;
    d.n_features = n_features;
    d.n_outputs = n_outputs;
    for (std::size_t i = begin; i < begin + count && i < size(); ++i) {
      d.x.push_back(x[i]);
      d.y.push_back(y[i]);
    }
    return d;
  }
};

// Linear map y = W x, with the bias folded in as a constant-1 feature by the
// task generator. Weights stored row-major [output][feature].
struct LinearModel {
  std::size_t n_features = 0;
  std::size_t n_outputs = 0;
  std::vector<double> w;

  static LinearModel zeros(std::size_t features, std::size_t outputs) {
    LinearModel m;
    m.n_features = features;
    m.n_outputs = outputs;
    m.w.assign(features * outputs, 0.0);
    return m;
  }

  double& at(std::size_t out, std::size_t feat) { return w[out * n_features + feat]; }
  double at(std::size_t out, std::size_t feat) const { return w[out * n_features + feat]; }

  std::vector<double> predict(const std::vector<double>& xs) const {
    std::vector<double> out(n_outputs, 0.0);
    for (std::size_t o = 0; o < n_outputs; ++o)
      for (std::size_t j = 0; j < n_features; ++j) out[o] += at(o, j) * xs[j];
    return out;
  }
};

// Mean squared error summed over outputs, averaged over samples.
inline double loss(const LinearModel& m, const Dataset& d) {
  if (d.size() == 0) throw InvalidArgument("loss: empty dataset");
  double total = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto pred = m.predict(d.x[i]);
    for (std::size_t o = 0; o < d.n_outputs; ++o) {
      double e = pred[o] - d.y[i][o];
      total += e * e;
    }
  }
  return total / static_cast<double>(d.size());
}

// Fraction of samples whose every output is within tau of the target.
inline double accuracy(const LinearModel& m, const Dataset& d, double tau) {
  if (d.size() == 0) throw InvalidArgument("accuracy: empty dataset");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto pred = m.predict(d.x[i]);
    bool ok = true;
    for (std::size_t o = 0; o < d.n_outputs; ++o)
      if (std::fabs(pred[o] - d.y[i][o]) > tau) ok = false;
    if (ok) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(d.size());
}

// d(loss)/dW, full batch: 2/n * sum_i (W x_i - y_i) x_i^T.
inline std::vector<double> full_gradient(const LinearModel& m, const Dataset& d) {
  if (d.size() == 0) throw InvalidArgument("full_gradient: empty dataset");
  std::vector<double> g(m.w.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto pred = m.predict(d.x[i]);
    for (std::size_t o = 0; o < m.n_outputs; ++o) {
      double e = pred[o] - d.y[i][o];
      for (std::size_t j = 0; j < m.n_features; ++j)
        g[o * m.n_features + j] += 2.0 * e * d.x[i][j];
    }
  }
  for (double& v : g) v /= static_cast<double>(d.size());
  return g;
}

// Central-difference gradient, the independent check for full_gradient.
inline std::vector<double> finite_diff_gradient(const LinearModel& m, const Dataset& d,
                                                double h = 1e-6) {
  std::vector<double> g(m.w.size());
  LinearModel probe = m;
  for (std::size_t k = 0; k < m.w.size(); ++k) {
    probe.w[k] = m.w[k] + h;
    double up = loss(probe, d);
    probe.w[k] = m.w[k] - h;
    double dn = loss(probe, d);
    probe.w[k] = m.w[k];
    g[k] = (up - dn) / (2.0 * h);
  }
  return g;
}

struct MinerGradient {
  std::size_t samples = 0;
  std::vector<double> grad;
};

inline MinerGradient local_gradient(const LinearModel& m, const Dataset& shard) {
  return MinerGradient{shard.size(), full_gradient(m, shard)};
}

// Sample-count-weighted mean of miner gradients.
inline std::vector<double> aggregate(const std::vector<MinerGradient>& parts) {
  if (parts.empty()) throw InvalidArgument("aggregate: no gradients");
  std::size_t total = 0;
  for (const auto& p : parts) total += p.samples;
  if (total == 0) throw InvalidArgument("aggregate: zero samples");
  std::vector<double> g(parts[0].grad.size(), 0.0);
  for (const auto& p : parts) {
    if (p.grad.size() != g.size()) throw InvalidArgument("aggregate: gradient size mismatch");
    double w = static_cast<double>(p.samples) / static_cast<double>(total);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += w * p.grad[k];
  }
  return g;
}

inline void apply_update(LinearModel& m, const std::vector<double>& grad, double zeta) {
  if (grad.size() != m.w.size()) throw InvalidArgument("apply_update: size mismatch");
  for (std::size_t k = 0; k < m.w.size(); ++k) m.w[k] -= zeta * grad[k];
}

// Split a dataset into `miners` contiguous shards as equal as possible.
inline std::vector<Dataset> shard_dataset(const Dataset& d, std::size_t miners) {
  if (miners == 0 || miners > d.size()) throw InvalidArgument("shard_dataset: bad miner count");
  std::vector<Dataset> out;
  std::size_t base = d.size() / miners, extra = d.size() % miners, at = 0;
  for (std::size_t i = 0; i < miners; ++i) {
    std::size_t take = base + (i < extra ? 1 : 0);
    out.push_back(d.slice(at, take));
    at += take;
  }
  return out;
}

struct EpochStats {
  double train_loss = 0;
  double eval_accuracy = 0;
};

struct TrainResult {
  LinearModel model;
  std::vector<EpochStats> epochs;
};

// One federated training run: broadcast, local gradients, aggregate, step.
inline TrainResult federated_train(LinearModel model, const std::vector<Dataset>& shards,
                                   const Dataset& eval, double zeta, std::size_t epochs,
                                   double acc_tau) {
  TrainResult res;
  std::vector<MinerGradient> parts(shards.size());
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t i = 0; i < shards.size(); ++i) parts[i] = local_gradient(model, shards[i]);
    apply_update(model, aggregate(parts), zeta);
    EpochStats st;
    double n = 0;
    for (const auto& s : shards) {
      st.train_loss += loss(model, s) * static_cast<double>(s.size());
      n += static_cast<double>(s.size());
    }
    st.train_loss /= n;
    st.eval_accuracy = accuracy(model, eval, acc_tau);
    res.epochs.push_back(st);
  }
  res.model = std::move(model);
  return res;
}

// Synthetic linear-regression task: targets from a hidden model plus noise,
// features uniform in [-1,1] with a constant-1 bias column.
struct SyntheticTask {
  Dataset train;
  Dataset eval;
  LinearModel truth;
};

inline SyntheticTask make_synthetic_task(SplitPrg& prg, std::size_t n_train, std::size_t n_eval,
                                         std::size_t n_features, std::size_t n_outputs,
                                         double noise) {
  SyntheticTask task;
  std::size_t feats = n_features + 1;  // +1 bias column
  task.truth = LinearModel::zeros(feats, n_outputs);
  for (double& w : task.truth.w) w = prg.uniform_double(-1.0, 1.0);
  auto fill = [&](Dataset& d, std::size_t n) {
    d.n_features = feats;
    d.n_outputs = n_outputs;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> xs(feats, 1.0);
      for (std::size_t j = 1; j < feats; ++j) xs[j] = prg.uniform_double(-1.0, 1.0);
      auto ys = task.truth.predict(xs);
      for (double& v : ys) v += noise * (prg.uniform_double() * 2.0 - 1.0);
      d.x.push_back(std::move(xs));
      d.y.push_back(std::move(ys));
    }
  };
  fill(task.train, n_train);
  fill(task.eval, n_eval);
  return task;
}

inline std::size_t epochs_to_loss(const TrainResult& r, double threshold) {
  for (std::size_t e = 0; e < r.epochs.size(); ++e)
    if (r.epochs[e].train_loss <= threshold) return e + 1;
  return r.epochs.size() + 1;  // never reached
}

inline std::size_t epochs_to_accuracy(const TrainResult& r, double threshold) {
  for (std::size_t e = 0; e < r.epochs.size(); ++e)
    if (r.epochs[e].eval_accuracy >= threshold) return e + 1;
  return r.epochs.size() + 1;
}

}  // namespace pofl
