#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "armplan/rng.hpp"
#include "armplan/sensors.hpp"

namespace armplan {

template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct NetworkSpec {
  int input_dim = kObservationDim;
  std::vector<int> shared_layers = {256, 256};
  std::vector<int> actor_head = {64};   // hidden widths; a linear action_dim output follows
  std::vector<int> critic_head = {64};  // hidden widths; a linear scalar output follows
  int action_dim = 6;
  double action_scale = 0.005;  // mean = action_scale * tanh(u)

  bool operator==(const NetworkSpec&) const = default;
};

template <typename T>
struct Dense {
  MatX<T> W;  // (out, in)
  VecX<T> b;  // (out)

  static Dense zeros_like(const Dense& other) {
    Dense d;
    d.W = MatX<T>::Zero(other.W.rows(), other.W.cols());
    d.b = VecX<T>::Zero(other.b.size());
    return d;
  }
};

// Named view over one contiguous parameter block.
template <typename T>
struct ParamBlockRef {
  std::string name;
  T* data;
  Eigen::Index size;
};

template <typename T>
struct LossSpec {
  T clip = static_cast<T>(0.2);
  T vf_coef = static_cast<T>(0.5);
  T ent_coef = static_cast<T>(0.0);
};

template <typename T>
struct Minibatch {
  MatX<T> obs;         // (input_dim, B)
  MatX<T> actions;     // (action_dim, B), pre-clamp samples
  VecX<T> old_logp;    // (B)
  VecX<T> advantages;  // (B)
  VecX<T> returns;     // (B)

  Eigen::Index size() const { return obs.cols(); }
};

template <typename T>
struct LossMetrics {
  T total = 0;
  T policy_loss = 0;
  T value_loss = 0;
  T entropy = 0;
  T clip_fraction = 0;
  T approx_kl = 0;
};

// Actor-critic MLP: shared tanh trunk, tanh actor/critic heads with linear
// outputs, state-independent log_std. Parameters live in plain Eigen
// matrices; gradients are computed analytically.
template <typename T>
struct PolicyNet {
  NetworkSpec spec;
  std::vector<Dense<T>> shared;
  std::vector<Dense<T>> actor;   // hidden... + output layer (action_dim)
  std::vector<Dense<T>> critic;  // hidden... + output layer (1)
  VecX<T> log_std;               // (action_dim)

  static PolicyNet init(const NetworkSpec& spec, uint64_t seed);
  static PolicyNet zeros(const NetworkSpec& spec);

  // means: (action_dim, B) squashed to +/- action_scale; values: (B).
  void forward(const MatX<T>& obs, MatX<T>& means, VecX<T>& values) const;

  // Diagonal Gaussian sample in squashed space; returns the pre-clamp sample
  // and its log density. Clamping to the action bounds happens at the env
  // boundary.
  void sample_action(const VecX<T>& mean, Rng& rng, VecX<T>& action, T& logp) const;

  T log_prob(const VecX<T>& mean, const VecX<T>& action) const;

  // Gaussian differential entropy (state independent).
  T entropy() const;

  // Analytic gradients of the composite PPO loss over the minibatch.
  // Gradient blocks mirror the parameter blocks exactly.
  PolicyNet backward(const Minibatch<T>& mb, const LossSpec<T>& loss,
                     LossMetrics<T>* metrics = nullptr) const;

  // Loss value only (same forward path the gradients differentiate).
  T loss_value(const Minibatch<T>& mb, const LossSpec<T>& loss) const;

  std::vector<ParamBlockRef<T>> param_blocks();
  std::vector<ParamBlockRef<const T>> param_blocks() const;
  Eigen::Index param_count() const;

  template <typename U>
  PolicyNet<U> cast() const;
};

// Checkpoint file: magic, little-endian header length, JSON header (spec +
// shape table + precision), raw little-endian parameter blob.
template <typename T>
void save_checkpoint(const PolicyNet<T>& net, const std::string& path);

template <typename T>
PolicyNet<T> load_checkpoint(const std::string& path,
                             const NetworkSpec* expected_spec = nullptr);

// Precision recorded in a checkpoint header without loading the blob.
std::string checkpoint_precision(const std::string& path);

// ---- implementation ----

namespace detail {

template <typename T>
MatX<T> orthogonal(Eigen::Index rows, Eigen::Index cols, T gain, Rng& rng) {
  const Eigen::Index n = std::max(rows, cols);
  MatX<double> a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  const Eigen::HouseholderQR<MatX<double>> qr(a);
  MatX<double> q = qr.householderQ() * MatX<double>::Identity(n, n);
  const MatX<double> r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return (gain * q.topLeftCorner(rows, cols).template cast<T>()).eval();
}

template <typename T>
inline T gaussian_log_norm() {
  return static_cast<T>(-0.5 * std::log(2.0 * M_PI));
}

}  // namespace detail

template <typename T>
PolicyNet<T> PolicyNet<T>::init(const NetworkSpec& spec, uint64_t seed) {
  Rng rng(seed);
  PolicyNet net;
  net.spec = spec;

  auto make_stack = [&](int in, const std::vector<int>& widths, int out, T out_gain) {
    std::vector<Dense<T>> layers;
    int prev = in;
    for (int w : widths) {
      Dense<T> d;
      d.W = detail::orthogonal<T>(w, prev, static_cast<T>(1.0), rng);
      d.b = VecX<T>::Zero(w);
      layers.push_back(std::move(d));
      prev = w;
    }
    Dense<T> head;
    head.W = detail::orthogonal<T>(out, prev, out_gain, rng);
    head.b = VecX<T>::Zero(out);
    layers.push_back(std::move(head));
    return layers;
  };

  // The shared trunk has no output head of its own; build as widths only.
  {
    int prev = spec.input_dim;
    for (int w : spec.shared_layers) {
      Dense<T> d;
      d.W = detail::orthogonal<T>(w, prev, static_cast<T>(1.0), rng);
      d.b = VecX<T>::Zero(w);
      net.shared.push_back(std::move(d));
      prev = w;
    }
  }
  const int trunk_out = spec.shared_layers.empty() ? spec.input_dim : spec.shared_layers.back();
  net.actor = make_stack(trunk_out, spec.actor_head, spec.action_dim, static_cast<T>(0.01));
  net.critic = make_stack(trunk_out, spec.critic_head, 1, static_cast<T>(1.0));
  net.log_std =
      VecX<T>::Constant(spec.action_dim, static_cast<T>(std::log(0.5 * spec.action_scale)));
  return net;
}

template <typename T>
PolicyNet<T> PolicyNet<T>::zeros(const NetworkSpec& spec) {
  PolicyNet net;
  net.spec = spec;
  auto zero_dense = [](int out, int in) {
    return Dense<T>{MatX<T>::Zero(out, in), VecX<T>::Zero(out)};
  };
  int prev = spec.input_dim;
  for (int w : spec.shared_layers) {
    net.shared.push_back(zero_dense(w, prev));
    prev = w;
  }
  auto zero_stack = [&](int in, const std::vector<int>& widths, int out) {
    std::vector<Dense<T>> layers;
    int p = in;
    for (int w : widths) {
      layers.push_back(zero_dense(w, p));
      p = w;
    }
    layers.push_back(zero_dense(out, p));
    return layers;
  };
  net.actor = zero_stack(prev, spec.actor_head, spec.action_dim);
  net.critic = zero_stack(prev, spec.critic_head, 1);
  net.log_std = VecX<T>::Zero(spec.action_dim);
  return net;
}

namespace detail {

// Forward activations cached for the backward pass.
template <typename T>
struct ForwardCache {
  std::vector<MatX<T>> shared_h;   // post-tanh per shared layer
  std::vector<MatX<T>> actor_h;    // post-tanh per actor hidden layer
  std::vector<MatX<T>> critic_h;   // post-tanh per critic hidden layer
  MatX<T> u;                       // actor linear output (pre squash)
  MatX<T> mean;                    // action_scale * tanh(u)
  VecX<T> value;
};

// Column-by-column products: every sample's result is independent of its
// batch position, so permuting the batch permutes outputs bit-exactly.
template <typename T>
MatX<T> dense_apply(const Dense<T>& layer, const MatX<T>& in) {
  MatX<T> z(layer.b.size(), in.cols());
  for (Eigen::Index j = 0; j < in.cols(); ++j) z.col(j).noalias() = layer.W * in.col(j);
  z.colwise() += layer.b;
  return z;
}

template <typename T>
void run_forward(const PolicyNet<T>& net, const MatX<T>& obs, ForwardCache<T>& c) {
  const MatX<T>* h = &obs;
  c.shared_h.clear();
  c.actor_h.clear();
  c.critic_h.clear();
  for (const auto& layer : net.shared) {
    c.shared_h.push_back(dense_apply(layer, *h).array().tanh().matrix());
    h = &c.shared_h.back();
  }
  const MatX<T>& trunk = *h;

  const MatX<T>* ha = &trunk;
  for (size_t i = 0; i + 1 < net.actor.size(); ++i) {
    c.actor_h.push_back(dense_apply(net.actor[i], *ha).array().tanh().matrix());
    ha = &c.actor_h.back();
  }
  c.u = dense_apply(net.actor.back(), *ha);
  c.mean = static_cast<T>(net.spec.action_scale) * c.u.array().tanh().matrix();

  const MatX<T>* hc = &trunk;
  for (size_t i = 0; i + 1 < net.critic.size(); ++i) {
    c.critic_h.push_back(dense_apply(net.critic[i], *hc).array().tanh().matrix());
    hc = &c.critic_h.back();
  }
  c.value = dense_apply(net.critic.back(), *hc).row(0).transpose();
}

}  // namespace detail

template <typename T>
void PolicyNet<T>::forward(const MatX<T>& obs, MatX<T>& means, VecX<T>& values) const {
  if (obs.rows() != spec.input_dim)
    throw std::invalid_argument("policy forward: observation dim mismatch");
  if (!obs.allFinite()) throw std::invalid_argument("policy forward: non-finite observation");
  detail::ForwardCache<T> c;
  detail::run_forward(*this, obs, c);
  means = std::move(c.mean);
  values = std::move(c.value);
}

template <typename T>
void PolicyNet<T>::sample_action(const VecX<T>& mean, Rng& rng, VecX<T>& action, T& logp) const {
  const int n = spec.action_dim;
  action.resize(n);
  logp = 0;
  for (int i = 0; i < n; ++i) {
    const T std = std::exp(log_std[i]);
    action[i] = mean[i] + std * static_cast<T>(rng.normal());
  }
  logp = log_prob(mean, action);
}

template <typename T>
T PolicyNet<T>::log_prob(const VecX<T>& mean, const VecX<T>& action) const {
  T logp = 0;
  for (int i = 0; i < spec.action_dim; ++i) {
    const T z = (action[i] - mean[i]) * std::exp(-log_std[i]);
    logp += detail::gaussian_log_norm<T>() - log_std[i] - static_cast<T>(0.5) * z * z;
  }
  return logp;
}

template <typename T>
T PolicyNet<T>::entropy() const {
  const T c = static_cast<T>(0.5 * std::log(2.0 * M_PI * std::exp(1.0)));
  return log_std.sum() + c * static_cast<T>(spec.action_dim);
}

namespace detail {

// dL/d(post-activation of layer input) propagated through a dense stack.
// hs[i] is the post-tanh activation of hidden layer i; input is the stack
// input. Returns dL/d(input) and accumulates gradients.
template <typename T>
MatX<T> backprop_stack(const std::vector<Dense<T>>& layers, const std::vector<MatX<T>>& hs,
                       const MatX<T>& input, MatX<T> d_out, std::vector<Dense<T>>& grads) {
  // d_out: gradient at the linear output of the last layer.
  for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
    const MatX<T>& in = i == 0 ? input : hs[i - 1];
    grads[i].W += d_out * in.transpose();
    grads[i].b += d_out.rowwise().sum();
    if (i == 0) return layers[i].W.transpose() * d_out;
    MatX<T> dh = layers[i].W.transpose() * d_out;
    d_out = dh.cwiseProduct(MatX<T>::Ones(dh.rows(), dh.cols()) - hs[i - 1].cwiseProduct(hs[i - 1]));
  }
  return MatX<T>();
}

}  // namespace detail

template <typename T>
PolicyNet<T> PolicyNet<T>::backward(const Minibatch<T>& mb, const LossSpec<T>& loss,
                                    LossMetrics<T>* metrics) const {
  const Eigen::Index B = mb.size();
  detail::ForwardCache<T> c;
  detail::run_forward(*this, mb.obs, c);

  PolicyNet grads = zeros(spec);
  const T invB = static_cast<T>(1.0) / static_cast<T>(B);

  // Per-sample log prob under the current parameters.
  VecX<T> logp(B);
  MatX<T> z = MatX<T>::Zero(spec.action_dim, B);  // (a - mean) / sigma
  VecX<T> sigma(spec.action_dim), inv_sigma(spec.action_dim);
  for (int i = 0; i < spec.action_dim; ++i) {
    sigma[i] = std::exp(log_std[i]);
    inv_sigma[i] = static_cast<T>(1.0) / sigma[i];
  }
  for (Eigen::Index k = 0; k < B; ++k) {
    T lp = 0;
    for (int i = 0; i < spec.action_dim; ++i) {
      const T zz = (mb.actions(i, k) - c.mean(i, k)) * inv_sigma[i];
      z(i, k) = zz;
      lp += detail::gaussian_log_norm<T>() - log_std[i] - static_cast<T>(0.5) * zz * zz;
    }
    logp[k] = lp;
  }

  // Clipped surrogate. dL/dlogp = -A * ratio when the unclipped branch is
  // active, 0 when the clip saturates.
  VecX<T> dlogp(B);
  T policy_loss = 0, clip_count = 0, approx_kl = 0;
  for (Eigen::Index k = 0; k < B; ++k) {
    const T logratio = logp[k] - mb.old_logp[k];
    const T ratio = std::exp(logratio);
    const T A = mb.advantages[k];
    const T clipped = std::clamp(ratio, static_cast<T>(1.0) - loss.clip,
                                 static_cast<T>(1.0) + loss.clip);
    const T s1 = ratio * A;
    const T s2 = clipped * A;
    policy_loss += -std::min(s1, s2);
    dlogp[k] = s1 <= s2 ? -A * ratio * invB : static_cast<T>(0);
    if (std::abs(ratio - static_cast<T>(1.0)) > loss.clip) clip_count += 1;
    approx_kl += (ratio - static_cast<T>(1.0)) - logratio;
  }
  policy_loss *= invB;

  // Value regression.
  VecX<T> verr = c.value - mb.returns;
  const T value_loss = verr.squaredNorm() * invB;
  VecX<T> dvalue = static_cast<T>(2.0) * loss.vf_coef * invB * verr;

  const T ent = entropy();
  if (metrics) {
    metrics->policy_loss = policy_loss;
    metrics->value_loss = value_loss;
    metrics->entropy = ent;
    metrics->total = policy_loss + loss.vf_coef * value_loss - loss.ent_coef * ent;
    metrics->clip_fraction = clip_count * invB;
    metrics->approx_kl = approx_kl * invB;
  }

  // dL/dmean and dL/dlog_std through the Gaussian density.
  MatX<T> dmean(spec.action_dim, B);
  for (Eigen::Index k = 0; k < B; ++k)
    for (int i = 0; i < spec.action_dim; ++i) {
      dmean(i, k) = dlogp[k] * z(i, k) * inv_sigma[i];
      grads.log_std[i] += dlogp[k] * (z(i, k) * z(i, k) - static_cast<T>(1.0));
    }
  grads.log_std.array() -= loss.ent_coef;  // entropy term: dH/dlog_std = 1

  // Through the tanh squash: mean = scale * tanh(u).
  const T scale = static_cast<T>(spec.action_scale);
  MatX<T> tanh_u = c.u.array().tanh().matrix();
  MatX<T> du = dmean.cwiseProduct(
      (MatX<T>::Ones(tanh_u.rows(), tanh_u.cols()) - tanh_u.cwiseProduct(tanh_u)) * scale);

  const MatX<T>& trunk = shared.empty() ? mb.obs : c.shared_h.back();

  MatX<T> d_trunk_actor = detail::backprop_stack(actor, c.actor_h, trunk, std::move(du), grads.actor);
  MatX<T> dvalue_row = dvalue.transpose();
  MatX<T> d_trunk_critic =
      detail::backprop_stack(critic, c.critic_h, trunk, std::move(dvalue_row), grads.critic);

  if (!shared.empty()) {
    MatX<T> dh = d_trunk_actor + d_trunk_critic;
    for (int i = static_cast<int>(shared.size()) - 1; i >= 0; --i) {
      const MatX<T>& h = c.shared_h[i];
      MatX<T> dz = dh.cwiseProduct(MatX<T>::Ones(h.rows(), h.cols()) - h.cwiseProduct(h));
      const MatX<T>& in = i == 0 ? mb.obs : c.shared_h[i - 1];
      grads.shared[i].W += dz * in.transpose();
      grads.shared[i].b += dz.rowwise().sum();
      if (i > 0) dh = shared[i].W.transpose() * dz;
    }
  }
  return grads;
}

template <typename T>
T PolicyNet<T>::loss_value(const Minibatch<T>& mb, const LossSpec<T>& loss) const {
  const Eigen::Index B = mb.size();
  detail::ForwardCache<T> c;
  detail::run_forward(*this, mb.obs, c);
  T policy_loss = 0;
  for (Eigen::Index k = 0; k < B; ++k) {
    const T lp = log_prob(c.mean.col(k), mb.actions.col(k));
    const T ratio = std::exp(lp - mb.old_logp[k]);
    const T clipped = std::clamp(ratio, static_cast<T>(1.0) - loss.clip,
                                 static_cast<T>(1.0) + loss.clip);
    policy_loss += -std::min(ratio * mb.advantages[k], clipped * mb.advantages[k]);
  }
  policy_loss /= static_cast<T>(B);
  const T value_loss = (c.value - mb.returns).squaredNorm() / static_cast<T>(B);
  return policy_loss + loss.vf_coef * value_loss - loss.ent_coef * entropy();
}

template <typename T>
std::vector<ParamBlockRef<T>> PolicyNet<T>::param_blocks() {
  std::vector<ParamBlockRef<T>> blocks;
  auto add = [&](const std::string& name, auto& m) {
    blocks.push_back({name, m.data(), m.size()});
  };
  for (size_t i = 0; i < shared.size(); ++i) {
    add("shared." + std::to_string(i) + ".W", shared[i].W);
    add("shared." + std::to_string(i) + ".b", shared[i].b);
  }
  for (size_t i = 0; i < actor.size(); ++i) {
    add("actor." + std::to_string(i) + ".W", actor[i].W);
    add("actor." + std::to_string(i) + ".b", actor[i].b);
  }
  for (size_t i = 0; i < critic.size(); ++i) {
    add("critic." + std::to_string(i) + ".W", critic[i].W);
    add("critic." + std::to_string(i) + ".b", critic[i].b);
  }
  add("log_std", log_std);
  return blocks;
}

template <typename T>
std::vector<ParamBlockRef<const T>> PolicyNet<T>::param_blocks() const {
  auto blocks = const_cast<PolicyNet*>(this)->param_blocks();
  std::vector<ParamBlockRef<const T>> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back({b.name, b.data, b.size});
  return out;
}

template <typename T>
Eigen::Index PolicyNet<T>::param_count() const {
  Eigen::Index n = 0;
  for (const auto& b : param_blocks()) n += b.size;
  return n;
}

template <typename T>
template <typename U>
PolicyNet<U> PolicyNet<T>::cast() const {
  PolicyNet<U> out;
  out.spec = spec;
  auto conv = [](const std::vector<Dense<T>>& in) {
    std::vector<Dense<U>> res;
    for (const auto& d : in) {
      Dense<U> e;
      e.W = d.W.template cast<U>();
      e.b = d.b.template cast<U>();
      res.push_back(std::move(e));
    }
    return res;
  };
  out.shared = conv(shared);
  out.actor = conv(actor);
  out.critic = conv(critic);
  out.log_std = log_std.template cast<U>();
  return out;
}

}  // namespace armplan
