#include "irlab/cwae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "irlab/optim.hpp"
#include "irlab/text.hpp"

namespace irlab {

namespace {

constexpr double kLogVarClamp = 20.0;

Eigen::MatrixXd draw_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rand_normal(rng);
  }
  return m;
}

Eigen::MatrixXd pairwise_sq_dists(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::VectorXd an = a.rowwise().squaredNorm();
  Eigen::VectorXd bn = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * a * b.transpose();
  d2.colwise() += an;
  d2.rowwise() += bn.transpose();
  return d2.cwiseMax(0.0);
}

Eigen::MatrixXd onehot_rows(const std::vector<int>& actions, int action_count) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(actions.size()),
                                            action_count);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] < 0 || actions[i] >= action_count) {
      throw std::invalid_argument("cwae: action index out of range");
    }
    m(static_cast<Eigen::Index>(i), actions[i]) = 1.0;
  }
  return m;
}

std::string divergence_name(DivergenceMode mode) {
  return mode == DivergenceMode::Mmd ? "mmd" : "kl";
}
DivergenceMode divergence_from_name(const std::string& name) {
  if (name == "mmd") return DivergenceMode::Mmd;
  if (name == "kl") return DivergenceMode::Kl;
  throw std::runtime_error("unknown divergence mode '" + name + "'");
}
std::string bandwidth_name(BandwidthMode mode) {
  return mode == BandwidthMode::Median ? "median" : "fixed";
}
BandwidthMode bandwidth_from_name(const std::string& name) {
  if (name == "median") return BandwidthMode::Median;
  if (name == "fixed") return BandwidthMode::Fixed;
  throw std::runtime_error("unknown bandwidth mode '" + name + "'");
}
std::string activation_name(Activation act) {
  return act == Activation::ReLU ? "relu" : "tanh";
}
Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  throw std::runtime_error("unknown activation '" + name + "'");
}

}  // namespace

void CwaeTrainConfig::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("CwaeTrainConfig: lambda must be >= 0");
  if (divergence == DivergenceMode::Mmd && batch_size < 2) {
    throw std::invalid_argument("CwaeTrainConfig: batch_size must be >= 2 in mmd mode");
  }
  if (batch_size < 1) throw std::invalid_argument("CwaeTrainConfig: batch_size must be >= 1");
  if (bandwidth == BandwidthMode::Fixed && !(fixed_bandwidth > 0.0)) {
    throw std::invalid_argument("CwaeTrainConfig: fixed bandwidth must be positive");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("CwaeTrainConfig: learning_rate must be positive");
  if (epochs < 0) throw std::invalid_argument("CwaeTrainConfig: epochs must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("CwaeTrainConfig: dropout must lie in [0, 1)");
  }
  if (latent_dim < 1) throw std::invalid_argument("CwaeTrainConfig: latent_dim must be >= 1");
}

CwaeModel make_cwae_model(EnvTag env, int repr_dim, int action_count,
                          const CwaeTrainConfig& config) {
  config.validate();
  if (repr_dim < 1 || action_count < 1) {
    throw std::invalid_argument("make_cwae_model: dimensions must be positive");
  }
  std::vector<int> enc_widths = {2 * repr_dim + action_count};
  enc_widths.insert(enc_widths.end(), config.hidden.begin(), config.hidden.end());
  std::vector<int> dec_widths = {repr_dim + action_count + config.latent_dim};
  dec_widths.insert(dec_widths.end(), config.hidden.begin(), config.hidden.end());

  return CwaeModel{
      env, repr_dim, action_count, config.latent_dim,
      Mlp(enc_widths, {config.latent_dim, config.latent_dim}, config.activation,
          config.dropout, sub_seed(config.seed, 0xe0c)),
      Mlp(dec_widths, {repr_dim}, config.activation, config.dropout,
          sub_seed(config.seed, 0xdec))};
}

TransitionBatch assemble_transitions(const Dataset& dataset, const Objectworld& world) {
  if (dataset.env != EnvTag::Objectworld) {
    throw std::invalid_argument("assemble_transitions: dataset is not an objectworld dataset");
  }
  dataset.validate();

  std::size_t total = 0;
  for (const auto& traj : dataset.discrete) total += traj.size();

  TransitionBatch batch;
  batch.env = EnvTag::Objectworld;
  batch.repr_dim = kObjectworldReprDim;
  batch.action_count = kObjectworldActions;
  batch.s_repr.resize(static_cast<Eigen::Index>(total), kObjectworldReprDim);
  batch.next_repr.resize(static_cast<Eigen::Index>(total), kObjectworldReprDim);
  batch.actions.reserve(total);
  batch.arrival_state.reserve(total);

  Eigen::Index row = 0;
  for (const auto& traj : dataset.discrete) {
    batch.trajectory_offsets.push_back(static_cast<std::size_t>(row));
    for (const auto& step : traj) {
      batch.s_repr.row(row) = objectworld_state_repr(world, step.state).transpose();
      batch.next_repr.row(row) = objectworld_state_repr(world, step.next_state).transpose();
      batch.actions.push_back(step.action);
      batch.arrival_state.push_back(step.next_state);
      ++row;
    }
  }
  return batch;
}

TransitionBatch assemble_transitions(const Dataset& dataset, const PendulumSpec& spec) {
  if (dataset.env != EnvTag::Pendulum) {
    throw std::invalid_argument("assemble_transitions: dataset is not a pendulum dataset");
  }
  dataset.validate();

  std::size_t total = 0;
  for (const auto& traj : dataset.continuous) total += traj.size();

  TransitionBatch batch;
  batch.env = EnvTag::Pendulum;
  batch.repr_dim = kPendulumReprDim;
  batch.action_count = spec.action_count;
  batch.s_repr.resize(static_cast<Eigen::Index>(total), kPendulumReprDim);
  batch.next_repr.resize(static_cast<Eigen::Index>(total), kPendulumReprDim);
  batch.actions.reserve(total);

  Eigen::Index row = 0;
  for (const auto& traj : dataset.continuous) {
    batch.trajectory_offsets.push_back(static_cast<std::size_t>(row));
    for (const auto& step : traj) {
      batch.s_repr.row(row) = pendulum_state_repr(spec, step.state).transpose();
      batch.next_repr.row(row) = pendulum_state_repr(spec, step.next).transpose();
      batch.actions.push_back(step.action);
      ++row;
    }
  }
  return batch;
}

double median_heuristic_bandwidth(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z_prior) {
  if (z.cols() != z_prior.cols()) {
    throw std::invalid_argument("median_heuristic_bandwidth: dimension mismatch");
  }
  const Eigen::Index m = z.rows() + z_prior.rows();
  if (m < 2) throw std::invalid_argument("median_heuristic_bandwidth: need at least two rows");

  Eigen::MatrixXd pooled(m, z.cols());
  pooled.topRows(z.rows()) = z;
  pooled.bottomRows(z_prior.rows()) = z_prior;
  Eigen::MatrixXd d2 = pairwise_sq_dists(pooled, pooled);

  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) dists.push_back(std::sqrt(d2(i, j)));
  }
  const std::size_t count = dists.size();
  const std::size_t mid = count / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double median = dists[mid];
  if (count % 2 == 0) {
    const double below =
        *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + below);
  }
  return std::max(median, 1e-6);
}

double mmd_divergence(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z_prior,
                      double lambda, double bandwidth) {
  const Eigen::Index n = z.rows();
  if (n < 2) throw std::invalid_argument("mmd_divergence: need at least two samples");
  if (z_prior.rows() != n || z_prior.cols() != z.cols()) {
    throw std::invalid_argument("mmd_divergence: sample shapes must match");
  }
  if (!(bandwidth > 0.0)) throw std::invalid_argument("mmd_divergence: bandwidth must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("mmd_divergence: lambda must be >= 0");

  const double scale = -1.0 / (2.0 * bandwidth * bandwidth);
  const Eigen::MatrixXd k_zz = (pairwise_sq_dists(z, z) * scale).array().exp();
  const Eigen::MatrixXd k_pp = (pairwise_sq_dists(z_prior, z_prior) * scale).array().exp();
  const Eigen::MatrixXd k_zp = (pairwise_sq_dists(z, z_prior) * scale).array().exp();

  const double nn = static_cast<double>(n);
  const double within = (k_zz.sum() - k_zz.trace()) / (nn * (nn - 1.0)) +
                        (k_pp.sum() - k_pp.trace()) / (nn * (nn - 1.0));
  const double cross = 2.0 * k_zp.sum() / (nn * nn);
  return lambda * (within - cross);
}

Eigen::MatrixXd mmd_divergence_grad(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z_prior,
                                    double lambda, double bandwidth) {
  const Eigen::Index n = z.rows();
  if (n < 2) throw std::invalid_argument("mmd_divergence_grad: need at least two samples");
  if (z_prior.rows() != n || z_prior.cols() != z.cols()) {
    throw std::invalid_argument("mmd_divergence_grad: sample shapes must match");
  }

  const double sigma2 = bandwidth * bandwidth;
  const double scale = -1.0 / (2.0 * sigma2);
  Eigen::MatrixXd k_zz = (pairwise_sq_dists(z, z) * scale).array().exp();
  k_zz.diagonal().setZero();
  const Eigen::MatrixXd k_zp = (pairwise_sq_dists(z, z_prior) * scale).array().exp();

  const double nn = static_cast<double>(n);
  const double c_within = 2.0 * lambda / (nn * (nn - 1.0) * sigma2);
  const double c_cross = 2.0 * lambda / (nn * nn * sigma2);

  Eigen::VectorXd zz_rowsum = k_zz.rowwise().sum();
  Eigen::VectorXd zp_rowsum = k_zp.rowwise().sum();

  Eigen::MatrixXd grad =
      -c_within * (zz_rowsum.asDiagonal() * z - k_zz * z) +
      c_cross * (zp_rowsum.asDiagonal() * z - k_zp * z_prior);
  return grad;
}

double kl_gaussian(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar) {
  if (mu.size() != logvar.size()) {
    throw std::invalid_argument("kl_gaussian: shape mismatch");
  }
  return 0.5 * (logvar.array().exp() + mu.array().square() - 1.0 - logvar.array()).sum();
}

Eigen::MatrixXd reparameterize(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& logvar,
                               const Eigen::MatrixXd& eps) {
  if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols() ||
      mu.rows() != eps.rows() || mu.cols() != eps.cols()) {
    throw std::invalid_argument("reparameterize: shape mismatch");
  }
  return mu + ((0.5 * logvar).array().exp() * eps.array()).matrix();
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const CwaeModel& model,
                                                   const Eigen::VectorXd& s_repr, int action,
                                                   const Eigen::VectorXd& next_repr) {
  if (s_repr.size() != model.repr_dim || next_repr.size() != model.repr_dim) {
    throw std::invalid_argument("encode: state representation dimension mismatch");
  }
  Eigen::MatrixXd x(1, 2 * model.repr_dim + model.action_count);
  x.leftCols(model.repr_dim) = s_repr.transpose();
  x.middleCols(model.repr_dim, model.action_count) =
      onehot_rows({action}, model.action_count);
  x.rightCols(model.repr_dim) = next_repr.transpose();
  auto out = model.encoder.forward(x, ForwardMode::Eval);
  Eigen::VectorXd logvar =
      out[1].row(0).transpose().cwiseMax(-kLogVarClamp).cwiseMin(kLogVarClamp);
  return {out[0].row(0).transpose(), logvar};
}

Eigen::VectorXd decode(const CwaeModel& model, const Eigen::VectorXd& s_repr, int action,
                       const Eigen::VectorXd& r) {
  if (s_repr.size() != model.repr_dim) {
    throw std::invalid_argument("decode: state representation dimension mismatch");
  }
  if (r.size() != model.latent_dim) {
    throw std::invalid_argument("decode: latent dimension mismatch");
  }
  Eigen::MatrixXd x(1, model.repr_dim + model.action_count + model.latent_dim);
  x.leftCols(model.repr_dim) = s_repr.transpose();
  x.middleCols(model.repr_dim, model.action_count) =
      onehot_rows({action}, model.action_count);
  x.rightCols(model.latent_dim) = r.transpose();
  return model.decoder.forward(x, ForwardMode::Eval)[0].row(0).transpose();
}

CwaeLossResult cwae_loss(const CwaeModel& model, const Eigen::MatrixXd& s_repr,
                         const std::vector<int>& actions, const Eigen::MatrixXd& next_repr,
                         const CwaeTrainConfig& config, Rng& rng, ForwardMode mode) {
  const Eigen::Index n = s_repr.rows();
  if (n < 1) throw std::invalid_argument("cwae_loss: empty batch");
  if (static_cast<Eigen::Index>(actions.size()) != n || next_repr.rows() != n) {
    throw std::invalid_argument("cwae_loss: batch fields disagree on length");
  }
  if (s_repr.cols() != model.repr_dim || next_repr.cols() != model.repr_dim) {
    throw std::invalid_argument("cwae_loss: state representation dimension mismatch");
  }
  if (config.divergence == DivergenceMode::Mmd && n < 2) {
    throw std::invalid_argument("cwae_loss: the divergence estimator needs at least two samples");
  }

  const int d = model.latent_dim;
  const int repr = model.repr_dim;
  const Eigen::MatrixXd onehot = onehot_rows(actions, model.action_count);

  Eigen::MatrixXd x_enc(n, 2 * repr + model.action_count);
  x_enc.leftCols(repr) = s_repr;
  x_enc.middleCols(repr, model.action_count) = onehot;
  x_enc.rightCols(repr) = next_repr;

  Mlp::Cache enc_cache;
  auto enc_out = model.encoder.forward(x_enc, mode, &rng, &enc_cache);
  const Eigen::MatrixXd& mu = enc_out[0];
  const Eigen::MatrixXd& logvar_raw = enc_out[1];
  const Eigen::MatrixXd logvar =
      logvar_raw.cwiseMax(-kLogVarClamp).cwiseMin(kLogVarClamp);

  const Eigen::MatrixXd eps = draw_normal(rng, n, d);
  const Eigen::MatrixXd z = reparameterize(mu, logvar, eps);

  Eigen::MatrixXd x_dec(n, repr + model.action_count + d);
  x_dec.leftCols(repr) = s_repr;
  x_dec.middleCols(repr, model.action_count) = onehot;
  x_dec.rightCols(d) = z;

  Mlp::Cache dec_cache;
  const Eigen::MatrixXd shat = model.decoder.forward(x_dec, mode, &rng, &dec_cache)[0];

  const Eigen::MatrixXd diff = shat - next_repr;
  const double recon = diff.squaredNorm() / (static_cast<double>(n) * repr);

  double divergence = 0.0;
  Eigen::MatrixXd dz_div = Eigen::MatrixXd::Zero(n, d);
  if (config.divergence == DivergenceMode::Mmd) {
    const Eigen::MatrixXd z_prior = draw_normal(rng, n, d);
    const double bw = config.bandwidth == BandwidthMode::Fixed
                          ? config.fixed_bandwidth
                          : median_heuristic_bandwidth(z, z_prior);
    divergence = mmd_divergence(z, z_prior, config.lambda, bw);
    dz_div = mmd_divergence_grad(z, z_prior, config.lambda, bw);
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      divergence += kl_gaussian(mu.row(i).transpose(), logvar.row(i).transpose());
    }
    divergence *= config.lambda / static_cast<double>(n);
  }

  CwaeLossResult result;
  result.recon = recon;
  result.divergence = divergence;
  result.total = recon + divergence;

  Eigen::MatrixXd d_shat = (2.0 / (static_cast<double>(n) * repr)) * diff;
  Eigen::MatrixXd dx_dec;
  result.decoder_grads = model.decoder.backward(dec_cache, {d_shat}, &dx_dec);

  Eigen::MatrixXd dz = dx_dec.rightCols(d) + dz_div;
  Eigen::MatrixXd dmu = dz;
  Eigen::MatrixXd dlogvar =
      (dz.array() * eps.array() * 0.5 * (0.5 * logvar).array().exp()).matrix();
  if (config.divergence == DivergenceMode::Kl) {
    const double w = config.lambda / static_cast<double>(n);
    dmu += w * mu;
    dlogvar.array() += w * 0.5 * (logvar.array().exp() - 1.0);
  }
  const Eigen::ArrayXXd clamp_pass =
      (logvar_raw.array() > -kLogVarClamp).cast<double>() *
      (logvar_raw.array() < kLogVarClamp).cast<double>();
  dlogvar.array() *= clamp_pass;

  result.encoder_grads = model.encoder.backward(enc_cache, {dmu, dlogvar});
  return result;
}

namespace {

void gather_rows(const TransitionBatch& data, const std::vector<std::size_t>& order,
                 std::size_t begin, std::size_t count, Eigen::MatrixXd& s,
                 std::vector<int>& a, Eigen::MatrixXd& next) {
  s.resize(static_cast<Eigen::Index>(count), data.s_repr.cols());
  next.resize(static_cast<Eigen::Index>(count), data.next_repr.cols());
  a.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto src = static_cast<Eigen::Index>(order[begin + i]);
    s.row(static_cast<Eigen::Index>(i)) = data.s_repr.row(src);
    next.row(static_cast<Eigen::Index>(i)) = data.next_repr.row(src);
    a[i] = data.actions[order[begin + i]];
  }
}

/// Sample-weighted average loss over sequential minibatches, eval mode.
double split_loss(const CwaeModel& model, const TransitionBatch& data,
                  const std::vector<std::size_t>& indices, const CwaeTrainConfig& config,
                  Rng& rng) {
  double sum = 0.0;
  std::size_t weight = 0;
  Eigen::MatrixXd s, next;
  std::vector<int> a;
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  for (std::size_t begin = 0; begin < indices.size(); begin += batch) {
    const std::size_t count = std::min(batch, indices.size() - begin);
    if (config.divergence == DivergenceMode::Mmd && count < 2) break;
    gather_rows(data, indices, begin, count, s, a, next);
    CwaeLossResult res = cwae_loss(model, s, a, next, config, rng, ForwardMode::Eval);
    sum += res.total * static_cast<double>(count);
    weight += count;
  }
  return weight == 0 ? 0.0 : sum / static_cast<double>(weight);
}

}  // namespace

CwaeTrainResult train_cwae(const TransitionBatch& data, const CwaeTrainConfig& config) {
  config.validate();
  if (data.size() == 0) throw std::invalid_argument("train_cwae: no transitions");

  CwaeModel model = make_cwae_model(data.env, data.repr_dim, data.action_count, config);
  CwaeCurves curves;
  if (config.epochs == 0) return {std::move(model), std::move(curves)};

  const std::size_t total = data.size();
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0u);
  Rng split_rng(sub_seed(config.seed, 0x517));
  std::shuffle(order.begin(), order.end(), split_rng);

  const std::size_t val_count = total / 10;
  std::vector<std::size_t> val_indices(order.end() - static_cast<std::ptrdiff_t>(val_count),
                                       order.end());
  std::vector<std::size_t> train_indices(order.begin(),
                                         order.end() - static_cast<std::ptrdiff_t>(val_count));

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = config.learning_rate;
  AdamState enc_adam = AdamState::init(model.encoder.params(), adam_cfg);
  AdamState dec_adam = AdamState::init(model.decoder.params(), adam_cfg);

  Rng train_rng(sub_seed(config.seed, 0x7a1));
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  Eigen::MatrixXd s, next;
  std::vector<int> a;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(train_indices.begin(), train_indices.end(), train_rng);

    double recon_sum = 0.0, div_sum = 0.0;
    std::size_t weight = 0;
    for (std::size_t begin = 0; begin < train_indices.size(); begin += batch) {
      const std::size_t count = std::min(batch, train_indices.size() - begin);
      if (config.divergence == DivergenceMode::Mmd && count < 2) break;
      gather_rows(data, train_indices, begin, count, s, a, next);
      CwaeLossResult res = cwae_loss(model, s, a, next, config, train_rng, ForwardMode::Train);
      if (!std::isfinite(res.total)) {
        throw std::runtime_error("train_cwae: non-finite loss at epoch " +
                                 std::to_string(epoch));
      }
      adam_step(model.encoder.params(), res.encoder_grads, enc_adam);
      adam_step(model.decoder.params(), res.decoder_grads, dec_adam);
      recon_sum += res.recon * static_cast<double>(count);
      div_sum += res.divergence * static_cast<double>(count);
      weight += count;
    }
    if (weight == 0) {
      throw std::runtime_error("train_cwae: no usable minibatch (dataset smaller than 2?)");
    }

    const double recon_epoch = recon_sum / static_cast<double>(weight);
    const double div_epoch = div_sum / static_cast<double>(weight);
    curves.recon.push_back(recon_epoch);
    curves.divergence.push_back(div_epoch);
    curves.total.push_back(recon_epoch + div_epoch);

    Rng val_rng(sub_seed(config.seed ^ 0x7a11dULL, static_cast<std::uint64_t>(epoch)));
    const auto& holdout = val_indices.empty() ? train_indices : val_indices;
    curves.val_total.push_back(split_loss(model, data, holdout, config, val_rng));
  }

  return {std::move(model), std::move(curves)};
}

CwaeTrainResult train_cwae(const Dataset& dataset, const Objectworld& world,
                           const CwaeTrainConfig& config) {
  return train_cwae(assemble_transitions(dataset, world), config);
}

CwaeTrainResult train_cwae(const Dataset& dataset, const PendulumSpec& spec,
                           const CwaeTrainConfig& config) {
  return train_cwae(assemble_transitions(dataset, spec), config);
}

namespace {

/// Batched encoder means/variances; log-variance clamped like encode().
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> encode_batch(const CwaeModel& model,
                                                         const Eigen::MatrixXd& s_repr,
                                                         const std::vector<int>& actions,
                                                         const Eigen::MatrixXd& next_repr) {
  Eigen::MatrixXd x(s_repr.rows(), 2 * model.repr_dim + model.action_count);
  x.leftCols(model.repr_dim) = s_repr;
  x.middleCols(model.repr_dim, model.action_count) = onehot_rows(actions, model.action_count);
  x.rightCols(model.repr_dim) = next_repr;
  auto out = model.encoder.forward(x, ForwardMode::Eval);
  Eigen::MatrixXd logvar = out[1].cwiseMax(-kLogVarClamp).cwiseMin(kLogVarClamp);
  return {out[0], logvar.array().exp().matrix()};
}

void require_scalar_latent(const CwaeModel& model, const char* op) {
  if (model.latent_dim != 1) {
    throw std::invalid_argument(std::string(op) + ": needs a scalar latent reward");
  }
}

/// Probe over every grid state via the synthetic in-place transition.
std::pair<Eigen::VectorXd, Eigen::VectorXd> probe_states(const CwaeModel& model,
                                                         const Objectworld& world) {
  const int num_states = world.num_states();
  Eigen::MatrixXd repr(num_states, kObjectworldReprDim);
  for (int sid = 0; sid < num_states; ++sid) {
    repr.row(sid) = objectworld_state_repr(world, sid).transpose();
  }
  std::vector<int> stays(static_cast<std::size_t>(num_states), kStay);
  auto [mu, var] = encode_batch(model, repr, stays, repr);
  return {mu.col(0), var.col(0)};
}

}  // namespace

RewardEstimate extract_reward_map(const CwaeModel& model, const Objectworld& world,
                                  ExtractMode mode, const Dataset* dataset) {
  require_scalar_latent(model, "extract_reward_map");
  if (model.env != EnvTag::Objectworld) {
    throw std::invalid_argument("extract_reward_map: model was trained for another environment");
  }

  auto [probe_mean, probe_var] = probe_states(model, world);
  if (mode == ExtractMode::Probe) {
    return {probe_mean, probe_var, "probe"};
  }

  if (dataset == nullptr) {
    throw std::invalid_argument("extract_reward_map: dataset-average mode needs a dataset");
  }
  TransitionBatch batch = assemble_transitions(*dataset, world);
  auto [mu, var] = encode_batch(model, batch.s_repr, batch.actions, batch.next_repr);

  Eigen::VectorXd mean_sum = Eigen::VectorXd::Zero(world.num_states());
  Eigen::VectorXd var_sum = Eigen::VectorXd::Zero(world.num_states());
  Eigen::VectorXd hits = Eigen::VectorXd::Zero(world.num_states());
  for (std::size_t i = 0; i < batch.arrival_state.size(); ++i) {
    const int sid = batch.arrival_state[i];
    mean_sum(sid) += mu(static_cast<Eigen::Index>(i), 0);
    var_sum(sid) += var(static_cast<Eigen::Index>(i), 0);
    hits(sid) += 1.0;
  }

  RewardEstimate estimate;
  estimate.mode = "dataset-average";
  estimate.mean = probe_mean;
  estimate.variance = probe_var;
  for (int sid = 0; sid < world.num_states(); ++sid) {
    if (hits(sid) > 0.0) {
      estimate.mean(sid) = mean_sum(sid) / hits(sid);
      estimate.variance(sid) = var_sum(sid) / hits(sid);
    }
  }
  return estimate;
}

RewardEstimate extract_reward_map(const CwaeModel&, const PendulumSpec&, ExtractMode,
                                  const Dataset*) {
  throw std::invalid_argument(
      "extract_reward_map: continuous state spaces cannot be enumerated; "
      "use per_step_rewards instead");
}

PerStepRewards per_step_rewards(const CwaeModel& model, const Dataset& dataset,
                                const PendulumSpec& spec) {
  require_scalar_latent(model, "per_step_rewards");
  if (model.env != EnvTag::Pendulum) {
    throw std::invalid_argument("per_step_rewards: model was trained for another environment");
  }
  TransitionBatch batch = assemble_transitions(dataset, spec);
  auto [mu, var] = encode_batch(model, batch.s_repr, batch.actions, batch.next_repr);

  PerStepRewards out;
  for (std::size_t t = 0; t < batch.trajectory_offsets.size(); ++t) {
    const std::size_t begin = batch.trajectory_offsets[t];
    const std::size_t end = t + 1 < batch.trajectory_offsets.size()
                                ? batch.trajectory_offsets[t + 1]
                                : batch.size();
    const auto len = static_cast<Eigen::Index>(end - begin);
    out.mean.push_back(mu.col(0).segment(static_cast<Eigen::Index>(begin), len));
    out.variance.push_back(var.col(0).segment(static_cast<Eigen::Index>(begin), len));
  }
  return out;
}

double latent_sign(const CwaeModel& model, const Objectworld& world, const Dataset& dataset) {
  require_scalar_latent(model, "latent_sign");
  const Eigen::VectorXd probe_mean = probe_states(model, world).first;

  Eigen::VectorXd visits = Eigen::VectorXd::Zero(world.num_states());
  for (const auto& trajectory : dataset.discrete) {
    for (const DiscreteStep& step : trajectory) visits[step.next_state] += 1.0;
  }

  const Eigen::VectorXd centered_mu = probe_mean.array() - probe_mean.mean();
  const Eigen::VectorXd centered_visits = visits.array() - visits.mean();
  return centered_mu.dot(centered_visits) >= 0.0 ? 1.0 : -1.0;
}

double latent_sign(const CwaeModel& model, const PendulumSpec& spec, const Dataset& dataset) {
  require_scalar_latent(model, "latent_sign");
  PerStepRewards rewards = per_step_rewards(model, dataset, spec);
  double early = 0.0, late = 0.0;
  long early_n = 0, late_n = 0;
  for (const auto& series : rewards.mean) {
    const Eigen::Index len = series.size();
    const Eigen::Index quarter = std::max<Eigen::Index>(1, len / 4);
    early += series.head(quarter).sum();
    early_n += quarter;
    late += series.tail(quarter).sum();
    late_n += quarter;
  }
  if (early_n == 0 || late_n == 0) return 1.0;
  return late / static_cast<double>(late_n) >= early / static_cast<double>(early_n) ? 1.0
                                                                                    : -1.0;
}

void cwae_save(const CwaeModel& model, const CwaeTrainConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cwae_save: cannot open " + path);

  nlohmann::json meta;
  meta["env"] = env_tag_name(model.env);
  meta["repr_dim"] = model.repr_dim;
  meta["action_count"] = model.action_count;
  meta["latent_dim"] = model.latent_dim;
  meta["config"] = {
      {"divergence", divergence_name(config.divergence)},
      {"lambda", config.lambda},
      {"bandwidth", bandwidth_name(config.bandwidth)},
      {"fixed_bandwidth", config.fixed_bandwidth},
      {"learning_rate", config.learning_rate},
      {"epochs", config.epochs},
      {"batch_size", config.batch_size},
      {"dropout", config.dropout},
      {"hidden", config.hidden},
      {"latent_dim", config.latent_dim},
      {"activation", activation_name(config.activation)},
      {"seed", config.seed},
  };
  out << meta.dump() << '\n';
  model.encoder.save(out);
  model.decoder.save(out);
  if (!out) throw std::runtime_error("cwae_save: write failed for " + path);
}

CwaeCheckpoint cwae_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cwae_load: cannot open " + path);

  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("cwae_load: missing metadata line");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(header);
  } catch (const nlohmann::json::parse_error& err) {
    throw std::runtime_error("cwae_load: bad metadata line: " + std::string(err.what()));
  }

  CwaeTrainConfig config;
  const auto& c = meta.at("config");
  config.divergence = divergence_from_name(c.at("divergence").get<std::string>());
  config.lambda = c.at("lambda").get<double>();
  config.bandwidth = bandwidth_from_name(c.at("bandwidth").get<std::string>());
  config.fixed_bandwidth = c.at("fixed_bandwidth").get<double>();
  config.learning_rate = c.at("learning_rate").get<double>();
  config.epochs = c.at("epochs").get<int>();
  config.batch_size = c.at("batch_size").get<int>();
  config.dropout = c.at("dropout").get<double>();
  config.hidden = c.at("hidden").get<std::vector<int>>();
  config.latent_dim = c.at("latent_dim").get<int>();
  config.activation = activation_from_name(c.at("activation").get<std::string>());
  config.seed = c.at("seed").get<std::uint64_t>();

  CwaeCheckpoint checkpoint{
      CwaeModel{env_tag_from_name(meta.at("env").get<std::string>()),
                meta.at("repr_dim").get<int>(), meta.at("action_count").get<int>(),
                meta.at("latent_dim").get<int>(), Mlp::load(in), Mlp::load(in)},
      config};

  const CwaeModel& m = checkpoint.model;
  if (m.encoder.input_dim() != 2 * m.repr_dim + m.action_count ||
      m.decoder.input_dim() != m.repr_dim + m.action_count + m.latent_dim) {
    throw std::runtime_error("cwae_load: network shapes disagree with metadata");
  }
  return checkpoint;
}

void cwae_curves_save(const CwaeCurves& curves, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cwae_curves_save: cannot open " + path);
  out << "epoch,total,recon,divergence,val_total\n";
  for (std::size_t e = 0; e < curves.total.size(); ++e) {
    out << e << ',' << format_sig9(curves.total[e]) << ',' << format_sig9(curves.recon[e])
        << ',' << format_sig9(curves.divergence[e]) << ','
        << format_sig9(curves.val_total[e]) << '\n';
  }
  if (!out) throw std::runtime_error("cwae_curves_save: write failed for " + path);
}

}  // namespace irlab
