#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "irlab/mlp.hpp"
#include "irlab/state_repr.hpp"
#include "irlab/trajectory.hpp"

namespace irlab {

enum class DivergenceMode { Mmd, Kl };
enum class BandwidthMode { Median, Fixed };

struct CwaeTrainConfig {
  DivergenceMode divergence = DivergenceMode::Mmd;
  double lambda = 10.0;
  BandwidthMode bandwidth = BandwidthMode::Median;
  double fixed_bandwidth = 1.0;  // used when bandwidth == Fixed
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 32;
  double dropout = 0.1;
  std::vector<int> hidden = {64, 64};
  int latent_dim = 1;
  Activation activation = Activation::ReLU;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Conditional auto-encoder over transitions. The encoder reads
/// repr(s) ++ onehot(a) ++ repr(s') and emits mean and log-variance heads of
/// the latent reward; the decoder reads repr(s) ++ onehot(a) ++ r and predicts
/// repr(s').
struct CwaeModel {
  EnvTag env = EnvTag::Objectworld;
  int repr_dim = 0;
  int action_count = 0;
  int latent_dim = 1;
  Mlp encoder;
  Mlp decoder;
};

CwaeModel make_cwae_model(EnvTag env, int repr_dim, int action_count,
                          const CwaeTrainConfig& config);

/// Transitions of a whole dataset in network-ready form, one row per step.
struct TransitionBatch {
  EnvTag env = EnvTag::Objectworld;
  int repr_dim = 0;
  int action_count = 0;
  Eigen::MatrixXd s_repr;
  std::vector<int> actions;
  Eigen::MatrixXd next_repr;
  std::vector<int> arrival_state;           // objectworld arrival ids, else empty
  std::vector<std::size_t> trajectory_offsets;  // row index where trajectory i starts

  std::size_t size() const { return actions.size(); }
};

TransitionBatch assemble_transitions(const Dataset& dataset, const Objectworld& world);
TransitionBatch assemble_transitions(const Dataset& dataset, const PendulumSpec& spec);

/// Bandwidth of the RBF kernel by the median heuristic: median pairwise
/// Euclidean distance over the pooled rows of both sample sets, floored at
/// 1e-6. Treated as a constant during differentiation.
double median_heuristic_bandwidth(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z_prior);

/// Unbiased kernel two-sample divergence between z and prior draws z_prior,
/// scaled by lambda, with RBF kernel exp(-|x-y|^2 / (2 bandwidth^2)). The
/// within-set sums skip the diagonal, so the estimate can be negative.
double mmd_divergence(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z_prior,
                      double lambda, double bandwidth);

/// d(mmd_divergence)/dz, holding z_prior and the bandwidth fixed.
Eigen::MatrixXd mmd_divergence_grad(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z_prior,
                                    double lambda, double bandwidth);

/// KL(N(mu, diag(exp(logvar))) || N(0, I)), summed over dimensions.
double kl_gaussian(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar);

/// r = mu + exp(logvar / 2) * eps, elementwise.
Eigen::MatrixXd reparameterize(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& logvar,
                               const Eigen::MatrixXd& eps);

/// Latent heads for one transition, eval mode; log-variance clamped to
/// [-20, 20].
std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const CwaeModel& model,
                                                   const Eigen::VectorXd& s_repr, int action,
                                                   const Eigen::VectorXd& next_repr);

Eigen::VectorXd decode(const CwaeModel& model, const Eigen::VectorXd& s_repr, int action,
                       const Eigen::VectorXd& r);

struct CwaeLossResult {
  double total = 0.0;
  double recon = 0.0;
  double divergence = 0.0;
  MlpParams encoder_grads;
  MlpParams decoder_grads;
};

/// One loss evaluation with exact parameter gradients. Consumes rng in a fixed
/// order (encoder dropout, latent noise, decoder dropout, prior draws), so
/// reseeding the generator reproduces the evaluation exactly. recon is the
/// squared reconstruction error averaged over batch rows and representation
/// dimensions; total = recon + divergence.
CwaeLossResult cwae_loss(const CwaeModel& model, const Eigen::MatrixXd& s_repr,
                         const std::vector<int>& actions, const Eigen::MatrixXd& next_repr,
                         const CwaeTrainConfig& config, Rng& rng,
                         ForwardMode mode = ForwardMode::Train);

struct CwaeCurves {
  std::vector<double> total;
  std::vector<double> recon;
  std::vector<double> divergence;
  std::vector<double> val_total;
};

struct CwaeTrainResult {
  CwaeModel model;
  CwaeCurves curves;
};

/// Shuffled-minibatch Adam training with a 90/10 train/validation split.
/// Deterministic in config.seed. Validation loss is evaluated in eval mode on
/// minibatches of the same size, so its divergence estimates are comparable
/// with the training curve.
CwaeTrainResult train_cwae(const TransitionBatch& data, const CwaeTrainConfig& config);
CwaeTrainResult train_cwae(const Dataset& dataset, const Objectworld& world,
                           const CwaeTrainConfig& config);
CwaeTrainResult train_cwae(const Dataset& dataset, const PendulumSpec& spec,
                           const CwaeTrainConfig& config);

enum class ExtractMode { Probe, DatasetAverage };

/// Per-state (tabular) or per-step reward summary recovered from the encoder.
struct RewardEstimate {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  std::string mode;
};

/// Tabular reward map. Probe mode encodes the synthetic transition
/// (s, stay, s) for every state; dataset-average groups the dataset's
/// transitions by arrival state and averages the encoder mean, falling back
/// to the probe for unvisited states.
RewardEstimate extract_reward_map(const CwaeModel& model, const Objectworld& world,
                                  ExtractMode mode = ExtractMode::Probe,
                                  const Dataset* dataset = nullptr);

/// Continuous state spaces cannot be enumerated; always throws and points to
/// per_step_rewards.
RewardEstimate extract_reward_map(const CwaeModel& model, const PendulumSpec& spec,
                                  ExtractMode mode = ExtractMode::Probe,
                                  const Dataset* dataset = nullptr);

/// Encoder mean/variance along each trajectory of a pendulum dataset.
struct PerStepRewards {
  std::vector<Eigen::VectorXd> mean;      // one series per trajectory
  std::vector<Eigen::VectorXd> variance;
};

PerStepRewards per_step_rewards(const CwaeModel& model, const Dataset& dataset,
                                const PendulumSpec& spec);

/// The training objective is blind to a global negation of the latent (both
/// networks can absorb the flip), so downstream comparisons first orient the
/// sign. Returns +1 or -1: the sign aligning the probe map with how often the
/// expert arrives at each state (tabular) or making late-episode transitions
/// score at least as high as early ones (pendulum).
double latent_sign(const CwaeModel& model, const Objectworld& world, const Dataset& dataset);
double latent_sign(const CwaeModel& model, const PendulumSpec& spec, const Dataset& dataset);

/// Checkpoint: one JSON metadata line (env, dims, config echo), then the two
/// network blobs in the neural module's text format.
void cwae_save(const CwaeModel& model, const CwaeTrainConfig& config, const std::string& path);
struct CwaeCheckpoint {
  CwaeModel model;
  CwaeTrainConfig config;
};
CwaeCheckpoint cwae_load(const std::string& path);

/// CSV rows `epoch,total,recon,divergence,val_total`, one per epoch.
void cwae_curves_save(const CwaeCurves& curves, const std::string& path);

}  // namespace irlab
