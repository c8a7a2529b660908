#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "quasiroute/policy.hpp"

namespace quasiroute {

struct TrainConfig {
    double lr = 1e-4;
    double weight_decay = 1e-6;
    int batch_size = 32;
    int iterations = 200;
    int batches_per_epoch = 100;        // checkpoint cadence
    std::vector<int> decay_epochs;      // lr *= decay_factor entering these epochs
    double decay_factor = 0.1;
    int n_starts = 10;                  // trajectories per instance
    int n_customers = 20;
    double grad_clip = 10.0;            // global-norm cap; <= 0 disables
    std::vector<std::string> problems{"TSP"};
    std::uint64_t seed = 0;
    ModelConfig model = ModelConfig::desk();
    bool stochastic_pivot_seeds = true;  // depot set + one random customer per batch
    std::string out_dir;                 // empty: keep checkpoints off disk
};

enum class DecodeMode { kSample, kGreedy };

/// One multi-start rollout set on a single encoded instance.
struct RolloutBatch {
    std::vector<double> costs;      // objective per trajectory (lower is better)
    std::vector<Tensor> logprobs;   // summed log-probabilities with gradient paths
    std::vector<Solution> solutions;
};

/// Rolls out trajectories with distinct starts: distinct start nodes for the
/// TSP family, distinct forced first customers otherwise (the forced step
/// carries no log-probability). `sampler` drives action draws in sample mode.
RolloutBatch rollout_multistart(const Instance& inst, const EncodedInstance& encoded,
                                const ModelConfig& cfg, int n_starts, DecodeMode mode,
                                Rng* sampler);

/// loss = mean_k (cost_k - mean cost) * logprob_k, advantages treated as constants.
Tensor reinforce_loss(const RolloutBatch& batch);

/// Adaptive-moment optimizer with decoupled weight decay.
class AdamW {
public:
    AdamW(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
          double weight_decay = 1e-6)
        : beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

    /// Applies one update using each tensor's accumulated gradient, then the
    /// caller should zero grads. Throws on non-finite gradients.
    void step(std::vector<NamedParam>& params, double lr);

    std::int64_t steps() const { return t_; }

private:
    double beta1_, beta2_, eps_, weight_decay_;
    std::int64_t t_ = 0;
    std::unordered_map<Tensor::Node*, std::pair<std::vector<double>, std::vector<double>>> state_;
};

/// Scales all grads so the global L2 norm is at most max_norm; returns the
/// pre-clip norm.
double clip_grad_norm(std::vector<NamedParam>& params, double max_norm);

struct TrainLogRow {
    int iter = 0;
    std::string problem;
    double mean_cost = 0.0;
    double baseline_cost = 0.0;
    double grad_norm = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<TrainLogRow> log;
    bool diverged = false;
};

/// Per-iteration curriculum: sample a problem uniformly, generate a fresh
/// batch, REINFORCE with the shared multi-start baseline, AdamW step.
/// Checkpoints at epoch boundaries when cfg.out_dir is set; divergence aborts
/// with the last finite parameters retained.
TrainResult train_loop(const TrainConfig& cfg);

/// CSV with columns (iter, problem, mean_cost, baseline_cost, grad_norm, lr).
void write_metric_log(const std::string& path, const std::vector<TrainLogRow>& log);

}  // namespace quasiroute
