#include "quasiroute/learn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace quasiroute {

namespace op = ops;

namespace {

// Distinct trajectory starts: node indices for the TSP family, otherwise the
// feasible first customers out of the start depot.
std::vector<int> first_moves(const Instance& inst, int n_starts) {
    std::vector<int> moves;
    if (!inst.spec.has_depot()) {
        for (int v = 0; v < inst.n_nodes() && static_cast<int>(moves.size()) < n_starts; ++v)
            moves.push_back(v);
        return moves;
    }
    RolloutState st = reset(inst, 0);
    Mask mask = feasible_mask(st, inst);
    for (int v = inst.first_customer(); v < inst.n_nodes(); ++v)
        if (mask.feasible(v) && static_cast<int>(moves.size()) < n_starts) moves.push_back(v);
    if (moves.empty()) throw InvariantViolation("rollout_multistart: no feasible first customer");
    return moves;
}

int argmax_row(const Tensor& probs, int row) {
    int best = 0;
    double best_p = probs.at(row, 0);
    for (int j = 1; j < probs.cols(); ++j)
        if (probs.at(row, j) > best_p) {
            best_p = probs.at(row, j);
            best = j;
        }
    return best;
}

int sample_row(const Tensor& probs, int row, Rng& rng) {
    const double u = rng.next_double();
    double acc = 0.0;
    int last_alive = -1;
    for (int j = 0; j < probs.cols(); ++j) {
        const double p = probs.at(row, j);
        if (p > 0.0) last_alive = j;
        acc += p;
        if (u < acc) return j;
    }
    return last_alive;  // rounding tail
}

}  // namespace

RolloutBatch rollout_multistart(const Instance& inst, const EncodedInstance& encoded,
                                const ModelConfig& cfg, int n_starts, DecodeMode mode,
                                Rng* sampler) {
    if (mode == DecodeMode::kSample && sampler == nullptr)
        throw InvalidInput("rollout_multistart: sample mode needs an rng");
    const int n = inst.n_nodes();
    const std::vector<int> moves = first_moves(inst, n_starts);
    const int k = static_cast<int>(moves.size());

    struct Traj {
        RolloutState state;
        Solution sol;
        Tensor logprob;
        bool done = false;
    };
    std::vector<Traj> trajs(k);
    for (int i = 0; i < k; ++i) {
        if (inst.spec.has_depot()) {
            trajs[i].state = reset(inst, 0);
            trajs[i].sol.pi.push_back(0);
            trajs[i].state = step(trajs[i].state, inst, moves[i]);  // forced, no log-prob
            trajs[i].sol.pi.push_back(moves[i]);
        } else {
            trajs[i].state = reset(inst, moves[i]);
            trajs[i].sol.pi.push_back(moves[i]);
        }
        trajs[i].done = trajs[i].state.done;
    }

    const int max_steps = 16 * n + 16;
    for (int stepno = 0; stepno < max_steps; ++stepno) {
        std::vector<int> active;
        for (int i = 0; i < k; ++i)
            if (!trajs[i].done) active.push_back(i);
        if (active.empty()) break;

        const int ta = static_cast<int>(active.size());
        std::vector<int> firsts(ta), lasts(ta);
        std::vector<double> ct(ta), mask_data, drow_data;
        mask_data.reserve(static_cast<std::size_t>(ta) * n);
        drow_data.reserve(static_cast<std::size_t>(ta) * n);
        for (int a = 0; a < ta; ++a) {
            const Traj& tr = trajs[active[a]];
            firsts[a] = tr.state.first;
            lasts[a] = tr.state.current;
            ct[a] = problem_state_scalar(tr.state, inst);
            Mask mask = feasible_mask(tr.state, inst);
            for (int v = 0; v < n; ++v) mask_data.push_back(mask.offsets[v]);
            for (int v = 0; v < n; ++v) drow_data.push_back(encoded.d_norm(tr.state.current, v));
        }
        Tensor mask_t = Tensor::from(ta, n, std::move(mask_data));
        Tensor drow_t = Tensor::from(ta, n, std::move(drow_data));
        Tensor ct_t = Tensor::from(ta, 1, std::move(ct));
        Tensor probs = decode_step(encoded.enc, firsts, lasts, ct_t, mask_t, drow_t, cfg);

        std::vector<int> rows(ta), actions(ta);
        for (int a = 0; a < ta; ++a) {
            rows[a] = a;
            actions[a] =
                mode == DecodeMode::kGreedy ? argmax_row(probs, a) : sample_row(probs, a, *sampler);
        }
        Tensor lp = op::log(op::select(probs, rows, actions));
        for (int a = 0; a < ta; ++a) {
            Traj& tr = trajs[active[a]];
            Tensor mine = op::select(lp, {a}, {0});
            tr.logprob = tr.logprob.defined() ? op::add(tr.logprob, mine) : mine;
            tr.state = step(tr.state, inst, actions[a]);
            tr.sol.pi.push_back(actions[a]);
            tr.done = tr.state.done;
        }
    }

    RolloutBatch batch;
    for (auto& tr : trajs) {
        if (!tr.done) throw InvariantViolation("rollout_multistart: trajectory did not terminate");
        batch.costs.push_back(tr.state.accum_cost);
        batch.logprobs.push_back(tr.logprob.defined() ? tr.logprob : Tensor::scalar(0.0));
        batch.solutions.push_back(std::move(tr.sol));
    }
    return batch;
}

Tensor reinforce_loss(const RolloutBatch& batch) {
    const int k = static_cast<int>(batch.costs.size());
    if (k < 1) throw InvalidInput("reinforce_loss: empty batch");
    double mean_cost = 0.0;
    for (double c : batch.costs) mean_cost += c;
    mean_cost /= k;

    Tensor total;
    for (int i = 0; i < k; ++i) {
        Tensor term = op::scale(batch.logprobs[i], batch.costs[i] - mean_cost);
        total = total.defined() ? op::add(total, term) : term;
    }
    return op::scale(total, 1.0 / k);
}

void AdamW::step(std::vector<NamedParam>& params, double lr) {
    t_ += 1;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (auto& [name, tensor] : params) {
        auto node = tensor.node().get();
        auto& [m, v] = state_[node];
        if (m.size() != tensor.size()) {
            m.assign(tensor.size(), 0.0);
            v.assign(tensor.size(), 0.0);
        }
        const auto& g = tensor.grad();
        if (g.size() != tensor.size()) continue;  // never touched by backward
        auto& data = tensor.data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (!std::isfinite(g[i]))
                throw Error("optimizer_step: non-finite gradient in " + name);
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            data[i] -= lr * weight_decay_ * data[i];
            data[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

double clip_grad_norm(std::vector<NamedParam>& params, double max_norm) {
    double sq = 0.0;
    for (auto& [name, tensor] : params)
        for (double g : tensor.grad()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double f = max_norm / norm;
        for (auto& [name, tensor] : params) {
            auto node = tensor.node();
            for (double& g : node->grad) g *= f;
        }
    }
    return norm;
}

TrainResult train_loop(const TrainConfig& cfg) {
    if (cfg.problems.empty()) throw InvalidInput("train_loop: no problems configured");
    if (!(cfg.lr > 0.0)) throw InvalidInput("train_loop: learning rate must be positive");
    if (cfg.batch_size < 1) throw InvalidInput("train_loop: batch size must be >= 1");

    TrainResult result;
    result.params = init_params(cfg.model, cfg.seed);
    std::vector<NamedParam> params = named_parameters(result.params);
    AdamW opt(0.9, 0.999, 1e-8, cfg.weight_decay);
    Rng rng(Rng(cfg.seed).fork(1).next_u64());

    auto checkpoint = [&](int epoch) {
        if (cfg.out_dir.empty()) return;
        save_params(cfg.out_dir + "/ckpt_epoch" + std::to_string(epoch) + ".bin", result.params);
    };

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const int epoch = iter / std::max(1, cfg.batches_per_epoch);
        double lr = cfg.lr;
        for (int de : cfg.decay_epochs)
            if (epoch >= de) lr *= cfg.decay_factor;

        const std::string& problem =
            cfg.problems[cfg.problems.size() == 1 ? 0 : rng.next_below(cfg.problems.size())];
        const ProblemSpec& spec = spec_by_name(problem);

        Tensor loss_total;
        double cost_sum = 0.0;
        int cost_count = 0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            Instance inst = make_instance(spec, cfg.n_customers, rng.next_u64());
            std::vector<int> seeds = inst.depots;
            if (seeds.empty()) seeds.push_back(0);
            if (cfg.stochastic_pivot_seeds && inst.n_customers > 0) {
                const int customer =
                    inst.first_customer() + static_cast<int>(rng.next_below(inst.n_customers));
                if (customer < inst.n_nodes()) seeds.push_back(customer);
            }
            EncodedInstance encoded = encode_instance(inst, result.params, seeds);
            RolloutBatch batch =
                rollout_multistart(inst, encoded, cfg.model, cfg.n_starts, DecodeMode::kSample, &rng);
            Tensor loss = reinforce_loss(batch);
            loss_total = loss_total.defined() ? op::add(loss_total, loss) : loss;
            for (double c : batch.costs) cost_sum += c;
            cost_count += static_cast<int>(batch.costs.size());
        }
        Tensor loss = op::scale(loss_total, 1.0 / cfg.batch_size);

        for (auto& [name, tensor] : params) tensor.zero_grad();
        backward(loss);
        double grad_norm = 0.0;
        try {
            grad_norm = clip_grad_norm(params, cfg.grad_clip);
            if (!std::isfinite(grad_norm)) throw Error("train_loop: non-finite gradient norm");
            opt.step(params, lr);
        } catch (const Error&) {
            result.diverged = true;  // last finite parameters are retained
            checkpoint(epoch);
            return result;
        }

        TrainLogRow row;
        row.iter = iter;
        row.problem = problem;
        row.mean_cost = cost_sum / std::max(1, cost_count);
        row.baseline_cost = row.mean_cost;  // shared baseline is the batch mean
        row.grad_norm = grad_norm;
        row.lr = lr;
        result.log.push_back(row);

        if ((iter + 1) % std::max(1, cfg.batches_per_epoch) == 0) checkpoint(epoch);
    }
    if (cfg.iterations % std::max(1, cfg.batches_per_epoch) != 0)
        checkpoint(cfg.iterations / std::max(1, cfg.batches_per_epoch));
    return result;
}

void write_metric_log(const std::string& path, const std::vector<TrainLogRow>& log) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("write_metric_log: cannot open " + path);
    out << "iter,problem,mean_cost,baseline_cost,grad_norm,lr\n";
    out << std::setprecision(12);
    for (const auto& row : log)
        out << row.iter << "," << row.problem << "," << row.mean_cost << ","
            << row.baseline_cost << "," << row.grad_norm << "," << row.lr << "\n";
}

}  // namespace quasiroute
