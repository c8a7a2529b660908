#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quasiroute/env.hpp"
#include "quasiroute/tensor.hpp"
#include "quasiroute/variants.hpp"

namespace quasiroute {

struct ModelConfig {
    int d_h = 128;
    int n_layers = 12;
    int n_pivots = 8;
    int wdad_rank = 32;
    int wdad_heads = 3;
    int d_ff = 512;
    double clip_zeta = 50.0;
    double in_eps = 1e-5;
    double wdad_eps = 1e-6;

    /// Table-style full configuration.
    static ModelConfig paper() { return ModelConfig{}; }
    /// Training configuration for CPU-scale experiments.
    static ModelConfig desk() { return ModelConfig{64, 2, 8, 16, 3, 256, 50.0, 1e-5, 1e-6}; }
    /// Tiny configuration for gradient checks (n = 8 instances).
    static ModelConfig test_tiny() { return ModelConfig{16, 2, 4, 8, 3, 64, 50.0, 1e-5, 1e-6}; }

    int udr_width() const { return 2 * n_pivots + 13; }
};

/// alpha = max(0, (lambda W1 + b1) W2 + b2); one scalar per network.
struct BiasNetParams {
    Tensor w1, b1, w2, b2;  // [10,d], [1,d], [d,1], [1,1]
};

struct AafmBranchParams {
    Tensor wq, wk, wv;  // [d,d] each, x*W orientation
    BiasNetParams bias;
};

struct LayerParams {
    std::array<AafmBranchParams, 3> branches;  // outgoing D, incoming D^T, relation R
    Tensor wo;                                 // [3d, d]
    Tensor ff_w1, ff_b1, ff_w2, ff_b2;
    Tensor in1_gamma, in1_beta, in2_gamma, in2_beta;
};

/// One adaptive decoder projection: shared base plus per-attribute multi-head
/// magnitude-normalized low-rank updates. All weights stored x*W ([d_in, d_out]),
/// so the per-output-channel norm runs over columns.
struct WdadProjection {
    struct Head {
        Tensor down;  // [d_in, r]
        Tensor up;    // [r, d_out]
        Tensor g;     // [1, d_out], zero-initialized
    };
    Tensor base;
    std::array<std::vector<Head>, 10> heads;  // per lambda attribute
};

struct ModelParams {
    ModelConfig cfg;
    Tensor w_phi, w_omega, w_xi;  // [2M,d], [6,d], [7,d]
    std::vector<LayerParams> layers;
    WdadProjection dec_first_q, dec_last_q, dec_k, dec_v, dec_c;
    BiasNetParams dec_bias_attn, dec_bias_com;
};

struct NamedParam {
    std::string name;
    Tensor tensor;
};

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);
std::vector<NamedParam> named_parameters(ModelParams& params);
/// Parameter counts per block, for `model describe`.
std::string describe(const ModelParams& params);

void save_params(const std::string& path, ModelParams& params);
ModelParams load_params(const std::string& path);

/// h_i = Phi W_phi + omega W_omega + xi W_xi (no bias).
Tensor embed_nodes(const Mat& udr, const ModelParams& params);

Tensor bias_alpha(const MultiHotLambda& lambda, const BiasNetParams& net);

/// sigma(Q) * [exp(A)(exp(K) * V)] / [exp(A) exp(K)], with a detached row-max
/// shift inside exp(A); the shift cancels in the ratio.
Tensor aafm(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& a);

/// -alpha * log2(N) * d_norm; the log2(N) factor is dropped for relation input.
Tensor adaptation_bias(const Tensor& alpha, int n_nodes, const Tensor& d_norm, bool with_scale);

/// Three AAFM branches over D, D^T and optional R, concatenated through W^O.
Tensor mbm(const Tensor& h, const Tensor& d_norm, const Tensor& d_norm_t,
           const std::optional<Tensor>& relation, const MultiHotLambda& lambda,
           const LayerParams& layer, const ModelConfig& cfg);

struct EncoderOutput {
    Tensor h;        // [n, d] final node embeddings
    Tensor k, v;     // decoder caches under the active lambda
    Tensor w_first_q, w_last_q, w_c;  // effective decoder projections
    Tensor alpha_attn, alpha_com;     // decoder distance-bias coefficients
    int n_nodes = 0;
};

Tensor wdad_effective_weights(const WdadProjection& proj, const MultiHotLambda& lambda,
                              const ModelConfig& cfg);

EncoderOutput encoder_forward(const Tensor& h0, const Mat& d_norm,
                              const std::optional<Mat>& relation, const MultiHotLambda& lambda,
                              const ModelParams& params);

/// One decode step for a batch of trajectories of the same instance.
/// first/last index into the encoder rows; c_t, mask and d_rows are [T,1]/[T,n].
Tensor decode_step(const EncoderOutput& enc, const std::vector<int>& first_nodes,
                   const std::vector<int>& last_nodes, const Tensor& c_t, const Tensor& mask,
                   const Tensor& d_rows, const ModelConfig& cfg);

/// Scalar context C_t: remaining load (capacity), normalized remaining length
/// (OP), remaining prize to collect (PC), otherwise 0.
double problem_state_scalar(const RolloutState& state, const Instance& inst);

/// Relation matrix for PD variants (0 on pairs and the diagonal, 1 elsewhere);
/// nullopt for every other variant.
std::optional<Mat> relation_matrix(const Instance& inst);

/// Everything decode needs for one instance under one pivot view.
struct EncodedInstance {
    EncoderOutput enc;
    Mat d_norm;  // z-scored distance matrix; rows feed the decoder biases
    MultiHotLambda lambda;
    PivotSet pivots;
};

/// FPS on the mean-symmetrized metric from the given seeds, BFR, UDR (padded
/// to the parameter width when the instance has fewer nodes than pivots),
/// then the full encoder pass.
EncodedInstance encode_instance(const Instance& inst, const ModelParams& params,
                                const std::vector<int>& pivot_seeds);

}  // namespace quasiroute
