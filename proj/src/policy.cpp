#include "quasiroute/policy.hpp"

#include <cmath>
#include <sstream>

namespace quasiroute {

namespace op = ops;

namespace {

Tensor uniform_init(int rows, int cols, double bound, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(rows) * cols);
    for (double& x : v) x = rng.uniform(-bound, bound);
    return Tensor::from(rows, cols, std::move(v), true);
}

Tensor fan_in_init(int rows, int cols, Rng& rng) {
    return uniform_init(rows, cols, 1.0 / std::sqrt(static_cast<double>(rows)), rng);
}

Tensor normal_init(int rows, int cols, double sd, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(rows) * cols);
    for (double& x : v) x = sd * rng.next_normal();
    return Tensor::from(rows, cols, std::move(v), true);
}

Tensor const_init(int rows, int cols, double value) {
    return Tensor::from(rows, cols,
                        std::vector<double>(static_cast<std::size_t>(rows) * cols, value), true);
}

BiasNetParams init_bias_net(int d_h, Rng& rng) {
    BiasNetParams net;
    net.w1 = fan_in_init(10, d_h, rng);
    net.b1 = const_init(1, d_h, 0.0);
    net.w2 = fan_in_init(d_h, 1, rng);
    // small positive start keeps the distance prior alive from the first step
    net.b2 = const_init(1, 1, 0.1);
    return net;
}

WdadProjection init_wdad(int d_in, int d_out, const ModelConfig& cfg, Rng& rng) {
    WdadProjection proj;
    proj.base = fan_in_init(d_in, d_out, rng);
    const double down_bound = 1.0 / std::sqrt(static_cast<double>(cfg.wdad_rank) * d_in);
    for (int attr = 0; attr < 10; ++attr) {
        proj.heads[attr].resize(cfg.wdad_heads);
        for (auto& head : proj.heads[attr]) {
            head.down = uniform_init(d_in, cfg.wdad_rank, down_bound, rng);
            head.up = normal_init(cfg.wdad_rank, d_out, 0.01, rng);
            head.g = const_init(1, d_out, 0.0);
        }
    }
    return proj;
}

Tensor lambda_tensor(const MultiHotLambda& lambda) {
    std::vector<double> bits(10);
    for (int i = 0; i < 10; ++i) bits[i] = lambda.bits[i];
    return Tensor::from(1, 10, std::move(bits));
}

void collect_bias_net(std::vector<NamedParam>& out, const std::string& prefix, BiasNetParams& net) {
    out.push_back({prefix + ".w1", net.w1});
    out.push_back({prefix + ".b1", net.b1});
    out.push_back({prefix + ".w2", net.w2});
    out.push_back({prefix + ".b2", net.b2});
}

void collect_wdad(std::vector<NamedParam>& out, const std::string& prefix, WdadProjection& proj) {
    out.push_back({prefix + ".base", proj.base});
    for (int attr = 0; attr < 10; ++attr)
        for (std::size_t h = 0; h < proj.heads[attr].size(); ++h) {
            const std::string head = prefix + ".a" + std::to_string(attr) + ".h" + std::to_string(h);
            out.push_back({head + ".down", proj.heads[attr][h].down});
            out.push_back({head + ".up", proj.heads[attr][h].up});
            out.push_back({head + ".g", proj.heads[attr][h].g});
        }
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    ModelParams p;
    p.cfg = cfg;
    const int d = cfg.d_h;
    p.w_phi = fan_in_init(2 * cfg.n_pivots, d, rng);
    p.w_omega = fan_in_init(6, d, rng);
    p.w_xi = fan_in_init(7, d, rng);
    p.layers.resize(cfg.n_layers);
    for (auto& layer : p.layers) {
        for (auto& branch : layer.branches) {
            branch.wq = fan_in_init(d, d, rng);
            branch.wk = fan_in_init(d, d, rng);
            branch.wv = fan_in_init(d, d, rng);
            branch.bias = init_bias_net(d, rng);
        }
        layer.wo = fan_in_init(3 * d, d, rng);
        layer.ff_w1 = fan_in_init(d, cfg.d_ff, rng);
        layer.ff_b1 = const_init(1, cfg.d_ff, 0.0);
        layer.ff_w2 = fan_in_init(cfg.d_ff, d, rng);
        layer.ff_b2 = const_init(1, d, 0.0);
        layer.in1_gamma = const_init(1, d, 1.0);
        layer.in1_beta = const_init(1, d, 0.0);
        layer.in2_gamma = const_init(1, d, 1.0);
        layer.in2_beta = const_init(1, d, 0.0);
    }
    p.dec_first_q = init_wdad(d, d, cfg, rng);
    p.dec_last_q = init_wdad(d, d, cfg, rng);
    p.dec_k = init_wdad(d, d, cfg, rng);
    p.dec_v = init_wdad(d, d, cfg, rng);
    p.dec_c = init_wdad(1, d, cfg, rng);
    p.dec_bias_attn = init_bias_net(d, rng);
    p.dec_bias_com = init_bias_net(d, rng);
    return p;
}

std::vector<NamedParam> named_parameters(ModelParams& p) {
    std::vector<NamedParam> out;
    out.push_back({"embed.w_phi", p.w_phi});
    out.push_back({"embed.w_omega", p.w_omega});
    out.push_back({"embed.w_xi", p.w_xi});
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& layer = p.layers[l];
        const std::string lp = "enc.l" + std::to_string(l);
        for (int b = 0; b < 3; ++b) {
            const std::string bp = lp + ".br" + std::to_string(b);
            out.push_back({bp + ".wq", layer.branches[b].wq});
            out.push_back({bp + ".wk", layer.branches[b].wk});
            out.push_back({bp + ".wv", layer.branches[b].wv});
            collect_bias_net(out, bp + ".bias", layer.branches[b].bias);
        }
        out.push_back({lp + ".wo", layer.wo});
        out.push_back({lp + ".ff_w1", layer.ff_w1});
        out.push_back({lp + ".ff_b1", layer.ff_b1});
        out.push_back({lp + ".ff_w2", layer.ff_w2});
        out.push_back({lp + ".ff_b2", layer.ff_b2});
        out.push_back({lp + ".in1_gamma", layer.in1_gamma});
        out.push_back({lp + ".in1_beta", layer.in1_beta});
        out.push_back({lp + ".in2_gamma", layer.in2_gamma});
        out.push_back({lp + ".in2_beta", layer.in2_beta});
    }
    collect_wdad(out, "dec.first_q", p.dec_first_q);
    collect_wdad(out, "dec.last_q", p.dec_last_q);
    collect_wdad(out, "dec.k", p.dec_k);
    collect_wdad(out, "dec.v", p.dec_v);
    collect_wdad(out, "dec.c", p.dec_c);
    collect_bias_net(out, "dec.bias_attn", p.dec_bias_attn);
    collect_bias_net(out, "dec.bias_com", p.dec_bias_com);
    return out;
}

std::string describe(const ModelParams& params) {
    ModelParams& p = const_cast<ModelParams&>(params);
    std::size_t embed = 0, encoder = 0, dec_base = 0, dec_adapters = 0, bias_nets = 0;
    for (const auto& [name, t] : named_parameters(p)) {
        if (name.rfind("embed.", 0) == 0)
            embed += t.size();
        else if (name.rfind("enc.", 0) == 0 && name.find(".bias.") == std::string::npos)
            encoder += t.size();
        else if (name.find("bias") != std::string::npos)
            bias_nets += t.size();
        else if (name.find(".base") != std::string::npos)
            dec_base += t.size();
        else
            dec_adapters += t.size();
    }
    std::ostringstream os;
    os << "embedding: " << embed << "\n"
       << "encoder: " << encoder << "\n"
       << "bias networks: " << bias_nets << "\n"
       << "decoder base: " << dec_base << "\n"
       << "decoder adapters: " << dec_adapters << "\n"
       << "total: " << (embed + encoder + dec_base + dec_adapters + bias_nets) << "\n";
    return os.str();
}

void save_params(const std::string& path, ModelParams& params) {
    std::vector<NamedArray> arrays;
    for (auto& [name, t] : named_parameters(params))
        arrays.push_back({name, t.rows(), t.cols(), t.data()});
    std::map<std::string, double> hyper{
        {"d_h", static_cast<double>(params.cfg.d_h)},
        {"n_layers", static_cast<double>(params.cfg.n_layers)},
        {"n_pivots", static_cast<double>(params.cfg.n_pivots)},
        {"wdad_rank", static_cast<double>(params.cfg.wdad_rank)},
        {"wdad_heads", static_cast<double>(params.cfg.wdad_heads)},
        {"d_ff", static_cast<double>(params.cfg.d_ff)},
        {"clip_zeta", params.cfg.clip_zeta},
    };
    save_checkpoint(path, arrays, hyper);
}

ModelParams load_params(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    ModelConfig cfg;
    cfg.d_h = static_cast<int>(ckpt.hyper.at("d_h"));
    cfg.n_layers = static_cast<int>(ckpt.hyper.at("n_layers"));
    cfg.n_pivots = static_cast<int>(ckpt.hyper.at("n_pivots"));
    cfg.wdad_rank = static_cast<int>(ckpt.hyper.at("wdad_rank"));
    cfg.wdad_heads = static_cast<int>(ckpt.hyper.at("wdad_heads"));
    cfg.d_ff = static_cast<int>(ckpt.hyper.at("d_ff"));
    cfg.clip_zeta = ckpt.hyper.at("clip_zeta");
    ModelParams params = init_params(cfg, 0);
    for (auto& [name, t] : named_parameters(params)) {
        const NamedArray& arr = ckpt.find(name);
        if (arr.rows != t.rows() || arr.cols != t.cols())
            throw ShapeError("load_params: shape mismatch for " + name);
        t.data() = arr.values;
    }
    return params;
}

Tensor embed_nodes(const Mat& udr, const ModelParams& params) {
    const int m2 = params.w_phi.rows();
    if (udr.cols != m2 + 13)
        throw ShapeError("embed_nodes: UDR width " + std::to_string(udr.cols) +
                         " does not match parameters (" + std::to_string(m2 + 13) + ")");
    const int n = udr.rows;
    Mat phi(n, m2), omega(n, 6), xi(n, 7);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m2; ++j) phi(i, j) = udr(i, j);
        for (int j = 0; j < 6; ++j) omega(i, j) = udr(i, m2 + j);
        for (int j = 0; j < 7; ++j) xi(i, j) = udr(i, m2 + 6 + j);
    }
    Tensor h = op::matmul(Tensor::from_mat(phi), params.w_phi);
    h = op::add(h, op::matmul(Tensor::from_mat(omega), params.w_omega));
    h = op::add(h, op::matmul(Tensor::from_mat(xi), params.w_xi));
    return h;
}

Tensor bias_alpha(const MultiHotLambda& lambda, const BiasNetParams& net) {
    Tensor lam = lambda_tensor(lambda);
    Tensor hidden = op::add(op::matmul(lam, net.w1), net.b1);
    Tensor out = op::add(op::matmul(hidden, net.w2), net.b2);
    return op::relu(out);
}

Tensor aafm(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& a) {
    if (k.rows() != v.rows() || k.cols() != v.cols() || a.rows() != q.rows() ||
        a.cols() != k.rows() || q.cols() != k.cols())
        throw ShapeError("aafm: inconsistent shapes");
    for (int i = 0; i < a.rows(); ++i) {
        bool alive = false;
        for (int j = 0; j < a.cols(); ++j)
            if (a.at(i, j) > -kMaskLarge / 2) {
                alive = true;
                break;
            }
        if (!alive) throw DomainError("aafm: bias row fully suppressed");
    }
    Tensor shifted = op::sub(a, op::broadcast_to(op::row_max_detached(a), a.rows(), a.cols()));
    Tensor ea = op::exp(shifted);
    Tensor ek = op::exp(k);
    Tensor numer = op::matmul(ea, op::mul(ek, v));
    Tensor denom = op::matmul(ea, ek);
    return op::mul(op::sigmoid(q), op::div(numer, denom));
}

Tensor adaptation_bias(const Tensor& alpha, int n_nodes, const Tensor& d_norm, bool with_scale) {
    const double factor = with_scale ? std::log2(static_cast<double>(n_nodes)) : 1.0;
    Tensor coef = op::scale(alpha, -factor);  // [1,1]
    return op::mul(op::broadcast_to(coef, d_norm.rows(), d_norm.cols()), d_norm);
}

Tensor mbm(const Tensor& h, const Tensor& d_norm, const Tensor& d_norm_t,
           const std::optional<Tensor>& relation, const MultiHotLambda& lambda,
           const LayerParams& layer, const ModelConfig& cfg) {
    const int n = h.rows();
    auto branch_out = [&](int b, const Tensor& bias_matrix) {
        const AafmBranchParams& br = layer.branches[b];
        Tensor q = op::matmul(h, br.wq);
        Tensor k = op::matmul(h, br.wk);
        Tensor v = op::matmul(h, br.wv);
        return aafm(q, k, v, bias_matrix);
    };
    Tensor alpha0 = bias_alpha(lambda, layer.branches[0].bias);
    Tensor alpha1 = bias_alpha(lambda, layer.branches[1].bias);
    Tensor h0 = branch_out(0, adaptation_bias(alpha0, n, d_norm, true));
    Tensor h1 = branch_out(1, adaptation_bias(alpha1, n, d_norm_t, true));
    Tensor h2;
    if (relation.has_value()) {
        Tensor alpha2 = bias_alpha(lambda, layer.branches[2].bias);
        h2 = branch_out(2, adaptation_bias(alpha2, n, *relation, false));
    } else {
        h2 = Tensor::zeros(n, cfg.d_h);  // absent relation contributes a zero branch
    }
    return op::matmul(op::concat_cols({h0, h1, h2}), layer.wo);
}

Tensor wdad_effective_weights(const WdadProjection& proj, const MultiHotLambda& lambda,
                              const ModelConfig& cfg) {
    std::vector<int> active;
    for (int j = 0; j < 10; ++j)
        if (lambda.bits[j]) active.push_back(j);
    if (active.empty()) return proj.base;  // falls back to the shared base decoder

    const int d_in = proj.base.rows();
    const int d_out = proj.base.cols();
    Tensor delta_sum;
    for (int j : active) {
        for (const auto& head : proj.heads[j]) {
            Tensor p = op::matmul(head.down, head.up);  // [d_in, d_out]
            Tensor col_norm = op::sqrt(op::sum_axis(op::mul(p, p), 0));  // [1, d_out]
            Tensor scale_row = op::div(head.g, op::add_scalar(col_norm, cfg.wdad_eps));
            Tensor delta = op::mul(p, op::broadcast_to(scale_row, d_in, d_out));
            delta_sum = delta_sum.defined() ? op::add(delta_sum, delta) : delta;
        }
    }
    const double z = std::max(1.0, static_cast<double>(active.size()));
    return op::add(proj.base, op::scale(delta_sum, 1.0 / z));
}

EncoderOutput encoder_forward(const Tensor& h0, const Mat& d_norm,
                              const std::optional<Mat>& relation, const MultiHotLambda& lambda,
                              const ModelParams& params) {
    const int n = h0.rows();
    Tensor dn = Tensor::from_mat(d_norm);
    Tensor dnt = op::transpose(dn);
    std::optional<Tensor> rel;
    if (relation.has_value()) rel = Tensor::from_mat(*relation);

    Tensor h = h0;
    for (const auto& layer : params.layers) {
        Tensor mixed = mbm(h, dn, dnt, rel, lambda, layer, params.cfg);
        Tensor h_tilde = op::instance_norm(op::add(h, mixed), layer.in1_gamma, layer.in1_beta,
                                           params.cfg.in_eps);
        Tensor ff = op::matmul(
            op::relu(op::add(op::matmul(h_tilde, layer.ff_w1),
                             op::broadcast_to(layer.ff_b1, n, params.cfg.d_ff))),
            layer.ff_w2);
        ff = op::add(ff, op::broadcast_to(layer.ff_b2, n, params.cfg.d_h));
        h = op::instance_norm(op::add(h_tilde, ff), layer.in2_gamma, layer.in2_beta,
                              params.cfg.in_eps);
    }

    EncoderOutput out;
    out.h = h;
    out.n_nodes = n;
    Tensor wk = wdad_effective_weights(params.dec_k, lambda, params.cfg);
    Tensor wv = wdad_effective_weights(params.dec_v, lambda, params.cfg);
    out.k = op::matmul(h, wk);
    out.v = op::matmul(h, wv);
    out.w_first_q = wdad_effective_weights(params.dec_first_q, lambda, params.cfg);
    out.w_last_q = wdad_effective_weights(params.dec_last_q, lambda, params.cfg);
    out.w_c = wdad_effective_weights(params.dec_c, lambda, params.cfg);
    out.alpha_attn = bias_alpha(lambda, params.dec_bias_attn);
    out.alpha_com = bias_alpha(lambda, params.dec_bias_com);
    return out;
}

Tensor decode_step(const EncoderOutput& enc, const std::vector<int>& first_nodes,
                   const std::vector<int>& last_nodes, const Tensor& c_t, const Tensor& mask,
                   const Tensor& d_rows, const ModelConfig& cfg) {
    const int t = static_cast<int>(first_nodes.size());
    const int n = enc.n_nodes;
    if (static_cast<int>(last_nodes.size()) != t || c_t.rows() != t || mask.rows() != t ||
        mask.cols() != n || d_rows.rows() != t || d_rows.cols() != n)
        throw ShapeError("decode_step: inconsistent trajectory batch shapes");

    Tensor q = op::add(op::matmul(op::gather_rows(enc.h, first_nodes), enc.w_first_q),
                       op::matmul(op::gather_rows(enc.h, last_nodes), enc.w_last_q));
    q = op::add(q, op::matmul(c_t, enc.w_c));

    const double lg = std::log2(static_cast<double>(n));
    Tensor attn_coef = op::broadcast_to(op::scale(enc.alpha_attn, -lg), t, n);
    Tensor a_dec = op::add(op::mul(attn_coef, d_rows), mask);
    Tensor h_ctx = aafm(q, enc.k, enc.v, a_dec);

    Tensor scores = op::scale(op::matmul(h_ctx, op::transpose(enc.h)),
                              1.0 / std::sqrt(static_cast<double>(cfg.d_h)));
    Tensor com_coef = op::broadcast_to(op::scale(enc.alpha_com, -lg), t, n);
    scores = op::add(scores, op::mul(com_coef, d_rows));

    Tensor logits = op::scale(op::tanh(scores), cfg.clip_zeta);
    return op::masked_softmax(logits, mask);
}

double problem_state_scalar(const RolloutState& state, const Instance& inst) {
    const ConstraintFlags& f = inst.spec.flags;
    if (f.capacity) return state.remaining_load;
    if (f.orienteering) {
        const double limit = inst.spec.params.op_max_length;
        return std::max(0.0, limit - state.route_used) / limit;
    }
    if (f.prize_collecting) return std::max(0.0, inst.prize_target - state.collected_prize);
    return 0.0;
}

std::optional<Mat> relation_matrix(const Instance& inst) {
    if (!inst.spec.flags.pickup_delivery) return std::nullopt;
    const int n = inst.n_nodes();
    Mat r(n, n, 1.0);
    for (int v = 0; v < n; ++v) {
        r(v, v) = 0.0;
        if (!inst.is_depot(v) && inst.role_pickup[v]) {
            const int partner = inst.pd_partner(v);
            r(v, partner) = 0.0;
            r(partner, v) = 0.0;
        }
    }
    return r;
}

EncodedInstance encode_instance(const Instance& inst, const ModelParams& params,
                                const std::vector<int>& pivot_seeds) {
    const int n = inst.n_nodes();
    const int m = std::min(params.cfg.n_pivots, n);
    std::vector<int> seeds = pivot_seeds;
    if (static_cast<int>(seeds.size()) > m) seeds.resize(m);

    EncodedInstance out;
    out.pivots = fps_select(symmetrize_mean(inst.dist), m, seeds);
    BfrEmbedding emb = bfr_embed(inst.dist, out.pivots);
    Mat udr = build_udr(inst, emb);
    if (m < params.cfg.n_pivots) {
        // fewer nodes than pivots: pad the Phi block with zero columns
        Mat padded(n, params.cfg.udr_width(), 0.0);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 2 * m; ++j) padded(i, j) = udr(i, j);
            for (int j = 0; j < 13; ++j) padded(i, 2 * params.cfg.n_pivots + j) = udr(i, 2 * m + j);
        }
        udr = std::move(padded);
    }
    out.lambda = build_lambda(inst.spec);
    out.d_norm = zscore_normalize(inst.dist);
    Tensor h0 = embed_nodes(udr, params);
    out.enc = encoder_forward(h0, out.d_norm, relation_matrix(inst), out.lambda, params);
    return out;
}

}  // namespace quasiroute
