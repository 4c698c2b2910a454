#include "warpforge/amoe.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>

#include "warpforge/error.hpp"
#include "warpforge/synthetic.hpp"

namespace warpforge {

namespace {

void require_same(const FeatureMap& a, const FeatureMap& b, const char* what) {
    if (!a.same_shape(b)) throw ContractViolation(std::string(what) + ": feature map dimensions differ");
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = uniform(rng, -scale, scale);
    return m;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(rng, -scale, scale);
    return v;
}

// Per-channel global average.
Eigen::VectorXd pool(const FeatureMap& f) {
    Eigen::VectorXd v(f.channels);
    const std::size_t n = f.plane();
    for (int c = 0; c < f.channels; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += f.data[c * n + i];
        v(c) = s / static_cast<double>(n);
    }
    return v;
}

Eigen::VectorXd summary(const FeatureMap& f_s, const FeatureMap& f_g) {
    const int c = f_s.channels;
    const Eigen::VectorXd ps = pool(f_s);
    const Eigen::VectorXd pg = pool(f_g);
    Eigen::VectorXd q(4 * c);
    q << ps, pg, ps, pg;  // F_s, F_g, then the pooled concatenation
    return q;
}

// residual + tanh(W x + b), where x stacks `inputs` channel-wise.
FeatureMap run_expert(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, const std::vector<const FeatureMap*>& inputs,
                      int out_channels) {
    const FeatureMap& first = *inputs.front();
    const std::size_t n = first.plane();
    FeatureMap out(out_channels, first.grid_h, first.grid_w);
    Eigen::VectorXd x(w.cols());
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Index k = 0;
        for (const FeatureMap* in : inputs)
            for (int c = 0; c < in->channels; ++c) x(k++) = in->data[c * n + i];
        const Eigen::VectorXd a = w * x + b;
        for (int c = 0; c < out_channels; ++c) {
            double residual = 0.0;
            for (const FeatureMap* in : inputs) residual += in->data[c * n + i];
            residual /= static_cast<double>(inputs.size());
            out.data[c * n + i] = residual + std::tanh(a(c));
        }
    }
    return out;
}

double normal(std::mt19937_64& rng) {
    // Box-Muller on portable uniforms
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

RouterParams RouterParams::zeros(int channels) {
    RouterParams r;
    r.channels = channels;
    r.weight = Eigen::MatrixXd::Zero(3, 4 * channels);
    return r;
}

RouterParams RouterParams::random(int channels, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    RouterParams r;
    r.channels = channels;
    r.weight = random_matrix(rng, 3, 4 * channels, scale);
    r.bias = random_vector(rng, 3, scale);
    return r;
}

ExpertParams ExpertParams::identity(int channels) {
    ExpertParams e;
    e.channels = channels;
    e.w_s = Eigen::MatrixXd::Zero(channels, channels);
    e.w_g = Eigen::MatrixXd::Zero(channels, channels);
    e.w_h = Eigen::MatrixXd::Zero(channels, 2 * channels);
    e.b_s = e.b_g = e.b_h = Eigen::VectorXd::Zero(channels);
    return e;
}

ExpertParams ExpertParams::random(int channels, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    ExpertParams e;
    e.channels = channels;
    e.w_s = random_matrix(rng, channels, channels, scale);
    e.b_s = random_vector(rng, channels, scale);
    e.w_g = random_matrix(rng, channels, channels, scale);
    e.b_g = random_vector(rng, channels, scale);
    e.w_h = random_matrix(rng, channels, 2 * channels, scale);
    e.b_h = random_vector(rng, channels, scale);
    return e;
}

Eigen::Vector3d router_logits(const RouterParams& router, const FeatureMap& f_s, const FeatureMap& f_g) {
    require_same(f_s, f_g, "route");
    if (router.channels != f_s.channels || router.weight.rows() != 3 || router.weight.cols() != 4 * f_s.channels)
        throw ContractViolation("route: router expects " + std::to_string(router.channels) + " channels");
    return router.weight * summary(f_s, f_g) + router.bias;
}

FusionWeights softmax_weights(const Eigen::Vector3d& logits) {
    const double m = logits.maxCoeff();
    const Eigen::Vector3d e = (logits.array() - m).exp();
    const double z = e.sum();
    return {e(0) / z, e(1) / z, e(2) / z};
}

FusionWeights route(const RouterParams& router, const FeatureMap& f_s, const FeatureMap& f_g) {
    return softmax_weights(router_logits(router, f_s, f_g));
}

FeatureMap concat(const FeatureMap& a, const FeatureMap& b) {
    if (a.grid_h != b.grid_h || a.grid_w != b.grid_w) throw ContractViolation("concat: spatial dims differ");
    FeatureMap out(a.channels + b.channels, a.grid_h, a.grid_w);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
    return out;
}

ExpertOutputs apply_experts(const ExpertParams& experts, const FeatureMap& f_s, const FeatureMap& f_g) {
    require_same(f_s, f_g, "experts");
    const int c = f_s.channels;
    if (experts.channels != c) throw ContractViolation("experts: channel count mismatch");
    return {run_expert(experts.w_s, experts.b_s, {&f_s}, c), run_expert(experts.w_g, experts.b_g, {&f_g}, c),
            run_expert(experts.w_h, experts.b_h, {&f_s, &f_g}, c)};
}

FeatureMap fuse(const ExpertParams& experts, const FusionWeights& w, const FeatureMap& f_s, const FeatureMap& f_g) {
    const ExpertOutputs h = apply_experts(experts, f_s, f_g);
    FeatureMap out(h.s.channels, h.s.grid_h, h.s.grid_w);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = w.s * h.s.data[i] + w.g * h.g.data[i] + w.h * h.h.data[i];
    return out;
}

double reg_loss(const FusionWeights& w, double lambda_e) {
    const auto v = w.as_array();
    const double mean = (v[0] + v[1] + v[2]) / 3.0;
    double variance = 0.0;
    double neg_entropy = 0.0;
    for (double x : v) {
        variance += (x - mean) * (x - mean);
        if (x > 0.0) neg_entropy += x * std::log(x);
    }
    return variance + lambda_e * neg_entropy;
}

Eigen::Vector3d reg_loss_grad(const FusionWeights& w, double lambda_e) {
    const auto v = w.as_array();
    const double mean = (v[0] + v[1] + v[2]) / 3.0;
    Eigen::Vector3d g;
    for (int r = 0; r < 3; ++r) {
        const double entropy = v[r] > 0.0 ? std::log(v[r]) + 1.0 : -std::numeric_limits<double>::infinity();
        g(r) = 2.0 * (v[r] - mean) + lambda_e * entropy;
    }
    return g;
}

double fusion_objective(const ExpertParams& experts, const RouterParams& router, const FeatureMap& f_s,
                        const FeatureMap& f_g, const FeatureMap& upstream, double reg_scale, double lambda_e) {
    const FusionWeights w = route(router, f_s, f_g);
    const FeatureMap f = fuse(experts, w, f_s, f_g);
    if (!upstream.same_shape(f)) throw ContractViolation("fusion_objective: upstream gradient shape mismatch");
    double j = 0.0;
    for (std::size_t i = 0; i < f.data.size(); ++i) j += upstream.data[i] * f.data[i];
    return j + reg_scale * reg_loss(w, lambda_e);
}

namespace {

// Backprop through residual + tanh(W x + b) for one expert. `upstream` is
// d J / d output; accumulates into dw, db and the input gradients.
void expert_backward(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, const std::vector<const FeatureMap*>& inputs,
                     const FeatureMap& upstream, double scale, Eigen::MatrixXd& dw, Eigen::VectorXd& db,
                     const std::vector<FeatureMap*>& dinputs) {
    const std::size_t n = upstream.plane();
    const int out_c = upstream.channels;
    Eigen::VectorXd x(w.cols());
    Eigen::VectorXd g(out_c);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Index k = 0;
        for (const FeatureMap* in : inputs)
            for (int c = 0; c < in->channels; ++c) x(k++) = in->data[c * n + i];
        const Eigen::VectorXd a = w * x + b;
        for (int c = 0; c < out_c; ++c) g(c) = scale * upstream.data[c * n + i];
        const Eigen::VectorXd delta = g.array() * (1.0 - a.array().tanh().square());
        dw += delta * x.transpose();
        db += delta;
        const Eigen::VectorXd dx = w.transpose() * delta;
        k = 0;
        for (std::size_t m = 0; m < inputs.size(); ++m)
            for (int c = 0; c < inputs[m]->channels; ++c) {
                dinputs[m]->data[c * n + i] += dx(k++) + g(c) / static_cast<double>(inputs.size());
            }
    }
}

}  // namespace

FusionGrads fusion_grads(const ExpertParams& experts, const RouterParams& router, const FeatureMap& f_s,
                         const FeatureMap& f_g, const FeatureMap& upstream, double reg_scale, double lambda_e) {
    const int c = f_s.channels;
    const Eigen::Vector3d logits = router_logits(router, f_s, f_g);
    const FusionWeights w = softmax_weights(logits);
    const ExpertOutputs h = apply_experts(experts, f_s, f_g);
    if (!upstream.same_shape(h.s)) throw ContractViolation("fusion_grads: upstream gradient shape mismatch");

    FusionGrads out;
    out.f_s = FeatureMap(c, f_s.grid_h, f_s.grid_w);
    out.f_g = FeatureMap(c, f_s.grid_h, f_s.grid_w);
    out.experts = ExpertParams::identity(c);
    out.router = RouterParams::zeros(c);

    // dJ/dw_r from the fused term
    const std::array<const FeatureMap*, 3> outs{&h.s, &h.g, &h.h};
    std::array<double, 3> dw{};
    for (int r = 0; r < 3; ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < upstream.data.size(); ++i) s += upstream.data[i] * outs[r]->data[i];
        dw[r] = s;
    }
    // through the softmax; the regularizer's w log w is folded in so w_r = 0
    // contributes nothing instead of 0 * -inf
    const auto wa = w.as_array();
    const double mean = (wa[0] + wa[1] + wa[2]) / 3.0;
    std::array<double, 3> wg{};
    for (int r = 0; r < 3; ++r) {
        double reg = 2.0 * (wa[r] - mean);
        if (wa[r] > 0.0) reg += lambda_e * (std::log(wa[r]) + 1.0);
        wg[r] = wa[r] > 0.0 ? wa[r] * (dw[r] + reg_scale * reg) : 0.0;
    }
    const double total = wg[0] + wg[1] + wg[2];
    for (int r = 0; r < 3; ++r) out.logits(r) = wg[r] - wa[r] * total;

    // router
    const Eigen::VectorXd q = summary(f_s, f_g);
    out.router.weight = out.logits * q.transpose();
    out.router.bias = out.logits;
    const Eigen::VectorXd dq = router.weight.transpose() * out.logits;
    const std::size_t n = f_s.plane();
    for (int ch = 0; ch < c; ++ch) {
        const double gs = (dq(ch) + dq(2 * c + ch)) / static_cast<double>(n);
        const double gg = (dq(c + ch) + dq(3 * c + ch)) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            out.f_s.data[ch * n + i] += gs;
            out.f_g.data[ch * n + i] += gg;
        }
    }

    // experts
    expert_backward(experts.w_s, experts.b_s, {&f_s}, upstream, w.s, out.experts.w_s, out.experts.b_s, {&out.f_s});
    expert_backward(experts.w_g, experts.b_g, {&f_g}, upstream, w.g, out.experts.w_g, out.experts.b_g, {&out.f_g});
    expert_backward(experts.w_h, experts.b_h, {&f_s, &f_g}, upstream, w.h, out.experts.w_h, out.experts.b_h,
                    {&out.f_s, &out.f_g});
    return out;
}

void PerturbConfig::validate() const {
    if (p_drop < 0.0 || p_drop > 1.0 || p_noise < 0.0 || p_noise > 1.0)
        throw ContractViolation("perturb: probabilities must lie in [0,1]");
    if (p_drop + p_noise > 1.0 + 1e-12)
        throw ContractViolation("perturb: p_drop + p_noise must not exceed 1 (events are exclusive)");
    if (sigma && *sigma < 0.0) throw ContractViolation("perturb: sigma must be non-negative");
}

ModalityRobustifier::ModalityRobustifier(PerturbConfig cfg) : cfg_(cfg), rng_(cfg.seed) { cfg_.validate(); }

PerturbResult ModalityRobustifier::apply(const std::array<FeatureMap, 3>& branches) {
    PerturbResult out{branches, {}};
    for (int r = 0; r < 3; ++r) {
        const double u = uniform01(rng_);
        FeatureMap& m = out.maps[r];
        if (u < cfg_.p_drop) {
            out.events[r] = PerturbEvent::Drop;
            std::fill(m.data.begin(), m.data.end(), 0.0);
        } else if (u < cfg_.p_drop + cfg_.p_noise) {
            out.events[r] = PerturbEvent::Noise;
            double sigma = 0.0;
            if (cfg_.sigma) {
                sigma = *cfg_.sigma;
            } else {
                double ss = 0.0;
                for (double v : m.data) ss += v * v;
                sigma = m.data.empty() ? 0.0 : 0.1 * std::sqrt(ss / static_cast<double>(m.data.size()));
            }
            for (double& v : m.data) v += sigma * normal(rng_);
        } else {
            out.events[r] = PerturbEvent::Keep;
        }
    }
    return out;
}

PerturbResult perturb(const std::array<FeatureMap, 3>& branches, const PerturbConfig& cfg) {
    ModalityRobustifier mr(cfg);
    return mr.apply(branches);
}

namespace {

void put(std::vector<double>& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
}

void take(const std::vector<double>& in, std::size_t& pos, Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = in[pos++];
}

}  // namespace

void write_amoe_blob(const std::filesystem::path& path, const RouterParams& router, const ExpertParams& experts) {
    if (router.channels != experts.channels) throw ContractViolation("AMOE blob: router/expert channel mismatch");
    std::vector<double> p;
    put(p, router.weight);
    put(p, router.bias);
    put(p, experts.w_s);
    put(p, experts.b_s);
    put(p, experts.w_g);
    put(p, experts.b_g);
    put(p, experts.w_h);
    put(p, experts.b_h);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    const std::uint32_t header[2] = {1u, static_cast<std::uint32_t>(router.channels)};
    out.write("AMOE", 4);
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
}

std::pair<RouterParams, ExpertParams> read_amoe_blob(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    char magic[4];
    std::uint32_t header[2];
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || std::memcmp(magic, "AMOE", 4) != 0) throw InputError("not an AMOE blob: " + path.string());
    if (header[0] != 1u) throw InputError("unsupported AMOE version " + std::to_string(header[0]));
    const int c = static_cast<int>(header[1]);
    RouterParams router = RouterParams::zeros(c);
    ExpertParams experts = ExpertParams::identity(c);
    const std::size_t count = static_cast<std::size_t>(4 * c * c + 15 * c + 3);
    std::vector<double> p(count);
    in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw InputError("truncated AMOE blob: " + path.string());
    if (in.peek() != std::char_traits<char>::eof()) throw InputError("trailing bytes in AMOE blob: " + path.string());
    std::size_t pos = 0;
    take(p, pos, router.weight);
    Eigen::MatrixXd bias(3, 1);
    take(p, pos, bias);
    router.bias = bias.col(0);
    auto take_vec = [&](Eigen::VectorXd& v) {
        Eigen::MatrixXd m(v.size(), 1);
        take(p, pos, m);
        v = m.col(0);
    };
    take(p, pos, experts.w_s);
    take_vec(experts.b_s);
    take(p, pos, experts.w_g);
    take_vec(experts.b_g);
    take(p, pos, experts.w_h);
    take_vec(experts.b_h);
    return {router, experts};
}

}  // namespace warpforge
