#include "trailmark/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "trailmark/error.hpp"
#include "trailmark/parallel.hpp"
#include "trailmark/rng.hpp"

namespace trailmark::ae {

namespace {

constexpr std::size_t kInputChannels = 4;

void check_hyper(const AEHyper& h) {
    if (h.c1 < 1 || h.c2 < 1) fail("ShapeMismatch", "channel counts must be positive");
    if (h.conv_window != 3 || h.pool_window != 2)
        fail("ShapeMismatch", "architecture is fixed to conv window 3 and pool window 2");
}

void conv3_same_backward(std::span<const double> in, std::size_t c_in, std::size_t m,
                         std::span<const double> w, std::size_t c_out,
                         std::span<const double> d_out, std::span<double> d_in,
                         std::span<double> d_w, std::span<double> d_b) {
    // d_in is accumulated from zero; d_w/d_b accumulate across batch.
    std::fill(d_in.begin(), d_in.end(), 0.0);
    for (std::size_t o = 0; o < c_out; ++o) {
        const double* dout = d_out.data() + o * m;
        double acc_b = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc_b += dout[i];
        d_b[o] += acc_b;
        for (std::size_t c = 0; c < c_in; ++c) {
            const double* src = in.data() + c * m;
            double* din = d_in.data() + c * m;
            double* dw = d_w.data() + (o * c_in + c) * 3;
            double dw0 = 0.0, dw1 = 0.0, dw2 = 0.0;
            const double w0 = w[(o * c_in + c) * 3 + 0];
            const double w1 = w[(o * c_in + c) * 3 + 1];
            const double w2 = w[(o * c_in + c) * 3 + 2];
            for (std::size_t i = 0; i < m; ++i) {
                const double g = dout[i];
                if (i > 0) {
                    dw0 += g * src[i - 1];
                    din[i - 1] += g * w0;
                }
                dw1 += g * src[i];
                din[i] += g * w1;
                if (i + 1 < m) {
                    dw2 += g * src[i + 1];
                    din[i + 1] += g * w2;
                }
            }
            dw[0] += dw0;
            dw[1] += dw1;
            dw[2] += dw2;
        }
    }
}

struct Trace {
    // activations (post dropout where applicable)
    std::vector<double> a1, d1;          // c1 x m
    std::vector<double> a2, d2;          // c2 x m
    std::vector<double> pooled;          // c2 x mp
    std::vector<std::size_t> argmax;     // c2 x mp
    std::vector<double> up;              // c2 x (2 mp)
    std::vector<double> b1;              // c1 x (2 mp)
    std::vector<double> b2;              // 4 x (2 mp)
    std::vector<double> mask1, mask2;    // dropout scale factors (0 or 1/(1-p))
    std::vector<double> relu1, relu2, relu3;  // relu gates when enabled
};

void apply_relu(std::vector<double>& a, std::vector<double>& gate) {
    gate.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > 0.0) {
            gate[i] = 1.0;
        } else {
            gate[i] = 0.0;
            a[i] = 0.0;
        }
    }
}

// Forward pass for one sample, recording everything backprop needs.
// Dropout masks are drawn from `rng` in a fixed order (mask1 then mask2).
void forward_sample(const AEParams& p, std::span<const double> x, std::size_t m, Mode mode,
                    Rng* rng, Trace& t) {
    const auto c1 = static_cast<std::size_t>(p.hyper.c1);
    const auto c2 = static_cast<std::size_t>(p.hyper.c2);
    const std::size_t mp = pooled_length(m);
    const std::size_t mu = 2 * mp;
    const double keep = 1.0 - p.hyper.dropout_p;

    t.a1.resize(c1 * m);
    conv3_same(x, kInputChannels, m, p.t.enc1_w, p.t.enc1_b, c1, t.a1);
    if (p.hyper.relu) apply_relu(t.a1, t.relu1);

    t.mask1.assign(c1 * m, 1.0);
    if (mode == Mode::train) {
        for (double& v : t.mask1) v = rng->uniform() < p.hyper.dropout_p ? 0.0 : 1.0 / keep;
    }
    t.d1.resize(c1 * m);
    for (std::size_t i = 0; i < t.d1.size(); ++i) t.d1[i] = t.a1[i] * t.mask1[i];

    t.a2.resize(c2 * m);
    conv3_same(t.d1, c1, m, p.t.enc2_w, p.t.enc2_b, c2, t.a2);
    if (p.hyper.relu) apply_relu(t.a2, t.relu2);

    t.mask2.assign(c2 * m, 1.0);
    if (mode == Mode::train) {
        for (double& v : t.mask2) v = rng->uniform() < p.hyper.dropout_p ? 0.0 : 1.0 / keep;
    }
    t.d2.resize(c2 * m);
    for (std::size_t i = 0; i < t.d2.size(); ++i) t.d2[i] = t.a2[i] * t.mask2[i];

    t.pooled.resize(c2 * mp);
    maxpool2(t.d2, c2, m, t.pooled, t.argmax);

    t.up.resize(c2 * mu);
    upsample2(t.pooled, c2, mp, t.up);

    t.b1.resize(c1 * mu);
    conv3_same(t.up, c2, mu, p.t.dec1_w, p.t.dec1_b, c1, t.b1);
    if (p.hyper.relu) apply_relu(t.b1, t.relu3);

    t.b2.resize(kInputChannels * mu);
    conv3_same(t.b1, c1, mu, p.t.dec2_w, p.t.dec2_b, kInputChannels, t.b2);
}

void trim_recon(const Trace& t, std::size_t m, std::vector<double>& recon) {
    const std::size_t mu = 2 * pooled_length(m);
    recon.resize(kInputChannels * m);
    for (std::size_t c = 0; c < kInputChannels; ++c)
        std::copy_n(t.b2.begin() + static_cast<std::ptrdiff_t>(c * mu), m,
                    recon.begin() + static_cast<std::ptrdiff_t>(c * m));
}

void zero_like(const AETensors& src, AETensors& dst) {
    dst.enc1_w.assign(src.enc1_w.size(), 0.0);
    dst.enc1_b.assign(src.enc1_b.size(), 0.0);
    dst.enc2_w.assign(src.enc2_w.size(), 0.0);
    dst.enc2_b.assign(src.enc2_b.size(), 0.0);
    dst.dec1_w.assign(src.dec1_w.size(), 0.0);
    dst.dec1_b.assign(src.dec1_b.size(), 0.0);
    dst.dec2_w.assign(src.dec2_w.size(), 0.0);
    dst.dec2_b.assign(src.dec2_b.size(), 0.0);
}

}  // namespace

void conv3_same(std::span<const double> in, std::size_t c_in, std::size_t m,
                std::span<const double> w, std::span<const double> b, std::size_t c_out,
                std::span<double> out) {
    if (in.size() != c_in * m || w.size() != c_out * c_in * 3 || b.size() != c_out ||
        out.size() != c_out * m)
        fail("ShapeMismatch", "conv3_same buffer sizes disagree");
    for (std::size_t o = 0; o < c_out; ++o) {
        double* dst = out.data() + o * m;
        std::fill_n(dst, m, b[o]);
        for (std::size_t c = 0; c < c_in; ++c) {
            const double* src = in.data() + c * m;
            const double w0 = w[(o * c_in + c) * 3 + 0];
            const double w1 = w[(o * c_in + c) * 3 + 1];
            const double w2 = w[(o * c_in + c) * 3 + 2];
            if (m == 1) {
                dst[0] += w1 * src[0];
                continue;
            }
            dst[0] += w1 * src[0] + w2 * src[1];
            for (std::size_t i = 1; i + 1 < m; ++i)
                dst[i] += w0 * src[i - 1] + w1 * src[i] + w2 * src[i + 1];
            dst[m - 1] += w0 * src[m - 2] + w1 * src[m - 1];
        }
    }
}

void maxpool2(std::span<const double> in, std::size_t channels, std::size_t m,
              std::span<double> out, std::vector<std::size_t>& argmax) {
    const std::size_t mp = pooled_length(m);
    if (in.size() != channels * m || out.size() != channels * mp)
        fail("ShapeMismatch", "maxpool2 buffer sizes disagree");
    argmax.resize(channels * mp);
    for (std::size_t c = 0; c < channels; ++c) {
        const double* src = in.data() + c * m;
        for (std::size_t j = 0; j < mp; ++j) {
            const std::size_t i0 = 2 * j;
            const std::size_t i1 = i0 + 1;
            // ties keep the first element
            if (i1 < m && src[i1] > src[i0]) {
                out[c * mp + j] = src[i1];
                argmax[c * mp + j] = i1;
            } else {
                out[c * mp + j] = src[i0];
                argmax[c * mp + j] = i0;
            }
        }
    }
}

void upsample2(std::span<const double> in, std::size_t channels, std::size_t mp,
               std::span<double> out) {
    if (in.size() != channels * mp || out.size() != channels * 2 * mp)
        fail("ShapeMismatch", "upsample2 buffer sizes disagree");
    for (std::size_t c = 0; c < channels; ++c) {
        const double* src = in.data() + c * mp;
        double* dst = out.data() + c * 2 * mp;
        for (std::size_t j = 0; j < mp; ++j) {
            dst[2 * j] = src[j];
            dst[2 * j + 1] = src[j];
        }
    }
}

AEParams ae_init(const AEHyper& hyper) {
    check_hyper(hyper);
    const auto c1 = static_cast<std::size_t>(hyper.c1);
    const auto c2 = static_cast<std::size_t>(hyper.c2);
    AEParams p;
    p.hyper = hyper;
    Rng rng(hyper.seed);
    auto init_layer = [&rng](std::vector<double>& w, std::vector<double>& b, std::size_t c_out,
                             std::size_t c_in) {
        const double bound = std::sqrt(1.0 / (static_cast<double>(c_in) * 3.0));
        w.resize(c_out * c_in * 3);
        b.resize(c_out);
        for (double& v : w) v = rng.uniform(-bound, bound);
        for (double& v : b) v = rng.uniform(-bound, bound);
    };
    init_layer(p.t.enc1_w, p.t.enc1_b, c1, kInputChannels);
    init_layer(p.t.enc2_w, p.t.enc2_b, c2, c1);
    init_layer(p.t.dec1_w, p.t.dec1_b, c1, c2);
    init_layer(p.t.dec2_w, p.t.dec2_b, kInputChannels, c1);
    return p;
}

AdamState adam_init(const AEParams& params) {
    AdamState s;
    zero_like(params.t, s.m);
    zero_like(params.t, s.v);
    return s;
}

ForwardResult ae_forward(const AEParams& params, std::span<const double> x, std::size_t m,
                         Mode mode, std::uint64_t seed) {
    if (m < 2) fail("ShapeMismatch", "sample length must be at least 2");
    if (x.size() != kInputChannels * m) fail("ShapeMismatch", "input must be 4 x m");
    Rng rng(seed);
    Trace t;
    forward_sample(params, x, m, mode, &rng, t);
    ForwardResult r;
    r.latent = t.pooled;
    trim_recon(t, m, r.recon);
    return r;
}

double ae_loss(std::span<const double> recon, std::span<const double> x) {
    if (recon.size() != x.size() || recon.empty()) fail("ShapeMismatch", "loss inputs must match");
    double acc = 0.0;
    for (std::size_t i = 0; i < recon.size(); ++i) acc += std::abs(recon[i] - x[i]);
    return acc / static_cast<double>(recon.size());
}

AEGradients ae_gradient(const AEParams& params, const prep::SampleTensor& batch, Mode mode,
                        std::uint64_t seed, double* batch_loss) {
    if (batch.n == 0) fail("EmptyInput", "gradient over an empty batch");
    if (batch.channels != kInputChannels) fail("ShapeMismatch", "batch must have 4 channels");
    const std::size_t m = batch.length;
    if (m < 2) fail("ShapeMismatch", "sample length must be at least 2");
    const auto c1 = static_cast<std::size_t>(params.hyper.c1);
    const auto c2 = static_cast<std::size_t>(params.hyper.c2);
    const std::size_t mp = pooled_length(m);
    const std::size_t mu = 2 * mp;

    AEGradients g;
    zero_like(params.t, g);

    Rng rng(seed);
    Trace t;
    std::vector<double> recon, d_b2, d_b1, d_up, d_pool, d_d2, d_d1, d_x;
    const double inv_count = 1.0 / static_cast<double>(batch.n * kInputChannels * m);
    double loss_acc = 0.0;

    for (std::size_t s = 0; s < batch.n; ++s) {
        const auto x = batch.sample(s);
        forward_sample(params, x, m, mode, &rng, t);
        trim_recon(t, m, recon);

        // d(mean MAE)/d recon, padded back to the untrimmed decoder length
        d_b2.assign(kInputChannels * mu, 0.0);
        for (std::size_t c = 0; c < kInputChannels; ++c) {
            for (std::size_t i = 0; i < m; ++i) {
                const double diff = recon[c * m + i] - x[c * m + i];
                loss_acc += std::abs(diff);
                // subgradient at 0 is 0
                d_b2[c * mu + i] = diff > 0.0 ? inv_count : (diff < 0.0 ? -inv_count : 0.0);
            }
        }

        d_b1.assign(c1 * mu, 0.0);
        conv3_same_backward(t.b1, c1, mu, params.t.dec2_w, kInputChannels, d_b2, d_b1,
                            g.dec2_w, g.dec2_b);
        if (params.hyper.relu)
            for (std::size_t i = 0; i < d_b1.size(); ++i) d_b1[i] *= t.relu3[i];

        d_up.assign(c2 * mu, 0.0);
        conv3_same_backward(t.up, c2, mu, params.t.dec1_w, c1, d_b1, d_up, g.dec1_w, g.dec1_b);

        d_pool.assign(c2 * mp, 0.0);
        for (std::size_t c = 0; c < c2; ++c)
            for (std::size_t j = 0; j < mp; ++j)
                d_pool[c * mp + j] = d_up[c * mu + 2 * j] + d_up[c * mu + 2 * j + 1];

        d_d2.assign(c2 * m, 0.0);
        for (std::size_t c = 0; c < c2; ++c)
            for (std::size_t j = 0; j < mp; ++j)
                d_d2[c * m + t.argmax[c * mp + j]] += d_pool[c * mp + j];

        // dropout 2, then relu 2
        for (std::size_t i = 0; i < d_d2.size(); ++i) d_d2[i] *= t.mask2[i];
        if (params.hyper.relu)
            for (std::size_t i = 0; i < d_d2.size(); ++i) d_d2[i] *= t.relu2[i];

        d_d1.assign(c1 * m, 0.0);
        conv3_same_backward(t.d1, c1, m, params.t.enc2_w, c2, d_d2, d_d1, g.enc2_w, g.enc2_b);

        for (std::size_t i = 0; i < d_d1.size(); ++i) d_d1[i] *= t.mask1[i];
        if (params.hyper.relu)
            for (std::size_t i = 0; i < d_d1.size(); ++i) d_d1[i] *= t.relu1[i];

        d_x.assign(kInputChannels * m, 0.0);
        conv3_same_backward(x, kInputChannels, m, params.t.enc1_w, c1, d_d1, d_x, g.enc1_w,
                            g.enc1_b);
    }

    if (batch_loss) *batch_loss = loss_acc / static_cast<double>(batch.n * kInputChannels * m);
    return g;
}

void adam_step(AEParams& params, const AEGradients& grads, AdamState& state, double lr) {
    state.step += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
        if (p.size() != g.size() || p.size() != m.size())
            fail("ShapeMismatch", "adam buffers disagree");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    };
    update(params.t.enc1_w, grads.enc1_w, state.m.enc1_w, state.v.enc1_w);
    update(params.t.enc1_b, grads.enc1_b, state.m.enc1_b, state.v.enc1_b);
    update(params.t.enc2_w, grads.enc2_w, state.m.enc2_w, state.v.enc2_w);
    update(params.t.enc2_b, grads.enc2_b, state.m.enc2_b, state.v.enc2_b);
    update(params.t.dec1_w, grads.dec1_w, state.m.dec1_w, state.v.dec1_w);
    update(params.t.dec1_b, grads.dec1_b, state.m.dec1_b, state.v.dec1_b);
    update(params.t.dec2_w, grads.dec2_w, state.m.dec2_w, state.v.dec2_w);
    update(params.t.dec2_b, grads.dec2_b, state.m.dec2_b, state.v.dec2_b);
}

namespace {

double eval_loss(const AEParams& params, const prep::SampleTensor& data) {
    double acc = 0.0;
    for (std::size_t i = 0; i < data.n; ++i) {
        const auto x = data.sample(i);
        const auto r = ae_forward(params, x, data.length, Mode::eval);
        acc += ae_loss(r.recon, x);
    }
    return acc / static_cast<double>(data.n);
}

prep::SampleTensor subset(const prep::SampleTensor& data, const std::vector<std::size_t>& idx) {
    prep::SampleTensor out;
    out.n = idx.size();
    out.channels = data.channels;
    out.length = data.length;
    out.data.resize(out.n * out.channels * out.length);
    out.ids.reserve(out.n);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto src = data.sample(idx[i]);
        std::copy(src.begin(), src.end(), out.sample(i).begin());
        out.ids.push_back(idx[i] < data.ids.size() ? data.ids[idx[i]] : std::string());
    }
    return out;
}

}  // namespace

TrainResult train_autoencoder(const prep::SampleTensor& data, const AEHyper& hyper) {
    if (data.n == 0) fail("EmptyInput", "training needs at least one sample");
    if (hyper.batch_size < 1) fail("OutOfRange", "batch size must be positive");
    if (hyper.epochs < 0) fail("OutOfRange", "epochs must be nonnegative");

    TrainResult result;
    result.params = ae_init(hyper);
    AdamState state = adam_init(result.params);

    std::vector<std::size_t> order(data.n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(hyper.seed, 0x5u + static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);
        const auto bs = static_cast<std::size_t>(hyper.batch_size);
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < data.n; start += bs, ++batch_index) {
            const std::size_t stop = std::min(start + bs, data.n);
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(stop));
            const prep::SampleTensor batch = subset(data, idx);
            const std::uint64_t mask_seed =
                derive_seed(derive_seed(hyper.seed, 0x10000u + static_cast<std::uint64_t>(epoch)),
                            batch_index);
            const AEGradients g = ae_gradient(result.params, batch, Mode::train, mask_seed);
            adam_step(result.params, g, state, hyper.learning_rate);
        }
        result.loss_curve.push_back(eval_loss(result.params, data));
    }
    return result;
}

GridSearchResult grid_search_ae(const prep::SampleTensor& data, const std::vector<AEHyper>& grid,
                                double holdout_fraction, std::uint64_t seed, unsigned threads) {
    if (grid.empty()) fail("EmptyGrid", "grid search needs at least one candidate");
    if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0)
        fail("OutOfRange", "holdout fraction must lie in (0,1)");
    if (data.n == 0) fail("EmptyInput", "grid search needs data");

    // Seeded split; with a single sample, train and holdout coincide.
    std::vector<std::size_t> order(data.n);
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(derive_seed(seed, 0xA11u));
    split_rng.shuffle(order);
    std::size_t holdout_n = static_cast<std::size_t>(
        std::lround(holdout_fraction * static_cast<double>(data.n)));
    holdout_n = std::max<std::size_t>(1, std::min(holdout_n, data.n > 1 ? data.n - 1 : 1));

    std::vector<std::size_t> holdout_idx(order.begin(),
                                         order.begin() + static_cast<std::ptrdiff_t>(holdout_n));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(holdout_n),
                                       order.end());
    if (train_idx.empty()) train_idx = holdout_idx;

    const prep::SampleTensor train = subset(data, train_idx);
    const prep::SampleTensor holdout = subset(data, holdout_idx);

    GridSearchResult result;
    result.holdout_mae.assign(grid.size(), 0.0);
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        AEHyper h = grid[i];
        h.seed = seed ^ static_cast<std::uint64_t>(i);
        const TrainResult trained = train_autoencoder(train, h);
        result.holdout_mae[i] = eval_loss(trained.params, holdout);
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double a = result.holdout_mae[i], b = result.holdout_mae[best];
        if (a < b) {
            best = i;
        } else if (a == b) {
            const int ca = grid[i].c1 + grid[i].c2, cb = grid[best].c1 + grid[best].c2;
            if (ca < cb || (ca == cb && grid[i].learning_rate < grid[best].learning_rate)) best = i;
        }
    }
    result.best = grid[best];
    result.best.seed = seed ^ static_cast<std::uint64_t>(best);
    result.best_index = best;
    return result;
}

std::vector<MovementVector> encode(const AEParams& params, const prep::SampleTensor& data) {
    std::vector<MovementVector> out;
    out.reserve(data.n);
    for (std::size_t i = 0; i < data.n; ++i) {
        const auto r = ae_forward(params, data.sample(i), data.length, Mode::eval);
        MovementVector v;
        v.trial_id = i < data.ids.size() ? data.ids[i] : std::string();
        v.values = r.latent;
        for (double x : v.values)
            if (!std::isfinite(x)) fail("NonFinite", "movement vector contains a non-finite value");
        out.push_back(std::move(v));
    }
    return out;
}

namespace {

using nlohmann::ordered_json;

ordered_json hyper_to_json(const AEHyper& h) {
    return ordered_json{{"conv_window", h.conv_window},
                        {"dropout_p", h.dropout_p},
                        {"pool_window", h.pool_window},
                        {"c1", h.c1},
                        {"c2", h.c2},
                        {"learning_rate", h.learning_rate},
                        {"epochs", h.epochs},
                        {"batch_size", h.batch_size},
                        {"relu", h.relu},
                        {"seed", h.seed}};
}

AEHyper hyper_from_json(const nlohmann::json& j) {
    AEHyper h;
    h.conv_window = j.at("conv_window").get<int>();
    h.dropout_p = j.at("dropout_p").get<double>();
    h.pool_window = j.at("pool_window").get<int>();
    h.c1 = j.at("c1").get<int>();
    h.c2 = j.at("c2").get<int>();
    h.learning_rate = j.at("learning_rate").get<double>();
    h.epochs = j.at("epochs").get<int>();
    h.batch_size = j.at("batch_size").get<int>();
    h.relu = j.at("relu").get<bool>();
    h.seed = j.at("seed").get<std::uint64_t>();
    return h;
}

}  // namespace

std::string save_checkpoint(const AEParams& params) {
    ordered_json doc;
    doc["format"] = "trailmark-autoencoder";
    doc["version"] = 1;
    doc["hyper"] = hyper_to_json(params.hyper);
    ordered_json tensors;
    tensors["enc1_w"] = params.t.enc1_w;
    tensors["enc1_b"] = params.t.enc1_b;
    tensors["enc2_w"] = params.t.enc2_w;
    tensors["enc2_b"] = params.t.enc2_b;
    tensors["dec1_w"] = params.t.dec1_w;
    tensors["dec1_b"] = params.t.dec1_b;
    tensors["dec2_w"] = params.t.dec2_w;
    tensors["dec2_b"] = params.t.dec2_b;
    doc["tensors"] = std::move(tensors);
    return doc.dump(1);
}

AEParams load_checkpoint(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail("MalformedDocument", e.what());
    }
    if (doc.value("format", "") != "trailmark-autoencoder")
        fail("SchemaViolation", "not an autoencoder checkpoint");
    AEParams p;
    p.hyper = hyper_from_json(doc.at("hyper"));
    const auto& t = doc.at("tensors");
    p.t.enc1_w = t.at("enc1_w").get<std::vector<double>>();
    p.t.enc1_b = t.at("enc1_b").get<std::vector<double>>();
    p.t.enc2_w = t.at("enc2_w").get<std::vector<double>>();
    p.t.enc2_b = t.at("enc2_b").get<std::vector<double>>();
    p.t.dec1_w = t.at("dec1_w").get<std::vector<double>>();
    p.t.dec1_b = t.at("dec1_b").get<std::vector<double>>();
    p.t.dec2_w = t.at("dec2_w").get<std::vector<double>>();
    p.t.dec2_b = t.at("dec2_b").get<std::vector<double>>();
    const auto c1 = static_cast<std::size_t>(p.hyper.c1);
    const auto c2 = static_cast<std::size_t>(p.hyper.c2);
    if (p.t.enc1_w.size() != c1 * 4 * 3 || p.t.enc2_w.size() != c2 * c1 * 3 ||
        p.t.dec1_w.size() != c1 * c2 * 3 || p.t.dec2_w.size() != 4 * c1 * 3)
        fail("ShapeMismatch", "checkpoint tensor shapes disagree with hyperparameters");
    return p;
}

}  // namespace trailmark::ae
