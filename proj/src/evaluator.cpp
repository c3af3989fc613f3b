#include "ticketlab/evaluator.hpp"

#include <algorithm>
#include <cmath>

namespace ticketlab {

ThreadPool::ThreadPool(int threads) {
    for (int i = 1; i < threads; ++i)
        workers_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard<std::mutex> lock(mu_);
        stop_ = true;
    }
    cv_start_.notify_all();
    for (auto& w : workers_) w.join();
}

void ThreadPool::worker_loop() {
    uint64_t seen = 0;
    for (;;) {
        const std::function<void(int)>* fn;
        {
            std::unique_lock<std::mutex> lock(mu_);
            cv_start_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) return;
            seen = generation_;
            fn = fn_;
        }
        for (;;) {
            const int job = next_job_.fetch_add(1);
            if (job >= njobs_) break;
            (*fn)(job);
        }
        {
            std::lock_guard<std::mutex> lock(mu_);
            if (--pending_workers_ == 0) cv_done_.notify_one();
        }
    }
}

void ThreadPool::run(int njobs, const std::function<void(int)>& fn) {
    if (workers_.empty()) {
        for (int j = 0; j < njobs; ++j) fn(j);
        return;
    }
    {
        std::lock_guard<std::mutex> lock(mu_);
        fn_ = &fn;
        njobs_ = njobs;
        next_job_.store(0);
        pending_workers_ = static_cast<int>(workers_.size());
        ++generation_;
    }
    cv_start_.notify_all();
    for (;;) {
        const int job = next_job_.fetch_add(1);
        if (job >= njobs) break;
        fn(job);
    }
    std::unique_lock<std::mutex> lock(mu_);
    cv_done_.wait(lock, [&] { return pending_workers_ == 0; });
}

namespace {

// 4-accumulator dot products; the explicit order keeps results independent
// of compiler reassociation while letting the four lanes pipeline.
inline void dual_dot(const double* w, const double* x, const double* y, int n, double& dx,
                     double& dy) {
    double x0 = 0, x1 = 0, x2 = 0, x3 = 0;
    double y0 = 0, y1 = 0, y2 = 0, y3 = 0;
    int c = 0;
    for (; c + 4 <= n; c += 4) {
        x0 += w[c] * x[c];
        x1 += w[c + 1] * x[c + 1];
        x2 += w[c + 2] * x[c + 2];
        x3 += w[c + 3] * x[c + 3];
        y0 += w[c] * y[c];
        y1 += w[c + 1] * y[c + 1];
        y2 += w[c + 2] * y[c + 2];
        y3 += w[c + 3] * y[c + 3];
    }
    for (; c < n; ++c) {
        x0 += w[c] * x[c];
        y0 += w[c] * y[c];
    }
    dx = (x0 + x1) + (x2 + x3);
    dy = (y0 + y1) + (y2 + y3);
}

}  // namespace

ResidualEvaluator::ResidualEvaluator(const ArchSpec& arch, SystemSpec system,
                                     std::vector<double> grid, int threads)
    : arch_(arch), system_(std::move(system)), grid_(std::move(grid)) {
    if (arch_.output_dim != system_.dim)
        throw ShapeError("evaluator: network output dim != system dim");
    if (grid_.empty()) throw std::invalid_argument("evaluator: empty grid");
    if (arch_.hidden.empty()) throw ShapeError("evaluator: at least one hidden layer required");

    // Fixed chunking keeps reductions bit-identical for any thread count.
    n_chunks_ = static_cast<int>(std::min<std::size_t>(16, grid_.size()));

    int act = 0, poff = 0;
    int maxcols = 0;
    for (int l = 0; l < arch_.n_layers(); ++l) {
        act_offset_.push_back(act);
        act += arch_.layer_cols(l);
        weight_offset_.push_back(poff);
        poff += arch_.layer_weight_count(l);
        bias_offset_.push_back(poff);
        poff += arch_.layer_cols(l);
        maxcols = std::max(maxcols, arch_.layer_cols(l));
    }

    wm_.resize(arch_.total_weights());
    const std::size_t d = static_cast<std::size_t>(system_.dim);
    chunks_.resize(static_cast<std::size_t>(n_chunks_));
    for (auto& ws : chunks_) {
        ws.grad.assign(arch_.total_params(), 0.0);
        ws.z.resize(static_cast<std::size_t>(act));
        ws.zd.resize(static_cast<std::size_t>(act));
        ws.a.resize(static_cast<std::size_t>(act));
        ws.ad.resize(static_cast<std::size_t>(act));
        ws.cz.resize(static_cast<std::size_t>(act));
        ws.xhat.resize(d);
        ws.xd.resize(d);
        ws.f.resize(d);
        ws.jac.resize(d * d);
        ws.r.resize(d);
        ws.xbar.resize(d);
        ws.xdbar.resize(d);
        ws.abar.resize(static_cast<std::size_t>(maxcols));
        ws.adbar.resize(static_cast<std::size_t>(maxcols));
        ws.abar_next.resize(static_cast<std::size_t>(maxcols));
        ws.adbar_next.resize(static_cast<std::size_t>(maxcols));
    }
    if (threads > 1) pool_ = std::make_unique<ThreadPool>(threads);
}

void ResidualEvaluator::masked_weights(const NetworkParams& params, const Mask& mask) const {
    if (params.arch != arch_) throw ShapeError("evaluator: params arch mismatch");
    if (!mask.conforms(arch_)) throw ShapeError("evaluator: mask does not conform");
    std::size_t off = 0;
    for (int l = 0; l < arch_.n_layers(); ++l) {
        const auto& w = params.weights[static_cast<std::size_t>(l)];
        const auto& m = mask.layers[static_cast<std::size_t>(l)];
        for (std::size_t k = 0; k < w.size(); ++k)
            wm_[off + k] = w[k] * static_cast<double>(m[k]);
        off += w.size();
    }
}

void ResidualEvaluator::forward_point(double t, const NetworkParams& params,
                                      ChunkWs& ws) const {
    double in_val = t, in_tan = 1.0;
    const double* prev_a = &in_val;
    const double* prev_ad = &in_tan;
    const double* wlayer = wm_.data();
    for (int l = 0; l < arch_.n_layers(); ++l) {
        const int rows = arch_.layer_rows(l);
        const int cols = arch_.layer_cols(l);
        const int ao = act_offset_[static_cast<std::size_t>(l)];
        double* z = ws.z.data() + ao;
        double* zd = ws.zd.data() + ao;
        const auto& bias = params.biases[static_cast<std::size_t>(l)];
        for (int c = 0; c < cols; ++c) {
            z[c] = bias[static_cast<std::size_t>(c)];
            zd[c] = 0.0;
        }
        for (int r = 0; r < rows; ++r) {
            const double ar = prev_a[r];
            const double adr = prev_ad[r];
            const double* row = wlayer + static_cast<std::size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) {
                z[c] += row[c] * ar;
                zd[c] += row[c] * adr;
            }
        }
        wlayer += static_cast<std::size_t>(rows) * cols;
        if (l + 1 < arch_.n_layers()) {
            double* a = ws.a.data() + ao;
            double* ad = ws.ad.data() + ao;
            double* cz = ws.cz.data() + ao;
            for (int c = 0; c < cols; ++c) {
                a[c] = std::sin(z[c]);
                cz[c] = std::cos(z[c]);
                ad[c] = cz[c] * zd[c];
            }
            prev_a = a;
            prev_ad = ad;
        }
    }
}

void ResidualEvaluator::forward_point(double t, const NetworkParams& params,
                                      ChunkWs& ws) const {
    double in_val = t, in_tan = 1.0;
    const double* prev_a = &in_val;
    const double* prev_ad = &in_tan;
    const double* wlayer = wm_.data();
    for (int l = 0; l < arch_.n_layers(); ++l) {
        const int rows = arch_.layer_rows(l);
        const int cols = arch_.layer_cols(l);
        const int ao = act_offset_[static_cast<std::size_t>(l)];
        double* z = ws.z.data() + ao;
        double* zd = ws.zd.data() + ao;
        const auto& bias = params.biases[static_cast<std::size_t>(l)];
        for (int c = 0; c < cols; ++c) {
            z[c] = bias[static_cast<std::size_t>(c)];
            zd[c] = 0.0;
        }
        for (int r = 0; r < rows; ++r) {
            const double ar = prev_a[r];
            const double adr = prev_ad[r];
            const double* row = wlayer + static_cast<std::size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) {
                z[c] += row[c] * ar;
                zd[c] += row[c] * adr;
            }
        }
        wlayer += static_cast<std::size_t>(rows) * cols;
        if (l + 1 < arch_.n_layers()) {
            double* a = ws.a.data() + ao;
            double* ad = ws.ad.data() + ao;
            double* cz = ws.cz.data() + ao;
            for (int c = 0; c < cols; ++c) {
                a[c] = std::sin(z[c]);
                cz[c] = std::cos(z[c]);
                ad[c] = cz[c] * zd[c];
            }
            prev_a = a;
            prev_ad = ad;
        }
    }
}

void ResidualEvaluator::eval_point(double t, const NetworkParams& params, ChunkWs& ws,
                                   bool with_grad) const {
    forward_point(t, params, ws);

    const int d = system_.dim;
    const int out_off = act_offset_.back();
    const double* nval = ws.z.data() + out_off;
    const double* ntan = ws.zd.data() + out_off;
    const double g = 1.0 - std::exp(-t);
    const double gd = std::exp(-t);
    for (int i = 0; i < d; ++i) {
        ws.xhat[static_cast<std::size_t>(i)] = system_.initial_state[static_cast<std::size_t>(i)] +
                                               g * nval[i];
        ws.xd[static_cast<std::size_t>(i)] = gd * nval[i] + g * ntan[i];
    }
    system_.rhs(ws.xhat, ws.f);
    double pt_loss = 0.0;
    for (int i = 0; i < d; ++i) {
        ws.r[static_cast<std::size_t>(i)] =
            ws.xd[static_cast<std::size_t>(i)] - ws.f[static_cast<std::size_t>(i)];
        pt_loss += ws.r[static_cast<std::size_t>(i)] * ws.r[static_cast<std::size_t>(i)];
    }
    ws.loss += pt_loss;
    if (!with_grad) return;

    system_.rhs_jacobian(ws.xhat, ws.jac);
    for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int m = 0; m < d; ++m)
            s += ws.r[static_cast<std::size_t>(m)] *
                 ws.jac[static_cast<std::size_t>(m * d + j)];
        ws.xbar[static_cast<std::size_t>(j)] = -2.0 * s;
        ws.xdbar[static_cast<std::size_t>(j)] = 2.0 * ws.r[static_cast<std::size_t>(j)];
    }

    // Ansatz: xhat = ic + g N, xd = gd N + g Nd.
    double* abar = ws.abar.data();
    double* adbar = ws.adbar.data();
    for (int i = 0; i < d; ++i) {
        abar[i] = ws.xbar[static_cast<std::size_t>(i)] * g +
                  ws.xdbar[static_cast<std::size_t>(i)] * gd;
        adbar[i] = ws.xdbar[static_cast<std::size_t>(i)] * g;
    }

    // abar/adbar hold the adjoints of layer l's outputs; zbar/zdbar are
    // formed in place, then pushed down to layer l-1.
    double* abar_next = ws.abar_next.data();
    double* adbar_next = ws.adbar_next.data();
    double in_val = t, in_tan = 1.0;
    for (int l = arch_.n_layers() - 1; l >= 0; --l) {
        const int rows = arch_.layer_rows(l);
        const int cols = arch_.layer_cols(l);
        const int ao = act_offset_[static_cast<std::size_t>(l)];
        const bool hidden = l + 1 < arch_.n_layers();
        // zbar/zdbar overwrite abar/adbar of this layer
        if (hidden) {
            const double* a = ws.a.data() + ao;
            const double* cz = ws.cz.data() + ao;
            const double* zd = ws.zd.data() + ao;
            for (int c = 0; c < cols; ++c) {
                const double zbar = abar[c] * cz[c] - adbar[c] * a[c] * zd[c];
                const double zdbar = adbar[c] * cz[c];
                abar[c] = zbar;
                adbar[c] = zdbar;
            }
        }
        const double* prev_a;
        const double* prev_ad;
        if (l == 0) {
            prev_a = &in_val;
            prev_ad = &in_tan;
        } else {
            prev_a = ws.a.data() + act_offset_[static_cast<std::size_t>(l - 1)];
            prev_ad = ws.ad.data() + act_offset_[static_cast<std::size_t>(l - 1)];
        }
        double* gw = ws.grad.data() + weight_offset_[static_cast<std::size_t>(l)];
        double* gb = ws.grad.data() + bias_offset_[static_cast<std::size_t>(l)];
        std::size_t wl_off = 0;
        for (int ll = 0; ll < l; ++ll)
            wl_off += static_cast<std::size_t>(arch_.layer_weight_count(ll));
        const double* wlayer = wm_.data() + wl_off;
        for (int r = 0; r < rows; ++r) {
            const double ar = prev_a[r];
            const double adr = prev_ad[r];
            double* grow = gw + static_cast<std::size_t>(r) * cols;
            const double* row = wlayer + static_cast<std::size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) grow[c] += abar[c] * ar + adbar[c] * adr;
            if (l > 0) dual_dot(row, abar, adbar, cols, abar_next[r], adbar_next[r]);
        }
        for (int c = 0; c < cols; ++c) gb[c] += abar[c];
        std::swap(abar, abar_next);
        std::swap(adbar, adbar_next);
    }
}

void ResidualEvaluator::eval_chunk(int chunk, const NetworkParams& params,
                                   bool with_grad) const {
    ChunkWs& ws = chunks_[static_cast<std::size_t>(chunk)];
    ws.loss = 0.0;
    if (with_grad) std::fill(ws.grad.begin(), ws.grad.end(), 0.0);
    const auto [lo, hi] = chunk_range(chunk);
    for (int k = lo; k < hi; ++k) eval_point(grid_[static_cast<std::size_t>(k)], params, ws, with_grad);
}

std::pair<int, int> ResidualEvaluator::chunk_range(int chunk) const {
    const long k = static_cast<long>(grid_.size());
    return {static_cast<int>(k * chunk / n_chunks_),
            static_cast<int>(k * (chunk + 1) / n_chunks_)};
}

double ResidualEvaluator::loss(const NetworkParams& params, const Mask& mask) const {
    masked_weights(params, mask);
    auto job = [&](int c) { eval_chunk(c, params, false); };
    if (pool_)
        pool_->run(n_chunks_, job);
    else
        for (int c = 0; c < n_chunks_; ++c) job(c);
    double sum = 0.0;
    for (const auto& ws : chunks_) sum += ws.loss;
    return sum / static_cast<double>(grid_.size());
}

LossGrad ResidualEvaluator::loss_and_grad(const NetworkParams& params, const Mask& mask) const {
    masked_weights(params, mask);
    auto job = [&](int c) { eval_chunk(c, params, true); };
    if (pool_)
        pool_->run(n_chunks_, job);
    else
        for (int c = 0; c < n_chunks_; ++c) job(c);

    LossGrad out;
    out.grad.assign(arch_.total_params(), 0.0);
    double sum = 0.0;
    for (const auto& ws : chunks_) {
        sum += ws.loss;
        for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += ws.grad[i];
    }
    const double scale = 1.0 / static_cast<double>(grid_.size());
    out.loss = sum * scale;
    for (double& gv : out.grad) gv *= scale;
    // d/dw = mask * d/dw_masked: zero the pruned entries exactly.
    for (int l = 0; l < arch_.n_layers(); ++l) {
        const auto& m = mask.layers[static_cast<std::size_t>(l)];
        double* gw = out.grad.data() + weight_offset_[static_cast<std::size_t>(l)];
        for (std::size_t k = 0; k < m.size(); ++k) gw[k] *= static_cast<double>(m[k]);
    }
    return out;
}

std::vector<double> ResidualEvaluator::trajectory(const NetworkParams& params,
                                                  const Mask& mask) const {
    masked_weights(params, mask);
    const std::size_t d = static_cast<std::size_t>(system_.dim);
    traj_.assign(grid_.size() * d, 0.0);
    ChunkWs& ws = chunks_.front();
    for (std::size_t k = 0; k < grid_.size(); ++k) {
        const double t = grid_[k];
        forward_point(t, params, ws);
        const double* nval = ws.z.data() + act_offset_.back();
        const double g = 1.0 - std::exp(-t);
        for (std::size_t i = 0; i < d; ++i)
            traj_[k * d + i] = system_.initial_state[i] + g * nval[i];
    }
    return traj_;
}

}  // namespace ticketlab
