#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "ticketlab/net.hpp"
#include "ticketlab/systems.hpp"

namespace ticketlab {

/// Fork-join worker pool for chunked grid evaluation. run() blocks until
/// every job index in [0, njobs) has been executed exactly once.
class ThreadPool {
public:
    explicit ThreadPool(int threads);
    ~ThreadPool();
    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    void run(int njobs, const std::function<void(int)>& fn);
    int threads() const { return static_cast<int>(workers_.size()) + 1; }

private:
    void worker_loop();

    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_start_;
    std::condition_variable cv_done_;
    const std::function<void(int)>* fn_ = nullptr;
    std::atomic<int> next_job_{0};
    int njobs_ = 0;
    int pending_workers_ = 0;
    uint64_t generation_ = 0;
    bool stop_ = false;
};

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;  // canonical order: per layer weights row-major, then biases
};

/// Specialized forward-tangent + reverse pass through the sin-MLP, ansatz,
/// and Hamilton's-equation residuals, operating on flat arrays. Produces the
/// same loss and gradient as building the residual loss on a Tape and calling
/// reverse(), to roundoff, at a small fraction of the cost; the agreement is
/// enforced by tests.
///
/// The grid is split into a fixed number of chunks that are reduced in chunk
/// order, so results are bit-identical regardless of the thread count.
/// A single evaluator must not be called concurrently from multiple threads.
class ResidualEvaluator {
public:
    ResidualEvaluator(const ArchSpec& arch, SystemSpec system, std::vector<double> grid,
                      int threads = 1);

    double loss(const NetworkParams& params, const Mask& mask) const;
    LossGrad loss_and_grad(const NetworkParams& params, const Mask& mask) const;

    /// x_hat on the grid, flat row-major (grid point major), for epsilon.
    std::vector<double> trajectory(const NetworkParams& params, const Mask& mask) const;

    const std::vector<double>& grid() const { return grid_; }
    const SystemSpec& system() const { return system_; }
    std::size_t param_count() const { return arch_.total_params(); }

private:
    struct ChunkWs {
        std::vector<double> grad;
        double loss = 0.0;
        // per-point layer storage, all layers concatenated
        std::vector<double> z, zd, a, ad, cz;
        std::vector<double> xhat, xd, f, jac, r, xbar, xdbar, abar, adbar, abar_next,
            adbar_next;
    };

    void masked_weights(const NetworkParams& params, const Mask& mask) const;
    void eval_chunk(int chunk, const NetworkParams& params, bool with_grad) const;
    void forward_point(double t, const NetworkParams& params, ChunkWs& ws) const;
    void eval_point(double t, const NetworkParams& params, ChunkWs& ws, bool with_grad) const;
    std::pair<int, int> chunk_range(int chunk) const;

    ArchSpec arch_;
    SystemSpec system_;
    std::vector<double> grid_;
    int n_chunks_;
    std::vector<int> act_offset_;     // start of layer l's activations in ws.z/a/...
    std::vector<int> weight_offset_;  // canonical offset of layer l's weights
    std::vector<int> bias_offset_;    // canonical offset of layer l's biases
    mutable std::vector<double> wm_;  // masked weights, all layers flat
    mutable std::vector<ChunkWs> chunks_;
    mutable std::vector<double> traj_;
    std::unique_ptr<ThreadPool> pool_;
};

}  // namespace ticketlab
