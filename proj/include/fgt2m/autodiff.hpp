#pragma once

#include "fgt2m/errors.hpp"

#include <Eigen/Core>
#include <deque>
#include <functional>
#include <string>
#include <vector>

namespace fgt2m {

using Mat = Eigen::MatrixXd;

// Named parameter array registry. Model modules register their arrays once
// and keep integer handles; the optimizer and checkpoint IO walk the store
// in registration order.
class ParamStore {
public:
    int add(std::string name, Mat init);
    int find(const std::string& name) const; // -1 if absent

    Mat& value(int id) { return entries_[static_cast<std::size_t>(id)].value; }
    const Mat& value(int id) const { return entries_[static_cast<std::size_t>(id)].value; }
    const std::string& name(int id) const { return entries_[static_cast<std::size_t>(id)].name; }
    int count() const { return static_cast<int>(entries_.size()); }
    std::size_t scalar_count() const;

private:
    struct Entry {
        std::string name;
        Mat value;
    };
    std::vector<Entry> entries_;
};

// Per-thread gradient accumulator; shapes mirror a ParamStore.
class GradBuffer {
public:
    explicit GradBuffer(const ParamStore& store);
    void zero();
    void accumulate(const GradBuffer& other); // this += other
    void scale(double s);
    Mat& grad(int id) { return grads_[static_cast<std::size_t>(id)]; }
    const Mat& grad(int id) const { return grads_[static_cast<std::size_t>(id)]; }
    int count() const { return static_cast<int>(grads_.size()); }

private:
    std::vector<Mat> grads_;
};

struct Var {
    int i = -1;
    bool valid() const { return i >= 0; }
};

// Reverse-mode tape over dense double matrices. A forward pass records one
// node per op; backward() walks the tape in reverse creation order (a valid
// topological order since ops only consume existing nodes). Gradients for
// parameter leaves are routed into the sink GradBuffer.
//
// Tapes are single-threaded and cheap to construct; batch parallelism runs
// one tape per work item with a per-thread sink.
class Tape {
public:
    explicit Tape(GradBuffer* sink = nullptr) : sink_(sink) {}

    // --- leaves ---
    Var constant(Mat v);
    Var param(const ParamStore& store, int param_id);

    // --- elementwise / broadcast ---
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b); // Hadamard
    Var scale(Var a, double s);
    Var add_rowvec(Var a, Var row);       // a (R×C) + row (1×C) broadcast over rows
    Var bcast_rowvec(Var row, int rows);  // tile 1×C to rows×C
    Var bcast_colvec(Var col, int cols);  // tile R×1 to R×cols

    // --- activations ---
    Var sigmoid(Var a);
    Var gelu(Var a);
    Var leaky_relu(Var a, double slope);

    // --- matrix products ---
    Var matmul(Var a, Var b);    // A·B
    Var matmul_nt(Var a, Var b); // A·Bᵀ
    Var matmul_tn(Var a, Var b); // Aᵀ·B
    Var transpose(Var a);

    // --- structured ops ---
    // Row-wise softmax of (a + add_mask); mask entries use large negatives
    // to exclude positions. Every row must keep at least one finite entry.
    Var softmax_rows(Var a, const Mat* add_mask = nullptr);
    Var layer_norm(Var a, Var gamma, Var beta, double eps = 1e-5);
    Var normalize_rows(Var a, double eps = 1e-12); // L2 per row
    Var gather_rows(Var a, std::vector<int> ids);
    Var shift_rows(Var a, int delta); // row i of result = row i-delta of a, zero fill
    Var cols(Var a, int j0, int n);
    Var concat_cols(const std::vector<Var>& parts);
    Var concat_rows(const std::vector<Var>& parts);
    // Scatter per-edge scalars (M×1) into an N×N matrix at (dst, src).
    Var scatter_edge_bias(Var edge_scalars, const std::vector<std::pair<int, int>>& edges, int n);

    // --- reductions ---
    Var sum_all(Var a);
    Var mean_all(Var a);
    Var mse(Var a, Var b); // mean of squared differences
    // Mean over rows of (logsumexp(row) − row[diagonal]); logits must be
    // square with matched pairs on the diagonal.
    Var softmax_cross_entropy_diagonal(Var logits);

    const Mat& val(Var v) const { return node(v.i).val; }
    const Mat& grad_of(Var v) const { return node(v.i).grad; }
    GradBuffer* sink() const { return sink_; }
    std::size_t node_count() const { return nodes_.size(); }

    // Seeds d(root)=1 and sweeps the tape. `root` must be 1×1.
    void backward(Var root);

private:
    struct Node {
        Mat val;
        Mat grad;
        bool needs_grad = false;
        std::function<void(Tape&, int)> back; // set only when needs_grad
    };

    Node& node(int i) { return nodes_[static_cast<std::size_t>(i)]; }
    const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    Mat& grad(int i);
    bool needs(Var v) const { return node(v.i).needs_grad; }
    Var push(Mat val, bool needs_grad, std::function<void(Tape&, int)> back);
    void check_shape_eq(Var a, Var b, const char* op) const;

    std::deque<Node> nodes_;
    GradBuffer* sink_;
};

// Parameter initializers.
Mat glorot_uniform(Eigen::Index rows, Eigen::Index cols, class Rng& rng);
Mat normal_init(Eigen::Index rows, Eigen::Index cols, double stddev, class Rng& rng);

} // namespace fgt2m
