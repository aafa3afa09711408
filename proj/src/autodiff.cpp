#include "fgt2m/autodiff.hpp"
#include "fgt2m/rng.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <utility>

namespace fgt2m {

// ---------------------------------------------------------------- ParamStore

int ParamStore::add(std::string name, Mat init) {
    if (find(name) >= 0) throw ContractError("duplicate parameter name '" + name + "'");
    entries_.push_back({std::move(name), std::move(init)});
    return static_cast<int>(entries_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return static_cast<int>(i);
    return -1;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
    return n;
}

// ---------------------------------------------------------------- GradBuffer

GradBuffer::GradBuffer(const ParamStore& store) {
    grads_.reserve(static_cast<std::size_t>(store.count()));
    for (int i = 0; i < store.count(); ++i)
        grads_.emplace_back(Mat::Zero(store.value(i).rows(), store.value(i).cols()));
}

void GradBuffer::zero() {
    for (auto& g : grads_) g.setZero();
}

void GradBuffer::accumulate(const GradBuffer& other) {
    for (std::size_t i = 0; i < grads_.size(); ++i) grads_[i] += other.grads_[i];
}

void GradBuffer::scale(double s) {
    for (auto& g : grads_) g *= s;
}

// ---------------------------------------------------------------------- Tape

Mat& Tape::grad(int i) {
    Node& n = node(i);
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.val.rows(), n.val.cols());
    return n.grad;
}

Var Tape::push(Mat val, bool needs_grad, std::function<void(Tape&, int)> back) {
    Node n;
    n.val = std::move(val);
    n.needs_grad = needs_grad;
    if (needs_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::check_shape_eq(Var a, Var b, const char* op) const {
    if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
        throw ContractError(std::string(op) + ": shape mismatch (" + std::to_string(val(a).rows()) + "x" +
                            std::to_string(val(a).cols()) + " vs " + std::to_string(val(b).rows()) + "x" +
                            std::to_string(val(b).cols()) + ")");
}

Var Tape::constant(Mat v) { return push(std::move(v), false, nullptr); }

Var Tape::param(const ParamStore& store, int param_id) {
    const bool track = sink_ != nullptr;
    return push(store.value(param_id), track, [param_id](Tape& t, int self) {
        t.sink_->grad(param_id) += t.grad(self);
    });
}

Var Tape::add(Var a, Var b) {
    check_shape_eq(a, b, "add");
    return push(val(a) + val(b), needs(a) || needs(b), [a, b](Tape& t, int self) {
        const Mat& g = t.grad(self);
        if (t.needs(a)) t.grad(a.i) += g;
        if (t.needs(b)) t.grad(b.i) += g;
    });
}

Var Tape::sub(Var a, Var b) {
    check_shape_eq(a, b, "sub");
    return push(val(a) - val(b), needs(a) || needs(b), [a, b](Tape& t, int self) {
        const Mat& g = t.grad(self);
        if (t.needs(a)) t.grad(a.i) += g;
        if (t.needs(b)) t.grad(b.i) -= g;
    });
}

Var Tape::mul(Var a, Var b) {
    check_shape_eq(a, b, "mul");
    return push(val(a).cwiseProduct(val(b)), needs(a) || needs(b), [a, b](Tape& t, int self) {
        const Mat& g = t.grad(self);
        if (t.needs(a)) t.grad(a.i) += g.cwiseProduct(t.val(b));
        if (t.needs(b)) t.grad(b.i) += g.cwiseProduct(t.val(a));
    });
}

Var Tape::scale(Var a, double s) {
    return push(val(a) * s, needs(a), [a, s](Tape& t, int self) {
        t.grad(a.i) += s * t.grad(self);
    });
}

Var Tape::add_rowvec(Var a, Var row) {
    if (val(row).rows() != 1 || val(row).cols() != val(a).cols())
        throw ContractError("add_rowvec: row must be 1x" + std::to_string(val(a).cols()));
    Mat out = val(a);
    out.rowwise() += val(row).row(0);
    return push(std::move(out), needs(a) || needs(row), [a, row](Tape& t, int self) {
        const Mat& g = t.grad(self);
        if (t.needs(a)) t.grad(a.i) += g;
        if (t.needs(row)) t.grad(row.i) += g.colwise().sum();
    });
}

Var Tape::bcast_rowvec(Var row, int rows) {
    if (val(row).rows() != 1) throw ContractError("bcast_rowvec: input must have one row");
    return push(val(row).replicate(rows, 1), needs(row), [row](Tape& t, int self) {
        t.grad(row.i) += t.grad(self).colwise().sum();
    });
}

Var Tape::bcast_colvec(Var col, int cols) {
    if (val(col).cols() != 1) throw ContractError("bcast_colvec: input must have one column");
    return push(val(col).replicate(1, cols), needs(col), [col](Tape& t, int self) {
        t.grad(col.i) += t.grad(self).rowwise().sum();
    });
}

Var Tape::sigmoid(Var a) {
    Mat out = val(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    return push(std::move(out), needs(a), [a](Tape& t, int self) {
        const Mat& y = t.node(self).val;
        t.grad(a.i).array() += t.grad(self).array() * y.array() * (1.0 - y.array());
    });
}

Var Tape::gelu(Var a) {
    // Exact form x·Φ(x); backward is Φ(x) + x·φ(x).
    Mat out = val(a).unaryExpr(
        [](double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2_v<double>)); });
    return push(std::move(out), needs(a), [a](Tape& t, int self) {
        Mat d = t.val(a).unaryExpr([](double v) {
            const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2_v<double>));
            const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi_v<double>);
            return cdf + v * pdf;
        });
        t.grad(a.i).array() += t.grad(self).array() * d.array();
    });
}

Var Tape::leaky_relu(Var a, double slope) {
    Mat out = val(a).unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
    return push(std::move(out), needs(a), [a, slope](Tape& t, int self) {
        Mat d = t.val(a).unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
        t.grad(a.i).array() += t.grad(self).array() * d.array();
    });
}

Var Tape::matmul(Var a, Var b) {
    if (val(a).cols() != val(b).rows()) throw ContractError("matmul: inner dimensions differ");
    return push(val(a) * val(b), needs(a) || needs(b), [a, b](Tape& t, int self) {
        const Mat& g = t.grad(self);
        if (t.needs(a)) t.grad(a.i).noalias() += g * t.val(b).transpose();
        if (t.needs(b)) t.grad(b.i).noalias() += t.val(a).transpose() * g;
    });
}

Var Tape::matmul_nt(Var a, Var b) {
    if (val(a).cols() != val(b).cols()) throw ContractError("matmul_nt: inner dimensions differ");
    return push(val(a) * val(b).transpose(), needs(a) || needs(b), [a, b](Tape& t, int self) {
        const Mat& g = t.grad(self);
        if (t.needs(a)) t.grad(a.i).noalias() += g * t.val(b);
        if (t.needs(b)) t.grad(b.i).noalias() += g.transpose() * t.val(a);
    });
}

Var Tape::matmul_tn(Var a, Var b) {
    if (val(a).rows() != val(b).rows()) throw ContractError("matmul_tn: inner dimensions differ");
    return push(val(a).transpose() * val(b), needs(a) || needs(b), [a, b](Tape& t, int self) {
        const Mat& g = t.grad(self);
        if (t.needs(a)) t.grad(a.i).noalias() += t.val(b) * g.transpose();
        if (t.needs(b)) t.grad(b.i).noalias() += t.val(a) * g;
    });
}

Var Tape::transpose(Var a) {
    return push(val(a).transpose(), needs(a), [a](Tape& t, int self) {
        t.grad(a.i) += t.grad(self).transpose();
    });
}

Var Tape::softmax_rows(Var a, const Mat* add_mask) {
    Mat z = val(a);
    if (add_mask) {
        if (add_mask->rows() != z.rows() || add_mask->cols() != z.cols())
            throw ContractError("softmax_rows: mask shape mismatch");
        z += *add_mask;
    }
    Mat out(z.rows(), z.cols());
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double m = z.row(r).maxCoeff();
        if (!std::isfinite(m))
            throw NumericError("softmax_rows: row " + std::to_string(r) + " has no finite entry");
        Eigen::RowVectorXd e = (z.row(r).array() - m).exp().matrix();
        out.row(r) = e / e.sum();
    }
    return push(std::move(out), needs(a), [a](Tape& t, int self) {
        const Mat& y = t.node(self).val;
        const Mat& g = t.grad(self);
        // dX row r = (g_r − (g_r·y_r)) ⊙ y_r
        Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
        t.grad(a.i) += (g - dot.replicate(1, y.cols())).cwiseProduct(y);
    });
}

Var Tape::layer_norm(Var a, Var gamma, Var beta, double eps) {
    const Mat& x = val(a);
    if (val(gamma).rows() != 1 || val(gamma).cols() != x.cols() || val(beta).rows() != 1 ||
        val(beta).cols() != x.cols())
        throw ContractError("layer_norm: gamma/beta must be 1x" + std::to_string(x.cols()));
    const Eigen::Index c = x.cols();
    Eigen::VectorXd mu = x.rowwise().mean();
    Mat centered = x - mu.replicate(1, c);
    Eigen::VectorXd var = centered.cwiseProduct(centered).rowwise().mean();
    Eigen::VectorXd inv_std = (var.array() + eps).rsqrt().matrix();
    Mat xhat = centered.cwiseProduct(inv_std.replicate(1, c));
    Mat out = xhat.cwiseProduct(val(gamma).replicate(x.rows(), 1)) + val(beta).replicate(x.rows(), 1);

    struct Ctx {
        Mat xhat;
        Eigen::VectorXd inv_std;
    };
    auto ctx = std::make_shared<Ctx>(Ctx{std::move(xhat), std::move(inv_std)});
    return push(std::move(out), needs(a) || needs(gamma) || needs(beta),
                [a, gamma, beta, ctx](Tape& t, int self) {
                    const Mat& g = t.grad(self);
                    const Eigen::Index cc = g.cols();
                    if (t.needs(beta)) t.grad(beta.i) += g.colwise().sum();
                    if (t.needs(gamma)) t.grad(gamma.i) += g.cwiseProduct(ctx->xhat).colwise().sum();
                    if (t.needs(a)) {
                        Mat dxhat = g.cwiseProduct(t.val(gamma).replicate(g.rows(), 1));
                        Eigen::VectorXd m1 = dxhat.rowwise().mean();
                        Eigen::VectorXd m2 = dxhat.cwiseProduct(ctx->xhat).rowwise().mean();
                        Mat dx = (dxhat - m1.replicate(1, cc) - ctx->xhat.cwiseProduct(m2.replicate(1, cc)))
                                     .cwiseProduct(ctx->inv_std.replicate(1, cc));
                        t.grad(a.i) += dx;
                    }
                });
}

Var Tape::normalize_rows(Var a, double eps) {
    const Mat& x = val(a);
    Eigen::VectorXd norms = (x.rowwise().squaredNorm().array() + eps).sqrt().matrix();
    Mat out = x.cwiseQuotient(norms.replicate(1, x.cols()));
    return push(std::move(out), needs(a), [a, norms](Tape& t, int self) {
        const Mat& y = t.node(self).val;
        const Mat& g = t.grad(self);
        Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
        t.grad(a.i) += (g - y.cwiseProduct(dot.replicate(1, y.cols()))).cwiseQuotient(norms.replicate(1, y.cols()));
    });
}

Var Tape::gather_rows(Var a, std::vector<int> ids) {
    const Mat& x = val(a);
    for (int id : ids)
        if (id < 0 || id >= x.rows()) throw IndexError("gather_rows: row id " + std::to_string(id) + " out of range");
    Mat out(static_cast<Eigen::Index>(ids.size()), x.cols());
    for (std::size_t k = 0; k < ids.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = x.row(ids[k]);
    return push(std::move(out), needs(a), [a, ids = std::move(ids)](Tape& t, int self) {
        const Mat& g = t.grad(self);
        Mat& da = t.grad(a.i);
        for (std::size_t k = 0; k < ids.size(); ++k) da.row(ids[k]) += g.row(static_cast<Eigen::Index>(k));
    });
}

Var Tape::shift_rows(Var a, int delta) {
    const Mat& x = val(a);
    Mat out = Mat::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Eigen::Index src = i - delta;
        if (src >= 0 && src < x.rows()) out.row(i) = x.row(src);
    }
    return push(std::move(out), needs(a), [a, delta](Tape& t, int self) {
        const Mat& g = t.grad(self);
        Mat& da = t.grad(a.i);
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            const Eigen::Index src = i - delta;
            if (src >= 0 && src < g.rows()) da.row(src) += g.row(i);
        }
    });
}

Var Tape::cols(Var a, int j0, int n) {
    const Mat& x = val(a);
    if (j0 < 0 || n < 0 || j0 + n > x.cols()) throw IndexError("cols: slice out of range");
    return push(x.middleCols(j0, n), needs(a), [a, j0, n](Tape& t, int self) {
        t.grad(a.i).middleCols(j0, n) += t.grad(self);
    });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: no parts");
    Eigen::Index rows = val(parts[0]).rows(), total = 0;
    bool any = false;
    for (Var p : parts) {
        if (val(p).rows() != rows) throw ContractError("concat_cols: row count mismatch");
        total += val(p).cols();
        any = any || needs(p);
    }
    Mat out(rows, total);
    Eigen::Index at = 0;
    for (Var p : parts) {
        out.middleCols(at, val(p).cols()) = val(p);
        at += val(p).cols();
    }
    return push(std::move(out), any, [parts](Tape& t, int self) {
        const Mat& g = t.grad(self);
        Eigen::Index at = 0;
        for (Var p : parts) {
            const Eigen::Index w = t.val(p).cols();
            if (t.needs(p)) t.grad(p.i) += g.middleCols(at, w);
            at += w;
        }
    });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ContractError("concat_rows: no parts");
    Eigen::Index cols_n = val(parts[0]).cols(), total = 0;
    bool any = false;
    for (Var p : parts) {
        if (val(p).cols() != cols_n) throw ContractError("concat_rows: column count mismatch");
        total += val(p).rows();
        any = any || needs(p);
    }
    Mat out(total, cols_n);
    Eigen::Index at = 0;
    for (Var p : parts) {
        out.middleRows(at, val(p).rows()) = val(p);
        at += val(p).rows();
    }
    return push(std::move(out), any, [parts](Tape& t, int self) {
        const Mat& g = t.grad(self);
        Eigen::Index at = 0;
        for (Var p : parts) {
            const Eigen::Index h = t.val(p).rows();
            if (t.needs(p)) t.grad(p.i) += g.middleRows(at, h);
            at += h;
        }
    });
}

Var Tape::scatter_edge_bias(Var edge_scalars, const std::vector<std::pair<int, int>>& edges, int n) {
    const Mat& s = val(edge_scalars);
    if (s.cols() != 1 || s.rows() != static_cast<Eigen::Index>(edges.size()))
        throw ContractError("scatter_edge_bias: expected one scalar per edge");
    Mat out = Mat::Zero(n, n);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto [dst, src] = edges[k];
        if (dst < 0 || dst >= n || src < 0 || src >= n)
            throw IndexError("scatter_edge_bias: edge endpoint out of range");
        out(dst, src) += s(static_cast<Eigen::Index>(k), 0);
    }
    return push(std::move(out), needs(edge_scalars), [edge_scalars, edges](Tape& t, int self) {
        const Mat& g = t.grad(self);
        Mat& ds = t.grad(edge_scalars.i);
        for (std::size_t k = 0; k < edges.size(); ++k)
            ds(static_cast<Eigen::Index>(k), 0) += g(edges[k].first, edges[k].second);
    });
}

Var Tape::sum_all(Var a) {
    Mat out(1, 1);
    out(0, 0) = val(a).sum();
    return push(std::move(out), needs(a), [a](Tape& t, int self) {
        t.grad(a.i).array() += t.grad(self)(0, 0);
    });
}

Var Tape::mean_all(Var a) {
    Mat out(1, 1);
    out(0, 0) = val(a).mean();
    const double inv_n = 1.0 / static_cast<double>(val(a).size());
    return push(std::move(out), needs(a), [a, inv_n](Tape& t, int self) {
        t.grad(a.i).array() += t.grad(self)(0, 0) * inv_n;
    });
}

Var Tape::mse(Var a, Var b) {
    check_shape_eq(a, b, "mse");
    auto diff = std::make_shared<Mat>(val(a) - val(b));
    Mat out(1, 1);
    out(0, 0) = diff->cwiseProduct(*diff).mean();
    const double inv_n = 1.0 / static_cast<double>(diff->size());
    return push(std::move(out), needs(a) || needs(b), [a, b, diff, inv_n](Tape& t, int self) {
        const double g = t.grad(self)(0, 0);
        if (t.needs(a)) t.grad(a.i) += (2.0 * g * inv_n) * (*diff);
        if (t.needs(b)) t.grad(b.i) -= (2.0 * g * inv_n) * (*diff);
    });
}

Var Tape::softmax_cross_entropy_diagonal(Var logits) {
    const Mat& z = val(logits);
    if (z.rows() != z.cols()) throw ContractError("softmax_cross_entropy_diagonal: logits must be square");
    const Eigen::Index n = z.rows();
    Mat soft(n, n);
    double loss = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
        const double m = z.row(r).maxCoeff();
        Eigen::RowVectorXd e = (z.row(r).array() - m).exp().matrix();
        const double denom = e.sum();
        soft.row(r) = e / denom;
        loss += std::log(denom) + m - z(r, r);
    }
    Mat out(1, 1);
    out(0, 0) = loss / static_cast<double>(n);
    auto soft_ptr = std::make_shared<Mat>(std::move(soft));
    return push(std::move(out), needs(logits), [logits, soft_ptr](Tape& t, int self) {
        const double g = t.grad(self)(0, 0) / static_cast<double>(soft_ptr->rows());
        Mat d = *soft_ptr;
        d.diagonal().array() -= 1.0;
        t.grad(logits.i) += g * d;
    });
}

void Tape::backward(Var root) {
    if (!root.valid()) throw ContractError("backward: invalid root");
    Node& r = node(root.i);
    if (r.val.rows() != 1 || r.val.cols() != 1) throw ContractError("backward: root must be a 1x1 scalar");
    if (!r.needs_grad) return;
    grad(root.i)(0, 0) += 1.0;
    for (int i = root.i; i >= 0; --i) {
        Node& n = node(i);
        if (n.needs_grad && n.back && n.grad.size() != 0) n.back(*this, i);
    }
}

// ------------------------------------------------------------- initializers

Mat glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Mat m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
    return m;
}

Mat normal_init(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
    Mat m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = stddev * rng.normal();
    return m;
}

} // namespace fgt2m
