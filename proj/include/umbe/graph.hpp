// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

// Define-by-run reverse-mode differentiation over dense double tensors.
//
// A Graph is built fresh for every forward pass. Each operation appends one
// node holding its output value and a closure that scatters the node's adjoint
// into its inputs. Trainable tensors enter the graph through `Graph::leaf`;
// after `backward` their adjoints are accumulated into `Tensor::grad`.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "umbe/errors.hpp"
#include "umbe/tensor.hpp"

namespace umbe {

inline constexpr double kMaskedLogit = -std::numeric_limits<double>::infinity();
inline constexpr double kNormEpsilon = 1e-12;

class Graph;

/// Handle to a node inside a Graph. Cheap to copy; only valid while the
/// owning Graph lives.
struct Var {
    Graph* graph = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape; }
    double item() const { return value().item(); }
};

class Graph {
public:
    using BackwardFn = std::function<void(Graph&, std::size_t self)>;

    struct Node {
        const char* op = "";
        Tensor value;
        std::vector<double> adjoint;
        BackwardFn backward;
        Tensor* source = nullptr;
        bool needs_grad = false;
    };

    Graph() { nodes_.reserve(256); }
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    /// Enters a tensor. When `t.requires_grad`, backward accumulates into it.
    Var leaf(Tensor& t) {
        Node n;
        n.op = "leaf";
        n.value.shape = t.shape;
        n.value.data = t.data;
        n.needs_grad = t.requires_grad;
        n.source = t.requires_grad ? &t : nullptr;
        return push(std::move(n));
    }

    Var constant(Tensor t) {
        t.requires_grad = false;
        t.grad.clear();
        Node n;
        n.op = "const";
        n.value = std::move(t);
        return push(std::move(n));
    }

    Var apply(const char* op, Tensor out, std::initializer_list<Var> inputs, BackwardFn fn) {
        Node n;
        n.op = op;
        n.value = std::move(out);
        for (const Var& v : inputs) n.needs_grad = n.needs_grad || needs_grad(v.id);
        if (n.needs_grad) n.backward = std::move(fn);
        return push(std::move(n));
    }

    Var apply(const char* op, Tensor out, const std::vector<Var>& inputs, BackwardFn fn) {
        Node n;
        n.op = op;
        n.value = std::move(out);
        for (const Var& v : inputs) n.needs_grad = n.needs_grad || needs_grad(v.id);
        if (n.needs_grad) n.backward = std::move(fn);
        return push(std::move(n));
    }

    /// Reverse sweep from a scalar. Node adjoints are reset first, so calling
    /// this twice adds the gradient to the sources twice.
    void backward(Var loss) {
        check_owner(loss);
        if (value(loss.id).size() != 1)
            throw RankError("backward requires a scalar loss, got shape " +
                            shape_str(value(loss.id).shape));
        for (auto& n : nodes_) n.adjoint.clear();
        if (!nodes_[loss.id].needs_grad) return;
        nodes_[loss.id].adjoint.assign(1, 1.0);
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.needs_grad || n.adjoint.empty()) continue;
            if (n.backward) n.backward(*this, i);
            if (n.source) {
                auto& g = n.source->ensure_grad();
                for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.adjoint[k];
            }
        }
    }

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    const std::vector<double>& adjoint(std::size_t id) const { return nodes_[id].adjoint; }
    std::vector<double>& grad_of(std::size_t id) {
        auto& a = nodes_[id].adjoint;
        if (a.empty()) a.assign(nodes_[id].value.size(), 0.0);
        return a;
    }
    std::size_t size() const { return nodes_.size(); }
    const char* op_name(std::size_t id) const { return nodes_[id].op; }

    void check_owner(Var v) const {
        if (v.graph != this) throw ContractError("variable belongs to a different graph");
    }

private:
    Var push(Node n) {
        nodes_.push_back(std::move(n));
        return Var{this, nodes_.size() - 1};
    }

    std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return graph->value(id); }

namespace detail {

inline Graph& same_graph(Var a, Var b) {
    if (a.graph != b.graph || a.graph == nullptr) throw ContractError("operands belong to different graphs");
    return *a.graph;
}

inline void require_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2) throw DimensionError(std::string(op) + " expects a matrix, got " + shape_str(t.shape));
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape != b.shape)
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                             shape_str(b.shape));
}

inline double stable_sigmoid(double x) {
    double y = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    // keep the open interval (0, 1) even where the exact value rounds to an endpoint
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
    return std::clamp(y, lo, hi);
}

}  // namespace detail

/// C = A·B for A[m×k], B[k×n].
inline Var matmul(Var a, Var b) {
    Graph& g = detail::same_graph(a, b);
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    detail::require_rank2(A, "matmul");
    detail::require_rank2(B, "matmul");
    const std::size_t m = A.shape[0], k = A.shape[1], n = B.shape[1];
    if (B.shape[0] != k)
        throw DimensionError("matmul: inner dimensions disagree for " + shape_str(A.shape) + " and " +
                             shape_str(B.shape));
    Tensor C({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        double* c = C.data.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = A.data[i * k + p];
            // a zero coefficient contributes nothing, whatever the row of B holds
            if (aip == 0.0) continue;
            const double* brow = B.data.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) c[j] += aip * brow[j];
        }
    }
    return g.apply("matmul", std::move(C), {a, b}, [a = a.id, b = b.id, m, k, n](Graph& g, std::size_t self) {
        const auto& dC = g.adjoint(self);
        const auto& Av = g.value(a).data;
        const auto& Bv = g.value(b).data;
        if (g.needs_grad(a)) {
            auto& dA = g.grad_of(a);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += dC[i * n + j] * Bv[p * n + j];
                    dA[i * k + p] += s;
                }
        }
        if (g.needs_grad(b)) {
            auto& dB = g.grad_of(b);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = Av[i * k + p];
                    if (aip == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j) dB[p * n + j] += aip * dC[i * n + j];
                }
        }
    });
}

inline Var transpose(Var a) {
    const Tensor& A = a.value();
    detail::require_rank2(A, "transpose");
    const std::size_t m = A.shape[0], n = A.shape[1];
    Tensor T({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) T.data[j * m + i] = A.data[i * n + j];
    return a.graph->apply("transpose", std::move(T), {a}, [a = a.id, m, n](Graph& g, std::size_t self) {
        const auto& d = g.adjoint(self);
        auto& da = g.grad_of(a);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) da[i * n + j] += d[j * m + i];
    });
}

/// y = x·Wᵀ + b for x[m×in], W[out×in], b of length out (optional).
inline Var linear(Var x, Var w, std::optional<Var> b = std::nullopt) {
    Graph& g = detail::same_graph(x, w);
    if (b) detail::same_graph(x, *b);
    const Tensor& X = x.value();
    const Tensor& W = w.value();
    detail::require_rank2(W, "linear");
    const std::size_t m = X.rows(), in = X.cols(), out = W.shape[0];
    if (W.shape[1] != in)
        throw DimensionError("linear: input " + shape_str(X.shape) + " incompatible with weight " +
                             shape_str(W.shape));
    if (b && b->value().size() != out)
        throw DimensionError("linear: bias " + shape_str(b->value().shape) + " incompatible with weight " +
                             shape_str(W.shape));
    // Wᵀ copy keeps the inner loop contiguous over outputs
    std::vector<double> wt(in * out);
    for (std::size_t o = 0; o < out; ++o)
        for (std::size_t p = 0; p < in; ++p) wt[p * out + o] = W.data[o * in + p];
    Tensor Y({m, out});
    for (std::size_t i = 0; i < m; ++i) {
        const double* xr = X.data.data() + i * in;
        double* y = Y.data.data() + i * out;
        if (b) std::copy_n(b->value().data.begin(), out, y);
        for (std::size_t p = 0; p < in; ++p) {
            const double xp = xr[p];
            if (xp == 0.0) continue;
            const double* w = wt.data() + p * out;
            for (std::size_t o = 0; o < out; ++o) y[o] += xp * w[o];
        }
    }
    std::vector<Var> inputs{x, w};
    if (b) inputs.push_back(*b);
    const std::size_t bid = b ? b->id : 0;
    const bool has_b = b.has_value();
    return g.apply("linear", std::move(Y), inputs,
                   [x = x.id, w = w.id, bid, has_b, m, in, out](Graph& g, std::size_t self) {
                       const auto& dY = g.adjoint(self);
                       const auto& Xv = g.value(x).data;
                       const auto& Wv = g.value(w).data;
                       if (g.needs_grad(x)) {
                           auto& dX = g.grad_of(x);
                           for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t o = 0; o < out; ++o) {
                                   const double d = dY[i * out + o];
                                   if (d == 0.0) continue;
                                   const double* wr = Wv.data() + o * in;
                                   double* dx = dX.data() + i * in;
                                   for (std::size_t p = 0; p < in; ++p) dx[p] += d * wr[p];
                               }
                       }
                       if (g.needs_grad(w)) {
                           auto& dW = g.grad_of(w);
                           for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t o = 0; o < out; ++o) {
                                   const double d = dY[i * out + o];
                                   if (d == 0.0) continue;
                                   const double* xr = Xv.data() + i * in;
                                   double* dw = dW.data() + o * in;
                                   for (std::size_t p = 0; p < in; ++p) dw[p] += d * xr[p];
                               }
                       }
                       if (has_b && g.needs_grad(bid)) {
                           auto& db = g.grad_of(bid);
                           for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t o = 0; o < out; ++o) db[o] += dY[i * out + o];
                       }
                   });
}

inline Var add(Var a, Var b) {
    Graph& g = detail::same_graph(a, b);
    detail::require_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    const auto& bv = b.value().data;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += bv[i];
    return g.apply("add", std::move(out), {a, b}, [a = a.id, b = b.id](Graph& g, std::size_t self) {
        const auto& d = g.adjoint(self);
        for (std::size_t id : {a, b}) {
            if (!g.needs_grad(id)) continue;
            auto& dx = g.grad_of(id);
            for (std::size_t i = 0; i < d.size(); ++i) dx[i] += d[i];
        }
    });
}

inline Var mul(Var a, Var b) {
    Graph& g = detail::same_graph(a, b);
    detail::require_same_shape(a.value(), b.value(), "mul");
    Tensor out = a.value();
    const auto& bv = b.value().data;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= bv[i];
    return g.apply("mul", std::move(out), {a, b}, [a = a.id, b = b.id](Graph& g, std::size_t self) {
        const auto& d = g.adjoint(self);
        const auto& av = g.value(a).data;
        const auto& bv = g.value(b).data;
        if (g.needs_grad(a)) {
            auto& da = g.grad_of(a);
            for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * bv[i];
        }
        if (g.needs_grad(b)) {
            auto& db = g.grad_of(b);
            for (std::size_t i = 0; i < d.size(); ++i) db[i] += d[i] * av[i];
        }
    });
}

inline Var scale(Var a, double c) {
    Tensor out = a.value();
    for (double& v : out.data) v *= c;
    return a.graph->apply("scale", std::move(out), {a}, [a = a.id, c](Graph& g, std::size_t self) {
        const auto& d = g.adjoint(self);
        auto& da = g.grad_of(a);
        for (std::size_t i = 0; i < d.size(); ++i) da[i] += c * d[i];
    });
}

inline Var neg(Var a) { return scale(a, -1.0); }

inline Var add_scalar(Var a, double c) {
    Tensor out = a.value();
    for (double& v : out.data) v += c;
    return a.graph->apply("add_scalar", std::move(out), {a}, [a = a.id](Graph& g, std::size_t self) {
        const auto& d = g.adjoint(self);
        auto& da = g.grad_of(a);
        for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i];
    });
}

inline Var relu(Var a) {
    Tensor out = a.value();
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return a.graph->apply("relu", std::move(out), {a}, [a = a.id](Graph& g, std::size_t self) {
        const auto& d = g.adjoint(self);
        const auto& x = g.value(a).data;
        auto& da = g.grad_of(a);
        for (std::size_t i = 0; i < d.size(); ++i)
            if (x[i] > 0.0) da[i] += d[i];
    });
}

inline Var sigmoid(Var a) {
    Tensor out = a.value();
    for (double& v : out.data) v = detail::stable_sigmoid(v);
    return a.graph->apply("sigmoid", std::move(out), {a}, [a = a.id](Graph& g, std::size_t self) {
        const auto& d = g.adjoint(self);
        const auto& y = g.value(self).data;
        auto& da = g.grad_of(a);
        for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * y[i] * (1.0 - y[i]);
    });
}

/// Σ|x|; the subgradient at zero is taken as zero.
inline Var abs_sum(Var a) {
    double s = 0.0;
    for (double v : a.value().data) s += std::abs(v);
    return a.graph->apply("abs_sum", Tensor::scalar(s), {a}, [a = a.id](Graph& g, std::size_t self) {
        const double d = g.adjoint(self)[0];
        const auto& x = g.value(a).data;
        auto& da = g.grad_of(a);
        for (std::size_t i = 0; i < x.size(); ++i) da[i] += d * static_cast<double>((x[i] > 0.0) - (x[i] < 0.0));
    });
}

inline Var sum(Var a) {
    double s = 0.0;
    for (double v : a.value().data) s += v;
    return a.graph->apply("sum", Tensor::scalar(s), {a}, [a = a.id](Graph& g, std::size_t self) {
        const double d = g.adjoint(self)[0];
        auto& da = g.grad_of(a);
        for (double& v : da) v += d;
    });
}

/// Column means of an m×n matrix, as a 1×n row.
inline Var mean_rows(Var a) {
    const Tensor& A = a.value();
    const std::size_t m = A.rows(), n = A.cols();
    if (m == 0) throw DimensionError("mean_rows of an empty matrix");
    Tensor out({1, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.data[j] += A.data[i * n + j];
    const double inv = 1.0 / static_cast<double>(m);
    for (double& v : out.data) v *= inv;
    return a.graph->apply("mean_rows", std::move(out), {a}, [a = a.id, m, n, inv](Graph& g, std::size_t self) {
        const auto& d = g.adjoint(self);
        auto& da = g.grad_of(a);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) da[i * n + j] += d[j] * inv;
    });
}

/// Row-wise concatenation; every part must share the column count.
inline Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows of nothing");
    Graph& g = *parts.front().graph;
    const std::size_t n = parts.front().value().cols();
    std::size_t total = 0;
    for (const Var& p : parts) {
        g.check_owner(p);
        if (p.value().cols() != n)
            throw DimensionError("concat_rows: width mismatch " + shape_str(parts.front().shape()) + " vs " +
                                 shape_str(p.shape()));
        total += p.value().rows();
    }
    Tensor out({total, n});
    std::vector<std::size_t> ids, offsets;
    std::size_t off = 0;
    for (const Var& p : parts) {
        const auto& src = p.value().data;
        std::copy(src.begin(), src.end(), out.data.begin() + static_cast<std::ptrdiff_t>(off));
        ids.push_back(p.id);
        offsets.push_back(off);
        off += src.size();
    }
    return g.apply("concat_rows", std::move(out), parts,
                   [ids = std::move(ids), offsets = std::move(offsets)](Graph& g, std::size_t self) {
                       const auto& d = g.adjoint(self);
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                           if (!g.needs_grad(ids[k])) continue;
                           auto& dp = g.grad_of(ids[k]);
                           for (std::size_t i = 0; i < dp.size(); ++i) dp[i] += d[offsets[k] + i];
                       }
                   });
}

inline Var select_rows(Var a, std::vector<std::size_t> rows) {
    const Tensor& A = a.value();
    const std::size_t n = A.cols();
    Tensor out({rows.size(), n});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= A.rows()) throw DimensionError("select_rows: row index out of range");
        std::copy_n(A.data.begin() + static_cast<std::ptrdiff_t>(rows[r] * n), n,
                    out.data.begin() + static_cast<std::ptrdiff_t>(r * n));
    }
    return a.graph->apply("select_rows", std::move(out), {a},
                          [a = a.id, rows = std::move(rows), n](Graph& g, std::size_t self) {
                              const auto& d = g.adjoint(self);
                              auto& da = g.grad_of(a);
                              for (std::size_t r = 0; r < rows.size(); ++r)
                                  for (std::size_t j = 0; j < n; ++j) da[rows[r] * n + j] += d[r * n + j];
                          });
}

/// x + M for a constant additive mask whose entries are 0 or kMaskedLogit.
/// Masked positions pass no gradient.
inline Var add_mask(Var a, const Tensor& mask) {
    detail::require_same_shape(a.value(), mask, "add_mask");
    Tensor out = a.value();
    std::vector<bool> open(mask.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        open[i] = std::isfinite(mask.data[i]);
        out.data[i] = open[i] ? out.data[i] + mask.data[i] : kMaskedLogit;
    }
    return a.graph->apply("add_mask", std::move(out), {a}, [a = a.id, open = std::move(open)](Graph& g, std::size_t self) {
        const auto& d = g.adjoint(self);
        auto& da = g.grad_of(a);
        for (std::size_t i = 0; i < d.size(); ++i)
            if (open[i]) da[i] += d[i];
    });
}

/// Row softmax with max subtraction. kMaskedLogit entries map to exactly 0 and
/// receive zero gradient; a row with no finite entry is an error.
inline Var softmax_rows(Var a) {
    const Tensor& A = a.value();
    detail::require_rank2(A, "softmax_rows");
    const std::size_t m = A.shape[0], n = A.shape[1];
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const double* x = A.data.data() + i * n;
        double mx = kMaskedLogit;
        for (std::size_t j = 0; j < n; ++j)
            if (x[j] != kMaskedLogit) mx = std::max(mx, x[j]);
        if (mx == kMaskedLogit) throw DegenerateError("softmax_rows: row " + std::to_string(i) + " is fully masked");
        double z = 0.0;
        double* y = out.data.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            y[j] = x[j] == kMaskedLogit ? 0.0 : std::exp(x[j] - mx);
            z += y[j];
        }
        for (std::size_t j = 0; j < n; ++j) y[j] /= z;
    }
    return a.graph->apply("softmax_rows", std::move(out), {a}, [a = a.id, m, n](Graph& g, std::size_t self) {
        const auto& d = g.adjoint(self);
        const auto& y = g.value(self).data;
        auto& da = g.grad_of(a);
        for (std::size_t i = 0; i < m; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += y[i * n + j] * d[i * n + j];
            for (std::size_t j = 0; j < n; ++j) {
                const double yj = y[i * n + j];
                if (yj != 0.0) da[i * n + j] += yj * (d[i * n + j] - dot);
            }
        }
    });
}

/// Cosine similarity of two equally sized tensors, as a scalar node.
inline Var cosine(Var a, Var b) {
    Graph& g = detail::same_graph(a, b);
    const auto& x = a.value().data;
    const auto& y = b.value().data;
    if (x.size() != y.size())
        throw DimensionError("cosine: size mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
    }
    nx = std::sqrt(nx);
    ny = std::sqrt(ny);
    if (nx < kNormEpsilon || ny < kNormEpsilon)
        throw DegenerateError("cosine: vector norm below epsilon");
    const double c = std::clamp(dot / (nx * ny), -1.0, 1.0);
    return g.apply("cosine", Tensor::scalar(c), {a, b}, [a = a.id, b = b.id, nx, ny, c](Graph& g, std::size_t self) {
        const double d = g.adjoint(self)[0];
        const auto& x = g.value(a).data;
        const auto& y = g.value(b).data;
        const double inv = 1.0 / (nx * ny);
        if (g.needs_grad(a)) {
            auto& da = g.grad_of(a);
            const double k = c / (nx * nx);
            for (std::size_t i = 0; i < x.size(); ++i) da[i] += d * (y[i] * inv - k * x[i]);
        }
        if (g.needs_grad(b)) {
            auto& db = g.grad_of(b);
            const double k = c / (ny * ny);
            for (std::size_t i = 0; i < y.size(); ++i) db[i] += d * (x[i] * inv - k * y[i]);
        }
    });
}

/// Packs scalar nodes into a vector of length parts.size().
inline Var stack_scalars(const std::vector<Var>& parts) {
    if (parts.empty()) throw DimensionError("stack_scalars of nothing");
    Graph& g = *parts.front().graph;
    Tensor out(Shape{parts.size()});
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        g.check_owner(parts[i]);
        out.data[i] = parts[i].item();
        ids.push_back(parts[i].id);
    }
    return g.apply("stack_scalars", std::move(out), parts, [ids = std::move(ids)](Graph& g, std::size_t self) {
        const auto& d = g.adjoint(self);
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (g.needs_grad(ids[i])) g.grad_of(ids[i])[0] += d[i];
    });
}

/// −log softmax(scores)[label], computed through log-sum-exp.
inline Var softmax_cross_entropy(Var scores, std::size_t label) {
    const auto& s = scores.value().data;
    if (label >= s.size())
        throw ContractError("label " + std::to_string(label) + " outside [0, " + std::to_string(s.size()) + ")");
    const double mx = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double v : s) z += std::exp(v - mx);
    const double lse = mx + std::log(z);
    const double loss = lse - s[label];
    return scores.graph->apply("softmax_xent", Tensor::scalar(loss), {scores},
                               [sc = scores.id, label, lse](Graph& g, std::size_t self) {
                                   const double d = g.adjoint(self)[0];
                                   const auto& s = g.value(sc).data;
                                   auto& ds = g.grad_of(sc);
                                   for (std::size_t j = 0; j < s.size(); ++j)
                                       ds[j] += d * (std::exp(s[j] - lse) - (j == label ? 1.0 : 0.0));
                               });
}

enum class Elementwise { relu, sigmoid, add, mul, neg, abs_sum };

/// Dispatches the listed elementwise kinds; binary kinds require `b`.
inline Var elementwise(Elementwise kind, Var a, std::optional<Var> b = std::nullopt) {
    auto need_b = [&]() -> Var {
        if (!b) throw ContractError("binary elementwise op requires two operands");
        return *b;
    };
    switch (kind) {
        case Elementwise::relu: return relu(a);
        case Elementwise::sigmoid: return sigmoid(a);
        case Elementwise::add: return add(a, need_b());
        case Elementwise::mul: return mul(a, need_b());
        case Elementwise::neg: return neg(a);
        case Elementwise::abs_sum: return abs_sum(a);
    }
    throw ContractError("unknown elementwise kind");
}

}  // namespace umbe
