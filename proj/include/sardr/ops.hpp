// ops.hpp — differentiable primitives over Tensor.
//
// Every op here registers an adjoint rule; the gradcheck registry
// (gradcheck.hpp) enumerates them all against central finite differences.
// Constant data captured by value in a closure (masks, gates, index arrays)
// deliberately carries no gradient.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "sardr/tensor.hpp"

namespace sardr {

namespace detail {

inline std::shared_ptr<TensorNode> make_node(const char* op, Shape shape, std::vector<double> value,
                                             std::vector<std::shared_ptr<TensorNode>> inputs) {
    auto n = std::make_shared<TensorNode>();
    n->op = op;
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->inputs = std::move(inputs);
    for (auto& in : n->inputs)
        if (in->needs_grad) n->needs_grad = true;
    return n;
}

inline bool is_scalar(const Tensor& t) { return t.size() == 1 && t.shape().empty() == false ? t.size() == 1 : t.size() == 1; }

inline void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// Elementwise binary with scalar broadcast on either side.
template <class FwdFn, class BwdFn>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, FwdFn fwd, BwdFn bwd) {
    const bool as = a.size() == 1, bs = b.size() == 1;
    if (!as && !bs) require_same_shape(name, a, b);
    const std::size_t n = std::max(a.size(), b.size());
    const Shape& shape = as && !bs ? b.shape() : a.shape();

    const double* av = a.data().data();
    const double* bv = b.data().data();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[as ? 0 : i], bv[bs ? 0 : i]);

    auto node = make_node(name, shape, std::move(out), {a.node_ptr(), b.node_ptr()});
    if (node->needs_grad) {
        TensorNode* an = a.node();
        TensorNode* bn = b.node();
        node->backward = [an, bn, as, bs, n, bwd](const double* g, const std::vector<double*>& gin) {
            const double* av = an->value.data();
            const double* bv = bn->value.data();
            for (std::size_t i = 0; i < n; ++i) {
                double da, db;
                bwd(av[as ? 0 : i], bv[bs ? 0 : i], da, db);
                if (gin[0]) gin[0][as ? 0 : i] += g[i] * da;
                if (gin[1]) gin[1][bs ? 0 : i] += g[i] * db;
            }
        };
    }
    return Tensor(node);
}

// Elementwise unary; bwd maps (x, y) -> dy/dx.
template <class FwdFn, class BwdFn>
Tensor unary_op(const char* name, const Tensor& a, FwdFn fwd, BwdFn bwd) {
    const std::size_t n = a.size();
    const double* av = a.data().data();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i]);

    auto node = make_node(name, a.shape(), std::move(out), {a.node_ptr()});
    if (node->needs_grad) {
        TensorNode* an = a.node();
        TensorNode* self = node.get();
        node->backward = [an, self, n, bwd](const double* g, const std::vector<double*>& gin) {
            if (!gin[0]) return;
            const double* av = an->value.data();
            const double* yv = self->value.data();
            for (std::size_t i = 0; i < n; ++i) gin[0][i] += g[i] * bwd(av[i], yv[i]);
        };
    }
    return Tensor(node);
}

}  // namespace detail

// ---- arithmetic -----------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
    return detail::binary_op("add", a, b, [](double x, double y) { return x + y; },
                             [](double, double, double& da, double& db) { da = 1.0; db = 1.0; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    return detail::binary_op("sub", a, b, [](double x, double y) { return x - y; },
                             [](double, double, double& da, double& db) { da = 1.0; db = -1.0; });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    return detail::binary_op("mul", a, b, [](double x, double y) { return x * y; },
                             [](double x, double y, double& da, double& db) { da = y; db = x; });
}

inline Tensor div(const Tensor& a, const Tensor& b) {
    return detail::binary_op("div", a, b, [](double x, double y) { return x / y; },
                             [](double x, double y, double& da, double& db) {
                                 da = 1.0 / y;
                                 db = -x / (y * y);
                             });
}

// Ties route the gradient to the first argument.
inline Tensor minimum(const Tensor& a, const Tensor& b) {
    return detail::binary_op("minimum", a, b, [](double x, double y) { return x <= y ? x : y; },
                             [](double x, double y, double& da, double& db) {
                                 da = x <= y ? 1.0 : 0.0;
                                 db = 1.0 - da;
                             });
}

inline Tensor maximum(const Tensor& a, const Tensor& b) {
    return detail::binary_op("maximum", a, b, [](double x, double y) { return x >= y ? x : y; },
                             [](double x, double y, double& da, double& db) {
                                 da = x >= y ? 1.0 : 0.0;
                                 db = 1.0 - da;
                             });
}

inline Tensor neg(const Tensor& a) {
    return detail::unary_op("neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

inline Tensor exp(const Tensor& a) {
    return detail::unary_op("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

inline Tensor log(const Tensor& a) {
    return detail::unary_op("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

inline Tensor sqrt(const Tensor& a) {
    return detail::unary_op("sqrt", a, [](double x) { return std::sqrt(x); },
                            [](double, double y) { return 0.5 / y; });
}

inline Tensor abs(const Tensor& a) {
    return detail::unary_op("abs", a, [](double x) { return std::fabs(x); },
                            [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

inline Tensor sin(const Tensor& a) {
    return detail::unary_op("sin", a, [](double x) { return std::sin(x); },
                            [](double x, double) { return std::cos(x); });
}

inline Tensor cos(const Tensor& a) {
    return detail::unary_op("cos", a, [](double x) { return std::cos(x); },
                            [](double x, double) { return -std::sin(x); });
}

inline Tensor tanh(const Tensor& a) {
    return detail::unary_op("tanh", a, [](double x) { return std::tanh(x); },
                            [](double, double y) { return 1.0 - y * y; });
}

inline Tensor sigmoid(const Tensor& a) {
    return detail::unary_op("sigmoid", a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                            [](double, double y) { return y * (1.0 - y); });
}

inline Tensor relu(const Tensor& a) {
    return detail::unary_op("relu", a, [](double x) { return x > 0 ? x : 0.0; },
                            [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

inline Tensor pow_scalar(const Tensor& a, double p) {
    return detail::unary_op("pow_scalar", a, [p](double x) { return std::pow(x, p); },
                            [p](double x, double) { return p * std::pow(x, p - 1.0); });
}

inline Tensor scale(const Tensor& a, double c) {
    return detail::unary_op("scale", a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

inline Tensor add_scalar(const Tensor& a, double c) {
    return detail::unary_op("add_scalar", a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

// Gradient passes on the closed interval [lo, hi].
inline Tensor clamp(const Tensor& a, double lo, double hi) {
    return detail::unary_op("clamp", a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
                            [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

// Elementwise multiply by a constant vector (gate/mask); no gradient into the mask.
inline Tensor gate(const Tensor& a, std::vector<double> mask) {
    if (mask.size() != a.size()) throw ShapeError("gate: mask length mismatch");
    const std::size_t n = a.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] * mask[i];
    auto node = detail::make_node("gate", a.shape(), std::move(out), {a.node_ptr()});
    if (node->needs_grad) {
        auto m = std::make_shared<std::vector<double>>(std::move(mask));
        node->backward = [m, n](const double* g, const std::vector<double*>& gin) {
            if (!gin[0]) return;
            for (std::size_t i = 0; i < n; ++i) gin[0][i] += g[i] * (*m)[i];
        };
    }
    return Tensor(node);
}

// Elementwise add of a constant vector.
inline Tensor shift(const Tensor& a, const std::vector<double>& offs) {
    if (offs.size() != a.size()) throw ShapeError("shift: offset length mismatch");
    const std::size_t n = a.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] + offs[i];
    auto node = detail::make_node("shift", a.shape(), std::move(out), {a.node_ptr()});
    if (node->needs_grad) {
        node->backward = [n](const double* g, const std::vector<double*>& gin) {
            if (!gin[0]) return;
            for (std::size_t i = 0; i < n; ++i) gin[0][i] += g[i];
        };
    }
    return Tensor(node);
}

// ---- reductions -----------------------------------------------------------

inline Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    auto node = detail::make_node("sum", {}, {s}, {a.node_ptr()});
    if (node->needs_grad) {
        const std::size_t n = a.size();
        node->backward = [n](const double* g, const std::vector<double*>& gin) {
            if (!gin[0]) return;
            for (std::size_t i = 0; i < n; ++i) gin[0][i] += g[0];
        };
    }
    return Tensor(node);
}

inline Tensor mean(const Tensor& a) {
    if (a.size() == 0) throw ContractError("mean of empty tensor");
    double s = 0.0;
    for (double v : a.data()) s += v;
    const double inv = 1.0 / static_cast<double>(a.size());
    auto node = detail::make_node("mean", {}, {s * inv}, {a.node_ptr()});
    if (node->needs_grad) {
        const std::size_t n = a.size();
        node->backward = [n, inv](const double* g, const std::vector<double*>& gin) {
            if (!gin[0]) return;
            const double gv = g[0] * inv;
            for (std::size_t i = 0; i < n; ++i) gin[0][i] += gv;
        };
    }
    return Tensor(node);
}

// ---- indexing / shape -----------------------------------------------------

// Flat-index gather; index -1 yields 0 and receives no gradient.
inline Tensor gather(const Tensor& a, std::vector<std::int64_t> idx) {
    const std::int64_t an = static_cast<std::int64_t>(a.size());
    std::vector<double> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::int64_t j = idx[i];
        if (j >= an || j < -1) throw ShapeError("gather: index out of range");
        out[i] = j < 0 ? 0.0 : a.data()[static_cast<std::size_t>(j)];
    }
    auto node = detail::make_node("gather", {static_cast<std::int64_t>(idx.size())}, std::move(out), {a.node_ptr()});
    if (node->needs_grad) {
        auto ix = std::make_shared<std::vector<std::int64_t>>(std::move(idx));
        node->backward = [ix](const double* g, const std::vector<double*>& gin) {
            if (!gin[0]) return;
            for (std::size_t i = 0; i < ix->size(); ++i)
                if ((*ix)[i] >= 0) gin[0][(*ix)[i]] += g[i];
        };
    }
    return Tensor(node);
}

// out[seg[i]] += a[i]; fixed sequential order keeps results bitwise stable.
inline Tensor scatter_add(const Tensor& a, std::vector<std::int64_t> seg, std::int64_t out_size) {
    if (seg.size() != a.size()) throw ShapeError("scatter_add: segment index length mismatch");
    std::vector<double> out(static_cast<std::size_t>(out_size), 0.0);
    for (std::size_t i = 0; i < seg.size(); ++i) {
        if (seg[i] < 0 || seg[i] >= out_size) throw ShapeError("scatter_add: segment index out of range");
        out[seg[i]] += a.data()[i];
    }
    auto node = detail::make_node("scatter_add", {out_size}, std::move(out), {a.node_ptr()});
    if (node->needs_grad) {
        auto ix = std::make_shared<std::vector<std::int64_t>>(std::move(seg));
        node->backward = [ix](const double* g, const std::vector<double*>& gin) {
            if (!gin[0]) return;
            for (std::size_t i = 0; i < ix->size(); ++i) gin[0][i] += g[(*ix)[i]];
        };
    }
    return Tensor(node);
}

// Place a[i] at position idx[i] of a size-P vector prefilled with `fill`.
// Indices must be unique; the fill cells are constants.
inline Tensor scatter_full(const Tensor& a, std::vector<std::int64_t> idx, std::int64_t out_size, double fill) {
    if (idx.size() != a.size()) throw ShapeError("scatter_full: index length mismatch");
    std::vector<double> out(static_cast<std::size_t>(out_size), fill);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= out_size) throw ShapeError("scatter_full: index out of range");
        out[idx[i]] = a.data()[i];
    }
    auto node = detail::make_node("scatter_full", {out_size}, std::move(out), {a.node_ptr()});
    if (node->needs_grad) {
        auto ix = std::make_shared<std::vector<std::int64_t>>(std::move(idx));
        node->backward = [ix](const double* g, const std::vector<double*>& gin) {
            if (!gin[0]) return;
            for (std::size_t i = 0; i < ix->size(); ++i) gin[0][i] += g[(*ix)[i]];
        };
    }
    return Tensor(node);
}

inline Tensor slice(const Tensor& a, std::int64_t start, std::int64_t len) {
    if (start < 0 || len < 0 || start + len > static_cast<std::int64_t>(a.size()))
        throw ShapeError("slice: range out of bounds");
    std::vector<double> out(a.data().begin() + start, a.data().begin() + start + len);
    auto node = detail::make_node("slice", {len}, std::move(out), {a.node_ptr()});
    if (node->needs_grad) {
        node->backward = [start, len](const double* g, const std::vector<double*>& gin) {
            if (!gin[0]) return;
            for (std::int64_t i = 0; i < len; ++i) gin[0][start + i] += g[i];
        };
    }
    return Tensor(node);
}

inline Tensor concat(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat of zero tensors");
    std::vector<double> out;
    std::vector<std::shared_ptr<TensorNode>> ins;
    std::vector<std::size_t> sizes;
    for (const auto& p : parts) {
        out.insert(out.end(), p.data().begin(), p.data().end());
        ins.push_back(p.node_ptr());
        sizes.push_back(p.size());
    }
    auto node = detail::make_node("concat", {static_cast<std::int64_t>(out.size())}, std::move(out), std::move(ins));
    if (node->needs_grad) {
        node->backward = [sizes](const double* g, const std::vector<double*>& gin) {
            std::size_t off = 0;
            for (std::size_t k = 0; k < sizes.size(); ++k) {
                if (gin[k])
                    for (std::size_t i = 0; i < sizes[k]; ++i) gin[k][i] += g[off + i];
                off += sizes[k];
            }
        };
    }
    return Tensor(node);
}

inline Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != static_cast<std::int64_t>(a.size()))
        throw ShapeError("reshape: numel mismatch " + shape_str(a.shape()) + " -> " + shape_str(shape));
    auto node = detail::make_node("reshape", std::move(shape), a.data(), {a.node_ptr()});
    if (node->needs_grad) {
        const std::size_t n = a.size();
        node->backward = [n](const double* g, const std::vector<double*>& gin) {
            if (!gin[0]) return;
            for (std::size_t i = 0; i < n; ++i) gin[0][i] += g[i];
        };
    }
    return Tensor(node);
}

// Column c of a row-major [N, ncols] tensor.
inline Tensor column(const Tensor& a, std::int64_t ncols, std::int64_t c) {
    if (ncols <= 0 || c < 0 || c >= ncols || a.size() % ncols != 0)
        throw ShapeError("column: bad column spec");
    const std::int64_t rows = static_cast<std::int64_t>(a.size()) / ncols;
    std::vector<double> out(static_cast<std::size_t>(rows));
    for (std::int64_t i = 0; i < rows; ++i) out[i] = a.data()[i * ncols + c];
    auto node = detail::make_node("column", {rows}, std::move(out), {a.node_ptr()});
    if (node->needs_grad) {
        node->backward = [rows, ncols, c](const double* g, const std::vector<double*>& gin) {
            if (!gin[0]) return;
            for (std::int64_t i = 0; i < rows; ++i) gin[0][i * ncols + c] += g[i];
        };
    }
    return Tensor(node);
}

// Interleave three length-N vectors into an [N,3] tensor.
inline Tensor pack3(const Tensor& x, const Tensor& y, const Tensor& z) {
    if (x.size() != y.size() || x.size() != z.size()) throw ShapeError("pack3: length mismatch");
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    std::vector<double> out(static_cast<std::size_t>(3 * n));
    for (std::int64_t i = 0; i < n; ++i) {
        out[3 * i] = x.data()[i];
        out[3 * i + 1] = y.data()[i];
        out[3 * i + 2] = z.data()[i];
    }
    auto node = detail::make_node("pack3", {n, 3}, std::move(out), {x.node_ptr(), y.node_ptr(), z.node_ptr()});
    if (node->needs_grad) {
        node->backward = [n](const double* g, const std::vector<double*>& gin) {
            for (std::int64_t i = 0; i < n; ++i) {
                if (gin[0]) gin[0][i] += g[3 * i];
                if (gin[1]) gin[1][i] += g[3 * i + 1];
                if (gin[2]) gin[2][i] += g[3 * i + 2];
            }
        };
    }
    return Tensor(node);
}

// ---- linear algebra -------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    const std::int64_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    std::vector<double> out(static_cast<std::size_t>(m * n), 0.0);
    {
        const double* av = a.data().data();
        const double* bv = b.data().data();
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t p = 0; p < k; ++p) {
                const double aip = av[i * k + p];
                const double* brow = bv + p * n;
                double* orow = out.data() + i * n;
                for (std::int64_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
            }
    }
    auto node = detail::make_node("matmul", {m, n}, std::move(out), {a.node_ptr(), b.node_ptr()});
    if (node->needs_grad) {
        TensorNode* an = a.node();
        TensorNode* bn = b.node();
        node->backward = [an, bn, m, k, n](const double* g, const std::vector<double*>& gin) {
            const double* av = an->value.data();
            const double* bv = bn->value.data();
            if (gin[0]) {  // dA = G * B^T
                for (std::int64_t i = 0; i < m; ++i)
                    for (std::int64_t p = 0; p < k; ++p) {
                        double s = 0.0;
                        const double* grow = g + i * n;
                        const double* brow = bv + p * n;
                        for (std::int64_t j = 0; j < n; ++j) s += grow[j] * brow[j];
                        gin[0][i * k + p] += s;
                    }
            }
            if (gin[1]) {  // dB = A^T * G
                for (std::int64_t i = 0; i < m; ++i)
                    for (std::int64_t p = 0; p < k; ++p) {
                        const double aip = av[i * k + p];
                        const double* grow = g + i * n;
                        double* brow = gin[1] + p * n;
                        for (std::int64_t j = 0; j < n; ++j) brow[j] += aip * grow[j];
                    }
            }
        };
    }
    return Tensor(node);
}

// ---- operators ------------------------------------------------------------

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator+(const Tensor& a, double c) { return add_scalar(a, c); }
inline Tensor operator+(double c, const Tensor& a) { return add_scalar(a, c); }
inline Tensor operator-(const Tensor& a, double c) { return add_scalar(a, -c); }
inline Tensor operator-(double c, const Tensor& a) { return add_scalar(neg(a), c); }
inline Tensor operator*(const Tensor& a, double c) { return scale(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return scale(a, c); }
inline Tensor operator/(const Tensor& a, double c) { return scale(a, 1.0 / c); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

inline Tensor square(const Tensor& a) { return mul(a, a); }

}  // namespace sardr
