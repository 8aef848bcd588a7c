// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace geode {

namespace {

thread_local int g_no_grad_depth = 0;

size_t shape_numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ShapeError("tensor dimensions must be positive");
        n *= static_cast<size_t>(d);
    }
    return n;
}

std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

// rows/cols view of an up-to-2D tensor
void as_2d(const Tensor& t, int& r, int& c) {
    const auto& s = t.shape();
    if (s.size() == 1) {
        r = 1;
        c = s[0];
    } else if (s.size() == 2) {
        r = s[0];
        c = s[1];
    } else {
        throw ShapeError("expected 1D or 2D tensor, got " + shape_str(s));
    }
}

void check_finite(const std::vector<double>& v, const char* where) {
    for (double x : v)
        if (!std::isfinite(x))
            throw NumericError(std::string("non-finite input to ") + where);
}

}  // namespace

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }
bool grad_enabled() { return g_no_grad_depth == 0; }

Tensor make_leaf(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    auto n = std::make_shared<detail::Node>();
    if (shape_numel(shape) != data.size())
        throw ShapeError("data length does not match shape " + shape_str(shape));
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor make_op(std::vector<int> shape, std::vector<double> data, std::vector<Tensor> parents,
               std::function<void(detail::Node&)> backward_fn) {
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    if (grad_enabled()) {
        bool needs = false;
        for (const auto& p : parents) needs = needs || p.requires_grad();
        if (needs) {
            n->requires_grad = true;
            n->backward_fn = std::move(backward_fn);
            n->parents.reserve(parents.size());
            for (auto& p : parents) n->parents.push_back(p.node());
        }
    }
    return Tensor(std::move(n));
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    size_t n = shape_numel(shape);
    return make_leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    size_t n = shape_numel(shape);
    return make_leaf(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    return make_leaf(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(double v) { return make_leaf({1}, {v}, false); }

Tensor Tensor::randn(std::vector<int> shape, Rng& rng, double stddev, bool requires_grad) {
    size_t n = shape_numel(shape);
    std::vector<double> d(n);
    for (auto& x : d) x = rng.normal(0.0, stddev);
    return make_leaf(std::move(shape), std::move(d), requires_grad);
}

int Tensor::rows() const {
    int r, c;
    as_2d(*this, r, c);
    return r;
}

int Tensor::cols() const {
    int r, c;
    as_2d(*this, r, c);
    return c;
}

double Tensor::item() const {
    if (numel() != 1) throw ContractError("item() on non-scalar tensor");
    return node_->data[0];
}

double Tensor::at(int r, int c) const { return node_->data[static_cast<size_t>(r) * cols() + c]; }

// ---------------------------------------------------------------- matmul

Tensor matmul(const Tensor& a, const Tensor& b) {
    int m, k, k2, n;
    as_2d(a, m, k);
    as_2d(b, k2, n);
    if (k != k2)
        throw ShapeError("matmul inner dimensions disagree: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
    const double* A = a.data().data();
    const double* B = b.data().data();
    for (int i = 0; i < m; ++i) {
        double* Ci = out.data() + static_cast<size_t>(i) * n;
        const double* Ai = A + static_cast<size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double av = Ai[p];
            if (av == 0.0) continue;
            const double* Bp = B + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) Ci[j] += av * Bp[j];
        }
    }
    return make_op({m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& node) {
        auto& pa = *node.parents[0];
        auto& pb = *node.parents[1];
        const double* dC = node.grad.data();
        if (pa.requires_grad) {
            pa.ensure_grad();
            // dA = dC * B^T
            const double* B = pb.data.data();
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    double s = 0.0;
                    const double* dCi = dC + static_cast<size_t>(i) * n;
                    const double* Bp = B + static_cast<size_t>(p) * n;
                    for (int j = 0; j < n; ++j) s += dCi[j] * Bp[j];
                    pa.grad[static_cast<size_t>(i) * k + p] += s;
                }
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            // dB = A^T * dC
            const double* A = pa.data.data();
            for (int i = 0; i < m; ++i) {
                const double* Ai = A + static_cast<size_t>(i) * k;
                const double* dCi = dC + static_cast<size_t>(i) * n;
                for (int p = 0; p < k; ++p) {
                    const double av = Ai[p];
                    if (av == 0.0) continue;
                    double* dBp = pb.grad.data() + static_cast<size_t>(p) * n;
                    for (int j = 0; j < n; ++j) dBp[j] += av * dCi[j];
                }
            }
        }
    });
}

// ------------------------------------------------------------- pointwise

Tensor add(const Tensor& a, const Tensor& b) {
    int ar, ac, br, bc;
    as_2d(a, ar, ac);
    as_2d(b, br, bc);
    const bool bias_row = (br == 1 && ar != 1 && bc == ac);
    if (!bias_row && a.shape() != b.shape())
        throw ShapeError("add shape mismatch: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    std::vector<double> out(a.numel());
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = a.data()[i] + b.data()[i % b.numel()];
    return make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& node) {
        auto& pa = *node.parents[0];
        auto& pb = *node.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (size_t i = 0; i < node.grad.size(); ++i) pa.grad[i] += node.grad[i];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            const size_t nb = pb.data.size();
            for (size_t i = 0; i < node.grad.size(); ++i) pb.grad[i % nb] += node.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError("mul shape mismatch: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    std::vector<double> out(a.numel());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    return make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& node) {
        auto& pa = *node.parents[0];
        auto& pb = *node.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (size_t i = 0; i < node.grad.size(); ++i)
                pa.grad[i] += node.grad[i] * pb.data[i];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            for (size_t i = 0; i < node.grad.size(); ++i)
                pb.grad[i] += node.grad[i] * pa.data[i];
        }
    });
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.numel());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * s;
    return make_op(a.shape(), std::move(out), {a}, [s](detail::Node& node) {
        auto& pa = *node.parents[0];
        if (!pa.requires_grad) return;
        pa.ensure_grad();
        for (size_t i = 0; i < node.grad.size(); ++i) pa.grad[i] += node.grad[i] * s;
    });
}

namespace {

template <typename F, typename DF>
Tensor unary_op(const Tensor& a, F f, DF df) {
    std::vector<double> out(a.numel());
    for (size_t i = 0; i < out.size(); ++i) out[i] = f(a.data()[i]);
    return make_op(a.shape(), std::move(out), {a}, [df](detail::Node& node) {
        auto& pa = *node.parents[0];
        if (!pa.requires_grad) return;
        pa.ensure_grad();
        for (size_t i = 0; i < node.grad.size(); ++i)
            pa.grad[i] += node.grad[i] * df(pa.data[i], node.data[i]);
    });
}

}  // namespace

Tensor tanh_act(const Tensor& a) {
    return unary_op(
        a, [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& a) {
    return unary_op(
        a,
        [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
        [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

// --------------------------------------------------------------- softmax

namespace {

// Shared softmax-with-visibility kernel. visible(i, j) limits each row's
// support; invisible entries get probability 0 and receive no gradient.
template <typename Visible>
Tensor softmax_impl(const Tensor& a, Visible visible, const char* name) {
    int r, c;
    as_2d(a, r, c);
    if (c < 1) throw ShapeError("softmax on empty last dimension");
    check_finite(a.data(), name);
    std::vector<double> out(a.numel(), 0.0);
    for (int i = 0; i < r; ++i) {
        const double* row = a.data().data() + static_cast<size_t>(i) * c;
        double* orow = out.data() + static_cast<size_t>(i) * c;
        double mx = -1e300;
        for (int j = 0; j < c; ++j)
            if (visible(i, j)) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (int j = 0; j < c; ++j)
            if (visible(i, j)) {
                orow[j] = std::exp(row[j] - mx);
                denom += orow[j];
            }
        for (int j = 0; j < c; ++j) orow[j] /= denom;
    }
    return make_op(a.shape(), std::move(out), {a}, [r, c](detail::Node& node) {
        auto& pa = *node.parents[0];
        if (!pa.requires_grad) return;
        pa.ensure_grad();
        for (int i = 0; i < r; ++i) {
            const double* y = node.data.data() + static_cast<size_t>(i) * c;
            const double* dy = node.grad.data() + static_cast<size_t>(i) * c;
            double dot = 0.0;
            for (int j = 0; j < c; ++j) dot += y[j] * dy[j];
            double* dx = pa.grad.data() + static_cast<size_t>(i) * c;
            for (int j = 0; j < c; ++j) dx[j] += y[j] * (dy[j] - dot);
        }
    });
}

}  // namespace

Tensor softmax_lastdim(const Tensor& a) {
    return softmax_impl(a, [](int, int) { return true; }, "softmax_lastdim");
}

Tensor softmax_causal(const Tensor& scores, int offset) {
    return softmax_impl(
        scores, [offset](int i, int j) { return j <= i + offset; }, "softmax_causal");
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    int r, c;
    as_2d(x, r, c);
    if (gain.numel() != static_cast<size_t>(c) || bias.numel() != static_cast<size_t>(c))
        throw ShapeError("layer_norm gain/bias must match the last dimension");
    std::vector<double> out(x.numel());
    std::vector<double> inv_std(r), means(r);
    for (int i = 0; i < r; ++i) {
        const double* row = x.data().data() + static_cast<size_t>(i) * c;
        double m = 0.0;
        for (int j = 0; j < c; ++j) m += row[j];
        m /= c;
        double v = 0.0;
        for (int j = 0; j < c; ++j) v += (row[j] - m) * (row[j] - m);
        v /= c;
        means[i] = m;
        inv_std[i] = 1.0 / std::sqrt(v + eps);
        double* orow = out.data() + static_cast<size_t>(i) * c;
        for (int j = 0; j < c; ++j)
            orow[j] = (row[j] - m) * inv_std[i] * gain.data()[j] + bias.data()[j];
    }
    return make_op(x.shape(), std::move(out), {x, gain, bias},
                   [r, c, means, inv_std](detail::Node& node) {
                       auto& px = *node.parents[0];
                       auto& pg = *node.parents[1];
                       auto& pb = *node.parents[2];
                       for (int i = 0; i < r; ++i) {
                           const double* xr = px.data.data() + static_cast<size_t>(i) * c;
                           const double* dy = node.grad.data() + static_cast<size_t>(i) * c;
                           const double is = inv_std[i];
                           if (pg.requires_grad) {
                               pg.ensure_grad();
                               for (int j = 0; j < c; ++j)
                                   pg.grad[j] += dy[j] * (xr[j] - means[i]) * is;
                           }
                           if (pb.requires_grad) {
                               pb.ensure_grad();
                               for (int j = 0; j < c; ++j) pb.grad[j] += dy[j];
                           }
                           if (px.requires_grad) {
                               px.ensure_grad();
                               // d/dx of (x - mean) * inv_std * g
                               double sum_dyg = 0.0, sum_dyg_xh = 0.0;
                               for (int j = 0; j < c; ++j) {
                                   const double g = pg.data[j];
                                   const double xh = (xr[j] - means[i]) * is;
                                   sum_dyg += dy[j] * g;
                                   sum_dyg_xh += dy[j] * g * xh;
                               }
                               double* dx = px.grad.data() + static_cast<size_t>(i) * c;
                               for (int j = 0; j < c; ++j) {
                                   const double g = pg.data[j];
                                   const double xh = (xr[j] - means[i]) * is;
                                   dx[j] += is * (dy[j] * g - sum_dyg / c - xh * sum_dyg_xh / c);
                               }
                           }
                       }
                   });
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                     const std::vector<bool>& mask) {
    int L, V;
    as_2d(logits, L, V);
    if (targets.size() != static_cast<size_t>(L) || mask.size() != static_cast<size_t>(L))
        throw ShapeError("cross_entropy targets/mask length must equal the row count");
    check_finite(logits.data(), "cross_entropy");
    int n_unmasked = 0;
    for (int i = 0; i < L; ++i)
        if (mask[i]) {
            if (targets[i] < 0 || targets[i] >= V)
                throw NumericError("cross_entropy target id " + std::to_string(targets[i]) +
                                   " out of vocabulary of size " + std::to_string(V));
            ++n_unmasked;
        }
    // probs cached for the backward pass
    auto probs = std::make_shared<std::vector<double>>(logits.numel(), 0.0);
    double loss = 0.0;
    for (int i = 0; i < L; ++i) {
        if (!mask[i]) continue;
        const double* row = logits.data().data() + static_cast<size_t>(i) * V;
        double* prow = probs->data() + static_cast<size_t>(i) * V;
        double mx = row[0];
        for (int j = 1; j < V; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (int j = 0; j < V; ++j) {
            prow[j] = std::exp(row[j] - mx);
            denom += prow[j];
        }
        for (int j = 0; j < V; ++j) prow[j] /= denom;
        loss -= std::log(std::max(prow[targets[i]], 1e-300));
    }
    loss = n_unmasked ? loss / n_unmasked : 0.0;
    return make_op({1}, {loss}, {logits},
                   [L, V, targets, mask, n_unmasked, probs](detail::Node& node) {
                       auto& pl = *node.parents[0];
                       if (!pl.requires_grad || n_unmasked == 0) return;
                       pl.ensure_grad();
                       const double d = node.grad[0] / n_unmasked;
                       for (int i = 0; i < L; ++i) {
                           if (!mask[i]) continue;
                           const double* prow = probs->data() + static_cast<size_t>(i) * V;
                           double* grow = pl.grad.data() + static_cast<size_t>(i) * V;
                           for (int j = 0; j < V; ++j) grow[j] += d * prow[j];
                           grow[targets[i]] -= d;
                       }
                   });
}

Tensor mse(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw ShapeError("mse shape mismatch: " + shape_str(pred.shape()) + " vs " +
                         shape_str(target.shape()));
    const size_t n = pred.numel();
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = pred.data()[i] - target.data()[i];
        loss += d * d;
    }
    loss /= static_cast<double>(n);
    return make_op({1}, {loss}, {pred, target}, [n](detail::Node& node) {
        auto& pp = *node.parents[0];
        auto& pt = *node.parents[1];
        const double d = node.grad[0] * 2.0 / static_cast<double>(n);
        if (pp.requires_grad) {
            pp.ensure_grad();
            for (size_t i = 0; i < n; ++i) pp.grad[i] += d * (pp.data[i] - pt.data[i]);
        }
        if (pt.requires_grad) {
            pt.ensure_grad();
            for (size_t i = 0; i < n; ++i) pt.grad[i] -= d * (pp.data[i] - pt.data[i]);
        }
    });
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
    int V, d;
    as_2d(table, V, d);
    for (int id : ids)
        if (id < 0 || id >= V)
            throw NumericError("embedding id " + std::to_string(id) + " out of table of size " +
                               std::to_string(V));
    const int L = static_cast<int>(ids.size());
    std::vector<double> out(static_cast<size_t>(L) * d);
    for (int i = 0; i < L; ++i)
        std::copy_n(table.data().data() + static_cast<size_t>(ids[i]) * d, d,
                    out.data() + static_cast<size_t>(i) * d);
    return make_op({L, d}, std::move(out), {table}, [ids, d](detail::Node& node) {
        auto& pt = *node.parents[0];
        if (!pt.requires_grad) return;
        pt.ensure_grad();
        for (size_t i = 0; i < ids.size(); ++i) {
            const double* g = node.grad.data() + i * d;
            double* tg = pt.grad.data() + static_cast<size_t>(ids[i]) * d;
            for (int j = 0; j < d; ++j) tg[j] += g[j];
        }
    });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_rows of zero tensors");
    int c = parts[0].cols();
    int total = 0;
    for (const auto& p : parts) {
        if (p.cols() != c) throw ShapeError("concat_rows column mismatch");
        total += p.rows();
    }
    std::vector<double> out;
    out.reserve(static_cast<size_t>(total) * c);
    for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
    std::vector<int> row_counts;
    for (const auto& p : parts) row_counts.push_back(p.rows());
    return make_op({total, c}, std::move(out), parts, [row_counts, c](detail::Node& node) {
        size_t off = 0;
        for (size_t k = 0; k < node.parents.size(); ++k) {
            auto& p = *node.parents[k];
            const size_t n = static_cast<size_t>(row_counts[k]) * c;
            if (p.requires_grad) {
                p.ensure_grad();
                for (size_t i = 0; i < n; ++i) p.grad[i] += node.grad[off + i];
            }
            off += n;
        }
    });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_cols of zero tensors");
    int r = parts[0].rows();
    int total = 0;
    for (const auto& p : parts) {
        if (p.rows() != r) throw ShapeError("concat_cols row mismatch");
        total += p.cols();
    }
    std::vector<double> out(static_cast<size_t>(r) * total);
    std::vector<int> col_counts;
    int off = 0;
    for (const auto& p : parts) {
        const int pc = p.cols();
        for (int i = 0; i < r; ++i)
            std::copy_n(p.data().data() + static_cast<size_t>(i) * pc, pc,
                        out.data() + static_cast<size_t>(i) * total + off);
        off += pc;
        col_counts.push_back(pc);
    }
    return make_op({r, total}, std::move(out), parts, [col_counts, r, total](detail::Node& node) {
        int off2 = 0;
        for (size_t k = 0; k < node.parents.size(); ++k) {
            auto& p = *node.parents[k];
            const int pc = col_counts[k];
            if (p.requires_grad) {
                p.ensure_grad();
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < pc; ++j)
                        p.grad[static_cast<size_t>(i) * pc + j] +=
                            node.grad[static_cast<size_t>(i) * total + off2 + j];
            }
            off2 += pc;
        }
    });
}

Tensor slice_rows(const Tensor& x, int r0, int r1) {
    int r, c;
    as_2d(x, r, c);
    if (r0 < 0 || r1 > r || r0 >= r1) throw ShapeError("slice_rows range out of bounds");
    std::vector<double> out(x.data().begin() + static_cast<size_t>(r0) * c,
                            x.data().begin() + static_cast<size_t>(r1) * c);
    return make_op({r1 - r0, c}, std::move(out), {x}, [r0, c](detail::Node& node) {
        auto& p = *node.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (size_t i = 0; i < node.grad.size(); ++i)
            p.grad[static_cast<size_t>(r0) * c + i] += node.grad[i];
    });
}

Tensor slice_cols(const Tensor& x, int c0, int c1) {
    int r, c;
    as_2d(x, r, c);
    if (c0 < 0 || c1 > c || c0 >= c1) throw ShapeError("slice_cols range out of bounds");
    const int w = c1 - c0;
    std::vector<double> out(static_cast<size_t>(r) * w);
    for (int i = 0; i < r; ++i)
        std::copy_n(x.data().data() + static_cast<size_t>(i) * c + c0, w,
                    out.data() + static_cast<size_t>(i) * w);
    return make_op({r, w}, std::move(out), {x}, [r, c, c0, w](detail::Node& node) {
        auto& p = *node.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < w; ++j)
                p.grad[static_cast<size_t>(i) * c + c0 + j] +=
                    node.grad[static_cast<size_t>(i) * w + j];
    });
}

Tensor transpose(const Tensor& x) {
    int r, c;
    as_2d(x, r, c);
    std::vector<double> out(x.numel());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            out[static_cast<size_t>(j) * r + i] = x.data()[static_cast<size_t>(i) * c + j];
    return make_op({c, r}, std::move(out), {x}, [r, c](detail::Node& node) {
        auto& p = *node.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                p.grad[static_cast<size_t>(i) * c + j] += node.grad[static_cast<size_t>(j) * r + i];
    });
}

Tensor mean_lastdim(const Tensor& x) {
    int r, c;
    as_2d(x, r, c);
    std::vector<double> out(r, 0.0);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) out[i] += x.data()[static_cast<size_t>(i) * c + j];
        out[i] /= c;
    }
    return make_op({r, 1}, std::move(out), {x}, [r, c](detail::Node& node) {
        auto& p = *node.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                p.grad[static_cast<size_t>(i) * c + j] += node.grad[i] / c;
    });
}

Tensor sum_all(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    return make_op({1}, {s}, {x}, [](detail::Node& node) {
        auto& p = *node.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (size_t i = 0; i < p.grad.size(); ++i) p.grad[i] += node.grad[0];
    });
}

Tensor mean_all(const Tensor& x) {
    return scale(sum_all(x), 1.0 / static_cast<double>(x.numel()));
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw ContractError("backward requires a defined scalar loss");
    // Iterative post-order topological sort.
    std::vector<detail::Node*> topo;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            detail::Node* p = node->parents[idx++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }
    if (loss.requires_grad()) {
        loss.node()->ensure_grad();
        loss.node()->grad[0] += 1.0;
    }
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        detail::Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

}  // namespace geode
