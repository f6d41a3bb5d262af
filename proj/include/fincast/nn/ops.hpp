#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>

#include "fincast/nn/linalg.hpp"
#include "fincast/nn/tensor.hpp"
#include "fincast/rng.hpp"

namespace fincast::nn {

enum class Activation { linear, tanh };

namespace detail {
inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}
}  // namespace detail

/// C[m,n] = A[m,k] * B[k,n]
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0),
                    "matmul: shape mismatch " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<T> out(m * n, T(0));
    gemm_nn(a.values().data(), b.values().data(), out.data(), m, k, n);
    return Tensor<T>::make(
        {m, n}, std::move(out), {a, b}, [m, k, n](typename Tensor<T>::Node& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (pa.requires_grad) {
                Tensor<T>::ensure_grad(pa);
                auto bt = transpose(pb.values.data(), k, n);
                gemm_nn(self.grad.data(), bt.data(), pa.grad.data(), m, n, k);
            }
            if (pb.requires_grad) {
                Tensor<T>::ensure_grad(pb);
                gemm_tn(pa.values.data(), self.grad.data(), pb.grad.data(), m, k, n);
            }
        });
}

/// Broadcast a length-n bias over the rows of X[m,n].
template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
    detail::require(x.rank() == 2 && bias.rank() == 1 && bias.dim(0) == x.dim(1),
                    "add_bias: shape mismatch " + shape_str(x.shape()) + " + " + shape_str(bias.shape()));
    const std::size_t m = x.dim(0), n = x.dim(1);
    std::vector<T> out(x.values());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bias.values()[j];
    return Tensor<T>::make(
        {m, n}, std::move(out), {x, bias}, [m, n](typename Tensor<T>::Node& self) {
            auto& px = *self.parents[0];
            auto& pb = *self.parents[1];
            if (px.requires_grad) {
                Tensor<T>::ensure_grad(px);
                for (std::size_t i = 0; i < m * n; ++i) px.grad[i] += self.grad[i];
            }
            if (pb.requires_grad) {
                Tensor<T>::ensure_grad(pb);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) pb.grad[j] += self.grad[i * n + j];
            }
        });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require(a.shape() == b.shape(), "add: shape mismatch");
    std::vector<T> out(a.values());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.values()[i];
    return Tensor<T>::make(a.shape(), std::move(out), {a, b}, [](typename Tensor<T>::Node& self) {
        for (int p = 0; p < 2; ++p) {
            auto& par = *self.parents[p];
            if (!par.requires_grad) continue;
            Tensor<T>::ensure_grad(par);
            for (std::size_t i = 0; i < self.grad.size(); ++i) par.grad[i] += self.grad[i];
        }
    });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require(a.shape() == b.shape(), "mul: shape mismatch");
    std::vector<T> out(a.values());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.values()[i];
    return Tensor<T>::make(a.shape(), std::move(out), {a, b}, [](typename Tensor<T>::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
            Tensor<T>::ensure_grad(pa);
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                pa.grad[i] += self.grad[i] * pb.values[i];
        }
        if (pb.requires_grad) {
            Tensor<T>::ensure_grad(pb);
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                pb.grad[i] += self.grad[i] * pa.values[i];
        }
    });
}

template <typename T>
Tensor<T> tanh_act(const Tensor<T>& x) {
    std::vector<T> out(x.values());
    for (auto& v : out) v = std::tanh(v);
    return Tensor<T>::make(x.shape(), std::move(out), {x}, [](typename Tensor<T>::Node& self) {
        auto& px = *self.parents[0];
        if (!px.requires_grad) return;
        Tensor<T>::ensure_grad(px);
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const T y = self.values[i];
            px.grad[i] += self.grad[i] * (T(1) - y * y);
        }
    });
}

template <typename T>
Tensor<T> sigmoid_act(const Tensor<T>& x) {
    std::vector<T> out(x.values());
    for (auto& v : out) v = T(1) / (T(1) + std::exp(-v));
    return Tensor<T>::make(x.shape(), std::move(out), {x}, [](typename Tensor<T>::Node& self) {
        auto& px = *self.parents[0];
        if (!px.requires_grad) return;
        Tensor<T>::ensure_grad(px);
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const T y = self.values[i];
            px.grad[i] += self.grad[i] * y * (T(1) - y);
        }
    });
}

/// [m,a] ++ [m,b] -> [m,a+b]
template <typename T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require(a.rank() == 2 && b.rank() == 2 && a.dim(0) == b.dim(0),
                    "concat_cols: shape mismatch");
    const std::size_t m = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    std::vector<T> out(m * (ca + cb));
    for (std::size_t i = 0; i < m; ++i) {
        std::copy_n(a.values().data() + i * ca, ca, out.data() + i * (ca + cb));
        std::copy_n(b.values().data() + i * cb, cb, out.data() + i * (ca + cb) + ca);
    }
    return Tensor<T>::make(
        {m, ca + cb}, std::move(out), {a, b}, [m, ca, cb](typename Tensor<T>::Node& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            const std::size_t c = ca + cb;
            if (pa.requires_grad) {
                Tensor<T>::ensure_grad(pa);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < ca; ++j) pa.grad[i * ca + j] += self.grad[i * c + j];
            }
            if (pb.requires_grad) {
                Tensor<T>::ensure_grad(pb);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < cb; ++j)
                        pb.grad[i * cb + j] += self.grad[i * c + ca + j];
            }
        });
}

/// Columns [c0, c1) of X[m,n].
template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t c0, std::size_t c1) {
    detail::require(x.rank() == 2 && c0 < c1 && c1 <= x.dim(1), "slice_cols: bad range");
    const std::size_t m = x.dim(0), n = x.dim(1), w = c1 - c0;
    std::vector<T> out(m * w);
    for (std::size_t i = 0; i < m; ++i)
        std::copy_n(x.values().data() + i * n + c0, w, out.data() + i * w);
    return Tensor<T>::make(
        {m, w}, std::move(out), {x}, [m, n, c0, w](typename Tensor<T>::Node& self) {
            auto& px = *self.parents[0];
            if (!px.requires_grad) return;
            Tensor<T>::ensure_grad(px);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < w; ++j)
                    px.grad[i * n + c0 + j] += self.grad[i * w + j];
        });
}

/// Time slice t of X[b,T,c] -> [b,c].
template <typename T>
Tensor<T> slice_step(const Tensor<T>& x, std::size_t t) {
    detail::require(x.rank() == 3 && t < x.dim(1), "slice_step: bad step");
    const std::size_t b = x.dim(0), steps = x.dim(1), c = x.dim(2);
    std::vector<T> out(b * c);
    for (std::size_t i = 0; i < b; ++i)
        std::copy_n(x.values().data() + (i * steps + t) * c, c, out.data() + i * c);
    return Tensor<T>::make(
        {b, c}, std::move(out), {x}, [b, steps, t, c](typename Tensor<T>::Node& self) {
            auto& px = *self.parents[0];
            if (!px.requires_grad) return;
            Tensor<T>::ensure_grad(px);
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    px.grad[(i * steps + t) * c + j] += self.grad[i * c + j];
        });
}

/// Stack T slices of [b,c] into [b,T,c].
template <typename T>
Tensor<T> stack_steps(const std::vector<Tensor<T>>& steps) {
    detail::require(!steps.empty(), "stack_steps: empty input");
    const std::size_t b = steps[0].dim(0), c = steps[0].dim(1), n = steps.size();
    for (const auto& s : steps)
        detail::require(s.rank() == 2 && s.dim(0) == b && s.dim(1) == c, "stack_steps: shape mismatch");
    std::vector<T> out(b * n * c);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t i = 0; i < b; ++i)
            std::copy_n(steps[t].values().data() + i * c, c, out.data() + (i * n + t) * c);
    return Tensor<T>::make(
        {b, n, c}, std::move(out), steps, [b, n, c](typename Tensor<T>::Node& self) {
            for (std::size_t t = 0; t < n; ++t) {
                auto& p = *self.parents[t];
                if (!p.requires_grad) continue;
                Tensor<T>::ensure_grad(p);
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t j = 0; j < c; ++j)
                        p.grad[i * c + j] += self.grad[(i * n + t) * c + j];
            }
        });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, std::vector<std::size_t> shape) {
    detail::require(numel(shape) == x.size(), "reshape: element count mismatch");
    std::vector<T> out(x.values());
    return Tensor<T>::make(std::move(shape), std::move(out), {x},
                           [](typename Tensor<T>::Node& self) {
                               auto& px = *self.parents[0];
                               if (!px.requires_grad) return;
                               Tensor<T>::ensure_grad(px);
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                   px.grad[i] += self.grad[i];
                           });
}

/// Elementwise multiply by a fixed (non-differentiated) mask.
template <typename T>
Tensor<T> mul_mask(const Tensor<T>& x, std::shared_ptr<const std::vector<T>> mask) {
    detail::require(mask && mask->size() == x.size(), "mul_mask: length mismatch");
    std::vector<T> out(x.values());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= (*mask)[i];
    return Tensor<T>::make(x.shape(), std::move(out), {x},
                           [mask](typename Tensor<T>::Node& self) {
                               auto& px = *self.parents[0];
                               if (!px.requires_grad) return;
                               Tensor<T>::ensure_grad(px);
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                   px.grad[i] += self.grad[i] * (*mask)[i];
                           });
}

/// Inverted-dropout mask: zero with probability `rate`, else 1/(1-rate).
/// Shared across time steps when used for variational recurrent dropout.
template <typename T>
std::shared_ptr<const std::vector<T>> make_dropout_mask(std::size_t n, double rate, Rng& rng) {
    auto mask = std::make_shared<std::vector<T>>(n);
    const T keep_scale = T(1.0 / (1.0 - rate));
    for (auto& m : *mask) m = rng.bernoulli(rate) ? T(0) : keep_scale;
    return mask;
}

/// Inverted dropout: train mode zeroes elements with probability `rate` and
/// scales survivors by 1/(1-rate); eval mode is the identity.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Mode mode, Rng& rng) {
    detail::require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0,1)");
    if (mode == Mode::eval || rate == 0.0) return x;
    return mul_mask(x, make_dropout_mask<T>(x.size(), rate, rng));
}

/// Dilated causal 1-d convolution over X[b,t,c_in] with kernel K[k,c_in,c_out]
/// and optional bias[c_out]. Output step t sees input steps t - (k-1-j)*d only;
/// the left edge is zero-padded so the sequence length is preserved.
template <typename T>
Tensor<T> causal_conv1d(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias,
                        std::size_t dilation) {
    detail::require(x.rank() == 3 && kernel.rank() == 3 && x.dim(2) == kernel.dim(1),
                    "causal_conv1d: shape mismatch " + shape_str(x.shape()) + " * " +
                        shape_str(kernel.shape()));
    detail::require(dilation >= 1, "causal_conv1d: dilation must be >= 1");
    const std::size_t b = x.dim(0), steps = x.dim(1), cin = x.dim(2);
    const std::size_t k = kernel.dim(0), cout = kernel.dim(2);
    const bool has_bias = bias.defined();
    if (has_bias)
        detail::require(bias.rank() == 1 && bias.dim(0) == cout, "causal_conv1d: bad bias shape");

    // unfold into [b*steps, k*cin]; kernel is already laid out as [k*cin, cout]
    const std::size_t rows = b * steps, kc = k * cin;
    auto cols = std::make_shared<std::vector<T>>(rows * kc, T(0));
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t t = 0; t < steps; ++t) {
            T* dst = cols->data() + (i * steps + t) * kc;
            for (std::size_t j = 0; j < k; ++j) {
                const std::ptrdiff_t src_t =
                    static_cast<std::ptrdiff_t>(t) -
                    static_cast<std::ptrdiff_t>((k - 1 - j) * dilation);
                if (src_t < 0) continue;
                std::copy_n(x.values().data() + (i * steps + src_t) * cin, cin, dst + j * cin);
            }
        }
    }
    std::vector<T> out(rows * cout, T(0));
    gemm_nn(cols->data(), kernel.values().data(), out.data(), rows, kc, cout);
    if (has_bias)
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < cout; ++j) out[r * cout + j] += bias.values()[j];

    std::vector<Tensor<T>> parents = {x, kernel};
    if (has_bias) parents.push_back(bias);
    return Tensor<T>::make(
        {b, steps, cout}, std::move(out), std::move(parents),
        [cols, b, steps, cin, k, cout, dilation, rows, kc, has_bias](typename Tensor<T>::Node& self) {
            auto& px = *self.parents[0];
            auto& pk = *self.parents[1];
            if (pk.requires_grad) {
                Tensor<T>::ensure_grad(pk);
                gemm_tn(cols->data(), self.grad.data(), pk.grad.data(), rows, kc, cout);
            }
            if (px.requires_grad) {
                Tensor<T>::ensure_grad(px);
                auto kt = transpose(pk.values.data(), kc, cout);
                std::vector<T> dcols(rows * kc, T(0));
                gemm_nn(self.grad.data(), kt.data(), dcols.data(), rows, cout, kc);
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t t = 0; t < steps; ++t) {
                        const T* src = dcols.data() + (i * steps + t) * kc;
                        for (std::size_t j = 0; j < k; ++j) {
                            const std::ptrdiff_t src_t =
                                static_cast<std::ptrdiff_t>(t) -
                                static_cast<std::ptrdiff_t>((k - 1 - j) * dilation);
                            if (src_t < 0) continue;
                            T* dst = px.grad.data() + (i * steps + src_t) * cin;
                            const T* s = src + j * cin;
                            for (std::size_t c = 0; c < cin; ++c) dst[c] += s[c];
                        }
                    }
            }
            if (has_bias && self.parents[2]->requires_grad) {
                auto& pb = *self.parents[2];
                Tensor<T>::ensure_grad(pb);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < cout; ++j) pb.grad[j] += self.grad[r * cout + j];
            }
        });
}

/// Dense layer: act(X*W + b). The activation enum covers the two the
/// architectures use; gates build sigmoid directly.
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                        Activation act) {
    Tensor<T> out = add_bias(matmul(x, w), b);
    return act == Activation::tanh ? tanh_act(out) : out;
}

/// Mean squared error between two equal-length vectors; scalar output.
/// The sum is accumulated in double, in index order.
template <typename T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    detail::require(pred.size() == target.size(), "mse_loss: length mismatch");
    detail::require(pred.size() > 0, "mse_loss: empty input");
    const std::size_t n = pred.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pred.values()[i]) - static_cast<double>(target.values()[i]);
        acc += d * d;
    }
    std::vector<T> out = {static_cast<T>(acc / static_cast<double>(n))};
    return Tensor<T>::make({1}, std::move(out), {pred, target}, [n](typename Tensor<T>::Node& self) {
        auto& pp = *self.parents[0];
        auto& pt = *self.parents[1];
        const T g = self.grad[0];
        const T scale = T(2) / static_cast<T>(n);
        if (pp.requires_grad) {
            Tensor<T>::ensure_grad(pp);
            for (std::size_t i = 0; i < n; ++i)
                pp.grad[i] += g * scale * (pp.values[i] - pt.values[i]);
        }
        if (pt.requires_grad) {
            Tensor<T>::ensure_grad(pt);
            for (std::size_t i = 0; i < n; ++i)
                pt.grad[i] -= g * scale * (pp.values[i] - pt.values[i]);
        }
    });
}

}  // namespace fincast::nn
