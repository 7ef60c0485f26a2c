#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "twix/errors.hpp"

namespace twix {

// Dense rank-2 tensor storage. Vectors are (1, n) or (n, 1); scalars (1, 1).
template <typename T>
struct TensorData {
  int rows = 0;
  int cols = 0;
  std::vector<T> v;
  std::vector<T> grad;  // allocated lazily, same size as v
  bool requires_grad = false;

  std::size_t size() const { return v.size(); }
  void ensure_grad() {
    if (grad.size() != v.size()) grad.assign(v.size(), T(0));
  }
};

// Reverse-mode tape: backward closures in execution order, replayed in exact
// reverse order. One tape per training context.
template <typename T>
class Tape {
public:
  void record(std::function<void()> fn) { nodes_.push_back(std::move(fn)); }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  void run_backward() {
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  }

private:
  std::vector<std::function<void()>> nodes_;
};

template <typename T>
class TensorT {
public:
  TensorT() : d_(std::make_shared<TensorData<T>>()) {}

  static TensorT zeros(int rows, int cols) {
    TensorT t;
    t.d_->rows = rows;
    t.d_->cols = cols;
    t.d_->v.assign(static_cast<std::size_t>(rows) * cols, T(0));
    return t;
  }

  static TensorT from_values(int rows, int cols, std::vector<T> values) {
    if (values.size() != static_cast<std::size_t>(rows) * cols)
      throw NumericError("tensor: value count does not match shape (" + std::to_string(rows) +
                         "," + std::to_string(cols) + ")");
    TensorT t;
    t.d_->rows = rows;
    t.d_->cols = cols;
    t.d_->v = std::move(values);
    t.check_finite("from_values");
    return t;
  }

  static TensorT scalar(T value) { return from_values(1, 1, {value}); }

  // Learnable leaf registered on a tape.
  static TensorT parameter(Tape<T>* tape, int rows, int cols, std::vector<T> values) {
    TensorT t = from_values(rows, cols, std::move(values));
    t.d_->requires_grad = true;
    t.tape_ = tape;
    return t;
  }

  int rows() const { return d_->rows; }
  int cols() const { return d_->cols; }
  std::vector<int> shape() const { return {d_->rows, d_->cols}; }
  std::size_t size() const { return d_->size(); }
  bool requires_grad() const { return d_->requires_grad; }
  Tape<T>* tape() const { return tape_; }

  const std::vector<T>& values() const { return d_->v; }
  std::vector<T>& values_mut() { return d_->v; }
  T at(int r, int c) const { return d_->v[static_cast<std::size_t>(r) * d_->cols + c]; }
  T value() const {
    if (size() != 1) throw NumericError("tensor: value() on non-scalar");
    return d_->v[0];
  }

  const std::vector<T>& grad() const {
    d_->ensure_grad();
    return d_->grad;
  }
  void zero_grad() { d_->grad.assign(d_->size(), T(0)); }

  std::shared_ptr<TensorData<T>> data() const { return d_; }

  void check_finite(const char* op) const {
    for (const T x : d_->v) {
      if (!std::isfinite(x))
        throw NumericError(std::string("tensor op '") + op + "' produced a non-finite value");
    }
  }

  // Internal: used by op implementations to wire autodiff metadata.
  void set_autograd(bool needs_grad, Tape<T>* tape) {
    d_->requires_grad = needs_grad;
    tape_ = tape;
  }

private:
  std::shared_ptr<TensorData<T>> d_;
  Tape<T>* tape_ = nullptr;
};

using Tensor = TensorT<double>;
using TensorF = TensorT<float>;

namespace detail {

template <typename T>
Tape<T>* merge_tape(std::initializer_list<const TensorT<T>*> inputs) {
  Tape<T>* tape = nullptr;
  for (const TensorT<T>* t : inputs) {
    if (t->tape() == nullptr) continue;
    if (tape != nullptr && tape != t->tape())
      throw NumericError("tensor op: inputs belong to different tapes");
    tape = t->tape();
  }
  return tape;
}

template <typename T>
bool any_requires(std::initializer_list<const TensorT<T>*> inputs) {
  for (const TensorT<T>* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

[[noreturn]] inline void shape_error(const char* op, int ar, int ac, int br, int bc) {
  throw NumericError(std::string("tensor op '") + op + "': incompatible shapes (" +
                     std::to_string(ar) + "," + std::to_string(ac) + ") and (" +
                     std::to_string(br) + "," + std::to_string(bc) + ")");
}

// Exact grid accumulator: rounds each summand to a multiple of 2^-36 so the
// partial sums stay exactly representable and the total is independent of
// summand order. Used where permutation invariance must be bit-exact.
// Finite-difference tests may switch it off: the rounding staircase is not
// differentiable at the probe scale while the gradient formulas are shared.
bool& exact_reduction_flag();
inline double grid_quantize(double x) {
  if (!exact_reduction_flag()) return x;
  return std::nearbyint(x * 68719476736.0) * (1.0 / 68719476736.0);
}
inline float grid_quantize(float x) { return x; }

}  // namespace detail

// ---- core op set -----------------------------------------------------------

template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b);
template <typename T>
TensorT<T> matmul_nt(const TensorT<T>& a, const TensorT<T>& b);  // a * b^T
template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b);
template <typename T>
TensorT<T> add_rowvec(const TensorT<T>& a, const TensorT<T>& bias);  // bias (1, cols)
template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b);
template <typename T>
TensorT<T> sub_bcast(const TensorT<T>& a, const TensorT<T>& s);  // a - scalar tensor
template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b);
template <typename T>
TensorT<T> scale(const TensorT<T>& a, T c);
template <typename T>
TensorT<T> add_scalar(const TensorT<T>& a, T c);
template <typename T>
TensorT<T> softmax_rows(const TensorT<T>& a, bool canonical = false);
template <typename T>
TensorT<T> layer_norm_rows(const TensorT<T>& a, const TensorT<T>& gain, const TensorT<T>& bias,
                           T eps = T(1e-5));
template <typename T>
TensorT<T> relu(const TensorT<T>& a);
template <typename T>
TensorT<T> tanh_t(const TensorT<T>& a);
template <typename T>
TensorT<T> exp_t(const TensorT<T>& a);
template <typename T>
TensorT<T> log_t(const TensorT<T>& a);
template <typename T>
TensorT<T> clamp_t(const TensorT<T>& a, T lo, T hi);
template <typename T>
TensorT<T> concat_rows(const std::vector<TensorT<T>>& parts);
template <typename T>
TensorT<T> slice_rows(const TensorT<T>& a, int r0, int r1);
template <typename T>
TensorT<T> slice_cols(const TensorT<T>& a, int c0, int c1);
template <typename T>
TensorT<T> masked_fill(const TensorT<T>& a, const std::vector<char>& mask, T value);
template <typename T>
TensorT<T> reduce_sum(const TensorT<T>& a);
template <typename T>
TensorT<T> reduce_mean(const TensorT<T>& a);
template <typename T>
TensorT<T> transpose(const TensorT<T>& a);
template <typename T>
TensorT<T> gather(const TensorT<T>& a, const std::vector<int>& flat_indices);

// Multi-head attention over `blocks` independent same-length sequences
// stacked over rows. Q, K, V are (blocks * L, D) with D = heads * dh;
// attention never crosses block boundaries. attention_scores returns the
// per-(block, head) score matrices stacked over rows: (blocks * heads * L, L)
// where block b / head h occupies rows [(b*heads + h)*L, ...+L) and equals
// scale * Q_bh K_bh^T. attention_apply consumes row-stochastic score blocks P
// and returns (blocks * L, D) with column block h of block b equal to
// P_bh V_bh. `canonical` switches the double-precision reductions to an
// order-independent exact accumulation.
// key_mask, when non-null, has blocks * L entries; masked keys score the
// constant -1e9 for every query and head of their block (additive-mask
// semantics folded into the score computation), so softmax suppresses them
// exactly and no gradient flows through masked cells.
template <typename T>
TensorT<T> attention_scores(const TensorT<T>& q, const TensorT<T>& k, int heads, T scale_factor,
                            int blocks = 1, const std::vector<char>* key_mask = nullptr);
template <typename T>
TensorT<T> attention_apply(const TensorT<T>& p, const TensorT<T>& v, int heads, int blocks = 1,
                           bool canonical = false);

// Complete multi-head attention block: softmax(scale * Q_bh K_bh^T) V_bh per
// block and head, written into (blocks * L, D). Equivalent to
// attention_scores + softmax_rows + attention_apply with the mask semantics
// of attention_scores, but masked keys and masked query rows are skipped
// outright (masked query rows yield zeros). The row-stochastic weights are
// cached for the backward pass.
template <typename T>
TensorT<T> masked_attention(const TensorT<T>& q, const TensorT<T>& k, const TensorT<T>& v,
                            int heads, T scale_factor, int blocks = 1,
                            const std::vector<char>* key_mask = nullptr, bool canonical = false);
template <typename T>
TensorT<T> reshape(const TensorT<T>& a, int rows, int cols);
template <typename T>
TensorT<T> gather_rows(const TensorT<T>& a, const std::vector<int>& row_indices);

// Populates gradients of every requires_grad leaf reachable from loss.
template <typename T>
void backward(const TensorT<T>& loss);

// ---- Adam ------------------------------------------------------------------

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long step = 0;
};

// Standard Adam update with bias correction, one shared step counter.
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// ---- implementation --------------------------------------------------------

namespace detail {

template <typename T, typename Forward, typename Backward>
TensorT<T> unary_op(const char* name, const TensorT<T>& a, int out_rows, int out_cols,
                    Forward&& fwd, Backward&& bwd) {
  TensorT<T> out = TensorT<T>::zeros(out_rows, out_cols);
  fwd(a, out);
  out.check_finite(name);
  Tape<T>* tape = merge_tape<T>({&a});
  const bool req = any_requires<T>({&a});
  out.set_autograd(req, tape);
  if (tape != nullptr && req) {
    auto ad = a.data();
    auto od = out.data();
    tape->record([ad, od, bwd]() {
      ad->ensure_grad();
      od->ensure_grad();
      bwd(*ad, *od);
    });
  }
  return out;
}

template <typename T, typename Forward, typename Backward>
TensorT<T> binary_op(const char* name, const TensorT<T>& a, const TensorT<T>& b, int out_rows,
                     int out_cols, Forward&& fwd, Backward&& bwd) {
  TensorT<T> out = TensorT<T>::zeros(out_rows, out_cols);
  fwd(a, b, out);
  out.check_finite(name);
  Tape<T>* tape = merge_tape<T>({&a, &b});
  const bool req = any_requires<T>({&a, &b});
  out.set_autograd(req, tape);
  if (tape != nullptr && req) {
    auto ad = a.data();
    auto bd = b.data();
    auto od = out.data();
    const bool ra = a.requires_grad();
    const bool rb = b.requires_grad();
    tape->record([ad, bd, od, ra, rb, bwd]() {
      if (ra) ad->ensure_grad();
      if (rb) bd->ensure_grad();
      od->ensure_grad();
      bwd(*ad, *bd, *od, ra, rb);
    });
  }
  return out;
}

}  // namespace detail

template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.cols() != b.rows()) detail::shape_error("matmul", a.rows(), a.cols(), b.rows(), b.cols());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  return detail::binary_op<T>(
      "matmul", a, b, n, m,
      [n, k, m](const TensorT<T>& A, const TensorT<T>& B, TensorT<T>& O) {
        const T* av = A.values().data();
        const T* bv = B.values().data();
        T* ov = O.values_mut().data();
        for (int i = 0; i < n; ++i) {
          for (int kk = 0; kk < k; ++kk) {
            const T aik = av[i * k + kk];
            const T* brow = bv + static_cast<std::size_t>(kk) * m;
            T* orow = ov + static_cast<std::size_t>(i) * m;
            for (int j = 0; j < m; ++j) orow[j] += aik * brow[j];
          }
        }
      },
      [n, k, m](TensorData<T>& A, TensorData<T>& B, TensorData<T>& O, bool ra, bool rb) {
        // dA = dO * B^T ; dB = A^T * dO
        if (ra) {
          for (int i = 0; i < n; ++i)
            for (int kk = 0; kk < k; ++kk) {
              T acc = 0;
              const T* orow = O.grad.data() + static_cast<std::size_t>(i) * m;
              const T* brow = B.v.data() + static_cast<std::size_t>(kk) * m;
              for (int j = 0; j < m; ++j) acc += orow[j] * brow[j];
              A.grad[i * k + kk] += acc;
            }
        }
        if (rb) {
          for (int kk = 0; kk < k; ++kk)
            for (int i = 0; i < n; ++i) {
              const T aik = A.v[i * k + kk];
              const T* orow = O.grad.data() + static_cast<std::size_t>(i) * m;
              T* brow = B.grad.data() + static_cast<std::size_t>(kk) * m;
              for (int j = 0; j < m; ++j) brow[j] += aik * orow[j];
            }
        }
      });
}

template <typename T>
TensorT<T> matmul_nt(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.cols() != b.cols())
    detail::shape_error("matmul_nt", a.rows(), a.cols(), b.rows(), b.cols());
  const int n = a.rows(), k = a.cols(), m = b.rows();
  return detail::binary_op<T>(
      "matmul_nt", a, b, n, m,
      [n, k, m](const TensorT<T>& A, const TensorT<T>& B, TensorT<T>& O) {
        const T* av = A.values().data();
        const T* bv = B.values().data();
        T* ov = O.values_mut().data();
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < m; ++j) {
            T acc = 0;
            const T* arow = av + static_cast<std::size_t>(i) * k;
            const T* brow = bv + static_cast<std::size_t>(j) * k;
            for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            ov[i * m + j] = acc;
          }
      },
      [n, k, m](TensorData<T>& A, TensorData<T>& B, TensorData<T>& O, bool ra, bool rb) {
        // O = A B^T: dA = dO * B ; dB = dO^T * A
        if (ra) {
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) {
              const T g = O.grad[i * m + j];
              const T* brow = B.v.data() + static_cast<std::size_t>(j) * k;
              T* arow = A.grad.data() + static_cast<std::size_t>(i) * k;
              for (int kk = 0; kk < k; ++kk) arow[kk] += g * brow[kk];
            }
        }
        if (rb) {
          for (int j = 0; j < m; ++j)
            for (int i = 0; i < n; ++i) {
              const T g = O.grad[i * m + j];
              const T* arow = A.v.data() + static_cast<std::size_t>(i) * k;
              T* brow = B.grad.data() + static_cast<std::size_t>(j) * k;
              for (int kk = 0; kk < k; ++kk) brow[kk] += g * arow[kk];
            }
        }
      });
}

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    detail::shape_error("add", a.rows(), a.cols(), b.rows(), b.cols());
  return detail::binary_op<T>(
      "add", a, b, a.rows(), a.cols(),
      [](const TensorT<T>& A, const TensorT<T>& B, TensorT<T>& O) {
        for (std::size_t i = 0; i < A.size(); ++i) O.values_mut()[i] = A.values()[i] + B.values()[i];
      },
      [](TensorData<T>& A, TensorData<T>& B, TensorData<T>& O, bool ra, bool rb) {
        for (std::size_t i = 0; i < O.size(); ++i) {
          if (ra) A.grad[i] += O.grad[i];
          if (rb) B.grad[i] += O.grad[i];
        }
      });
}

template <typename T>
TensorT<T> add_rowvec(const TensorT<T>& a, const TensorT<T>& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols())
    detail::shape_error("add_rowvec", a.rows(), a.cols(), bias.rows(), bias.cols());
  const int n = a.rows(), m = a.cols();
  return detail::binary_op<T>(
      "add_rowvec", a, bias, n, m,
      [n, m](const TensorT<T>& A, const TensorT<T>& B, TensorT<T>& O) {
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < m; ++j)
            O.values_mut()[i * m + j] = A.values()[i * m + j] + B.values()[j];
      },
      [n, m](TensorData<T>& A, TensorData<T>& B, TensorData<T>& O, bool ra, bool rb) {
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < m; ++j) {
            if (ra) A.grad[i * m + j] += O.grad[i * m + j];
            if (rb) B.grad[j] += O.grad[i * m + j];
          }
      });
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    detail::shape_error("sub", a.rows(), a.cols(), b.rows(), b.cols());
  return detail::binary_op<T>(
      "sub", a, b, a.rows(), a.cols(),
      [](const TensorT<T>& A, const TensorT<T>& B, TensorT<T>& O) {
        for (std::size_t i = 0; i < A.size(); ++i) O.values_mut()[i] = A.values()[i] - B.values()[i];
      },
      [](TensorData<T>& A, TensorData<T>& B, TensorData<T>& O, bool ra, bool rb) {
        for (std::size_t i = 0; i < O.size(); ++i) {
          if (ra) A.grad[i] += O.grad[i];
          if (rb) B.grad[i] -= O.grad[i];
        }
      });
}

template <typename T>
TensorT<T> sub_bcast(const TensorT<T>& a, const TensorT<T>& s) {
  if (s.size() != 1) detail::shape_error("sub_bcast", a.rows(), a.cols(), s.rows(), s.cols());
  return detail::binary_op<T>(
      "sub_bcast", a, s, a.rows(), a.cols(),
      [](const TensorT<T>& A, const TensorT<T>& S, TensorT<T>& O) {
        const T sv = S.values()[0];
        for (std::size_t i = 0; i < A.size(); ++i) O.values_mut()[i] = A.values()[i] - sv;
      },
      [](TensorData<T>& A, TensorData<T>& S, TensorData<T>& O, bool ra, bool rb) {
        for (std::size_t i = 0; i < O.size(); ++i) {
          if (ra) A.grad[i] += O.grad[i];
          if (rb) S.grad[0] -= O.grad[i];
        }
      });
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    detail::shape_error("mul", a.rows(), a.cols(), b.rows(), b.cols());
  return detail::binary_op<T>(
      "mul", a, b, a.rows(), a.cols(),
      [](const TensorT<T>& A, const TensorT<T>& B, TensorT<T>& O) {
        for (std::size_t i = 0; i < A.size(); ++i) O.values_mut()[i] = A.values()[i] * B.values()[i];
      },
      [](TensorData<T>& A, TensorData<T>& B, TensorData<T>& O, bool ra, bool rb) {
        for (std::size_t i = 0; i < O.size(); ++i) {
          if (ra) A.grad[i] += O.grad[i] * B.v[i];
          if (rb) B.grad[i] += O.grad[i] * A.v[i];
        }
      });
}

template <typename T>
TensorT<T> scale(const TensorT<T>& a, T c) {
  return detail::unary_op<T>(
      "scale", a, a.rows(), a.cols(),
      [c](const TensorT<T>& A, TensorT<T>& O) {
        for (std::size_t i = 0; i < A.size(); ++i) O.values_mut()[i] = A.values()[i] * c;
      },
      [c](TensorData<T>& A, TensorData<T>& O) {
        for (std::size_t i = 0; i < O.size(); ++i) A.grad[i] += O.grad[i] * c;
      });
}

template <typename T>
TensorT<T> add_scalar(const TensorT<T>& a, T c) {
  return detail::unary_op<T>(
      "add_scalar", a, a.rows(), a.cols(),
      [c](const TensorT<T>& A, TensorT<T>& O) {
        for (std::size_t i = 0; i < A.size(); ++i) O.values_mut()[i] = A.values()[i] + c;
      },
      [](TensorData<T>& A, TensorData<T>& O) {
        for (std::size_t i = 0; i < O.size(); ++i) A.grad[i] += O.grad[i];
      });
}

template <typename T>
TensorT<T> softmax_rows(const TensorT<T>& a, bool canonical) {
  const int n = a.rows(), m = a.cols();
  return detail::unary_op<T>(
      "softmax", a, n, m,
      [n, m, canonical](const TensorT<T>& A, TensorT<T>& O) {
        for (int i = 0; i < n; ++i) {
          const T* row = A.values().data() + static_cast<std::size_t>(i) * m;
          T* orow = O.values_mut().data() + static_cast<std::size_t>(i) * m;
          T mx = row[0];
          for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
          T den = 0;
          for (int j = 0; j < m; ++j) {
            const T e = std::exp(row[j] - mx);
            orow[j] = canonical ? detail::grid_quantize(e) : e;
            den += orow[j];
          }
          for (int j = 0; j < m; ++j) orow[j] /= den;
        }
      },
      [n, m](TensorData<T>& A, TensorData<T>& O) {
        for (int i = 0; i < n; ++i) {
          const T* p = O.v.data() + static_cast<std::size_t>(i) * m;
          const T* gp = O.grad.data() + static_cast<std::size_t>(i) * m;
          T* ga = A.grad.data() + static_cast<std::size_t>(i) * m;
          T dot = 0;
          for (int j = 0; j < m; ++j) dot += gp[j] * p[j];
          for (int j = 0; j < m; ++j) ga[j] += (gp[j] - dot) * p[j];
        }
      });
}

template <typename T>
TensorT<T> layer_norm_rows(const TensorT<T>& a, const TensorT<T>& gain, const TensorT<T>& bias,
                           T eps) {
  if (gain.rows() != 1 || gain.cols() != a.cols() || bias.rows() != 1 || bias.cols() != a.cols())
    detail::shape_error("layer_norm", a.rows(), a.cols(), gain.rows(), gain.cols());
  const int n = a.rows(), m = a.cols();

  TensorT<T> out = TensorT<T>::zeros(n, m);
  // Cache per-row mean and reciprocal std for the backward pass.
  auto stats = std::make_shared<std::vector<T>>(static_cast<std::size_t>(n) * 2);
  {
    const T* av = a.values().data();
    T* ov = out.values_mut().data();
    const T* gv = gain.values().data();
    const T* bv = bias.values().data();
    for (int i = 0; i < n; ++i) {
      const T* row = av + static_cast<std::size_t>(i) * m;
      T mean = 0;
      for (int j = 0; j < m; ++j) mean += row[j];
      mean /= m;
      T var = 0;
      for (int j = 0; j < m; ++j) var += (row[j] - mean) * (row[j] - mean);
      var /= m;
      const T rstd = T(1) / std::sqrt(var + eps);
      (*stats)[2 * i] = mean;
      (*stats)[2 * i + 1] = rstd;
      T* orow = ov + static_cast<std::size_t>(i) * m;
      for (int j = 0; j < m; ++j) orow[j] = (row[j] - mean) * rstd * gv[j] + bv[j];
    }
  }
  out.check_finite("layer_norm");
  Tape<T>* tape = detail::merge_tape<T>({&a, &gain, &bias});
  const bool req = detail::any_requires<T>({&a, &gain, &bias});
  out.set_autograd(req, tape);
  if (tape != nullptr && req) {
    auto ad = a.data();
    auto gd = gain.data();
    auto bd = bias.data();
    auto od = out.data();
    const bool ra = a.requires_grad(), rg = gain.requires_grad(), rb = bias.requires_grad();
    tape->record([ad, gd, bd, od, stats, n, m, ra, rg, rb]() {
      ad->ensure_grad();
      gd->ensure_grad();
      bd->ensure_grad();
      od->ensure_grad();
      for (int i = 0; i < n; ++i) {
        const T mean = (*stats)[2 * i];
        const T rstd = (*stats)[2 * i + 1];
        const T* row = ad->v.data() + static_cast<std::size_t>(i) * m;
        const T* go = od->grad.data() + static_cast<std::size_t>(i) * m;
        // xhat_j = (x_j - mean) * rstd ; out_j = xhat_j * gain_j + bias_j
        T sum_gxh = 0, sum_g = 0;
        for (int j = 0; j < m; ++j) {
          const T xhat = (row[j] - mean) * rstd;
          const T gg = go[j] * gd->v[j];
          sum_gxh += gg * xhat;
          sum_g += gg;
          if (rg) gd->grad[j] += go[j] * xhat;
          if (rb) bd->grad[j] += go[j];
        }
        if (ra) {
          T* ga = ad->grad.data() + static_cast<std::size_t>(i) * m;
          for (int j = 0; j < m; ++j) {
            const T xhat = (row[j] - mean) * rstd;
            const T gg = go[j] * gd->v[j];
            ga[j] += rstd * (gg - sum_g / m - xhat * sum_gxh / m);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> relu(const TensorT<T>& a) {
  return detail::unary_op<T>(
      "relu", a, a.rows(), a.cols(),
      [](const TensorT<T>& A, TensorT<T>& O) {
        for (std::size_t i = 0; i < A.size(); ++i)
          O.values_mut()[i] = A.values()[i] > T(0) ? A.values()[i] : T(0);
      },
      [](TensorData<T>& A, TensorData<T>& O) {
        for (std::size_t i = 0; i < O.size(); ++i)
          if (A.v[i] > T(0)) A.grad[i] += O.grad[i];
      });
}

template <typename T>
TensorT<T> tanh_t(const TensorT<T>& a) {
  return detail::unary_op<T>(
      "tanh", a, a.rows(), a.cols(),
      [](const TensorT<T>& A, TensorT<T>& O) {
        for (std::size_t i = 0; i < A.size(); ++i) O.values_mut()[i] = std::tanh(A.values()[i]);
      },
      [](TensorData<T>& A, TensorData<T>& O) {
        for (std::size_t i = 0; i < O.size(); ++i)
          A.grad[i] += O.grad[i] * (T(1) - O.v[i] * O.v[i]);
      });
}

template <typename T>
TensorT<T> exp_t(const TensorT<T>& a) {
  return detail::unary_op<T>(
      "exp", a, a.rows(), a.cols(),
      [](const TensorT<T>& A, TensorT<T>& O) {
        for (std::size_t i = 0; i < A.size(); ++i) O.values_mut()[i] = std::exp(A.values()[i]);
      },
      [](TensorData<T>& A, TensorData<T>& O) {
        for (std::size_t i = 0; i < O.size(); ++i) A.grad[i] += O.grad[i] * O.v[i];
      });
}

template <typename T>
TensorT<T> log_t(const TensorT<T>& a) {
  return detail::unary_op<T>(
      "log", a, a.rows(), a.cols(),
      [](const TensorT<T>& A, TensorT<T>& O) {
        for (std::size_t i = 0; i < A.size(); ++i) O.values_mut()[i] = std::log(A.values()[i]);
      },
      [](TensorData<T>& A, TensorData<T>& O) {
        for (std::size_t i = 0; i < O.size(); ++i) A.grad[i] += O.grad[i] / A.v[i];
      });
}

template <typename T>
TensorT<T> clamp_t(const TensorT<T>& a, T lo, T hi) {
  return detail::unary_op<T>(
      "clamp", a, a.rows(), a.cols(),
      [lo, hi](const TensorT<T>& A, TensorT<T>& O) {
        for (std::size_t i = 0; i < A.size(); ++i)
          O.values_mut()[i] = std::min(hi, std::max(lo, A.values()[i]));
      },
      [lo, hi](TensorData<T>& A, TensorData<T>& O) {
        for (std::size_t i = 0; i < O.size(); ++i)
          if (A.v[i] >= lo && A.v[i] <= hi) A.grad[i] += O.grad[i];
      });
}

template <typename T>
TensorT<T> concat_rows(const std::vector<TensorT<T>>& parts) {
  if (parts.empty()) throw NumericError("concat_rows: no inputs");
  const int m = parts[0].cols();
  int n = 0;
  for (const auto& p : parts) {
    if (p.cols() != m) detail::shape_error("concat_rows", p.rows(), p.cols(), -1, m);
    n += p.rows();
  }
  TensorT<T> out = TensorT<T>::zeros(n, m);
  int r = 0;
  Tape<T>* tape = nullptr;
  bool req = false;
  for (const auto& p : parts) {
    std::copy(p.values().begin(), p.values().end(),
              out.values_mut().begin() + static_cast<std::size_t>(r) * m);
    r += p.rows();
    if (p.tape() != nullptr) {
      if (tape != nullptr && tape != p.tape())
        throw NumericError("concat_rows: inputs belong to different tapes");
      tape = p.tape();
    }
    req = req || p.requires_grad();
  }
  out.set_autograd(req, tape);
  if (tape != nullptr && req) {
    std::vector<std::shared_ptr<TensorData<T>>> datas;
    datas.reserve(parts.size());
    for (const auto& p : parts) datas.push_back(p.data());
    auto od = out.data();
    tape->record([datas, od, m]() {
      od->ensure_grad();
      int r = 0;
      for (const auto& d : datas) {
        if (d->requires_grad) {
          d->ensure_grad();
          const int rows = d->rows;
          for (int i = 0; i < rows * m; ++i)
            d->grad[i] += od->grad[static_cast<std::size_t>(r) * m + i];
        }
        r += d->rows;
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> slice_rows(const TensorT<T>& a, int r0, int r1) {
  if (r0 < 0 || r1 > a.rows() || r0 >= r1)
    throw NumericError("slice_rows: bad range [" + std::to_string(r0) + "," +
                       std::to_string(r1) + ") for " + std::to_string(a.rows()) + " rows");
  const int m = a.cols();
  return detail::unary_op<T>(
      "slice_rows", a, r1 - r0, m,
      [r0, m](const TensorT<T>& A, TensorT<T>& O) {
        std::copy(A.values().begin() + static_cast<std::size_t>(r0) * m,
                  A.values().begin() + static_cast<std::size_t>(r0) * m + O.size(),
                  O.values_mut().begin());
      },
      [r0, m](TensorData<T>& A, TensorData<T>& O) {
        for (std::size_t i = 0; i < O.size(); ++i)
          A.grad[static_cast<std::size_t>(r0) * m + i] += O.grad[i];
      });
}

template <typename T>
TensorT<T> slice_cols(const TensorT<T>& a, int c0, int c1) {
  if (c0 < 0 || c1 > a.cols() || c0 >= c1)
    throw NumericError("slice_cols: bad range [" + std::to_string(c0) + "," +
                       std::to_string(c1) + ") for " + std::to_string(a.cols()) + " cols");
  const int n = a.rows(), m = a.cols(), w = c1 - c0;
  return detail::unary_op<T>(
      "slice_cols", a, n, w,
      [n, m, w, c0](const TensorT<T>& A, TensorT<T>& O) {
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < w; ++j)
            O.values_mut()[i * w + j] = A.values()[static_cast<std::size_t>(i) * m + c0 + j];
      },
      [n, m, w, c0](TensorData<T>& A, TensorData<T>& O) {
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < w; ++j)
            A.grad[static_cast<std::size_t>(i) * m + c0 + j] += O.grad[i * w + j];
      });
}

template <typename T>
TensorT<T> masked_fill(const TensorT<T>& a, const std::vector<char>& mask, T value) {
  if (mask.size() != a.size()) throw NumericError("masked_fill: mask size mismatch");
  return detail::unary_op<T>(
      "masked_fill", a, a.rows(), a.cols(),
      [&mask, value](const TensorT<T>& A, TensorT<T>& O) {
        for (std::size_t i = 0; i < A.size(); ++i)
          O.values_mut()[i] = mask[i] ? value : A.values()[i];
      },
      [mask](TensorData<T>& A, TensorData<T>& O) {
        for (std::size_t i = 0; i < O.size(); ++i)
          if (!mask[i]) A.grad[i] += O.grad[i];
      });
}

template <typename T>
TensorT<T> reduce_sum(const TensorT<T>& a) {
  return detail::unary_op<T>(
      "reduce_sum", a, 1, 1,
      [](const TensorT<T>& A, TensorT<T>& O) {
        T acc = 0;
        for (const T x : A.values()) acc += x;
        O.values_mut()[0] = acc;
      },
      [](TensorData<T>& A, TensorData<T>& O) {
        for (std::size_t i = 0; i < A.grad.size(); ++i) A.grad[i] += O.grad[0];
      });
}

template <typename T>
TensorT<T> reduce_mean(const TensorT<T>& a) {
  const T inv = T(1) / static_cast<T>(a.size());
  return detail::unary_op<T>(
      "reduce_mean", a, 1, 1,
      [inv](const TensorT<T>& A, TensorT<T>& O) {
        T acc = 0;
        for (const T x : A.values()) acc += x;
        O.values_mut()[0] = acc * inv;
      },
      [inv](TensorData<T>& A, TensorData<T>& O) {
        for (std::size_t i = 0; i < A.grad.size(); ++i) A.grad[i] += O.grad[0] * inv;
      });
}

template <typename T>
TensorT<T> transpose(const TensorT<T>& a) {
  const int n = a.rows(), m = a.cols();
  return detail::unary_op<T>(
      "transpose", a, m, n,
      [n, m](const TensorT<T>& A, TensorT<T>& O) {
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < m; ++j) O.values_mut()[j * n + i] = A.values()[i * m + j];
      },
      [n, m](TensorData<T>& A, TensorData<T>& O) {
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < m; ++j) A.grad[i * m + j] += O.grad[j * n + i];
      });
}

template <typename T>
TensorT<T> gather(const TensorT<T>& a, const std::vector<int>& flat_indices) {
  for (int idx : flat_indices)
    if (idx < 0 || static_cast<std::size_t>(idx) >= a.size())
      throw NumericError("gather: index out of range");
  const int k = static_cast<int>(flat_indices.size());
  return detail::unary_op<T>(
      "gather", a, k, 1,
      [&flat_indices](const TensorT<T>& A, TensorT<T>& O) {
        for (std::size_t i = 0; i < flat_indices.size(); ++i)
          O.values_mut()[i] = A.values()[flat_indices[i]];
      },
      [flat_indices](TensorData<T>& A, TensorData<T>& O) {
        for (std::size_t i = 0; i < flat_indices.size(); ++i)
          A.grad[flat_indices[i]] += O.grad[i];
      });
}

template <typename T>
TensorT<T> attention_scores(const TensorT<T>& q, const TensorT<T>& k, int heads, T scale_factor,
                            int blocks, const std::vector<char>* key_mask) {
  if (q.cols() != k.cols() || q.rows() != k.rows() || q.cols() % heads != 0 ||
      q.rows() % blocks != 0)
    detail::shape_error("attention_scores", q.rows(), q.cols(), k.rows(), k.cols());
  const int L = q.rows() / blocks;
  const int dh = q.cols() / heads;
  const int D = q.cols();
  if (key_mask != nullptr && static_cast<int>(key_mask->size()) != blocks * L)
    throw NumericError("attention_scores: key mask size mismatch");
  const std::vector<char> mask = key_mask ? *key_mask : std::vector<char>();
  return detail::binary_op<T>(
      "attention_scores", q, k, blocks * heads * L, L,
      [blocks, heads, L, dh, D, scale_factor, &mask](const TensorT<T>& Q, const TensorT<T>& K,
                                                     TensorT<T>& O) {
        const T* qv = Q.values().data();
        const T* kv = K.values().data();
        T* ov = O.values_mut().data();
        const T masked_score = T(-1e9);
        for (int b = 0; b < blocks; ++b) {
          const std::size_t row0 = static_cast<std::size_t>(b) * L;
          for (int h = 0; h < heads; ++h) {
            const int co = h * dh;
            T* block = ov + (static_cast<std::size_t>(b) * heads + h) * L * L;
            for (int i = 0; i < L; ++i) {
              const T* qr = qv + (row0 + i) * D + co;
              for (int j = 0; j < L; ++j) {
                if (!mask.empty() && mask[row0 + j]) {
                  block[i * L + j] = masked_score;
                  continue;
                }
                const T* kr = kv + (row0 + j) * D + co;
                T acc = 0;
                for (int c = 0; c < dh; ++c) acc += qr[c] * kr[c];
                block[i * L + j] = acc * scale_factor;
              }
            }
          }
        }
      },
      [blocks, heads, L, dh, D, scale_factor, mask](TensorData<T>& Q, TensorData<T>& K,
                                                    TensorData<T>& O, bool rq, bool rk) {
        for (int b = 0; b < blocks; ++b) {
          const std::size_t row0 = static_cast<std::size_t>(b) * L;
          for (int h = 0; h < heads; ++h) {
            const int co = h * dh;
            const T* gblock = O.grad.data() + (static_cast<std::size_t>(b) * heads + h) * L * L;
            for (int i = 0; i < L; ++i)
              for (int j = 0; j < L; ++j) {
                if (!mask.empty() && mask[row0 + j]) continue;  // constant cell
                const T g = gblock[i * L + j] * scale_factor;
                if (g == T(0)) continue;
                const T* qr = Q.v.data() + (row0 + i) * D + co;
                const T* kr = K.v.data() + (row0 + j) * D + co;
                if (rq) {
                  T* gq = Q.grad.data() + (row0 + i) * D + co;
                  for (int c = 0; c < dh; ++c) gq[c] += g * kr[c];
                }
                if (rk) {
                  T* gk = K.grad.data() + (row0 + j) * D + co;
                  for (int c = 0; c < dh; ++c) gk[c] += g * qr[c];
                }
              }
          }
        }
      });
}

template <typename T>
TensorT<T> attention_apply(const TensorT<T>& p, const TensorT<T>& v, int heads, int blocks,
                           bool canonical) {
  const int D = v.cols();
  if (v.rows() % blocks != 0 || D % heads != 0)
    detail::shape_error("attention_apply", p.rows(), p.cols(), v.rows(), v.cols());
  const int L = v.rows() / blocks;
  if (p.rows() != blocks * heads * L || p.cols() != L)
    detail::shape_error("attention_apply", p.rows(), p.cols(), v.rows(), v.cols());
  const int dh = D / heads;
  return detail::binary_op<T>(
      "attention_apply", p, v, blocks * L, D,
      [blocks, heads, L, dh, D, canonical](const TensorT<T>& P, const TensorT<T>& V,
                                           TensorT<T>& O) {
        const T* pv = P.values().data();
        const T* vv = V.values().data();
        T* ov = O.values_mut().data();
        for (int b = 0; b < blocks; ++b) {
          const std::size_t row0 = static_cast<std::size_t>(b) * L;
          for (int h = 0; h < heads; ++h) {
            const int co = h * dh;
            const T* block = pv + (static_cast<std::size_t>(b) * heads + h) * L * L;
            for (int i = 0; i < L; ++i) {
              T* orow = ov + (row0 + i) * D + co;
              if (canonical) {
                for (int c = 0; c < dh; ++c) {
                  T acc = 0;
                  for (int kk = 0; kk < L; ++kk)
                    acc += detail::grid_quantize(block[i * L + kk] * vv[(row0 + kk) * D + co + c]);
                  orow[c] = acc;
                }
              } else {
                for (int kk = 0; kk < L; ++kk) {
                  const T pik = block[i * L + kk];
                  const T* vrow = vv + (row0 + kk) * D + co;
                  for (int c = 0; c < dh; ++c) orow[c] += pik * vrow[c];
                }
              }
            }
          }
        }
      },
      [blocks, heads, L, dh, D](TensorData<T>& P, TensorData<T>& V, TensorData<T>& O, bool rp,
                                bool rv) {
        for (int b = 0; b < blocks; ++b) {
          const std::size_t row0 = static_cast<std::size_t>(b) * L;
          for (int h = 0; h < heads; ++h) {
            const int co = h * dh;
            const std::size_t p0 = (static_cast<std::size_t>(b) * heads + h) * L * L;
            for (int i = 0; i < L; ++i) {
              const T* gorow = O.grad.data() + (row0 + i) * D + co;
              for (int kk = 0; kk < L; ++kk) {
                const T* vrow = V.v.data() + (row0 + kk) * D + co;
                if (rp) {
                  T acc = 0;
                  for (int c = 0; c < dh; ++c) acc += gorow[c] * vrow[c];
                  P.grad[p0 + i * L + kk] += acc;
                }
                if (rv) {
                  const T pik = P.v[p0 + i * L + kk];
                  T* gv = V.grad.data() + (row0 + kk) * D + co;
                  for (int c = 0; c < dh; ++c) gv[c] += pik * gorow[c];
                }
              }
            }
          }
        }
      });
}

template <typename T>
TensorT<T> masked_attention(const TensorT<T>& q, const TensorT<T>& k, const TensorT<T>& v,
                            int heads, T scale_factor, int blocks,
                            const std::vector<char>* key_mask, bool canonical) {
  const int D = q.cols();
  if (k.cols() != D || v.cols() != D || k.rows() != q.rows() || v.rows() != q.rows() ||
      D % heads != 0 || q.rows() % blocks != 0)
    detail::shape_error("masked_attention", q.rows(), q.cols(), k.rows(), k.cols());
  const int L = q.rows() / blocks;
  const int dh = D / heads;
  if (key_mask != nullptr && static_cast<int>(key_mask->size()) != blocks * L)
    throw NumericError("masked_attention: key mask size mismatch");
  const std::vector<char> mask = key_mask ? *key_mask : std::vector<char>();

  Tape<T>* tape = detail::merge_tape<T>({&q, &k, &v});
  const bool req = detail::any_requires<T>({&q, &k, &v});
  const bool record = tape != nullptr && req;

  TensorT<T> out = TensorT<T>::zeros(blocks * L, D);
  // Attention weights per query row, heads side by side: probs[(b*L + i) *
  // heads*L + h*L + j]. Cached only when a backward pass will need them.
  auto probs = std::make_shared<std::vector<T>>();
  if (record) probs->assign(static_cast<std::size_t>(blocks) * L * heads * L, T(0));
  {
    const T* qv = q.values().data();
    const T* kv = k.values().data();
    const T* vv = v.values().data();
    T* ov = out.values_mut().data();
    std::vector<T> prod(D);
    std::vector<T> slab_local(static_cast<std::size_t>(heads) * L);
    for (int b = 0; b < blocks; ++b) {
      const std::size_t row0 = static_cast<std::size_t>(b) * L;
      for (int i = 0; i < L; ++i) {
        if (!mask.empty() && mask[row0 + i]) continue;  // padded query row
        T* slab = record ? probs->data() + (row0 + i) * heads * L : slab_local.data();
        if (!record) std::fill(slab_local.begin(), slab_local.end(), T(0));
        const T* qr = qv + (row0 + i) * D;
        // All head scores for one (i, j) in a single channel pass.
        for (int j = 0; j < L; ++j) {
          if (!mask.empty() && mask[row0 + j]) continue;
          const T* kr = kv + (row0 + j) * D;
          for (int c = 0; c < D; ++c) prod[c] = qr[c] * kr[c];
          for (int h = 0; h < heads; ++h) {
            T acc = 0;
            for (int c = 0; c < dh; ++c) acc += prod[h * dh + c];
            slab[h * L + j] = acc * scale_factor;
          }
        }
        for (int h = 0; h < heads; ++h) {
          T* srow = slab + h * L;
          T mx = std::numeric_limits<T>::lowest();
          for (int j = 0; j < L; ++j) {
            if (!mask.empty() && mask[row0 + j]) continue;
            mx = std::max(mx, srow[j]);
          }
          T den = 0;
          for (int j = 0; j < L; ++j) {
            if (!mask.empty() && mask[row0 + j]) {
              srow[j] = 0;
              continue;
            }
            const T e = std::exp(srow[j] - mx);
            srow[j] = canonical ? detail::grid_quantize(e) : e;
            den += srow[j];
          }
          for (int j = 0; j < L; ++j)
            if (srow[j] != T(0)) srow[j] /= den;
        }
        T* orow = ov + (row0 + i) * D;
        if (canonical) {
          for (int h = 0; h < heads; ++h)
            for (int c = 0; c < dh; ++c) {
              T acc = 0;
              for (int j = 0; j < L; ++j) {
                const T pj = slab[h * L + j];
                if (pj == T(0)) continue;
                acc += detail::grid_quantize(pj * vv[(row0 + j) * D + h * dh + c]);
              }
              orow[h * dh + c] = acc;
            }
        } else {
          for (int j = 0; j < L; ++j) {
            const T* vrow = vv + (row0 + j) * D;
            for (int h = 0; h < heads; ++h) {
              const T pj = slab[h * L + j];
              if (pj == T(0)) continue;
              for (int c = 0; c < dh; ++c) orow[h * dh + c] += pj * vrow[h * dh + c];
            }
          }
        }
      }
    }
  }
  out.check_finite("masked_attention");
  out.set_autograd(req, tape);
  if (record) {
    auto qd = q.data();
    auto kd = k.data();
    auto vd = v.data();
    auto od = out.data();
    const bool rq = q.requires_grad(), rk = k.requires_grad(), rv = v.requires_grad();
    tape->record([qd, kd, vd, od, probs, mask, blocks, heads, L, dh, D, scale_factor, rq, rk,
                  rv]() {
      if (rq) qd->ensure_grad();
      if (rk) kd->ensure_grad();
      if (rv) vd->ensure_grad();
      od->ensure_grad();
      std::vector<T> dp(static_cast<std::size_t>(heads) * L);
      std::vector<T> dot(heads);
      std::vector<T> g(heads);
      for (int b = 0; b < blocks; ++b) {
        const std::size_t row0 = static_cast<std::size_t>(b) * L;
        for (int i = 0; i < L; ++i) {
          if (!mask.empty() && mask[row0 + i]) continue;
          const T* slab = probs->data() + (row0 + i) * heads * L;
          const T* gorow = od->grad.data() + (row0 + i) * D;
          // dP = dO V^T and dV += P^T dO in one pass over keys.
          std::fill(dot.begin(), dot.end(), T(0));
          for (int j = 0; j < L; ++j) {
            const T* vrow = vd->v.data() + (row0 + j) * D;
            T* gv = rv ? vd->grad.data() + (row0 + j) * D : nullptr;
            for (int h = 0; h < heads; ++h) {
              const T pj = slab[h * L + j];
              if (pj == T(0)) {
                dp[h * L + j] = 0;
                continue;
              }
              T acc = 0;
              for (int c = 0; c < dh; ++c) acc += gorow[h * dh + c] * vrow[h * dh + c];
              dp[h * L + j] = acc;
              dot[h] += acc * pj;
              if (rv)
                for (int c = 0; c < dh; ++c) gv[h * dh + c] += pj * gorow[h * dh + c];
            }
          }
          if (!rq && !rk) continue;
          const T* qr = qd->v.data() + (row0 + i) * D;
          T* gq = rq ? qd->grad.data() + (row0 + i) * D : nullptr;
          for (int j = 0; j < L; ++j) {
            bool any = false;
            for (int h = 0; h < heads; ++h) {
              const T pj = slab[h * L + j];
              g[h] = pj == T(0) ? T(0) : (dp[h * L + j] - dot[h]) * pj * scale_factor;
              any = any || g[h] != T(0);
            }
            if (!any) continue;
            const T* kr = kd->v.data() + (row0 + j) * D;
            if (rq)
              for (int h = 0; h < heads; ++h)
                for (int c = 0; c < dh; ++c) gq[h * dh + c] += g[h] * kr[h * dh + c];
            if (rk) {
              T* gk = kd->grad.data() + (row0 + j) * D;
              for (int h = 0; h < heads; ++h)
                for (int c = 0; c < dh; ++c) gk[h * dh + c] += g[h] * qr[h * dh + c];
            }
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> reshape(const TensorT<T>& a, int rows, int cols) {
  if (static_cast<std::size_t>(rows) * cols != a.size())
    detail::shape_error("reshape", a.rows(), a.cols(), rows, cols);
  return detail::unary_op<T>(
      "reshape", a, rows, cols,
      [](const TensorT<T>& A, TensorT<T>& O) {
        std::copy(A.values().begin(), A.values().end(), O.values_mut().begin());
      },
      [](TensorData<T>& A, TensorData<T>& O) {
        for (std::size_t i = 0; i < O.size(); ++i) A.grad[i] += O.grad[i];
      });
}

template <typename T>
TensorT<T> gather_rows(const TensorT<T>& a, const std::vector<int>& row_indices) {
  for (int r : row_indices)
    if (r < 0 || r >= a.rows()) throw NumericError("gather_rows: row index out of range");
  const int m = a.cols();
  return detail::unary_op<T>(
      "gather_rows", a, static_cast<int>(row_indices.size()), m,
      [&row_indices, m](const TensorT<T>& A, TensorT<T>& O) {
        for (std::size_t i = 0; i < row_indices.size(); ++i)
          std::copy(A.values().begin() + static_cast<std::size_t>(row_indices[i]) * m,
                    A.values().begin() + static_cast<std::size_t>(row_indices[i] + 1) * m,
                    O.values_mut().begin() + i * m);
      },
      [row_indices, m](TensorData<T>& A, TensorData<T>& O) {
        for (std::size_t i = 0; i < row_indices.size(); ++i)
          for (int j = 0; j < m; ++j)
            A.grad[static_cast<std::size_t>(row_indices[i]) * m + j] += O.grad[i * m + j];
      });
}

template <typename T>
void backward(const TensorT<T>& loss) {
  if (loss.size() != 1) throw NumericError("backward: loss must be scalar");
  if (loss.tape() == nullptr) throw NumericError("backward: loss has no tape");
  loss.data()->ensure_grad();
  loss.data()->grad[0] = T(1);
  loss.tape()->run_backward();
}

}  // namespace twix
