#include "gardner/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "gardner/check.hpp"

namespace gardner {

namespace {

// Small enough that normalized batch variance sits within 1e-5 of 1 even for
// low-variance channels; the double-precision inverse sqrt keeps it stable.
constexpr double kBnEps = 1e-8;

// C[m x n] += A[m x k] * B[k x n]. Accumulation order over k is fixed per
// output element, so results do not depend on the batch extent n.
template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    T* ci = c + static_cast<std::size_t>(i) * n;
    const T* ai = a + static_cast<std::size_t>(i) * k;
    for (int l = 0; l < k; ++l) {
      const T av = ai[l];
      if (av == T(0)) continue;
      const T* bl = b + static_cast<std::size_t>(l) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

// C[m x n] += A[m x k] * B[n x k]^T (rows of both operands are contiguous).
template <typename T>
void matmul_nt(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const T* ai = a + static_cast<std::size_t>(i) * k;
    T* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const T* bj = b + static_cast<std::size_t>(j) * k;
      T acc = T(0);
      for (int l = 0; l < k; ++l) acc += ai[l] * bj[l];
      ci[j] += acc;
    }
  }
}

// C[m x n] += A[k x m]^T * B[k x n].
template <typename T>
void matmul_tn(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int l = 0; l < k; ++l) {
    const T* al = a + static_cast<std::size_t>(l) * m;
    const T* bl = b + static_cast<std::size_t>(l) * n;
    for (int i = 0; i < m; ++i) {
      const T av = al[i];
      if (av == T(0)) continue;
      T* ci = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

// x is [in_ch][batch * in_w^2]; col is [in_ch*9][batch * out_w^2].
template <typename T>
void im2col(const T* x, int in_ch, int in_w, int out_w, int pad, int batch, T* col) {
  const int in_hw = in_w * in_w;
  const int out_hw = out_w * out_w;
  const std::size_t cols = static_cast<std::size_t>(batch) * out_hw;
  for (int ic = 0; ic < in_ch; ++ic) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = col + (static_cast<std::size_t>(ic) * 9 + ky * 3 + kx) * cols;
        const T* src = x + static_cast<std::size_t>(ic) * batch * in_hw;
        for (int b = 0; b < batch; ++b) {
          for (int oy = 0; oy < out_w; ++oy) {
            const int iy = oy + ky - pad;
            for (int ox = 0; ox < out_w; ++ox) {
              const int ix = ox + kx - pad;
              const std::size_t d = static_cast<std::size_t>(b) * out_hw + oy * out_w + ox;
              if (iy < 0 || iy >= in_w || ix < 0 || ix >= in_w) {
                dst[d] = T(0);
              } else {
                dst[d] = src[static_cast<std::size_t>(b) * in_hw + iy * in_w + ix];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int in_ch, int in_w, int out_w, int pad, int batch, T* x) {
  const int in_hw = in_w * in_w;
  const int out_hw = out_w * out_w;
  const std::size_t cols = static_cast<std::size_t>(batch) * out_hw;
  for (int ic = 0; ic < in_ch; ++ic) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = col + (static_cast<std::size_t>(ic) * 9 + ky * 3 + kx) * cols;
        T* dst = x + static_cast<std::size_t>(ic) * batch * in_hw;
        for (int b = 0; b < batch; ++b) {
          for (int oy = 0; oy < out_w; ++oy) {
            const int iy = oy + ky - pad;
            if (iy < 0 || iy >= in_w) continue;
            for (int ox = 0; ox < out_w; ++ox) {
              const int ix = ox + kx - pad;
              if (ix < 0 || ix >= in_w) continue;
              dst[static_cast<std::size_t>(b) * in_hw + iy * in_w + ix] +=
                  src[static_cast<std::size_t>(b) * out_hw + oy * out_w + ox];
            }
          }
        }
      }
    }
  }
}

// Normalizes `rows` rows of `cols` values in place. In train mode the batch
// statistics are written to mean/var; in eval mode the provided running
// stats are used. xhat receives the pre-scale normalized values.
template <typename T>
void batchnorm_forward(T* z, int rows, std::size_t cols, const T* gamma, const T* beta,
                       const T* run_mean, const T* run_var, bool train, T* mean_out, T* var_out,
                       T* xhat) {
  for (int r = 0; r < rows; ++r) {
    T* row = z + r * cols;
    T* xr = xhat + r * cols;
    T mean, var;
    if (train) {
      double sum = 0.0;
      for (std::size_t j = 0; j < cols; ++j) sum += row[j];
      mean = static_cast<T>(sum / static_cast<double>(cols));
      double sq = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        const double d = row[j] - mean;
        sq += d * d;
      }
      var = static_cast<T>(sq / static_cast<double>(cols));
      mean_out[r] = mean;
      var_out[r] = var;
    } else {
      mean = run_mean[r];
      var = run_var[r];
    }
    const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(var) + kBnEps));
    const T g = gamma[r], bt = beta[r];
    for (std::size_t j = 0; j < cols; ++j) {
      xr[j] = (row[j] - mean) * inv;
      row[j] = g * xr[j] + bt;
    }
  }
}

template <typename T>
void relu_inplace(T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > T(0) ? x[i] : T(0);
}

}  // namespace

template <typename T>
Network<T>::Network(int channels, int hidden, int actions, double dropout)
    : channels_(channels), hidden_(hidden), actions_(actions), dropout_(dropout) {
  GARDNER_CHECK(channels >= 1 && hidden >= 1 && actions >= 1);
  GARDNER_CHECK(dropout >= 0.0 && dropout < 1.0);
  conv_ = {ConvDims{1, channels, 5, 5, 1}, ConvDims{channels, channels, 5, 5, 1},
           ConvDims{channels, channels, 5, 3, 0}, ConvDims{channels, channels, 3, 1, 0}};
  build_layout();
  params_.assign(trainable_count(channels, hidden, actions), T(0));
  running_.assign(running_count(channels, hidden), T(0));
  // Identity transform: mean 0, variance 1, gamma 1, beta 0.
  for (const auto& span : running_layout_) {
    if (span.name.find(".var") != std::string::npos) {
      std::fill_n(running_.begin() + span.offset, span.size, T(1));
    }
  }
  for (const auto& span : layout_) {
    if (span.name.find(".gamma") != std::string::npos) {
      std::fill_n(params_.begin() + span.offset, span.size, T(1));
    }
  }
}

template <typename T>
void Network<T>::build_layout() {
  layout_.clear();
  running_layout_.clear();
  std::size_t at = 0;
  auto add = [&](const std::string& name, std::size_t size) {
    layout_.push_back(TensorSpan{name, at, size});
    at += size;
  };
  for (int i = 0; i < 4; ++i) {
    const std::string base = "conv" + std::to_string(i + 1);
    add(base + ".kernel", static_cast<std::size_t>(conv_[i].out_ch) * conv_[i].in_ch * 9);
    add(base + ".bn.gamma", conv_[i].out_ch);
    add(base + ".bn.beta", conv_[i].out_ch);
  }
  const int fc_in[2] = {channels_, hidden_};
  for (int i = 0; i < 2; ++i) {
    const std::string base = "fc" + std::to_string(i + 1);
    add(base + ".weight", static_cast<std::size_t>(hidden_) * fc_in[i]);
    add(base + ".bias", hidden_);
    add(base + ".bn.gamma", hidden_);
    add(base + ".bn.beta", hidden_);
  }
  add("policy.weight", static_cast<std::size_t>(actions_) * hidden_);
  add("policy.bias", actions_);
  add("value.weight", hidden_);
  add("value.bias", 1);

  std::size_t rat = 0;
  auto radd = [&](const std::string& name, std::size_t size) {
    running_layout_.push_back(TensorSpan{name, rat, size});
    rat += size;
  };
  for (int i = 0; i < 4; ++i) {
    const std::string base = "conv" + std::to_string(i + 1) + ".bn";
    radd(base + ".mean", conv_[i].out_ch);
    radd(base + ".var", conv_[i].out_ch);
  }
  for (int i = 0; i < 2; ++i) {
    const std::string base = "fc" + std::to_string(i + 1) + ".bn";
    radd(base + ".mean", hidden_);
    radd(base + ".var", hidden_);
  }
}

template <typename T>
std::size_t Network<T>::trainable_count(int c, int h, int a) {
  const std::size_t cc = static_cast<std::size_t>(c);
  const std::size_t hh = static_cast<std::size_t>(h);
  const std::size_t aa = static_cast<std::size_t>(a);
  return 9 * cc + 27 * cc * cc + 8 * cc  // conv kernels + conv BN
         + hh * cc + 3 * hh              // fc1
         + hh * hh + 3 * hh              // fc2
         + aa * hh + aa                  // policy head
         + hh + 1;                       // value head
}

template <typename T>
std::size_t Network<T>::running_count(int c, int h) {
  return 8 * static_cast<std::size_t>(c) + 4 * static_cast<std::size_t>(h);
}

template <typename T>
std::span<T> Network<T>::tensor(const std::string& name) {
  for (const auto& span : layout_) {
    if (span.name == name) return {params_.data() + span.offset, span.size};
  }
  for (const auto& span : running_layout_) {
    if (span.name == name) return {running_.data() + span.offset, span.size};
  }
  GARDNER_CHECK_MSG(false, "unknown tensor " + name);
  return {};
}

template <typename T>
std::span<const T> Network<T>::tensor(const std::string& name) const {
  return const_cast<Network*>(this)->tensor(name);
}

template <typename T>
Network<T> Network<T>::initialized(int channels, int hidden, int actions, double dropout,
                                   std::uint64_t seed) {
  Network net(channels, hidden, actions, dropout);
  Rng rng(seed);
  auto he_fill = [&](const std::string& name, int fan_in) {
    auto w = net.tensor(name);
    const double stddev = std::sqrt(2.0 / fan_in);
    for (auto& v : w) v = static_cast<T>(rng.next_normal() * stddev);
  };
  he_fill("conv1.kernel", 9);
  he_fill("conv2.kernel", 9 * channels);
  he_fill("conv3.kernel", 9 * channels);
  he_fill("conv4.kernel", 9 * channels);
  he_fill("fc1.weight", channels);
  he_fill("fc2.weight", hidden);
  he_fill("policy.weight", hidden);
  he_fill("value.weight", hidden);
  // King squares put +-60 into the input plane, which would blow the initial
  // logit spread up to tens and collapse the masked softmax onto a handful
  // of moves. A small head gain keeps the starting policy near uniform.
  for (auto& w : net.tensor("policy.weight")) w = static_cast<T>(w * 0.01);
  for (auto& w : net.tensor("value.weight")) w = static_cast<T>(w * 0.01);
  return net;
}

template <typename T>
std::span<const T> Network<T>::p(int tensor_index) const {
  const auto& span = layout_[tensor_index];
  return {params_.data() + span.offset, span.size};
}

// Trainable tensor indices, fixed by build_layout order.
namespace {
constexpr int kConvKernel[4] = {0, 3, 6, 9};
constexpr int kConvGamma[4] = {1, 4, 7, 10};
constexpr int kConvBeta[4] = {2, 5, 8, 11};
constexpr int kFcWeight[2] = {12, 16};
constexpr int kFcBias[2] = {13, 17};
constexpr int kFcGamma[2] = {14, 18};
constexpr int kFcBeta[2] = {15, 19};
constexpr int kPolicyWeight = 20, kPolicyBias = 21, kValueWeight = 22, kValueBias = 23;
}  // namespace

template <typename T>
void Network<T>::forward(std::span<const T> planes, int batch, Mode mode, Rng* rng,
                         Cache& cache) const {
  GARDNER_CHECK(batch >= 1);
  GARDNER_CHECK(planes.size() == static_cast<std::size_t>(batch) * kNumSquares);
  const bool train = mode == Mode::Train;
  GARDNER_CHECK_MSG(!train || batch >= 2, "train-mode batch norm needs batch >= 2");
  GARDNER_CHECK_MSG(!train || dropout_ == 0.0 || rng != nullptr,
                    "train-mode dropout needs an rng");

  cache.batch = batch;
  cache.mode = mode;
  cache.x0.assign(planes.begin(), planes.end());

  const T* run = running_.data();
  std::size_t run_at = 0;

  std::vector<T> col;
  const T* x = cache.x0.data();
  for (int i = 0; i < 4; ++i) {
    const ConvDims& d = conv_[i];
    const std::size_t cols = static_cast<std::size_t>(batch) * d.out_w * d.out_w;
    col.assign(static_cast<std::size_t>(d.in_ch) * 9 * cols, T(0));
    im2col(x, d.in_ch, d.in_w, d.out_w, d.pad, batch, col.data());
    auto& y = cache.conv_y[i];
    y.assign(static_cast<std::size_t>(d.out_ch) * cols, T(0));
    matmul(p(kConvKernel[i]).data(), col.data(), y.data(), d.out_ch, d.in_ch * 9,
           static_cast<int>(cols));
    cache.conv_xhat[i].assign(y.size(), T(0));
    cache.conv_mean[i].assign(d.out_ch, T(0));
    cache.conv_var[i].assign(d.out_ch, T(0));
    batchnorm_forward(y.data(), d.out_ch, cols, p(kConvGamma[i]).data(), p(kConvBeta[i]).data(),
                      run + run_at, run + run_at + d.out_ch, train, cache.conv_mean[i].data(),
                      cache.conv_var[i].data(), cache.conv_xhat[i].data());
    run_at += 2 * static_cast<std::size_t>(d.out_ch);
    relu_inplace(y.data(), y.size());
    x = y.data();
  }

  // conv4 output is [C][batch]; the fully connected stack keeps features in
  // rows and batch in columns.
  const T keep = static_cast<T>(1.0 - dropout_);
  const int fc_in[2] = {channels_, hidden_};
  for (int i = 0; i < 2; ++i) {
    auto& y = cache.fc_y[i];
    y.assign(static_cast<std::size_t>(hidden_) * batch, T(0));
    matmul(p(kFcWeight[i]).data(), x, y.data(), hidden_, fc_in[i], batch);
    const T* bias = p(kFcBias[i]).data();
    for (int r = 0; r < hidden_; ++r) {
      T* row = y.data() + static_cast<std::size_t>(r) * batch;
      for (int b = 0; b < batch; ++b) row[b] += bias[r];
    }
    cache.fc_xhat[i].assign(y.size(), T(0));
    cache.fc_mean[i].assign(hidden_, T(0));
    cache.fc_var[i].assign(hidden_, T(0));
    batchnorm_forward(y.data(), hidden_, static_cast<std::size_t>(batch), p(kFcGamma[i]).data(),
                      p(kFcBeta[i]).data(), run + run_at, run + run_at + hidden_, train,
                      cache.fc_mean[i].data(), cache.fc_var[i].data(), cache.fc_xhat[i].data());
    run_at += 2 * static_cast<std::size_t>(hidden_);
    relu_inplace(y.data(), y.size());
    auto& mask = cache.drop_mask[i];
    if (train && dropout_ > 0.0) {
      mask.assign(y.size(), 1);
      for (std::size_t j = 0; j < y.size(); ++j) {
        if (rng->next_double() < dropout_) {
          mask[j] = 0;
          y[j] = T(0);
        } else {
          y[j] /= keep;
        }
      }
    } else {
      mask.clear();
    }
    x = y.data();
  }
}

namespace {

// The trunk keeps features in [hidden][batch] layout; head dot products read
// one column. Gathering it into contiguous storage first keeps the reduction
// code (and so the rounding) identical for every batch size.
template <typename T>
void gather_column(const std::vector<T>& rows, int batch, int sample, int n, std::vector<T>& out) {
  out.resize(n);
  for (int j = 0; j < n; ++j) out[j] = rows[static_cast<std::size_t>(j) * batch + sample];
}

template <typename T>
T dot_plus(const T* a, const T* b, int n, T bias) {
  T acc = bias;
  for (int j = 0; j < n; ++j) acc += a[j] * b[j];
  return acc;
}

}  // namespace

template <typename T>
T Network<T>::value(const Cache& cache, int sample) const {
  std::vector<T> h;
  gather_column(cache.fc_y[1], cache.batch, sample, hidden_, h);
  return dot_plus(p(kValueWeight).data(), h.data(), hidden_, p(kValueBias)[0]);
}

template <typename T>
void Network<T>::policy_logits(const Cache& cache, int sample,
                               std::span<const std::uint16_t> actions, std::span<T> out) const {
  GARDNER_CHECK(out.size() == actions.size());
  const auto w = p(kPolicyWeight);
  const auto bias = p(kPolicyBias);
  std::vector<T> h;
  gather_column(cache.fc_y[1], cache.batch, sample, hidden_, h);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const std::size_t a = actions[i];
    out[i] = dot_plus(w.data() + a * hidden_, h.data(), hidden_, bias[a]);
  }
}

template <typename T>
std::vector<T> Network<T>::policy_logits_full(const Cache& cache, int sample) const {
  std::vector<std::uint16_t> all(actions_);
  for (int a = 0; a < actions_; ++a) all[a] = static_cast<std::uint16_t>(a);
  std::vector<T> out(actions_);
  policy_logits(cache, sample, all, out);
  return out;
}

namespace {

// dx for a train-mode batch-norm row given dy arriving in `dpost`.
template <typename T>
void bn_backward_row(const T* dpost, const T* xhat, T gamma, T var, std::size_t n, T* dx,
                     T* dgamma, T* dbeta) {
  double sum_dy = 0.0, sum_dy_xhat = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    sum_dy += dpost[j];
    sum_dy_xhat += static_cast<double>(dpost[j]) * xhat[j];
  }
  *dgamma += static_cast<T>(sum_dy_xhat);
  *dbeta += static_cast<T>(sum_dy);
  const double inv = 1.0 / std::sqrt(static_cast<double>(var) + kBnEps);
  const double scale = static_cast<double>(gamma) * inv / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    dx[j] = static_cast<T>(scale * (static_cast<double>(n) * dpost[j] - sum_dy -
                                    static_cast<double>(xhat[j]) * sum_dy_xhat));
  }
}

template <typename T>
void bn_backward_row_eval(const T* dpost, const T* xhat, T gamma, T run_var, std::size_t n, T* dx,
                          T* dgamma, T* dbeta) {
  double sum_dy = 0.0, sum_dy_xhat = 0.0;
  const T scale = static_cast<T>(static_cast<double>(gamma) /
                                 std::sqrt(static_cast<double>(run_var) + kBnEps));
  for (std::size_t j = 0; j < n; ++j) {
    sum_dy += dpost[j];
    sum_dy_xhat += static_cast<double>(dpost[j]) * xhat[j];
    dx[j] = scale * dpost[j];
  }
  *dgamma += static_cast<T>(sum_dy_xhat);
  *dbeta += static_cast<T>(sum_dy);
}

}  // namespace

template <typename T>
void Network<T>::backward(const Cache& cache, std::span<const std::vector<LogitGrad>> dlogits,
                          std::span<const T> dvalue, std::vector<T>& grads) const {
  const int batch = cache.batch;
  GARDNER_CHECK(dlogits.size() == static_cast<std::size_t>(batch));
  GARDNER_CHECK(dvalue.size() == static_cast<std::size_t>(batch));
  grads.assign(params_.size(), T(0));
  auto g = [&](int tensor_index) -> T* { return grads.data() + layout_[tensor_index].offset; };

  const bool train = cache.mode == Mode::Train;
  const T keep = static_cast<T>(1.0 - dropout_);

  // Heads into the trunk output.
  std::vector<T> dh(static_cast<std::size_t>(hidden_) * batch, T(0));
  {
    const auto wp = p(kPolicyWeight);
    const auto wv = p(kValueWeight);
    T* gwp = g(kPolicyWeight);
    T* gbp = g(kPolicyBias);
    T* gwv = g(kValueWeight);
    T* gbv = g(kValueBias);
    const T* h = cache.fc_y[1].data();
    for (int b = 0; b < batch; ++b) {
      const T dv = dvalue[b];
      if (dv != T(0)) {
        gbv[0] += dv;
        for (int j = 0; j < hidden_; ++j) {
          const std::size_t hj = static_cast<std::size_t>(j) * batch + b;
          gwv[j] += dv * h[hj];
          dh[hj] += dv * wv[j];
        }
      }
      for (const LogitGrad& lg : dlogits[b]) {
        const std::size_t a = lg.action;
        const T dl = lg.grad;
        gbp[a] += dl;
        const T* wa = wp.data() + a * hidden_;
        T* gwa = gwp + a * hidden_;
        for (int j = 0; j < hidden_; ++j) {
          const std::size_t hj = static_cast<std::size_t>(j) * batch + b;
          gwa[j] += dl * h[hj];
          dh[hj] += dl * wa[j];
        }
      }
    }
  }

  // Fully connected blocks, last to first.
  const int fc_in[2] = {channels_, hidden_};
  std::vector<T> dx_next;
  for (int i = 1; i >= 0; --i) {
    const std::size_t n = static_cast<std::size_t>(batch);
    auto& y = cache.fc_y[i];
    std::vector<T>& dy = dh;  // gradient wrt this block's output
    // dropout + relu
    const auto& mask = cache.drop_mask[i];
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (!mask.empty()) {
        dy[j] = mask[j] ? dy[j] / keep : T(0);
      }
      if (y[j] <= T(0)) dy[j] = T(0);
    }
    // batch norm
    std::vector<T> dz(y.size(), T(0));
    T* dgamma = g(kFcGamma[i]);
    T* dbeta = g(kFcBeta[i]);
    const auto gamma = p(kFcGamma[i]);
    for (int r = 0; r < hidden_; ++r) {
      const std::size_t at = static_cast<std::size_t>(r) * n;
      if (train) {
        bn_backward_row(dy.data() + at, cache.fc_xhat[i].data() + at, gamma[r],
                        cache.fc_var[i][r], n, dz.data() + at, dgamma + r, dbeta + r);
      } else {
        const T rv = running_[running_layout_[8 + 2 * i + 1].offset + r];
        bn_backward_row_eval(dy.data() + at, cache.fc_xhat[i].data() + at, gamma[r], rv, n,
                             dz.data() + at, dgamma + r, dbeta + r);
      }
    }
    // linear: z = W x + bias
    const T* xin = i == 0 ? cache.conv_y[3].data() : cache.fc_y[0].data();
    matmul_nt(dz.data(), xin, g(kFcWeight[i]), hidden_, batch, fc_in[i]);
    T* gb = g(kFcBias[i]);
    for (int r = 0; r < hidden_; ++r) {
      const T* row = dz.data() + static_cast<std::size_t>(r) * n;
      T acc = T(0);
      for (std::size_t b = 0; b < n; ++b) acc += row[b];
      gb[r] += acc;
    }
    dx_next.assign(static_cast<std::size_t>(fc_in[i]) * batch, T(0));
    matmul_tn(p(kFcWeight[i]).data(), dz.data(), dx_next.data(), fc_in[i], hidden_, batch);
    dh = dx_next;
  }

  // Convolution blocks, last to first.
  std::vector<T> col, dcol;
  for (int i = 3; i >= 0; --i) {
    const ConvDims& d = conv_[i];
    const std::size_t cols = static_cast<std::size_t>(batch) * d.out_w * d.out_w;
    std::vector<T>& dy = dh;
    const auto& y = cache.conv_y[i];
    GARDNER_CHECK(dy.size() == y.size());
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[j] <= T(0)) dy[j] = T(0);
    }
    std::vector<T> dz(y.size(), T(0));
    T* dgamma = g(kConvGamma[i]);
    T* dbeta = g(kConvBeta[i]);
    const auto gamma = p(kConvGamma[i]);
    for (int r = 0; r < d.out_ch; ++r) {
      const std::size_t at = static_cast<std::size_t>(r) * cols;
      if (train) {
        bn_backward_row(dy.data() + at, cache.conv_xhat[i].data() + at, gamma[r],
                        cache.conv_var[i][r], cols, dz.data() + at, dgamma + r, dbeta + r);
      } else {
        const T rv = running_[running_layout_[2 * i + 1].offset + r];
        bn_backward_row_eval(dy.data() + at, cache.conv_xhat[i].data() + at, gamma[r], rv, cols,
                             dz.data() + at, dgamma + r, dbeta + r);
      }
    }
    // kernel grad needs the layer input as columns
    const T* xin = i == 0 ? cache.x0.data() : cache.conv_y[i - 1].data();
    col.assign(static_cast<std::size_t>(d.in_ch) * 9 * cols, T(0));
    im2col(xin, d.in_ch, d.in_w, d.out_w, d.pad, batch, col.data());
    matmul_nt(dz.data(), col.data(), g(kConvKernel[i]), d.out_ch, static_cast<int>(cols),
              d.in_ch * 9);
    if (i > 0) {
      dcol.assign(col.size(), T(0));
      matmul_tn(p(kConvKernel[i]).data(), dz.data(), dcol.data(), d.in_ch * 9, d.out_ch,
                static_cast<int>(cols));
      dx_next.assign(static_cast<std::size_t>(d.in_ch) * batch * d.in_w * d.in_w, T(0));
      col2im(dcol.data(), d.in_ch, d.in_w, d.out_w, d.pad, batch, dx_next.data());
      dh = dx_next;
    }
  }
}

template <typename T>
void Network<T>::commit_running_stats(const Cache& cache, T momentum) {
  GARDNER_CHECK_MSG(cache.mode == Mode::Train, "running stats come from train-mode batches");
  const T one_minus = T(1) - momentum;
  std::size_t at = 0;
  auto update = [&](const std::vector<T>& mean, const std::vector<T>& var, std::size_t n) {
    // Unbiased variance goes into the running estimate.
    const double correction = n > 1 ? static_cast<double>(n) / (static_cast<double>(n) - 1.0) : 1.0;
    for (std::size_t r = 0; r < mean.size(); ++r) {
      running_[at + r] = momentum * running_[at + r] + one_minus * mean[r];
    }
    at += mean.size();
    for (std::size_t r = 0; r < var.size(); ++r) {
      running_[at + r] =
          momentum * running_[at + r] + one_minus * static_cast<T>(var[r] * correction);
    }
    at += var.size();
  };
  for (int i = 0; i < 4; ++i) {
    const std::size_t n = static_cast<std::size_t>(cache.batch) * conv_[i].out_w * conv_[i].out_w;
    update(cache.conv_mean[i], cache.conv_var[i], n);
  }
  for (int i = 0; i < 2; ++i) {
    update(cache.fc_mean[i], cache.fc_var[i], cache.batch);
  }
}

template class Network<float>;
template class Network<double>;

NetEvaluator::Result NetEvaluator::evaluate(std::span<const float> plane,
                                            std::span<const std::uint16_t> legal) {
  net_->forward(plane, 1, Network<float>::Mode::Eval, nullptr, cache_);
  Result out;
  out.value = net_->value(cache_, 0);
  out.legal_logits.resize(legal.size());
  net_->policy_logits(cache_, 0, legal, out.legal_logits);
  return out;
}

void SgdOptimizer::step(std::vector<float>& params, const std::vector<float>& grads) {
  GARDNER_CHECK(params.size() == grads.size());
  const float rate = static_cast<float>(lr);
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= rate * grads[i];
}

void AdamOptimizer::step(std::vector<float>& params, const std::vector<float>& grads) {
  GARDNER_CHECK(params.size() == grads.size());
  if (m.empty()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
  }
  GARDNER_CHECK(m.size() == params.size());
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double gi = grads[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
    v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    params[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps));
  }
}

}  // namespace gardner
