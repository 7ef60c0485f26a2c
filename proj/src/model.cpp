#include "twix/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "twix/errors.hpp"
#include "twix/rng.hpp"

namespace twix {

namespace {

constexpr double kMaskBias = -1e9;
constexpr double kMinMaxEps = 1e-3;

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initial values.
std::vector<double> init_matrix(Rng& rng, int rows, int cols, int fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(static_cast<std::size_t>(rows) * cols);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return v;
}

Tensor make_param(Tape<double>* tape, int rows, int cols, std::vector<double> values) {
  if (tape != nullptr) return Tensor::parameter(tape, rows, cols, std::move(values));
  return Tensor::from_values(rows, cols, std::move(values));
}

EncoderLayerW<double> init_layer(const TwixHyper& h, Rng& rng, Tape<double>* tape) {
  EncoderLayerW<double> l;
  const int d = h.dim;
  l.ln1_gain = make_param(tape, 1, d, std::vector<double>(d, 1.0));
  l.ln1_bias = make_param(tape, 1, d, std::vector<double>(d, 0.0));
  l.wq = make_param(tape, d, d, init_matrix(rng, d, d, d));
  l.bq = make_param(tape, 1, d, std::vector<double>(d, 0.0));
  l.wk = make_param(tape, d, d, init_matrix(rng, d, d, d));
  l.bk = make_param(tape, 1, d, std::vector<double>(d, 0.0));
  l.wv = make_param(tape, d, d, init_matrix(rng, d, d, d));
  l.bv = make_param(tape, 1, d, std::vector<double>(d, 0.0));
  l.wo = make_param(tape, d, d, init_matrix(rng, d, d, d));
  l.bo = make_param(tape, 1, d, std::vector<double>(d, 0.0));
  l.ln2_gain = make_param(tape, 1, d, std::vector<double>(d, 1.0));
  l.ln2_bias = make_param(tape, 1, d, std::vector<double>(d, 0.0));
  l.w1 = make_param(tape, d, h.ffn_dim, init_matrix(rng, d, h.ffn_dim, d));
  l.b1 = make_param(tape, 1, h.ffn_dim, std::vector<double>(h.ffn_dim, 0.0));
  l.w2 = make_param(tape, h.ffn_dim, d, init_matrix(rng, h.ffn_dim, d, h.ffn_dim));
  l.b2 = make_param(tape, 1, d, std::vector<double>(d, 0.0));
  return l;
}

}  // namespace

template <typename T>
std::vector<TensorT<T>> TwixWeightsT<T>::params() const {
  std::vector<TensorT<T>> out{w_in, b_in, cls};
  auto push_layer = [&out](const EncoderLayerW<T>& l) {
    out.insert(out.end(), {l.ln1_gain, l.ln1_bias, l.wq, l.bq, l.wk, l.bk, l.wv, l.bv, l.wo,
                           l.bo, l.ln2_gain, l.ln2_bias, l.w1, l.b1, l.w2, l.b2});
  };
  for (const auto& l : intra) push_layer(l);
  for (const auto& l : inter) push_layer(l);
  out.push_back(w_head);
  out.push_back(b_head);
  return out;
}

template std::vector<Tensor> TwixWeightsT<double>::params() const;
template std::vector<TensorF> TwixWeightsT<float>::params() const;

TwixWeights init_twix_weights(const TwixHyper& hyper, std::uint64_t seed, Tape<double>* tape) {
  if (hyper.dim % hyper.heads != 0)
    throw NumericError("twix hyper: dim must be divisible by heads");
  Rng rng(seed);
  TwixWeights w;
  w.hyper = hyper;
  w.w_in = make_param(tape, 4, hyper.dim, init_matrix(rng, 4, hyper.dim, 4));
  w.b_in = make_param(tape, 1, hyper.dim, std::vector<double>(hyper.dim, 0.0));
  w.cls = make_param(tape, 1, hyper.dim, init_matrix(rng, 1, hyper.dim, hyper.dim));
  for (int i = 0; i < hyper.intra_layers; ++i) w.intra.push_back(init_layer(hyper, rng, tape));
  for (int i = 0; i < hyper.inter_layers; ++i) w.inter.push_back(init_layer(hyper, rng, tape));
  w.w_head = make_param(tape, hyper.dim, 1, init_matrix(rng, hyper.dim, 1, hyper.dim));
  w.b_head = make_param(tape, 1, 1, std::vector<double>(1, 0.0));
  return w;
}

// ---- checkpoint ------------------------------------------------------------

namespace {

void put_i32(std::string& out, std::int32_t v) {
  char b[4];
  b[0] = static_cast<char>(v & 0xff);
  b[1] = static_cast<char>((v >> 8) & 0xff);
  b[2] = static_cast<char>((v >> 16) & 0xff);
  b[3] = static_cast<char>((v >> 24) & 0xff);
  out.append(b, 4);
}

std::int32_t get_i32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw DataError("checkpoint: truncated file");
  const auto b = reinterpret_cast<const unsigned char*>(in.data() + pos);
  pos += 4;
  return static_cast<std::int32_t>(b[0]) | (static_cast<std::int32_t>(b[1]) << 8) |
         (static_cast<std::int32_t>(b[2]) << 16) | (static_cast<std::int32_t>(b[3]) << 24);
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.append(b, 8);
}

double get_f64(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw DataError("checkpoint: truncated file");
  const auto b = reinterpret_cast<const unsigned char*>(in.data() + pos);
  pos += 8;
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_checkpoint(const TwixWeights& weights, const std::string& path) {
  std::string out;
  out.append("TWX1", 4);
  put_i32(out, weights.hyper.dim);
  put_i32(out, weights.hyper.heads);
  put_i32(out, weights.hyper.ffn_dim);
  put_i32(out, weights.hyper.intra_layers);
  put_i32(out, weights.hyper.inter_layers);
  for (const Tensor& t : weights.params()) {
    put_i32(out, 2);
    put_i32(out, t.rows());
    put_i32(out, t.cols());
    for (double v : t.values()) put_f64(out, v);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write checkpoint: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

TwixWeights load_checkpoint(const std::string& path, Tape<double>* tape) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint: " + path);
  std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (in.size() < 4 || in.compare(0, 4, "TWX1") != 0)
    throw DataError("checkpoint " + path + ": bad magic, expected TWX1");
  std::size_t pos = 4;
  TwixHyper hyper;
  hyper.dim = get_i32(in, pos);
  hyper.heads = get_i32(in, pos);
  hyper.ffn_dim = get_i32(in, pos);
  hyper.intra_layers = get_i32(in, pos);
  hyper.inter_layers = get_i32(in, pos);
  if (hyper.dim <= 0 || hyper.heads <= 0 || hyper.ffn_dim <= 0 || hyper.intra_layers < 0 ||
      hyper.inter_layers < 0 || hyper.dim % hyper.heads != 0)
    throw DataError("checkpoint " + path + ": invalid hyper-parameters");

  // Template weights define the expected shapes; then overwrite values.
  TwixWeights w = init_twix_weights(hyper, 0, tape);
  std::vector<Tensor> params = w.params();
  for (Tensor& t : params) {
    const std::int32_t rank = get_i32(in, pos);
    if (rank != 2) throw DataError("checkpoint " + path + ": unexpected tensor rank");
    const std::int32_t rows = get_i32(in, pos);
    const std::int32_t cols = get_i32(in, pos);
    if (rows != t.rows() || cols != t.cols())
      throw DataError("checkpoint " + path + ": tensor shape mismatch (" + std::to_string(rows) +
                      "," + std::to_string(cols) + ") vs expected (" + std::to_string(t.rows()) +
                      "," + std::to_string(t.cols()) + ")");
    for (double& v : t.values_mut()) v = get_f64(in, pos);
    t.check_finite("load_checkpoint");
  }
  if (pos != in.size()) throw DataError("checkpoint " + path + ": trailing bytes");
  return w;
}

TwixWeightsF to_float(const TwixWeights& weights) {
  TwixWeightsF out;
  out.hyper = weights.hyper;
  auto cast = [](const Tensor& t) {
    std::vector<float> v(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) v[i] = static_cast<float>(t.values()[i]);
    return TensorF::from_values(t.rows(), t.cols(), std::move(v));
  };
  out.w_in = cast(weights.w_in);
  out.b_in = cast(weights.b_in);
  out.cls = cast(weights.cls);
  auto cast_layer = [&cast](const EncoderLayerW<double>& l) {
    EncoderLayerW<float> o;
    o.ln1_gain = cast(l.ln1_gain);
    o.ln1_bias = cast(l.ln1_bias);
    o.wq = cast(l.wq);
    o.bq = cast(l.bq);
    o.wk = cast(l.wk);
    o.bk = cast(l.bk);
    o.wv = cast(l.wv);
    o.bv = cast(l.bv);
    o.wo = cast(l.wo);
    o.bo = cast(l.bo);
    o.ln2_gain = cast(l.ln2_gain);
    o.ln2_bias = cast(l.ln2_bias);
    o.w1 = cast(l.w1);
    o.b1 = cast(l.b1);
    o.w2 = cast(l.w2);
    o.b2 = cast(l.b2);
    return o;
  };
  for (const auto& l : weights.intra) out.intra.push_back(cast_layer(l));
  for (const auto& l : weights.inter) out.inter.push_back(cast_layer(l));
  out.w_head = cast(weights.w_head);
  out.b_head = cast(weights.b_head);
  return out;
}

// ---- pair construction -----------------------------------------------------

void minmax_normalize(std::vector<double>& tokens, int n_real) {
  const double span = 1.0 - kMinMaxEps;
  for (int c = 0; c < 4; ++c) {
    double lo = tokens[c], hi = tokens[c];
    for (int i = 1; i < n_real; ++i) {
      lo = std::min(lo, tokens[static_cast<std::size_t>(i) * 4 + c]);
      hi = std::max(hi, tokens[static_cast<std::size_t>(i) * 4 + c]);
    }
    for (int i = 0; i < n_real; ++i) {
      double& v = tokens[static_cast<std::size_t>(i) * 4 + c];
      v = (hi > lo) ? -span + 2.0 * span * (v - lo) / (hi - lo) : 0.0;
    }
  }
}

std::vector<PairSequence> build_pair_sequences(const TrackletBatch& batch) {
  const int n_p = batch.n_past();
  const int n_f = batch.n_future();
  int max_len = 1;
  for (const Tracklet& p : batch.past)
    for (const Tracklet& f : batch.future)
      max_len = std::max(max_len, p.length() + f.length());

  std::vector<PairSequence> seqs;
  seqs.reserve(static_cast<std::size_t>(n_p) * n_f);
  for (int i = 0; i < n_p; ++i) {
    const Tracklet& past = batch.past[i];
    for (int j = 0; j < n_f; ++j) {
      const Tracklet& future = batch.future[j];
      PairSequence s;
      s.past_index = i;
      s.future_index = j;
      s.w_p = past.length();
      s.w_f = future.length();
      s.tokens.assign(static_cast<std::size_t>(max_len) * 4, 0.0);
      s.distances.assign(max_len, 0.0);
      s.pad.assign(max_len, 1);
      const int first_future = future.first_frame();
      const int n_real = s.w_p + s.w_f;
      for (int t = 0; t < n_real; ++t) {
        const bool from_past = t < s.w_p;
        const Box& b = from_past ? past.coords[t] : future.coords[t - s.w_p];
        const int frame = from_past ? past.frames[t] : future.frames[t - s.w_p];
        s.tokens[static_cast<std::size_t>(t) * 4 + 0] = b.x;
        s.tokens[static_cast<std::size_t>(t) * 4 + 1] = b.y;
        s.tokens[static_cast<std::size_t>(t) * 4 + 2] = b.x2();
        s.tokens[static_cast<std::size_t>(t) * 4 + 3] = b.y2();
        s.distances[t] = static_cast<double>(frame - first_future);
        s.pad[t] = 0;
      }
      minmax_normalize(s.tokens, n_real);
      seqs.push_back(std::move(s));
    }
  }
  return seqs;
}

std::vector<double> temporal_encoding(double distance, int dim) {
  std::vector<double> enc(dim, 0.0);
  for (int k = 0; 2 * k < dim; ++k) {
    const double freq = std::pow(10000.0, -2.0 * k / dim);
    enc[2 * k] = std::sin(distance * freq);
    if (2 * k + 1 < dim) enc[2 * k + 1] = std::cos(distance * freq);
  }
  return enc;
}

// ---- forward pass ----------------------------------------------------------

namespace {

// One pre-norm encoder layer over `blocks` stacked sequences of length L:
// LayerNorm -> multi-head attention -> residual -> LayerNorm -> FFN ->
// residual. key_mask, when non-null, marks invalid key positions.
template <typename T>
TensorT<T> encoder_layer(const TensorT<T>& x, const EncoderLayerW<T>& l, int heads, int blocks,
                         const std::vector<char>* key_mask, bool canonical) {
  const int dh = x.cols() / heads;
  const T att_scale = T(1) / static_cast<T>(std::sqrt(static_cast<double>(dh)));

  TensorT<T> h = layer_norm_rows(x, l.ln1_gain, l.ln1_bias);
  TensorT<T> q = add_rowvec(matmul(h, l.wq), l.bq);
  TensorT<T> k = add_rowvec(matmul(h, l.wk), l.bk);
  TensorT<T> v = add_rowvec(matmul(h, l.wv), l.bv);
  TensorT<T> att = masked_attention(q, k, v, heads, att_scale, blocks, key_mask, canonical);
  TensorT<T> o = add_rowvec(matmul(att, l.wo), l.bo);
  TensorT<T> x1 = add(x, o);

  TensorT<T> h2 = layer_norm_rows(x1, l.ln2_gain, l.ln2_bias);
  TensorT<T> f = add_rowvec(matmul(relu(add_rowvec(matmul(h2, l.w1), l.b1)), l.w2), l.b2);
  return add(x1, f);
}

}  // namespace

template <typename T>
TensorT<T> intra_pair_encode(const std::vector<PairSequence>& seqs,
                             const TwixWeightsT<T>& weights) {
  if (seqs.empty()) throw NumericError("intra_pair_encode: no pairs");
  const int d = weights.hyper.dim;
  const int heads = weights.hyper.heads;
  const int blocks = static_cast<int>(seqs.size());
  const int tok_len = static_cast<int>(seqs[0].pad.size());
  const int L = tok_len + 1;  // CLS slot first

  // Raw coordinates (CLS slots left zero, projected values masked out below).
  std::vector<T> coords(static_cast<std::size_t>(blocks) * L * 4, T(0));
  std::vector<char> cls_row_mask(static_cast<std::size_t>(blocks) * L * d, 0);
  std::vector<T> cls_select(static_cast<std::size_t>(blocks) * L, T(0));
  std::vector<T> pe(static_cast<std::size_t>(blocks) * L * d, T(0));
  std::vector<char> key_mask(static_cast<std::size_t>(blocks) * L, 0);

  for (int b = 0; b < blocks; ++b) {
    const PairSequence& s = seqs[b];
    const std::size_t row0 = static_cast<std::size_t>(b) * L;
    for (int c = 0; c < d; ++c) cls_row_mask[row0 * d + c] = 1;
    cls_select[row0] = T(1);
    for (int t = 0; t < tok_len; ++t) {
      const std::size_t r = row0 + 1 + t;
      for (int c = 0; c < 4; ++c)
        coords[r * 4 + c] = static_cast<T>(s.tokens[static_cast<std::size_t>(t) * 4 + c]);
      if (s.pad[t]) {
        key_mask[r] = 1;  // padded tokens are invalid keys
      } else {
        // Sinusoidal temporal encoding, written in place.
        const double dist = s.distances[t];
        T* row = pe.data() + r * d;
        for (int c2 = 0; 2 * c2 < d; ++c2) {
          const double freq = std::pow(10000.0, -2.0 * c2 / d);
          row[2 * c2] = static_cast<T>(std::sin(dist * freq));
          if (2 * c2 + 1 < d) row[2 * c2 + 1] = static_cast<T>(std::cos(dist * freq));
        }
      }
    }
  }

  TensorT<T> x_coords = TensorT<T>::from_values(blocks * L, 4, std::move(coords));
  TensorT<T> proj = add_rowvec(matmul(x_coords, weights.w_in), weights.b_in);
  // CLS slots carry the learned embedding instead of a projected token.
  proj = masked_fill(proj, cls_row_mask, T(0));
  TensorT<T> sel = TensorT<T>::from_values(blocks * L, 1, std::move(cls_select));
  TensorT<T> x = add(proj, matmul(sel, weights.cls));
  x = add(x, TensorT<T>::from_values(blocks * L, d, std::move(pe)));

  for (const auto& layer : weights.intra)
    x = encoder_layer(x, layer, heads, blocks, &key_mask, false);

  std::vector<int> cls_rows(blocks);
  for (int b = 0; b < blocks; ++b) cls_rows[b] = b * L;
  return gather_rows(x, cls_rows);
}

template <typename T>
TensorT<T> inter_pair_encode(const TensorT<T>& pair_embeddings, const TwixWeightsT<T>& weights) {
  // One token per pair; the residual path carries the intra embeddings
  // through the stack, so zeroed attention/FFN output projections reduce
  // this encoder to the identity. Reductions over pairs run in canonical
  // mode to keep the result exactly independent of pair order.
  TensorT<T> x = pair_embeddings;
  for (const auto& layer : weights.inter)
    x = encoder_layer<T>(x, layer, weights.hyper.heads, 1, nullptr, true);
  return x;
}

template <typename T>
TensorT<T> affinity_forward(const TrackletBatch& batch, const TwixWeightsT<T>& weights) {
  if (batch.past.empty() || batch.future.empty())
    throw NumericError("affinity_forward: empty batch");
  const std::vector<PairSequence> seqs = build_pair_sequences(batch);
  TensorT<T> e = intra_pair_encode(seqs, weights);
  e = inter_pair_encode(e, weights);
  TensorT<T> a = tanh_t(add_rowvec(matmul(e, weights.w_head), weights.b_head));
  return reshape(a, batch.n_past(), batch.n_future());
}

template Tensor intra_pair_encode<double>(const std::vector<PairSequence>&,
                                          const TwixWeightsT<double>&);
template TensorF intra_pair_encode<float>(const std::vector<PairSequence>&,
                                          const TwixWeightsT<float>&);
template Tensor inter_pair_encode<double>(const Tensor&, const TwixWeightsT<double>&);
template TensorF inter_pair_encode<float>(const TensorF&, const TwixWeightsT<float>&);
template Tensor affinity_forward<double>(const TrackletBatch&, const TwixWeightsT<double>&);
template TensorF affinity_forward<float>(const TrackletBatch&, const TwixWeightsT<float>&);

}  // namespace twix
