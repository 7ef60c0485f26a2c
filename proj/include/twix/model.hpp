#pragma once

#include <string>
#include <vector>

#include "twix/batching.hpp"
#include "twix/tensor.hpp"

namespace twix {

struct TwixHyper {
  int dim = 32;        // representation size D
  int heads = 16;      // attention heads, dim % heads == 0
  int ffn_dim = 32;    // feedforward layer size
  int intra_layers = 1;
  int inter_layers = 1;
};

template <typename T>
struct EncoderLayerW {
  TensorT<T> ln1_gain, ln1_bias;
  TensorT<T> wq, bq, wk, bk, wv, bv, wo, bo;
  TensorT<T> ln2_gain, ln2_bias;
  TensorT<T> w1, b1, w2, b2;
};

// All learnable parameters of one TWiX module.
template <typename T>
struct TwixWeightsT {
  TwixHyper hyper;
  TensorT<T> w_in, b_in;  // coordinate projection, 4 -> D
  TensorT<T> cls;         // (1, D) CLS embedding
  std::vector<EncoderLayerW<T>> intra;
  std::vector<EncoderLayerW<T>> inter;
  TensorT<T> w_head, b_head;  // affinity head, D -> 1

  // Parameter tensors in checkpoint order: w_in, b_in, cls, intra layers
  // (ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1,
  // w2, b2), same per inter layer, then w_head, b_head.
  std::vector<TensorT<T>> params() const;
};

using TwixWeights = TwixWeightsT<double>;
using TwixWeightsF = TwixWeightsT<float>;

// Fresh weights, uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per matrix, zero
// biases, unit layer-norm gains. When tape is non-null the tensors are
// registered as learnable parameters.
TwixWeights init_twix_weights(const TwixHyper& hyper, std::uint64_t seed,
                              Tape<double>* tape = nullptr);

// Binary checkpoint, magic "TWX1": hyper-parameters as little-endian int32,
// then each parameter tensor as rank/dims header plus little-endian float64
// values, in params() order.
void save_checkpoint(const TwixWeights& weights, const std::string& path);
TwixWeights load_checkpoint(const std::string& path, Tape<double>* tape = nullptr);

// Frozen single-precision copy for inference.
TwixWeightsF to_float(const TwixWeights& weights);

// One (past, future) pair as a padded model input sequence: past tokens then
// future tokens, 4 normalized coordinates per token, signed frame distance
// to the first future observation, and a padding mask.
struct PairSequence {
  int past_index = 0;
  int future_index = 0;
  int w_p = 0;  // real past tokens
  int w_f = 0;  // real future tokens
  std::vector<double> tokens;     // len * 4, normalized per pair
  std::vector<double> distances;  // len, 0 on padding
  std::vector<char> pad;          // len, 1 = padding
};

// Cartesian product of past x future in row-major order, padded to the
// batch's maximal pair length.
std::vector<PairSequence> build_pair_sequences(const TrackletBatch& batch);

// Per-coordinate-column minmax over the n_real leading tokens, mapping onto
// [-1 + eps, 1 - eps] with eps = 1e-3; a degenerate column (max == min)
// maps to 0. tokens is row-major (len x 4).
void minmax_normalize(std::vector<double>& tokens, int n_real);

// Sinusoidal encoding of a signed temporal distance over dim channels.
std::vector<double> temporal_encoding(double distance, int dim);

// Full forward pass: pair construction, normalization, projection plus
// temporal encoding, CLS, Intra-Pair encoder, Inter-Pair encoder, linear +
// tanh head. Returns the (n_P, n_F) affinity matrix.
template <typename T>
TensorT<T> affinity_forward(const TrackletBatch& batch, const TwixWeightsT<T>& weights);

extern template Tensor affinity_forward<double>(const TrackletBatch&, const TwixWeightsT<double>&);
extern template TensorF affinity_forward<float>(const TrackletBatch&, const TwixWeightsT<float>&);

// Intermediate stages, exposed for tests: intra-pair CLS embeddings
// (n_pairs, D) and the inter-pair refinement of a given embedding set.
template <typename T>
TensorT<T> intra_pair_encode(const std::vector<PairSequence>& seqs, const TwixWeightsT<T>& weights);
template <typename T>
TensorT<T> inter_pair_encode(const TensorT<T>& pair_embeddings, const TwixWeightsT<T>& weights);

extern template Tensor intra_pair_encode<double>(const std::vector<PairSequence>&,
                                                 const TwixWeightsT<double>&);
extern template TensorF intra_pair_encode<float>(const std::vector<PairSequence>&,
                                                 const TwixWeightsT<float>&);
extern template Tensor inter_pair_encode<double>(const Tensor&, const TwixWeightsT<double>&);
extern template TensorF inter_pair_encode<float>(const TensorF&, const TwixWeightsT<float>&);

}  // namespace twix
