#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fare/matrix.hpp"
#include "fare/tape.hpp"

namespace fare {

// Multilayer perceptron weights for the shared encoder. An empty layer list
// is the identity encoder.
struct EncoderParams {
  struct Layer {
    Matrix weight;  // in x out
    Matrix bias;    // 1 x out
  };
  std::vector<Layer> layers;
  std::size_t embed_dim = 0;  // width of the final layer (input width if empty)

  void validate() const;  // consecutive layer shapes must conform
};

struct ScoringConfig {
  double tau = 0.5;  // temperature scaling the cosine similarity
};

// Layer widths for init: input -> hidden... -> embed_dim, rectifier
// activations on hidden layers, linear final layer.
struct EncoderArch {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t embed_dim = 16;
};

// Weights drawn with standard deviation 1/sqrt(fan_in), biases at a small
// positive constant. Reproducible given the seed.
EncoderParams init_encoder(const EncoderArch& arch, std::uint64_t seed);

// Forward pass recorded on the tape; `param_vars` must hold one leaf pair
// (weight, bias) per layer, in order.
struct EncoderVars {
  std::vector<std::pair<Var, Var>> layers;
};
EncoderVars encoder_leaves(Tape& tape, const EncoderParams& params);
Var encode(Tape& tape, Var features, const EncoderVars& vars);

// Convenience forward pass without gradient tracking.
Matrix encode(const Matrix& features, const EncoderParams& params);

// U[i][j] = exp(cos(x_embed_i, y_embed_j) / tau). Rows must be nonzero.
Var similarity_matrix(Tape& tape, Var x_embed, Var y_embed, const ScoringConfig& cfg);
Matrix similarity_matrix(const Matrix& x_embed, const Matrix& y_embed, const ScoringConfig& cfg);

// JSON round trip: ordered layer list with shapes and row-major values.
std::string encoder_to_json(const EncoderParams& params);
EncoderParams encoder_from_json(const std::string& text);

}  // namespace fare
