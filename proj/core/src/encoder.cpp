#include "fare/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "fare/rng.hpp"

namespace fare {

void EncoderParams::validate() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.bias.rows() != 1 || l.bias.cols() != l.weight.cols()) {
      throw std::invalid_argument("EncoderParams: layer " + std::to_string(i) + " bias is " +
                                  l.bias.shape_str() + ", expected 1x" +
                                  std::to_string(l.weight.cols()));
    }
    if (i + 1 < layers.size() && layers[i + 1].weight.rows() != l.weight.cols()) {
      throw std::invalid_argument("EncoderParams: layer " + std::to_string(i) + " outputs " +
                                  std::to_string(l.weight.cols()) + " but layer " +
                                  std::to_string(i + 1) + " expects " +
                                  std::to_string(layers[i + 1].weight.rows()));
    }
  }
  if (!layers.empty() && layers.back().weight.cols() != embed_dim) {
    throw std::invalid_argument("EncoderParams: final layer width " +
                                std::to_string(layers.back().weight.cols()) +
                                " does not equal embed_dim " + std::to_string(embed_dim));
  }
}

EncoderParams init_encoder(const EncoderArch& arch, std::uint64_t seed) {
  if (arch.input_dim == 0 || arch.embed_dim == 0) {
    throw std::invalid_argument("init_encoder: layer widths must be positive");
  }
  for (std::size_t w : arch.hidden) {
    if (w == 0) throw std::invalid_argument("init_encoder: layer widths must be positive");
  }
  std::vector<std::size_t> widths;
  widths.push_back(arch.input_dim);
  widths.insert(widths.end(), arch.hidden.begin(), arch.hidden.end());
  widths.push_back(arch.embed_dim);

  Rng rng(seed);
  EncoderParams params;
  params.embed_dim = arch.embed_dim;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    EncoderParams::Layer layer;
    const double sd = 1.0 / std::sqrt(static_cast<double>(widths[i]));
    layer.weight = rng.normal_matrix(widths[i], widths[i + 1], sd);
    // small positive bias keeps fully-dead rectifier rows (and the zero
    // embedding rows they would produce) out of freshly initialized nets
    layer.bias = Matrix::constant(1, widths[i + 1], 0.01);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

EncoderVars encoder_leaves(Tape& tape, const EncoderParams& params) {
  EncoderVars vars;
  for (const auto& layer : params.layers) {
    vars.layers.emplace_back(tape.leaf(layer.weight), tape.leaf(layer.bias));
  }
  return vars;
}

Var encode(Tape& tape, Var features, const EncoderVars& vars) {
  Var h = features;
  for (std::size_t i = 0; i < vars.layers.size(); ++i) {
    h = tape.add_rowvec(tape.matmul(h, vars.layers[i].first), vars.layers[i].second);
    if (i + 1 < vars.layers.size()) h = tape.relu(h);
  }
  return h;
}

Matrix encode(const Matrix& features, const EncoderParams& params) {
  params.validate();
  Tape tape;
  EncoderVars vars = encoder_leaves(tape, params);
  return tape.value(encode(tape, tape.leaf(features), vars));
}

Var similarity_matrix(Tape& tape, Var x_embed, Var y_embed, const ScoringConfig& cfg) {
  if (cfg.tau <= 0.0) throw std::invalid_argument("similarity_matrix: tau must be positive");
  const Matrix& xv = tape.value(x_embed);
  const Matrix& yv = tape.value(y_embed);
  if (!xv.same_shape(yv)) {
    throw std::invalid_argument("similarity_matrix: embeddings differ in shape, " +
                                xv.shape_str() + " vs " + yv.shape_str());
  }
  Var xn = tape.l2_normalize_rows(x_embed);
  Var yn = tape.l2_normalize_rows(y_embed);
  Var cosine = tape.matmul(xn, tape.transpose(yn));
  return tape.exp(tape.scale(cosine, 1.0 / cfg.tau));
}

Matrix similarity_matrix(const Matrix& x_embed, const Matrix& y_embed, const ScoringConfig& cfg) {
  Tape tape;
  return tape.value(similarity_matrix(tape, tape.leaf(x_embed), tape.leaf(y_embed), cfg));
}

std::string encoder_to_json(const EncoderParams& params) {
  nlohmann::json j;
  j["embed_dim"] = params.embed_dim;
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : params.layers) {
    nlohmann::json lj;
    lj["in"] = layer.weight.rows();
    lj["out"] = layer.weight.cols();
    lj["weight"] = layer.weight.values();
    lj["bias"] = layer.bias.values();
    j["layers"].push_back(std::move(lj));
  }
  return j.dump();
}

EncoderParams encoder_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  EncoderParams params;
  params.embed_dim = j.at("embed_dim").get<std::size_t>();
  for (const auto& lj : j.at("layers")) {
    EncoderParams::Layer layer;
    const auto in = lj.at("in").get<std::size_t>();
    const auto out = lj.at("out").get<std::size_t>();
    layer.weight = Matrix(in, out, lj.at("weight").get<std::vector<double>>());
    layer.bias = Matrix(1, out, lj.at("bias").get<std::vector<double>>());
    params.layers.push_back(std::move(layer));
  }
  params.validate();
  return params;
}

}  // namespace fare
