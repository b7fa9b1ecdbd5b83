/*
 * Copyright 2026 The islab Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "islab/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "islab/errors.hpp"

namespace islab {

static_assert(std::endian::native == std::endian::little,
              "model files are written as little-endian f64 blocks");

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "sigmoid"; }

std::string to_string(Likelihood l) {
  switch (l) {
    case Likelihood::bernoulli: return "bernoulli";
    case Likelihood::categorical: return "categorical";
    case Likelihood::gaussian: return "gaussian";
  }
  return "?";
}

std::string to_string(ModelMode m) {
  return m == ModelMode::variational ? "variational" : "deterministic_l1";
}

Activation parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "relu") return Activation::relu;
  throw std::invalid_argument("unknown activation '" + std::string(name) +
                              "' (expected sigmoid or relu)");
}

Likelihood parse_likelihood(std::string_view name) {
  if (name == "bernoulli") return Likelihood::bernoulli;
  if (name == "categorical") return Likelihood::categorical;
  if (name == "gaussian") return Likelihood::gaussian;
  throw std::invalid_argument("unknown likelihood '" + std::string(name) +
                              "' (expected bernoulli, categorical or gaussian)");
}

ModelMode parse_mode(std::string_view name) {
  if (name == "variational") return ModelMode::variational;
  if (name == "deterministic_l1") return ModelMode::deterministic_l1;
  throw std::invalid_argument("unknown model mode '" + std::string(name) + "'");
}

void NetworkSpec::validate() const {
  if (n_covariates < 1) throw std::invalid_argument("network: n_covariates must be >= 1");
  if (n_outputs < 1) throw std::invalid_argument("network: n_outputs must be >= 1");
  for (std::size_t w : hidden_widths)
    if (w < 1) throw std::invalid_argument("network: hidden widths must be >= 1");
  if (likelihood == Likelihood::bernoulli && n_outputs != 1)
    throw std::invalid_argument("network: bernoulli head uses a single output");
  if (likelihood == Likelihood::categorical && n_outputs < 2)
    throw std::invalid_argument("network: categorical head needs >= 2 outputs");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("network: noise variance must be > 0");
  if (mode == ModelMode::deterministic_l1) {
    if (!(l1.prune_threshold > 0.0))
      throw std::invalid_argument("network: prune_threshold must be > 0");
    if (l1.lambda_reg < 0.0) throw std::invalid_argument("network: lambda_reg must be >= 0");
  } else {
    prior.validate();
    if (!(sigma_init > 0.0)) throw std::invalid_argument("network: sigma_init must be > 0");
    if (!(mu_init >= 0.0)) throw std::invalid_argument("network: mu_init must be >= 0");
  }
}

std::size_t NetworkSpec::total_weights() const {
  std::size_t total = 0;
  for (std::size_t j = 0; j < depth(); ++j)
    total += layer_outputs(j) * (hidden_inputs(j) + n_covariates);
  return total;
}

void to_json(nlohmann::json& j, const NetworkSpec& s) {
  j = nlohmann::json{{"n_covariates", s.n_covariates},
                     {"hidden_widths", s.hidden_widths},
                     {"n_outputs", s.n_outputs},
                     {"activation", to_string(s.activation)},
                     {"likelihood", to_string(s.likelihood)},
                     {"noise_variance", s.noise_variance},
                     {"mode", to_string(s.mode)},
                     {"l1", {{"lambda_reg", s.l1.lambda_reg},
                             {"prune_threshold", s.l1.prune_threshold}}},
                     {"prior", {{"prior_std", s.prior.prior_std}, {"psi", s.prior.psi}}},
                     {"inclusion_init",
                      {{"hidden", {s.inclusion_init.hidden_min, s.inclusion_init.hidden_max}},
                       {"covariate",
                        {s.inclusion_init.covariate_min, s.inclusion_init.covariate_max}}}},
                     {"sigma_init", s.sigma_init},
                     {"mu_init", s.mu_init}};
}

void from_json(const nlohmann::json& j, NetworkSpec& s) {
  j.at("n_covariates").get_to(s.n_covariates);
  j.at("hidden_widths").get_to(s.hidden_widths);
  j.at("n_outputs").get_to(s.n_outputs);
  s.activation = parse_activation(j.at("activation").get<std::string>());
  s.likelihood = parse_likelihood(j.at("likelihood").get<std::string>());
  j.at("noise_variance").get_to(s.noise_variance);
  s.mode = parse_mode(j.at("mode").get<std::string>());
  j.at("l1").at("lambda_reg").get_to(s.l1.lambda_reg);
  j.at("l1").at("prune_threshold").get_to(s.l1.prune_threshold);
  j.at("prior").at("prior_std").get_to(s.prior.prior_std);
  j.at("prior").at("psi").get_to(s.prior.psi);
  const auto& init = j.at("inclusion_init");
  s.inclusion_init.hidden_min = init.at("hidden").at(0).get<double>();
  s.inclusion_init.hidden_max = init.at("hidden").at(1).get<double>();
  s.inclusion_init.covariate_min = init.at("covariate").at(0).get<double>();
  s.inclusion_init.covariate_max = init.at("covariate").at(1).get<double>();
  j.at("sigma_init").get_to(s.sigma_init);
  j.at("mu_init").get_to(s.mu_init);
}

bool Network::all_finite() const {
  for (const auto& l : layers)
    if (!l.all_finite()) return false;
  for (const auto& d : dense) {
    if (!d.weight.all_finite()) return false;
    for (double b : d.bias)
      if (!std::isfinite(b)) return false;
  }
  return true;
}

Network make_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network net;
  net.spec = spec;
  net.seed = seed;
  const Rng root(seed);
  for (std::size_t j = 0; j < spec.depth(); ++j) {
    Rng rng = root.substream(j);
    const std::size_t out = spec.layer_outputs(j);
    const std::size_t hidden_in = spec.hidden_inputs(j);
    if (net.variational()) {
      VariationalLayer layer(out, hidden_in, spec.n_covariates);
      layer.initialize(rng, spec.inclusion_init, spec.sigma_init, spec.mu_init);
      net.layers.push_back(std::move(layer));
    } else {
      DenseLayer layer{Matrix(out, hidden_in + spec.n_covariates), Vector(out), hidden_in};
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
      for (double& w : layer.weight.flat()) w = rng.uniform(-bound, bound);
      for (double& b : layer.bias) b = rng.uniform(-bound, bound);
      net.dense.push_back(std::move(layer));
    }
  }
  return net;
}

Matrix concat_inputs(const Matrix& hidden, const Matrix& x) {
  if (hidden.rows() != x.rows()) throw std::invalid_argument("concat_inputs: row mismatch");
  Matrix out(x.rows(), hidden.cols() + x.cols());
  for (std::size_t b = 0; b < x.rows(); ++b) {
    auto dst = out.row(b);
    std::copy(hidden.row(b).begin(), hidden.row(b).end(), dst.begin());
    std::copy(x.row(b).begin(), x.row(b).end(), dst.begin() + static_cast<long>(hidden.cols()));
  }
  return out;
}

namespace {

Matrix activate(Activation act, const Matrix& pre) {
  Matrix out(pre.rows(), pre.cols());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const double z = pre.flat()[i];
    out.flat()[i] = act == Activation::relu ? relu(z) : sigmoid(z);
  }
  return out;
}

// grad wrt pre-activation given grad wrt the first `width` input columns of
// the next layer.
Matrix activation_backward(Activation act, const Matrix& pre, const Matrix& grad_next_input) {
  Matrix out(pre.rows(), pre.cols());
  for (std::size_t b = 0; b < pre.rows(); ++b) {
    for (std::size_t p = 0; p < pre.cols(); ++p) {
      const double z = pre(b, p);
      double d;
      if (act == Activation::relu) {
        d = relu_grad(z);
      } else {
        const double s = sigmoid(z);
        d = s * (1.0 - s);
      }
      out(b, p) = grad_next_input(b, p) * d;
    }
  }
  return out;
}

void check_x(const NetworkSpec& spec, const Matrix& x) {
  if (x.cols() != spec.n_covariates)
    throw std::invalid_argument("network: input has " + std::to_string(x.cols()) +
                                " columns, expected " + std::to_string(spec.n_covariates));
}

}  // namespace

SampledForward forward_sample(const Network& net, const Matrix& x, Rng& rng, bool keep_cache) {
  if (!net.variational()) throw std::invalid_argument("forward_sample: model is not variational");
  check_x(net.spec, x);
  const Rng step(rng.next_u64());
  SampledForward out;
  Matrix hidden;
  const std::size_t depth = net.spec.depth();
  if (keep_cache) out.cache.layers.resize(depth);
  for (std::size_t j = 0; j < depth; ++j) {
    const Matrix input = j == 0 ? x : concat_inputs(hidden, x);
    Rng layer_rng = step.substream(j);
    Matrix pre = lrt_forward(net.layers[j], input, layer_rng,
                             keep_cache ? &out.cache.layers[j] : nullptr);
    if (j + 1 == depth) {
      out.logits = std::move(pre);
    } else {
      hidden = activate(net.spec.activation, pre);
      if (keep_cache) out.cache.hidden_pre.push_back(std::move(pre));
    }
  }
  out.params = output_params(net.spec, out.logits);
  return out;
}

Matrix output_params(const NetworkSpec& spec, const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t b = 0; b < logits.rows(); ++b) {
    switch (spec.likelihood) {
      case Likelihood::bernoulli:
        for (std::size_t c = 0; c < logits.cols(); ++c) out(b, c) = sigmoid(logits(b, c));
        break;
      case Likelihood::categorical: {
        const Vector p = softmax(logits.row(b));
        std::copy(p.begin(), p.end(), out.row(b).begin());
        break;
      }
      case Likelihood::gaussian:
        std::copy(logits.row(b).begin(), logits.row(b).end(), out.row(b).begin());
        break;
    }
  }
  return out;
}

WeightSample draw_weights(const Network& net, const StructureMask& mask, bool sample_weights,
                          Rng& rng) {
  if (!net.variational()) return l1_weights(net, &mask);
  if (mask.layers.size() != net.layers.size())
    throw std::invalid_argument("draw_weights: mask depth does not match network");
  WeightSample out;
  for (std::size_t j = 0; j < net.layers.size(); ++j)
    out.layers.push_back(masked_weights(net.layers[j], mask.layers[j], sample_weights, rng));
  return out;
}

WeightSample l1_weights(const Network& net, const StructureMask* mask) {
  if (net.variational()) throw std::invalid_argument("l1_weights: model is variational");
  WeightSample out{net.dense};
  if (mask != nullptr) {
    if (mask->layers.size() != out.layers.size())
      throw std::invalid_argument("l1_weights: mask depth does not match network");
    for (std::size_t j = 0; j < out.layers.size(); ++j) {
      const LayerMask& m = mask->layers[j];
      Matrix& w = out.layers[j].weight;
      if (m.rows != w.rows() || m.cols != w.cols())
        throw std::invalid_argument("l1_weights: mask shape mismatch");
      for (std::size_t i = 0; i < m.bits.size(); ++i)
        if (m.bits[i] == 0) w.flat()[i] = 0.0;
    }
  }
  return out;
}

Matrix dense_network_forward(const NetworkSpec& spec, const WeightSample& weights,
                             const Matrix& x, DenseTrace* trace) {
  check_x(spec, x);
  if (weights.layers.size() != spec.depth())
    throw std::invalid_argument("dense_network_forward: weight depth mismatch");
  Matrix hidden;
  for (std::size_t j = 0; j < spec.depth(); ++j) {
    Matrix input = j == 0 ? x : concat_inputs(hidden, x);
    Matrix pre = dense_forward(weights.layers[j], input);
    if (trace != nullptr) trace->inputs.push_back(std::move(input));
    if (j + 1 == spec.depth()) return pre;
    hidden = activate(spec.activation, pre);
    if (trace != nullptr) trace->hidden_pre.push_back(std::move(pre));
  }
  return {};
}

namespace {

void add_into(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.flat()[i] += src.flat()[i];
}

}  // namespace

DenseGradients dense_network_backward(const NetworkSpec& spec, const WeightSample& weights,
                                      const DenseTrace& trace, const Matrix& grad_logits) {
  const std::size_t depth = spec.depth();
  DenseGradients out;
  out.weight.resize(depth);
  out.bias.resize(depth);
  Matrix grad = grad_logits;
  for (std::size_t jj = depth; jj-- > 0;) {
    const DenseLayer& layer = weights.layers[jj];
    out.weight[jj] = Matrix(layer.weight.rows(), layer.weight.cols());
    accumulate_at_b(grad, trace.inputs[jj], out.weight[jj]);
    out.bias[jj].assign(layer.bias.size(), 0.0);
    for (std::size_t b = 0; b < grad.rows(); ++b)
      for (std::size_t p = 0; p < grad.cols(); ++p) out.bias[jj][p] += grad(b, p);
    Matrix grad_input = matmul(grad, layer.weight);
    if (jj == 0) {
      // layer 0 reads x only
      if (out.input.empty()) out.input = std::move(grad_input);
      else add_into(out.input, grad_input);
      break;
    }
    // covariate columns feed x directly; collect them into the input gradient
    if (out.input.empty()) out.input = Matrix(grad.rows(), spec.n_covariates);
    const std::size_t hidden_in = layer.hidden_inputs;
    for (std::size_t b = 0; b < grad.rows(); ++b)
      for (std::size_t i = 0; i < spec.n_covariates; ++i)
        out.input(b, i) += grad_input(b, hidden_in + i);
    Matrix grad_hidden(grad.rows(), hidden_in);
    for (std::size_t b = 0; b < grad.rows(); ++b)
      for (std::size_t k = 0; k < hidden_in; ++k) grad_hidden(b, k) = grad_input(b, k);
    grad = activation_backward(spec.activation, trace.hidden_pre[jj - 1], grad_hidden);
  }
  return out;
}

std::vector<LayerGradients> network_backward(const Network& net, const ForwardCache& cache,
                                             const Matrix& grad_logits) {
  const std::size_t depth = net.spec.depth();
  if (cache.layers.size() != depth)
    throw std::invalid_argument("network_backward: forward pass did not keep a cache");
  std::vector<LayerGradients> out;
  out.reserve(depth);
  for (const auto& l : net.layers) out.emplace_back(l);
  Matrix grad = grad_logits;
  for (std::size_t jj = depth; jj-- > 0;) {
    out[jj] = layer_backward(net.layers[jj], cache.layers[jj], grad, jj > 0);
    if (jj == 0) break;
    const std::size_t hidden_in = net.layers[jj].hidden_inputs;
    Matrix grad_hidden(grad.rows(), hidden_in);
    for (std::size_t b = 0; b < grad.rows(); ++b)
      for (std::size_t k = 0; k < hidden_in; ++k) grad_hidden(b, k) = out[jj].input(b, k);
    grad = activation_backward(net.spec.activation, cache.hidden_pre[jj - 1], grad_hidden);
  }
  return out;
}

double log_likelihood(const NetworkSpec& spec, std::span<const double> params, double y) {
  if (params.size() != spec.n_outputs)
    throw std::invalid_argument("log_likelihood: parameter count does not match head");
  switch (spec.likelihood) {
    case Likelihood::bernoulli: {
      if (y != 0.0 && y != 1.0) throw std::invalid_argument("log_likelihood: label must be 0 or 1");
      const double p = params[0];
      return y == 1.0 ? std::log(p) : std::log1p(-p);
    }
    case Likelihood::categorical: {
      if (y < 0.0 || y != std::floor(y) || y >= static_cast<double>(params.size()))
        throw std::invalid_argument("log_likelihood: invalid class index");
      return std::log(params[static_cast<std::size_t>(y)]);
    }
    case Likelihood::gaussian: {
      const double phi = spec.noise_variance;
      const double r = y - params[0];
      return -0.5 * std::log(2.0 * std::numbers::pi * phi) - r * r / (2.0 * phi);
    }
  }
  return 0.0;
}

double batch_nll(const NetworkSpec& spec, const Matrix& logits, std::span<const double> y,
                 Matrix* grad) {
  if (logits.rows() != y.size()) throw std::invalid_argument("batch_nll: label count mismatch");
  if (grad != nullptr) *grad = Matrix(logits.rows(), logits.cols());
  double total = 0.0;
  for (std::size_t b = 0; b < logits.rows(); ++b) {
    switch (spec.likelihood) {
      case Likelihood::bernoulli: {
        const double z = logits(b, 0);
        total += softplus(z) - y[b] * z;
        if (grad != nullptr) (*grad)(b, 0) = sigmoid(z) - y[b];
        break;
      }
      case Likelihood::categorical: {
        const auto row = logits.row(b);
        const auto label = static_cast<std::size_t>(y[b]);
        if (y[b] < 0.0 || label >= row.size())
          throw std::invalid_argument("batch_nll: invalid class index");
        total += log_sum_exp(row) - row[label];
        if (grad != nullptr) {
          const Vector p = softmax(row);
          for (std::size_t c = 0; c < p.size(); ++c)
            (*grad)(b, c) = p[c] - (c == label ? 1.0 : 0.0);
        }
        break;
      }
      case Likelihood::gaussian: {
        const double phi = spec.noise_variance;
        const double r = logits(b, 0) - y[b];
        total += 0.5 * std::log(2.0 * std::numbers::pi * phi) + r * r / (2.0 * phi);
        if (grad != nullptr) (*grad)(b, 0) = r / phi;
        break;
      }
    }
  }
  return total;
}

double total_kl(const Network& net) {
  double total = 0.0;
  for (const auto& l : net.layers) total += layer_kl(l, net.spec.prior);
  return total;
}

std::vector<Matrix> predictive_samples(const Network& net, const Matrix& x,
                                       std::size_t n_samples, Rng& rng,
                                       const StructureMask* mask) {
  if (n_samples == 0) throw std::invalid_argument("predict: need at least one sample");
  std::vector<Matrix> out;
  out.reserve(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    if (!net.variational()) {
      out.push_back(output_params(net.spec, dense_network_forward(net.spec, l1_weights(net, mask), x)));
    } else if (mask != nullptr) {
      const WeightSample w = draw_weights(net, *mask, true, rng);
      out.push_back(output_params(net.spec, dense_network_forward(net.spec, w, x)));
    } else {
      out.push_back(forward_sample(net, x, rng).params);
    }
  }
  return out;
}

Prediction predict(const Network& net, const Matrix& x, std::size_t n_samples, Rng& rng,
                   const StructureMask* mask, bool with_intervals) {
  if (n_samples == 0) throw std::invalid_argument("predict: need at least one sample");
  Prediction pred;
  pred.samples = n_samples;
  pred.mean = Matrix(x.rows(), net.spec.n_outputs);
  if (!with_intervals) {
    for (std::size_t s = 0; s < n_samples; ++s) {
      const std::vector<Matrix> one = predictive_samples(net, x, 1, rng, mask);
      add_into(pred.mean, one.front());
    }
    for (double& v : pred.mean.flat()) v /= static_cast<double>(n_samples);
    return pred;
  }
  const std::vector<Matrix> draws = predictive_samples(net, x, n_samples, rng, mask);
  pred.lower = Matrix(x.rows(), net.spec.n_outputs);
  pred.upper = Matrix(x.rows(), net.spec.n_outputs);
  std::vector<double> column(n_samples);
  for (std::size_t i = 0; i < pred.mean.size(); ++i) {
    double total = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
      column[s] = draws[s].flat()[i];
      total += column[s];
    }
    pred.mean.flat()[i] = total / static_cast<double>(n_samples);
    pred.lower.flat()[i] = quantile(column, 0.025);
    pred.upper.flat()[i] = quantile(column, 0.975);
  }
  return pred;
}

namespace {

constexpr char kMagic[4] = {'I', 'S', 'L', 'B'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_block(std::string& out, std::span<const double> values) {
  out.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(double));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string_view take(std::size_t n) {
    need(n);
    std::string_view v = bytes_.substr(pos_, n);
    pos_ += n;
    return v;
  }

  void read_block(std::span<double> out) {
    const std::size_t n = out.size() * sizeof(double);
    need(n);
    std::memcpy(out.data(), bytes_.data() + pos_, n);
    pos_ += n;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("model file is truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize(const Network& net) {
  nlohmann::json header;
  header["format"] = "islab-model";
  header["spec"] = net.spec;
  header["seed"] = net.seed;
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  if (net.variational()) {
    for (const auto& l : net.layers) {
      put_block(out, l.mu.flat());
      put_block(out, l.rho.flat());
      put_block(out, l.lambda.flat());
      put_block(out, l.bias_mu);
      put_block(out, l.bias_rho);
    }
  } else {
    for (const auto& l : net.dense) {
      put_block(out, l.weight.flat());
      put_block(out, l.bias);
    }
  }
  return out;
}

Network deserialize(std::string_view bytes) {
  Reader in(bytes);
  const std::string_view magic = in.take(sizeof(kMagic));
  if (magic != std::string_view(kMagic, sizeof(kMagic))) throw FormatError("not an islab model file");
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion)
    throw FormatError("unsupported model file version " + std::to_string(version));
  const auto header_len = in.get<std::uint64_t>();
  if (header_len > bytes.size()) throw FormatError("model file is truncated");
  nlohmann::json header;
  NetworkSpec spec;
  std::uint64_t seed = 0;
  try {
    header = nlohmann::json::parse(in.take(static_cast<std::size_t>(header_len)));
    spec = header.at("spec").get<NetworkSpec>();
    seed = header.at("seed").get<std::uint64_t>();
    spec.validate();
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(std::string("invalid model header: ") + e.what());
  }

  // make_network gives correctly shaped layers; every value is overwritten.
  Network net = make_network(spec, seed);
  if (net.variational()) {
    for (auto& l : net.layers) {
      in.read_block(l.mu.flat());
      in.read_block(l.rho.flat());
      in.read_block(l.lambda.flat());
      in.read_block(l.bias_mu);
      in.read_block(l.bias_rho);
    }
  } else {
    for (auto& l : net.dense) {
      in.read_block(l.weight.flat());
      in.read_block(l.bias);
    }
  }
  if (!in.done()) throw FormatError("trailing bytes after model parameters");
  return net;
}

void save_network(const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  const std::string bytes = serialize(net);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

Network load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

double l1_penalty(const Network& net) {
  double total = 0.0;
  for (const auto& l : net.dense)
    for (double w : l.weight.flat()) total += std::abs(w);
  return total;
}

double l1_loss(const Network& net, const Matrix& x, std::span<const double> y) {
  if (net.variational()) throw std::invalid_argument("l1_loss: model is not in deterministic_l1 mode");
  const Matrix logits = dense_network_forward(net.spec, l1_weights(net), x);
  return batch_nll(net.spec, logits, y) + net.spec.l1.lambda_reg * l1_penalty(net);
}

}  // namespace islab
