#include "eosprobe/model.hpp"

#include <cmath>
#include <sstream>

#include "eosprobe/errors.hpp"
#include "eosprobe/rng.hpp"

namespace eosprobe::model {

const char* to_string(Activation a) {
  return a == Activation::relu ? "relu" : "tanh";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ModelError("unknown activation '" + s + "'");
}

namespace {

struct LayerParams {
  std::size_t weights = 0;
  std::size_t biases = 0;
};

LayerParams layer_params(const Layer& l) {
  if (const auto* d = std::get_if<Dense>(&l))
    return {static_cast<std::size_t>(d->in) * static_cast<std::size_t>(d->out),
            static_cast<std::size_t>(d->out)};
  if (const auto* c = std::get_if<Conv>(&l))
    return {static_cast<std::size_t>(c->out_ch) * static_cast<std::size_t>(c->in_ch) *
                static_cast<std::size_t>(c->kernel) * static_cast<std::size_t>(c->kernel),
            static_cast<std::size_t>(c->out_ch)};
  return {0, 0};
}

bool is_parametric(const Layer& l) {
  return std::holds_alternative<Dense>(l) || std::holds_alternative<Conv>(l);
}

std::size_t flat_size(const std::vector<int>& s) {
  std::size_t r = 1;
  for (int d : s) r *= static_cast<std::size_t>(d);
  return r;
}

}  // namespace

std::size_t param_count(const ModelSpec& spec) {
  std::size_t n = 0;
  for (const auto& l : spec.layers) {
    const auto p = layer_params(l);
    n += p.weights + p.biases;
  }
  return n;
}

std::vector<std::vector<int>> shape_chain(const ModelSpec& spec,
                                          const std::vector<int>& input_shape) {
  if (spec.layers.empty()) throw ModelError("model has no layers");
  if (spec.n_c < 1) throw ModelError("model has n_c < 1");
  std::vector<std::vector<int>> chain;
  chain.push_back(input_shape);
  std::vector<int> cur = input_shape;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const Layer& l = spec.layers[li];
    if (const auto* d = std::get_if<Dense>(&l)) {
      if (cur.size() != 1)
        throw ModelError("dense layer " + std::to_string(li) +
                         " needs a flat input; add flatten first");
      if (cur[0] != d->in)
        throw ModelError("dense layer " + std::to_string(li) + " expects width " +
                         std::to_string(d->in) + ", got " + std::to_string(cur[0]));
      if (d->out < 1) throw ModelError("dense layer with out < 1");
      cur = {d->out};
    } else if (const auto* c = std::get_if<Conv>(&l)) {
      if (cur.size() != 3)
        throw ModelError("conv layer " + std::to_string(li) + " needs a {ch,h,w} input");
      if (cur[0] != c->in_ch)
        throw ModelError("conv layer " + std::to_string(li) + " expects " +
                         std::to_string(c->in_ch) + " channels, got " + std::to_string(cur[0]));
      if (c->kernel < 1 || c->stride < 1 || c->out_ch < 1)
        throw ModelError("conv layer with invalid kernel/stride/out_ch");
      if (cur[1] < c->kernel || cur[2] < c->kernel)
        throw ModelError("conv kernel larger than input in layer " + std::to_string(li));
      const int oh = (cur[1] - c->kernel) / c->stride + 1;
      const int ow = (cur[2] - c->kernel) / c->stride + 1;
      cur = {c->out_ch, oh, ow};
    } else if (const auto* m = std::get_if<MaxPool>(&l)) {
      if (cur.size() != 3) throw ModelError("maxpool needs a {ch,h,w} input");
      if (m->k < 1 || cur[1] < m->k || cur[2] < m->k)
        throw ModelError("maxpool window larger than input");
      // Valid pooling with stride k; a ragged edge is dropped.
      cur = {cur[0], (cur[1] - m->k) / m->k + 1, (cur[2] - m->k) / m->k + 1};
    } else {
      cur = {static_cast<int>(flat_size(cur))};
    }
    chain.push_back(cur);
  }
  if (cur.size() != 1 || cur[0] != spec.n_c)
    throw ModelError("final layer width must equal n_c = " + std::to_string(spec.n_c));
  return chain;
}

ParamVector init_kaiming(const ModelSpec& spec) {
  ParamVector theta(param_count(spec));
  NormalSampler rng(spec.seed);
  std::size_t at = 0;
  for (const auto& l : spec.layers) {
    if (!is_parametric(l)) continue;
    std::size_t fan_in = 0;
    if (const auto* d = std::get_if<Dense>(&l)) fan_in = static_cast<std::size_t>(d->in);
    if (const auto* c = std::get_if<Conv>(&l))
      fan_in = static_cast<std::size_t>(c->in_ch) * static_cast<std::size_t>(c->kernel) *
               static_cast<std::size_t>(c->kernel);
    double gain = spec.init_gain;
    if (gain == 0.0)
      gain = spec.activation == Activation::relu ? std::sqrt(2.0) : (5.0 / 3.0);
    const double std_dev = gain / std::sqrt(static_cast<double>(fan_in));
    const auto p = layer_params(l);
    for (std::size_t i = 0; i < p.weights; ++i) theta[at++] = std_dev * rng.normal();
    for (std::size_t i = 0; i < p.biases; ++i) theta[at++] = 0.0;
  }
  return theta;
}

std::vector<double> forward(const ModelSpec& spec, const ParamVector& theta,
                            std::span<const double> x, const std::vector<int>& input_shape) {
  const auto chain = shape_chain(spec, input_shape);
  if (x.size() != flat_size(input_shape))
    throw ShapeError("forward: input size " + std::to_string(x.size()) + " != expected " +
                     std::to_string(flat_size(input_shape)));
  if (theta.size() != param_count(spec))
    throw ShapeError("forward: parameter vector length mismatch");

  // Index of the last parametric layer: no activation after it.
  std::size_t last_parametric = 0;
  for (std::size_t li = 0; li < spec.layers.size(); ++li)
    if (is_parametric(spec.layers[li])) last_parametric = li;

  std::vector<double> cur(x.begin(), x.end());
  std::size_t at = 0;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const Layer& l = spec.layers[li];
    const auto& in_shape = chain[li];
    const auto& out_shape = chain[li + 1];
    std::vector<double> next(flat_size(out_shape), 0.0);
    if (const auto* d = std::get_if<Dense>(&l)) {
      const std::size_t w0 = at;
      const std::size_t b0 = at + static_cast<std::size_t>(d->in) * static_cast<std::size_t>(d->out);
      for (int j = 0; j < d->out; ++j) {
        double acc = theta[b0 + static_cast<std::size_t>(j)];
        const std::size_t row = w0 + static_cast<std::size_t>(j) * static_cast<std::size_t>(d->in);
        for (int i = 0; i < d->in; ++i) acc = theta[row + static_cast<std::size_t>(i)] * cur[static_cast<std::size_t>(i)] + acc;
        next[static_cast<std::size_t>(j)] = acc;
      }
      at = b0 + static_cast<std::size_t>(d->out);
    } else if (const auto* c = std::get_if<Conv>(&l)) {
      const int ih = in_shape[1], iw = in_shape[2];
      const int oh = out_shape[1], ow = out_shape[2];
      const std::size_t w0 = at;
      const std::size_t per_oc = static_cast<std::size_t>(c->in_ch) *
                                 static_cast<std::size_t>(c->kernel) *
                                 static_cast<std::size_t>(c->kernel);
      const std::size_t b0 = w0 + per_oc * static_cast<std::size_t>(c->out_ch);
      for (int oc = 0; oc < c->out_ch; ++oc) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            double acc = theta[b0 + static_cast<std::size_t>(oc)];
            for (int ic = 0; ic < c->in_ch; ++ic) {
              for (int ky = 0; ky < c->kernel; ++ky) {
                for (int kx = 0; kx < c->kernel; ++kx) {
                  const std::size_t wi = w0 + static_cast<std::size_t>(oc) * per_oc +
                                         (static_cast<std::size_t>(ic) * c->kernel + ky) * c->kernel + kx;
                  const int iy = oy * c->stride + ky;
                  const int ix = ox * c->stride + kx;
                  const std::size_t xi =
                      (static_cast<std::size_t>(ic) * ih + iy) * static_cast<std::size_t>(iw) + ix;
                  acc = theta[wi] * cur[xi] + acc;
                }
              }
            }
            next[(static_cast<std::size_t>(oc) * oh + oy) * static_cast<std::size_t>(ow) + ox] = acc;
          }
        }
      }
      at = b0 + static_cast<std::size_t>(c->out_ch);
    } else if (const auto* m = std::get_if<MaxPool>(&l)) {
      const int ih = in_shape[1], iw = in_shape[2];
      const int oh = out_shape[1], ow = out_shape[2];
      for (int ch = 0; ch < in_shape[0]; ++ch) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            double best = 0.0;
            bool first = true;
            for (int ky = 0; ky < m->k; ++ky) {
              for (int kx = 0; kx < m->k; ++kx) {
                const int iy = oy * m->k + ky;
                const int ix = ox * m->k + kx;
                const double v =
                    cur[(static_cast<std::size_t>(ch) * ih + iy) * static_cast<std::size_t>(iw) + ix];
                best = first ? v : (v > best ? v : best);
                first = false;
              }
            }
            next[(static_cast<std::size_t>(ch) * oh + oy) * static_cast<std::size_t>(ow) + ox] = best;
          }
        }
      }
    } else {
      next = cur;
    }
    if (is_parametric(l) && li != last_parametric) {
      if (spec.activation == Activation::relu) {
        for (auto& v : next) v = v > 0.0 ? v : 0.0;
      } else {
        for (auto& v : next) v = std::tanh(v);
      }
    }
    cur = std::move(next);
  }
  return cur;
}

double softmax_ce(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
    throw DataError("softmax_ce: label " + std::to_string(label) + " out of range");
  double m = logits[0];
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > m) m = logits[i];
  double s = 0.0;
  for (double z : logits) s += std::exp(z - m);
  return (m + std::log(s)) - logits[static_cast<std::size_t>(label)];
}

std::string to_text(const ModelSpec& spec) {
  std::ostringstream out;
  out << "activation=" << to_string(spec.activation) << "\n";
  out << "init_gain=";
  if (spec.init_gain == 0.0)
    out << "auto";
  else {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", spec.init_gain);
    out << buf;
  }
  out << "\n";
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    out << "layer." << i << "=";
    const Layer& l = spec.layers[i];
    if (const auto* d = std::get_if<Dense>(&l))
      out << "dense(" << d->in << "," << d->out << ")";
    else if (const auto* c = std::get_if<Conv>(&l))
      out << "conv(" << c->in_ch << "," << c->out_ch << "," << c->kernel << "," << c->stride << ")";
    else if (const auto* m = std::get_if<MaxPool>(&l))
      out << "maxpool(" << m->k << ")";
    else
      out << "flatten";
    out << "\n";
  }
  out << "n_c=" << spec.n_c << "\n";
  out << "seed=" << spec.seed << "\n";
  return out.str();
}

namespace {

std::vector<int> parse_int_args(const std::string& v, const std::string& what,
                                std::size_t expect) {
  const auto open = v.find('(');
  const auto close = v.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw ModelError("malformed layer '" + v + "'");
  std::vector<int> args;
  std::string body = v.substr(open + 1, close - open - 1);
  std::istringstream in(body);
  std::string tok;
  while (std::getline(in, tok, ',')) args.push_back(std::stoi(tok));
  if (args.size() != expect)
    throw ModelError(what + " expects " + std::to_string(expect) + " arguments, got '" + v + "'");
  return args;
}

}  // namespace

ModelSpec from_text(const std::string& text) {
  ModelSpec spec;
  std::vector<std::pair<int, Layer>> layers;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ModelError("model spec line " + std::to_string(lineno) + ": missing '='");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "activation") {
      spec.activation = activation_from_string(val);
    } else if (key == "init_gain") {
      spec.init_gain = (val == "auto") ? 0.0 : std::stod(val);
    } else if (key == "n_c") {
      spec.n_c = std::stoi(val);
    } else if (key == "seed") {
      spec.seed = std::stoull(val);
    } else if (key.rfind("layer.", 0) == 0) {
      const int idx = std::stoi(key.substr(6));
      Layer l;
      if (val.rfind("dense(", 0) == 0) {
        const auto a = parse_int_args(val, "dense", 2);
        l = Dense{a[0], a[1]};
      } else if (val.rfind("conv(", 0) == 0) {
        const auto a = parse_int_args(val, "conv", 4);
        l = Conv{a[0], a[1], a[2], a[3]};
      } else if (val.rfind("maxpool(", 0) == 0) {
        const auto a = parse_int_args(val, "maxpool", 1);
        l = MaxPool{a[0]};
      } else if (val == "flatten") {
        l = Flatten{};
      } else {
        throw ModelError("unknown layer '" + val + "'");
      }
      layers.emplace_back(idx, l);
    } else {
      throw ModelError("unknown model spec key '" + key + "'");
    }
  }
  std::sort(layers.begin(), layers.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [idx, l] : layers) spec.layers.push_back(l);
  if (spec.layers.empty()) throw ModelError("model spec has no layers");
  return spec;
}

ModelSpec tiny_mlp(int input_dim, const std::vector<int>& hidden, int n_c,
                   Activation act, std::uint64_t seed) {
  ModelSpec spec;
  spec.activation = act;
  spec.n_c = n_c;
  spec.seed = seed;
  int w = input_dim;
  for (int h : hidden) {
    spec.layers.push_back(Dense{w, h});
    w = h;
  }
  spec.layers.push_back(Dense{w, n_c});
  return spec;
}

ModelSpec tiny_conv(const std::vector<int>& input_shape, int c1, int c2, int hidden,
                    int n_c, Activation act, std::uint64_t seed) {
  if (input_shape.size() != 3) throw ModelError("tiny_conv needs a {ch,h,w} input shape");
  const auto pool2 = [](int s) { return (s - 2) / 2 + 1; };
  const int h = pool2(pool2(input_shape[1] - 2) - 2);
  const int w = pool2(pool2(input_shape[2] - 2) - 2);
  if (h < 1 || w < 1) throw ModelError("tiny_conv input too small for two conv+pool stages");

  ModelSpec spec;
  spec.activation = act;
  spec.n_c = n_c;
  spec.seed = seed;
  spec.layers.push_back(Conv{input_shape[0], c1, 3, 1});
  spec.layers.push_back(MaxPool{2});
  spec.layers.push_back(Conv{c1, c2, 3, 1});
  spec.layers.push_back(MaxPool{2});
  spec.layers.push_back(Flatten{});
  spec.layers.push_back(Dense{c2 * h * w, hidden});
  spec.layers.push_back(Dense{hidden, n_c});
  return spec;
}

}  // namespace eosprobe::model
