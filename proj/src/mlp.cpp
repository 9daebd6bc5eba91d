#include "pidtune/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pidtune/csv.hpp"

namespace pidtune {
namespace {

void check_shapes(const Mlp& net, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != net.input_dim())
    throw std::invalid_argument("mlp: input size does not match input width");
}

double apply_output(double v, OutputActivation act) {
  return act == OutputActivation::Tanh ? std::tanh(v) : v;
}

}  // namespace

void Gradients::scale(double factor) {
  for (auto& layer : weights)
    for (double& v : layer) v *= factor;
  for (auto& layer : biases)
    for (double& v : layer) v *= factor;
  for (double& v : input) v *= factor;
}

Mlp make_mlp(const std::vector<int>& dims, OutputActivation output_activation, Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("mlp: need at least input and output dims");
  Mlp net;
  net.layer_dims = dims;
  net.output_activation = output_activation;
  for (std::size_t l = 1; l < dims.size(); ++l) {
    const int fan_in = dims[l - 1];
    const int fan_out = dims[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> w(static_cast<std::size_t>(fan_out) * fan_in);
    std::vector<double> b(fan_out);
    for (double& v : w) v = rng.uniform(-bound, bound);
    for (double& v : b) v = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

std::vector<double> forward(const Mlp& net, const std::vector<double>& x) {
  check_shapes(net, x);
  std::vector<double> act = x;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const int in = net.layer_dims[l];
    const int out = net.layer_dims[l + 1];
    const bool last = l + 1 == net.layer_count();
    std::vector<double> next(out);
    const double* w = net.weights[l].data();
    for (int o = 0; o < out; ++o) {
      double sum = net.biases[l][o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) sum += row[i] * act[i];
      next[o] = last ? apply_output(sum, net.output_activation) : std::max(0.0, sum);
    }
    act = std::move(next);
  }
  return act;
}

Gradients make_gradients(const Mlp& net) {
  Gradients g;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    g.weights.emplace_back(net.weights[l].size(), 0.0);
    g.biases.emplace_back(net.biases[l].size(), 0.0);
  }
  g.input.assign(net.input_dim(), 0.0);
  return g;
}

void backward_into(const Mlp& net, const std::vector<double>& x,
                   const std::vector<double>& upstream, Gradients& grads) {
  check_shapes(net, x);
  if (static_cast<int>(upstream.size()) != net.output_dim())
    throw std::invalid_argument("mlp: upstream size does not match output width");

  const std::size_t layers = net.layer_count();
  // Forward pass, keeping pre-activations and activations per layer.
  std::vector<std::vector<double>> acts(layers + 1);
  std::vector<std::vector<double>> pres(layers);
  acts[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = net.layer_dims[l];
    const int out = net.layer_dims[l + 1];
    const bool last = l + 1 == layers;
    pres[l].resize(out);
    acts[l + 1].resize(out);
    const double* w = net.weights[l].data();
    for (int o = 0; o < out; ++o) {
      double sum = net.biases[l][o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) sum += row[i] * acts[l][i];
      pres[l][o] = sum;
      acts[l + 1][o] = last ? apply_output(sum, net.output_activation) : std::max(0.0, sum);
    }
  }

  // Output-layer delta.
  std::vector<double> delta = upstream;
  if (net.output_activation == OutputActivation::Tanh) {
    for (std::size_t o = 0; o < delta.size(); ++o) {
      const double t = acts[layers][o];
      delta[o] *= 1.0 - t * t;
    }
  }

  for (std::size_t l = layers; l-- > 0;) {
    const int in = net.layer_dims[l];
    const int out = net.layer_dims[l + 1];
    const double* w = net.weights[l].data();
    double* gw = grads.weights[l].data();
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      grads.biases[l][o] += d;
      double* grow = gw + static_cast<std::size_t>(o) * in;
      const double* a = acts[l].data();
      for (int i = 0; i < in; ++i) grow[i] += d * a[i];
    }
    std::vector<double> prev(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) prev[i] += d * row[i];
    }
    if (l > 0) {
      for (int i = 0; i < in; ++i)
        if (pres[l - 1][i] <= 0.0) prev[i] = 0.0;  // rectifier gate
      delta = std::move(prev);
    } else {
      for (int i = 0; i < in; ++i) grads.input[i] += prev[i];
    }
  }
}

Gradients backward(const Mlp& net, const std::vector<double>& x,
                   const std::vector<double>& upstream) {
  Gradients g = make_gradients(net);
  backward_into(net, x, upstream, g);
  return g;
}

OptimizerState make_optimizer(const Mlp& net, double learning_rate) {
  OptimizerState opt;
  opt.learning_rate = learning_rate;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    opt.m_weights.emplace_back(net.weights[l].size(), 0.0);
    opt.v_weights.emplace_back(net.weights[l].size(), 0.0);
    opt.m_biases.emplace_back(net.biases[l].size(), 0.0);
    opt.v_biases.emplace_back(net.biases[l].size(), 0.0);
  }
  return opt;
}

void optimize_step(OptimizerState& opt, Mlp& net, const Gradients& grads) {
  if (opt.m_weights.size() != net.layer_count())
    throw std::invalid_argument("optimizer: shape mismatch");
  ++opt.step_count;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step_count));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step_count));

  const auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                          std::vector<double>& m, std::vector<double>& v) {
    if (p.size() != g.size()) throw std::invalid_argument("optimizer: gradient shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!std::isfinite(g[i])) throw std::domain_error("optimizer: non-finite gradient");
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
      if (!std::isfinite(p[i])) throw std::domain_error("optimizer: non-finite parameter");
    }
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    update(net.weights[l], grads.weights[l], opt.m_weights[l], opt.v_weights[l]);
    update(net.biases[l], grads.biases[l], opt.m_biases[l], opt.v_biases[l]);
  }
}

void polyak_blend(Mlp& target, const Mlp& online, double rho_new) {
  if (target.layer_dims != online.layer_dims ||
      target.output_activation != online.output_activation)
    throw std::invalid_argument("polyak: architecture mismatch");
  const double keep = 1.0 - rho_new;
  for (std::size_t l = 0; l < target.layer_count(); ++l) {
    for (std::size_t i = 0; i < target.weights[l].size(); ++i)
      target.weights[l][i] = keep * target.weights[l][i] + rho_new * online.weights[l][i];
    for (std::size_t i = 0; i < target.biases[l].size(); ++i)
      target.biases[l][i] = keep * target.biases[l][i] + rho_new * online.biases[l][i];
  }
}

std::uint64_t params_checksum(const Mlp& net) {
  std::uint64_t hash = 1469598103934665603ull;  // FNV-1a
  const auto mix = [&](const std::vector<double>& vals) {
    for (double v : vals) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      for (int b = 0; b < 8; ++b) {
        hash ^= (bits >> (8 * b)) & 0xffu;
        hash *= 1099511628211ull;
      }
    }
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    mix(net.weights[l]);
    mix(net.biases[l]);
  }
  return hash;
}

void save_checkpoint(const Mlp& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "mlp " << net.layer_dims.size();
  for (int d : net.layer_dims) out << ' ' << d;
  out << ' ' << (net.output_activation == OutputActivation::Tanh ? "tanh" : "identity")
      << '\n';
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (std::size_t i = 0; i < net.weights[l].size(); ++i)
      out << (i ? " " : "") << fmt_double(net.weights[l][i]);
    out << '\n';
    for (std::size_t i = 0; i < net.biases[l].size(); ++i)
      out << (i ? " " : "") << fmt_double(net.biases[l][i]);
    out << '\n';
  }
}

Mlp load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string tag;
  std::size_t ndims = 0;
  in >> tag >> ndims;
  if (tag != "mlp" || ndims < 2) throw std::runtime_error("bad checkpoint header in " + path);
  Mlp net;
  net.layer_dims.resize(ndims);
  for (std::size_t i = 0; i < ndims; ++i) in >> net.layer_dims[i];
  std::string act;
  in >> act;
  if (act == "tanh")
    net.output_activation = OutputActivation::Tanh;
  else if (act == "identity")
    net.output_activation = OutputActivation::Identity;
  else
    throw std::runtime_error("bad activation in " + path);
  for (std::size_t l = 1; l < ndims; ++l) {
    const std::size_t nw =
        static_cast<std::size_t>(net.layer_dims[l]) * net.layer_dims[l - 1];
    std::vector<double> w(nw), b(net.layer_dims[l]);
    std::string word;
    for (auto& v : w) {
      if (!(in >> word)) throw std::runtime_error("truncated checkpoint " + path);
      v = parse_double(word);
    }
    for (auto& v : b) {
      if (!(in >> word)) throw std::runtime_error("truncated checkpoint " + path);
      v = parse_double(word);
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

}  // namespace pidtune
