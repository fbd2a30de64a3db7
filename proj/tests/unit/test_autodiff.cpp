#include <doctest.h>

#include <cmath>
#include <random>

#include "eosprobe/dataset.hpp"
#include "eosprobe/errors.hpp"
#include "eosprobe/loss_graph.hpp"
#include "eosprobe/model.hpp"
#include "eosprobe/parallel.hpp"
#include "eosprobe/rng.hpp"
#include "support/test_graphs.hpp"

using namespace eosprobe;
using testsupport::dummy_dataset;
using testsupport::quadratic_graph;
using testsupport::zero_graph;

namespace {

ParamVector random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  NormalSampler rng(seed);
  ParamVector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

struct NetFixture {
  model::ModelSpec spec;
  data::LabeledDataset data;
  ad::LossGraph graph;
  ParamVector theta;

  NetFixture(int dim, std::vector<int> hidden, int n_c, model::Activation act,
             std::uint64_t seed, int n_d = 12)
      : spec(model::tiny_mlp(dim, hidden, n_c, act, seed)),
        data(data::synth_dataset(n_d, n_c, dim, 2.0, seed * 7 + 1)),
        graph(spec, data.shape),
        theta(model::init_kaiming(spec)) {}
};

double coord_rel_err(const ParamVector& a, const ParamVector& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) /
                                std::max({std::abs(a[i]), std::abs(b[i]), 1e-2}));
  return worst;
}

}  // namespace

TEST_SUITE("autodiff") {
  TEST_CASE("uniform logits give ln(n_c)") {
    // Final layer zeroed: logits all zero regardless of input.
    auto spec = model::tiny_mlp(3, {8}, 10, model::Activation::tanh, 5);
    auto data = data::synth_dataset(10, 10, 10, 1.0, 3);
    // n_c = 10 needs dim >= 10; rebuild spec to match.
    spec = model::tiny_mlp(10, {8}, 10, model::Activation::tanh, 5);
    ad::LossGraph graph(spec, data.shape);
    ParamVector theta = model::init_kaiming(spec);
    // Zero the last layer (weights + biases): last 8*10 + 10 entries.
    for (std::size_t i = theta.size() - 90; i < theta.size(); ++i) theta[i] = 0.0;
    CHECK(graph.eval_loss(theta, data) == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  }

  TEST_CASE("saturated softmax drives the loss to zero") {
    // One example whose label logit exceeds the other by 1000.
    ad::Tape t;
    const auto z0 = t.param(0);
    const auto z1 = t.param(1);
    auto m = t.max_shift(z0, z1);
    auto s = t.add(t.exp(t.sub(z0, m)), t.exp(t.sub(z1, m)));
    auto onehot0 = t.aux(0);
    auto onehot1 = t.aux(1);
    auto zlab = t.fma(onehot1, z1, t.fma(onehot0, z0, t.zero()));
    auto loss = t.sub(t.add(m, t.log(s)), zlab);
    auto graph = ad::LossGraph::from_tape(std::move(t), loss, 0, 2);

    data::LabeledDataset d;
    d.shape = {0};
    d.labels = {0};
    d.n_c = 2;
    ParamVector theta(std::vector<double>{1000.0, 0.0});
    CHECK(graph.eval_loss(theta, d) < 1e-12);
  }

  TEST_CASE("quadratic test graph evaluates, differentiates and hvps exactly") {
    auto graph = quadratic_graph({1.0, 2.0, 3.0});
    auto d = dummy_dataset();
    ParamVector theta(std::vector<double>{1.0, 1.0, 1.0});

    CHECK(graph.eval_loss(theta, d) == doctest::Approx(3.0).epsilon(1e-15));

    const ParamVector g = graph.gradient(theta, d);
    CHECK(g[0] == doctest::Approx(1.0));
    CHECK(g[1] == doctest::Approx(2.0));
    CHECK(g[2] == doctest::Approx(3.0));

    ParamVector v(std::vector<double>{1.0, 0.0, 0.0});
    ParamVector hv = graph.hvp(theta, v, d);
    CHECK(hv[0] == doctest::Approx(1.0));
    CHECK(hv[1] == doctest::Approx(0.0));
    CHECK(hv[2] == doctest::Approx(0.0));

    v = ParamVector(std::vector<double>{0.0, 0.0, 1.0});
    hv = graph.hvp(theta, v, d);
    CHECK(hv[2] == doctest::Approx(3.0));

    SUBCASE("zero gradient at the minimum") {
      ParamVector at_min(3);
      const ParamVector g0 = graph.gradient(at_min, d);
      for (std::size_t i = 0; i < 3; ++i) CHECK(g0[i] == 0.0);
    }
  }

  TEST_CASE("fd_gradient matches the quadratic closed form") {
    auto graph = quadratic_graph({1.0, 2.0, 3.0});
    auto d = dummy_dataset();
    ParamVector theta(std::vector<double>{1.0, 1.0, 1.0});
    const ParamVector g = graph.fd_gradient(theta, d, 1e-5);
    CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(g[1] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(g[2] == doctest::Approx(3.0).epsilon(1e-9));
  }

  TEST_CASE("fd_gradient of the zero function is the zero vector") {
    auto graph = zero_graph(4);
    auto d = dummy_dataset();
    const ParamVector g = graph.fd_gradient(random_vector(4, 9), d, 1e-5);
    for (std::size_t i = 0; i < 4; ++i) CHECK(g[i] == 0.0);
  }

  TEST_CASE("fd_hvp on the quadratic and at v = 0") {
    auto graph = quadratic_graph({1.0, 2.0, 3.0});
    auto d = dummy_dataset();
    ParamVector theta(std::vector<double>{1.0, 1.0, 1.0});
    ParamVector v(std::vector<double>{1.0, 1.0, 1.0});
    const ParamVector hv = graph.fd_hvp(theta, v, d, 1e-4);
    CHECK(hv[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(hv[1] == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(hv[2] == doctest::Approx(3.0).epsilon(1e-8));

    const ParamVector zero_dir(3);
    const ParamVector hz = graph.fd_hvp(theta, zero_dir, d, 1e-4);
    for (std::size_t i = 0; i < 3; ++i) CHECK(hz[i] == 0.0);
  }

  TEST_CASE("gradient agrees with central finite differences on random nets") {
    // 20 random draws across activations; tolerance 1e-5 max relative
    // coordinate error with a small-denominator guard.
    for (std::uint64_t s = 1; s <= 10; ++s) {
      NetFixture tanh_net(3, {6, 6}, 2, model::Activation::tanh, s);
      CHECK(coord_rel_err(tanh_net.graph.gradient(tanh_net.theta, tanh_net.data),
                          tanh_net.graph.fd_gradient(tanh_net.theta, tanh_net.data, 1e-5)) <=
            1e-5);
      // Random perturbation keeps relu nets away from fold points.
      NetFixture relu_net(3, {6, 6}, 2, model::Activation::relu, s + 100);
      ParamVector jitter = random_vector(relu_net.theta.size(), s, 1e-3);
      ParamVector theta = add(relu_net.theta, jitter);
      CHECK(coord_rel_err(relu_net.graph.gradient(theta, relu_net.data),
                          relu_net.graph.fd_gradient(theta, relu_net.data, 1e-5)) <= 1e-5);
    }
  }

  TEST_CASE("hvp agrees with finite differences of gradients on a tanh net") {
    NetFixture f(4, {7, 5}, 3, model::Activation::tanh, 3);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const ParamVector v = random_vector(f.theta.size(), 77 + s);
      const ParamVector hv = f.graph.hvp(f.theta, v, f.data);
      const ParamVector fd = f.graph.fd_hvp(f.theta, v, f.data, 1e-4 / norm2(v));
      ParamVector diff = sub(hv, fd);
      CHECK(norm2(diff) / std::max({norm2(hv), norm2(fd), 1e-12}) <= 1e-4);
    }
  }

  TEST_CASE("hvp symmetry: u.Hv == v.Hu") {
    NetFixture f(3, {8}, 2, model::Activation::tanh, 11);
    double hnorm = 0.0;
    for (int s = 0; s < 100; ++s) {
      const ParamVector u = random_vector(f.theta.size(), 1000 + s);
      const ParamVector v = random_vector(f.theta.size(), 2000 + s);
      const ParamVector hv = f.graph.hvp(f.theta, v, f.data);
      const ParamVector hu = f.graph.hvp(f.theta, u, f.data);
      hnorm = std::max(hnorm, norm2(hv) / norm2(v));
      const double lhs = dot(u, hv);
      const double rhs = dot(v, hu);
      CHECK(std::abs(lhs - rhs) <= 1e-10 * norm2(u) * norm2(v) * std::max(1.0, hnorm));
    }
  }

  TEST_CASE("hvp is linear in v") {
    NetFixture f(3, {8}, 2, model::Activation::tanh, 13);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> coeff(-2.0, 2.0);
    for (int s = 0; s < 20; ++s) {
      const ParamVector u = random_vector(f.theta.size(), 3000 + s);
      const ParamVector v = random_vector(f.theta.size(), 4000 + s);
      const double a = coeff(rng), b = coeff(rng);
      ParamVector combo(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) combo[i] = a * u[i] + b * v[i];
      const ParamVector lhs = f.graph.hvp(f.theta, combo, f.data);
      const ParamVector hu = f.graph.hvp(f.theta, u, f.data);
      const ParamVector hv = f.graph.hvp(f.theta, v, f.data);
      ParamVector rhs(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) rhs[i] = a * hu[i] + b * hv[i];
      ParamVector diff = sub(lhs, rhs);
      const double bound = 1e-9 * (std::abs(a) * norm2(u) + std::abs(b) * norm2(v)) *
                           std::max({1.0, norm2(hu), norm2(hv)});
      CHECK(norm2(diff) <= bound);
    }
  }

  TEST_CASE("evaluation is deterministic bit for bit") {
    NetFixture f(4, {9, 9}, 3, model::Activation::relu, 17, 20);
    CHECK(f.graph.eval_loss(f.theta, f.data) == f.graph.eval_loss(f.theta, f.data));
    CHECK(f.graph.gradient(f.theta, f.data) == f.graph.gradient(f.theta, f.data));
    const ParamVector v = random_vector(f.theta.size(), 5);
    CHECK(f.graph.hvp(f.theta, v, f.data) == f.graph.hvp(f.theta, v, f.data));
  }

  TEST_CASE("results do not depend on the thread budget") {
    NetFixture f(4, {9, 9}, 3, model::Activation::tanh, 19, 100);
    const int before = thread_count();
    set_thread_count(1);
    const double l1 = f.graph.eval_loss(f.theta, f.data);
    const ParamVector g1 = f.graph.gradient(f.theta, f.data);
    set_thread_count(4);
    const double l4 = f.graph.eval_loss(f.theta, f.data);
    const ParamVector g4 = f.graph.gradient(f.theta, f.data);
    set_thread_count(before);
    CHECK(l1 == l4);
    CHECK(g1 == g4);
  }

  TEST_CASE("shape mismatches and empty data are rejected") {
    NetFixture f(3, {4}, 2, model::Activation::tanh, 23);
    ParamVector wrong(f.theta.size() + 1);
    CHECK_THROWS_AS(f.graph.eval_loss(wrong, f.data), ShapeError);
    data::LabeledDataset empty;
    empty.shape = {3};
    empty.n_c = 2;
    CHECK_THROWS_AS(f.graph.eval_loss(f.theta, empty), Error);
  }

  TEST_CASE("non-finite loss signals divergence") {
    auto graph = quadratic_graph({1.0});
    auto d = dummy_dataset();
    ParamVector theta(std::vector<double>{1e200});
    CHECK_THROWS_AS(graph.eval_loss(theta, d), DivergenceError);
  }
}
