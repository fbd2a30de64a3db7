#include "eosprobe/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include "eosprobe/dataset.hpp"
#include "eosprobe/loss_graph.hpp"
#include "eosprobe/model.hpp"
#include "eosprobe/rng.hpp"
#include "eosprobe/spectral.hpp"
#include "eosprobe/subspace.hpp"

namespace eosprobe::verify {

namespace {

struct Fixture {
  model::ModelSpec spec;
  data::LabeledDataset data;
  ad::LossGraph graph;
  ParamVector theta;

  Fixture(int dim, std::vector<int> hidden, int n_c, model::Activation act, std::uint64_t seed)
      : spec(model::tiny_mlp(dim, hidden, n_c, act, seed)),
        data(data::synth_dataset(16, n_c, dim, 3.0, seed ^ 0x9e3779b9ULL)),
        graph(spec, data.shape),
        theta(model::init_kaiming(spec)) {}
};

double rel_err(double a, double b, double floor_) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor_});
}

double vec_rel_err(const ParamVector& a, const ParamVector& b) {
  ParamVector d = sub(a, b);
  return norm2(d) / std::max({norm2(a), norm2(b), 1e-12});
}

bool check_gradient_fd(std::ostream& out) {
  double worst = 0.0;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    Fixture f(4, {8, 8}, 3, model::Activation::tanh, s);
    const ParamVector g = f.graph.gradient(f.theta, f.data);
    const ParamVector fd = f.graph.fd_gradient(f.theta, f.data, 1e-5);
    for (std::size_t i = 0; i < g.size(); ++i)
      worst = std::max(worst, rel_err(g[i], fd[i], 1e-2));
  }
  const bool ok = worst <= 1e-5;
  out << (ok ? "[PASS]" : "[FAIL]") << " gradient-vs-finite-differences: max rel err " << worst
      << " (tol 1e-5)\n";
  return ok;
}

bool check_hvp_fd(std::ostream& out) {
  double worst = 0.0;
  NormalSampler rng(42);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    Fixture f(4, {8, 8}, 3, model::Activation::tanh, s);
    ParamVector v(f.theta.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.normal();
    const ParamVector hv = f.graph.hvp(f.theta, v, f.data);
    const ParamVector fd = f.graph.fd_hvp(f.theta, v, f.data, 1e-4 / norm2(v));
    worst = std::max(worst, vec_rel_err(hv, fd));
  }
  const bool ok = worst <= 1e-4;
  out << (ok ? "[PASS]" : "[FAIL]") << " hvp-vs-finite-differences: max rel err " << worst
      << " (tol 1e-4)\n";
  return ok;
}

bool check_hvp_symmetry(std::ostream& out) {
  double worst = 0.0;
  NormalSampler rng(7);
  Fixture f(4, {10}, 2, model::Activation::tanh, 11);
  for (int trial = 0; trial < 20; ++trial) {
    ParamVector u(f.theta.size()), v(f.theta.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = rng.normal();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.normal();
    const double uhv = dot(u, f.graph.hvp(f.theta, v, f.data));
    const double vhu = dot(v, f.graph.hvp(f.theta, u, f.data));
    worst = std::max(worst, rel_err(uhv, vhu, 1e-9));
  }
  const bool ok = worst <= 1e-8;
  out << (ok ? "[PASS]" : "[FAIL]") << " hvp-symmetry: max rel asymmetry " << worst
      << " (tol 1e-8)\n";
  return ok;
}

bool check_hvp_linearity(std::ostream& out) {
  NormalSampler rng(13);
  Fixture f(4, {10}, 2, model::Activation::tanh, 5);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    ParamVector u(f.theta.size()), v(f.theta.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = rng.normal();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.normal();
    const double a = 2.0 * rng.normal(), b = -0.5 * rng.normal();
    ParamVector combo(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) combo[i] = a * u[i] + b * v[i];
    const ParamVector lhs = f.graph.hvp(f.theta, combo, f.data);
    const ParamVector hu = f.graph.hvp(f.theta, u, f.data);
    const ParamVector hv = f.graph.hvp(f.theta, v, f.data);
    ParamVector rhs(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) rhs[i] = a * hu[i] + b * hv[i];
    ParamVector diff = sub(lhs, rhs);
    const double scale_ref = (std::abs(a) * norm2(u) + std::abs(b) * norm2(v)) *
                             std::max({1.0, norm2(hu), norm2(hv)});
    worst = std::max(worst, norm2(diff) / scale_ref);
  }
  const bool ok = worst <= 1e-9;
  out << (ok ? "[PASS]" : "[FAIL]") << " hvp-linearity: max scaled deviation " << worst
      << " (tol 1e-9)\n";
  return ok;
}

bool check_eigensolver_dense(std::ostream& out) {
  Fixture f(4, {6}, 2, model::Activation::tanh, 3);
  const std::size_t n = f.graph.param_count();

  // Assemble the Hessian column by column through hvp on basis vectors.
  std::vector<double> h(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    ParamVector e(n);
    e[j] = 1.0;
    const ParamVector col = f.graph.hvp(f.theta, e, f.data);
    for (std::size_t i = 0; i < n; ++i) h[i * n + j] = col[i];
  }
  std::vector<double> vals, vecs;
  spectral::jacobi_eigh(h, n, vals, vecs);

  const int k = 5;
  const auto hvp_fn = [&](const ParamVector& v) { return f.graph.hvp(f.theta, v, f.data); };
  const auto eig = spectral::top_k_eigenpairs(hvp_fn, n, k, 1e-8, 2000);

  // Dense reference: k largest by |value|, then sorted by signed value.
  std::vector<std::pair<double, std::size_t>> by_mag;
  for (std::size_t i = 0; i < n; ++i) by_mag.emplace_back(std::abs(vals[i]), i);
  std::sort(by_mag.rbegin(), by_mag.rend());
  std::vector<std::size_t> pick;
  for (int i = 0; i < k; ++i) pick.push_back(by_mag[static_cast<std::size_t>(i)].second);
  std::sort(pick.begin(), pick.end(),
            [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });

  double worst_val = 0.0, worst_align = 1.0;
  for (int i = 0; i < k; ++i) {
    const double ref = vals[pick[static_cast<std::size_t>(i)]];
    worst_val = std::max(worst_val,
                         rel_err(eig.eigenvalues[static_cast<std::size_t>(i)], ref, 1e-6));
    double align = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      align += vecs[pick[static_cast<std::size_t>(i)] * n + r] *
               eig.eigenvectors[static_cast<std::size_t>(i)][r];
    worst_align = std::min(worst_align, std::abs(align));
  }
  const bool ok = worst_val <= 1e-4 && worst_align >= 0.999;
  out << (ok ? "[PASS]" : "[FAIL]") << " eigensolver-vs-dense: max value rel err " << worst_val
      << " (tol 1e-4), min alignment " << worst_align << " (min 0.999)\n";
  return ok;
}

bool check_decomposition(std::ostream& out) {
  Fixture f(4, {8}, 2, model::Activation::tanh, 9);
  const auto hvp_fn = [&](const ParamVector& v) { return f.graph.hvp(f.theta, v, f.data); };
  const auto eig = spectral::top_k_eigenpairs(hvp_fn, f.graph.param_count(), 4, 1e-8, 2000);
  const ParamVector g = f.graph.gradient(f.theta, f.data);
  const auto dec = subspace::decompose(g, eig, 1);

  const double g2 = dot(g, g);
  const double parts = dec.top_norm * dec.top_norm + dec.bulk_norm * dec.bulk_norm;
  const double pyth = std::abs(g2 - parts) / std::max(g2, 1e-12);
  ParamVector rebuilt = add(dec.top, dec.bulk);
  const double recon = vec_rel_err(rebuilt, g);
  const bool ok = pyth <= 1e-8 && recon <= 1e-10;
  out << (ok ? "[PASS]" : "[FAIL]") << " decomposition-identities: pythagorean err " << pyth
      << " (tol 1e-8), reconstruction err " << recon << " (tol 1e-10)\n";
  return ok;
}

bool check_determinism(std::ostream& out) {
  Fixture f(4, {8, 8}, 3, model::Activation::relu, 21);
  const double l1 = f.graph.eval_loss(f.theta, f.data);
  const double l2 = f.graph.eval_loss(f.theta, f.data);
  const ParamVector g1 = f.graph.gradient(f.theta, f.data);
  const ParamVector g2 = f.graph.gradient(f.theta, f.data);
  const bool ok = (l1 == l2) && (g1 == g2);
  out << (ok ? "[PASS]" : "[FAIL]") << " evaluation-determinism: repeated evaluations "
      << (ok ? "bit-identical" : "differ") << "\n";
  return ok;
}

}  // namespace

bool run_verify(std::ostream& out) {
  bool ok = true;
  ok &= check_gradient_fd(out);
  ok &= check_hvp_fd(out);
  ok &= check_hvp_symmetry(out);
  ok &= check_hvp_linearity(out);
  ok &= check_eigensolver_dense(out);
  ok &= check_decomposition(out);
  ok &= check_determinism(out);
  out << (ok ? "all properties passed\n" : "some properties FAILED\n");
  return ok;
}

}  // namespace eosprobe::verify
