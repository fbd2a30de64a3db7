#include <doctest.h>

#include <cmath>

#include "eosprobe/dataset.hpp"
#include "eosprobe/errors.hpp"
#include "eosprobe/loss_graph.hpp"
#include "eosprobe/model.hpp"
#include "eosprobe/rng.hpp"
#include "eosprobe/spectral.hpp"
#include "support/dense_eig.hpp"

using namespace eosprobe;
using namespace eosprobe::spectral;

namespace {

HvpFn matrix_op(const std::vector<double>& m, std::size_t n) {
  return [m, n](const ParamVector& v) {
    ParamVector out(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += m[i * n + j] * v[j];
      out[i] = s;
    }
    return out;
  };
}

std::vector<double> diag_matrix(const std::vector<double>& d) {
  const std::size_t n = d.size();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] = d[i];
  return m;
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("selection by absolute value, reported in signed order") {
    const auto op = matrix_op(diag_matrix({5.0, 2.0, -3.0}), 3);
    const auto r = top_k_eigenpairs(op, 3, 2, 1e-10, 500);
    REQUIRE(r.k() == 2);
    CHECK(r.eigenvalues[0] == doctest::Approx(5.0).epsilon(1e-8));
    CHECK(r.eigenvalues[1] == doctest::Approx(-3.0).epsilon(1e-8));
    CHECK(r.all_converged());
    // Eigenvectors are +-e1, +-e3 with the sign fixed positive.
    CHECK(std::abs(r.eigenvectors[0][0]) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.eigenvectors[0][0] > 0.0);
    CHECK(std::abs(r.eigenvectors[1][2]) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.eigenvectors[1][2] > 0.0);
  }

  TEST_CASE("2x2 diagonal, k=1") {
    const auto op = matrix_op(diag_matrix({3.0, 1.0}), 2);
    const auto r = top_k_eigenpairs(op, 2, 1, 1e-10, 500);
    CHECK(r.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(std::abs(r.eigenvectors[0][0]) == doctest::Approx(1.0).epsilon(1e-8));
  }

  TEST_CASE("matches a dense decomposition on a tiny net Hessian") {
    auto spec = model::tiny_mlp(4, {6}, 2, model::Activation::tanh, 3);
    auto data = data::synth_dataset(12, 2, 4, 2.0, 5);
    ad::LossGraph graph(spec, data.shape);
    ParamVector theta = model::init_kaiming(spec);
    const std::size_t n = graph.param_count();
    REQUIRE(n <= 300);

    // Assemble H column by column via hvp on basis vectors.
    std::vector<double> h(n * n);
    for (std::size_t j = 0; j < n; ++j) {
      ParamVector e(n);
      e[j] = 1.0;
      const ParamVector col = graph.hvp(theta, e, data);
      for (std::size_t i = 0; i < n; ++i) h[i * n + j] = col[i];
    }
    const auto dense = testsupport::dense_symmetric_eig(h, n);

    const int k = 5;
    const auto hvp_fn = [&](const ParamVector& v) { return graph.hvp(theta, v, data); };
    const auto r = top_k_eigenpairs(hvp_fn, n, k, 1e-9, 2000);
    REQUIRE(r.all_converged());

    // Dense reference: top-k by |value|, then signed order.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(dense.values[a]) > std::abs(dense.values[b]);
    });
    std::vector<std::size_t> pick(idx.begin(), idx.begin() + k);
    std::sort(pick.begin(), pick.end(),
              [&](std::size_t a, std::size_t b) { return dense.values[a] > dense.values[b]; });

    for (int i = 0; i < k; ++i) {
      const double want = dense.values[pick[static_cast<std::size_t>(i)]];
      CHECK(std::abs(r.eigenvalues[static_cast<std::size_t>(i)] - want) <=
            1e-4 * std::max(1.0, std::abs(want)));
      double align = 0.0;
      for (std::size_t c = 0; c < n; ++c)
        align += dense.vectors[pick[static_cast<std::size_t>(i)]][c] *
                 r.eigenvectors[static_cast<std::size_t>(i)][c];
      CHECK(std::abs(align) >= 0.999);
    }
  }

  TEST_CASE("result invariants: orthonormal, sign-fixed, residual-bounded") {
    NormalSampler rng(9);
    const std::size_t n = 40;
    std::vector<double> m(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        const double x = rng.normal();
        m[i * n + j] = x;
        m[j * n + i] = x;
      }
    const auto r = top_k_eigenpairs(matrix_op(m, n), n, 6, 1e-8, 5000);
    REQUIRE(r.all_converged());
    for (int i = 0; i < r.k(); ++i) {
      CHECK(std::abs(norm2(r.eigenvectors[static_cast<std::size_t>(i)]) - 1.0) <= 1e-10);
      for (int j = i + 1; j < r.k(); ++j)
        CHECK(std::abs(dot(r.eigenvectors[static_cast<std::size_t>(i)],
                           r.eigenvectors[static_cast<std::size_t>(j)])) <= 1e-8);
      CHECK(r.residuals[static_cast<std::size_t>(i)] <=
            1e-8 * std::max(1.0, std::abs(r.eigenvalues[static_cast<std::size_t>(i)])) * 10);
      if (i > 0)
        CHECK(r.eigenvalues[static_cast<std::size_t>(i - 1)] >=
              r.eigenvalues[static_cast<std::size_t>(i)]);
    }
  }

  TEST_CASE("psd matrix: returned lambda_1 dominates random Rayleigh quotients") {
    NormalSampler rng(31);
    const std::size_t n = 25;
    std::vector<double> b(n * n);
    for (auto& x : b) x = rng.normal();
    // m = b^T b is PSD.
    std::vector<double> m(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += b[k * n + i] * b[k * n + j];
        m[i * n + j] = s;
      }
    const auto op = matrix_op(m, n);
    const auto r = top_k_eigenpairs(op, n, 3, 1e-9, 5000);
    for (int trial = 0; trial < 50; ++trial) {
      ParamVector v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = rng.normal();
      scale(v, 1.0 / norm2(v));
      CHECK(r.eigenvalues[0] >= dot(v, op(v)) - 1e-8);
    }
  }

  TEST_CASE("warm start on an unchanged operator converges in at most 2 sweeps") {
    const auto op = matrix_op(diag_matrix({9.0, 5.0, 2.0, 1.0, 0.5}), 5);
    const auto first = top_k_eigenpairs(op, 5, 3, 1e-8, 1000);
    REQUIRE(first.all_converged());
    const auto again = top_k_eigenpairs(op, 5, 3, 1e-8, 1000, &first.eigenvectors);
    CHECK(again.all_converged());
    CHECK(again.iterations <= 2);
  }

  TEST_CASE("eta_star and rho") {
    CHECK(eta_star(2000.0).value() == doctest::Approx(0.001));
    const double eta = 0.0007;
    CHECK(eta_star(2.0 / eta).value() == doctest::Approx(eta).epsilon(1e-15));
    CHECK(!eta_star(1e-20).has_value());
    CHECK(!eta_star(-5.0).has_value());

    CHECK(rho(0.003, 0.001) == doctest::Approx(3.0));
    CHECK(rho(0.5, 0.5) == doctest::Approx(1.0));
    CHECK(rho(0.0001, eta_star(2000.0).value()) == doctest::Approx(0.1));
  }

  TEST_CASE("rho of a sorted positive spectrum is nonincreasing") {
    const std::vector<double> lam{40.0, 22.0, 8.0, 3.0, 0.5};
    const auto rhos = rho_series(0.01, lam);
    for (std::size_t i = 1; i < rhos.size(); ++i) CHECK(rhos[i - 1] >= rhos[i]);
  }

  TEST_CASE("hvp returning non-finite values is an error") {
    const HvpFn bad = [](const ParamVector& v) {
      ParamVector out(v.size());
      out[0] = std::numeric_limits<double>::quiet_NaN();
      return out;
    };
    CHECK_THROWS_AS(top_k_eigenpairs(bad, 4, 2, 1e-6, 10), SpectralError);
  }

  TEST_CASE("parameter validation") {
    const auto op = matrix_op(diag_matrix({1.0, 2.0}), 2);
    CHECK_THROWS_AS(top_k_eigenpairs(op, 2, 3, 1e-6, 10), SpectralError);
    CHECK_THROWS_AS(top_k_eigenpairs(op, 2, 0, 1e-6, 10), SpectralError);
    CHECK_THROWS_AS(top_k_eigenpairs(op, 2, 1, -1.0, 10), SpectralError);
  }
}
