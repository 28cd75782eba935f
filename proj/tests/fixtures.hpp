#pragma once

#include "mlgom/model.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace fixtures {

using mlgom::Index;
using mlgom::Matrix;

/// Random valid model: one pure row per class at shuffled positions, the rest
/// Dirichlet(1)-like mixed rows, B uniform on (0.05, 1).
inline mlgom::ModelParams<double> random_model(std::mt19937_64& gen, Index N, Index J, Index K,
                                               Index L, double rho = 1.0, int M = 5) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  mlgom::ModelParams<double> p;
  p.N = N;
  p.J = J;
  p.K = K;
  p.L = L;
  p.M = M;
  p.rho = rho;
  p.Pi = Matrix<double>::Zero(N, K);
  std::vector<Index> rows(static_cast<std::size_t>(N));
  std::iota(rows.begin(), rows.end(), Index{0});
  std::shuffle(rows.begin(), rows.end(), gen);
  for (Index k = 0; k < K; ++k) {
    p.Pi(rows[static_cast<std::size_t>(k)], k) = 1.0;
    p.pure_index.push_back(rows[static_cast<std::size_t>(k)]);
  }
  for (Index r = K; r < N; ++r) {
    const Index i = rows[static_cast<std::size_t>(r)];
    double s = 0.0;
    for (Index k = 0; k < K; ++k) {
      p.Pi(i, k) = -std::log(1.0 - u(gen));
      s += p.Pi(i, k);
    }
    p.Pi.row(i) /= s;
    // re-normalize so the last column absorbs rounding
    p.Pi(i, K - 1) = 1.0 - p.Pi.row(i).head(K - 1).sum();
  }
  for (Index l = 0; l < L; ++l) {
    Matrix<double> b(J, K);
    for (Index j = 0; j < J; ++j)
      for (Index k = 0; k < K; ++k) b(j, k) = 0.05 + 0.95 * u(gen);
    p.B.push_back(b);
  }
  return p;
}

inline mlgom::ResponseTensor tensor(std::initializer_list<mlgom::IntMatrix> layers, int M) {
  mlgom::ResponseTensor t;
  t.M = M;
  t.layers.assign(layers.begin(), layers.end());
  return t;
}

inline mlgom::ResponseTensor random_tensor(std::mt19937_64& gen, Index N, Index J, Index L, int M) {
  std::uniform_int_distribution<int> d(0, M);
  mlgom::ResponseTensor t;
  t.M = M;
  for (Index l = 0; l < L; ++l) {
    mlgom::IntMatrix R(N, J);
    for (Index i = 0; i < N; ++i)
      for (Index j = 0; j < J; ++j) R(i, j) = d(gen);
    t.layers.push_back(R);
  }
  return t;
}

}  // namespace fixtures
