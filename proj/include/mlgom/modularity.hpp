#pragma once

#include "mlgom/estimators.hpp"
#include "mlgom/types.hpp"

#include <limits>
#include <vector>

namespace mlgom {

/// Averaged fuzzy modularity of a soft partition over the layer Gram
/// matrices G_l = R_l R_l' (diagonal kept).
///
/// Per layer, with g_i = sum_j G_l(i,j) and eta = sum_i g_i,
///   Q_l = (1/eta) sum_{i,j} (G_l(i,j) - g_i g_j / eta) <Pi(i,:), Pi(j,:)>
///       = (||R_l' Pi||_F^2 - ||Pi' g||^2 / eta) / eta,
/// and Q is the mean of Q_l over layers. A layer with eta = 0 contributes 0.
template <typename Derived>
double averaged_fuzzy_modularity(const ResponseTensor& R, const Eigen::MatrixBase<Derived>& Pi,
                                 std::vector<double>* eta_out = nullptr) {
  using Scalar = double;
  R.check();
  if (Pi.rows() != R.rows()) throw DomainError("membership rows do not match subjects");
  const Matrix<Scalar> P = Pi.template cast<Scalar>();
  double total = 0.0;
  if (eta_out) eta_out->clear();
  for (Index l = 0; l < R.num_layers(); ++l) {
    const Matrix<Scalar> X = R.layer<Scalar>(l);
    const Vector<Scalar> g = X * X.transpose().rowwise().sum();
    const double eta = g.sum();
    if (eta_out) eta_out->push_back(eta);
    if (eta == 0.0) continue;
    const double within = (X.transpose() * P).squaredNorm();
    const double expected = (P.transpose() * g).squaredNorm() / eta;
    total += (within - expected) / eta;
  }
  return total / static_cast<double>(R.num_layers());
}

struct ModularityReport {
  std::vector<double> q;       // q[k-1] = Q(Pi_hat_k); -inf when the estimator failed
  std::vector<bool> failed;
  std::vector<double> eta;     // per-layer totals
  Index selected_k = 1;

  double q_at(Index k) const { return q[static_cast<std::size_t>(k - 1)]; }
};

/// Runs `method` for every k in 1..K_c and picks the k with the largest Q
/// (smallest k on ties). The aggregate is decomposed once and reused.
inline ModularityReport select_num_classes(const ResponseTensor& R, Index K_c, Method method) {
  R.check();
  if (K_c < 1 || K_c > std::min(R.rows(), R.cols()))
    throw DomainError("K_c must lie in [1, min(N, J)]");
  ModularityReport rep;
  MethodSpectrum<double> spectrum(R, method);
  double best = -std::numeric_limits<double>::infinity();
  for (Index k = 1; k <= K_c; ++k) {
    double q = -std::numeric_limits<double>::infinity();
    bool failed = false;
    try {
      const auto est = memberships_from_spectrum(spectrum, k);
      q = averaged_fuzzy_modularity(R, est.Pi_hat, k == 1 ? &rep.eta : nullptr);
    } catch (const Error&) {
      failed = true;
    }
    rep.q.push_back(q);
    rep.failed.push_back(failed);
    if (q > best) {
      best = q;
      rep.selected_k = k;
    }
  }
  if (rep.eta.empty()) averaged_fuzzy_modularity(R, Matrix<double>::Ones(R.rows(), 1), &rep.eta);
  return rep;
}

}  // namespace mlgom
