#pragma once

#include "mlgom/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace mlgom {

/// Leading eigenpairs (or left singular pairs) of a matrix.
template <typename Scalar>
struct SpectralPair {
  Vector<Scalar> values;   // ordered by decreasing magnitude
  Matrix<Scalar> vectors;  // orthonormal columns
  // |values(K-1)| fell below 1e-12 * ||A||_F. Not an error by itself.
  bool rank_deficient = false;
};

template <typename Scalar>
struct SingularTriple {
  Vector<Scalar> values;
  Matrix<Scalar> left;
  Matrix<Scalar> right;
  bool rank_deficient = false;
};

inline constexpr double kRankTol = 1e-12;

namespace detail {

template <typename Scalar, typename Layers>
Matrix<Scalar> gram_sum(const Layers& layers, bool debias) {
  const Index n = layers.empty() ? 0 : layers.front().rows();
  Matrix<Scalar> S = Matrix<Scalar>::Zero(n, n);
  // Layers are reduced in index order so the floating-point sum is fixed.
  for (const auto& layer : layers) {
    const Matrix<Scalar> R = layer.template cast<Scalar>();
    Matrix<Scalar> G(n, n);
    G.noalias() = R * R.transpose();
    if (debias) G.diagonal() -= R.rowwise().squaredNorm();
    S += G;
  }
  return S;
}

}  // namespace detail

/// S = sum_l (R_l R_l' - D_l) with D_l = diag of row sums of squared responses.
/// Each layer's contribution has an exactly zero diagonal.
template <typename Scalar = double>
Matrix<Scalar> debiased_sum_of_grams(const ResponseTensor& R) {
  return detail::gram_sum<Scalar>(R.layers, true);
}

/// S~ = sum_l R_l R_l', the uncorrected aggregate.
template <typename Scalar = double>
Matrix<Scalar> sum_of_grams(const ResponseTensor& R) {
  return detail::gram_sum<Scalar>(R.layers, false);
}

/// Sum of population Gram matrices sum_l P_l P_l'. No debiasing: inputs are exact.
template <typename Scalar>
Matrix<Scalar> sum_of_grams(const PopulationTensor<Scalar>& pop) {
  return detail::gram_sum<Scalar>(pop.layers, false);
}

template <typename Scalar = double>
Matrix<Scalar> sum_responses(const ResponseTensor& R) {
  Matrix<Scalar> out = Matrix<Scalar>::Zero(R.rows(), R.cols());
  for (const auto& layer : R.layers) out += layer.template cast<Scalar>();
  return out;
}

template <typename Scalar>
Matrix<Scalar> sum_responses(const PopulationTensor<Scalar>& pop) {
  Matrix<Scalar> out = Matrix<Scalar>::Zero(pop.rows(), pop.cols());
  for (const auto& layer : pop.layers) out += layer;
  return out;
}

/// Full eigendecomposition of a symmetric matrix with eigenpairs sorted by
/// decreasing |lambda|. Computing it once lets callers take several leading
/// blocks (model selection sweeps k = 1..K_c) without re-solving.
template <typename Scalar>
class SymmetricSpectrum {
 public:
  template <typename Derived>
  explicit SymmetricSpectrum(const Eigen::MatrixBase<Derived>& A) {
    if (A.rows() != A.cols()) throw DomainError("matrix is not square");
    const Matrix<Scalar> M = A.template cast<Scalar>();
    norm_ = M.norm();
    const Scalar asym = (M - M.transpose()).norm();
    if (asym > Scalar(1e-10) * norm_)
      throw DomainError("matrix is not symmetric within 1e-10 relative tolerance");
    const Matrix<Scalar> sym = (M + M.transpose()) / Scalar(2);
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym);
    if (es.info() != Eigen::Success) throw DegenerateInputError("eigensolver did not converge");

    const Index n = sym.rows();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    const auto& ev = es.eigenvalues();
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return std::abs(ev(a)) > std::abs(ev(b)); });
    values_.resize(n);
    vectors_.resize(n, n);
    for (Index c = 0; c < n; ++c) {
      values_(c) = ev(order[static_cast<std::size_t>(c)]);
      vectors_.col(c) = es.eigenvectors().col(order[static_cast<std::size_t>(c)]);
    }
  }

  Index size() const { return values_.size(); }
  Scalar frobenius_norm() const { return norm_; }

  SpectralPair<Scalar> leading(Index K) const {
    if (K < 1 || K > size())
      throw DomainError("requested " + std::to_string(K) + " eigenpairs of a " +
                        std::to_string(size()) + "x" + std::to_string(size()) + " matrix");
    SpectralPair<Scalar> out;
    out.values = values_.head(K);
    out.vectors = vectors_.leftCols(K);
    out.rank_deficient = !(std::abs(out.values(K - 1)) >= Scalar(kRankTol) * norm_) ||
                         norm_ == Scalar(0);
    return out;
  }

 private:
  Vector<Scalar> values_;
  Matrix<Scalar> vectors_;
  Scalar norm_ = Scalar(0);
};

/// The K eigenpairs of largest |lambda| of a symmetric matrix.
template <typename Derived>
SpectralPair<typename Derived::Scalar> top_k_eigen(const Eigen::MatrixBase<Derived>& A, Index K) {
  return SymmetricSpectrum<typename Derived::Scalar>(A).leading(K);
}

/// Full thin SVD of a rectangular matrix, singular values descending.
template <typename Scalar>
class SingularSpectrum {
 public:
  template <typename Derived>
  explicit SingularSpectrum(const Eigen::MatrixBase<Derived>& A)
      : svd_(A.template cast<Scalar>(), Eigen::ComputeThinU | Eigen::ComputeThinV),
        norm_(A.template cast<Scalar>().norm()) {}

  Index size() const { return svd_.singularValues().size(); }

  SingularTriple<Scalar> leading(Index K) const {
    if (K < 1 || K > size())
      throw DomainError("requested " + std::to_string(K) + " singular pairs, only " +
                        std::to_string(size()) + " available");
    SingularTriple<Scalar> out;
    out.values = svd_.singularValues().head(K);
    out.left = svd_.matrixU().leftCols(K);
    out.right = svd_.matrixV().leftCols(K);
    out.rank_deficient = !(out.values(K - 1) >= Scalar(kRankTol) * norm_) || norm_ == Scalar(0);
    return out;
  }

 private:
  Eigen::BDCSVD<Matrix<Scalar>> svd_;
  Scalar norm_;
};

/// Top-K left singular vectors and singular values of an N x J matrix.
template <typename Derived>
SingularTriple<typename Derived::Scalar> top_k_left_singular(const Eigen::MatrixBase<Derived>& A,
                                                             Index K) {
  if (K > std::min(A.rows(), A.cols()))
    throw DomainError("K exceeds min(rows, cols)");
  return SingularSpectrum<typename Derived::Scalar>(A).leading(K);
}

/// Successive projection algorithm.
///
/// K rounds of: pick the row with the largest residual Euclidean norm (lowest
/// index on exact ties), then project every row onto the orthogonal
/// complement of that row. Indices come back in selection order.
/// Throws DegenerateInputError if the residual vanishes before K picks.
template <typename Derived>
std::vector<Index> spa(const Eigen::MatrixBase<Derived>& U, Index K) {
  using Scalar = typename Derived::Scalar;
  if (K < 1) throw DomainError("SPA needs K >= 1");
  if (K > U.rows()) throw DomainError("SPA asked for more vertices than rows");
  if (U.cols() != K)
    throw DomainError("SPA input has " + std::to_string(U.cols()) + " columns, expected " +
                      std::to_string(K));

  Matrix<Scalar> residual = U;
  Vector<Scalar> norms = residual.rowwise().squaredNorm();
  const Scalar floor = norms.maxCoeff() * Scalar(kRankTol) * Scalar(kRankTol);
  std::vector<Index> picked;
  picked.reserve(static_cast<std::size_t>(K));
  for (Index step = 0; step < K; ++step) {
    Index best = 0;
    for (Index i = 1; i < norms.size(); ++i)
      if (norms(i) > norms(best)) best = i;
    if (!(norms(best) > floor) || norms(best) == Scalar(0))
      throw DegenerateInputError("SPA residual vanished after " + std::to_string(step) +
                                 " of " + std::to_string(K) + " vertices");
    picked.push_back(best);
    const Vector<Scalar> dir = residual.row(best).transpose() / std::sqrt(norms(best));
    const Vector<Scalar> coef = residual * dir;
    residual.noalias() -= coef * dir.transpose();
    norms = residual.rowwise().squaredNorm();
  }
  return picked;
}

}  // namespace mlgom
