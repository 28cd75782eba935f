#pragma once

#include "mlgom/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace mlgom {

inline constexpr Index kMaxPermutationK = 10;

/// perm[c] is the true column matched to estimated column c.
using ColumnPermutation = std::vector<Index>;

template <typename Scalar>
Matrix<Scalar> permute_columns(const Matrix<Scalar>& A, const ColumnPermutation& perm) {
  Matrix<Scalar> out(A.rows(), A.cols());
  for (Index c = 0; c < A.cols(); ++c) out.col(c) = A.col(perm[static_cast<std::size_t>(c)]);
  return out;
}

namespace detail {

inline void check_perm_size(Index K) {
  if (K > kMaxPermutationK)
    throw DomainError("exhaustive permutation search is limited to K <= " +
                      std::to_string(kMaxPermutationK));
}

// Calls f(perm) for all K! column orders, lexicographic from the identity.
template <typename F>
void for_each_permutation(Index K, F&& f) {
  check_perm_size(K);
  ColumnPermutation perm(static_cast<std::size_t>(K));
  std::iota(perm.begin(), perm.end(), Index{0});
  do {
    f(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

}  // namespace detail

struct PermutationError {
  double value = 0.0;
  ColumnPermutation perm;
};

/// min over P of ||Pi_hat - Pi P||_1 / N, entrywise l1 norm.
template <typename DerivedA, typename DerivedB>
PermutationError best_l1_permutation(const Eigen::MatrixBase<DerivedA>& Pi_hat,
                                     const Eigen::MatrixBase<DerivedB>& Pi) {
  if (Pi_hat.rows() != Pi.rows() || Pi_hat.cols() != Pi.cols())
    throw DomainError("membership matrices differ in shape");
  if (Pi.rows() == 0) throw DomainError("empty membership matrix");
  PermutationError best{std::numeric_limits<double>::infinity(), {}};
  detail::for_each_permutation(Pi.cols(), [&](const ColumnPermutation& p) {
    double s = 0.0;
    for (Index c = 0; c < Pi.cols(); ++c)
      s += static_cast<double>((Pi_hat.col(c) - Pi.col(p[static_cast<std::size_t>(c)])).template lpNorm<1>());
    if (s < best.value) best = {s, p};
  });
  best.value /= static_cast<double>(Pi.rows());
  return best;
}

template <typename DerivedA, typename DerivedB>
double relative_l1_error(const Eigen::MatrixBase<DerivedA>& Pi_hat,
                         const Eigen::MatrixBase<DerivedB>& Pi) {
  return best_l1_permutation(Pi_hat, Pi).value;
}

/// ||sum_l (Theta_hat_l - Theta_l P)||_F / ||sum_l Theta_l||_F at a fixed P.
template <typename Scalar>
double relative_l2_error_at(const ItemParams<Scalar>& Theta_hat, const ItemParams<Scalar>& Theta,
                            const ColumnPermutation& perm) {
  if (Theta_hat.size() != Theta.size() || Theta.empty())
    throw DomainError("item parameter layer counts differ or are empty");
  Matrix<Scalar> sum_hat = Matrix<Scalar>::Zero(Theta.front().rows(), Theta.front().cols());
  Matrix<Scalar> sum_true = sum_hat;
  for (std::size_t l = 0; l < Theta.size(); ++l) {
    if (Theta_hat[l].rows() != Theta[l].rows() || Theta_hat[l].cols() != Theta[l].cols())
      throw DomainError("item parameter matrices differ in shape");
    sum_hat += Theta_hat[l];
    sum_true += Theta[l];
  }
  const double denom = static_cast<double>(sum_true.norm());
  if (!(denom > 0.0)) throw DomainError("true item parameters sum to zero");
  return static_cast<double>((sum_hat - permute_columns(sum_true, perm)).norm()) / denom;
}

template <typename Scalar>
PermutationError best_l2_permutation(const ItemParams<Scalar>& Theta_hat,
                                     const ItemParams<Scalar>& Theta) {
  if (Theta.empty()) throw DomainError("no item parameter layers");
  PermutationError best{std::numeric_limits<double>::infinity(), {}};
  detail::for_each_permutation(Theta.front().cols(), [&](const ColumnPermutation& p) {
    const double e = relative_l2_error_at(Theta_hat, Theta, p);
    if (e < best.value) best = {e, p};
  });
  return best;
}

/// min over P of ||sum_l (Theta_hat_l - Theta_l P)||_F / ||sum_l Theta_l||_F.
template <typename Scalar>
double relative_l2_error(const ItemParams<Scalar>& Theta_hat, const ItemParams<Scalar>& Theta) {
  return best_l2_permutation(Theta_hat, Theta).value;
}

/// Largest per-subject l1 deviation under the l1-optimal permutation.
template <typename DerivedA, typename DerivedB>
double max_row_l1_error(const Eigen::MatrixBase<DerivedA>& Pi_hat,
                        const Eigen::MatrixBase<DerivedB>& Pi) {
  using Scalar = typename DerivedB::Scalar;
  const auto best = best_l1_permutation(Pi_hat, Pi);
  return static_cast<double>((Pi_hat - permute_columns(Matrix<Scalar>(Pi), best.perm))
                                 .rowwise()
                                 .template lpNorm<1>()
                                 .maxCoeff());
}

struct MetricRecord {
  std::string experiment;
  std::string point_param;
  double point_value = 0.0;
  int rep = 0;
  std::string method;
  double rel_l1 = 0.0;
  double rel_l2 = 0.0;
  Index k_true = 0;
  Index k_selected = 0;
  double q_at_selected = 0.0;
  double wall_ms = 0.0;
  bool failed = false;
};

inline double accuracy_rate(std::span<const MetricRecord> records) {
  if (records.empty()) throw DomainError("accuracy rate of an empty record set");
  const auto hits = std::count_if(records.begin(), records.end(), [](const MetricRecord& r) {
    return r.k_selected == r.k_true;
  });
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

}  // namespace mlgom
