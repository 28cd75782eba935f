#pragma once

#include "mlgom/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace mlgom {

inline constexpr double kStochasticTol = 1e-12;

/// Seedable stream used by every simulator in the library.
///
/// Engine: std::mt19937_64 (fully specified by the standard, so streams are
/// reproducible across conforming toolchains). Uniform draws on the open
/// interval (0,1) are formed from the top 53 bits as (x + 0.5) * 2^-53, which
/// never returns 0 or 1. Bernoulli(p) is `uniform() < p`, Binomial(M, p) is
/// the sum of M Bernoulli draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  int binomial(int trials, double p) {
    int hits = 0;
    for (int t = 0; t < trials; ++t) hits += bernoulli(p) ? 1 : 0;
    return hits;
  }

 private:
  std::mt19937_64 engine_;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

namespace detail {

template <typename Derived>
bool is_basis_row(const Eigen::MatrixBase<Derived>& row, Index k, double tol) {
  for (Index c = 0; c < row.size(); ++c) {
    const double target = (c == k) ? 1.0 : 0.0;
    if (std::abs(static_cast<double>(row(c)) - target) > tol) return false;
  }
  return true;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

/// Checks that every row is a probability vector; indices in messages are 1-based.
template <typename Scalar>
void check_membership(const MembershipMatrix<Scalar>& Pi, std::vector<std::string>& out) {
  for (Index i = 0; i < Pi.rows(); ++i) {
    const double s = static_cast<double>(Pi.row(i).sum());
    if (std::abs(s - 1.0) > kStochasticTol)
      out.push_back("row " + std::to_string(i + 1) + " sums to " + detail::fmt(s));
    for (Index k = 0; k < Pi.cols(); ++k) {
      const double v = static_cast<double>(Pi(i, k));
      if (v < 0.0 || v > 1.0)
        out.push_back("entry (" + std::to_string(i + 1) + ", " + std::to_string(k + 1) +
                      ") = " + detail::fmt(v) + " outside [0, 1]");
    }
  }
}

/// Reports every violated model invariant. Never throws. The K <= min(N, J)
/// condition only matters for estimation, so forward simulation can skip it.
template <typename Scalar>
ValidationReport validate_model(const ModelParams<Scalar>& p, bool require_identifiable = true) {
  ValidationReport rep;
  auto& v = rep.violations;
  if (p.N < 1) v.push_back("N must be at least 1");
  if (p.J < 1) v.push_back("J must be at least 1");
  if (p.L < 1) v.push_back("L must be at least 1");
  if (p.M < 1) v.push_back("M must be at least 1");
  if (p.K < 1) v.push_back("K must be at least 1");
  if (require_identifiable && p.K > std::min(p.N, p.J)) v.push_back("K exceeds min(N, J)");
  if (!(p.rho > Scalar(0)) || p.rho > Scalar(p.M))
    v.push_back("rho = " + detail::fmt(static_cast<double>(p.rho)) + " outside (0, M]");

  if (p.Pi.rows() != p.N || p.Pi.cols() != p.K) {
    v.push_back("Pi has shape " + std::to_string(p.Pi.rows()) + "x" +
                std::to_string(p.Pi.cols()) + ", expected N x K");
  } else {
    check_membership(p.Pi, v);
    for (Index k = 0; k < p.K; ++k) {
      bool found = false;
      for (Index i = 0; i < p.N && !found; ++i)
        found = detail::is_basis_row(p.Pi.row(i), k, kStochasticTol);
      if (!found) v.push_back("class " + std::to_string(k + 1) + " has no pure subject");
    }
  }

  if (static_cast<Index>(p.B.size()) != p.L)
    v.push_back("expected " + std::to_string(p.L) + " item matrices, got " +
                std::to_string(p.B.size()));
  for (std::size_t l = 0; l < p.B.size(); ++l) {
    const auto& b = p.B[l];
    if (b.rows() != p.J || b.cols() != p.K) {
      v.push_back("B_" + std::to_string(l + 1) + " has wrong shape");
      continue;
    }
    for (Index j = 0; j < b.rows(); ++j)
      for (Index k = 0; k < b.cols(); ++k)
        if (b(j, k) < Scalar(0) || b(j, k) > Scalar(1))
          v.push_back("B_" + std::to_string(l + 1) + "(" + std::to_string(j + 1) + ", " +
                      std::to_string(k + 1) + ") outside [0, 1]");
  }
  return rep;
}

template <typename Scalar>
void require_valid(const ModelParams<Scalar>& p, bool require_identifiable = true) {
  auto rep = validate_model(p, require_identifiable);
  if (!rep.ok()) throw ParameterError("invalid model parameters: " + rep.violations.front());
}

/// Layer l of the result is Pi * (rho B_l)'.
template <typename Scalar>
PopulationTensor<Scalar> population_response(const ModelParams<Scalar>& p) {
  require_valid(p, false);
  PopulationTensor<Scalar> pop;
  pop.M = p.M;
  pop.layers.reserve(p.B.size());
  for (const auto& b : p.B) pop.layers.push_back(p.Pi * (p.rho * b).transpose());
  return pop;
}

/// P(R = m) for a Binomial(M, r/M) response.
inline double response_probability(double r, int M, int m) {
  if (M < 1) throw DomainError("M must be at least 1");
  if (!(r >= 0.0 && r <= static_cast<double>(M)))
    throw DomainError("population value " + detail::fmt(r) + " outside [0, M]");
  if (m < 0 || m > M) throw DomainError("choice " + std::to_string(m) + " outside [0, M]");
  const double p = r / M;
  double binom = 1.0;
  for (int t = 1; t <= m; ++t) binom = binom * (M - m + t) / t;
  return binom * std::pow(p, m) * std::pow(1.0 - p, M - m);
}

/// Draws R_l(i,j) ~ Binomial(M, pop_l(i,j)/M). Layers, then rows, then columns.
template <typename Scalar>
ResponseTensor sample_responses(const PopulationTensor<Scalar>& pop, int M, Rng& rng) {
  ResponseTensor out;
  out.M = M;
  out.layers.reserve(pop.layers.size());
  for (const auto& P : pop.layers) {
    IntMatrix R(P.rows(), P.cols());
    for (Index i = 0; i < P.rows(); ++i)
      for (Index j = 0; j < P.cols(); ++j) {
        const double prob = std::clamp(static_cast<double>(P(i, j)) / M, 0.0, 1.0);
        R(i, j) = rng.binomial(M, prob);
      }
    out.layers.push_back(std::move(R));
  }
  return out;
}

template <typename Scalar>
ResponseTensor sample_responses(const PopulationTensor<Scalar>& pop, int M, std::uint64_t seed) {
  Rng rng(seed);
  return sample_responses(pop, M, rng);
}

/// Fully resolved size description of one simulated instance.
struct InstanceSpec {
  Index N = 0;
  Index J = 0;
  Index K = 0;
  Index L = 0;
  int M = 5;
  Index N0 = 0;  // pure subjects per class
  double rho = 1.0;
};

template <typename Scalar>
struct SimulatedInstance {
  ModelParams<Scalar> params;
  ResponseTensor responses;
};

/// Builds Pi, B and the sampled responses from a single stream seeded by `seed`.
///
/// The first N0*K rows are pure, grouped by class. Each remaining row draws
/// Pi(i,k) = u/(K-1) for k < K and puts the residual on the last class.
/// B_l(j,k) are independent uniform draws on (0,1).
template <typename Scalar = double>
SimulatedInstance<Scalar> simulate_instance(const InstanceSpec& s, std::uint64_t seed) {
  if (s.N < 1 || s.J < 1 || s.K < 1 || s.L < 1 || s.M < 1)
    throw ConfigError("N, J, K, L and M must all be positive");
  if (s.N0 < 1) throw ConfigError("each class needs at least one pure subject (N0 >= 1)");
  if (s.N0 * s.K > s.N)
    throw ConfigError("N0*K = " + std::to_string(s.N0 * s.K) + " exceeds N = " +
                      std::to_string(s.N));
  if (s.K > s.J) throw ConfigError("K exceeds J");
  if (!(s.rho > 0.0) || s.rho > s.M) throw ConfigError("rho must lie in (0, M]");

  Rng rng(seed);
  SimulatedInstance<Scalar> inst;
  auto& p = inst.params;
  p.N = s.N;
  p.J = s.J;
  p.K = s.K;
  p.L = s.L;
  p.M = s.M;
  p.rho = static_cast<Scalar>(s.rho);
  p.Pi = MembershipMatrix<Scalar>::Zero(s.N, s.K);
  for (Index k = 0; k < s.K; ++k) {
    for (Index r = 0; r < s.N0; ++r) p.Pi(k * s.N0 + r, k) = Scalar(1);
    p.pure_index.push_back(k * s.N0);
  }
  for (Index i = s.N0 * s.K; i < s.N; ++i) {
    if (s.K == 1) {
      p.Pi(i, 0) = Scalar(1);
      continue;
    }
    Scalar acc(0);
    for (Index k = 0; k + 1 < s.K; ++k) {
      p.Pi(i, k) = static_cast<Scalar>(rng.uniform()) / static_cast<Scalar>(s.K - 1);
      acc += p.Pi(i, k);
    }
    p.Pi(i, s.K - 1) = Scalar(1) - acc;
  }
  p.B.reserve(static_cast<std::size_t>(s.L));
  for (Index l = 0; l < s.L; ++l) {
    Matrix<Scalar> b(s.J, s.K);
    for (Index j = 0; j < s.J; ++j)
      for (Index k = 0; k < s.K; ++k) b(j, k) = static_cast<Scalar>(rng.uniform());
    p.B.push_back(std::move(b));
  }
  inst.responses = sample_responses(population_response(p), s.M, rng);
  return inst;
}

}  // namespace mlgom
