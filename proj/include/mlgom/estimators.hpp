#pragma once

#include "mlgom/spectral.hpp"
#include "mlgom/types.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mlgom {

inline constexpr double kConditionLimit = 1e10;

enum class Method { DSoG, SoG, Sum };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::DSoG: return "dsog";
    case Method::SoG: return "sog";
    case Method::Sum: return "sum";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "dsog" || s == "GoM-DSoG") return Method::DSoG;
  if (s == "sog" || s == "GoM-SoG") return Method::SoG;
  if (s == "sum" || s == "GoM-Sum") return Method::Sum;
  throw ParseError("unknown method '" + std::string(s) + "' (expected dsog, sog or sum)");
}

inline const std::vector<Method>& all_methods() {
  static const std::vector<Method> m{Method::DSoG, Method::SoG, Method::Sum};
  return m;
}

struct Diagnostics {
  double vertex_condition = 0.0;  // 2-norm condition number of U(I,:)
  Index clipped_rows = 0;         // rows with at least one entry raised to 0
  Index zero_rows = 0;            // rows with nothing positive, set to 1/K
  bool rank_deficient = false;    // from the spectral step
};

template <typename Scalar>
struct EstimationResult {
  MembershipMatrix<Scalar> Pi_hat;
  ItemParams<Scalar> Theta_hat;
  std::vector<Index> vertices;
  Vector<Scalar> spectrum;  // leading eigen- or singular values
  Diagnostics diagnostics;
};

struct EstimateOptions {
  // Clip item estimates to [0, M]. Off by default: metrics use raw values.
  bool clip_theta = false;
};

/// H = max(0, U U(I,:)^{-1}); rows are then scaled to sum to one.
/// Rows with no positive entry become uniform 1/K.
template <typename Derived>
MembershipMatrix<typename Derived::Scalar> memberships_from_vertices(
    const Eigen::MatrixBase<Derived>& U, const std::vector<Index>& vertices,
    Diagnostics* diag = nullptr) {
  using Scalar = typename Derived::Scalar;
  const Index K = U.cols();
  if (static_cast<Index>(vertices.size()) != K)
    throw DomainError("need exactly K vertex rows to form a square basis");
  Matrix<Scalar> V(K, K);
  for (Index k = 0; k < K; ++k) {
    const Index v = vertices[static_cast<std::size_t>(k)];
    if (v < 0 || v >= U.rows()) throw DomainError("vertex index out of range");
    V.row(k) = U.row(v);
  }
  Eigen::JacobiSVD<Matrix<Scalar>> sv(V);
  const Scalar smin = sv.singularValues()(K - 1);
  const double cond = smin > Scalar(0) ? static_cast<double>(sv.singularValues()(0) / smin)
                                       : std::numeric_limits<double>::infinity();
  if (!(cond <= kConditionLimit))
    throw DegenerateInputError("vertex block is singular (condition " + std::to_string(cond) +
                               ")");

  // H' = V'^{-1} U', solved rather than inverted.
  Matrix<Scalar> H = V.transpose().partialPivLu().solve(U.transpose()).transpose();
  Index clipped = 0;
  Index zeros = 0;
  for (Index i = 0; i < H.rows(); ++i) {
    if ((H.row(i).array() < Scalar(0)).any()) ++clipped;
    H.row(i) = H.row(i).cwiseMax(Scalar(0));
    const Scalar s = H.row(i).sum();
    if (s > Scalar(0)) {
      H.row(i) /= s;
    } else {
      H.row(i).setConstant(Scalar(1) / Scalar(K));
      ++zeros;
    }
  }
  if (diag) {
    diag->vertex_condition = cond;
    diag->clipped_rows = clipped;
    diag->zero_rows = zeros;
  }
  return H;
}

namespace detail {

template <typename Scalar, typename Layers>
ItemParams<Scalar> item_params_impl(const Layers& layers, const MembershipMatrix<Scalar>& Pi,
                                    std::optional<double> clip_max) {
  const Matrix<Scalar> gram = Pi.transpose() * Pi;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(gram, Eigen::EigenvaluesOnly);
  const Scalar lo = es.eigenvalues().minCoeff();
  const Scalar hi = es.eigenvalues().maxCoeff();
  if (!(lo > Scalar(0)) || !(static_cast<double>(hi / lo) <= kConditionLimit))
    throw EstimationError("membership Gram matrix is rank deficient");
  const auto ldlt = gram.ldlt();

  ItemParams<Scalar> out;
  out.reserve(layers.size());
  for (const auto& layer : layers) {
    const Matrix<Scalar> R = layer.template cast<Scalar>();
    if (R.rows() != Pi.rows()) throw DomainError("response rows do not match membership rows");
    Matrix<Scalar> theta = ldlt.solve(Pi.transpose() * R).transpose();
    if (clip_max) theta = theta.cwiseMax(Scalar(0)).cwiseMin(static_cast<Scalar>(*clip_max));
    out.push_back(std::move(theta));
  }
  return out;
}

}  // namespace detail

/// Theta_l = R_l' Pi (Pi' Pi)^{-1} for every layer.
template <typename Scalar = double>
ItemParams<Scalar> estimate_item_params(const ResponseTensor& R, const MembershipMatrix<Scalar>& Pi,
                                        const EstimateOptions& opts = {}) {
  return detail::item_params_impl<Scalar>(
      R.layers, Pi, opts.clip_theta ? std::optional<double>(R.M) : std::nullopt);
}

template <typename Scalar>
ItemParams<Scalar> estimate_item_params(const PopulationTensor<Scalar>& pop,
                                        const MembershipMatrix<Scalar>& Pi,
                                        const EstimateOptions& opts = {}) {
  return detail::item_params_impl<Scalar>(
      pop.layers, Pi, opts.clip_theta ? std::optional<double>(pop.M) : std::nullopt);
}

/// Spectral embedding used by one estimation method, decomposed once so that
/// leading blocks of any width can be extracted cheaply.
template <typename Scalar>
class MethodSpectrum {
 public:
  MethodSpectrum(const ResponseTensor& R, Method m) : method_(m), spec_(build(R, m)) {}

  // Population aggregates are exact, so DSoG and SoG share sum_l P_l P_l'.
  MethodSpectrum(const PopulationTensor<Scalar>& pop, Method m) : method_(m), spec_(build(pop, m)) {}

  Method method() const { return method_; }

  Index max_rank() const {
    return std::visit([](const auto& s) { return s.size(); }, spec_);
  }

  SpectralPair<Scalar> leading(Index K) const {
    if (const auto* sym = std::get_if<SymmetricSpectrum<Scalar>>(&spec_)) return sym->leading(K);
    const auto t = std::get<SingularSpectrum<Scalar>>(spec_).leading(K);
    return SpectralPair<Scalar>{t.values, t.left, t.rank_deficient};
  }

 private:
  using Spectrum = std::variant<SymmetricSpectrum<Scalar>, SingularSpectrum<Scalar>>;

  static Spectrum build(const ResponseTensor& R, Method m) {
    R.check();
    switch (m) {
      case Method::DSoG: return SymmetricSpectrum<Scalar>(debiased_sum_of_grams<Scalar>(R));
      case Method::SoG: return SymmetricSpectrum<Scalar>(sum_of_grams<Scalar>(R));
      case Method::Sum: break;
    }
    return SingularSpectrum<Scalar>(sum_responses<Scalar>(R));
  }

  static Spectrum build(const PopulationTensor<Scalar>& pop, Method m) {
    if (m == Method::Sum) return SingularSpectrum<Scalar>(sum_responses(pop));
    return SymmetricSpectrum<Scalar>(sum_of_grams(pop));
  }

  Method method_;
  Spectrum spec_;
};

/// Vertex hunting plus membership recovery on a leading block of width K.
template <typename Scalar>
EstimationResult<Scalar> memberships_from_spectrum(const MethodSpectrum<Scalar>& spectrum, Index K) {
  auto pair = spectrum.leading(K);
  EstimationResult<Scalar> res;
  res.spectrum = pair.values;
  res.diagnostics.rank_deficient = pair.rank_deficient;
  res.vertices = spa(pair.vectors, K);
  res.Pi_hat = memberships_from_vertices(pair.vectors, res.vertices, &res.diagnostics);
  return res;
}

namespace detail {

inline void check_k(Index N, Index J, Index K) {
  if (K < 1 || K > std::min(N, J))
    throw DomainError("K = " + std::to_string(K) + " must lie in [1, min(N, J)] = [1, " +
                      std::to_string(std::min(N, J)) + "]");
}

}  // namespace detail

/// Shared pipeline: spectral embedding, SPA, membership recovery, item regression.
template <typename Scalar = double>
EstimationResult<Scalar> estimate(const ResponseTensor& R, Index K, Method method,
                                  const EstimateOptions& opts = {}) {
  R.check();
  detail::check_k(R.rows(), R.cols(), K);
  MethodSpectrum<Scalar> spectrum(R, method);
  auto res = memberships_from_spectrum(spectrum, K);
  res.Theta_hat = estimate_item_params<Scalar>(R, res.Pi_hat, opts);
  return res;
}

/// GoM-DSoG: spectral estimation from the debiased sum of Gram matrices.
template <typename Scalar = double>
EstimationResult<Scalar> gom_dsog(const ResponseTensor& R, Index K, const EstimateOptions& opts = {}) {
  return estimate<Scalar>(R, K, Method::DSoG, opts);
}

/// GoM-SoG: same pipeline on sum_l R_l R_l' (diagonal bias left in).
template <typename Scalar = double>
EstimationResult<Scalar> gom_sog(const ResponseTensor& R, Index K, const EstimateOptions& opts = {}) {
  return estimate<Scalar>(R, K, Method::SoG, opts);
}

/// GoM-Sum: left singular vectors of sum_l R_l in place of the eigenvectors.
template <typename Scalar = double>
EstimationResult<Scalar> gom_sum(const ResponseTensor& R, Index K, const EstimateOptions& opts = {}) {
  return estimate<Scalar>(R, K, Method::Sum, opts);
}

/// Noiseless recovery from population responses. With a rank-K aggregate the
/// result equals (Pi P, Theta_l P) for one column permutation P.
template <typename Scalar>
EstimationResult<Scalar> ideal_recover(const PopulationTensor<Scalar>& pop, Index K,
                                       Method method = Method::DSoG) {
  if (pop.layers.empty()) throw ParameterError("population tensor has no layers");
  detail::check_k(pop.rows(), pop.cols(), K);
  MethodSpectrum<Scalar> spectrum(pop, method);
  auto pair = spectrum.leading(K);
  if (pair.rank_deficient)
    throw EstimationError("population aggregate has rank below K");
  auto res = memberships_from_spectrum(spectrum, K);
  res.Theta_hat = estimate_item_params(pop, res.Pi_hat);
  return res;
}

}  // namespace mlgom
