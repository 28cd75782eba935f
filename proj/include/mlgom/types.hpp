#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlgom {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;
using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

// Row-stochastic N x K weights. Kept as a plain dense matrix so that it
// composes with Eigen expressions; validation lives in model.hpp.
template <typename Scalar>
using MembershipMatrix = Matrix<Scalar>;

// One J x K item-parameter matrix per layer.
template <typename Scalar>
using ItemParams = std::vector<Matrix<Scalar>>;

// Exceptions. Everything derives from mlgom::Error so callers can catch once.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParameterError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct DegenerateInputError : Error {
  using Error::Error;
};
struct EstimationError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

/// Observed multi-layer categorical data: L matrices N x J with entries in {0..M}.
struct ResponseTensor {
  std::vector<IntMatrix> layers;
  int M = 1;

  Index num_layers() const { return static_cast<Index>(layers.size()); }
  Index rows() const { return layers.empty() ? 0 : layers.front().rows(); }
  Index cols() const { return layers.empty() ? 0 : layers.front().cols(); }

  // Throws ParameterError if layers disagree in shape or entries leave [0, M].
  void check() const {
    if (layers.empty()) throw ParameterError("response tensor has no layers");
    if (M < 1) throw ParameterError("M must be at least 1");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& R = layers[l];
      if (R.rows() != rows() || R.cols() != cols())
        throw ParameterError("layer " + std::to_string(l) + " has mismatched dimensions");
      if (R.size() > 0 && (R.minCoeff() < 0 || R.maxCoeff() > M))
        throw ParameterError("layer " + std::to_string(l) + " has entries outside [0, M]");
    }
  }

  template <typename Scalar>
  Matrix<Scalar> layer(Index l) const {
    return layers[static_cast<std::size_t>(l)].template cast<Scalar>();
  }
};

/// Expected responses, one N x J matrix Pi * Theta_l' per layer.
template <typename Scalar>
struct PopulationTensor {
  std::vector<Matrix<Scalar>> layers;
  int M = 1;

  Index num_layers() const { return static_cast<Index>(layers.size()); }
  Index rows() const { return layers.empty() ? 0 : layers.front().rows(); }
  Index cols() const { return layers.empty() ? 0 : layers.front().cols(); }
};

/// Ground-truth parameters of a multi-layer GoM model. Theta_l = rho * B_l.
template <typename Scalar>
struct ModelParams {
  Index N = 0;
  Index J = 0;
  Index K = 0;
  Index L = 0;
  int M = 1;
  Scalar rho = Scalar(1);
  MembershipMatrix<Scalar> Pi;
  std::vector<Matrix<Scalar>> B;
  // Row index of one pure subject per class, class order. Filled by the simulator.
  std::vector<Index> pure_index;

  ItemParams<Scalar> theta() const {
    ItemParams<Scalar> out;
    out.reserve(B.size());
    for (const auto& b : B) out.push_back(rho * b);
    return out;
  }
};

}  // namespace mlgom
