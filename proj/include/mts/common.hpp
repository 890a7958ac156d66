#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mts {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

// Coordinates are always stored with two components; 1D meshes keep y = 0.
using Point = std::array<double, 2>;

using ScalarField = std::function<double(const Point&, double)>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files (mesh, partition, config, expressions).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0);
  int line() const { return line_; }

 private:
  int line_;
};

// Valid syntax but inconsistent content (unknown set names, bad parameters).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Solver-side failures: singular systems, Newton divergence, non-finite state.
class NumericalError : public Error {
 public:
  using Error::Error;
};

inline constexpr double infinity = std::numeric_limits<double>::infinity();

}  // namespace mts
