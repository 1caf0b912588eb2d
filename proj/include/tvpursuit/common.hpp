#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tvp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 1-based node identifier; node 1 is always the root.
using NodeId = int;
/// 1-based edge identifier.
using EdgeId = int;

enum class ErrorKind {
  InvalidSize,
  InvalidNode,
  NotATree,
  DimensionExhausted,
  ShapeMismatch,
  BudgetExceeded,
  Infeasible,
  Numerical,
  Parse,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tvp
