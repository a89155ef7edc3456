#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <Eigen/Core>

namespace blockpursuit {

using Index = Eigen::Index;
using cplx = std::complex<double>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXr = Matrix<double>;
using VectorXr = Vector<double>;
using MatrixXc = Matrix<cplx>;
using VectorXc = Vector<cplx>;

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};
template <typename T>
inline constexpr bool is_complex_v = is_complex<T>::value;

/// Precondition or shape violation in a caller-supplied argument.
class InvalidArgument : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure: rank deficiency, non-unitary input, broken model assumption.
class NumericalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

namespace tol {
inline constexpr double unit_norm = 1e-10;
inline constexpr double block_rank = 1e-10;
inline constexpr double unitary = 1e-10;
} // namespace tol

} // namespace blockpursuit
