#ifndef COCOCLEAR_ERROR_HPP
#define COCOCLEAR_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cococlear {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

/// Malformed or out-of-domain input (bad parameters, bad files).
class InvalidInput : public Error {
public:
	using Error::Error;
};

/// A transform would leave some bank with negative external assets.
class NegativeAssets : public Error {
public:
	using Error::Error;
};

/// Balance-sheet identities produced a negative external position.
class NegativeBalance : public Error {
public:
	using Error::Error;
};

/// (I - Pi_e^T) could not be inverted.
class SingularLeontief : public Error {
public:
	using Error::Error;
};

/// An operation was called outside the hypotheses it requires.
class PreconditionViolated : public Error {
public:
	using Error::Error;
};

/// Bisection could not bracket a root that should exist.
class RootBracketFailure : public Error {
public:
	using Error::Error;
};

/// Interbank asset and liability totals differ by more than allowed.
class ImbalanceTooLarge : public Error {
public:
	using Error::Error;
};

/// An iterative method ran out of iterations.
///
/// Carries the last iterate and its residual so callers can inspect how far
/// the run got.
class NoConvergence : public Error {
public:
	NoConvergence(const std::string &what, std::size_t iterations,
	              double residual, Eigen::VectorXd last_iterate = {})
	    : Error(what), iterations_(iterations), residual_(residual),
	      last_iterate_(std::move(last_iterate)) {}

	std::size_t iterations() const noexcept { return iterations_; }
	double residual() const noexcept { return residual_; }
	const Eigen::VectorXd &last_iterate() const noexcept {
		return last_iterate_;
	}

private:
	std::size_t iterations_;
	double residual_;
	Eigen::VectorXd last_iterate_;
};

} // namespace cococlear

#endif
