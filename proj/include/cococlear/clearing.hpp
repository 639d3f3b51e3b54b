#ifndef COCOCLEAR_CLEARING_HPP
#define COCOCLEAR_CLEARING_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "cococlear/network.hpp"

namespace cococlear {

enum class Extremum { maximal, minimal };

struct ClearingOptions {
	/// Sup-norm tolerance on |A - Phi(A)| divided by the largest face value.
	double tol = 1e-10;
	std::size_t max_iter = 1'000'000;
	/// Try an exact linear solve once the regime of every bank settles.
	bool regime_finisher = true;
	/// Called with every Picard iterate, starting point included.
	std::function<void(const Vector &)> observer;
};

/// A clearing asset vector and everything derived from it.
struct ClearingResult {
	Vector assets;
	Vector lambda;
	Vector equity;
	Vector coco_fraction;
	std::vector<bool> defaults;
	/// Total value received by society: debt, converted and original equity.
	double society_value = 0.0;
	std::size_t iterations = 0;
	/// Normalized sup-norm residual (same units as ClearingOptions::tol).
	double residual = 0.0;
	/// Normalization applied to residuals (largest face value, at least 1e-300).
	double scale = 1.0;
	Extremum extremum = Extremum::maximal;

	int default_count() const;
};

/// Payments leaving each bank at asset vector `a`, split by claim class.
struct Payouts {
	Vector vanilla;
	Vector coco;
	Vector original_equity;
};

Payouts payouts(const Network &net, const Vector &assets);

/// The clearing map: external assets plus everything received from banks.
Vector phi(const Network &net, const Vector &assets);

/// Value society receives at asset vector `a`.
double society_receipts(const Network &net, const Vector &assets);

/// Society receipts excluding original equity: what external creditors get.
double external_creditor_receipts(const Network &net, const Vector &assets);

/// Greatest fixed point, Picard iteration down from the lattice top.
ClearingResult clear_max(const Network &net, const ClearingOptions &options = {});

/// Least fixed point, Picard iteration up from zero.
ClearingResult clear_min(const Network &net, const ClearingOptions &options = {});

/// Builds the result record for a given asset vector.
ClearingResult describe(const Network &net, const Vector &assets,
                        Extremum extremum, std::size_t iterations);

struct RiskMeasures {
	/// Value delivered to external creditors over their pre-conversion face
	/// value; empty when the network owes nothing externally.
	std::optional<double> external_repayment_fraction;
	double original_shareholder_value = 0.0;
	int default_count = 0;
};

RiskMeasures risk_measures(const Network &net, const ClearingResult &result);

/// True iff maximal and minimal clearing vectors agree to `tol`.
///
/// Throws PreconditionViolated unless recovery is 1 and every bank owes
/// society vanilla debt and has society among its shareholders; `bypass`
/// skips that check.
bool assert_unique(const Network &net, double tol,
                   const ClearingOptions &options = {}, bool bypass = false);

/// |society value - sum of external assets|; zero up to rounding when no
/// value is destroyed by default.
double conservation_check(const Network &net, const ClearingResult &result);

} // namespace cococlear

#endif
