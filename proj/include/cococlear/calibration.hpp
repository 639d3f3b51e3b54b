#ifndef COCOCLEAR_CALIBRATION_HPP
#define COCOCLEAR_CALIBRATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cococlear/network.hpp"

// Reconstruction of a vanilla interbank network from per-bank aggregates:
// total assets, capital and total interbank liabilities.

namespace cococlear {

struct EbaRecord {
	std::string bank_id;
	double total_assets = 0.0;
	double capital = 0.0;
	double interbank_liab = 0.0;
};

/// Row sums are interbank liabilities, column sums interbank assets.
struct Marginals {
	Vector row_sums;
	Vector col_sums;
	Vector external_assets;
	Vector external_liab;

	int size() const noexcept { return static_cast<int>(row_sums.size()); }
};

struct SamplerConfig {
	/// Target edge probability.
	double density_p = 0.5;
	/// Rate of the exponential edge weights; <= 0 selects p n (n-1) / total.
	double weight_rate = 0.0;
	std::uint64_t thinning = 10'000;
	std::uint64_t burn_in = 1'000'000;
	std::uint64_t seed = 20110715;
};

/// Drops records whose id is listed in `excluded`.
std::vector<EbaRecord> exclude_banks(std::vector<EbaRecord> records,
                                     const std::vector<std::string> &excluded);

/// Bank ids left out of the 2011 sample.
const std::vector<std::string> &default_exclusions();

/// Balance-sheet identities with interbank assets set equal to interbank
/// liabilities bank by bank. Throws NegativeBalance.
Marginals marginals_from_eba(const std::vector<EbaRecord> &records);

struct BalancedMarginals {
	Marginals marginals;
	/// Largest relative change applied to any column sum.
	double max_relative_change = 0.0;
};

/**
 * Rescales column sums so their total matches the row total, moving the
 * difference into external assets so total assets are unchanged.
 * Throws ImbalanceTooLarge if the relative imbalance exceeds `eps_scale`.
 */
BalancedMarginals perturb_to_balance(const Marginals &m, double eps_scale);

/// Deterministic fit from the rank-one seed with zero diagonal.
Matrix ipfp_matrix(const Marginals &m, double tol = 1e-8,
                   std::size_t max_iter = 100'000);

/**
 * One realization of the liability matrix from a Gibbs sampler over
 * matrices with the given marginals, started from the fitted matrix.
 */
Matrix sample_matrix(const Marginals &m, const SamplerConfig &cfg);

/// Assembles the network; marginals must be consistent with `liabilities`.
VanillaNetwork build_network(const Marginals &m, const Matrix &liabilities);

/// Network-wide totals in the input's currency unit.
struct SystemTotals {
	double external_assets = 0.0;
	double external_liab = 0.0;
	double interbank = 0.0;
	double capital = 0.0;
};

SystemTotals system_totals(const std::vector<EbaRecord> &records,
                           const Marginals &m);

} // namespace cococlear

#endif
