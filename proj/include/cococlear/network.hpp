#ifndef COCOCLEAR_NETWORK_HPP
#define COCOCLEAR_NETWORK_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cococlear/balance_sheet.hpp"

namespace cococlear {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * A system of n banks plus the society node.
 *
 * The three claim matrices are n x (n+1): row i describes how bank i's
 * vanilla debt, CoCo debt and original equity are split among holders.
 * Column 0 is society, column j (1 <= j <= n) is bank j.
 */
struct Network {
	Vector external_assets;
	std::vector<BankSheet> sheets;
	double recovery = 1.0;
	Matrix pi0;
	Matrix pic;
	Matrix pie;
	/// Treat zero-liability banks as pure equity nodes instead of rejecting
	/// them.
	bool pure_equity_nodes = false;

	int size() const noexcept { return static_cast<int>(sheets.size()); }

	/// Bank-to-bank blocks (n x n) of the claim matrices.
	auto vanilla_block() const { return pi0.rightCols(size()); }
	auto coco_block() const { return pic.rightCols(size()); }
	auto equity_block() const { return pie.rightCols(size()); }

	Vector vanilla_faces() const;
	Vector coco_faces() const;
	Vector default_thresholds() const;
	Vector conversion_ends() const;
};

/// Face values of a network before any debt is restructured into CoCos.
struct VanillaNetwork {
	/// liabilities(i, j): amount bank i owes bank j.
	Matrix liabilities;
	Vector external_liab;
	Vector external_assets;

	int size() const noexcept { return static_cast<int>(external_assets.size()); }
};

enum class Scheme { none, full, interbank, external };

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string &name);

/// A stress experiment on a vanilla network.
struct Scenario {
	Scheme scheme = Scheme::none;
	double beta = 0.0;
	double beta0 = 0.0;
	double trigger = 0.03;
	double conversion = 1.0;
	double recovery = 0.5;
	double shock = 0.0;
	double interbank_fraction = 0.0;
	std::uint64_t seed = 0;
};

/// Scenario with beta/beta0 forced to the values the scheme allows.
/// `level` is the CoCo fraction applied to the CoCo-ized side(s).
Scenario make_scenario(Scheme scheme, double level, double trigger,
                       double conversion, double recovery, double shock = 0.0);

void validate(const Scenario &scenario);
void validate(const VanillaNetwork &net);

/// Checks every structural invariant of a network; throws InvalidInput.
void validate(const Network &net, double tol = 1e-9);

/// Largest |eigenvalue| of the bank-to-bank equity block.
double equity_spectral_radius(const Network &net);

/**
 * Per-bank CoCo-ization of a vanilla network.
 *
 * `beta[i]` of bank i's interbank debt and `beta0[i]` of its external debt
 * become CoCos with the given terms. `equity_holdings`, when present, is the
 * n x n bank-to-bank original-equity ownership; society holds the rest.
 */
struct CocoizeOptions {
	std::optional<Matrix> equity_holdings;
	bool pure_equity_nodes = false;
};

Network cocoize(const VanillaNetwork &vanilla, std::span<const double> beta,
                std::span<const double> beta0, std::span<const CocoTerms> terms,
                double recovery, const CocoizeOptions &options = {});

/// Uniform CoCo-ization driven by a scenario (shock and shift are not
/// applied here).
Network cocoize(const VanillaNetwork &vanilla, const Scenario &scenario,
                const CocoizeOptions &options = {});

/// Scales external assets by (1 - xi).
Network apply_shock(Network net, double xi);
VanillaNetwork apply_shock(VanillaNetwork net, double xi);

/// Subtracts `eps` from the external assets of each listed (0-based) bank.
Network stress_subset(Network net, std::span<const int> banks, double eps);

/**
 * Replaces a fraction gamma of external liabilities by interbank debt spread
 * in the existing interbank proportions, adjusting external assets so each
 * bank's capital is unchanged.
 */
VanillaNetwork interbank_shift(const VanillaNetwork &net, double gamma);

/// Capital x_i + sum_j L_ji - sum_j L_ij - L_i0 of every bank.
Vector capital(const VanillaNetwork &net);

/// Upper corner of the lattice on which the clearing map acts.
Vector lattice_top(const Network &net);

} // namespace cococlear

#endif
