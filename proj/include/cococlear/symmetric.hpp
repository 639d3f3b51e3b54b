#ifndef COCOCLEAR_SYMMETRIC_HPP
#define COCOCLEAR_SYMMETRIC_HPP

#include <optional>
#include <string>

#include "cococlear/clearing.hpp"

namespace cococlear {

/**
 * A symmetric system: n identical banks, each with external debt `y`,
 * interbank debt `z`, of which fractions `beta0` and `beta` are CoCos, and a
 * share `pie` of every bank's original equity held inside the system.
 */
struct SymmetricParams {
	int n = 2;
	double y = 0.0;
	double z = 0.0;
	double beta0 = 0.0;
	double beta = 0.0;
	double pie = 0.0;
	CocoTerms terms;
	double recovery = 1.0;
};

void validate(const SymmetricParams &p);

/// The liability side every bank in the system shares.
BankSheet symmetric_sheet(const SymmetricParams &p);

/// Share of a bank's vanilla (CoCo) debt owed to other banks; 0 when the
/// corresponding face value is 0.
double interbank_vanilla_share(const SymmetricParams &p);
double interbank_coco_share(const SymmetricParams &p);

/// External-asset levels at which the maximal clearing solution crosses the
/// asset breakpoints, plus the end of the multiplicity window.
struct XBreakpoints {
	double x1;
	double x2;
	double x3;
	double x0;
};

XBreakpoints x_breakpoints(const SymmetricParams &p);

/// Scalar equation whose root gives clearing assets while conversion is
/// partial.
double conversion_curve(const SymmetricParams &p, double a);

/// Per-bank clearing assets of the maximal solution with external assets x.
double symmetric_clear(const SymmetricParams &p, double x);

/// Per-bank clearing assets of the minimal solution.
double symmetric_clear_min(const SymmetricParams &p, double x);

/// Asset regime name of a per-bank asset level: default, full_conversion,
/// partial_conversion or no_conversion.
std::string symmetric_regime(const SymmetricParams &p, double a);

/**
 * Explicit network realizing the system with every off-diagonal claim equal
 * to the share divided by (n - 1).
 */
Network strongly_symmetric_network(const SymmetricParams &p,
                                   const Vector &external_assets);

/// Clearing assets of the d stressed and n - d unstressed banks.
struct TwoClassAssets {
	double stressed;
	double unstressed;
};

/// Maximal clearing of a strongly symmetric system where d banks hold
/// x - eps and the rest hold x, solved on the two-class reduction.
TwoClassAssets two_class_clear(const SymmetricParams &p, double x, int d,
                               double eps);

/// Smallest stress producing a first default (eps1) and a system-wide
/// default (eps2); empty when no stress in [0, x] achieves it.
struct CriticalEps {
	std::optional<double> eps1;
	std::optional<double> eps2;
};

CriticalEps critical_epsilons(const SymmetricParams &p, double x, int d,
                              double tol = 1e-10);

/// Closed-form eps2 from the two reduced equations of the all-defaulted
/// regime; empty when that regime is inconsistent or recovery is not in
/// (0,1).
std::optional<double> eps2_closed_form(const SymmetricParams &p, double x, int d);

} // namespace cococlear

#endif
