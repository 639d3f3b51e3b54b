#ifndef COCOCLEAR_BALANCE_SHEET_HPP
#define COCOCLEAR_BALANCE_SHEET_HPP

#include <optional>

// Single-bank valuation of a capital structure made of vanilla debt and
// fractionally converting contingent convertible (CoCo) debt. Every function
// here is a pure function of the sheet and the bank's total assets at
// maturity.

namespace cococlear {

/**
 * Contract terms of a fractional CoCo.
 *
 * Conversion starts once equity falls to `trigger` times outstanding debt;
 * each unit of converted face value buys `conversion_factor` of new equity.
 */
struct CocoTerms {
	double trigger = 0.1;
	double conversion_factor = 1.0;
};

/**
 * Liability side of one bank.
 *
 * `recovery` is the fraction of total assets that survives a default.
 */
struct BankSheet {
	double vanilla_face = 0.0;
	double coco_face = 0.0;
	CocoTerms terms;
	double recovery = 1.0;

	double total_face() const noexcept { return vanilla_face + coco_face; }
};

/// Default threshold `a1` and the start/end of conversion `a2`, `a3`.
struct Breakpoints {
	double a1;
	double a2;
	double a3;
};

/// The three holder classes of a bank's liabilities.
struct TrancheValues {
	double vanilla;
	double coco;
	double original_equity;
};

enum class TermsCheck {
	strict,
	/// Accepts q > 1; only meaningful for exhibiting non-monotone CoCo value.
	allow_speculative,
};

/// Throws InvalidInput unless tau > 0, q in [0,1] (or q >= 0 when relaxed)
/// and recovery in [0,1]. With `allow_empty` a zero-liability sheet passes.
void validate(const BankSheet &sheet, TermsCheck check = TermsCheck::strict,
              bool allow_empty = false);

Breakpoints breakpoints(const BankSheet &sheet) noexcept;

/// Total face value still owed after converting a fraction `lambda` of CoCos.
double outstanding_face(const BankSheet &sheet, double lambda) noexcept;

/// Fraction of CoCo face value converted when total assets are `assets`.
double conversion_fraction(const BankSheet &sheet, double assets) noexcept;

/// Fraction of the bank's equity owned by (former) CoCo holders.
double coco_equity_fraction(const BankSheet &sheet, double assets) noexcept;

/// Equity after conversion; negative exactly when the bank is in default.
double equity(const BankSheet &sheet, double assets) noexcept;

/// Value delivered to all debt holders.
double debt_value(const BankSheet &sheet, double assets) noexcept;

TrancheValues tranche_values(const BankSheet &sheet, double assets) noexcept;

/// Default is the strict event `assets < a1`.
bool is_default(const BankSheet &sheet, double assets) noexcept;

/// The four intervals [0,a1), [a1,a2], (a2,a3), [a3,inf) of total assets.
enum class AssetRegime { defaulted, full_conversion, partial_conversion, unconverted };

AssetRegime asset_regime(const BankSheet &sheet, double assets) noexcept;

/// slope * assets + intercept
struct AffinePiece {
	double slope = 0.0;
	double intercept = 0.0;
};

/// What a bank pays out to each holder class, as affine functions of assets.
struct AffinePayouts {
	AffinePiece vanilla;
	AffinePiece coco;
	AffinePiece original_equity;
};

/// Exact affine payouts inside `regime`; empty where they are nonlinear
/// (partial conversion with a positive conversion factor).
std::optional<AffinePayouts> affine_payouts(const BankSheet &sheet,
                                            AssetRegime regime) noexcept;

// Equity-domain variants: the same conversion rule expressed as a function of
// the bank's equity rather than its total assets. On solvent states they agree
// with the asset-domain functions evaluated at the matching asset level.
double equity_domain_lambda(const BankSheet &sheet, double equity) noexcept;
double equity_domain_c(const BankSheet &sheet, double equity) noexcept;

} // namespace cococlear

#endif
