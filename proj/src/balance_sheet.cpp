#include "cococlear/balance_sheet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cococlear/error.hpp"

namespace cococlear {

namespace {

// r^(q/tau) for r in [0,1], evaluated through the logarithm so that very
// small triggers do not overflow the exponent.
double retained_share(double ratio, const CocoTerms &terms) noexcept {
	if (terms.conversion_factor == 0.0)
		return 1.0;
	if (ratio <= 0.0)
		return 0.0;
	return std::exp(terms.conversion_factor / terms.trigger * std::log(ratio));
}

} // namespace

void validate(const BankSheet &sheet, TermsCheck check, bool allow_empty) {
	const auto fail = [](const std::string &msg) { throw InvalidInput(msg); };
	if (!(sheet.terms.trigger > 0.0) || !std::isfinite(sheet.terms.trigger))
		fail("CoCo trigger must be positive");
	const double q = sheet.terms.conversion_factor;
	if (!(q >= 0.0) || !std::isfinite(q))
		fail("CoCo conversion factor must be nonnegative");
	if (check == TermsCheck::strict && q > 1.0)
		fail("CoCo conversion factor must not exceed 1");
	if (!(sheet.recovery >= 0.0 && sheet.recovery <= 1.0))
		fail("recovery rate must lie in [0,1]");
	if (!(sheet.vanilla_face >= 0.0) || !(sheet.coco_face >= 0.0) ||
	    !std::isfinite(sheet.total_face()))
		fail("face values must be finite and nonnegative");
	if (!allow_empty && !(sheet.total_face() > 0.0))
		fail("bank has no liabilities");
}

Breakpoints breakpoints(const BankSheet &sheet) noexcept {
	const double k = 1.0 + sheet.terms.trigger;
	return {sheet.vanilla_face, k * sheet.vanilla_face, k * sheet.total_face()};
}

double outstanding_face(const BankSheet &sheet, double lambda) noexcept {
	return sheet.vanilla_face + (1.0 - lambda) * sheet.coco_face;
}

double conversion_fraction(const BankSheet &sheet, double assets) noexcept {
	if (sheet.coco_face <= 0.0)
		return 0.0;
	const double raw =
	    (sheet.total_face() - assets / (1.0 + sheet.terms.trigger)) /
	    sheet.coco_face;
	return std::clamp(raw, 0.0, 1.0);
}

double coco_equity_fraction(const BankSheet &sheet, double assets) noexcept {
	if (sheet.coco_face <= 0.0)
		return 0.0;
	const auto [a1, a2, a3] = breakpoints(sheet);
	const double clipped = std::min(std::max(assets, a2), a3);
	return 1.0 - retained_share(clipped / a3, sheet.terms);
}

double equity(const BankSheet &sheet, double assets) noexcept {
	const double realized =
	    assets >= sheet.vanilla_face ? assets : sheet.recovery * assets;
	return realized - outstanding_face(sheet, conversion_fraction(sheet, assets));
}

double debt_value(const BankSheet &sheet, double assets) noexcept {
	if (assets < sheet.vanilla_face)
		return sheet.recovery * assets;
	return outstanding_face(sheet, conversion_fraction(sheet, assets));
}

TrancheValues tranche_values(const BankSheet &sheet, double assets) noexcept {
	const double e = std::max(equity(sheet, assets), 0.0);
	const double c = coco_equity_fraction(sheet, assets);
	if (assets < sheet.vanilla_face)
		return {sheet.recovery * assets, c * e, (1.0 - c) * e};
	const double lambda = conversion_fraction(sheet, assets);
	return {sheet.vanilla_face, (1.0 - lambda) * sheet.coco_face + c * e,
	        (1.0 - c) * e};
}

bool is_default(const BankSheet &sheet, double assets) noexcept {
	return assets < sheet.vanilla_face;
}

AssetRegime asset_regime(const BankSheet &sheet, double assets) noexcept {
	const auto [a1, a2, a3] = breakpoints(sheet);
	if (assets < a1)
		return AssetRegime::defaulted;
	if (assets <= a2)
		return AssetRegime::full_conversion;
	if (assets < a3)
		return AssetRegime::partial_conversion;
	return AssetRegime::unconverted;
}

std::optional<AffinePayouts> affine_payouts(const BankSheet &s,
                                            AssetRegime regime) noexcept {
	const double p0 = s.vanilla_face;
	const double pc = s.coco_face;
	const double tau = s.terms.trigger;
	switch (regime) {
	case AssetRegime::defaulted:
		return AffinePayouts{{s.recovery, 0.0}, {}, {}};
	case AssetRegime::full_conversion: {
		const double c2 = coco_equity_fraction(s, breakpoints(s).a2);
		return AffinePayouts{
		    {0.0, p0}, {c2, -c2 * p0}, {1.0 - c2, -(1.0 - c2) * p0}};
	}
	case AssetRegime::partial_conversion:
		if (s.terms.conversion_factor != 0.0)
			return std::nullopt;
		return AffinePayouts{
		    {0.0, p0}, {1.0 / (1.0 + tau), -p0}, {tau / (1.0 + tau), 0.0}};
	case AssetRegime::unconverted:
		return AffinePayouts{{0.0, p0}, {0.0, pc}, {1.0, -(p0 + pc)}};
	}
	return std::nullopt;
}

double equity_domain_lambda(const BankSheet &sheet, double equity) noexcept {
	if (sheet.coco_face <= 0.0)
		return 0.0;
	const double tau = sheet.terms.trigger;
	const double raw =
	    (tau * sheet.total_face() - equity) / (tau * sheet.coco_face);
	return std::clamp(raw, 0.0, 1.0);
}

double equity_domain_c(const BankSheet &sheet, double equity) noexcept {
	if (sheet.coco_face <= 0.0)
		return 0.0;
	const double lambda = equity_domain_lambda(sheet, equity);
	return 1.0 - retained_share(outstanding_face(sheet, lambda) /
	                                sheet.total_face(),
	                            sheet.terms);
}

} // namespace cococlear
