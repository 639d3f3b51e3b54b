#include "cococlear/symmetric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cococlear/error.hpp"

namespace cococlear {

namespace {

double safe_share(double part, double whole) { return whole > 0.0 ? part / whole : 0.0; }

double pow_ratio(double ratio, const CocoTerms &terms) {
	if (terms.conversion_factor == 0.0)
		return 1.0;
	if (ratio <= 0.0)
		return 0.0;
	return std::exp(terms.conversion_factor / terms.trigger * std::log(ratio));
}

// Value one bank pays to each other bank at assets a.
double pairwise_payment(const SymmetricParams &p, const BankSheet &s, double a) {
	const double e = equity(s, a);
	const double pos = std::max(e, 0.0);
	const double c = coco_equity_fraction(s, a);
	const double vanilla = s.vanilla_face - std::max(-e, 0.0);
	const double coco = (1.0 - conversion_fraction(s, a)) * s.coco_face + c * pos;
	const double orig = (1.0 - c) * pos;
	return (interbank_vanilla_share(p) * vanilla + interbank_coco_share(p) * coco +
	        p.pie * orig) /
	       (p.n - 1);
}

std::optional<AffinePiece> pairwise_affine(const SymmetricParams &p,
                                           const BankSheet &s, AssetRegime r) {
	const auto form = affine_payouts(s, r);
	if (!form)
		return std::nullopt;
	const double w0 = interbank_vanilla_share(p) / (p.n - 1);
	const double wc = interbank_coco_share(p) / (p.n - 1);
	const double we = p.pie / (p.n - 1);
	return AffinePiece{
	    w0 * form->vanilla.slope + wc * form->coco.slope +
	        we * form->original_equity.slope,
	    w0 * form->vanilla.intercept + wc * form->coco.intercept +
	        we * form->original_equity.intercept};
}

} // namespace

void validate(const SymmetricParams &p) {
	const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
	if (p.n < 2)
		throw InvalidInput("symmetric system needs at least two banks");
	if (!(p.y >= 0.0) || !(p.z >= 0.0) || !(p.y + p.z > 0.0))
		throw InvalidInput("debts must be nonnegative with a positive total");
	if (!unit(p.beta) || !unit(p.beta0))
		throw InvalidInput("CoCo fractions must lie in [0,1]");
	if (!(p.pie >= 0.0 && p.pie < 1.0))
		throw InvalidInput("equity cross-holding share must lie in [0,1)");
	validate(symmetric_sheet(p));
}

BankSheet symmetric_sheet(const SymmetricParams &p) {
	BankSheet s;
	s.vanilla_face = (1.0 - p.beta0) * p.y + (1.0 - p.beta) * p.z;
	s.coco_face = p.beta0 * p.y + p.beta * p.z;
	s.terms = p.terms;
	s.recovery = p.recovery;
	return s;
}

double interbank_vanilla_share(const SymmetricParams &p) {
	return safe_share((1.0 - p.beta) * p.z, symmetric_sheet(p).vanilla_face);
}

double interbank_coco_share(const SymmetricParams &p) {
	return safe_share(p.beta * p.z, symmetric_sheet(p).coco_face);
}

XBreakpoints x_breakpoints(const SymmetricParams &p) {
	const BankSheet s = symmetric_sheet(p);
	const double tau = p.terms.trigger;
	const double c2 = coco_equity_fraction(s, breakpoints(s).a2);
	const double w2 = c2 * interbank_coco_share(p) + (1.0 - c2) * p.pie;
	XBreakpoints xb;
	xb.x1 = (1.0 - p.beta0) * p.y;
	xb.x2 = xb.x1 + tau * (1.0 - w2) * s.vanilla_face;
	xb.x3 = p.y + tau * (1.0 - p.pie) * (p.y + p.z);
	// Above this level a bank that defaults on everything still ends up with
	// assets above its default threshold, so the default fixed point vanishes.
	xb.x0 = (1.0 - p.recovery) * (1.0 - p.beta) * p.z + (1.0 - p.beta0) * p.y;
	return xb;
}

double conversion_curve(const SymmetricParams &p, double a) {
	const double tau = p.terms.trigger;
	const double pic = interbank_coco_share(p);
	const double a3 = breakpoints(symmetric_sheet(p)).a3;
	return (1.0 + tau) * (1.0 - pic) * a +
	       tau * (pic - p.pie) * pow_ratio(a / a3, p.terms) * a;
}

double symmetric_clear(const SymmetricParams &p, double x) {
	validate(p);
	if (!(x >= 0.0))
		throw InvalidInput("external assets must be nonnegative");
	const BankSheet s = symmetric_sheet(p);
	const auto [a1, a2, a3] = breakpoints(s);
	const auto xb = x_breakpoints(p);
	const double tau = p.terms.trigger;
	const double pic = interbank_coco_share(p);

	if (x >= xb.x3)
		return (x + p.z - p.pie * (p.y + p.z)) / (1.0 - p.pie);
	if (x >= xb.x2) {
		const double target = (1.0 + tau) * (x + p.z - pic * (p.y + p.z));
		double lo = a2, hi = a3;
		if (!(conversion_curve(p, lo) - target <= 0.0) ||
		    !(conversion_curve(p, hi) - target > 0.0))
			throw RootBracketFailure("partial-conversion root is not bracketed");
		for (int it = 0; it < 200 && hi - lo > 1e-15 * a3; ++it) {
			const double mid = 0.5 * (lo + hi);
			(conversion_curve(p, mid) - target <= 0.0 ? lo : hi) = mid;
		}
		return 0.5 * (lo + hi);
	}
	if (x >= xb.x1) {
		const double c2 = coco_equity_fraction(s, a2);
		const double w2 = c2 * pic + (1.0 - c2) * p.pie;
		return (x + (1.0 - p.beta) * p.z - w2 * s.vanilla_face) / (1.0 - w2);
	}
	return s.vanilla_face * x / xb.x0;
}

double symmetric_clear_min(const SymmetricParams &p, double x) {
	const auto xb = x_breakpoints(p);
	if (x >= xb.x1 && x < xb.x0)
		return symmetric_sheet(p).vanilla_face * x / xb.x0;
	return symmetric_clear(p, x);
}

std::string symmetric_regime(const SymmetricParams &p, double a) {
	switch (asset_regime(symmetric_sheet(p), a)) {
	case AssetRegime::defaulted: return "default";
	case AssetRegime::full_conversion: return "full_conversion";
	case AssetRegime::partial_conversion: return "partial_conversion";
	case AssetRegime::unconverted: return "no_conversion";
	}
	return "?";
}

Network strongly_symmetric_network(const SymmetricParams &p,
                                   const Vector &external_assets) {
	validate(p);
	const int n = p.n;
	if (external_assets.size() != n)
		throw InvalidInput("external asset vector must have n entries");
	const BankSheet s = symmetric_sheet(p);
	const double shares[3] = {interbank_vanilla_share(p), interbank_coco_share(p),
	                          p.pie};
	Network net;
	net.external_assets = external_assets;
	net.recovery = p.recovery;
	net.sheets.assign(n, s);
	Matrix *claims[3] = {&net.pi0, &net.pic, &net.pie};
	for (int k = 0; k < 3; ++k) {
		Matrix &pi = *claims[k];
		pi = Matrix::Constant(n, n + 1, shares[k] / (n - 1));
		pi.col(0).setConstant(1.0 - shares[k]);
		for (int i = 0; i < n; ++i)
			pi(i, i + 1) = 0.0;
	}
	validate(net);
	return net;
}

TwoClassAssets two_class_clear(const SymmetricParams &p, double x, int d,
                               double eps) {
	validate(p);
	if (d < 1 || d >= p.n)
		throw PreconditionViolated("number of stressed banks must lie in [1, n-1]");
	if (!(eps >= 0.0 && eps <= x))
		throw NegativeAssets("stress must lie in [0, x]");
	const BankSheet s = symmetric_sheet(p);
	const double a3 = breakpoints(s).a3;
	const double scale = std::max({s.total_face(), x, 1e-300});
	const int u = p.n - d;

	const auto map = [&](double as, double an) {
		const double fs = pairwise_payment(p, s, as);
		const double fn = pairwise_payment(p, s, an);
		return TwoClassAssets{x - eps + (d - 1) * fs + u * fn,
		                      x + d * fs + (u - 1) * fn};
	};

	const double top =
	    std::max(x + p.z - p.pie * (p.y + p.z), a3) / (1.0 - p.pie);
	TwoClassAssets a{top, top};
	AssetRegime prev_s{}, prev_n{};
	bool have_prev = false;
	for (long it = 0; it < 10'000'000; ++it) {
		const TwoClassAssets img = map(a.stressed, a.unstressed);
		const double step = std::max(std::abs(img.stressed - a.stressed),
		                             std::abs(img.unstressed - a.unstressed));
		if (step <= 1e-15 * scale)
			return img;
		const AssetRegime rs = asset_regime(s, img.stressed);
		const AssetRegime rn = asset_regime(s, img.unstressed);
		if (have_prev && rs == prev_s && rn == prev_n) {
			const auto fs = pairwise_affine(p, s, rs);
			const auto fn = pairwise_affine(p, s, rn);
			if (fs && fn) {
				// [1 - (d-1)ks, -u kn; -d ks, 1 - (u-1)kn] [as; an] = rhs
				const double m11 = 1.0 - (d - 1) * fs->slope, m12 = -u * fn->slope;
				const double m21 = -d * fs->slope, m22 = 1.0 - (u - 1) * fn->slope;
				const double r1 = x - eps + (d - 1) * fs->intercept + u * fn->intercept;
				const double r2 = x + d * fs->intercept + (u - 1) * fn->intercept;
				const double det = m11 * m22 - m12 * m21;
				if (std::abs(det) > 1e-14) {
					const TwoClassAssets cand{(r1 * m22 - m12 * r2) / det,
					                          (m11 * r2 - m21 * r1) / det};
					const TwoClassAssets chk = map(cand.stressed, cand.unstressed);
					const double slack = 1e-12 * scale;
					if (cand.stressed >= 0.0 && cand.unstressed >= 0.0 &&
					    asset_regime(s, cand.stressed) == rs &&
					    asset_regime(s, cand.unstressed) == rn &&
					    cand.stressed <= img.stressed + slack &&
					    cand.unstressed <= img.unstressed + slack &&
					    std::abs(chk.stressed - cand.stressed) <= 1e-13 * scale &&
					    std::abs(chk.unstressed - cand.unstressed) <= 1e-13 * scale)
						return cand;
				}
			}
		}
		prev_s = rs;
		prev_n = rn;
		have_prev = true;
		a = img;
	}
	throw NoConvergence("two-class clearing did not converge", 10'000'000,
	                    std::numeric_limits<double>::quiet_NaN());
}

CriticalEps critical_epsilons(const SymmetricParams &p, double x, int d,
                              double tol) {
	validate(p);
	if (d < 1 || d >= p.n)
		throw PreconditionViolated("number of stressed banks must lie in [1, n-1]");
	if (!(x >= (1.0 - p.beta0) * p.y))
		throw PreconditionViolated("system must start fully solvent");
	const BankSheet s = symmetric_sheet(p);
	const double a1 = s.vanilla_face;

	const auto first = [&](double eps) { return two_class_clear(p, x, d, eps).stressed < a1; };
	const auto all = [&](double eps) {
		const auto a = two_class_clear(p, x, d, eps);
		return a.stressed < a1 && a.unstressed < a1;
	};
	const double width = tol * std::max(1.0, x);
	const auto infimum = [&](auto &&pred) -> std::optional<double> {
		if (!pred(x))
			return std::nullopt;
		if (pred(0.0))
			return 0.0;
		double lo = 0.0, hi = x;
		while (hi - lo > width) {
			const double mid = 0.5 * (lo + hi);
			(pred(mid) ? hi : lo) = mid;
		}
		return hi;
	};
	CriticalEps out;
	out.eps1 = infimum(first);
	out.eps2 = infimum(all);
	return out;
}

std::optional<double> eps2_closed_form(const SymmetricParams &p, double x, int d) {
	validate(p);
	const double alpha = p.recovery;
	if (!(alpha > 0.0 && alpha < 1.0) || d < 1 || d >= p.n)
		return std::nullopt;
	const BankSheet s = symmetric_sheet(p);
	const double pi0 = interbank_vanilla_share(p);
	if (!(pi0 > 0.0))
		return std::nullopt;
	const double ext_vanilla = (1.0 - p.beta0) * p.y;
	const double nm1 = p.n - 1.0;
	// Unstressed banks sit exactly at zero equity; stressed ones are in default.
	const double vs = -nm1 * (x - ext_vanilla) / (d * pi0);
	const double eps = x + (d - 1) / nm1 * pi0 * vs -
	                   (vs + ext_vanilla + (1.0 - alpha) * (1.0 - p.beta) * p.z) / alpha;
	const bool consistent = vs < 0.0 && vs >= -s.vanilla_face && eps >= 0.0 &&
	                        eps <= x && x < s.vanilla_face;
	if (!consistent)
		return std::nullopt;
	return eps;
}

} // namespace cococlear
