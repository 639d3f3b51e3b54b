#include "cococlear/clearing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cococlear/error.hpp"

namespace cococlear {

namespace {

using Regime = AssetRegime;

double face_scale(const Network &net) {
	double scale = 0.0;
	for (const auto &s : net.sheets)
		scale = std::max(scale, s.total_face());
	return std::max(scale, 1e-300);
}

double normalized_residual(const Vector &a, const Vector &image, double scale) {
	return (a - image).cwiseAbs().maxCoeff() / scale;
}

std::vector<Regime> regimes(const Network &net, const Vector &a) {
	std::vector<Regime> out(net.size());
	for (int i = 0; i < net.size(); ++i)
		out[i] = asset_regime(net.sheets[i], a[i]);
	return out;
}

// Solves the clearing equations with every bank frozen in its current regime.
// The candidate is accepted only if it is a fixed point of the true map that
// stays in the same regime cell and lies on the correct side of the iterate;
// the cell is an order interval, so the extremal fixed point then lies in it
// too and coincides with the unique affine fixed point.
std::optional<Vector> regime_solve(const Network &net, const Vector &iterate,
                                   const std::vector<Regime> &cell,
                                   Extremum extremum, double tol, double scale) {
	const int n = net.size();
	Vector slope_v(n), slope_c(n), slope_e(n), icpt_v(n), icpt_c(n), icpt_e(n);
	for (int j = 0; j < n; ++j) {
		const auto form = affine_payouts(net.sheets[j], cell[j]);
		if (!form)
			return std::nullopt;
		slope_v[j] = form->vanilla.slope;
		slope_c[j] = form->coco.slope;
		slope_e[j] = form->original_equity.slope;
		icpt_v[j] = form->vanilla.intercept;
		icpt_c[j] = form->coco.intercept;
		icpt_e[j] = form->original_equity.intercept;
	}
	const Matrix v_t = net.vanilla_block().transpose();
	const Matrix c_t = net.coco_block().transpose();
	const Matrix e_t = net.equity_block().transpose();
	const Matrix system = Matrix::Identity(n, n) - v_t * slope_v.asDiagonal() -
	                      c_t * slope_c.asDiagonal() - e_t * slope_e.asDiagonal();
	const Vector rhs = net.external_assets + v_t * icpt_v + c_t * icpt_c + e_t * icpt_e;
	Eigen::PartialPivLU<Matrix> lu(system);
	if (!(lu.rcond() > 1e-12))
		return std::nullopt;
	Vector candidate = lu.solve(rhs);
	if (!candidate.allFinite())
		return std::nullopt;
	const double slack = 1e-12 * scale;
	for (int i = 0; i < n; ++i) {
		if (candidate[i] < 0.0)
			return std::nullopt;
		if (asset_regime(net.sheets[i], candidate[i]) != cell[i])
			return std::nullopt;
		if (extremum == Extremum::maximal && candidate[i] > iterate[i] + slack)
			return std::nullopt;
		if (extremum == Extremum::minimal && candidate[i] < iterate[i] - slack)
			return std::nullopt;
	}
	if (normalized_residual(candidate, phi(net, candidate), scale) > tol)
		return std::nullopt;
	return candidate;
}

ClearingResult picard(const Network &net, Vector a, Extremum extremum,
                      const ClearingOptions &options) {
	const double scale = face_scale(net);
	std::vector<Regime> previous;
	for (std::size_t k = 0; k < options.max_iter; ++k) {
		if (options.observer)
			options.observer(a);
		const Vector image = phi(net, a);
		const double residual = normalized_residual(a, image, scale);
		if (!std::isfinite(residual))
			throw NoConvergence("clearing iteration produced non-finite values", k,
			                    residual, a);
		if (residual <= options.tol)
			return describe(net, a, extremum, k);
		if (options.regime_finisher) {
			auto current = regimes(net, image);
			if (current == previous) {
				if (auto solved = regime_solve(net, image, current, extremum,
				                               options.tol, scale))
					return describe(net, *solved, extremum, k + 1);
			}
			previous = std::move(current);
		}
		a = image;
	}
	const double residual = normalized_residual(a, phi(net, a), scale);
	std::ostringstream msg;
	msg << "clearing did not converge in " << options.max_iter
	    << " iterations (residual " << residual << ")";
	throw NoConvergence(msg.str(), options.max_iter, residual, a);
}

} // namespace

int ClearingResult::default_count() const {
	return static_cast<int>(std::count(defaults.begin(), defaults.end(), true));
}

Payouts payouts(const Network &net, const Vector &assets) {
	const int n = net.size();
	Payouts out{Vector(n), Vector(n), Vector(n)};
	for (int j = 0; j < n; ++j) {
		const BankSheet &s = net.sheets[j];
		const double a = assets[j];
		const double e = equity(s, a);
		const double pos = std::max(e, 0.0);
		const double c = coco_equity_fraction(s, a);
		out.vanilla[j] = s.vanilla_face - std::max(-e, 0.0);
		out.coco[j] = (1.0 - conversion_fraction(s, a)) * s.coco_face + c * pos;
		out.original_equity[j] = (1.0 - c) * pos;
	}
	return out;
}

Vector phi(const Network &net, const Vector &assets) {
	const Payouts p = payouts(net, assets);
	return net.external_assets + net.vanilla_block().transpose() * p.vanilla +
	       net.coco_block().transpose() * p.coco +
	       net.equity_block().transpose() * p.original_equity;
}

double society_receipts(const Network &net, const Vector &assets) {
	const Payouts p = payouts(net, assets);
	return net.pi0.col(0).dot(p.vanilla) + net.pic.col(0).dot(p.coco) +
	       net.pie.col(0).dot(p.original_equity);
}

double external_creditor_receipts(const Network &net, const Vector &assets) {
	const Payouts p = payouts(net, assets);
	return net.pi0.col(0).dot(p.vanilla) + net.pic.col(0).dot(p.coco);
}

ClearingResult describe(const Network &net, const Vector &assets,
                        Extremum extremum, std::size_t iterations) {
	const int n = net.size();
	ClearingResult r;
	r.assets = assets;
	r.lambda.resize(n);
	r.equity.resize(n);
	r.coco_fraction.resize(n);
	r.defaults.resize(n);
	for (int i = 0; i < n; ++i) {
		const BankSheet &s = net.sheets[i];
		r.lambda[i] = conversion_fraction(s, assets[i]);
		r.equity[i] = equity(s, assets[i]);
		r.coco_fraction[i] = coco_equity_fraction(s, assets[i]);
		r.defaults[i] = is_default(s, assets[i]);
	}
	r.society_value = society_receipts(net, assets);
	r.iterations = iterations;
	r.scale = face_scale(net);
	r.residual = normalized_residual(assets, phi(net, assets), r.scale);
	r.extremum = extremum;
	return r;
}

ClearingResult clear_max(const Network &net, const ClearingOptions &options) {
	return picard(net, lattice_top(net), Extremum::maximal, options);
}

ClearingResult clear_min(const Network &net, const ClearingOptions &options) {
	return picard(net, Vector::Zero(net.size()), Extremum::minimal, options);
}

RiskMeasures risk_measures(const Network &net, const ClearingResult &result) {
	RiskMeasures m;
	double face = 0.0;
	for (int i = 0; i < net.size(); ++i)
		face += net.pi0(i, 0) * net.sheets[i].vanilla_face +
		        net.pic(i, 0) * net.sheets[i].coco_face;
	if (face > 0.0)
		m.external_repayment_fraction =
		    external_creditor_receipts(net, result.assets) / face;
	for (int i = 0; i < net.size(); ++i)
		m.original_shareholder_value +=
		    (1.0 - result.coco_fraction[i]) * std::max(result.equity[i], 0.0);
	m.default_count = result.default_count();
	return m;
}

bool assert_unique(const Network &net, double tol, const ClearingOptions &options,
                   bool bypass) {
	if (!bypass) {
		if (net.recovery != 1.0)
			throw PreconditionViolated("uniqueness requires recovery = 1");
		for (int i = 0; i < net.size(); ++i)
			if (!(net.pi0(i, 0) * net.sheets[i].vanilla_face > 0.0) ||
			    !(net.pie(i, 0) > 0.0))
				throw PreconditionViolated(
				    "uniqueness requires every bank to owe society vanilla debt "
				    "and to have society as a shareholder");
	}
	const ClearingResult hi = clear_max(net, options);
	const ClearingResult lo = clear_min(net, options);
	return (hi.assets - lo.assets).cwiseAbs().maxCoeff() <= tol;
}

double conservation_check(const Network &net, const ClearingResult &result) {
	return std::abs(result.society_value - net.external_assets.sum());
}

} // namespace cococlear
