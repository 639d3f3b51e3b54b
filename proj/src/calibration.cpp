#include "cococlear/calibration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "cococlear/error.hpp"

namespace cococlear {

std::vector<EbaRecord> exclude_banks(std::vector<EbaRecord> records,
                                     const std::vector<std::string> &excluded) {
	std::erase_if(records, [&](const EbaRecord &r) {
		return std::find(excluded.begin(), excluded.end(), r.bank_id) != excluded.end();
	});
	return records;
}

const std::vector<std::string> &default_exclusions() {
	static const std::vector<std::string> ids{"DE029", "LU45", "SI058"};
	return ids;
}

Marginals marginals_from_eba(const std::vector<EbaRecord> &records) {
	if (records.empty())
		throw InvalidInput("no bank records");
	const auto n = static_cast<Eigen::Index>(records.size());
	Marginals m;
	m.row_sums.resize(n);
	m.col_sums.resize(n);
	m.external_assets.resize(n);
	m.external_liab.resize(n);
	for (Eigen::Index i = 0; i < n; ++i) {
		const EbaRecord &r = records[static_cast<std::size_t>(i)];
		if (!std::isfinite(r.total_assets) || !std::isfinite(r.capital) ||
		    !std::isfinite(r.interbank_liab) || r.capital < 0.0 ||
		    r.interbank_liab < 0.0)
			throw InvalidInput("bad record for bank " + r.bank_id);
		if (r.capital > r.total_assets)
			throw NegativeBalance("capital exceeds total assets for bank " + r.bank_id);
		m.row_sums(i) = r.interbank_liab;
		m.col_sums(i) = r.interbank_liab;
		m.external_assets(i) = r.total_assets - m.col_sums(i);
		m.external_liab(i) = r.total_assets - r.interbank_liab - r.capital;
		if (m.external_assets(i) < 0.0 || m.external_liab(i) < 0.0)
			throw NegativeBalance("negative external balance for bank " + r.bank_id);
	}
	return m;
}

BalancedMarginals perturb_to_balance(const Marginals &m, double eps_scale) {
	const double rows = m.row_sums.sum();
	const double cols = m.col_sums.sum();
	if (!(rows > 0.0) || !(cols > 0.0))
		throw InvalidInput("interbank totals must be positive");
	if (std::abs(rows - cols) > eps_scale * std::max(rows, cols))
		throw ImbalanceTooLarge("interbank assets and liabilities differ by " +
		                        std::to_string(std::abs(rows - cols) / rows));
	BalancedMarginals out{m, 0.0};
	const double factor = rows / cols;
	out.marginals.col_sums = m.col_sums * factor;
	out.marginals.external_assets = m.external_assets - (out.marginals.col_sums - m.col_sums);
	if ((out.marginals.external_assets.array() < 0.0).any())
		throw NegativeBalance("rebalancing drives external assets negative");
	out.max_relative_change = std::abs(factor - 1.0);
	return out;
}

namespace {

void require_balanced(const Marginals &m) {
	const double rows = m.row_sums.sum();
	const double cols = m.col_sums.sum();
	if (m.col_sums.size() != m.row_sums.size())
		throw InvalidInput("marginal vectors differ in length");
	if ((m.row_sums.array() < 0.0).any() || (m.col_sums.array() < 0.0).any())
		throw InvalidInput("marginals must be nonnegative");
	if (std::abs(rows - cols) > 1e-12 * std::max({rows, cols, 1.0}))
		throw InvalidInput("marginals are not balanced");
}

double marginal_error(const Matrix &l, const Marginals &m) {
	double worst = 0.0;
	const Vector rs = l.rowwise().sum();
	const Vector cs = l.colwise().sum().transpose();
	for (Eigen::Index i = 0; i < l.rows(); ++i) {
		worst = std::max(worst, std::abs(rs(i) - m.row_sums(i)) /
		                            std::max(m.row_sums(i), 1e-300));
		worst = std::max(worst, std::abs(cs(i) - m.col_sums(i)) /
		                            std::max(m.col_sums(i), 1e-300));
	}
	return worst;
}

} // namespace

Matrix ipfp_matrix(const Marginals &m, double tol, std::size_t max_iter) {
	require_balanced(m);
	const Eigen::Index n = m.size();
	const double total = m.row_sums.sum();
	if (!(total > 0.0))
		return Matrix::Zero(n, n);
	Matrix l = m.row_sums * m.col_sums.transpose() / total;
	l.diagonal().setZero();
	double err = marginal_error(l, m);
	for (std::size_t it = 0; it < max_iter && err > tol; ++it) {
		for (Eigen::Index i = 0; i < n; ++i) {
			const double s = l.row(i).sum();
			l.row(i) *= s > 0.0 ? m.row_sums(i) / s : 0.0;
		}
		for (Eigen::Index j = 0; j < n; ++j) {
			const double s = l.col(j).sum();
			l.col(j) *= s > 0.0 ? m.col_sums(j) / s : 0.0;
		}
		err = marginal_error(l, m);
	}
	if (!(err <= tol))
		throw NoConvergence("matrix balancing did not reach the marginals", max_iter, err);
	return l;
}

Matrix sample_matrix(const Marginals &m, const SamplerConfig &cfg) {
	if (!(cfg.density_p > 0.0 && cfg.density_p <= 1.0))
		throw InvalidInput("density must lie in (0,1]");
	if (cfg.thinning < 1 || cfg.burn_in < 1)
		throw InvalidInput("sampler counts must be at least 1");
	require_balanced(m);
	const int n = m.size();
	if (n < 2)
		throw InvalidInput("need at least two banks");
	Matrix l = ipfp_matrix(m, 1e-12);
	if (n == 2)
		return l;

	const double total = m.row_sums.sum();
	const double rate = cfg.weight_rate > 0.0
	                        ? cfg.weight_rate
	                        : cfg.density_p * n * (n - 1) / total;
	// Relative weight of a cell sitting at zero versus a positive cell.
	const double log_zero_weight =
	    cfg.density_p < 1.0 ? std::log1p(-cfg.density_p) - std::log(cfg.density_p * rate)
	                        : -std::numeric_limits<double>::infinity();

	std::mt19937_64 rng(cfg.seed);
	std::uniform_int_distribution<int> pick(0, n - 1);
	std::uniform_real_distribution<double> unit(0.0, 1.0);

	// Alternating cycle rows[k], cols[k]: +delta on (rows[k], cols[k]),
	// -delta on (rows[k], cols[k+1]). Length-6 cycles make n = 3 mixable.
	std::array<int, 3> rows{}, cols{};
	const auto distinct = [](const std::array<int, 3> &v, int k) {
		for (int a = 0; a < k; ++a)
			for (int b = a + 1; b < k; ++b)
				if (v[a] == v[b])
					return false;
		return true;
	};

	// One realization: the state after burn-in plus one thinning interval.
	const std::uint64_t steps = cfg.burn_in + cfg.thinning;
	for (std::uint64_t step = 0; step < steps; ++step) {
		const int k = (n >= 4 && unit(rng) < 0.5) ? 2 : 3;
		for (int a = 0; a < k; ++a) {
			rows[a] = pick(rng);
			cols[a] = pick(rng);
		}
		if (!distinct(rows, k) || !distinct(cols, k))
			continue;
		bool ok = true;
		for (int a = 0; a < k && ok; ++a)
			ok = rows[a] != cols[a] && rows[a] != cols[(a + 1) % k];
		if (!ok)
			continue;

		double lo = -std::numeric_limits<double>::infinity();
		double hi = std::numeric_limits<double>::infinity();
		for (int a = 0; a < k; ++a) {
			lo = std::max(lo, -l(rows[a], cols[a]));
			hi = std::min(hi, l(rows[a], cols[(a + 1) % k]));
		}
		if (!(hi > lo))
			continue;
		int at_lo = 0, at_hi = 0;
		for (int a = 0; a < k; ++a) {
			at_lo += -l(rows[a], cols[a]) == lo;
			at_hi += l(rows[a], cols[(a + 1) % k]) == hi;
		}
		const double w_int = std::log(hi - lo);
		const double w_lo = at_lo * log_zero_weight;
		const double w_hi = at_hi * log_zero_weight;
		const double top = std::max({w_int, w_lo, w_hi});
		const double e_int = std::exp(w_int - top), e_lo = std::exp(w_lo - top),
		             e_hi = std::exp(w_hi - top);
		const double u = unit(rng) * (e_int + e_lo + e_hi);
		double delta;
		if (u < e_lo)
			delta = lo;
		else if (u < e_lo + e_hi)
			delta = hi;
		else
			delta = lo + unit(rng) * (hi - lo);

		for (int a = 0; a < k; ++a) {
			// At an endpoint the binding cells land on exactly 0.
			l(rows[a], cols[a]) += delta;
			l(rows[a], cols[(a + 1) % k]) -= delta;
		}
	}
	const double err = marginal_error(l, m);
	if (!(err <= 1e-6))
		throw NoConvergence("sampled matrix drifted from the marginals", steps, err);
	return l;
}

VanillaNetwork build_network(const Marginals &m, const Matrix &liabilities) {
	VanillaNetwork v;
	v.liabilities = liabilities;
	v.external_liab = m.external_liab;
	v.external_assets = m.external_assets;
	validate(v);
	return v;
}

SystemTotals system_totals(const std::vector<EbaRecord> &records,
                           const Marginals &m) {
	SystemTotals t;
	t.external_assets = m.external_assets.sum();
	t.external_liab = m.external_liab.sum();
	t.interbank = m.row_sums.sum();
	for (const auto &r : records)
		t.capital += r.capital;
	return t;
}

} // namespace cococlear
