// Acceptance suite: one PASS/FAIL line per criterion.
//
// Exit status is nonzero if any criterion fails for a reason other than
// missing input data. Criteria that need the aggregate bank CSV print FAIL
// with the reason when the file is absent; pass --strict to count those too.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cococlear/balance_sheet.hpp"
#include "cococlear/calibration.hpp"
#include "cococlear/clearing.hpp"
#include "cococlear/error.hpp"
#include "cococlear/io.hpp"
#include "cococlear/studies.hpp"
#include "cococlear/symmetric.hpp"
#include "test_support.hpp"

using namespace cococlear;
using testing_support::uniform;

namespace {

struct Outcome {
	bool pass = false;
	bool data_missing = false;
	std::string detail;
};

Outcome pass(std::string detail) { return {true, false, std::move(detail)}; }
Outcome fail(std::string detail) { return {false, false, std::move(detail)}; }

template <class... Ts>
std::string fmt(const Ts &...parts) {
	std::ostringstream out;
	out.precision(6);
	(out << ... << parts);
	return out.str();
}

// ---- 1: single-bank curves -------------------------------------------------

Outcome criterion1() {
	const BankSheet sheet{10.0, 4.0, {0.1, 0.5}, 0.5};
	const auto b = breakpoints(sheet);
	double worst = std::max({std::abs(b.a1 - 10.0), std::abs(b.a2 - 11.0), std::abs(b.a3 - 15.4)});

	const auto ref_equity = [](double a) {
		if (a < 10.0)
			return a / 2.0 - 10.0;
		if (a <= 11.0)
			return a - 10.0;
		if (a < 15.4)
			return a / 11.0;
		return a - 14.0;
	};
	const auto ref_debt = [](double a) {
		if (a < 10.0)
			return a / 2.0;
		if (a <= 11.0)
			return 10.0;
		if (a < 15.4)
			return a / 1.1;
		return 14.0;
	};
	const auto ref_c = [](double a) {
		return 1.0 - std::pow(std::clamp(a, 11.0, 15.4) / 15.4, 5.0);
	};
	for (double a : {0.0, 5.0, 8.0, 10.0, 10.5, 11.0, 12.0, 15.4, 16.0, 20.0}) {
		const double e = ref_equity(a);
		const double pos = std::max(e, 0.0);
		const double remaining = a < 10.0 ? 0.0 : (a <= 11.0 ? 0.0 : (a < 15.4 ? a / 1.1 - 10.0 : 4.0));
		const TrancheValues t = tranche_values(sheet, a);
		worst = std::max({worst, std::abs(equity(sheet, a) - e),
		                  std::abs(debt_value(sheet, a) - ref_debt(a)),
		                  std::abs(t.vanilla - (a < 10.0 ? a / 2.0 : 10.0)),
		                  std::abs(t.coco - (remaining + ref_c(a) * pos)),
		                  std::abs(t.original_equity - (1.0 - ref_c(a)) * pos)});
	}
	const std::string d = fmt("max deviation ", worst, " at 10 asset levels, E(12) = ", equity(sheet, 12.0));
	return worst <= 1e-12 ? pass(d) : fail(d);
}

// ---- 2: two-bank counterexample --------------------------------------------

Outcome criterion2() {
	const double b1 = (9.0 - std::sqrt(41.0)) / 20.0;
	double worst = 0.0;
	int set_mismatch = 0, scan_mismatch = 0, scanned = 0;
	for (int k = 0; k < 200; ++k) {
		const double beta = k / 199.0;
		const Network net = testing_support::two_bank_counterexample(beta);
		ClearingOptions o;
		o.tol = 1e-13;
		const auto r = clear_max(net, o);
		if (beta < 0.7) {
			Vector expect(2);
			std::vector<bool> dset{false, false};
			if (beta <= b1) {
				expect << 11.0, 10 * beta * beta - 9 * beta + 11;
			} else if (beta < 0.4) {
				expect << 6.0, 1.0;
				dset = {true, true};
			} else {
				expect << 6.0, 10 * beta * beta - 14 * beta + 11;
				dset = {false, true};
			}
			worst = std::max(worst, (r.assets - expect).cwiseAbs().maxCoeff());
			set_mismatch += r.defaults != dset;
		} else {
			// Exhaustive enumeration and a grid scan, maximal element of each.
			++scanned;
			const auto enumerated = testing_support::counterexample_fixed_points(beta);
			const auto scanned_pts = testing_support::scan_two_bank(net, 1e-10);
			if (enumerated.empty() || scanned_pts.empty()) {
				++scan_mismatch;
				continue;
			}
			Vector top = enumerated.front();
			for (const auto &v : enumerated)
				top = top.cwiseMax(v);
			Vector scan_top = scanned_pts.front();
			for (const auto &v : scanned_pts)
				scan_top = scan_top.cwiseMax(v);
			const double dev = std::max((r.assets - top).cwiseAbs().maxCoeff(),
			                            (r.assets - scan_top).cwiseAbs().maxCoeff());
			worst = std::max(worst, dev);
			const bool bank2_default = top[1] < net.sheets[1].vanilla_face;
			set_mismatch += r.defaults[1] != bank2_default || r.defaults[0];
		}
	}
	const std::string d = fmt("max deviation ", worst, ", default-set mismatches ", set_mismatch,
	                          ", brute-force failures ", scan_mismatch, " over ", scanned,
	                          " points with beta >= 0.7");
	return worst <= 1e-8 && set_mismatch == 0 && scan_mismatch == 0 ? pass(d) : fail(d);
}

// ---- 3: lattice properties -------------------------------------------------

Outcome criterion3() {
	std::mt19937_64 rng(3003);
	int nonmonotone = 0, unconverged = 0, unordered = 0;
	for (int k = 0; k < 1000; ++k) {
		const int n = 2 + static_cast<int>(rng() % 19);
		const Network net = testing_support::random_network(rng, n);
		const double scale = std::max(1.0, net.vanilla_faces().maxCoeff() + net.coco_faces().maxCoeff());
		std::optional<Vector> prev;
		bool mono = true;
		ClearingOptions o;
		o.observer = [&](const Vector &a) {
			if (prev && ((a - *prev).array() > 1e-12 * scale).any())
				mono = false;
			prev = a;
		};
		try {
			const auto up = clear_max(net, o);
			if (prev && ((up.assets - *prev).array() > 1e-12 * scale).any())
				mono = false;
			if (!(up.residual <= o.tol))
				++unconverged;
			const auto lo = clear_min(net);
			if (((lo.assets - up.assets).array() > 1e-9 * scale).any())
				++unordered;
		} catch (const NoConvergence &) {
			++unconverged;
		}
		nonmonotone += !mono;
	}
	const std::string d = fmt("1000 networks: ", nonmonotone, " non-monotone, ", unconverged,
	                          " unconverged, ", unordered, " with min > max");
	return nonmonotone + unconverged + unordered == 0 ? pass(d) : fail(d);
}

// ---- 4: conservation and uniqueness ----------------------------------------

Outcome criterion4() {
	std::mt19937_64 rng(4004);
	testing_support::RandomNetworkOptions opt;
	opt.recovery = 1.0;
	double worst_cons = 0.0, worst_gap = 0.0;
	int checked_unique = 0;
	ClearingOptions o;
	o.tol = 1e-13;
	for (int k = 0; k < 1000; ++k) {
		const int n = 2 + static_cast<int>(rng() % 19);
		const Network net = testing_support::random_network(rng, n, opt);
		const auto up = clear_max(net, o);
		const double total = net.external_assets.sum();
		worst_cons = std::max(worst_cons, conservation_check(net, up) / std::max(total, 1e-300));
		bool hyp = true;
		for (int i = 0; i < n; ++i)
			hyp = hyp && net.pi0(i, 0) * net.sheets[i].vanilla_face > 0.0 && net.pie(i, 0) > 0.0;
		if (!hyp)
			continue;
		++checked_unique;
		const auto lo = clear_min(net, o);
		worst_gap = std::max(worst_gap, (up.assets - lo.assets).cwiseAbs().maxCoeff());
	}
	const std::string d = fmt("worst relative conservation error ", worst_cons,
	                          ", worst max-min gap ", worst_gap, " over ", checked_unique,
	                          " networks meeting the uniqueness hypotheses");
	return worst_cons <= 1e-9 && worst_gap <= 1e-8 && checked_unique >= 500 ? pass(d) : fail(d);
}

// ---- 5: symmetric closed form ----------------------------------------------

SymmetricParams random_symmetric(std::mt19937_64 &rng, int n) {
	SymmetricParams p;
	p.n = n;
	p.y = uniform(rng, 0.5, 20);
	p.z = uniform(rng, 0.5, 20);
	p.beta = uniform(rng, 0, 1);
	p.beta0 = uniform(rng, 0, 1);
	p.pie = uniform(rng, 0, 0.6);
	p.terms = {uniform(rng, 0.01, 0.3), uniform(rng, 0, 1)};
	p.recovery = uniform(rng, 0, 1);
	return p;
}

Outcome criterion5() {
	std::mt19937_64 rng(5005);
	ClearingOptions o;
	o.tol = 1e-13;
	double worst = 0.0;
	int points = 0, window_points = 0;
	for (int n : {2, 5, 10}) {
		for (int k = 0; k < 100; ++k) {
			const SymmetricParams p = random_symmetric(rng, n);
			const auto xb = x_breakpoints(p);
			std::vector<double> xs;
			const double hi = 1.5 * (p.y + p.z) + 1.0;
			for (int j = 0; j < 45; ++j)
				xs.push_back(hi * j / 44.0);
			// Five more points inside the window of multiple solutions.
			for (int j = 0; j < 5; ++j)
				if (xb.x0 > xb.x1)
					xs.push_back(xb.x1 + (xb.x0 - xb.x1) * j / 5.0);
			for (double x : xs) {
				const Network net = strongly_symmetric_network(p, Vector::Constant(n, x));
				const auto up = clear_max(net, o);
				const auto lo = clear_min(net, o);
				worst = std::max({worst, (up.assets.array() - symmetric_clear(p, x)).abs().maxCoeff(),
				                  (lo.assets.array() - symmetric_clear_min(p, x)).abs().maxCoeff()});
				++points;
				window_points += x >= xb.x1 && x < xb.x0;
			}
		}
	}
	const std::string d = fmt("max deviation ", worst, " over ", points, " points (",
	                          window_points, " inside the multiplicity window)");
	return worst <= 1e-8 ? pass(d) : fail(d);
}

// ---- 6: monotonicity of the critical stresses ------------------------------

Outcome criterion6() {
	std::mt19937_64 rng(6006);
	constexpr double inf = std::numeric_limits<double>::infinity();
	double worst_step = 0.0, worst_eps2 = 0.0, worst_eps1 = 0.0;
	int eps2_compared = 0, eps1_compared = 0, errors = 0;
	for (int set = 0; set < 20; ++set) {
		SymmetricParams p;
		p.n = 3 + static_cast<int>(rng() % 6);
		p.y = uniform(rng, 2, 20);
		p.z = uniform(rng, 2, 20);
		p.recovery = uniform(rng, 0.2, 0.9);
		if (set % 4 == 3) {
			// Conversion factor below the trigger; holds through pie = 0.
			p.terms.trigger = uniform(rng, 0.1, 0.3);
			p.terms.conversion_factor = uniform(rng, 0.0, p.terms.trigger);
			p.pie = 0.0;
		} else {
			p.terms.trigger = uniform(rng, 0.01, 0.2);
			p.terms.conversion_factor = uniform(rng, p.terms.trigger, 1.0);
			p.pie = uniform(rng, 0.0, 0.4);
		}
		const double x = p.y + uniform(rng, 0.05, 0.6) * p.z;
		const int d = 1 + static_cast<int>(rng() % (p.n - 1));

		double eps1[10][10], eps2[10][10];
		for (int i = 0; i < 10; ++i) {
			for (int j = 0; j < 10; ++j) {
				SymmetricParams q = p;
				q.beta = i / 9.0;
				q.beta0 = j / 9.0;
				try {
					const auto e = critical_epsilons(q, x, d);
					eps1[i][j] = e.eps1.value_or(inf);
					eps2[i][j] = e.eps2.value_or(inf);
					const auto closed = eps2_closed_form(q, x, d);
					if (closed && e.eps1 && *e.eps1 < *closed) {
						++eps2_compared;
						worst_eps2 = std::max(worst_eps2, e.eps2 ? std::abs(*e.eps2 - *closed) : inf);
					}
					const int n = q.n;
					const double share = 1.0 - (n - d - 1) * q.pie / (n - 1);
					const bool i1 = x >= share * q.terms.trigger * (q.y + q.z) + q.y +
					                         d * q.beta * q.z / (n - 1);
					if (i1) {
						const double pay =
						    (q.z + q.pie * (x + d * (1 - q.beta) * q.z / (n - 1) - q.y - q.z)) / share;
						const double expected = x + double(n - d) / (n - 1) * pay -
						                        (1 - q.beta0) * q.y -
						                        double(n - d) / (n - 1) * (1 - q.beta) * q.z;
						// At eps = x the stressed bank sits exactly on its default
						// threshold, which is not a default.
						if (expected >= 0.0 && expected < x * (1 - 1e-9)) {
							++eps1_compared;
							worst_eps1 = std::max(worst_eps1, e.eps1 ? std::abs(*e.eps1 - expected) : inf);
						}
					}
				} catch (const Error &) {
					++errors;
				}
			}
		}
		const auto step = [&](double a, double b) {
			if (std::isinf(b))
				return 0.0;
			return std::isinf(a) ? -inf : b - a;
		};
		for (int i = 0; i < 10; ++i)
			for (int j = 0; j < 10; ++j) {
				if (i + 1 < 10)
					worst_step = std::min({worst_step, step(eps1[i][j], eps1[i + 1][j]),
					                       step(eps2[i][j], eps2[i + 1][j])});
				if (j + 1 < 10)
					worst_step = std::min({worst_step, step(eps1[i][j], eps1[i][j + 1]),
					                       step(eps2[i][j], eps2[i][j + 1])});
			}
	}
	const std::string d = fmt("most negative increment ", worst_step, "; closed-form system default ",
	                          worst_eps2, " over ", eps2_compared, " cells; first default ", worst_eps1,
	                          " over ", eps1_compared, " cells; ", errors, " errors");
	const bool ok = worst_step >= -1e-6 && worst_eps2 <= 1e-6 && worst_eps1 <= 1e-6 &&
	                errors == 0 && eps2_compared > 0 && eps1_compared > 0;
	return ok ? pass(d) : fail(d);
}

// ---- 7: no defaults under total CoCo-ization -------------------------------

Outcome criterion7() {
	std::mt19937_64 rng(7007);
	testing_support::RandomNetworkOptions opt;
	opt.coco_level = 1.0;
	int defaults = 0, networks = 0;
	for (int k = 0; k < 1000; ++k) {
		const int n = 2 + static_cast<int>(rng() % 19);
		const Network net = testing_support::random_network(rng, n, opt);
		for (double xi : {uniform(rng, 0, 1), 1.0}) {
			defaults += clear_max(apply_shock(net, xi)).default_count();
			++networks;
		}
	}
	const std::string d = fmt(defaults, " defaults over ", networks, " shocked networks");
	return defaults == 0 ? pass(d) : fail(d);
}

// ---- 8 and 9: aggregate bank data ------------------------------------------

std::optional<std::string> eba_path() {
	if (const char *env = std::getenv("EBA_CSV"); env && *env)
		return std::string(env);
	const std::string fallback = "data/eba2011.csv";
	if (std::filesystem::exists(fallback))
		return fallback;
	return std::nullopt;
}

Outcome data_missing() {
	return {false, true, "EBA CSV not available (set EBA_CSV or add data/eba2011.csv)"};
}

struct Calibrated {
	std::vector<EbaRecord> records;
	Marginals marginals;
	VanillaNetwork network;
	double worst_fit = 0.0;
};

Calibrated calibrate(const std::string &path) {
	Calibrated c;
	c.records = exclude_banks(read_eba_csv(path), default_exclusions());
	c.marginals = perturb_to_balance(marginals_from_eba(c.records), 1e-3).marginals;
	const Matrix l = sample_matrix(c.marginals, SamplerConfig{});
	for (int i = 0; i < c.marginals.size(); ++i) {
		if (c.marginals.row_sums[i] > 0)
			c.worst_fit = std::max(c.worst_fit, std::abs(l.row(i).sum() / c.marginals.row_sums[i] - 1));
		if (c.marginals.col_sums[i] > 0)
			c.worst_fit = std::max(c.worst_fit, std::abs(l.col(i).sum() / c.marginals.col_sums[i] - 1));
	}
	c.network = build_network(c.marginals, l);
	return c;
}

bool same_4_sig(double value, double target) {
	return std::abs(value - target) <= 0.5e-3 * std::pow(10.0, std::floor(std::log10(target)));
}

Outcome criterion9(const Calibrated &c) {
	const auto t = system_totals(c.records, c.marginals);
	// Inputs are in millions of euro; totals are compared in trillions.
	const double unit = 1e6;
	const bool totals = same_4_sig(t.external_assets / unit, 24.383) &&
	                    same_4_sig(t.external_liab / unit, 23.381) &&
	                    same_4_sig(t.interbank / unit, 3.072) && same_4_sig(t.capital / unit, 1.002);
	const std::string d = fmt(c.records.size(), " banks, totals ", t.external_assets / unit, " / ",
	                          t.external_liab / unit, " / ", t.interbank / unit, " / ",
	                          t.capital / unit, " trillion, worst marginal error ", c.worst_fit);
	return totals && c.worst_fit <= 1e-6 ? pass(d) : fail(d);
}

Outcome criterion8(const Calibrated &c) {
	StudySettings s;
	s.jobs = std::max(1u, std::thread::hardware_concurrency());
	const VanillaNetwork &v = c.network;
	const int n = v.size();

	const StudyRow base = evaluate_cell(v, make_scenario(Scheme::none, 0, 0.03, 1, 0.5, 0.03), s);
	const double frac = base.measures.external_repayment_fraction.value_or(-1);
	const bool a = base.error.empty() && base.measures.default_count > n / 2 && frac >= 0.40 && frac <= 0.65;

	const auto s1 = run_study1(v, linear_grid(0.0, 0.05, 50), {0.03}, 0.03, s);
	std::optional<double> threshold;
	for (const auto &row : s1.rows)
		if (row.scheme == Scheme::full && row.error.empty() && row.measures.default_count == 0 &&
		    (!threshold || row.beta < *threshold))
			threshold = row.beta;
	const bool b = threshold.has_value();

	const auto s2 = run_study2(v, linear_grid(0.0, 0.1, 50), 0.03, s);
	int violations = 0;
	for (std::size_t k = 0; k + 3 < s2.rows.size(); k += 4) {
		const StudyRow *none = nullptr, *inter = nullptr;
		for (std::size_t m = k; m < k + 4; ++m) {
			if (s2.rows[m].scheme == Scheme::none)
				none = &s2.rows[m];
			if (s2.rows[m].scheme == Scheme::interbank)
				inter = &s2.rows[m];
		}
		if (!none || !inter || !none->error.empty() || !inter->error.empty()) {
			++violations;
			continue;
		}
		const double tol = 1e-9;
		violations += inter->measures.default_count > none->measures.default_count ||
		              inter->measures.external_repayment_fraction.value_or(0) <
		                  none->measures.external_repayment_fraction.value_or(0) - tol ||
		              inter->measures.original_shareholder_value <
		                  none->measures.original_shareholder_value * (1 - tol) - tol;
	}
	const bool cc = violations == 0;

	const auto s3 = run_study3(v, linear_grid(0.0, 0.6, 50), 0.03, 0.05, s);
	std::optional<double> gamma_zero;
	for (const auto &row : s3.rows)
		if (row.scheme == Scheme::interbank && row.error.empty() && row.measures.default_count == 0 &&
		    (!gamma_zero || row.axis_values[0] < *gamma_zero))
			gamma_zero = row.axis_values[0];
	const bool dd = gamma_zero.has_value();

	const std::string d = fmt("(a) ", base.measures.default_count, " of ", n, " default, repayment ",
	                          frac, (a ? " ok" : " FAIL"), "; (b) first solvent beta ",
	                          threshold ? fmt(*threshold) : "none", (b ? " ok" : " FAIL"), "; (c) ",
	                          violations, " dominance violations", (cc ? " ok" : " FAIL"),
	                          "; (d) first solvent gamma ", gamma_zero ? fmt(*gamma_zero) : "none",
	                          (dd ? " ok" : " FAIL"));
	return a && b && cc && dd ? pass(d) : fail(d);
}

} // namespace

int main(int argc, char **argv) {
	bool strict = false;
	for (int i = 1; i < argc; ++i) {
		if (std::string(argv[i]) == "--strict")
			strict = true;
		else {
			std::cerr << "usage: acceptance [--strict]\n";
			return 2;
		}
	}

	int hard_failures = 0, blocked = 0;
	const auto report = [&](int id, const auto &run) {
		const auto start = std::chrono::steady_clock::now();
		Outcome o;
		try {
			o = run();
		} catch (const std::exception &e) {
			o = fail(std::string("exception: ") + e.what());
		}
		const double secs =
		    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
		std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail << " ["
		          << fmt(secs) << " s]" << std::endl;
		if (!o.pass)
			(o.data_missing ? blocked : hard_failures) += 1;
	};

	report(1, criterion1);
	report(2, criterion2);
	report(3, criterion3);
	report(4, criterion4);
	report(5, criterion5);
	report(6, criterion6);
	report(7, criterion7);

	std::optional<Calibrated> cal;
	std::string cal_error;
	if (const auto path = eba_path()) {
		try {
			cal = calibrate(*path);
		} catch (const std::exception &e) {
			cal_error = e.what();
		}
	}
	for (int id : {8, 9})
		report(id, [&]() -> Outcome {
			if (!eba_path())
				return data_missing();
			if (!cal)
				return fail("calibration failed: " + cal_error);
			return id == 8 ? criterion8(*cal) : criterion9(*cal);
		});

	std::cout << hard_failures << " failed, " << blocked << " blocked by missing data" << std::endl;
	return hard_failures > 0 || (strict && blocked > 0) ? 1 : 0;
}
