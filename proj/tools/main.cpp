#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cococlear/calibration.hpp"
#include "cococlear/clearing.hpp"
#include "cococlear/error.hpp"
#include "cococlear/io.hpp"
#include "cococlear/studies.hpp"
#include "cococlear/symmetric.hpp"

using namespace cococlear;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_partial = 1;
constexpr int exit_invalid = 2;

struct Globals {
	std::optional<double> tol;
	std::optional<std::size_t> max_iter;
	std::optional<std::uint64_t> seed;
	std::string config;
	unsigned jobs = 1;
};

// Scenario keys settable from the command line; values are parsed by the
// same code that reads config files.
struct ScenarioFlags {
	std::map<std::string, std::optional<std::string>> values;

	void attach(CLI::App *app) {
		const std::pair<const char *, const char *> keys[] = {
		    {"scheme", "none, full, interbank or external"},
		    {"beta", "interbank CoCo fraction"},
		    {"beta0", "external CoCo fraction"},
		    {"trigger", "CoCo trigger ratio"},
		    {"conversion", "CoCo conversion factor"},
		    {"recovery", "recovery rate in default"},
		    {"shock", "fractional shock to external assets"},
		    {"interbank_fraction", "share of external debt moved interbank"}};
		for (const auto &[key, help] : keys) {
			std::string flag = std::string("--") + key;
			std::replace(flag.begin(), flag.end(), '_', '-');
			app->add_option(flag, values[key], help);
		}
	}
};

struct Settings {
	RunConfig run;
	ClearingOptions clearing;
};

Settings resolve(const Globals &g, const ScenarioFlags *flags) {
	KeyValues kv = g.config.empty() ? KeyValues{} : read_key_values(g.config);
	if (flags)
		for (const auto &[key, value] : flags->values)
			if (value)
				kv[key] = *value;
	Settings s;
	s.run = apply_config(kv);
	if (g.tol)
		s.run.tol = g.tol;
	if (g.max_iter)
		s.run.max_iter = g.max_iter;
	if (g.seed)
		s.run.scenario.seed = s.run.sampler.seed = *g.seed;
	if (s.run.tol)
		s.clearing.tol = *s.run.tol;
	if (s.run.max_iter)
		s.clearing.max_iter = *s.run.max_iter;
	if (!(s.clearing.tol > 0.0))
		throw InvalidInput("tolerance must be positive");
	return s;
}

// Opens `path` for writing, or returns stdout for "" and "-".
struct Output {
	std::ofstream file;
	std::ostream *stream = &std::cout;

	explicit Output(const std::string &path) {
		if (!path.empty() && path != "-") {
			file.open(path);
			if (!file)
				throw InvalidInput("cannot write " + path);
			stream = &file;
		}
		*stream << std::setprecision(12);
	}
	std::ostream &operator*() { return *stream; }
};

std::string csv_optional(const std::optional<double> &v) {
	if (!v)
		return "";
	std::ostringstream s;
	s << std::setprecision(12) << *v;
	return s.str();
}

std::vector<double> parse_list(const std::string &text, const std::string &what) {
	std::vector<double> out;
	std::stringstream ss(text);
	std::string item;
	while (std::getline(ss, item, ','))
		out.push_back(parse_double(item, what));
	validate_grid(out, what);
	return out;
}

// Two-bank network where only bank 1 issues CoCos.
Network counterexample_network(double beta) {
	VanillaNetwork v;
	v.liabilities = Matrix::Zero(2, 2);
	v.liabilities(0, 1) = 10.0;
	v.liabilities(1, 0) = 5.0;
	v.external_liab = Vector::Zero(2);
	v.external_liab[1] = 5.0;
	v.external_assets = Vector(2);
	v.external_assets << 6.0, 1.0;
	const std::vector<double> b{beta, 0.0};
	const std::vector<CocoTerms> terms(2, {1.0, 1.0});
	return cocoize(v, b, b, terms, 0.0);
}

} // namespace

int main(int argc, char **argv) {
	CLI::App app{"Clearing engine for interbank networks with fractional CoCo debt"};
	app.require_subcommand(1);
	Globals g;
	app.add_option("--tol", g.tol, "residual tolerance relative to the largest face value")
	    ->check(CLI::PositiveNumber);
	app.add_option("--max-iter", g.max_iter, "iteration cap for clearing");
	app.add_option("--seed", g.seed, "random seed");
	app.add_option("--config", g.config, "key = value config file")->check(CLI::ExistingFile);
	app.add_option("--jobs", g.jobs, "worker threads for sweeps (0 = all cores)");

	std::function<int()> action;

	// value-curve
	auto *vc = app.add_subcommand("value-curve", "sample single-bank values on an asset grid");
	double vc_p0 = 10, vc_pc = 4, vc_tau = 0.1, vc_q = 0.5, vc_alpha = 0.5, vc_lo = 0, vc_hi = 20;
	int vc_points = 201;
	std::string vc_out;
	vc->add_option("--vanilla-face", vc_p0)->capture_default_str();
	vc->add_option("--coco-face", vc_pc)->capture_default_str();
	vc->add_option("--trigger", vc_tau)->capture_default_str();
	vc->add_option("--conversion", vc_q)->capture_default_str();
	vc->add_option("--recovery", vc_alpha)->capture_default_str();
	vc->add_option("--from", vc_lo)->capture_default_str();
	vc->add_option("--to", vc_hi)->capture_default_str();
	vc->add_option("--points", vc_points)->capture_default_str();
	vc->add_option("-o,--out", vc_out, "CSV file (default stdout)");
	vc->callback([&] {
		action = [&] {
			BankSheet s{vc_p0, vc_pc, {vc_tau, vc_q}, vc_alpha};
			validate(s);
			Output out(vc_out);
			*out << "a,E,D,lambda,c,vanilla,coco,original_equity\n";
			for (double a : linear_grid(vc_lo, vc_hi, vc_points)) {
				const auto t = tranche_values(s, a);
				*out << a << ',' << equity(s, a) << ',' << debt_value(s, a) << ','
				     << conversion_fraction(s, a) << ',' << coco_equity_fraction(s, a) << ','
				     << t.vanilla << ',' << t.coco << ',' << t.original_equity << '\n';
			}
			return exit_ok;
		};
	});

	// clear
	auto *cl = app.add_subcommand("clear", "clear one CoCo-ized network");
	std::string cl_edges, cl_nodes, cl_json, cl_csv;
	bool cl_min = false;
	ScenarioFlags cl_flags;
	cl->add_option("--edges", cl_edges, "edge list CSV")->required()->check(CLI::ExistingFile);
	cl->add_option("--nodes", cl_nodes, "node table CSV")->required()->check(CLI::ExistingFile);
	cl->add_flag("--min", cl_min, "compute the minimal instead of the maximal solution");
	cl->add_option("--json", cl_json, "result JSON (default stdout)");
	cl->add_option("--csv", cl_csv, "one-row CSV of the risk measures");
	cl_flags.attach(cl);
	cl->callback([&] {
		action = [&] {
			const Settings s = resolve(g, &cl_flags);
			validate(s.run.scenario);
			VanillaNetwork v = read_vanilla(cl_edges, cl_nodes);
			if (s.run.scenario.interbank_fraction > 0.0)
				v = interbank_shift(v, s.run.scenario.interbank_fraction);
			const Network net = apply_shock(cocoize(v, s.run.scenario), s.run.scenario.shock);
			const ClearingResult r = cl_min ? clear_min(net, s.clearing) : clear_max(net, s.clearing);
			const RiskMeasures m = risk_measures(net, r);
			{
				Output out(cl_json);
				*out << result_json(net, r, m) << '\n';
			}
			if (!cl_csv.empty()) {
				Output out(cl_csv);
				*out << "external_repayment_fraction,original_shareholder_value,default_count\n"
				     << csv_optional(m.external_repayment_fraction) << ','
				     << m.original_shareholder_value << ',' << m.default_count << '\n';
			}
			return exit_ok;
		};
	});

	// calibrate
	auto *ca = app.add_subcommand("calibrate", "build a vanilla network from bank aggregates");
	std::string ca_eba, ca_edges = "edges.csv", ca_nodes = "nodes.csv", ca_method = "gibbs";
	std::optional<std::string> ca_burn, ca_thin, ca_density, ca_rate, ca_exclude;
	double ca_eps = 1e-3;
	ca->add_option("--eba", ca_eba, "CSV: bank_id,total_assets,capital,interbank_liabilities")
	    ->required()
	    ->check(CLI::ExistingFile);
	ca->add_option("--edges-out", ca_edges)->capture_default_str();
	ca->add_option("--nodes-out", ca_nodes)->capture_default_str();
	ca->add_option("--method", ca_method, "gibbs or ipfp")
	    ->check(CLI::IsMember({"gibbs", "ipfp"}))
	    ->capture_default_str();
	ca->add_option("--burn-in", ca_burn, "sampler moves before the realization is taken");
	ca->add_option("--thinning", ca_thin);
	ca->add_option("--density", ca_density, "edge probability");
	ca->add_option("--rate", ca_rate, "exponential weight rate (default p n (n-1) / total)");
	ca->add_option("--exclude", ca_exclude, "comma-separated bank ids to drop");
	ca->add_option("--balance-tol", ca_eps, "largest relative imbalance accepted")
	    ->capture_default_str();
	ca->callback([&] {
		action = [&] {
			KeyValues kv = g.config.empty() ? KeyValues{} : read_key_values(g.config);
			const std::pair<const char *, std::optional<std::string> *> flags[] = {
			    {"burn_in", &ca_burn}, {"thinning", &ca_thin}, {"density_p", &ca_density},
			    {"weight_rate", &ca_rate}, {"exclude", &ca_exclude}};
			for (const auto &[key, value] : flags)
				if (*value)
					kv[key] = **value;
			RunConfig cfg = apply_config(kv);
			if (g.seed)
				cfg.sampler.seed = *g.seed;
			const auto records = exclude_banks(read_eba_csv(ca_eba), cfg.exclusions);
			const auto balanced = perturb_to_balance(marginals_from_eba(records), ca_eps);
			const Matrix l = ca_method == "ipfp" ? ipfp_matrix(balanced.marginals)
			                                     : sample_matrix(balanced.marginals, cfg.sampler);
			write_vanilla(build_network(balanced.marginals, l), ca_edges, ca_nodes);
			const auto t = system_totals(records, balanced.marginals);
			std::cout << std::setprecision(6) << "banks," << records.size() << '\n'
			          << "external_assets," << t.external_assets << '\n'
			          << "external_liabilities," << t.external_liab << '\n'
			          << "interbank," << t.interbank << '\n'
			          << "capital," << t.capital << '\n'
			          << "edges," << (l.array() > 0.0).count() << '\n';
			return exit_ok;
		};
	});

	// symmetric and critical-eps share the system parameters
	SymmetricParams sp;
	sp.n = 5;
	sp.y = 14;
	sp.z = 10;
	sp.terms = {0.1, 0.5};
	sp.recovery = 0.5;
	const auto add_params = [&sp](CLI::App *sub) {
		sub->add_option("--n", sp.n, "number of banks")->capture_default_str();
		sub->add_option("--y", sp.y, "external debt per bank")->capture_default_str();
		sub->add_option("--z", sp.z, "interbank debt per bank")->capture_default_str();
		sub->add_option("--pie", sp.pie, "share of equity held by other banks")
		    ->capture_default_str();
		sub->add_option("--trigger", sp.terms.trigger)->capture_default_str();
		sub->add_option("--conversion", sp.terms.conversion_factor)->capture_default_str();
		sub->add_option("--recovery", sp.recovery)->capture_default_str();
	};

	auto *sy = app.add_subcommand("symmetric", "closed-form clearing of a symmetric system");
	add_params(sy);
	double sy_lo = 0, sy_hi = 30;
	int sy_points = 301;
	std::string sy_out;
	sy->add_option("--beta", sp.beta)->capture_default_str();
	sy->add_option("--beta0", sp.beta0)->capture_default_str();
	sy->add_option("--x-from", sy_lo)->capture_default_str();
	sy->add_option("--x-to", sy_hi)->capture_default_str();
	sy->add_option("--points", sy_points)->capture_default_str();
	sy->add_option("-o,--out", sy_out, "CSV file (default stdout)");
	sy->callback([&] {
		action = [&] {
			validate(sp);
			Output out(sy_out);
			*out << "x,a_plus,a_minus,regime\n";
			for (double x : linear_grid(sy_lo, sy_hi, sy_points)) {
				const double hi = symmetric_clear(sp, x);
				*out << x << ',' << hi << ',' << symmetric_clear_min(sp, x) << ','
				     << symmetric_regime(sp, hi) << '\n';
			}
			return exit_ok;
		};
	});

	auto *ce = app.add_subcommand("critical-eps", "stress thresholds over a (beta, beta0) grid");
	add_params(ce);
	double ce_x = 17;
	int ce_d = 1, ce_points = 11;
	std::string ce_out;
	ce->add_option("--x", ce_x, "external assets per bank")->capture_default_str();
	ce->add_option("--d", ce_d, "number of stressed banks")->capture_default_str();
	ce->add_option("--points", ce_points, "grid points per axis on [0,1]")->capture_default_str();
	ce->add_option("-o,--out", ce_out, "CSV file (default stdout)");
	ce->callback([&] {
		action = [&] {
			const auto grid = linear_grid(0.0, 1.0, ce_points);
			std::vector<std::string> lines(grid.size() * grid.size());
			std::vector<char> failed(lines.size(), 0);
			parallel_for(lines.size(), g.jobs, [&](std::size_t k) {
				SymmetricParams p = sp;
				p.beta = grid[k / grid.size()];
				p.beta0 = grid[k % grid.size()];
				std::ostringstream line;
				line << std::setprecision(12) << p.beta << ',' << p.beta0 << ',';
				try {
					const auto e = critical_epsilons(p, ce_x, ce_d);
					line << csv_optional(e.eps1) << ',' << csv_optional(e.eps2) << ',';
				} catch (const Error &err) {
					line << ",," << err.what();
					failed[k] = 1;
				}
				lines[k] = line.str();
			});
			Output out(ce_out);
			*out << "beta,beta0,eps1,eps2,error\n";
			for (const auto &l : lines)
				*out << l << '\n';
			return std::count(failed.begin(), failed.end(), 1) ? exit_partial : exit_ok;
		};
	});

	// studies
	std::string st_edges, st_nodes, st_out;
	int st_points = 51;
	std::string st_triggers = "0.01,0.03,0.05,0.1,0.2";
	double st_beta_max = 0.2, st_shock_max = 0.10;
	const auto add_network = [&](CLI::App *sub) {
		sub->add_option("--edges", st_edges, "edge list CSV")->required()->check(CLI::ExistingFile);
		sub->add_option("--nodes", st_nodes, "node table CSV")->required()->check(CLI::ExistingFile);
		sub->add_option("--points", st_points, "grid resolution")->capture_default_str();
		sub->add_option("-o,--out", st_out, "CSV file (default stdout)");
	};
	const auto study_settings = [&](const Settings &s) {
		StudySettings out;
		out.recovery = s.run.scenario.recovery;
		out.conversion = s.run.scenario.conversion;
		out.clearing = s.clearing;
		out.jobs = g.jobs;
		return out;
	};
	const auto finish = [](const StudyTable &t, const std::string &path) {
		Output out(path);
		t.write_csv(*out);
		return t.has_errors() ? exit_partial : exit_ok;
	};
	auto *s1 = app.add_subcommand("study1", "risk measures over CoCo fraction and trigger");
	add_network(s1);
	double s1_shock = 0.03;
	s1->add_option("--triggers", st_triggers, "comma-separated trigger levels")
	    ->capture_default_str();
	s1->add_option("--beta-max", st_beta_max)->capture_default_str();
	s1->add_option("--shock", s1_shock)->capture_default_str();
	s1->callback([&] {
		action = [&] {
			const Settings s = resolve(g, nullptr);
			const VanillaNetwork v = read_vanilla(st_edges, st_nodes);
			return finish(run_study1(v, linear_grid(0.0, st_beta_max, st_points),
			                         parse_list(st_triggers, "trigger"), s1_shock,
			                         study_settings(s)),
			              st_out);
		};
	});

	auto *s2 = app.add_subcommand("study2", "risk measures over the shock size");
	add_network(s2);
	double s2_trigger = 0.03;
	s2->add_option("--shock-max", st_shock_max)->capture_default_str();
	s2->add_option("--trigger", s2_trigger)->capture_default_str();
	s2->callback([&] {
		action = [&] {
			const Settings s = resolve(g, nullptr);
			const VanillaNetwork v = read_vanilla(st_edges, st_nodes);
			return finish(run_study2(v, linear_grid(0.0, st_shock_max, st_points), s2_trigger,
			                         study_settings(s)),
			              st_out);
		};
	});

	auto *s3 = app.add_subcommand("study3", "risk measures over the interbank fraction");
	add_network(s3);
	double s3_trigger = 0.03, s3_shock = 0.05;
	s3->add_option("--trigger", s3_trigger)->capture_default_str();
	s3->add_option("--shock", s3_shock)->capture_default_str();
	s3->callback([&] {
		action = [&] {
			const Settings s = resolve(g, nullptr);
			const VanillaNetwork v = read_vanilla(st_edges, st_nodes);
			return finish(run_study3(v, linear_grid(0.0, 1.0, st_points), s3_trigger, s3_shock,
			                         study_settings(s)),
			              st_out);
		};
	});

	auto *cx = app.add_subcommand("counterexample",
	                              "two-bank network where more CoCo debt can hurt");
	int cx_points = 200;
	std::string cx_out;
	cx->add_option("--points", cx_points)->capture_default_str();
	cx->add_option("-o,--out", cx_out, "CSV file (default stdout)");
	cx->callback([&] {
		action = [&] {
			const Settings s = resolve(g, nullptr);
			const double first = (9.0 - std::sqrt(41.0)) / 20.0;
			Output out(cx_out);
			*out << "beta,A1,A2,defaults,branch,formula_A1,formula_A2\n";
			for (double b : linear_grid(0.0, 1.0, cx_points)) {
				const ClearingResult r = clear_max(counterexample_network(b), s.clearing);
				std::string set;
				for (int i = 0; i < 2; ++i)
					if (r.defaults[i])
						set += (set.empty() ? "" : " ") + std::to_string(i + 1);
				int branch;
				std::string f1, f2;
				std::ostringstream a2;
				a2 << std::setprecision(12);
				if (b <= first) {
					branch = 1, f1 = "11", a2 << 10 * b * b - 9 * b + 11;
				} else if (b < 0.4) {
					branch = 2, f1 = "6", a2 << 1;
				} else if (b < 0.7) {
					branch = 3, f1 = "6", a2 << 10 * b * b - 14 * b + 11;
				} else {
					branch = 4;
				}
				f2 = a2.str();
				*out << b << ',' << r.assets[0] << ',' << r.assets[1] << ",{" << set << "},"
				     << branch << ',' << f1 << ',' << f2 << '\n';
			}
			return exit_ok;
		};
	});

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		const int code = app.exit(e);
		return code == 0 ? exit_ok : exit_invalid;
	}
	try {
		return action();
	} catch (const InvalidInput &e) {
		std::cerr << "invalid input: " << e.what() << '\n';
		return exit_invalid;
	} catch (const NegativeBalance &e) {
		std::cerr << "invalid input: " << e.what() << '\n';
		return exit_invalid;
	} catch (const NegativeAssets &e) {
		std::cerr << "invalid input: " << e.what() << '\n';
		return exit_invalid;
	} catch (const ImbalanceTooLarge &e) {
		std::cerr << "invalid input: " << e.what() << '\n';
		return exit_invalid;
	} catch (const PreconditionViolated &e) {
		std::cerr << "invalid input: " << e.what() << '\n';
		return exit_invalid;
	} catch (const Error &e) {
		std::cerr << "error: " << e.what() << '\n';
		return exit_partial;
	}
}
