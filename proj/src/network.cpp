#include "cococlear/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "cococlear/error.hpp"

namespace cococlear {

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

void require(bool ok, const std::string &msg) {
	if (!ok)
		throw InvalidInput(msg);
}

// Row i of a claim matrix: shares of `parts` (society first) normalized by
// their total; an empty row goes entirely to society.
void fill_claims(Matrix &pi, int row, double society, const Vector &banks,
                 double total) {
	pi.row(row).setZero();
	if (total <= 0.0) {
		pi(row, 0) = 1.0;
		return;
	}
	pi(row, 0) = society / total;
	pi.row(row).tail(banks.size()) = banks.transpose() / total;
}

} // namespace

Vector Network::vanilla_faces() const {
	Vector v(size());
	for (int i = 0; i < size(); ++i)
		v[i] = sheets[i].vanilla_face;
	return v;
}

Vector Network::coco_faces() const {
	Vector v(size());
	for (int i = 0; i < size(); ++i)
		v[i] = sheets[i].coco_face;
	return v;
}

Vector Network::default_thresholds() const { return vanilla_faces(); }

Vector Network::conversion_ends() const {
	Vector v(size());
	for (int i = 0; i < size(); ++i)
		v[i] = breakpoints(sheets[i]).a3;
	return v;
}

std::string to_string(Scheme scheme) {
	switch (scheme) {
	case Scheme::none: return "none";
	case Scheme::full: return "full";
	case Scheme::interbank: return "interbank";
	case Scheme::external: return "external";
	}
	return "?";
}

Scheme parse_scheme(const std::string &name) {
	for (auto s : {Scheme::none, Scheme::full, Scheme::interbank,
	               Scheme::external})
		if (to_string(s) == name)
			return s;
	throw InvalidInput("unknown CoCo-ization scheme '" + name + "'");
}

Scenario make_scenario(Scheme scheme, double level, double trigger,
                       double conversion, double recovery, double shock) {
	Scenario s;
	s.scheme = scheme;
	s.trigger = trigger;
	s.conversion = conversion;
	s.recovery = recovery;
	s.shock = shock;
	switch (scheme) {
	case Scheme::none: break;
	case Scheme::full: s.beta = s.beta0 = level; break;
	case Scheme::interbank: s.beta = level; break;
	case Scheme::external: s.beta0 = level; break;
	}
	return s;
}

void validate(const Scenario &s) {
	require(in_unit(s.beta) && in_unit(s.beta0), "beta and beta0 must lie in [0,1]");
	require(s.trigger > 0.0 && std::isfinite(s.trigger), "trigger must be positive");
	require(in_unit(s.conversion), "conversion factor must lie in [0,1]");
	require(in_unit(s.recovery), "recovery must lie in [0,1]");
	require(in_unit(s.shock), "shock must lie in [0,1]");
	require(in_unit(s.interbank_fraction), "interbank_fraction must lie in [0,1]");
	switch (s.scheme) {
	case Scheme::none:
		require(s.beta == 0.0 && s.beta0 == 0.0,
		        "scheme 'none' requires beta = beta0 = 0");
		break;
	case Scheme::full:
		require(s.beta == s.beta0, "scheme 'full' requires beta = beta0");
		break;
	case Scheme::interbank:
		require(s.beta0 == 0.0, "scheme 'interbank' requires beta0 = 0");
		break;
	case Scheme::external:
		require(s.beta == 0.0, "scheme 'external' requires beta = 0");
		break;
	}
}

void validate(const VanillaNetwork &net) {
	const int n = net.size();
	require(n >= 1, "network has no banks");
	require(net.liabilities.rows() == n && net.liabilities.cols() == n,
	        "liability matrix must be n x n");
	require(net.external_liab.size() == n, "external liabilities must have n entries");
	require(net.liabilities.allFinite() && net.external_liab.allFinite() &&
	            net.external_assets.allFinite(),
	        "network contains non-finite values");
	require((net.liabilities.array() >= 0.0).all(), "liabilities must be nonnegative");
	require((net.external_liab.array() >= 0.0).all(),
	        "external liabilities must be nonnegative");
	require((net.external_assets.array() >= 0.0).all(),
	        "external assets must be nonnegative");
	for (int i = 0; i < n; ++i)
		require(net.liabilities(i, i) == 0.0, "liability matrix must have zero diagonal");
}

double equity_spectral_radius(const Network &net) {
	const Matrix block = net.equity_block();
	if (block.isZero(0.0))
		return 0.0;
	Eigen::EigenSolver<Matrix> solver(block, false);
	return solver.eigenvalues().cwiseAbs().maxCoeff();
}

void validate(const Network &net, double tol) {
	const int n = net.size();
	require(n >= 1, "network has no banks");
	require(net.external_assets.size() == n, "external assets must have n entries");
	require(net.external_assets.allFinite() &&
	            (net.external_assets.array() >= 0.0).all(),
	        "external assets must be finite and nonnegative");
	require(in_unit(net.recovery), "recovery must lie in [0,1]");
	for (const auto &sheet : net.sheets) {
		validate(sheet, TermsCheck::strict, net.pure_equity_nodes);
		require(sheet.recovery == net.recovery,
		        "bank recovery must match the network recovery rate");
	}
	const auto check_claims = [&](const Matrix &pi, const char *name) {
		std::ostringstream prefix;
		prefix << name << ": ";
		require(pi.rows() == n && pi.cols() == n + 1,
		        prefix.str() + "claim matrix must be n x (n+1)");
		require(pi.allFinite() && (pi.array() >= 0.0).all() &&
		            (pi.array() <= 1.0).all(),
		        prefix.str() + "entries must lie in [0,1]");
		for (int i = 0; i < n; ++i) {
			require(std::abs(pi.row(i).sum() - 1.0) <= tol,
			        prefix.str() + "rows must sum to 1");
			require(pi(i, i + 1) == 0.0, prefix.str() + "diagonal must be zero");
		}
	};
	check_claims(net.pi0, "vanilla");
	check_claims(net.pic, "coco");
	check_claims(net.pie, "equity");
	require((net.equity_block().array() < 1.0).all(),
	        "bank-to-bank equity shares must be below 1");
	require(equity_spectral_radius(net) < 1.0,
	        "equity cross-holdings must have spectral radius below 1");
}

Network cocoize(const VanillaNetwork &vanilla, std::span<const double> beta,
                std::span<const double> beta0, std::span<const CocoTerms> terms,
                double recovery, const CocoizeOptions &options) {
	validate(vanilla);
	const int n = vanilla.size();
	require(static_cast<int>(beta.size()) == n && static_cast<int>(beta0.size()) == n &&
	            static_cast<int>(terms.size()) == n,
	        "per-bank parameter vectors must have n entries");

	Network net;
	net.external_assets = vanilla.external_assets;
	net.recovery = recovery;
	net.pure_equity_nodes = options.pure_equity_nodes;
	net.sheets.resize(n);
	net.pi0 = Matrix::Zero(n, n + 1);
	net.pic = Matrix::Zero(n, n + 1);
	net.pie = Matrix::Zero(n, n + 1);

	for (int i = 0; i < n; ++i) {
		require(in_unit(beta[i]) && in_unit(beta0[i]), "beta must lie in [0,1]");
		const Vector interbank = vanilla.liabilities.row(i).transpose();
		const double ext = vanilla.external_liab[i];
		const Vector vanilla_ib = (1.0 - beta[i]) * interbank;
		const Vector coco_ib = beta[i] * interbank;
		const double vanilla_ext = (1.0 - beta0[i]) * ext;
		const double coco_ext = beta0[i] * ext;

		BankSheet &sheet = net.sheets[i];
		sheet.vanilla_face = vanilla_ext + vanilla_ib.sum();
		sheet.coco_face = coco_ext + coco_ib.sum();
		sheet.terms = terms[i];
		sheet.recovery = recovery;
		if (!(sheet.total_face() > 0.0) && !options.pure_equity_nodes) {
			std::ostringstream msg;
			msg << "bank " << i + 1 << " has no liabilities";
			throw InvalidInput(msg.str());
		}
		fill_claims(net.pi0, i, vanilla_ext, vanilla_ib, sheet.vanilla_face);
		fill_claims(net.pic, i, coco_ext, coco_ib, sheet.coco_face);
	}

	if (options.equity_holdings) {
		const Matrix &held = *options.equity_holdings;
		require(held.rows() == n && held.cols() == n,
		        "equity holdings must be n x n");
		net.pie.rightCols(n) = held;
		for (int i = 0; i < n; ++i)
			net.pie(i, 0) = 1.0 - held.row(i).sum();
	} else {
		net.pie.col(0).setOnes();
	}
	validate(net);
	return net;
}

Network cocoize(const VanillaNetwork &vanilla, const Scenario &scenario,
                const CocoizeOptions &options) {
	validate(scenario);
	const auto n = static_cast<std::size_t>(vanilla.size());
	const std::vector<double> beta(n, scenario.beta);
	const std::vector<double> beta0(n, scenario.beta0);
	const std::vector<CocoTerms> terms(n, {scenario.trigger, scenario.conversion});
	return cocoize(vanilla, beta, beta0, terms, scenario.recovery, options);
}

Network apply_shock(Network net, double xi) {
	require(in_unit(xi), "shock must lie in [0,1]");
	net.external_assets *= 1.0 - xi;
	return net;
}

VanillaNetwork apply_shock(VanillaNetwork net, double xi) {
	require(in_unit(xi), "shock must lie in [0,1]");
	net.external_assets *= 1.0 - xi;
	return net;
}

Network stress_subset(Network net, std::span<const int> banks, double eps) {
	require(eps >= 0.0, "stress must be nonnegative");
	for (int b : banks) {
		require(b >= 0 && b < net.size(), "stressed bank index out of range");
		if (eps > net.external_assets[b]) {
			std::ostringstream msg;
			msg << "stress " << eps << " exceeds external assets of bank " << b + 1;
			throw NegativeAssets(msg.str());
		}
	}
	for (int b : banks)
		net.external_assets[b] -= eps;
	return net;
}

Vector capital(const VanillaNetwork &net) {
	return net.external_assets + net.liabilities.colwise().sum().transpose() -
	       net.liabilities.rowwise().sum() - net.external_liab;
}

VanillaNetwork interbank_shift(const VanillaNetwork &net, double gamma) {
	validate(net);
	require(in_unit(gamma), "interbank fraction must lie in [0,1]");
	const double interbank_total = net.liabilities.sum();
	require(interbank_total > 0.0, "interbank shift needs existing interbank debt");
	const double external_total = net.external_liab.sum();
	const double scale = (interbank_total + external_total * gamma) / interbank_total;

	const Vector cap = capital(net);
	VanillaNetwork out;
	out.liabilities = scale * net.liabilities;
	out.external_liab = (1.0 - gamma) * net.external_liab;
	out.external_assets = cap - out.liabilities.colwise().sum().transpose() +
	                      out.liabilities.rowwise().sum() + out.external_liab;
	for (int i = 0; i < out.size(); ++i) {
		// Rounding can leave a tiny negative where the exact value is zero.
		if (out.external_assets[i] < 0.0 &&
		    out.external_assets[i] > -1e-12 * (interbank_total + external_total))
			out.external_assets[i] = 0.0;
		if (out.external_assets[i] < 0.0) {
			std::ostringstream msg;
			msg << "interbank shift leaves bank " << i + 1
			    << " with negative external assets";
			throw NegativeAssets(msg.str());
		}
	}
	return out;
}

Vector lattice_top(const Network &net) {
	const int n = net.size();
	const Vector p0 = net.vanilla_faces();
	const Vector pc = net.coco_faces();
	const Matrix e_t = net.equity_block().transpose();
	const Vector rhs = net.external_assets +
	                   net.vanilla_block().transpose() * p0 +
	                   net.coco_block().transpose() * pc - e_t * (p0 + pc);
	const Vector floor = rhs.cwiseMax(net.conversion_ends());
	if (e_t.isZero(0.0))
		return floor;
	const Matrix leontief = Matrix::Identity(n, n) - e_t;
	Eigen::FullPivLU<Matrix> lu(leontief);
	if (!lu.isInvertible() || lu.rcond() < 1e-12)
		throw SingularLeontief("I - Pi_e^T is singular");
	return lu.solve(floor);
}

} // namespace cococlear
