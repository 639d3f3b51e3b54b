#include "cococlear/studies.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iomanip>
#include <ostream>
#include <thread>

#include "cococlear/error.hpp"

namespace cococlear {

bool StudyTable::has_errors() const {
	return std::any_of(rows.begin(), rows.end(),
	                   [](const StudyRow &r) { return !r.error.empty(); });
}

void StudyTable::write_csv(std::ostream &out) const {
	const auto flags = out.flags();
	const auto precision = out.precision();
	out << std::setprecision(12);
	for (const auto &axis : axes)
		out << axis << ',';
	out << "scheme,beta,beta0,external_repayment_fraction,original_shareholder_value,"
	       "default_count,iterations,error\n";
	for (const auto &r : rows) {
		for (double v : r.axis_values)
			out << v << ',';
		out << to_string(r.scheme) << ',' << r.beta << ',' << r.beta0 << ',';
		if (r.error.empty()) {
			if (r.measures.external_repayment_fraction)
				out << *r.measures.external_repayment_fraction;
			out << ',' << r.measures.original_shareholder_value << ','
			    << r.measures.default_count << ',' << r.iterations << ',';
		} else {
			std::string msg = r.error;
			std::replace(msg.begin(), msg.end(), ',', ';');
			std::replace(msg.begin(), msg.end(), '\n', ' ');
			out << ",,,," << msg;
		}
		out << '\n';
	}
	out.flags(flags);
	out.precision(precision);
}

void parallel_for(std::size_t count, unsigned jobs,
                  const std::function<void(std::size_t)> &task) {
	if (jobs == 0)
		jobs = std::max(1u, std::thread::hardware_concurrency());
	jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(count, 1)));
	if (jobs <= 1) {
		for (std::size_t i = 0; i < count; ++i)
			task(i);
		return;
	}
	std::atomic<std::size_t> next{0};
	std::exception_ptr failure;
	std::atomic<bool> failed{false};
	std::vector<std::thread> pool;
	pool.reserve(jobs);
	for (unsigned w = 0; w < jobs; ++w)
		pool.emplace_back([&] {
			for (std::size_t i; !failed && (i = next++) < count;) {
				try {
					task(i);
				} catch (...) {
					if (!failed.exchange(true))
						failure = std::current_exception();
				}
			}
		});
	for (auto &t : pool)
		t.join();
	if (failure)
		std::rethrow_exception(failure);
}

StudyRow evaluate_cell(const VanillaNetwork &vanilla, const Scenario &scenario,
                       const StudySettings &settings) {
	StudyRow row;
	row.scheme = scenario.scheme;
	row.beta = scenario.beta;
	row.beta0 = scenario.beta0;
	try {
		validate(scenario);
		VanillaNetwork base = scenario.interbank_fraction > 0.0
		                          ? interbank_shift(vanilla, scenario.interbank_fraction)
		                          : vanilla;
		const Network net = apply_shock(cocoize(base, scenario), scenario.shock);
		const ClearingResult result = clear_max(net, settings.clearing);
		row.measures = risk_measures(net, result);
		row.iterations = result.iterations;
	} catch (const Error &e) {
		row.error = e.what();
	}
	return row;
}

namespace {

struct Cell {
	std::vector<double> axis_values;
	Scenario scenario;
};

StudyTable run_cells(const VanillaNetwork &vanilla, std::vector<std::string> axes,
                     const std::vector<Cell> &cells, const StudySettings &settings) {
	validate(vanilla);
	StudyTable table;
	table.axes = std::move(axes);
	table.rows.resize(cells.size());
	parallel_for(cells.size(), settings.jobs, [&](std::size_t i) {
		table.rows[i] = evaluate_cell(vanilla, cells[i].scenario, settings);
		table.rows[i].axis_values = cells[i].axis_values;
	});
	return table;
}

constexpr Scheme four_schemes[] = {Scheme::none, Scheme::full, Scheme::external,
                                   Scheme::interbank};

} // namespace

StudyTable run_study1(const VanillaNetwork &vanilla, const std::vector<double> &betas,
                      const std::vector<double> &triggers, double shock,
                      const StudySettings &settings) {
	validate_grid(betas, "beta");
	validate_grid(triggers, "trigger");
	std::vector<Cell> cells;
	for (double tau : triggers)
		for (double beta : betas)
			for (Scheme scheme : {Scheme::full, Scheme::interbank})
				cells.push_back({{beta, tau},
				                 make_scenario(scheme, beta, tau, settings.conversion,
				                               settings.recovery, shock)});
	return run_cells(vanilla, {"beta", "trigger"}, cells, settings);
}

StudyTable run_study2(const VanillaNetwork &vanilla, const std::vector<double> &shocks,
                      double trigger, const StudySettings &settings) {
	validate_grid(shocks, "shock");
	std::vector<Cell> cells;
	for (double xi : shocks)
		for (Scheme scheme : four_schemes)
			cells.push_back({{xi}, make_scenario(scheme, scheme == Scheme::none ? 0.0 : 1.0,
			                                     trigger, settings.conversion,
			                                     settings.recovery, xi)});
	return run_cells(vanilla, {"shock"}, cells, settings);
}

StudyTable run_study3(const VanillaNetwork &vanilla, const std::vector<double> &gammas,
                      double trigger, double shock, const StudySettings &settings) {
	validate_grid(gammas, "gamma");
	std::vector<Cell> cells;
	for (double gamma : gammas)
		for (Scheme scheme : four_schemes) {
			Scenario s = make_scenario(scheme, scheme == Scheme::none ? 0.0 : 1.0, trigger,
			                           settings.conversion, settings.recovery, shock);
			s.interbank_fraction = gamma;
			cells.push_back({{gamma}, s});
		}
	return run_cells(vanilla, {"gamma"}, cells, settings);
}

std::vector<double> linear_grid(double lo, double hi, int count) {
	if (count < 1 || !(lo <= hi))
		throw InvalidInput("bad grid specification");
	if (count == 1)
		return {lo};
	std::vector<double> g(static_cast<std::size_t>(count));
	for (int k = 0; k < count; ++k)
		g[k] = k == count - 1 ? hi : lo + (hi - lo) * k / (count - 1);
	return g;
}

void validate_grid(const std::vector<double> &grid, const std::string &name) {
	if (grid.empty())
		throw InvalidInput(name + " grid is empty");
	for (std::size_t k = 1; k < grid.size(); ++k)
		if (!(grid[k] > grid[k - 1]))
			throw InvalidInput(name + " grid must be strictly increasing");
}

} // namespace cococlear
