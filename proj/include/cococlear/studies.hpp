#ifndef COCOCLEAR_STUDIES_HPP
#define COCOCLEAR_STUDIES_HPP

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cococlear/clearing.hpp"

// Parameter sweeps over a calibrated vanilla network. Every cell is an
// independent clearing problem; a failing cell becomes an error row.

namespace cococlear {

/// Settings shared by every sweep cell.
struct StudySettings {
	double recovery = 0.5;
	double conversion = 1.0;
	ClearingOptions clearing;
	/// Worker threads; 0 means hardware concurrency.
	unsigned jobs = 1;
};

struct StudyRow {
	/// Values of the swept parameters, in the order of `StudyTable::axes`.
	std::vector<double> axis_values;
	Scheme scheme = Scheme::none;
	double beta = 0.0;
	double beta0 = 0.0;
	RiskMeasures measures;
	std::size_t iterations = 0;
	/// Non-empty when the cell failed.
	std::string error;
};

struct StudyTable {
	std::vector<std::string> axes;
	std::vector<StudyRow> rows;

	bool has_errors() const;
	void write_csv(std::ostream &out) const;
};

/// Runs `count` independent tasks on a pool and returns results in index
/// order.
void parallel_for(std::size_t count, unsigned jobs,
                  const std::function<void(std::size_t)> &task);

/// One cell: shift, CoCo-ize, shock, clear and measure.
StudyRow evaluate_cell(const VanillaNetwork &vanilla, const Scenario &scenario,
                       const StudySettings &settings);

/// Shock fixed at `shock`; (beta, trigger) grid for the full and interbank
/// schemes. beta = 0 cells are the vanilla baseline.
StudyTable run_study1(const VanillaNetwork &vanilla, const std::vector<double> &betas,
                      const std::vector<double> &triggers, double shock,
                      const StudySettings &settings);

/// Shock grid for none, full, external and interbank schemes at level 1.
StudyTable run_study2(const VanillaNetwork &vanilla, const std::vector<double> &shocks,
                      double trigger, const StudySettings &settings);

/// Interbank-fraction grid for the same four schemes at a fixed shock.
StudyTable run_study3(const VanillaNetwork &vanilla, const std::vector<double> &gammas,
                      double trigger, double shock, const StudySettings &settings);

/// Evenly spaced grid including both ends; throws unless count >= 1 and
/// lo <= hi (a single point when count is 1).
std::vector<double> linear_grid(double lo, double hi, int count);

/// Throws InvalidInput unless the grid is nonempty and strictly increasing.
void validate_grid(const std::vector<double> &grid, const std::string &name);

} // namespace cococlear

#endif
