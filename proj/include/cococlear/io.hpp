#ifndef COCOCLEAR_IO_HPP
#define COCOCLEAR_IO_HPP

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cococlear/calibration.hpp"
#include "cococlear/clearing.hpp"

namespace cococlear {

/**
 * Reads a vanilla network from an edge list (`debtor,creditor,amount`, banks
 * numbered from 1, creditor 0 is society) and a node table
 * (`bank,external_assets[,external_liab]`). External liabilities from both
 * sources are added. Repeated edges accumulate.
 */
VanillaNetwork read_vanilla(const std::string &edges_path, const std::string &nodes_path);

void write_vanilla(const VanillaNetwork &net, const std::string &edges_path,
                   const std::string &nodes_path);

/// CSV with header bank_id,total_assets,capital,interbank_liabilities.
std::vector<EbaRecord> read_eba_csv(const std::string &path);

using KeyValues = std::map<std::string, std::string>;

/// `key = value` lines; '#' starts a comment. Duplicate keys are rejected.
KeyValues parse_key_values(std::istream &in);
KeyValues read_key_values(const std::string &path);

/// Everything a config file may set.
struct RunConfig {
	Scenario scenario;
	std::optional<double> tol;
	std::optional<std::size_t> max_iter;
	SamplerConfig sampler;
	std::vector<std::string> exclusions = default_exclusions();
};

/// Applies the keys to `base`; throws InvalidInput on unknown keys or bad
/// values. Scheme constraints are checked by the caller after overrides.
RunConfig apply_config(const KeyValues &kv, RunConfig base = {});

double parse_double(const std::string &text, const std::string &what);
long long parse_integer(const std::string &text, const std::string &what);

/// JSON document of a clearing result and its risk measures.
std::string result_json(const Network &net, const ClearingResult &result,
                        const RiskMeasures &measures);

} // namespace cococlear

#endif
