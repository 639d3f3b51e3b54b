#include "cococlear/io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "cococlear/error.hpp"

namespace cococlear {

namespace {

std::string trim(const std::string &s) {
	const auto first = s.find_first_not_of(" \t\r\n");
	if (first == std::string::npos)
		return {};
	const auto last = s.find_last_not_of(" \t\r\n");
	return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string &line) {
	std::vector<std::string> out;
	std::stringstream ss(line);
	std::string cell;
	while (std::getline(ss, cell, ','))
		out.push_back(trim(cell));
	if (!line.empty() && line.back() == ',')
		out.emplace_back();
	return out;
}

std::ifstream open_in(const std::string &path) {
	std::ifstream in(path);
	if (!in)
		throw InvalidInput("cannot open " + path);
	return in;
}

std::ofstream open_out(const std::string &path) {
	std::ofstream out(path);
	if (!out)
		throw InvalidInput("cannot write " + path);
	out << std::setprecision(17);
	return out;
}

// Rows of a CSV file with a header; blank lines and '#' lines skipped.
struct CsvTable {
	std::vector<std::string> header;
	std::vector<std::vector<std::string>> rows;
	std::vector<int> line_numbers;
};

CsvTable read_csv(const std::string &path) {
	std::ifstream in = open_in(path);
	CsvTable t;
	std::string line;
	int number = 0;
	while (std::getline(in, line)) {
		++number;
		const std::string body = trim(line);
		if (body.empty() || body.front() == '#')
			continue;
		auto cells = split_csv(body);
		if (t.header.empty()) {
			t.header = std::move(cells);
			continue;
		}
		if (cells.size() != t.header.size())
			throw InvalidInput(path + ":" + std::to_string(number) +
			                   ": expected " + std::to_string(t.header.size()) + " fields");
		t.rows.push_back(std::move(cells));
		t.line_numbers.push_back(number);
	}
	if (t.header.empty())
		throw InvalidInput(path + ": missing header");
	return t;
}

void expect_header(const CsvTable &t, const std::vector<std::string> &names,
                   const std::string &path) {
	if (t.header.size() < names.size() ||
	    !std::equal(names.begin(), names.end(), t.header.begin()))
		throw InvalidInput(path + ": unexpected header");
}

} // namespace

double parse_double(const std::string &text, const std::string &what) {
	const std::string s = trim(text);
	errno = 0;
	char *end = nullptr;
	const double v = std::strtod(s.c_str(), &end);
	if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
		throw InvalidInput("bad number for " + what + ": '" + text + "'");
	return v;
}

long long parse_integer(const std::string &text, const std::string &what) {
	const std::string s = trim(text);
	long long v = 0;
	const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
	if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
		throw InvalidInput("bad integer for " + what + ": '" + text + "'");
	return v;
}

VanillaNetwork read_vanilla(const std::string &edges_path, const std::string &nodes_path) {
	const CsvTable nodes = read_csv(nodes_path);
	expect_header(nodes, {"bank", "external_assets"}, nodes_path);
	const bool has_liab = nodes.header.size() >= 3;
	if (has_liab && nodes.header[2] != "external_liab")
		throw InvalidInput(nodes_path + ": third column must be external_liab");
	const int n = static_cast<int>(nodes.rows.size());
	if (n == 0)
		throw InvalidInput(nodes_path + ": no banks");

	VanillaNetwork net;
	net.liabilities = Matrix::Zero(n, n);
	net.external_liab = Vector::Zero(n);
	net.external_assets = Vector::Constant(n, std::nan(""));
	for (std::size_t r = 0; r < nodes.rows.size(); ++r) {
		const auto &row = nodes.rows[r];
		const long long bank = parse_integer(row[0], "bank");
		if (bank < 1 || bank > n)
			throw InvalidInput(nodes_path + ": banks must be numbered 1.." + std::to_string(n));
		if (!std::isnan(net.external_assets[bank - 1]))
			throw InvalidInput(nodes_path + ": bank listed twice");
		net.external_assets[bank - 1] = parse_double(row[1], "external_assets");
		if (has_liab)
			net.external_liab[bank - 1] = parse_double(row[2], "external_liab");
	}

	const CsvTable edges = read_csv(edges_path);
	expect_header(edges, {"debtor", "creditor", "amount"}, edges_path);
	for (std::size_t r = 0; r < edges.rows.size(); ++r) {
		const auto &row = edges.rows[r];
		const long long debtor = parse_integer(row[0], "debtor");
		const long long creditor = parse_integer(row[1], "creditor");
		const double amount = parse_double(row[2], "amount");
		const std::string where = edges_path + ":" + std::to_string(edges.line_numbers[r]);
		if (debtor < 1 || debtor > n || creditor < 0 || creditor > n)
			throw InvalidInput(where + ": bank index out of range");
		if (debtor == creditor)
			throw InvalidInput(where + ": self-loan");
		if (amount < 0.0)
			throw InvalidInput(where + ": negative amount");
		if (creditor == 0)
			net.external_liab[debtor - 1] += amount;
		else
			net.liabilities(debtor - 1, creditor - 1) += amount;
	}
	validate(net);
	return net;
}

void write_vanilla(const VanillaNetwork &net, const std::string &edges_path,
                   const std::string &nodes_path) {
	validate(net);
	std::ofstream edges = open_out(edges_path);
	edges << "debtor,creditor,amount\n";
	for (int i = 0; i < net.size(); ++i)
		for (int j = 0; j < net.size(); ++j)
			if (net.liabilities(i, j) > 0.0)
				edges << i + 1 << ',' << j + 1 << ',' << net.liabilities(i, j) << '\n';
	std::ofstream nodes = open_out(nodes_path);
	nodes << "bank,external_assets,external_liab\n";
	for (int i = 0; i < net.size(); ++i)
		nodes << i + 1 << ',' << net.external_assets[i] << ',' << net.external_liab[i] << '\n';
	if (!edges || !nodes)
		throw InvalidInput("failed writing network files");
}

std::vector<EbaRecord> read_eba_csv(const std::string &path) {
	const CsvTable t = read_csv(path);
	expect_header(t, {"bank_id", "total_assets", "capital", "interbank_liabilities"}, path);
	std::vector<EbaRecord> out;
	out.reserve(t.rows.size());
	for (const auto &row : t.rows)
		out.push_back({row[0], parse_double(row[1], "total_assets"),
		               parse_double(row[2], "capital"),
		               parse_double(row[3], "interbank_liabilities")});
	return out;
}

KeyValues parse_key_values(std::istream &in) {
	KeyValues kv;
	std::string line;
	int number = 0;
	while (std::getline(in, line)) {
		++number;
		const std::string body = trim(line.substr(0, line.find('#')));
		if (body.empty())
			continue;
		const auto eq = body.find('=');
		if (eq == std::string::npos)
			throw InvalidInput("config line " + std::to_string(number) + ": expected key = value");
		const std::string key = trim(body.substr(0, eq));
		const std::string value = trim(body.substr(eq + 1));
		if (key.empty())
			throw InvalidInput("config line " + std::to_string(number) + ": empty key");
		if (!kv.emplace(key, value).second)
			throw InvalidInput("config key '" + key + "' given twice");
	}
	return kv;
}

KeyValues read_key_values(const std::string &path) {
	std::ifstream in = open_in(path);
	return parse_key_values(in);
}

RunConfig apply_config(const KeyValues &kv, RunConfig cfg) {
	const auto count = [](const std::string &v, const std::string &k) {
		const long long c = parse_integer(v, k);
		if (c < 0)
			throw InvalidInput(k + " must be nonnegative");
		return static_cast<std::uint64_t>(c);
	};
	for (const auto &[key, value] : kv) {
		Scenario &s = cfg.scenario;
		if (key == "scheme")
			s.scheme = parse_scheme(value);
		else if (key == "beta")
			s.beta = parse_double(value, key);
		else if (key == "beta0")
			s.beta0 = parse_double(value, key);
		else if (key == "trigger")
			s.trigger = parse_double(value, key);
		else if (key == "conversion")
			s.conversion = parse_double(value, key);
		else if (key == "recovery")
			s.recovery = parse_double(value, key);
		else if (key == "shock")
			s.shock = parse_double(value, key);
		else if (key == "interbank_fraction")
			s.interbank_fraction = parse_double(value, key);
		else if (key == "seed")
			s.seed = cfg.sampler.seed = count(value, key);
		else if (key == "tol")
			cfg.tol = parse_double(value, key);
		else if (key == "max_iter")
			cfg.max_iter = count(value, key);
		else if (key == "density_p")
			cfg.sampler.density_p = parse_double(value, key);
		else if (key == "weight_rate")
			cfg.sampler.weight_rate = parse_double(value, key);
		else if (key == "thinning")
			cfg.sampler.thinning = count(value, key);
		else if (key == "burn_in")
			cfg.sampler.burn_in = count(value, key);
		else if (key == "exclude") {
			cfg.exclusions.clear();
			std::stringstream ss(value);
			std::string id;
			while (std::getline(ss, id, ','))
				if (!trim(id).empty())
					cfg.exclusions.push_back(trim(id));
		} else
			throw InvalidInput("unknown config key '" + key + "'");
	}
	return cfg;
}

std::string result_json(const Network &net, const ClearingResult &result,
                        const RiskMeasures &measures) {
	const auto vec = [](const Vector &v) { return std::vector<double>(v.begin(), v.end()); };
	nlohmann::json j;
	j["extremum"] = result.extremum == Extremum::maximal ? "maximal" : "minimal";
	j["assets"] = vec(result.assets);
	j["lambda"] = vec(result.lambda);
	j["equity"] = vec(result.equity);
	j["coco_fraction"] = vec(result.coco_fraction);
	j["defaults"] = result.defaults;
	j["society_value"] = result.society_value;
	j["iterations"] = result.iterations;
	j["residual"] = result.residual;
	j["lattice_top"] = vec(lattice_top(net));
	j["risk"]["external_repayment_fraction"] =
	    measures.external_repayment_fraction ? nlohmann::json(*measures.external_repayment_fraction)
	                                         : nlohmann::json(nullptr);
	j["risk"]["original_shareholder_value"] = measures.original_shareholder_value;
	j["risk"]["default_count"] = measures.default_count;
	return j.dump(2);
}

} // namespace cococlear
