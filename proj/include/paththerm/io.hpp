#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "paththerm/bridge.hpp"
#include "paththerm/diffusion.hpp"
#include "paththerm/irreversibility.hpp"
#include "paththerm/thermo.hpp"

namespace paththerm::io {

/// Shortest decimal that parses back to the same double; "nan", "inf", "-inf"
/// for non-finite values.
std::string format_double(double v);

/// Inverse of format_double. Throws InvalidArgument on malformed text.
double parse_double(const std::string& s);

/// Column-major numeric table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
};

/// Writes header plus one line per row. Throws IoFailure when the file cannot
/// be written and InvalidArgument for ragged columns.
void write_csv(const Table& t, const std::filesystem::path& path);
Table read_csv(const std::filesystem::path& path);

Table field_table(const Field& f);
/// Long form: y, x, q(y, x).
Table kernel_table(const Kernel& k);
Table hseries_table(const HSeries& s);
Table vcorr_table(const std::vector<VelocityCorrEstimate>& rows);
/// Columns x, phi, phihat, mu, a, ahat, R, S, re_psi, im_psi, V at snapshot k.
/// V may be empty, giving NaN.
Table bridge_snapshot_table(const BridgeSystem& bs, std::size_t k, const Field* V = nullptr);

nlohmann::json to_json(const UnitSystem& u);
nlohmann::json to_json(const Grid1D& g);
nlohmann::json to_json(const Potential& u);
nlohmann::json to_json(const ThermoReport& r);
nlohmann::json to_json(const VelocityCorrEstimate& e);

/// Numbers as JSON; non-finite values become null.
nlohmann::json number(double v);

/// Writes JSON with a trailing newline. Throws IoFailure.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace paththerm::io
