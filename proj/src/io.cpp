#include "paththerm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "paththerm/error.hpp"

namespace paththerm::io {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) throw InvalidArgument("not a number: '" + s + "'");
  return v;
}

void write_csv(const Table& t, const std::filesystem::path& path) {
  require(t.header.size() == t.columns.size(), "csv header and column count differ");
  const std::size_t rows = t.rows();
  for (const auto& c : t.columns) require(c.size() == rows, "csv columns have different lengths");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  for (std::size_t c = 0; c < t.header.size(); ++c) out << (c ? "," : "") << t.header[c];
  out << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << format_double(t.columns[c][r]);
    out << '\n';
  }
  out.flush();
  if (!out) throw IoFailure("write failed: " + path.string());
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw IoFailure("empty csv: " + path.string());
  t.header = split(line);
  t.columns.resize(t.header.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) throw InvalidArgument("ragged csv row in " + path.string());
    for (std::size_t c = 0; c < cells.size(); ++c) t.columns[c].push_back(parse_double(cells[c]));
  }
  return t;
}

Table field_table(const Field& f) {
  return Table{{"x", "value"}, {f.grid.centers(), f.values}};
}

Table kernel_table(const Kernel& k) {
  const std::size_t n = k.n();
  Table t{{"y", "x", "q"}, {{}, {}, {}}};
  for (auto& c : t.columns) c.reserve(n * n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      t.columns[0].push_back(k.grid.x(y));
      t.columns[1].push_back(k.grid.x(x));
      t.columns[2].push_back(k(y, x));
    }
  }
  return t;
}

Table hseries_table(const HSeries& s) {
  return Table{{"t", "H", "H_rate", "S_total"}, {s.times, s.H, s.H_rate, s.S_total}};
}

Table vcorr_table(const std::vector<VelocityCorrEstimate>& rows) {
  Table t{{"beta", "delta_t", "value", "std_error", "n_paths"}, std::vector<std::vector<double>>(5)};
  for (const auto& r : rows) {
    t.columns[0].push_back(r.beta);
    t.columns[1].push_back(r.delta_t);
    t.columns[2].push_back(r.value);
    t.columns[3].push_back(r.std_error);
    t.columns[4].push_back(static_cast<double>(r.n_paths));
  }
  return t;
}

Table bridge_snapshot_table(const BridgeSystem& bs, std::size_t k, const Field* V) {
  require(k < bs.size(), "bridge snapshot index out of range");
  const std::size_t n = bs.grid.n_cells;
  std::vector<double> re(n), im(n);
  for (std::size_t i = 0; i < n; ++i) {
    re[i] = bs.psi[k][i].real();
    im[i] = bs.psi[k][i].imag();
  }
  return Table{{"x", "phi", "phihat", "mu", "a", "ahat", "R", "S", "re_psi", "im_psi", "V"},
               {bs.grid.centers(), bs.phi[k].values, bs.phihat[k].values, bs.mu[k].values,
                bs.a[k].values, bs.ahat[k].values, bs.R[k].values, bs.S[k].values, re, im,
                V ? V->values : std::vector<double>(n, std::nan(""))}};
}

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json to_json(const UnitSystem& u) { return {{"hbar", u.hbar}, {"mass", u.mass}, {"kB", u.kB}}; }

nlohmann::json to_json(const Grid1D& g) {
  return {{"x_min", g.x_min},
          {"x_max", g.x_max},
          {"n_cells", g.n_cells},
          {"boundary", g.boundary == Boundary::periodic ? "periodic" : "reflecting"}};
}

nlohmann::json to_json(const Potential& u) {
  struct Visitor {
    nlohmann::json operator()(const potential::Free&) const { return {{"type", "free"}}; }
    nlohmann::json operator()(const potential::Constant& c) const { return {{"type", "constant"}, {"c", c.c}}; }
    nlohmann::json operator()(const potential::Harmonic& h) const {
      return {{"type", "harmonic"}, {"omega", h.omega}, {"center", h.center}, {"mass", h.mass}};
    }
    nlohmann::json operator()(const potential::Tabulated& t) const {
      return {{"type", "tabulated"}, {"x", t.x}, {"values", t.values}};
    }
  };
  return std::visit(Visitor{}, u);
}

nlohmann::json to_json(const ThermoReport& r) {
  nlohmann::json j = {
      {"U", number(r.U)},
      {"tau_star", number(r.tau_star)},
      {"T_star", number(r.T_star)},
      {"beta_star", number(r.beta_star)},
      {"Z_path", number(r.Z_path)},
      {"Z_std_error", number(r.Z_std_error)},
      {"S_path", number(r.S_path)},
      {"F", number(r.F)},
      {"Lambda", number(r.Lambda)},
      {"thermal_wavelength", number(r.thermal_wavelength)},
      {"U_check", number(r.U_check)},
      {"U_check_std_error", number(r.U_check_std_error)},
      {"tau_std_error", number(r.tau_std_error)},
      {"iterations", r.iterations},
      {"oracle_tau_star", r.oracle_tau_star ? number(*r.oracle_tau_star) : nlohmann::json(nullptr)},
      {"oracle_rel_error", r.oracle_rel_error ? number(*r.oracle_rel_error) : nlohmann::json(nullptr)},
      {"oracle_agrees", r.oracle_agrees},
      {"provenance",
       {{"mode", to_string(r.mode)},
        {"seed", r.seed},
        {"n_paths", r.n_paths},
        {"n_steps", r.n_steps},
        {"n_quadrature", r.n_quadrature},
        {"tol", r.tol}}},
  };
  return j;
}

nlohmann::json to_json(const VelocityCorrEstimate& e) {
  return {{"beta", e.beta},
          {"delta_t", e.delta_t},
          {"value", number(e.value)},
          {"std_error", number(e.std_error)},
          {"n_paths", e.n_paths}};
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  out.flush();
  if (!out) throw IoFailure("write failed: " + path.string());
}

}  // namespace paththerm::io
