#include "asmc/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "asmc/config.hpp"

namespace asmc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

double cell_number(const CsvTable& t, std::size_t row, std::size_t col) {
  const std::string& s = t.rows[row][col];
  if (s.empty()) fail(t.lines[row], "empty field " + t.header[col]);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    fail(t.lines[row], "non-numeric field " + t.header[col] + " '" + s + "'");
  return v;
}

int cell_int(const CsvTable& t, std::size_t row, std::size_t col) {
  const double v = cell_number(t, row, col);
  if (std::floor(v) != v || std::abs(v) > 1e9) fail(t.lines[row], "field " + t.header[col] + " must be an integer");
  return static_cast<int>(v);
}

void expect_header(const CsvTable& t, const std::vector<std::string>& names) {
  if (t.header != names) {
    std::string want;
    for (const auto& n : names) want += (want.empty() ? "" : ",") + n;
    throw DataError("line 1: expected header " + want);
  }
}

// Checks that group ids are 1..G with no gaps and returns G.
int dense_groups(const CsvTable& t, const std::vector<int>& ids, const std::string& column) {
  int g_max = 0;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 1) fail(t.lines[r], column + " ids are 1-based");
    g_max = std::max(g_max, ids[r]);
  }
  std::vector<bool> seen(static_cast<std::size_t>(g_max) + 1, false);
  for (int g : ids) seen[static_cast<std::size_t>(g)] = true;
  for (int g = 1; g <= g_max; ++g)
    if (!seen[static_cast<std::size_t>(g)])
      throw DataError(column + " ids are not dense: " + column + " " + std::to_string(g) + " has no rows");
  return g_max;
}

void require_rows(const CsvTable& t) {
  if (t.rows.empty()) throw DataError("no data rows");
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string raw;
  int line = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(in, raw)) {
    ++line;
    if (trim(raw).empty()) continue;
    auto cells = split(trim(raw));
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      fail(line, "expected " + std::to_string(t.header.size()) + " fields, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.lines.push_back(line);
  }
  if (t.header.empty()) throw DataError("empty file");
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  try {
    return read_csv(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

MultilevelData radon_from_csv(const CsvTable& t) {
  expect_header(t, {"y", "x", "group", "u"});
  require_rows(t);
  MultilevelData d;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    d.y.push_back(cell_number(t, r, 0));
    const int x = cell_int(t, r, 1);
    if (x != 0 && x != 1) fail(t.lines[r], "field x must be 0 or 1");
    d.x.push_back(x);
    d.group.push_back(cell_int(t, r, 2));
    d.u.push_back(cell_number(t, r, 3));
  }
  dense_groups(t, d.group, "group");
  return d;
}

DnsCsv dns_from_csv(const CsvTable& t) {
  if (t.header.size() < 2 || t.header[0] != "date") throw DataError("line 1: expected header date,y_tau<m>,...");
  require_rows(t);
  DnsCsv d;
  for (std::size_t c = 1; c < t.header.size(); ++c) {
    const std::string& h = t.header[c];
    double m = 0.0;
    const char* first = h.data() + 5;
    const char* last = h.data() + h.size();
    if (h.rfind("y_tau", 0) != 0 || h.size() == 5 || std::from_chars(first, last, m).ptr != last || !(m > 0.0))
      throw DataError("line 1: column '" + h + "' is not of the form y_tau<maturity>");
    d.maturities.push_back(m);
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r][0].empty()) fail(t.lines[r], "empty field date");
    d.dates.push_back(t.rows[r][0]);
    Vec y(static_cast<Eigen::Index>(d.maturities.size()));
    for (std::size_t c = 1; c < t.header.size(); ++c) y[static_cast<Eigen::Index>(c - 1)] = cell_number(t, r, c);
    d.y.push_back(std::move(y));
  }
  return d;
}

std::vector<std::vector<Vec>> m5_from_csv(const CsvTable& t) {
  if (t.header.size() < 3 || t.header[0] != "item" || t.header[1] != "department")
    throw DataError("line 1: expected header item,department,y_s1,...");
  for (std::size_t c = 2; c < t.header.size(); ++c)
    if (t.header[c] != "y_s" + std::to_string(c - 1))
      throw DataError("line 1: expected column y_s" + std::to_string(c - 1) + ", found '" + t.header[c] + "'");
  require_rows(t);
  std::vector<int> dept;
  std::vector<Vec> values;
  const auto s = static_cast<Eigen::Index>(t.header.size() - 2);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r][0].empty()) fail(t.lines[r], "empty field item");
    dept.push_back(cell_int(t, r, 1));
    Vec v(s);
    for (Eigen::Index j = 0; j < s; ++j) v[j] = cell_number(t, r, static_cast<std::size_t>(j) + 2);
    values.push_back(std::move(v));
  }
  const int g = dense_groups(t, dept, "department");
  std::vector<std::vector<Vec>> items(static_cast<std::size_t>(g));
  for (std::size_t r = 0; r < values.size(); ++r) items[static_cast<std::size_t>(dept[r] - 1)].push_back(values[r]);
  return items;
}

std::vector<std::vector<double>> conjugate_from_csv(const CsvTable& t) {
  expect_header(t, {"group", "y"});
  require_rows(t);
  std::vector<int> ids;
  std::vector<double> y;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ids.push_back(cell_int(t, r, 0));
    y.push_back(cell_number(t, r, 1));
  }
  const int g = dense_groups(t, ids, "group");
  std::vector<std::vector<double>> out(static_cast<std::size_t>(g));
  for (std::size_t r = 0; r < y.size(); ++r) out[static_cast<std::size_t>(ids[r] - 1)].push_back(y[r]);
  return out;
}

void write_radon_csv(std::ostream& out, const MultilevelData& d) {
  out << "y,x,group,u\n";
  for (std::size_t i = 0; i < d.y.size(); ++i)
    out << format_double(d.y[i]) << ',' << d.x[i] << ',' << d.group[i] << ',' << format_double(d.u[i]) << '\n';
}

void write_dns_csv(std::ostream& out, const std::vector<double>& maturities, const std::vector<Vec>& y) {
  out << "date";
  for (double m : maturities) {
    out << ",y_tau";
    if (std::floor(m) == m)
      out << static_cast<long>(m);
    else
      out << format_double(m);
  }
  out << '\n';
  for (std::size_t t = 0; t < y.size(); ++t) {
    out << "t" << (t + 1);
    for (Eigen::Index k = 0; k < y[t].size(); ++k) out << ',' << format_double(y[t][k]);
    out << '\n';
  }
}

void write_m5_csv(std::ostream& out, const std::vector<std::vector<Vec>>& items) {
  const Eigen::Index s = items.empty() || items[0].empty() ? 0 : items[0][0].size();
  out << "item,department";
  for (Eigen::Index j = 1; j <= s; ++j) out << ",y_s" << j;
  out << '\n';
  for (std::size_t g = 0; g < items.size(); ++g)
    for (std::size_t i = 0; i < items[g].size(); ++i) {
      out << "d" << (g + 1) << "_i" << (i + 1) << ',' << (g + 1);
      for (Eigen::Index j = 0; j < s; ++j) out << ',' << format_double(items[g][i][j]);
      out << '\n';
    }
}

void write_conjugate_csv(std::ostream& out, const std::vector<std::vector<double>>& y) {
  out << "group,y\n";
  for (std::size_t g = 0; g < y.size(); ++g)
    for (double v : y[g]) out << (g + 1) << ',' << format_double(v) << '\n';
}

}  // namespace asmc
