#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "asmc/core.hpp"
#include "asmc/models/multilevel_normal.hpp"

namespace asmc {

/// Header plus string cells; `lines[i]` is the 1-based file line of row i.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lines;
};

/// Splits on commas (no quoting). Ragged rows raise DataError with the line.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// y,x,group,u
MultilevelData radon_from_csv(const CsvTable& table);

struct DnsCsv {
  std::vector<std::string> dates;
  std::vector<double> maturities;  // parsed from the y_tau<m> column names
  std::vector<Vec> y;
};
/// date,y_tau<m1>,y_tau<m2>,...
DnsCsv dns_from_csv(const CsvTable& table);

/// item,department,y_s1..y_sS; items are grouped by department.
std::vector<std::vector<Vec>> m5_from_csv(const CsvTable& table);

/// group,y
std::vector<std::vector<double>> conjugate_from_csv(const CsvTable& table);

void write_radon_csv(std::ostream& out, const MultilevelData& data);
void write_dns_csv(std::ostream& out, const std::vector<double>& maturities, const std::vector<Vec>& y);
void write_m5_csv(std::ostream& out, const std::vector<std::vector<Vec>>& items);
void write_conjugate_csv(std::ostream& out, const std::vector<std::vector<double>>& y);

}  // namespace asmc
