#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "adafnn/dataset.hpp"
#include "adafnn/errors.hpp"
#include "adafnn/grid.hpp"
#include "adafnn/matrix.hpp"
#include "adafnn/rng.hpp"

namespace adafnn {

// Shortest decimal form that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline double parse_cell(const std::string& cell, std::size_t line_number) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  while (end != nullptr && (*end == ' ' || *end == '\t')) ++end;
  if (end == begin || end == nullptr || *end != '\0') {
    throw data_error("line " + std::to_string(line_number) +
                     ": cell '" + cell + "' is not a number");
  }
  return v;
}

inline std::vector<double> parse_row(const std::string& line,
                                     std::size_t line_number) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string cell = comma == std::string::npos
                           ? line.substr(start)
                           : line.substr(start, comma - start);
    out.push_back(parse_cell(cell, line_number));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Maps observation times onto [0, 1] when the range is not already the
// unit interval. Affine, so quadrature weights scale uniformly and nothing
// about a fit changes beyond that constant.
inline void rescale_times(std::vector<double>& times) {
  for (std::size_t j = 0; j + 1 < times.size(); ++j) {
    if (!(times[j] < times[j + 1])) {
      throw data_error("times are not strictly increasing at entry " +
                       std::to_string(j + 1));
    }
  }
  double lo = times.front();
  double span = times.back() - times.front();
  if (lo == 0.0 && times.back() == 1.0) return;
  for (double& t : times) t = (t - lo) / span;
  times.front() = 0.0;
  times.back() = 1.0;
}

}  // namespace detail

// Dataset dump: the grid on the first row, then one sample per row as the
// J+1 curve values followed by the response. All numbers are written in
// round-trip precision so a dump-ingest cycle is bit exact.
inline void write_dataset_csv(const FunctionalDataset& data,
                              const std::string& path) {
  data.validate();
  if (!data.fully_labeled()) {
    throw data_error("dataset dump requires a response on every sample");
  }
  std::ofstream out(path);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  for (std::size_t j = 0; j < data.grid.size(); ++j) {
    if (j > 0) out << ',';
    out << format_double(data.grid[j]);
  }
  out << '\n';
  for (const FunctionalSample& s : data.samples) {
    for (double v : s.values) out << format_double(v) << ',';
    out << format_double(*s.response) << '\n';
  }
  if (!out) throw data_error("write to '" + path + "' failed");
}

// Parses the dump format back. Observation times are affinely mapped onto
// [0, 1] when the file uses another range (hours, ages, ...); weights and
// scores scale uniformly under that map, so fits are unaffected beyond the
// constant.
inline FunctionalDataset read_dataset_csv(const std::string& path, Task task) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");

  std::string line;
  std::size_t line_number = 0;

  if (!std::getline(in, line)) throw data_error("'" + path + "' is empty");
  ++line_number;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<double> times = detail::parse_row(line, line_number);
  if (times.size() < 3) {
    throw data_error("line 1: grid needs at least 3 points, got " +
                     std::to_string(times.size()));
  }
  try {
    detail::rescale_times(times);
  } catch (const data_error& e) {
    throw data_error("line 1: grid " + std::string(e.what()));
  }

  FunctionalDataset data{Grid(std::move(times)), {}, task};
  const std::size_t expected = data.grid.size() + 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      // A blank final line is a trailing newline; anywhere else it is a hole.
      if (in.peek() == std::ifstream::traits_type::eof()) break;
      throw data_error("line " + std::to_string(line_number) + ": empty row");
    }
    std::vector<double> row = detail::parse_row(line, line_number);
    if (row.size() != expected) {
      throw data_error("line " + std::to_string(line_number) + ": expected " +
                       std::to_string(expected) + " fields (" +
                       std::to_string(data.grid.size()) +
                       " curve values and a response), got " +
                       std::to_string(row.size()));
    }
    FunctionalSample s;
    s.response = row.back();
    row.pop_back();
    s.values = std::move(row);
    if (task == Task::binary_classification && *s.response != 0.0 &&
        *s.response != 1.0) {
      throw data_error("line " + std::to_string(line_number) + ": label " +
                       format_double(*s.response) + " is not 0 or 1");
    }
    data.samples.push_back(std::move(s));
  }
  data.validate();
  return data;
}

struct SplitFractions {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

struct DatasetSplits {
  FunctionalDataset train;
  FunctionalDataset val;
  FunctionalDataset test;
};

// Seeded shuffle split. Counts are floors of the requested fractions with
// the remainder going to test, so the same seed always cuts identically.
inline DatasetSplits split_dataset(const FunctionalDataset& data,
                                   const SplitFractions& fractions,
                                   std::uint64_t seed) {
  if (fractions.train < 0.0 || fractions.val < 0.0 || fractions.test < 0.0) {
    throw config_error("split fractions must be nonnegative");
  }
  double total = fractions.train + fractions.val + fractions.test;
  if (std::abs(total - 1.0) > 1e-9) {
    throw config_error("split fractions must sum to 1, got " +
                       format_double(total));
  }
  data.validate();
  const std::size_t n = data.samples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = Rng(seed).derive("split");
  rng.shuffle(order);

  std::size_t n_train = static_cast<std::size_t>(fractions.train *
                                                 static_cast<double>(n));
  std::size_t n_val =
      static_cast<std::size_t>(fractions.val * static_cast<double>(n));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw data_error("dataset of " + std::to_string(n) +
                     " samples is too small for the requested split");
  }

  DatasetSplits out{FunctionalDataset{data.grid, {}, data.task},
                    FunctionalDataset{data.grid, {}, data.task},
                    FunctionalDataset{data.grid, {}, data.task}};
  for (std::size_t i = 0; i < n; ++i) {
    const FunctionalSample& s = data.samples[order[i]];
    if (i < n_train) {
      out.train.samples.push_back(s);
    } else if (i < n_train + n_val) {
      out.val.samples.push_back(s);
    } else {
      out.test.samples.push_back(s);
    }
  }
  return out;
}

// Basis dump: header `t,<prefix>_1,...,<prefix>_d`, then one row per grid
// point with the curve values at that point. `curves` holds one basis per
// row. Learned bases use the prefix "beta", fixed ones "psi".
inline void write_basis_csv(const std::string& path, const Grid& grid,
                            const Matrix& curves, const std::string& prefix) {
  if (curves.cols() != grid.size()) {
    throw data_error("basis dump: curves have " +
                     std::to_string(curves.cols()) +
                     " columns on a grid of " + std::to_string(grid.size()));
  }
  std::ofstream out(path);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << 't';
  for (std::size_t i = 0; i < curves.rows(); ++i) {
    out << ',' << prefix << '_' << (i + 1);
  }
  out << '\n';
  for (std::size_t j = 0; j < grid.size(); ++j) {
    out << format_double(grid[j]);
    for (std::size_t i = 0; i < curves.rows(); ++i) {
      out << ',' << format_double(curves(i, j));
    }
    out << '\n';
  }
  if (!out) throw data_error("write to '" + path + "' failed");
}

struct BasisDump {
  std::vector<double> t;
  std::vector<std::string> names;
  std::vector<std::vector<double>> curves;  // one per name, over t
};

inline BasisDump read_basis_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw data_error("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  BasisDump dump;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string cell = comma == std::string::npos
                           ? line.substr(start)
                           : line.substr(start, comma - start);
    if (dump.names.empty() && dump.curves.empty() && start == 0) {
      if (cell != "t") {
        throw data_error("line 1: basis dump must start with a 't' column, "
                         "got '" + cell + "'");
      }
    } else {
      if (cell.empty()) throw data_error("line 1: empty column name");
      dump.names.push_back(cell);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (dump.names.empty()) {
    throw data_error("line 1: basis dump has no curve columns");
  }
  dump.curves.resize(dump.names.size());

  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (in.peek() == std::ifstream::traits_type::eof()) break;
      throw data_error("line " + std::to_string(line_number) + ": empty row");
    }
    std::vector<double> row = detail::parse_row(line, line_number);
    if (row.size() != dump.names.size() + 1) {
      throw data_error("line " + std::to_string(line_number) + ": expected " +
                       std::to_string(dump.names.size() + 1) +
                       " fields, got " + std::to_string(row.size()));
    }
    dump.t.push_back(row[0]);
    for (std::size_t i = 0; i < dump.names.size(); ++i) {
      dump.curves[i].push_back(row[i + 1]);
    }
  }
  if (dump.t.size() < 3) {
    throw data_error("basis dump needs at least 3 grid rows, got " +
                     std::to_string(dump.t.size()));
  }
  try {
    detail::rescale_times(dump.t);
  } catch (const data_error& e) {
    throw data_error("basis dump: " + std::string(e.what()));
  }
  return dump;
}

}  // namespace adafnn
