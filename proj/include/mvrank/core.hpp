#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Data model for two-arm multi-endpoint datasets plus CSV ingestion.
// All types are treated as immutable once constructed; validation happens
// at the factory boundary so no malformed dataset escapes into the
// pipeline.

namespace mvrank {

class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EndpointKind { continuous, discrete, time_to_event };

inline const char* to_string(EndpointKind k) {
  switch (k) {
    case EndpointKind::continuous: return "continuous";
    case EndpointKind::discrete: return "discrete";
    case EndpointKind::time_to_event: return "time-to-event";
  }
  return "?";
}

inline EndpointKind endpoint_kind_from_string(const std::string& s) {
  if (s == "continuous" || s == "cont" || s == "c") return EndpointKind::continuous;
  if (s == "discrete" || s == "disc") return EndpointKind::discrete;
  if (s == "time-to-event" || s == "tte" || s == "survival" || s == "t")
    return EndpointKind::time_to_event;
  throw error("unknown endpoint kind: '" + s + "'");
}

/// Two arms of d-endpoint observations. A time-to-event endpoint, if any,
/// sits at index 0 and carries event indicators for both arms.
struct TwoSampleData {
  Eigen::MatrixXd arm_x;  // m x d
  Eigen::MatrixXd arm_y;  // n x d
  std::vector<EndpointKind> schema;
  std::vector<std::string> names;
  std::optional<std::vector<bool>> events_x;
  std::optional<std::vector<bool>> events_y;
  std::map<std::string, double> meta;  // generator diagnostics, not persisted

  Eigen::Index m() const { return arm_x.rows(); }
  Eigen::Index n() const { return arm_y.rows(); }
  Eigen::Index d() const { return arm_x.cols(); }

  bool has_survival() const {
    return !schema.empty() && schema.front() == EndpointKind::time_to_event;
  }
};

/// Test result: statistic, threshold/p-value, decision, and provenance.
struct TestOutcome {
  double statistic = 0.0;
  std::optional<double> scaled_statistic;  // rank-energy only
  double threshold = 0.0;
  bool reject = false;
  std::string method;
  double alpha = 0.0;
  std::optional<double> p_value;  // permutation baselines only
  std::map<std::string, std::string> meta;
};

namespace detail {

inline std::string fmt_cell(std::size_t row, const std::string& col) {
  std::ostringstream os;
  os << "row " << row << ", column '" << col << "'";
  return os.str();
}

/// Shortest decimal representation that parses back to the same double.
inline std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Validates every TwoSampleData invariant; throws mvrank::error on the
/// first violation.
inline void validate(const TwoSampleData& data) {
  const Eigen::Index m = data.m(), n = data.n(), d = data.d();
  if (m < 1 || n < 1 || d < 1)
    throw error("dataset needs m >= 1, n >= 1, d >= 1");
  if (data.arm_y.cols() != d)
    throw error("arms disagree on endpoint count");
  if (static_cast<Eigen::Index>(data.schema.size()) != d)
    throw error("schema size does not match endpoint count");
  if (static_cast<Eigen::Index>(data.names.size()) != d)
    throw error("names size does not match endpoint count");
  if (!data.arm_x.allFinite() || !data.arm_y.allFinite())
    throw error("dataset contains missing or non-finite values");

  int n_tte = 0;
  for (auto k : data.schema)
    if (k == EndpointKind::time_to_event) ++n_tte;
  if (n_tte > 1)
    throw error("only one time-to-event endpoint is supported");
  if (n_tte == 1 && data.schema.front() != EndpointKind::time_to_event)
    throw error("time-to-event endpoint must be normalized to index 0");
  if (n_tte == 1) {
    if (!data.events_x || !data.events_y)
      throw error("time-to-event endpoint requires event indicators");
    if (static_cast<Eigen::Index>(data.events_x->size()) != m ||
        static_cast<Eigen::Index>(data.events_y->size()) != n)
      throw error("event indicator length does not match arm size");
    if ((data.arm_x.col(0).array() < 0.0).any() ||
        (data.arm_y.col(0).array() < 0.0).any())
      throw error("observed times must be >= 0");
  } else if (data.events_x || data.events_y) {
    throw error("event indicators present without a time-to-event endpoint");
  }
}

/// Factory used by generators and tests: validates and returns the dataset.
inline TwoSampleData make_dataset(TwoSampleData data) {
  // Normalize: move a time-to-event endpoint to index 0.
  for (std::size_t k = 0; k < data.schema.size(); ++k) {
    if (data.schema[k] == EndpointKind::time_to_event && k != 0) {
      Eigen::VectorXd cx = data.arm_x.col(static_cast<Eigen::Index>(k));
      Eigen::VectorXd cy = data.arm_y.col(static_cast<Eigen::Index>(k));
      for (std::size_t j = k; j > 0; --j) {
        data.arm_x.col(static_cast<Eigen::Index>(j)) =
            data.arm_x.col(static_cast<Eigen::Index>(j - 1));
        data.arm_y.col(static_cast<Eigen::Index>(j)) =
            data.arm_y.col(static_cast<Eigen::Index>(j - 1));
      }
      data.arm_x.col(0) = cx;
      data.arm_y.col(0) = cy;
      std::rotate(data.schema.begin(), data.schema.begin() + k,
                  data.schema.begin() + k + 1);
      std::rotate(data.names.begin(), data.names.begin() + k,
                  data.names.begin() + k + 1);
      break;
    }
  }
  validate(data);
  return data;
}

// ---------------------------------------------------------------------------
// CSV ingestion / emission
//
// Format: header row; an `arm` column with values in {x, y}; one numeric
// column per endpoint; `<name>_event` column (0/1) right of a
// time-to-event endpoint. UTF-8, '.' decimal separator, scientific
// notation accepted.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& cell, std::size_t row,
                           const std::string& col) {
  const std::string t = trim(cell);
  if (t.empty())
    throw error("missing value at " + fmt_cell(row, col));
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw error("non-numeric cell '" + t + "' at " + fmt_cell(row, col));
  }
  if (pos != t.size())
    throw error("non-numeric cell '" + t + "' at " + fmt_cell(row, col));
  if (!std::isfinite(v))
    throw error("non-finite value at " + fmt_cell(row, col));
  return v;
}

}  // namespace detail

/// Parses a schema description of the form "name=kind[,name=kind...]".
/// Endpoints not mentioned default to continuous.
inline std::map<std::string, EndpointKind> parse_schema_spec(
    const std::string& spec) {
  std::map<std::string, EndpointKind> kinds;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw error("bad schema entry '" + item + "' (expected name=kind)");
    kinds[detail::trim(item.substr(0, eq))] =
        endpoint_kind_from_string(detail::trim(item.substr(eq + 1)));
  }
  return kinds;
}

/// Reads and validates a two-arm CSV dataset. The schema spec assigns
/// endpoint kinds by column name; a declared time-to-event endpoint must
/// come with a `<name>_event` column. The survival endpoint, if any, is
/// moved to index 0.
inline TwoSampleData parse_dataset(const std::string& path,
                                   const std::string& schema_spec) {
  std::ifstream in(path);
  if (!in) throw error("cannot open dataset file: " + path);
  const auto declared = parse_schema_spec(schema_spec);

  std::string line;
  if (!std::getline(in, line)) throw error(path + ": empty file");
  const auto header = detail::split_csv_line(line);

  int arm_col = -1;
  std::vector<std::string> endpoint_names;
  std::map<std::string, int> col_of;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = detail::trim(header[c]);
    if (name.empty()) throw error(path + ": empty header name in column " +
                                  std::to_string(c + 1));
    if (col_of.count(name)) throw error(path + ": duplicate column '" + name + "'");
    col_of[name] = static_cast<int>(c);
    if (name == "arm") {
      arm_col = static_cast<int>(c);
    } else if (name.size() > 6 && name.substr(name.size() - 6) == "_event") {
      // paired with its endpoint below
    } else {
      endpoint_names.push_back(name);
    }
  }
  if (arm_col < 0) throw error(path + ": missing 'arm' column");
  if (endpoint_names.empty()) throw error(path + ": no endpoint columns");

  // Resolve kinds and event columns.
  std::vector<EndpointKind> schema;
  std::vector<int> event_col(endpoint_names.size(), -1);
  for (std::size_t k = 0; k < endpoint_names.size(); ++k) {
    const auto& name = endpoint_names[k];
    auto it = declared.find(name);
    const EndpointKind kind =
        it == declared.end() ? EndpointKind::continuous : it->second;
    schema.push_back(kind);
    const std::string ev = name + "_event";
    const auto evit = col_of.find(ev);
    if (kind == EndpointKind::time_to_event) {
      if (evit == col_of.end())
        throw error(path + ": time-to-event endpoint '" + name +
                    "' lacks its '" + ev + "' column");
      event_col[k] = evit->second;
    } else if (evit != col_of.end()) {
      throw error(path + ": column '" + ev +
                  "' present but '" + name + "' is not declared time-to-event");
    }
  }
  for (const auto& [name, kind] : declared) {
    if (std::find(endpoint_names.begin(), endpoint_names.end(), name) ==
        endpoint_names.end())
      throw error(path + ": schema names unknown endpoint '" + name + "'");
    (void)kind;
  }

  std::vector<std::vector<double>> rows_x, rows_y;
  std::vector<bool> ev_x, ev_y;
  int tte_index = -1;
  for (std::size_t k = 0; k < schema.size(); ++k)
    if (schema[k] == EndpointKind::time_to_event) tte_index = static_cast<int>(k);

  std::size_t row_no = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw error(path + ": row " + std::to_string(row_no) + " has " +
                  std::to_string(cells.size()) + " cells, expected " +
                  std::to_string(header.size()));
    const std::string arm = detail::trim(cells[arm_col]);
    if (arm != "x" && arm != "y")
      throw error(path + ": bad arm value '" + arm + "' at row " +
                  std::to_string(row_no) + " (expected x or y)");
    std::vector<double> vals(endpoint_names.size());
    for (std::size_t k = 0; k < endpoint_names.size(); ++k)
      vals[k] = detail::parse_number(cells[col_of[endpoint_names[k]]], row_no,
                                     endpoint_names[k]);
    bool ev = false;
    if (tte_index >= 0) {
      const std::string& col = endpoint_names[tte_index] + "_event";
      const double e = detail::parse_number(cells[event_col[tte_index]], row_no, col);
      if (e != 0.0 && e != 1.0)
        throw error(path + ": event indicator must be 0 or 1 at " +
                    detail::fmt_cell(row_no, col));
      ev = e == 1.0;
    }
    if (arm == "x") {
      rows_x.push_back(std::move(vals));
      if (tte_index >= 0) ev_x.push_back(ev);
    } else {
      rows_y.push_back(std::move(vals));
      if (tte_index >= 0) ev_y.push_back(ev);
    }
  }
  if (rows_x.empty()) throw error(path + ": arm x has no rows");
  if (rows_y.empty()) throw error(path + ": arm y has no rows");

  TwoSampleData data;
  const Eigen::Index d = static_cast<Eigen::Index>(endpoint_names.size());
  data.arm_x.resize(static_cast<Eigen::Index>(rows_x.size()), d);
  data.arm_y.resize(static_cast<Eigen::Index>(rows_y.size()), d);
  for (std::size_t i = 0; i < rows_x.size(); ++i)
    for (Eigen::Index k = 0; k < d; ++k) data.arm_x(i, k) = rows_x[i][k];
  for (std::size_t i = 0; i < rows_y.size(); ++i)
    for (Eigen::Index k = 0; k < d; ++k) data.arm_y(i, k) = rows_y[i][k];
  data.schema = schema;
  data.names = endpoint_names;
  if (tte_index >= 0) {
    data.events_x = ev_x;
    data.events_y = ev_y;
  }
  return make_dataset(std::move(data));
}

/// Writes the CSV form read back by parse_dataset. Values use the
/// shortest round-trip representation, so re-parsing reproduces every
/// double exactly.
inline void write_dataset(const TwoSampleData& data, std::ostream& out) {
  out << "arm";
  for (Eigen::Index k = 0; k < data.d(); ++k) {
    out << ',' << data.names[k];
    if (data.schema[k] == EndpointKind::time_to_event)
      out << ',' << data.names[k] << "_event";
  }
  out << '\n';
  auto emit_arm = [&](const Eigen::MatrixXd& mat, const char* arm,
                      const std::optional<std::vector<bool>>& events) {
    for (Eigen::Index i = 0; i < mat.rows(); ++i) {
      out << arm;
      for (Eigen::Index k = 0; k < mat.cols(); ++k) {
        out << ',' << detail::fmt_double(mat(i, k));
        if (data.schema[k] == EndpointKind::time_to_event)
          out << ',' << ((*events)[i] ? 1 : 0);
      }
      out << '\n';
    }
  };
  emit_arm(data.arm_x, "x", data.events_x);
  emit_arm(data.arm_y, "y", data.events_y);
}

inline void write_dataset(const TwoSampleData& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot open output file: " + path);
  write_dataset(data, out);
}

/// Schema spec string for a dataset (used by the CLI when echoing back).
inline std::string schema_spec_string(const TwoSampleData& data) {
  std::string s;
  for (std::size_t k = 0; k < data.schema.size(); ++k) {
    if (!s.empty()) s += ',';
    s += data.names[k];
    s += '=';
    switch (data.schema[k]) {
      case EndpointKind::continuous: s += "cont"; break;
      case EndpointKind::discrete: s += "disc"; break;
      case EndpointKind::time_to_event: s += "tte"; break;
    }
  }
  return s;
}

}  // namespace mvrank
