#include "spm/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace spm::csv {

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  // Shortest representation that round-trips: try increasing precision.
  for (int digits = 15; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

std::string format_double_fixed(double v, int digits) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

Writer::Writer(const std::filesystem::path& path) : out_(path), path_(path) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
}

void Writer::field(const std::string& v) {
  if (row_open_) out_ << ',';
  out_ << v;
  row_open_ = true;
}

void Writer::end_row() {
  out_ << '\n';
  row_open_ = false;
}

void Writer::close() {
  out_.flush();
  if (!out_) throw IoError("failed writing " + path_.string());
  out_.close();
}

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  throw IoError("missing CSV column '" + name + "'");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

double parse_double(const std::string& s, const std::filesystem::path& path,
                    std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw IoError(path.string() + ":" + std::to_string(line_no) +
                  ": not a number: '" + s + "'");
  }
  return v;
}

int parse_int(const std::string& s, const std::filesystem::path& path,
              std::size_t line_no) {
  const double v = parse_double(s, path, line_no);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw IoError(path.string() + ":" + std::to_string(line_no) +
                  ": not an integer: '" + s + "'");
  }
  return i;
}

}  // namespace

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Table table;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  table.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != table.header.size()) {
      throw IoError(path.string() + ":" +
                    std::to_string(table.rows.size() + 2) +
                    ": expected " + std::to_string(table.header.size()) +
                    " fields, found " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

StreamFile read_stream_csv(const std::filesystem::path& path) {
  const Table table = read_table(path);
  const bool has_label = !table.header.empty() && table.header.back() == "label";
  const std::size_t p = table.header.size() - (has_label ? 1 : 0);
  if (p == 0) throw IoError(path.string() + ": no measurement columns");

  StreamFile out;
  out.observations.resize(static_cast<Eigen::Index>(table.rows.size()),
                          static_cast<Eigen::Index>(p));
  out.labels.assign(table.rows.size(), 0);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    for (std::size_t c = 0; c < p; ++c) {
      out.observations(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_double(row[c], path, r + 2);
    }
    if (has_label && !row[p].empty()) {
      const int label = parse_int(row[p], path, r + 2);
      if (label < 1) {
        throw IoError(path.string() + ":" + std::to_string(r + 2) +
                      ": labels are 1-based state indices");
      }
      out.labels[r] = label;
    }
  }
  return out;
}

void write_stream_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& observations,
                      const std::vector<int>& labels) {
  Writer w(path);
  for (Eigen::Index j = 0; j < observations.cols(); ++j) {
    w.field("y" + std::to_string(j + 1));
  }
  w.field("label");
  w.end_row();
  for (Eigen::Index i = 0; i < observations.rows(); ++i) {
    for (Eigen::Index j = 0; j < observations.cols(); ++j) {
      w.field(observations(i, j));
    }
    const int label =
        i < static_cast<Eigen::Index>(labels.size()) ? labels[static_cast<std::size_t>(i)] : 0;
    w.field(label > 0 ? std::to_string(label) : "");
    w.end_row();
  }
  w.close();
}

std::vector<int> read_states_csv(const std::filesystem::path& path) {
  const Table table = read_table(path);
  const int t_col = table.column("t");
  const int s_col = table.column("state");
  std::vector<int> states(table.rows.size(), 0);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const int t = parse_int(table.rows[r][static_cast<std::size_t>(t_col)], path, r + 2);
    if (t < 1 || t > static_cast<int>(table.rows.size())) {
      throw IoError(path.string() + ":" + std::to_string(r + 2) +
                    ": time index out of range");
    }
    states[static_cast<std::size_t>(t - 1)] =
        parse_int(table.rows[r][static_cast<std::size_t>(s_col)], path, r + 2);
  }
  return states;
}

void write_states_csv(const std::filesystem::path& path,
                      const std::vector<int>& states) {
  Writer w(path);
  w.field("t");
  w.field("state");
  w.end_row();
  for (std::size_t i = 0; i < states.size(); ++i) {
    w.field(static_cast<int>(i + 1));
    w.field(states[i]);
    w.end_row();
  }
  w.close();
}

}  // namespace spm::csv
