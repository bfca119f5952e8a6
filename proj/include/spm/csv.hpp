#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spm/errors.hpp"

namespace spm::csv {

/// Shortest decimal form that parses back to the identical double;
/// NaN renders as an empty field.
std::string format_double(double v);

std::string format_double_fixed(double v, int digits);

/// Comma-separated writer producing LF line endings and a '.' decimal
/// point regardless of locale.
class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);

  void field(const std::string& v);
  void field(const char* v) { field(std::string(v)); }
  void field(double v) { field(format_double(v)); }
  void field(int v) { field(std::to_string(v)); }
  void field(long v) { field(std::to_string(v)); }
  void end_row();
  void close();

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  bool row_open_ = false;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // throws IoError if absent
};

Table read_table(const std::filesystem::path& path);

/// Feature-stream file: one row per time step, numeric columns y1..yp,
/// and an optional trailing "label" column whose blank entries mean
/// unlabeled.
struct StreamFile {
  Eigen::MatrixXd observations;
  std::vector<int> labels;  // 0 = unlabeled
};

StreamFile read_stream_csv(const std::filesystem::path& path);

void write_stream_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& observations,
                      const std::vector<int>& labels);

/// True-state file with columns t,state covering every time step.
std::vector<int> read_states_csv(const std::filesystem::path& path);

void write_states_csv(const std::filesystem::path& path,
                      const std::vector<int>& states);

}  // namespace spm::csv
