#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace polyspec {

/// Shortest round-trippable decimal with 17 significant digits.
std::string format_double(double v);

/// Writes to a temporary sibling and renames it over `path`, so readers
/// never observe a partial file. Throws std::runtime_error on I/O failure.
void write_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// Comma-separated rows with a header line; numbers via format_double.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  CsvTable& row(const std::vector<std::string>& cells);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string cell(double v);
std::string cell(long long v);
std::string cell(int v);
std::string cell(std::size_t v);

/// Little-endian binary writer/reader for exchange files.
class BinaryWriter {
 public:
  void bytes(const std::string& s) { out_ += s; }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string data) : data_(std::move(data)) {}
  std::string bytes(std::size_t n);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

/// Eigenvector file: "EVEC", u32 version, u64 rows, u64 cols, column-major f64.
std::string encode_matrix(const Eigen::MatrixXd& a);
Eigen::MatrixXd decode_matrix(const std::string& data);

}  // namespace polyspec
