// Tabular output: CSV and JSON-lines with shortest-round-trip numbers, so
// identical configs reproduce byte-identical files.
#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace endseq {

inline constexpr const char* kVersion = "0.1.0";

/// Shortest decimal string that round-trips to the same double.
std::string formatDouble(double v);

enum class OutFormat { Csv, Jsonl };

using Cell = std::variant<std::int64_t, double, std::string>;

class TableWriter {
 public:
  TableWriter(std::ostream& out, OutFormat format, std::vector<std::string> columns);

  /// "# ..." line; emitted for both formats.
  void comment(const std::string& text);
  /// CSV column header (no-op for JSONL).
  void header();
  void row(const std::vector<Cell>& cells);

 private:
  std::ostream& out_;
  OutFormat format_;
  std::vector<std::string> columns_;
};

}  // namespace endseq
