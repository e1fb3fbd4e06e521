#include "endseq/output.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace endseq {

std::string formatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

TableWriter::TableWriter(std::ostream& out, OutFormat format,
                         std::vector<std::string> columns)
    : out_(out), format_(format), columns_(std::move(columns)) {}

void TableWriter::comment(const std::string& text) { out_ << "# " << text << "\n"; }

void TableWriter::header() {
  if (format_ != OutFormat::Csv) return;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out_ << ",";
    out_ << columns_[i];
  }
  out_ << "\n";
}

void TableWriter::row(const std::vector<Cell>& cells) {
  if (cells.size() != columns_.size()) {
    throw std::logic_error("TableWriter: cell count mismatch");
  }
  const auto emit = [this](const Cell& c, bool quoteStrings) {
    if (const auto* i = std::get_if<std::int64_t>(&c)) {
      out_ << *i;
    } else if (const auto* d = std::get_if<double>(&c)) {
      const double v = *d;
      if (format_ == OutFormat::Jsonl && !std::isfinite(v)) {
        out_ << '"' << formatDouble(v) << '"';  // JSON has no inf/nan literals
      } else {
        out_ << formatDouble(v);
      }
    } else {
      const auto& s = std::get<std::string>(c);
      if (quoteStrings) {
        out_ << '"' << s << '"';
      } else {
        out_ << s;
      }
    }
  };
  if (format_ == OutFormat::Csv) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ",";
      emit(cells[i], false);
    }
    out_ << "\n";
    return;
  }
  out_ << "{";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ",";
    out_ << '"' << columns_[i] << "\":";
    emit(cells[i], true);
  }
  out_ << "}\n";
}

}  // namespace endseq
