#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "minar/errors.hpp"
#include "minar/time.hpp"

namespace minar {

using Count = std::int64_t;
using CountVector = std::vector<Count>;

/// Time-indexed matrix of nonnegative counts, one column per series,
/// stored row-major.
class CountSeries {
 public:
  CountSeries() = default;

  explicit CountSeries(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw DimensionError("count series needs at least one column");
  }

  CountSeries(std::size_t dim, std::vector<Count> row_major) : CountSeries(dim) {
    if (row_major.size() % dim != 0) throw DimensionError("row-major data not a multiple of the dimension");
    for (Count c : row_major) {
      if (c < 0) throw DomainError("counts must be nonnegative");
    }
    data_ = std::move(row_major);
  }

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] std::span<const Count> row(std::size_t t) const {
    return {data_.data() + t * dim_, dim_};
  }
  [[nodiscard]] Count operator()(std::size_t t, std::size_t j) const { return data_[t * dim_ + j]; }
  [[nodiscard]] const std::vector<Count>& data() const noexcept { return data_; }

  void push_back(std::span<const Count> r) {
    if (r.size() != dim_) throw DimensionError("row dimension does not match series dimension");
    for (Count c : r) {
      if (c < 0) throw DomainError("counts must be nonnegative");
    }
    if (has_timestamps()) throw UsageError("timestamped series needs push_back(row, instant)");
    data_.insert(data_.end(), r.begin(), r.end());
  }

  void push_back(std::span<const Count> r, UtcInstant when) {
    if (!empty() && !has_timestamps()) throw UsageError("cannot add a timestamp to an untimed series");
    if (has_timestamps() && !(timestamps_->back() < when)) {
      throw DomainError("timestamps must be strictly increasing");
    }
    if (!timestamps_) timestamps_.emplace();
    for (Count c : r) {
      if (c < 0) throw DomainError("counts must be nonnegative");
    }
    if (r.size() != dim_) throw DimensionError("row dimension does not match series dimension");
    data_.insert(data_.end(), r.begin(), r.end());
    timestamps_->push_back(when);
  }

  [[nodiscard]] bool has_timestamps() const noexcept { return timestamps_.has_value(); }
  [[nodiscard]] const std::vector<UtcInstant>& timestamps() const { return timestamps_.value(); }

  /// Column j as a vector.
  [[nodiscard]] CountVector column(std::size_t j) const {
    CountVector out(size());
    for (std::size_t t = 0; t < size(); ++t) out[t] = (*this)(t, j);
    return out;
  }

  /// Rows [first, last).
  [[nodiscard]] CountSeries slice(std::size_t first, std::size_t last) const {
    if (first > last || last > size()) throw DimensionError("slice out of range");
    CountSeries out(dim_);
    out.data_.assign(data_.begin() + static_cast<std::ptrdiff_t>(first * dim_),
                     data_.begin() + static_cast<std::ptrdiff_t>(last * dim_));
    if (timestamps_) {
      out.timestamps_.emplace(timestamps_->begin() + static_cast<std::ptrdiff_t>(first),
                              timestamps_->begin() + static_cast<std::ptrdiff_t>(last));
    }
    return out;
  }

  friend bool operator==(const CountSeries&, const CountSeries&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<Count> data_;
  std::optional<std::vector<UtcInstant>> timestamps_;
};

/// Writes `t,series_1,...,series_d`; the t column holds the row index, or
/// the ISO-8601 UTC instant when the series is timestamped.
inline void write_csv(std::ostream& os, const CountSeries& series) {
  os << 't';
  for (std::size_t j = 0; j < series.dim(); ++j) os << ",series_" << (j + 1);
  os << '\n';
  for (std::size_t t = 0; t < series.size(); ++t) {
    if (series.has_timestamps()) {
      os << format_utc(series.timestamps()[t]);
    } else {
      os << t;
    }
    for (std::size_t j = 0; j < series.dim(); ++j) os << ',' << series(t, j);
    os << '\n';
  }
}

inline std::string to_csv(const CountSeries& series) {
  std::ostringstream os;
  write_csv(os, series);
  return os.str();
}

/// Reads the format produced by write_csv. The t column is treated as a
/// timestamp when its first entry is not a plain integer.
inline CountSeries read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("count series CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::size_t dim = 0;
  {
    std::stringstream header(line);
    std::string cell;
    std::getline(header, cell, ',');
    if (cell != "t") throw ParseError("count series CSV must start with a 't' column");
    while (std::getline(header, cell, ',')) ++dim;
  }
  if (dim == 0) throw ParseError("count series CSV has no series columns");
  CountSeries series(dim);
  std::optional<bool> timed;
  std::size_t lineno = 1;
  CountVector row(dim);
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (!timed) timed = cell.find_first_not_of("0123456789") != std::string::npos;
    for (std::size_t j = 0; j < dim; ++j) {
      std::string value;
      if (!std::getline(ss, value, ',')) {
        throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(dim) + " counts");
      }
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != value.size() || value.empty()) {
        throw ParseError("line " + std::to_string(lineno) + ": count '" + value + "' is not an integer");
      }
      row[j] = v;
    }
    try {
      if (*timed) {
        series.push_back(row, parse_utc(cell));
      } else {
        series.push_back(row);
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return series;
}

}  // namespace minar
