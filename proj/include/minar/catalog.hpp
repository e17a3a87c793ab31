#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "minar/count_series.hpp"
#include "minar/errors.hpp"
#include "minar/time.hpp"

namespace minar {

struct EventRecord {
  UtcInstant time{};
  double longitude = 0.0;  // [-180, 180)
  double latitude = 0.0;   // [-90, 90]
  double depth = 0.0;      // km
  double magnitude = 0.0;
  /// Plate label carried by the catalog itself, when the column map names one.
  std::optional<std::string> plate;

  bool operator==(const EventRecord&) const = default;
};

/// Header names of the catalog columns. `plate` is optional; the others are
/// mandatory.
struct CatalogFormat {
  char delimiter = ',';
  std::string time = "time";
  std::string longitude = "longitude";
  std::string latitude = "latitude";
  std::string depth = "depth";
  std::string magnitude = "magnitude";
  std::optional<std::string> plate;

  /// {"delimiter": ",", "columns": {"time": ..., "magnitude": "mag", ...}}
  static CatalogFormat from_json(const nlohmann::json& j) {
    CatalogFormat f;
    if (j.contains("delimiter")) {
      const auto d = j.at("delimiter").get<std::string>();
      if (d.size() != 1) throw ParseError("catalog delimiter must be a single character");
      f.delimiter = d[0];
    }
    if (j.contains("columns")) {
      const auto& c = j.at("columns");
      auto read = [&](const char* key, std::string& target) {
        if (c.contains(key)) target = c.at(key).get<std::string>();
      };
      read("time", f.time);
      read("longitude", f.longitude);
      read("latitude", f.latitude);
      read("depth", f.depth);
      read("magnitude", f.magnitude);
      if (c.contains("plate")) f.plate = c.at("plate").get<std::string>();
    }
    return f;
  }
};

struct RejectedRow {
  std::size_t line = 0;
  std::string text;
  std::string reason;
};

struct CatalogParse {
  std::vector<EventRecord> events;
  std::vector<RejectedRow> rejects;
};

namespace detail {

/// Splits one delimited line; fields may be double-quoted with "" escapes.
inline std::optional<std::vector<std::string>> split_delimited(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  if (quoted) return std::nullopt;
  out.push_back(std::move(cell));
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::string tmp(s);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(tmp, &used);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (used != tmp.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads a delimited catalog with a header row. Rows that fail validation go
/// to `rejects` with a reason; blank lines are skipped.
inline CatalogParse parse_catalog(std::istream& in, const CatalogFormat& format = {}) {
  if (!in.good()) throw ParseError("catalog stream is not readable");
  CatalogParse result;
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::vector<std::string>> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    header = detail::split_delimited(line, format.delimiter);
    if (!header) throw ParseError("catalog header has an unterminated quote");
    break;
  }
  if (in.bad()) throw ParseError("catalog stream read failed");
  if (!header) return result;

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header->size(); ++i) index.emplace(std::string(detail::trim((*header)[i])), i);
  auto column = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw ParseError("catalog is missing mandatory column '" + name + "'");
    return it->second;
  };
  const std::size_t c_time = column(format.time), c_lon = column(format.longitude), c_lat = column(format.latitude),
                    c_depth = column(format.depth), c_mag = column(format.magnitude);
  const std::optional<std::size_t> c_plate = format.plate ? std::optional(column(*format.plate)) : std::nullopt;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    auto reject = [&](std::string reason) { result.rejects.push_back({lineno, line, std::move(reason)}); };
    const auto fields = detail::split_delimited(line, format.delimiter);
    if (!fields) {
      reject("unterminated quote");
      continue;
    }
    if (fields->size() != header->size()) {
      reject("expected " + std::to_string(header->size()) + " fields but found " + std::to_string(fields->size()));
      continue;
    }
    EventRecord e;
    try {
      e.time = parse_utc(detail::trim((*fields)[c_time]));
    } catch (const ParseError&) {
      reject("invalid time");
      continue;
    }
    const auto lon = detail::parse_real((*fields)[c_lon]);
    const auto lat = detail::parse_real((*fields)[c_lat]);
    const auto depth = detail::parse_real((*fields)[c_depth]);
    const auto mag = detail::parse_real((*fields)[c_mag]);
    if (!lon) {
      reject("longitude is not a number");
      continue;
    }
    if (!lat) {
      reject("latitude is not a number");
      continue;
    }
    if (!depth) {
      reject("depth is not a number");
      continue;
    }
    if (!mag) {
      reject("magnitude is not a number");
      continue;
    }
    // 180 and -180 are the same meridian.
    e.longitude = *lon == 180.0 ? -180.0 : *lon;
    if (!(e.longitude >= -180.0 && e.longitude < 180.0)) {
      reject("longitude out of range");
      continue;
    }
    e.latitude = *lat;
    if (!(e.latitude >= -90.0 && e.latitude <= 90.0)) {
      reject("latitude out of range");
      continue;
    }
    e.depth = *depth;
    if (!std::isfinite(e.depth)) {
      reject("depth not finite");
      continue;
    }
    e.magnitude = *mag;
    if (!std::isfinite(e.magnitude)) {
      reject("magnitude not finite");
      continue;
    }
    if (c_plate) {
      const auto label = detail::trim((*fields)[*c_plate]);
      if (!label.empty()) e.plate = std::string(label);
    }
    result.events.push_back(std::move(e));
  }
  if (in.bad()) throw ParseError("catalog stream read failed");
  return result;
}

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
  bool operator==(const LonLat&) const = default;
};

using Ring = std::vector<LonLat>;

/// A named region made of closed rings. A point is inside when it lies
/// inside an odd number of rings (holes are rings nested in an outer ring)
/// or on any ring edge.
struct PlateRegion {
  std::string name;
  std::vector<Ring> rings;

  void validate() const {
    if (name.empty()) throw ParseError("plate region without a name");
    if (rings.empty()) throw ParseError("plate '" + name + "' has no rings");
    for (const auto& r : rings) {
      if (r.size() < 4) throw ParseError("plate '" + name + "': ring needs at least 3 distinct vertices");
      if (!(r.front() == r.back())) throw ParseError("plate '" + name + "': ring is not closed");
      for (const auto& v : r) {
        if (!(v.lon >= -180.0 && v.lon <= 180.0 && v.lat >= -90.0 && v.lat <= 90.0)) {
          throw ParseError("plate '" + name + "': vertex out of range");
        }
      }
    }
  }
};

namespace detail {

inline Ring read_ring(const nlohmann::json& j) {
  Ring r;
  for (const auto& v : j) {
    if (!v.is_array() || v.size() < 2) throw ParseError("ring vertex must be [lon, lat]");
    r.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  return r;
}

inline void read_geometry(const nlohmann::json& g, std::vector<Ring>& rings) {
  const auto type = g.at("type").get<std::string>();
  const auto& coords = g.at("coordinates");
  if (type == "Polygon") {
    for (const auto& ring : coords) rings.push_back(read_ring(ring));
  } else if (type == "MultiPolygon") {
    for (const auto& poly : coords)
      for (const auto& ring : poly) rings.push_back(read_ring(ring));
  } else {
    throw ParseError("unsupported geometry type '" + type + "'");
  }
}

}  // namespace detail

/// Accepts either {"regions": [{"name": ..., "rings": [[[lon, lat], ...]]}]}
/// or a GeoJSON FeatureCollection whose features carry `properties.name`.
/// Region order in the file is preserved.
inline std::vector<PlateRegion> read_plates(const nlohmann::json& j) {
  std::vector<PlateRegion> out;
  try {
    if (j.contains("regions")) {
      for (const auto& r : j.at("regions")) {
        PlateRegion region{r.at("name").get<std::string>(), {}};
        for (const auto& ring : r.at("rings")) region.rings.push_back(detail::read_ring(ring));
        out.push_back(std::move(region));
      }
    } else if (j.value("type", "") == "FeatureCollection") {
      for (const auto& f : j.at("features")) {
        PlateRegion region;
        const auto& props = f.at("properties");
        region.name = props.contains("name") ? props.at("name").get<std::string>() : f.at("id").get<std::string>();
        detail::read_geometry(f.at("geometry"), region.rings);
        out.push_back(std::move(region));
      }
    } else {
      throw ParseError("plate file needs 'regions' or a GeoJSON FeatureCollection");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("plate file: ") + e.what());
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].validate();
    for (std::size_t k = 0; k < i; ++k) {
      if (out[k].name == out[i].name) throw ParseError("duplicate plate name '" + out[i].name + "'");
    }
  }
  return out;
}

inline std::vector<PlateRegion> read_plates(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("plate file: ") + e.what());
  }
  return read_plates(j);
}

namespace detail {

/// Ring with longitudes unwrapped so that consecutive vertices differ by at
/// most 180 degrees. A ring that circles a pole (net turn of 360 degrees) is
/// closed through the pole on the side of its mean latitude.
inline Ring unwrap_ring(const Ring& ring) {
  Ring out{ring.front()};
  double mean_lat = ring.front().lat;
  for (std::size_t i = 1; i < ring.size(); ++i) {
    double lon = ring[i].lon;
    const double prev = out.back().lon;
    while (lon - prev > 180.0) lon -= 360.0;
    while (lon - prev < -180.0) lon += 360.0;
    out.push_back({lon, ring[i].lat});
    mean_lat += ring[i].lat;
  }
  const double turn = out.back().lon - out.front().lon;
  if (std::abs(turn) > 180.0) {
    const double pole = mean_lat >= 0 ? 90.0 : -90.0;
    out.push_back({out.back().lon, pole});
    out.push_back({out.front().lon, pole});
    out.push_back(out.front());
  }
  return out;
}

inline bool on_segment(LonLat p, LonLat a, LonLat b) {
  constexpr double eps = 1e-9;
  const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
  if (std::abs(cross) > eps * std::max(1.0, std::hypot(b.lon - a.lon, b.lat - a.lat))) return false;
  return p.lon >= std::min(a.lon, b.lon) - eps && p.lon <= std::max(a.lon, b.lon) + eps &&
         p.lat >= std::min(a.lat, b.lat) - eps && p.lat <= std::max(a.lat, b.lat) + eps;
}

enum class RingSide { Outside, Inside, Edge };

/// Even-odd ray cast along +lon from p on a planar ring.
inline RingSide ray_cast(LonLat p, const Ring& ring) {
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const LonLat a = ring[j], b = ring[i];
    if (on_segment(p, a, b)) return RingSide::Edge;
    if ((a.lat > p.lat) != (b.lat > p.lat)) {
      const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
      if (p.lon < x) inside = !inside;
    }
  }
  return inside ? RingSide::Inside : RingSide::Outside;
}

inline RingSide locate(LonLat p, const Ring& ring) {
  const Ring r = unwrap_ring(ring);
  double lo = r.front().lon;
  for (const auto& v : r) lo = std::min(lo, v.lon);
  double lon = p.lon;
  while (lon < lo) lon += 360.0;
  while (lon >= lo + 360.0) lon -= 360.0;
  RingSide side = ray_cast({lon, p.lat}, r);
  // The east end of a ring spanning the full circle.
  if (side == RingSide::Outside) side = ray_cast({lon + 360.0, p.lat}, r);
  return side;
}

}  // namespace detail

inline bool region_contains(const PlateRegion& region, double lon, double lat) {
  bool inside = false;
  for (const auto& ring : region.rings) {
    const auto side = detail::locate({lon, lat}, ring);
    if (side == detail::RingSide::Edge) return true;
    if (side == detail::RingSide::Inside) inside = !inside;
  }
  return inside;
}

/// Name of the first region in file order containing the event, if any.
inline std::optional<std::string> assign_plate(const EventRecord& event, const std::vector<PlateRegion>& regions) {
  for (const auto& r : regions) {
    if (region_contains(r, event.longitude, event.latitude)) return r.name;
  }
  return std::nullopt;
}

struct MagnitudeBand {
  double lo = -std::numeric_limits<double>::infinity();
  bool lo_inclusive = true;
  std::optional<double> hi;
  bool hi_inclusive = false;

  [[nodiscard]] bool contains(double m) const {
    if (lo_inclusive ? m < lo : m <= lo) return false;
    if (hi && (hi_inclusive ? m > *hi : m >= *hi)) return false;
    return true;
  }
};

/// [lo, mid]
inline MagnitudeBand medium_band(double lo = 5.0, double mid = 6.0) { return {lo, true, mid, true}; }
/// (mid, inf)
inline MagnitudeBand large_band(double mid = 6.0) { return {mid, false, std::nullopt, false}; }

struct MagnitudeSplit {
  std::vector<EventRecord> medium, large;
};

inline MagnitudeSplit magnitude_split(const std::vector<EventRecord>& events, double lo = 5.0, double mid = 6.0) {
  if (!(lo < mid)) throw DomainError("magnitude split needs lo < mid");
  const auto medium = medium_band(lo, mid);
  const auto large = large_band(mid);
  MagnitudeSplit out;
  for (const auto& e : events) {
    if (medium.contains(e.magnitude)) {
      out.medium.push_back(e);
    } else if (large.contains(e.magnitude)) {
      out.large.push_back(e);
    }
  }
  return out;
}

struct BinningSpec {
  std::chrono::milliseconds window{std::chrono::hours{24}};
  UtcInstant start{};
  UtcInstant end{};
  MagnitudeBand band;

  static std::chrono::milliseconds hours(double h) {
    return std::chrono::milliseconds{static_cast<std::int64_t>(std::llround(h * 3600000.0))};
  }

  void validate() const {
    if (window.count() <= 0) throw DomainError("binning window must be positive");
    if (!(start < end)) throw DomainError("binning start must precede end");
    if (window_count() == 0) throw DomainError("binning range is shorter than one window");
  }

  /// Windows [start + k w, start + (k+1) w) that fit entirely before `end`.
  [[nodiscard]] std::size_t window_count() const {
    return static_cast<std::size_t>((end - start) / window);
  }

  [[nodiscard]] UtcInstant covered_end() const {
    return start + window * static_cast<std::int64_t>(window_count());
  }
};

namespace detail {

inline CountSeries bin_labelled(const std::vector<EventRecord>& events, const std::vector<std::optional<std::string>>& labels,
                                const BinningSpec& spec, const std::vector<std::string>& plates) {
  const std::size_t windows = spec.window_count();
  const std::size_t d = plates.size();
  std::vector<Count> counts(windows * d, 0);
  const UtcInstant stop = spec.covered_end();
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (!labels[i] || e.time < spec.start || !(e.time < stop) || !spec.band.contains(e.magnitude)) continue;
    const auto it = std::find(plates.begin(), plates.end(), *labels[i]);
    if (it == plates.end()) continue;
    const auto k = static_cast<std::size_t>((e.time - spec.start) / spec.window);
    ++counts[k * d + static_cast<std::size_t>(it - plates.begin())];
  }
  CountSeries out(d);
  for (std::size_t k = 0; k < windows; ++k) {
    out.push_back(std::span<const Count>(counts.data() + k * d, d), spec.start + spec.window * static_cast<std::int64_t>(k));
  }
  return out;
}

inline void check_plates(const std::vector<std::string>& plates) {
  if (plates.empty()) throw UsageError("binning needs at least one plate");
  for (std::size_t i = 0; i < plates.size(); ++i)
    for (std::size_t k = 0; k < i; ++k)
      if (plates[i] == plates[k]) throw UsageError("plate '" + plates[i] + "' requested twice");
}

}  // namespace detail

/// Dense window counts per plate, one column per entry of `plates`, rows
/// stamped with the window start. An event on a window boundary belongs to
/// the window that starts there.
inline CountSeries bin_counts(const std::vector<EventRecord>& events, const std::vector<PlateRegion>& regions,
                              const BinningSpec& spec, const std::vector<std::string>& plates) {
  spec.validate();
  detail::check_plates(plates);
  for (const auto& p : plates) {
    if (std::none_of(regions.begin(), regions.end(), [&](const PlateRegion& r) { return r.name == p; })) {
      throw UsageError("unknown plate '" + p + "'");
    }
  }
  std::vector<std::optional<std::string>> labels;
  labels.reserve(events.size());
  for (const auto& e : events) labels.push_back(assign_plate(e, regions));
  return detail::bin_labelled(events, labels, spec, plates);
}

/// Same, using the plate labels carried by the events. A plate is known when
/// at least one event in the catalog carries its label.
inline CountSeries bin_counts(const std::vector<EventRecord>& events, const BinningSpec& spec,
                              const std::vector<std::string>& plates) {
  spec.validate();
  detail::check_plates(plates);
  for (const auto& p : plates) {
    if (std::none_of(events.begin(), events.end(), [&](const EventRecord& e) { return e.plate == p; })) {
      throw UsageError("unknown plate '" + p + "'");
    }
  }
  std::vector<std::optional<std::string>> labels;
  labels.reserve(events.size());
  for (const auto& e : events) labels.push_back(e.plate);
  return detail::bin_labelled(events, labels, spec, plates);
}

inline void write_rejects_csv(std::ostream& os, const std::vector<RejectedRow>& rejects) {
  os << "line,reason,text\n";
  for (const auto& r : rejects) {
    std::string quoted;
    for (char c : r.text) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    os << r.line << ',' << r.reason << ",\"" << quoted << "\"\n";
  }
}

}  // namespace minar
