#pragma once

#include "freight/error.hpp"
#include "freight/geo.hpp"
#include "freight/model.hpp"
#include "freight/text.hpp"

#include <string>
#include <string_view>
#include <vector>

// Minimal well-known-text reader for LINESTRING, POLYGON and MULTIPOLYGON in
// lon/lat order.
namespace freight::wkt {

namespace detail {

class reader {
public:
  explicit reader(std::string_view s) : s_(s) {}

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r' || s_[pos_] == '\n')) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  std::string_view keyword() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && ((s_[pos_] >= 'A' && s_[pos_] <= 'Z') || (s_[pos_] >= 'a' && s_[pos_] <= 'z'))) ++pos_;
    return s_.substr(start, pos_ - start);
  }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::string_view("+-.eE0123456789").find(s_[pos_]) != std::string_view::npos)) ++pos_;
    const auto v = text::to_double(s_.substr(start, pos_ - start));
    if (!v) fail("expected a number");
    return *v;
  }

  lon_lat point() {
    const double lon = number();
    const double lat = number();
    if (!valid_coordinates(lon, lat)) fail("coordinate out of range");
    return {lon, lat};
  }

  // "(x y, x y, ...)"
  std::vector<lon_lat> point_list() {
    expect('(');
    std::vector<lon_lat> pts;
    do pts.push_back(point());
    while (consume(','));
    expect(')');
    return pts;
  }

  // "((...), (...))"
  std::vector<ring> ring_list() {
    expect('(');
    std::vector<ring> rings;
    do rings.push_back(point_list());
    while (consume(','));
    expect(')');
    return rings;
  }

  bool at_end() {
    skip_ws();
    return pos_ == s_.size();
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw parse_error("wkt: " + msg + " at offset " + std::to_string(pos_));
  }

private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

} // namespace detail

inline std::vector<lon_lat> parse_linestring(std::string_view s) {
  detail::reader r(s);
  const auto kw = r.keyword();
  if (!text::iequals(kw, "LINESTRING")) r.fail("expected LINESTRING");
  auto pts = r.point_list();
  if (!r.at_end()) r.fail("trailing characters");
  if (pts.size() < 2) r.fail("LINESTRING needs at least two vertices");
  return pts;
}

// POLYGON or MULTIPOLYGON; all rings are returned flat.
inline std::vector<ring> parse_polygonal(std::string_view s) {
  detail::reader r(s);
  const auto kw = r.keyword();
  std::vector<ring> rings;
  if (text::iequals(kw, "POLYGON")) {
    rings = r.ring_list();
  } else if (text::iequals(kw, "MULTIPOLYGON")) {
    r.expect('(');
    do {
      auto part = r.ring_list();
      rings.insert(rings.end(), part.begin(), part.end());
    } while (r.consume(','));
    r.expect(')');
  } else {
    r.fail("expected POLYGON or MULTIPOLYGON");
  }
  if (!r.at_end()) r.fail("trailing characters");
  return rings;
}

inline std::string format_linestring(const std::vector<lon_lat>& pts) {
  std::string out = "LINESTRING (";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out += ", ";
    out += text::fmt_double(pts[i].lon) + " " + text::fmt_double(pts[i].lat);
  }
  return out + ")";
}

inline std::string format_polygon(const std::vector<ring>& rings) {
  std::string out = "POLYGON (";
  for (std::size_t k = 0; k < rings.size(); ++k) {
    if (k) out += ", ";
    out += "(";
    for (std::size_t i = 0; i < rings[k].size(); ++i) {
      if (i) out += ", ";
      out += text::fmt_double(rings[k][i].lon) + " " + text::fmt_double(rings[k][i].lat);
    }
    out += ")";
  }
  return out + ")";
}

} // namespace freight::wkt
