#pragma once
// Field file I/O and small JSON helpers.
//
// Field file format, default flavor: first line is a JSON header
//   {"n_points": N, "box_length": L, ...optional metadata...}
// followed by N*N CSV rows "re,im" in row-major order, doubles printed with
// %.17g so the decimal form round-trips exactly. A pure-JSON flavor (one
// document with a "values" array of [re, im] pairs) is accepted and written
// on demand for small grids.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "cqnls/grid.hpp"

namespace cqnls {

using json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string timestamp_utc() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("io.open_failed", "cannot open for writing: " + path);
  out << text;
  if (!out) fail("io.write_failed", "write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("io.open_failed", "cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_field(const std::string& path, const Field& f,
                        const json& metadata = json::object(),
                        bool pure_json = false) {
  require_finite(f, "write_field");
  json header = json::object();
  header["n_points"] = f.spec.n_points;
  header["box_length"] = f.spec.box_length;
  for (auto& [k, v] : metadata.items()) header[k] = v;
  if (pure_json) {
    json values = json::array();
    for (const cplx& z : f.values) values.push_back({z.real(), z.imag()});
    header["values"] = std::move(values);
    write_text_file(path, header.dump());
    return;
  }
  std::string out = header.dump();
  out += '\n';
  for (const cplx& z : f.values) {
    out += format_double(z.real());
    out += ',';
    out += format_double(z.imag());
    out += '\n';
  }
  write_text_file(path, out);
}

inline Field read_field(const std::string& path) {
  const std::string text = read_text_file(path);
  const size_t nl = text.find('\n');
  const std::string first = text.substr(0, nl);
  json header;
  try {
    header = json::parse(first);
  } catch (const json::exception& e) {
    fail("io.bad_field_header", path + ": first line is not a JSON header: " + e.what());
  }
  if (!header.contains("n_points") || !header.contains("box_length"))
    fail("io.bad_field_header", path + ": header missing n_points/box_length");
  GridSpec spec = make_grid(header["n_points"].get<int>(),
                            header["box_length"].get<double>());
  Field f = make_field(spec);
  if (header.contains("values")) {  // pure-JSON flavor
    const json& values = header["values"];
    if ((int)values.size() != spec.size())
      fail("io.bad_field_body", path + ": values length mismatch");
    for (int i = 0; i < spec.size(); ++i)
      f.values[i] = cplx(values[i][0].get<double>(), values[i][1].get<double>());
  } else {
    const char* p = text.c_str() + (nl == std::string::npos ? text.size() : nl + 1);
    for (int i = 0; i < spec.size(); ++i) {
      char* end = nullptr;
      double re = std::strtod(p, &end);
      if (end == p || *end != ',')
        fail("io.bad_field_body", path + ": malformed CSV at row " + std::to_string(i));
      p = end + 1;
      double im = std::strtod(p, &end);
      if (end == p) fail("io.bad_field_body", path + ": malformed CSV at row " + std::to_string(i));
      p = end;
      while (*p == '\r' || *p == '\n') ++p;
      f.values[i] = cplx(re, im);
    }
  }
  require_finite(f, "read_field");
  return f;
}

}  // namespace cqnls
