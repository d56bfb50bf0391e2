#include "io.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace cli {

std::string fmt(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

namespace {

bool parse_field(const std::string& field, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(field, &used);
    return used == field.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

ptrans::SampleSet read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");

  const auto fail = [&](int line_no, const std::string& what) {
    throw std::runtime_error(path + " line " + std::to_string(line_no) + ": " + what);
  };

  std::string line;
  int line_no = 1;
  if (!std::getline(in, line)) fail(1, "empty file, expected header t,y");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,y") fail(1, "expected header t,y");

  ptrans::SampleSet series;
  bool have_initial = false;
  long expected_t = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) fail(line_no, "blank row");
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      fail(line_no, "expected two comma-separated fields");
    double t = 0.0;
    double y = 0.0;
    if (!parse_field(line.substr(0, comma), t) || !parse_field(line.substr(comma + 1), y))
      fail(line_no, "expected numeric t,y");
    if (t != static_cast<double>(expected_t)) fail(line_no, "t must count up from 0");
    ++expected_t;
    if (!have_initial) {
      series.initial = y;
      have_initial = true;
    } else {
      series.points.push_back(y);
    }
  }
  if (!have_initial) fail(line_no + 1, "no data rows");
  if (series.points.empty())
    fail(line_no + 1, "need at least one observation after the t=0 row");
  return series;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << content;
  out.flush();
  if (!out.good()) throw std::runtime_error(path + ": write failed");
}

}  // namespace cli
