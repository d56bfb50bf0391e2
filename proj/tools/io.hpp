#pragma once

#include <string>

#include "ptrans/model.hpp"

namespace cli {

// %.17g: round-trips any double through text.
std::string fmt(double value);

// Reads a simulate-style series ("t,y" header, t counting up from 0; the
// t=0 row is the chain start y0).  Throws std::runtime_error with a
// line-numbered message on any defect.
ptrans::SampleSet read_series_csv(const std::string& path);

// Writes `content` to `path`, or to stdout when path is empty or "-".
// Throws std::runtime_error when the path cannot be written.
void write_output(const std::string& path, const std::string& content);

}  // namespace cli
