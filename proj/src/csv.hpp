#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include "lapinv/errors.hpp"

namespace lapinv::detail {

/// Scientific notation with 17 significant digits.
inline std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace lapinv::detail
