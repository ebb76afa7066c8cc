#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "lapinv/contour.hpp"

namespace lapinv::testing {

/// Γ₊ through d + ir with centre z_l and right vertex z_r, bypassing the sweep.
inline InnerEllipse ellipse_through(double z_l, double z_r, double d, double r) {
  InnerEllipse e;
  e.z_l = z_l;
  e.z_r = z_r;
  e.d = d;
  e.r = r;
  e.w_tilde = std::acos((d - z_l) / (z_r - z_l));
  e.semi_minor = r / std::sin(e.w_tilde);
  e.which = EllipseCase::kInterior;
  return e;
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("lapinv_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace lapinv::testing
