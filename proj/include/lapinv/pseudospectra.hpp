#pragma once

// Resolvent-norm grids over a box of the complex plane and the level curves
// extracted from them.

#include <span>
#include <string>
#include <vector>

#include "lapinv/numerics.hpp"

namespace lapinv {

struct GridSpec {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
  int n_pts = 100;  ///< nodes per axis

  /// Throws std::invalid_argument unless x_min < x_max, y_min < y_max, n_pts >= 8.
  void validate() const;
  std::vector<double> xs() const;
  std::vector<double> ys() const;
};

/// σ_min(zI - A) on the nodes of a GridSpec. Row-major: sigma_min[iy * n + ix].
struct PseudoGrid {
  GridSpec spec;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> sigma_min;

  double at(std::size_t iy, std::size_t ix) const { return sigma_min[iy * x.size() + ix]; }
};

/// Evaluates σ_min(zI - A) from a complex Schur form computed once, with
/// inverse Lanczos on the shifted triangular factor. Immutable after
/// construction; sigma_min is safe to call concurrently.
class ResolventNormEvaluator {
 public:
  explicit ResolventNormEvaluator(const Operator& op);

  double sigma_min(Complex z) const;
  Index dim() const noexcept { return schur_t_.rows(); }

 private:
  Matrix schur_t_;
};

/// σ_min at every node. For real A only nodes with y >= 0 are evaluated and the
/// lower half is mirrored.
PseudoGrid compute_grid(const Operator& op, const GridSpec& spec);

/// One point per grid column: the outermost y >= 0 where the (weighted)
/// resolvent norm e^{x t}/σ_min crosses 1/ε; 0 where the column never crosses.
struct LevelCurve {
  std::vector<double> x;
  std::vector<double> y;
  double epsilon = 0.0;
  double weighted_time = 0.0;  ///< 0 means unweighted
};

/// Scans each column from the top down; the crossing is located by linear
/// interpolation of σ_min·e^{-x t} against ε between the bracketing nodes.
LevelCurve level_curve(const PseudoGrid& grid, double epsilon, double t);

/// Column-wise max of the weighted ε₁-curve and the unweighted ε₂-curve.
/// Throws std::invalid_argument when the abscissae differ.
LevelCurve critical_curve(const LevelCurve& weighted, const LevelCurve& unweighted);

/// Φ: points the bounding ellipse must enclose, stored as upper-half
/// representatives (Re, |Im|). Points left of z_l are dropped, since only the
/// right half of the ellipse is used.
struct SingularitySet {
  std::vector<Complex> points;
};

SingularitySet assemble_singularities(const LevelCurve& critical,
                                      std::span<const Complex> eigenvalues,
                                      std::span<const Complex> source_singularities, double z_l);

/// Rightmost x where σ_min(xI - A) = ε on the real axis, searched to the right of
/// the spectrum's rightmost real part.
double rightmost_real_crossing(const Operator& op, std::span<const Complex> eigenvalues,
                               double epsilon);

/// CSV: "x,y,sigma_min".
void write_grid_csv(const PseudoGrid& grid, const std::string& path);
/// CSV: "x,y_level".
void write_curve_csv(const LevelCurve& curve, const std::string& path);

}  // namespace lapinv
