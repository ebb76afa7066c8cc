#include "lapinv/pseudospectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "csv.hpp"
#include "lapinv/errors.hpp"
#include "parallel.hpp"

namespace lapinv {

namespace {

constexpr int kMaxLanczosSteps = 120;
constexpr double kLanczosTol = 1e-10;
constexpr int kCheckEvery = 4;

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  v.back() = hi;
  return v;
}

Vector lanczos_start(Index n) {
  std::mt19937_64 gen(0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = Complex(1.0 + 0.25 * dist(gen), 0.25 * dist(gen));
  return v.normalized();
}

double svd_sigma_min(const Matrix& r) {
  const Eigen::BDCSVD<Matrix> svd(r);
  return svd.singularValues().minCoeff();
}

}  // namespace

void GridSpec::validate() const {
  if (!(std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) &&
        std::isfinite(y_max))) {
    throw std::invalid_argument("grid box must be finite");
  }
  if (!(x_min < x_max) || !(y_min < y_max)) {
    throw std::invalid_argument("grid box needs x_min < x_max and y_min < y_max");
  }
  if (n_pts < 8) throw std::invalid_argument("grid needs at least 8 points per axis");
}

std::vector<double> GridSpec::xs() const { return linspace(x_min, x_max, n_pts); }
std::vector<double> GridSpec::ys() const { return linspace(y_min, y_max, n_pts); }

ResolventNormEvaluator::ResolventNormEvaluator(const Operator& op) {
  Eigen::ComplexSchur<Matrix> schur(op.matrix(), false);
  if (schur.info() != Eigen::Success) throw ConvergenceError("complex Schur decomposition failed");
  schur_t_ = schur.matrixT();
}

// σ_min(zI - A) = σ_min(zI - T) since the Schur vectors are unitary. The
// largest eigenvalue of (R^* R)^{-1} is found by Lanczos with full
// reorthogonalization; each step costs two triangular solves.
double ResolventNormEvaluator::sigma_min(Complex z) const {
  const Index n = schur_t_.rows();
  Matrix r = -schur_t_;
  r.diagonal().array() += z;
  if (n == 1) return std::abs(r(0, 0));
  for (Index i = 0; i < n; ++i) {
    if (r(i, i) == Complex(0.0, 0.0)) return 0.0;
  }

  const auto upper = r.triangularView<Eigen::Upper>();
  const int max_steps = static_cast<int>(std::min<Index>(n, kMaxLanczosSteps));
  Matrix q(n, max_steps + 1);
  std::vector<double> alpha, beta;
  q.col(0) = lanczos_start(n);

  for (int k = 0; k < max_steps; ++k) {
    Vector w = upper.adjoint().solve(q.col(k));
    w = upper.solve(w);
    if (!w.allFinite()) return svd_sigma_min(r);
    alpha.push_back(q.col(k).dot(w).real());
    w -= alpha.back() * q.col(k);
    if (k > 0) w -= beta.back() * q.col(k - 1);
    for (int pass = 0; pass < 2; ++pass) {
      const auto basis = q.leftCols(k + 1);
      w -= basis * (basis.adjoint() * w);
    }
    const double b = w.norm();
    const bool last = k + 1 == max_steps || k + 1 == n;
    if ((k + 1) % kCheckEvery != 0 && !last && b > 0.0) {
      beta.push_back(b);
      q.col(k + 1) = w / b;
      continue;
    }

    Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), k + 1);
    Eigen::VectorXd sub = Eigen::VectorXd::Zero(std::max(k, 0));
    for (int i = 0; i < k; ++i) sub(i) = beta[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const double theta = tri.eigenvalues()(k);
    const double residual = b * std::abs(tri.eigenvectors()(k, k));
    if (!(theta > 0.0) || !std::isfinite(theta)) return svd_sigma_min(r);
    if (residual <= kLanczosTol * theta || b <= kLanczosTol * theta || k + 1 == n) {
      return 1.0 / std::sqrt(theta);
    }
    beta.push_back(b);
    q.col(k + 1) = w / b;
  }
  return svd_sigma_min(r);
}

PseudoGrid compute_grid(const Operator& op, const GridSpec& spec) {
  spec.validate();
  PseudoGrid grid;
  grid.spec = spec;
  grid.x = spec.xs();
  grid.y = spec.ys();
  const std::size_t nx = grid.x.size();
  const std::size_t ny = grid.y.size();
  grid.sigma_min.assign(nx * ny, 0.0);

  // For real A, row iy < 0 copies the row holding -y when the grid has one.
  std::vector<std::ptrdiff_t> mirror(ny, -1);
  const double tol = 1e-12 * (spec.y_max - spec.y_min);
  if (op.is_real()) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      if (grid.y[iy] >= 0.0) continue;
      for (std::size_t jy = 0; jy < ny; ++jy) {
        if (grid.y[jy] >= 0.0 && std::abs(grid.y[jy] + grid.y[iy]) <= tol) {
          mirror[iy] = static_cast<std::ptrdiff_t>(jy);
          break;
        }
      }
    }
  }

  std::vector<std::size_t> rows;
  for (std::size_t iy = 0; iy < ny; ++iy)
    if (mirror[iy] < 0) rows.push_back(iy);

  const ResolventNormEvaluator eval(op);
  const bool real = op.is_real();
  detail::parallel_for(rows.size() * nx, [&](std::size_t k) {
    const std::size_t iy = rows[k / nx];
    const std::size_t ix = k % nx;
    double y = grid.y[iy];
    if (real) y = std::abs(y);
    grid.sigma_min[iy * nx + ix] = eval.sigma_min(Complex(grid.x[ix], y));
  });

  for (std::size_t iy = 0; iy < ny; ++iy) {
    if (mirror[iy] < 0) continue;
    const auto src = static_cast<std::size_t>(mirror[iy]);
    std::copy_n(grid.sigma_min.begin() + static_cast<std::ptrdiff_t>(src * nx), nx,
                grid.sigma_min.begin() + static_cast<std::ptrdiff_t>(iy * nx));
  }
  return grid;
}

LevelCurve level_curve(const PseudoGrid& grid, double epsilon, double t) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("level_curve needs eps > 0");
  if (!(t >= 0.0)) throw std::invalid_argument("level_curve needs t >= 0");
  LevelCurve curve;
  curve.epsilon = epsilon;
  curve.weighted_time = t;
  curve.x = grid.x;
  curve.y.assign(grid.x.size(), 0.0);

  // Upper-half rows, top first.
  std::vector<std::size_t> rows;
  for (std::size_t iy = grid.y.size(); iy-- > 0;)
    if (grid.y[iy] >= 0.0) rows.push_back(iy);
  if (rows.empty()) return curve;

  for (std::size_t ix = 0; ix < grid.x.size(); ++ix) {
    // Inside the level set when e^{xt}/σ ≥ 1/ε, i.e. σ ≤ ε e^{xt}.
    const double threshold = epsilon * std::exp(grid.x[ix] * t);
    const auto inside = [&](std::size_t iy) { return grid.at(iy, ix) <= threshold; };
    if (inside(rows.front())) {
      curve.y[ix] = grid.y[rows.front()];
      continue;
    }
    for (std::size_t k = 1; k < rows.size(); ++k) {
      if (!inside(rows[k])) continue;
      const double s_hi = grid.at(rows[k - 1], ix);
      const double s_lo = grid.at(rows[k], ix);
      const double y_hi = grid.y[rows[k - 1]];
      const double y_lo = grid.y[rows[k]];
      const double frac = s_hi == s_lo ? 0.0 : (threshold - s_lo) / (s_hi - s_lo);
      curve.y[ix] = y_lo + std::clamp(frac, 0.0, 1.0) * (y_hi - y_lo);
      break;
    }
  }
  return curve;
}

LevelCurve critical_curve(const LevelCurve& weighted, const LevelCurve& unweighted) {
  if (weighted.x.size() != unweighted.x.size()) {
    throw std::invalid_argument("critical_curve: curves have different column counts");
  }
  LevelCurve out = weighted;
  for (std::size_t i = 0; i < weighted.x.size(); ++i) {
    const double scale = std::max(1.0, std::abs(weighted.x[i]));
    if (std::abs(weighted.x[i] - unweighted.x[i]) > 1e-12 * scale) {
      throw std::invalid_argument("critical_curve: abscissae differ at column " +
                                  std::to_string(i));
    }
    out.y[i] = std::max(std::abs(weighted.y[i]), std::abs(unweighted.y[i]));
  }
  return out;
}

SingularitySet assemble_singularities(const LevelCurve& critical,
                                      std::span<const Complex> eigenvalues,
                                      std::span<const Complex> source_singularities, double z_l) {
  SingularitySet phi;
  for (std::size_t i = 0; i < critical.x.size(); ++i) {
    if (critical.x[i] >= z_l) phi.points.emplace_back(critical.x[i], std::abs(critical.y[i]));
  }
  for (const Complex& l : eigenvalues) {
    if (l.real() >= z_l) phi.points.emplace_back(l.real(), std::abs(l.imag()));
  }
  for (const Complex& s : source_singularities) {
    if (s.real() >= z_l) phi.points.emplace_back(s.real(), std::abs(s.imag()));
  }
  return phi;
}

double rightmost_real_crossing(const Operator& op, std::span<const Complex> eigenvalues,
                               double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("rightmost_real_crossing needs eps > 0");
  if (eigenvalues.empty()) throw std::invalid_argument("rightmost_real_crossing needs eigenvalues");
  double x0 = -std::numeric_limits<double>::infinity();
  for (const Complex& l : eigenvalues) x0 = std::max(x0, l.real());

  const ResolventNormEvaluator eval(op);
  const auto sigma = [&](double x) { return eval.sigma_min(Complex(x, 0.0)); };
  double lo = x0;
  double step = 1e-6 * (1.0 + std::abs(x0));
  double hi = x0 + step;
  while (sigma(hi) <= epsilon) {
    lo = hi;
    step *= 2.0;
    hi = x0 + step;
    if (step > 1e12) throw ConvergenceError("no ε-crossing found right of the spectrum");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (sigma(mid) <= epsilon ? lo : hi) = mid;
  }
  return hi;
}

void write_grid_csv(const PseudoGrid& grid, const std::string& path) {
  auto out = detail::open_output(path);
  out << "x,y,sigma_min\n";
  for (std::size_t iy = 0; iy < grid.y.size(); ++iy) {
    for (std::size_t ix = 0; ix < grid.x.size(); ++ix) {
      out << detail::sci(grid.x[ix]) << ',' << detail::sci(grid.y[iy]) << ','
          << detail::sci(grid.at(iy, ix)) << '\n';
    }
  }
}

void write_curve_csv(const LevelCurve& curve, const std::string& path) {
  auto out = detail::open_output(path);
  out << "x,y_level\n";
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    out << detail::sci(curve.x[i]) << ',' << detail::sci(curve.y[i]) << '\n';
  }
}

}  // namespace lapinv
