#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "projuq/calibration.hpp"
#include "projuq/cg.hpp"
#include "projuq/decomp.hpp"
#include "projuq/errors.hpp"
#include "projuq/matrix.hpp"
#include "projuq/parallel.hpp"
#include "projuq/projection.hpp"
#include "projuq/rng.hpp"

namespace projuq {

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace detail

/// Matrix Market reader: coordinate and array formats, real or integer
/// fields, general / symmetric / skew-symmetric storage. Symmetric storage is
/// expanded to the full matrix and duplicate coordinate entries are summed.
inline MatrixHandle read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_matrix_market: cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, "read_matrix_market: empty file");
  ++lineno;
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket")
    throw ParseError(lineno, "read_matrix_market: missing %%MatrixMarket banner");
  object = detail::lower(object);
  format = detail::lower(format);
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);
  if (object != "matrix")
    throw ParseError(lineno, "read_matrix_market: unsupported object '" + object + "'");
  if (format != "coordinate" && format != "array")
    throw ParseError(lineno, "read_matrix_market: unsupported format '" + format + "'");
  if (field != "real" && field != "integer")
    throw ParseError(lineno, "read_matrix_market: unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric")
    throw ParseError(lineno, "read_matrix_market: unsupported symmetry '" + symmetry + "'");

  auto next_data_line = [&](std::string& out) {
    while (std::getline(in, line)) {
      ++lineno;
      const auto pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos) continue;
      if (line[pos] == '%') continue;
      out = line;
      return true;
    }
    return false;
  };

  std::string sizes;
  if (!next_data_line(sizes)) throw ParseError(lineno, "read_matrix_market: missing size line");
  std::istringstream size_stream(sizes);

  if (format == "coordinate") {
    long long rows = 0, cols = 0, nnz = 0;
    if (!(size_stream >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
      throw ParseError(lineno, "read_matrix_market: bad size line");
    std::vector<std::tuple<std::size_t, std::size_t, double>> triplets;
    triplets.reserve(static_cast<std::size_t>(nnz) * (symmetry == "general" ? 1 : 2));
    for (long long k = 0; k < nnz; ++k) {
      std::string data;
      if (!next_data_line(data))
        throw ParseError(lineno, "read_matrix_market: truncated entry list");
      std::istringstream entry(data);
      long long i = 0, j = 0;
      double v = 0.0;
      if (!(entry >> i >> j >> v))
        throw ParseError(lineno, "read_matrix_market: malformed entry");
      if (i < 1 || j < 1 || i > rows || j > cols)
        throw ParseError(lineno, "read_matrix_market: index out of bounds");
      const std::size_t ii = static_cast<std::size_t>(i - 1);
      const std::size_t jj = static_cast<std::size_t>(j - 1);
      triplets.emplace_back(ii, jj, v);
      if (symmetry != "general" && ii != jj)
        triplets.emplace_back(jj, ii, symmetry == "symmetric" ? v : -v);
      if (symmetry == "skew-symmetric" && ii == jj && v != 0.0)
        throw ParseError(lineno, "read_matrix_market: nonzero diagonal in skew storage");
    }
    Csr csr = Csr::from_triplets(static_cast<std::size_t>(rows),
                                 static_cast<std::size_t>(cols), std::move(triplets));
    return MatrixHandle(std::move(csr), symmetry == "symmetric");
  }

  long long rows = 0, cols = 0;
  if (!(size_stream >> rows >> cols) || rows < 0 || cols < 0)
    throw ParseError(lineno, "read_matrix_market: bad size line");
  Mat dense(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  auto read_value = [&]() {
    std::string data;
    if (!next_data_line(data))
      throw ParseError(lineno, "read_matrix_market: truncated array data");
    std::istringstream entry(data);
    double v = 0.0;
    if (!(entry >> v)) throw ParseError(lineno, "read_matrix_market: malformed value");
    return v;
  };
  if (symmetry == "general") {
    for (long long j = 0; j < cols; ++j)
      for (long long i = 0; i < rows; ++i)
        dense(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = read_value();
  } else {
    if (rows != cols)
      throw ParseError(lineno, "read_matrix_market: symmetric array must be square");
    for (long long j = 0; j < cols; ++j)
      for (long long i = j; i < rows; ++i) {
        const double v = read_value();
        dense(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = v;
        dense(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) =
            symmetry == "symmetric" ? v : (i == j ? v : -v);
      }
  }
  return MatrixHandle(std::move(dense), symmetry == "symmetric");
}

/// Coordinate-format writer; symmetric matrices store the lower triangle.
inline void write_matrix_market(const std::string& path, const MatrixHandle& a) {
  std::ofstream out(path);
  if (!out) throw Error("write_matrix_market: cannot open " + path);
  const bool sym = a.symmetric();
  std::vector<std::tuple<std::size_t, std::size_t, double>> entries;
  auto push = [&](std::size_t i, std::size_t j, double v) {
    if (v == 0.0) return;
    if (sym && j > i) return;
    entries.emplace_back(i, j, v);
  };
  if (a.kind() == MatrixHandle::Kind::csr) {
    const Csr& c = a.csr();
    for (std::size_t i = 0; i < c.rows; ++i)
      for (std::size_t k = c.row_ptr[i]; k < c.row_ptr[i + 1]; ++k)
        push(i, c.col_idx[k], c.values[k]);
  } else {
    const Mat& d = a.dense();
    for (std::size_t j = 0; j < d.cols(); ++j)
      for (std::size_t i = 0; i < d.rows(); ++i) push(i, j, d(i, j));
  }
  out << "%%MatrixMarket matrix coordinate real " << (sym ? "symmetric" : "general")
      << "\n";
  out << a.rows() << " " << a.cols() << " " << entries.size() << "\n";
  char buf[64];
  for (const auto& [i, j, v] : entries) {
    std::snprintf(buf, sizeof(buf), "%zu %zu %.17g\n", i + 1, j + 1, v);
    out << buf;
  }
}

/// Fourth-order plate operator on the unit square, 13-point stencil
///
///         1
///      2 -8  2
///   1 -8 20 -8  1
///      2 -8  2
///         1
///
/// with clamped boundary (solution and normal derivative zero): eliminating
/// the reflected ghost values adds +1 to the centre weight for every
/// immediately adjacent boundary side. Grid has 2^levels - 1 interior nodes
/// per direction.
inline MatrixHandle biharmonic_matrix(std::size_t levels) {
  if (levels < 2) throw InvalidArgumentError("biharmonic_matrix: levels must be >= 2");
  const std::size_t nx = (std::size_t{1} << levels) - 1;
  const std::size_t n = nx * nx;
  auto idx = [nx](std::size_t ix, std::size_t iy) { return iy * nx + ix; };
  std::vector<std::tuple<std::size_t, std::size_t, double>> t;
  t.reserve(n * 13);
  const long long w = static_cast<long long>(nx);
  for (std::size_t iy = 0; iy < nx; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const std::size_t row = idx(ix, iy);
      double center = 20.0;
      if (ix == 0 || ix + 1 == nx) center += 1.0;
      if (iy == 0 || iy + 1 == nx) center += 1.0;
      t.emplace_back(row, row, center);
      auto add = [&](long long dx, long long dy, double v) {
        const long long jx = static_cast<long long>(ix) + dx;
        const long long jy = static_cast<long long>(iy) + dy;
        if (jx < 0 || jy < 0 || jx >= w || jy >= w) return;
        t.emplace_back(row, idx(static_cast<std::size_t>(jx), static_cast<std::size_t>(jy)), v);
      };
      add(-1, 0, -8.0);
      add(1, 0, -8.0);
      add(0, -1, -8.0);
      add(0, 1, -8.0);
      add(-1, -1, 2.0);
      add(-1, 1, 2.0);
      add(1, -1, 2.0);
      add(1, 1, 2.0);
      add(-2, 0, 1.0);
      add(2, 0, 1.0);
      add(0, -2, 1.0);
      add(0, 2, 1.0);
    }
  }
  Csr csr = Csr::from_triplets(n, n, std::move(t));
  return MatrixHandle(std::move(csr), /*symmetric=*/true);
}

/// Point-source heat problem on the unit square: bilinear (tensor tent)
/// elements on a uniform grid with 2^L - 1 unknowns per direction, four unit
/// sources on the corners of a centred square of radius r.
struct FemProblem {
  std::size_t level = 0;
  std::size_t nodes_per_side = 0;  // 2^L - 1
  MatrixHandle stiffness;          // (nodes^2) x (nodes^2) sparse SPD
  double target_temperature = 0.5;

  std::size_t size() const { return nodes_per_side * nodes_per_side; }
  double mesh_width() const { return 1.0 / static_cast<double>(nodes_per_side + 1); }
};

/// Stiffness of -Laplace with tensor-product linear elements: the exact
/// element integrals give A = S (x) M + M (x) S with 1D stiffness
/// S = (1/h) tridiag(-1, 2, -1) and 1D mass M = (h/6) tridiag(1, 4, 1).
inline FemProblem fem_assemble(std::size_t level) {
  if (level < 2) throw InvalidArgumentError("fem_assemble: level must be >= 2");
  const std::size_t nx = (std::size_t{1} << level) - 1;
  const double h = 1.0 / static_cast<double>(nx + 1);
  auto s_entry = [&](std::size_t i, std::size_t j) -> double {
    if (i == j) return 2.0 / h;
    if (i + 1 == j || j + 1 == i) return -1.0 / h;
    return 0.0;
  };
  auto m_entry = [&](std::size_t i, std::size_t j) -> double {
    if (i == j) return 4.0 * h / 6.0;
    if (i + 1 == j || j + 1 == i) return h / 6.0;
    return 0.0;
  };
  const std::size_t n = nx * nx;
  auto idx = [nx](std::size_t ix, std::size_t iy) { return iy * nx + ix; };
  std::vector<std::tuple<std::size_t, std::size_t, double>> t;
  t.reserve(n * 9);
  for (std::size_t iy = 0; iy < nx; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const std::size_t row = idx(ix, iy);
      for (long long dy = -1; dy <= 1; ++dy) {
        for (long long dx = -1; dx <= 1; ++dx) {
          const long long jx = static_cast<long long>(ix) + dx;
          const long long jy = static_cast<long long>(iy) + dy;
          if (jx < 0 || jy < 0 || jx >= static_cast<long long>(nx) ||
              jy >= static_cast<long long>(nx))
            continue;
          const std::size_t ux = static_cast<std::size_t>(jx);
          const std::size_t uy = static_cast<std::size_t>(jy);
          const double v = s_entry(ix, ux) * m_entry(iy, uy) +
                           m_entry(ix, ux) * s_entry(iy, uy);
          if (v != 0.0) t.emplace_back(row, idx(ux, uy), v);
        }
      }
    }
  }
  FemProblem p;
  p.level = level;
  p.nodes_per_side = nx;
  p.stiffness = MatrixHandle(Csr::from_triplets(n, n, std::move(t)), /*symmetric=*/true);
  return p;
}

/// Value of the tent function centred at node position `node` (1-based grid
/// index times h) evaluated at x.
inline double tent_value(double x, double node, double h) {
  const double d = std::abs(x - node);
  return d >= h ? 0.0 : 1.0 - d / h;
}

/// Load vector of the four point sources at
/// (1/2 +- r cos(pi/4), 1/2 +- r sin(pi/4)); each delta integrates the
/// basis functions exactly, touching at most four tents per source.
inline Vec fem_rhs(const FemProblem& p, double r) {
  const double c = r * std::sqrt(0.5);
  const double half = 0.5;
  const std::size_t nx = p.nodes_per_side;
  const double h = p.mesh_width();
  Vec b(p.size(), 0.0);
  const double sx[4] = {half + c, half - c, half - c, half + c};
  const double sy[4] = {half + c, half + c, half - c, half - c};
  for (int s = 0; s < 4; ++s) {
    if (sx[s] <= 0.0 || sx[s] >= 1.0 || sy[s] <= 0.0 || sy[s] >= 1.0)
      throw InvalidArgumentError("fem_rhs: source outside the domain");
    // tents overlapping the source in each direction
    const long long ix0 = static_cast<long long>(std::floor(sx[s] / h));
    const long long iy0 = static_cast<long long>(std::floor(sy[s] / h));
    for (long long ix = ix0; ix <= ix0 + 1; ++ix) {
      if (ix < 1 || ix > static_cast<long long>(nx)) continue;
      const double wx = tent_value(sx[s], static_cast<double>(ix) * h, h);
      if (wx == 0.0) continue;
      for (long long iy = iy0; iy <= iy0 + 1; ++iy) {
        if (iy < 1 || iy > static_cast<long long>(nx)) continue;
        const double wy = tent_value(sy[s], static_cast<double>(iy) * h, h);
        if (wy == 0.0) continue;
        b[static_cast<std::size_t>(iy - 1) * nx + static_cast<std::size_t>(ix - 1)] +=
            wx * wy;
      }
    }
  }
  return b;
}

/// Mean squared deviation of the temperature field from the target.
inline double pde_loss(const Vec& temperature, double target) {
  if (temperature.empty()) throw InvalidArgumentError("pde_loss: empty field");
  double s = 0.0;
  for (double t : temperature) {
    const double d = t - target;
    s += d * d;
  }
  return s / static_cast<double>(temperature.size());
}

/// Loss curve over the source radius: exact values along with the posterior
/// mean and standard deviation of the loss under the probabilistic solve.
struct LossCurve {
  Vec r_grid;
  Vec exact;
  Vec mean;
  Vec sd;
  std::size_t m = 0;
};

struct PdeBandOptions {
  std::size_t samples = 30;
  std::size_t observations = 1;  // k for the scale calibration
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Direct solver for the exact curve: dense LU for n <= 5000, tightly
/// converged CG above.
class ExactSolver {
 public:
  explicit ExactSolver(const MatrixHandle& a) : a_(&a) {
    if (a.rows() <= 5000) lu_.emplace(a.densify());
  }

  Vec solve(const Vec& b) const {
    if (lu_) return lu_->solve(b);
    CgKeep keep;
    keep.iterate_stride = 0;
    keep.residual_vectors = false;
    keep.directions_hi = 0;
    keep.stop_rel_residual = 1e-12;
    CgTrace t = cg(*a_, b, Vec(b.size(), 0.0), 20 * b.size(), keep);
    return t.solution();
  }

 private:
  const MatrixHandle* a_;
  std::optional<LuFactor> lu_;
};

/// Uncertainty band of the loss along the radius grid. The scale is
/// calibrated once for the fixed stiffness matrix (statistic Z, standard
/// normal synthetic solutions), then every radius reuses it: Krylov solve,
/// posterior samples through the orthogonal projector, loss per sample.
inline LossCurve pde_uncertainty_band(const FemProblem& problem, const Vec& r_grid,
                                      std::size_t m, const PdeBandOptions& options = {}) {
  const std::size_t n = problem.size();
  if (m > n) throw InvalidArgumentError("pde_uncertainty_band: m exceeds problem size");
  if (options.samples < 2)
    throw InvalidArgumentError("pde_uncertainty_band: need at least 2 samples");
  const MatrixHandle& a = problem.stiffness;

  double scale = 0.0;
  if (m < n) {
    Rng rng = Rng::child(options.seed, 0);
    CalibrationResult calib = calibrate_by_observation(
        a, krylov_proj_builder(KrylovVariant::cg_like),
        [n](Rng& r) {
          Vec x(n);
          for (double& c : x) c = r.gaussian();
          return x;
        },
        m, options.observations, ScalePosterior(), StatisticKind::Z, rng);
    scale = calib.point_scale();
  }

  ExactSolver direct(a);
  LossCurve curve;
  curve.m = m;
  curve.r_grid = r_grid;
  curve.exact.assign(r_grid.size(), 0.0);
  curve.mean.assign(r_grid.size(), 0.0);
  curve.sd.assign(r_grid.size(), 0.0);

  parallel_for(r_grid.size(), options.threads, [&](std::size_t ri) {
    Rng rng = Rng::child(options.seed, 1 + ri);
    const double r = curve.r_grid[ri];
    Vec b = fem_rhs(problem, r);
    curve.exact[ri] = pde_loss(direct.solve(b), problem.target_temperature);
    if (m == n) {
      curve.mean[ri] = curve.exact[ri];
      curve.sd[ri] = 0.0;
      return;
    }
    ProjectionPair pair = krylov_pair(a, b, m, KrylovVariant::cg_like);
    Vec xt = petrov_galerkin_solve(a, b, Vec(n, 0.0), pair);
    FactoredProjector p2 = make_orthogonal_projector(a, pair.constraint_basis());
    const double s_std = std::sqrt(scale);
    double acc = 0.0, acc2 = 0.0;
    for (std::size_t s = 0; s < options.samples; ++s) {
      Vec xi(n);
      for (double& c : xi) c = rng.gaussian();
      Vec noise = p2.apply(xi);
      Vec draw = xt;
      axpy(s_std, noise, draw);
      const double loss = pde_loss(draw, problem.target_temperature);
      acc += loss;
      acc2 += loss * loss;
    }
    const double count = static_cast<double>(options.samples);
    const double mean = acc / count;
    const double var = std::max(0.0, acc2 / count - mean * mean);
    curve.mean[ri] = mean;
    curve.sd[ri] = std::sqrt(var);
  });
  return curve;
}

}  // namespace projuq
