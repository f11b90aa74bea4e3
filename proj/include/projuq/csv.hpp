#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "projuq/calibration.hpp"
#include "projuq/cg.hpp"
#include "projuq/distributions.hpp"
#include "projuq/errors.hpp"
#include "projuq/problems.hpp"

namespace projuq {

/// 17 significant digits: enough to round-trip doubles exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Minimal CSV emitter with a header row and deterministic float formatting.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw Error("CsvWriter: cannot open " + path);
    columns_ = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
      out_ << header[i] << (i + 1 < header.size() ? "," : "\n");
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw InvalidArgumentError("CsvWriter: column mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i)
      out_ << cells[i] << (i + 1 < cells.size() ? "," : "\n");
  }

 private:
  std::ofstream out_;
  std::size_t columns_ = 0;
};

inline void write_density_csv(const std::string& path, const DensityEstimate& d) {
  CsvWriter csv(path, {"grid", "value"});
  for (std::size_t i = 0; i < d.grid.size(); ++i)
    csv.row({format_double(d.grid[i]), format_double(d.values[i])});
}

inline void write_cg_trace_csv(const std::string& path, const CgTrace& trace) {
  CsvWriter csv(path, {"iteration", "residual_norm", "gamma", "gain"});
  for (std::size_t i = 1; i <= trace.iterations(); ++i)
    csv.row({std::to_string(i), format_double(trace.residual_norm(i)),
             format_double(trace.gamma(i)), format_double(trace.gain(i))});
}

inline void write_loss_curve_csv(const std::string& path, const LossCurve& curve) {
  CsvWriter csv(path, {"r", "exact", "mean", "sd"});
  for (std::size_t i = 0; i < curve.r_grid.size(); ++i)
    csv.row({format_double(curve.r_grid[i]), format_double(curve.exact[i]),
             format_double(curve.mean[i]), format_double(curve.sd[i])});
}

inline void write_samples_csv(const std::string& path, const std::vector<double>& samples) {
  CsvWriter csv(path, {"sample"});
  for (double s : samples) csv.row({format_double(s)});
}

/// JSON snippet for a calibration outcome, matching the documented schema.
inline std::string calibration_to_json(const CalibrationResult& result) {
  std::string json = "{\n";
  json += "  \"alpha\": " + format_double(result.prior.alpha) + ",\n";
  json += "  \"beta\": " + format_double(result.prior.beta) + ",\n";
  json += "  \"alpha_post\": " + format_double(result.posterior.alpha) + ",\n";
  json += "  \"beta_post\": " + format_double(result.posterior.beta) + ",\n";
  json += std::string("  \"statistic\": \"") + to_string(result.statistic) + "\",\n";
  json += "  \"k\": " + std::to_string(result.observations) + ",\n";
  json += "  \"point_scale\": ";
  json += result.posterior.alpha > 1.0 ? format_double(result.point_scale()) : "null";
  json += "\n}\n";
  return json;
}

}  // namespace projuq
