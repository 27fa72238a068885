#include "wattcast/power.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "wattcast/errors.hpp"
#include "wattcast/nnls.hpp"

namespace wattcast {

Utilization Utilization::checked(const ModuleArray &raw, int *clamped) {
  Utilization u;
  for (int m = 0; m < kModuleCount; ++m) {
    double a = raw[m];
    if (a < 0 || a > 1.0 + 1e-6) {
      std::ostringstream os;
      os << "utilization for " << to_string(static_cast<Module>(m)) << " out of bounds: " << a;
      throw InputError(os.str());
    }
    if (a > 1.0) {
      a = 1.0;
      if (clamped) ++*clamped;
    }
    u.alpha[m] = a;
  }
  return u;
}

void PowerCoeffs::validate() const {
  for (double v : c)
    if (v < 0) throw InputError("power coefficients must be non-negative");
}

namespace {

/// Design-matrix entry for one module: what multiplies its C coefficient.
double column_value(Module m, const Utilization &u, double core_v, double core_f, double dram_v,
                    double dram_f, double dram_scale) {
  if (m == Module::Dram) return dram_scale * u[m] * dram_v * dram_v * dram_f;
  return u[m] * core_v * core_v * core_f;
}

} // namespace

double dynamic_power(const Utilization &u, const PowerCoeffs &coeffs, const GpuConfig &gpu,
                     const PowerConfig &power) {
  coeffs.validate();
  double p = 0.0;
  for (int m = 0; m < kModuleCount; ++m)
    p += at(coeffs.c, static_cast<Module>(m)) *
         column_value(static_cast<Module>(m), u, power.core_voltage, power.core_freq,
                      gpu.dram_voltage, gpu.dram_freq, power.dram_energy_scale);
  return p;
}

TotalPower total_power(const Utilization &u, const PowerCoeffs &coeffs, const GpuConfig &gpu,
                       const PowerConfig &power) {
  TotalPower tp;
  tp.dynamic = dynamic_power(u, coeffs, gpu, power);
  tp.idle = idle_power_at(power, power.core_freq);
  tp.total = tp.dynamic + tp.idle;
  return tp;
}

PowerFit fit_power_coeffs(const std::vector<PowerSample> &samples) {
  const int rows = static_cast<int>(samples.size());
  if (rows < 7) {
    std::ostringstream os;
    os << "power fit: under-determined group, " << rows << " samples but 7 required";
    throw FitError(os.str());
  }

  PowerFit fit;
  fit.sample_count = rows;
  {
    std::set<double> freqs;
    for (const auto &s : samples) freqs.insert(s.core_freq);
    fit.distinct_frequencies = static_cast<int>(freqs.size());
    if (fit.distinct_frequencies < 2)
      fit.warnings.push_back(
          "power fit: samples span a single core frequency; coefficients may not "
          "generalize across DVFS points");
  }

  Eigen::MatrixXd A(rows, kModuleCount);
  Eigen::VectorXd b(rows);
  for (int i = 0; i < rows; ++i) {
    const auto &s = samples[static_cast<size_t>(i)];
    for (int m = 0; m < kModuleCount; ++m)
      A(i, m) = column_value(static_cast<Module>(m), s.utilization, s.core_voltage, s.core_freq,
                             s.dram_voltage, s.dram_freq, s.dram_energy_scale);
    b(i) = s.measured_power - s.idle_power;
  }

  // Merge proportional columns into one fitted coefficient (union-find over
  // near-unit cosine similarity); zero columns fit to zero.
  std::vector<double> norms(kModuleCount);
  for (int m = 0; m < kModuleCount; ++m) norms[static_cast<size_t>(m)] = A.col(m).norm();
  std::vector<int> parent(kModuleCount);
  for (int m = 0; m < kModuleCount; ++m) parent[static_cast<size_t>(m)] = m;
  auto find = [&](int x) {
    while (parent[static_cast<size_t>(x)] != x) x = parent[static_cast<size_t>(x)];
    return x;
  };
  for (int i = 0; i < kModuleCount; ++i) {
    if (norms[static_cast<size_t>(i)] == 0) continue;
    for (int j = i + 1; j < kModuleCount; ++j) {
      if (norms[static_cast<size_t>(j)] == 0) continue;
      const double cosine =
          A.col(i).dot(A.col(j)) / (norms[static_cast<size_t>(i)] * norms[static_cast<size_t>(j)]);
      if (cosine > 1.0 - 1e-9) parent[static_cast<size_t>(find(j))] = find(i);
    }
  }

  std::vector<int> group_col(kModuleCount, -1);
  std::vector<int> roots;
  for (int m = 0; m < kModuleCount; ++m) {
    if (norms[static_cast<size_t>(m)] == 0) continue;
    const int root = find(m);
    if (group_col[static_cast<size_t>(root)] < 0) {
      group_col[static_cast<size_t>(root)] = static_cast<int>(roots.size());
      roots.push_back(root);
    }
  }
  for (int root : roots) {
    std::vector<Module> members;
    for (int m = 0; m < kModuleCount; ++m)
      if (norms[static_cast<size_t>(m)] > 0 && find(m) == root)
        members.push_back(static_cast<Module>(m));
    if (members.size() > 1) {
      fit.merged_columns.push_back(members);
      std::ostringstream os;
      os << "power fit: merged collinear columns into one coefficient:";
      for (Module m : members) os << ' ' << to_string(m);
      fit.warnings.push_back(os.str());
    }
  }

  const int ncols = static_cast<int>(roots.size());
  if (ncols == 0) {
    // Every activity factor is zero; the dynamic residual fits to nothing.
    fit.coeffs = PowerCoeffs{};
    fit.rmse = std::sqrt(b.squaredNorm() / rows);
    return fit;
  }

  Eigen::MatrixXd Am = Eigen::MatrixXd::Zero(rows, ncols);
  for (int m = 0; m < kModuleCount; ++m) {
    if (norms[static_cast<size_t>(m)] == 0) continue;
    Am.col(group_col[static_cast<size_t>(find(m))]) += A.col(m);
  }

  Eigen::VectorXd scale(ncols);
  for (int j = 0; j < ncols; ++j) {
    const double norm = Am.col(j).cwiseAbs().maxCoeff();
    scale[j] = norm > 0 ? norm : 1.0;
    Am.col(j) /= scale[j];
  }

  const NnlsResult sol = nnls(Am, b);

  for (int m = 0; m < kModuleCount; ++m) {
    if (norms[static_cast<size_t>(m)] == 0) continue;
    const int j = group_col[static_cast<size_t>(find(m))];
    fit.coeffs.c[static_cast<size_t>(m)] = sol.x[j] / scale[j];
  }
  fit.rmse = std::sqrt(std::pow(sol.residual_norm, 2) / rows);
  return fit;
}

} // namespace wattcast
