#include "wattcast/refine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "wattcast/errors.hpp"
#include "wattcast/nnls.hpp"

namespace wattcast {

void CorrectionCoeffs::validate() const {
  if (lambda_p < 0 || lambda_m < 0 || lambda_e < 0 || epsilon < 0)
    throw InputError("correction coefficients must be non-negative");
}

CorrectedTimeline correct_latency(const PhaseTimeline &pt, const CorrectionCoeffs &coeffs) {
  coeffs.validate();
  const double lam[3] = {coeffs.lambda_p, coeffs.lambda_m, coeffs.lambda_e};
  const double waves = static_cast<double>(pt.dist.waves);

  CorrectedTimeline out;
  out.t_p = lam[0] * waves * pt.t_p;
  out.t_m = lam[1] * waves * pt.t_m;
  out.t_e = lam[2] * waves * pt.t_e;
  out.latency = out.t_p + out.t_m + out.t_e + coeffs.epsilon;
  for (int phase = 0; phase < 3; ++phase)
    for (int m = 0; m < kModuleCount; ++m)
      out.active[phase][m] = lam[phase] * waves * pt.active[phase][m];
  return out;
}

CorrectedAggregate corrected_aggregate(const PhaseTimeline &pt, const CorrectionCoeffs &coeffs) {
  CorrectedAggregate agg;
  agg.detail = correct_latency(pt, coeffs);
  if (!(agg.detail.latency > 0))
    throw InputError("corrected_aggregate: kernel has zero corrected latency");
  agg.latency = agg.detail.latency;

  const double lazy_ratio =
      pt.dist.tbs_on_busy > 0
          ? static_cast<double>(pt.dist.tbs_on_lazy) / static_cast<double>(pt.dist.tbs_on_busy)
          : 0.0;
  const double num_sms = pt.dist.busy_sms + pt.dist.lazy_sms;

  ModuleArray alpha{};
  for (int m = 0; m < kModuleCount; ++m) {
    double busy_active = 0.0;
    for (int phase = 0; phase < 3; ++phase) busy_active += agg.detail.active[phase][m];
    const double busy_alpha = busy_active / agg.latency;
    const double a =
        (pt.dist.busy_sms * busy_alpha + pt.dist.lazy_sms * busy_alpha * lazy_ratio) / num_sms;
    alpha[m] = std::clamp(a, 0.0, 1.0);
  }
  agg.utilization = Utilization{alpha};
  return agg;
}

LatencySample LatencySample::from_timeline(const PhaseTimeline &pt, double measured) {
  return LatencySample{pt.total_prologue(), pt.total_mainloop(), pt.total_epilogue(),
                       pt.monolithic, measured};
}

LatencyFit fit_latency_coeffs(const std::vector<LatencySample> &samples) {
  if (samples.empty()) throw FitError("latency fit: no samples");
  const bool monolithic = samples.front().monolithic;
  for (const auto &s : samples)
    if (s.monolithic != monolithic)
      throw FitError("latency fit: mixed monolithic and phased samples in one group");

  const int required = monolithic ? 2 : 4;
  if (static_cast<int>(samples.size()) < required) {
    std::ostringstream os;
    os << "latency fit: under-determined group, " << samples.size() << " samples but "
       << required << " required";
    throw FitError(os.str());
  }

  // Columns: phased -> [t_p, t_m, t_e, 1]; monolithic -> [t_m, 1].
  const std::vector<std::string> names =
      monolithic ? std::vector<std::string>{"lambda_m", "epsilon"}
                 : std::vector<std::string>{"lambda_p", "lambda_m", "lambda_e", "epsilon"};
  const int ncols = static_cast<int>(names.size());
  const int rows = static_cast<int>(samples.size());

  Eigen::MatrixXd A(rows, ncols);
  Eigen::VectorXd b(rows);
  for (int i = 0; i < rows; ++i) {
    const auto &s = samples[static_cast<size_t>(i)];
    if (monolithic) {
      A(i, 0) = s.t_m;
      A(i, 1) = 1.0;
    } else {
      A(i, 0) = s.t_p;
      A(i, 1) = s.t_m;
      A(i, 2) = s.t_e;
      A(i, 3) = 1.0;
    }
    b(i) = s.measured;
  }

  LatencyFit fit;
  fit.sample_count = rows;

  // Defaults applied to any column we cannot identify: lambda = 1, epsilon = 0.
  std::vector<double> defaults(static_cast<size_t>(ncols), 1.0);
  defaults.back() = 0.0;
  std::vector<bool> forced(static_cast<size_t>(ncols), false);

  // Phases carrying almost no time are unidentifiable under noise and can
  // only destabilize the rest; hold their lambda at 1. Worst-case prediction
  // impact is bounded by the mass threshold.
  if (!monolithic) {
    double total_mass = 0.0;
    for (int j = 0; j + 1 < ncols; ++j) total_mass += A.col(j).sum();
    for (int j = 0; j + 1 < ncols; ++j) {
      if (A.col(j).sum() < 0.02 * total_mass) {
        forced[static_cast<size_t>(j)] = true;
        std::ostringstream os;
        os << "latency fit: " << names[static_cast<size_t>(j)]
           << " held at 1 (phase below 2% of total time)";
        fit.warnings.push_back(os.str());
      }
    }
  }

  // Rank-deficient designs: keep the QR pivot-leading columns, hold the rest
  // at their defaults and fold their contribution into the target.
  {
    Eigen::MatrixXd probe = A;
    for (int j = 0; j < ncols; ++j)
      if (forced[static_cast<size_t>(j)]) probe.col(j).setZero();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(probe);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    const int unforced =
        ncols - static_cast<int>(std::count(forced.begin(), forced.end(), true));
    if (rank < unforced) {
      std::vector<bool> pivot(static_cast<size_t>(ncols), false);
      const auto perm = qr.colsPermutation().indices();
      for (int i = 0; i < rank; ++i) pivot[static_cast<size_t>(perm[i])] = true;
      std::ostringstream os;
      os << "latency fit: rank-deficient design (rank " << rank << " of " << unforced
         << "), holding collinear columns at defaults:";
      for (int j = 0; j < ncols; ++j) {
        if (!forced[static_cast<size_t>(j)] && !pivot[static_cast<size_t>(j)]) {
          forced[static_cast<size_t>(j)] = true;
          os << ' ' << names[static_cast<size_t>(j)];
        }
      }
      fit.warnings.push_back(os.str());
    }
  }

  std::vector<int> kept;
  for (int j = 0; j < ncols; ++j) {
    if (forced[static_cast<size_t>(j)]) {
      fit.fixed_columns.push_back(names[static_cast<size_t>(j)]);
      b -= defaults[static_cast<size_t>(j)] * A.col(j);
    } else {
      kept.push_back(j);
    }
  }

  // Equilibrate columns so seconds-scale phases and the constant column mix.
  Eigen::MatrixXd Ak(rows, static_cast<Eigen::Index>(kept.size()));
  Eigen::VectorXd scale(static_cast<Eigen::Index>(kept.size()));
  for (size_t j = 0; j < kept.size(); ++j) {
    const double norm = A.col(kept[j]).cwiseAbs().maxCoeff();
    scale[static_cast<Eigen::Index>(j)] = norm > 0 ? norm : 1.0;
    Ak.col(static_cast<Eigen::Index>(j)) = A.col(kept[j]) / scale[static_cast<Eigen::Index>(j)];
  }

  const NnlsResult sol = nnls(Ak, b);

  std::vector<double> coeff(defaults);
  for (size_t j = 0; j < kept.size(); ++j)
    coeff[static_cast<size_t>(kept[j])] =
        sol.x[static_cast<Eigen::Index>(j)] / scale[static_cast<Eigen::Index>(j)];

  if (monolithic) {
    fit.coeffs.lambda_m = coeff[0];
    fit.coeffs.epsilon = coeff[1];
  } else {
    fit.coeffs.lambda_p = coeff[0];
    fit.coeffs.lambda_m = coeff[1];
    fit.coeffs.lambda_e = coeff[2];
    fit.coeffs.epsilon = coeff[3];
  }

  // Residual against the original (unreduced) system.
  Eigen::VectorXd full(ncols);
  for (int j = 0; j < ncols; ++j) full[j] = coeff[static_cast<size_t>(j)];
  Eigen::VectorXd b0(rows);
  for (int i = 0; i < rows; ++i) b0(i) = samples[static_cast<size_t>(i)].measured;
  fit.rmse = std::sqrt((A * full - b0).squaredNorm() / rows);
  return fit;
}

} // namespace wattcast
