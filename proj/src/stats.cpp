#include "cogflow/stats.hpp"

#include <cmath>
#include <limits>

#include "cogflow/errors.hpp"

namespace cogflow {

SampleMoments sample_moments(const std::vector<Vector>& samples) {
  if (samples.size() < 2) throw ContractError("sample moments need at least two samples");
  const auto d = samples.front().size();
  const double n = static_cast<double>(samples.size());

  SampleMoments m;
  m.count = samples.size();
  m.mean = Vector::Zero(d);
  for (const auto& x : samples) m.mean += x;
  m.mean /= n;

  Matrix second = Matrix::Zero(d, d);
  Matrix fourth = Matrix::Zero(d, d);
  for (const auto& x : samples) {
    const Vector c = x - m.mean;
    const Matrix prod = c * c.transpose();
    second += prod;
    fourth += prod.cwiseProduct(prod);
  }
  m.covariance = second / (n - 1.0);
  const Matrix mean_prod = second / n;
  const Matrix prod_var = (fourth / n - mean_prod.cwiseProduct(mean_prod)) * (n / (n - 1.0));
  m.covariance_se = (prod_var.cwiseMax(0.0) / n).cwiseSqrt();
  m.mean_se = (m.covariance.diagonal().cwiseMax(0.0) / n).cwiseSqrt();
  return m;
}

namespace {

double z_of(double empirical, double reference, double se, double slack) {
  const double gap = std::abs(empirical - reference);
  if (gap <= slack) return 0.0;
  if (se > 0.0) return (gap - slack) / se;
  return std::numeric_limits<double>::max();
}

}  // namespace

double max_z_score(const Vector& empirical, const Vector& reference, const Vector& se, double slack) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < empirical.size(); ++i) worst = std::max(worst, z_of(empirical[i], reference[i], se[i], slack));
  return worst;
}

double max_z_score(const Matrix& empirical, const Matrix& reference, const Matrix& se, double slack) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < empirical.rows(); ++i) {
    for (Eigen::Index j = 0; j < empirical.cols(); ++j) {
      worst = std::max(worst, z_of(empirical(i, j), reference(i, j), se(i, j), slack));
    }
  }
  return worst;
}

}  // namespace cogflow
