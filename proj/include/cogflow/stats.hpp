#pragma once

#include <cstddef>
#include <vector>

#include "cogflow/field.hpp"

namespace cogflow {

/// Sample mean and covariance with standard errors. The covariance SE of
/// entry (i, j) is the standard error of the mean of the centred products.
struct SampleMoments {
  std::size_t count = 0;
  Vector mean;
  Matrix covariance;
  Vector mean_se;
  Matrix covariance_se;
};

SampleMoments sample_moments(const std::vector<Vector>& samples);

/// |empirical - reference| / se, elementwise maximum. Zero-SE entries count
/// as within tolerance only when the gap is below `slack`.
double max_z_score(const Vector& empirical, const Vector& reference, const Vector& se, double slack = 1e-9);
double max_z_score(const Matrix& empirical, const Matrix& reference, const Matrix& se, double slack = 1e-9);

}  // namespace cogflow
