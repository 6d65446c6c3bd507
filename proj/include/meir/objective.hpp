#pragma once

#include <span>

#include "meir/image.hpp"
#include "meir/transform.hpp"

namespace meir {

// Weights of the linear-elastic regularizer. alpha = 0 disables it.
struct ElasticConfig {
  double alpha = 10.0;
  double lambda = 0.0;
  double mu = 1.0;
};

// Midpoint-quadrature SSD: 0.5 * cell_area * sum (t - r)^2.
double ssd(std::span<const double> r_vals, std::span<const double> t_vals,
           double cell_area);

// Normalized dissimilarity ||T(phi) - R|| / ||R|| in L2 over the full grid.
double ndm(const ScalarImage& r_img, const ScalarImage& t_warped);

// Discrete elastic energy with forward differences; the last difference row
// along each axis is replicated so linear fields are differenced exactly and
// constants stay in the null space.
double elastic_energy(const DisplacementField& u, const ElasticConfig& cfg);

// A u with elastic_energy(u) = 0.5 <u, A u>; symmetric positive semidefinite.
DisplacementField elastic_operator_apply(const DisplacementField& u,
                                         const ElasticConfig& cfg);

}  // namespace meir
