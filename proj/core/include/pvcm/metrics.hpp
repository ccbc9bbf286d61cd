#pragma once

#include <Eigen/Dense>

#include "pvcm/dictionary.hpp"
#include "pvcm/image.hpp"
#include "pvcm/spatial.hpp"

namespace pvcm {

struct Problem;

/// Objective terms: 0.5 ||m - (I (x) K) f||^2 and (lambda/2) ||D f||^2.
struct CostBreakdown {
  double data_term = 0.0;
  double penalty_term = 0.0;
  double total = 0.0;
};

/// Objective value with the unapproximated dictionary. The penalty is the
/// neighbor double sum, i.e. lambda * sum over unordered edges of
/// ||f_n - f_m||^2.
CostBreakdown cost(const Dictionary& dict, const MeasuredStack& data, const SpatialGraph& graph,
                   double lambda, const Eigen::MatrixXd& f);
CostBreakdown cost(const Problem& problem, const Eigen::MatrixXd& f);

/// ||f_k - f_star|| / ||f_star|| over the flattened arrays.
double dfcs(const Eigen::MatrixXd& f_k, const Eigen::MatrixXd& f_star);

}  // namespace pvcm
