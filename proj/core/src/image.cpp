#include "pvcm/image.hpp"

#include "pvcm/error.hpp"

namespace pvcm {

MeasuredStack::MeasuredStack(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (!values_.allFinite()) throw InvalidArgument("measured data must be finite");
}

}  // namespace pvcm
