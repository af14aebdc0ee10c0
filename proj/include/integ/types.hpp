#pragma once

#include <Eigen/Dense>

namespace integ {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace integ
