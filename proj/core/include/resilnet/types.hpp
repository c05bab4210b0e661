#pragma once

#include <Eigen/Dense>

namespace resilnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace resilnet
