#pragma once

#include <Eigen/Dense>

namespace hetvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace hetvar
