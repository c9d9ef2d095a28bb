#pragma once

#include <Eigen/Dense>

namespace hemlr {

    using Matrix = Eigen::MatrixXd;
    using Vector = Eigen::VectorXd;

}  // namespace hemlr
