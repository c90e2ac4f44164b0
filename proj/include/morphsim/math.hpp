#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <cmath>

namespace morphsim {

template <class Real>
using Vec2T = Eigen::Matrix<Real, 2, 1>;
template <class Real>
using Mat2T = Eigen::Matrix<Real, 2, 2>;

using Vec2 = Vec2T<double>;
using Mat2 = Mat2T<double>;
using Vec2i = Eigen::Vector2i;

inline Mat2 rotation(double radians) {
    const double c = std::cos(radians), s = std::sin(radians);
    Mat2 r;
    r << c, -s, s, c;
    return r;
}

}  // namespace morphsim
