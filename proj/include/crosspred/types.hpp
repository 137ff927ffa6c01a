#pragma once

#include <Eigen/Dense>

namespace crosspred {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

enum class Objective { MaxReturn, MaxSharpe };
enum class Restriction { Cross, Self };

inline const char* to_string(Objective o) { return o == Objective::MaxReturn ? "MR" : "MS"; }
inline const char* to_string(Restriction r) { return r == Restriction::Cross ? "cross" : "self"; }

}  // namespace crosspred
