#pragma once

#include "forestcs/signal.hpp"

#include <vector>

namespace forestcs {

/// 10 log10(var(x0) / MSE(x0, x)) in dB, with the population variance
/// (divide by the count). Returns +infinity when x == x0 exactly and throws
/// std::domain_error when x0 is constant.
double snr_db(const Eigen::Ref<const Vector>& truth, const Eigen::Ref<const Vector>& estimate);

/// F1 score between `truth` (indices) and {i : |theta_i| > fraction * max|theta|}.
double support_f1(const std::vector<Index>& truth, const Vector& theta, double threshold_fraction);

/// Indices i with |theta_i| > fraction * max|theta|.
std::vector<Index> detected_support(const Vector& theta, double threshold_fraction);

} // namespace forestcs
