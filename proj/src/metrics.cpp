#include "forestcs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace forestcs {

double snr_db(const Eigen::Ref<const Vector>& truth, const Eigen::Ref<const Vector>& estimate)
{
    require_size(estimate.size(), truth.size(), "snr_db");
    if (truth.size() == 0) {
        throw std::domain_error("snr_db: empty signal");
    }
    const double n = static_cast<double>(truth.size());
    const double mean = truth.mean();
    const double variance = (truth.array() - mean).square().sum() / n;
    if (!(variance > 0.0)) {
        throw std::domain_error("snr_db: ground truth has zero variance");
    }
    const double mse = (truth - estimate).squaredNorm() / n;
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(variance / mse);
}

std::vector<Index> detected_support(const Vector& theta, double threshold_fraction)
{
    if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0)) {
        throw std::invalid_argument("support threshold fraction must be in (0, 1)");
    }
    std::vector<Index> support;
    const double peak = theta.size() ? theta.cwiseAbs().maxCoeff() : 0.0;
    if (peak == 0.0) {
        return support;
    }
    const double cut = threshold_fraction * peak;
    for (Index i = 0; i < theta.size(); ++i) {
        if (std::abs(theta[i]) > cut) {
            support.push_back(i);
        }
    }
    return support;
}

double support_f1(const std::vector<Index>& truth, const Vector& theta, double threshold_fraction)
{
    if (truth.empty()) {
        throw std::invalid_argument("support_f1: empty truth set");
    }
    const auto found = detected_support(theta, threshold_fraction);
    std::vector<Index> sorted_truth = truth;
    std::sort(sorted_truth.begin(), sorted_truth.end());
    sorted_truth.erase(std::unique(sorted_truth.begin(), sorted_truth.end()), sorted_truth.end());
    std::vector<Index> common;
    std::set_intersection(sorted_truth.begin(), sorted_truth.end(), found.begin(), found.end(),
                          std::back_inserter(common));
    const double tp = static_cast<double>(common.size());
    const double denom = static_cast<double>(sorted_truth.size() + found.size());
    return 2.0 * tp / denom;
}

} // namespace forestcs
