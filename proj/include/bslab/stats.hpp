#ifndef BSLAB_STATS_HPP
#define BSLAB_STATS_HPP

#include <cstddef>
#include <vector>

namespace bslab {

/// Pearson statistic sum (o - e)^2 / e over cells with expected > 0.
double chi2_statistic(const std::vector<double>& observed,
                      const std::vector<double>& expected);

/// Wilson-Hilferty approximation of the chi-square quantile; accurate to a
/// fraction of a percent for the dof used here (hundreds).
double chi2_quantile(double p, int dof);

/// Two-sample Kolmogorov-Smirnov distance (sup of empirical CDF gap).
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Total variation distance between two mass vectors: half the L1 gap.
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

struct MeanVar {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    std::size_t count = 0;
};

MeanVar mean_variance(const std::vector<double>& samples);

/// Pearson correlation of two equal-length samples.
double correlation(const std::vector<double>& a, const std::vector<double>& b);

/// Standard normal quantile (Acklam's rational approximation).
double normal_quantile(double p);

}  // namespace bslab

#endif  // BSLAB_STATS_HPP
