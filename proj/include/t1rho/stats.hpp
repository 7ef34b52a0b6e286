#pragma once

#include "t1rho/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace t1rho {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

ConfusionCounts confusion(const LabelVolume& reference, const LabelVolume& predicted,
                          int label);

/// Dice similarity coefficient 2TP / (2TP + FP + FN).
double dsc(const ConfusionCounts& c);

/// Average symmetric surface distance between the border voxels of two masks
/// sharing a grid, in world mm. Borders use 6-connectivity.
double assd(const LabelVolume& reference, const LabelVolume& predicted, int label);

/// Brute-force oracle for assd (O(|X| * |Y|)); test use only.
double assd_brute_force(const LabelVolume& reference, const LabelVolume& predicted,
                        int label);

struct QuantPairs {
  int region_code = 0;
  std::vector<double> q_ref;   // one regional mean per subject
  std::vector<double> q_pred;

  std::size_t n() const { return q_ref.size(); }
  void validate() const {
    if (q_ref.size() != q_pred.size()) throw numeric_error("paired lists differ in length");
    if (q_ref.empty()) throw numeric_error("quant pairs need n >= 1");
  }
};

/// RMSD = sqrt(mean((pred - ref)^2)); CV = RMSD / mean(ref), in percent.
std::pair<double, double> rmsd_cv(const QuantPairs& pairs);

struct ShapiroWilkResult {
  double w = 0.0;
  double p = 0.0;
};

/// Shapiro-Wilk normality test per the AS R94 algorithm (Royston 1995),
/// for 3 <= n <= 5000.
ShapiroWilkResult shapiro_wilk(std::span<const double> x);

struct TestResult {
  double statistic = 0.0;
  double p = 0.0;
};

/// Paired two-sided t-test on equal-length samples; df = n - 1.
TestResult paired_t(std::span<const double> a, std::span<const double> b);

/// Wilcoxon signed-rank test with zero differences dropped and average ranks
/// for ties. Exact two-sided p by full sign enumeration for n <= 25, normal
/// approximation with continuity and tie correction beyond.
TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

struct BlandAltman {
  double bias = 0.0;
  double loa_low = 0.0;
  double loa_high = 0.0;
  std::vector<std::pair<double, double>> points;  // (mean, diff) per subject
};

/// Bias = mean(pred - ref); limits of agreement bias +/- 1.96 * sample sd.
BlandAltman bland_altman(const QuantPairs& pairs);

enum class PairedTestKind { paired_t, wilcoxon };

struct AgreementRow {
  int region_code = 0;
  std::string region_name;
  std::size_t n = 0;
  PairedTestKind test_used = PairedTestKind::paired_t;
  double normality_p_ref = 0.0;
  double normality_p_pred = 0.0;
  double p_value = 0.0;
  double rmsd = 0.0;
  double cv_rmsd = 0.0;  // percent
  double bias = 0.0;
  double loa_low = 0.0;
  double loa_high = 0.0;
  std::string error;  // degenerate-statistics note; row still emitted
  std::vector<std::pair<double, double>> ba_points;
};

/// Normality-gated paired comparison: Shapiro-Wilk on both members; Wilcoxon
/// when either fails at alpha, paired t otherwise. Degenerate statistics are
/// recorded in the row instead of aborting.
AgreementRow gated_compare(const QuantPairs& pairs, double alpha = 0.05);

// Distribution helpers (also used by the tests).
double normal_cdf(double z);
double normal_quantile(double p);
double student_t_sf(double t, double df);  // one-sided upper tail

}  // namespace t1rho
