#include "t1rho/stats.hpp"

#include "t1rho/parcellation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace t1rho {

// ---------------------------------------------------------------------------
// Distribution helpers
// ---------------------------------------------------------------------------

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Acklam's rational approximation for the standard normal quantile,
// refined with one Halley step (relative error ~1e-15).
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw numeric_error("normal quantile needs p in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

namespace {

// Regularised incomplete beta via the Lentz continued fraction.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-15, kFpMin = 1e-300;
  double qab = a + b, qap = a + 1, qam = a - 1;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                 a * std::log(x) + b * std::log(1 - x);
  double bt = std::exp(ln_bt);
  if (x < (a + 1) / (a + b + 2)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1 - x) / b;
}

double poly(const double* cc, int nord, double x) {
  double r = cc[0];
  double p = 1.0;
  for (int i = 1; i < nord; ++i) {
    p *= x;
    r += cc[i] * p;
  }
  return r;
}

}  // namespace

double student_t_sf(double t, double df) {
  if (df <= 0) throw numeric_error("t distribution needs df > 0");
  double p = 0.5 * reg_inc_beta(df / 2.0, 0.5, df / (df + t * t));
  return t >= 0 ? p : 1.0 - p;
}

// ---------------------------------------------------------------------------
// Segmentation metrics
// ---------------------------------------------------------------------------

ConfusionCounts confusion(const LabelVolume& reference, const LabelVolume& predicted,
                          int label) {
  if (reference.dims != predicted.dims)
    throw numeric_error("confusion counts require a shared grid");
  ConfusionCounts c;
  for (Eigen::Index i = 0; i < reference.data.size(); ++i) {
    bool r = reference.data[i] == label, p = predicted.data[i] == label;
    if (r && p)
      ++c.tp;
    else if (!r && p)
      ++c.fp;
    else if (r && !p)
      ++c.fn;
  }
  return c;
}

double dsc(const ConfusionCounts& c) {
  std::size_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) throw numeric_error("undefined DSC: both masks empty");
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

namespace {

std::vector<Vec3i> border_voxels(const LabelVolume& m, int label) {
  std::vector<Vec3i> out;
  static const int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                               {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int k = 0; k < m.dims[2]; ++k)
    for (int j = 0; j < m.dims[1]; ++j)
      for (int i = 0; i < m.dims[0]; ++i) {
        if (m.at(i, j, k) != label) continue;
        for (const auto& d : nb) {
          int ni = i + d[0], nj = j + d[1], nk = k + d[2];
          if (!m.contains(ni, nj, nk) || m.at(ni, nj, nk) != label) {
            out.emplace_back(i, j, k);
            break;
          }
        }
      }
  return out;
}

// Exact 1-D squared distance transform (lower envelope of parabolas) with an
// anisotropic axis weight.
void edt_1d(std::vector<double>& f, double w2, std::vector<double>& d,
            std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  const double inf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;  // no parabola from unseeded sites
    double s = -inf;
    while (k >= 0) {
      int p = v[k];
      s = (f[q] + w2 * q * q - f[p] - w2 * p * p) / (2.0 * w2 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -inf : s;
    z[k + 1] = inf;
  }
  if (k < 0) {  // whole line unseeded
    for (int q = 0; q < n; ++q) d[q] = inf;
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    double dq = q - v[k];
    d[q] = w2 * dq * dq + f[v[k]];
  }
}

// Squared Euclidean distance (mm^2) from every voxel to the given seed set.
std::vector<double> edt_sq(const Vec3i& dims, const Vec3& spacing,
                           const std::vector<Vec3i>& seeds) {
  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  auto at = [&](int i, int j, int k) -> double& {
    return g[static_cast<std::size_t>(i) +
             static_cast<std::size_t>(dims[0]) *
                 (static_cast<std::size_t>(j) +
                  static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k))];
  };
  for (const auto& s : seeds) at(s[0], s[1], s[2]) = 0.0;

  int maxdim = std::max({dims[0], dims[1], dims[2]});
  std::vector<double> f(static_cast<std::size_t>(maxdim)),
      d(static_cast<std::size_t>(maxdim)), z(static_cast<std::size_t>(maxdim) + 1);
  std::vector<int> v(static_cast<std::size_t>(maxdim));

  // x pass
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i) f[static_cast<std::size_t>(i)] = at(i, j, k);
      f.resize(static_cast<std::size_t>(dims[0]));
      edt_1d(f, spacing[0] * spacing[0], d, v, z);
      for (int i = 0; i < dims[0]; ++i) at(i, j, k) = d[static_cast<std::size_t>(i)];
      f.resize(static_cast<std::size_t>(maxdim));
    }
  // y pass
  for (int k = 0; k < dims[2]; ++k)
    for (int i = 0; i < dims[0]; ++i) {
      for (int j = 0; j < dims[1]; ++j) f[static_cast<std::size_t>(j)] = at(i, j, k);
      f.resize(static_cast<std::size_t>(dims[1]));
      edt_1d(f, spacing[1] * spacing[1], d, v, z);
      for (int j = 0; j < dims[1]; ++j) at(i, j, k) = d[static_cast<std::size_t>(j)];
      f.resize(static_cast<std::size_t>(maxdim));
    }
  // z pass
  for (int j = 0; j < dims[1]; ++j)
    for (int i = 0; i < dims[0]; ++i) {
      for (int k = 0; k < dims[2]; ++k) f[static_cast<std::size_t>(k)] = at(i, j, k);
      f.resize(static_cast<std::size_t>(dims[2]));
      edt_1d(f, spacing[2] * spacing[2], d, v, z);
      for (int k = 0; k < dims[2]; ++k) at(i, j, k) = d[static_cast<std::size_t>(k)];
      f.resize(static_cast<std::size_t>(maxdim));
    }
  return g;
}

double asd_directed(const std::vector<Vec3i>& from, const std::vector<double>& dist_sq,
                    const Vec3i& dims) {
  double sum = 0.0;
  for (const auto& p : from) {
    double d2 = dist_sq[static_cast<std::size_t>(p[0]) +
                        static_cast<std::size_t>(dims[0]) *
                            (static_cast<std::size_t>(p[1]) +
                             static_cast<std::size_t>(dims[1]) *
                                 static_cast<std::size_t>(p[2]))];
    sum += std::sqrt(d2);
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

double assd(const LabelVolume& reference, const LabelVolume& predicted, int label) {
  if (reference.dims != predicted.dims)
    throw numeric_error("assd requires a shared grid");
  std::vector<Vec3i> bx = border_voxels(reference, label);
  std::vector<Vec3i> by = border_voxels(predicted, label);
  if (bx.empty() || by.empty()) throw numeric_error("assd: empty voxel set");
  std::vector<double> dist_to_y = edt_sq(reference.dims, reference.spacing, by);
  std::vector<double> dist_to_x = edt_sq(reference.dims, reference.spacing, bx);
  return 0.5 * (asd_directed(bx, dist_to_y, reference.dims) +
                asd_directed(by, dist_to_x, reference.dims));
}

double assd_brute_force(const LabelVolume& reference, const LabelVolume& predicted,
                        int label) {
  std::vector<Vec3i> bx = border_voxels(reference, label);
  std::vector<Vec3i> by = border_voxels(predicted, label);
  if (bx.empty() || by.empty()) throw numeric_error("assd: empty voxel set");
  const Vec3& sp = reference.spacing;
  auto directed = [&](const std::vector<Vec3i>& from, const std::vector<Vec3i>& to) {
    double sum = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) {
        Vec3 d((p[0] - q[0]) * sp[0], (p[1] - q[1]) * sp[1], (p[2] - q[2]) * sp[2]);
        best = std::min(best, d.squaredNorm());
      }
      sum += std::sqrt(best);
    }
    return sum / static_cast<double>(from.size());
  };
  return 0.5 * (directed(bx, by) + directed(by, bx));
}

// ---------------------------------------------------------------------------
// Quantification agreement
// ---------------------------------------------------------------------------

std::pair<double, double> rmsd_cv(const QuantPairs& pairs) {
  pairs.validate();
  double sq = 0.0, ref_sum = 0.0;
  for (std::size_t i = 0; i < pairs.n(); ++i) {
    double d = pairs.q_pred[i] - pairs.q_ref[i];
    sq += d * d;
    ref_sum += pairs.q_ref[i];
  }
  double rmsd = std::sqrt(sq / static_cast<double>(pairs.n()));
  double ref_mean = ref_sum / static_cast<double>(pairs.n());
  if (ref_mean == 0.0) throw numeric_error("CV_RMSD undefined: zero reference mean");
  return {rmsd, rmsd / ref_mean * 100.0};
}

ShapiroWilkResult shapiro_wilk(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  if (n < 3) throw numeric_error("shapiro_wilk needs n >= 3");
  if (n > 5000) throw numeric_error("shapiro_wilk supports n <= 5000");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  if (s.front() == s.back()) throw numeric_error("shapiro_wilk: zero variance");

  // AS R94 coefficient sets.
  static const double c1[6] = {0., .221157, -.147981, -2.071190, 4.434685, -2.706056};
  static const double c2[6] = {0., .042981, -.293762, -1.752461, 5.682633, -3.582633};
  static const double c3[4] = {.544, -.39978, .025054, -6.714e-4};
  static const double c4[4] = {1.3822, -.77857, .062767, -.0020322};
  static const double c5[4] = {-1.5861, -.31082, -.083751, .0038915};
  static const double c6[3] = {-.4803, -.082676, .0030302};
  static const double g[2] = {-2.273, .459};
  const double pi6 = 1.90985931710274;    // 6/pi
  const double stqr = 1.04719755119660;   // asin(sqrt(3/4))

  const int n2 = n / 2;
  std::vector<double> a(static_cast<std::size_t>(n2));
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    double an25 = n + 0.25, summ2 = 0.0;
    for (int i = 1; i <= n2; ++i) {
      a[static_cast<std::size_t>(i - 1)] = normal_quantile((i - 0.375) / an25);
      summ2 += a[static_cast<std::size_t>(i - 1)] * a[static_cast<std::size_t>(i - 1)];
    }
    summ2 *= 2.0;
    double ssumm2 = std::sqrt(summ2);
    double rsn = 1.0 / std::sqrt(static_cast<double>(n));
    double a1 = poly(c1, 6, rsn) - a[0] / ssumm2;
    int i1;
    double fac;
    if (n > 5) {
      i1 = 3;
      double a2 = -a[1] / ssumm2 + poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2 * a[0] * a[0] - 2 * a[1] * a[1]) /
                      (1 - 2 * a1 * a1 - 2 * a2 * a2));
      a[1] = a2;
    } else {
      i1 = 2;
      fac = std::sqrt((summ2 - 2 * a[0] * a[0]) / (1 - 2 * a1 * a1));
    }
    a[0] = a1;
    for (int i = i1; i <= n2; ++i) a[static_cast<std::size_t>(i - 1)] /= -fac;
  }

  // W statistic: b = sum a_i (x_(n+1-i) - x_(i)), W = b^2 / SS.
  double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : s) ss += (v - mean) * (v - mean);
  double b = 0.0;
  for (int i = 0; i < n2; ++i)
    b += a[static_cast<std::size_t>(i)] *
         (s[static_cast<std::size_t>(n - 1 - i)] - s[static_cast<std::size_t>(i)]);
  double w = b * b / ss;
  w = std::min(w, 1.0);

  ShapiroWilkResult r;
  r.w = w;
  if (n == 3) {
    r.p = std::clamp(pi6 * (std::asin(std::sqrt(w)) - stqr), 0.0, 1.0);
    return r;
  }
  double y = std::log1p(-w);  // log(1 - W)
  double m, sdev;
  if (n <= 11) {
    double gamma = poly(g, 2, static_cast<double>(n));
    if (y >= gamma) {
      r.p = 0.0;
      return r;
    }
    y = -std::log(gamma - y);
    m = poly(c3, 4, static_cast<double>(n));
    sdev = std::exp(poly(c4, 4, static_cast<double>(n)));
  } else {
    double ln_n = std::log(static_cast<double>(n));
    m = poly(c5, 4, ln_n);
    sdev = std::exp(poly(c6, 3, ln_n));
  }
  r.p = 1.0 - normal_cdf((y - m) / sdev);
  return r;
}

TestResult paired_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw numeric_error("paired_t: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw numeric_error("paired_t needs n >= 2");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  if (ss == 0.0) throw numeric_error("paired_t: zero variance of differences");
  double sd = std::sqrt(ss / static_cast<double>(n - 1));
  TestResult r;
  r.statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p = 2.0 * student_t_sf(std::abs(r.statistic), static_cast<double>(n - 1));
  return r;
}

TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw numeric_error("wilcoxon: length mismatch");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  if (d.empty()) throw numeric_error("wilcoxon: no nonzero pairs");
  const std::size_t n = d.size();

  // Average ranks of |d| with ties.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return std::abs(d[l]) < std::abs(d[r]);
  });
  std::vector<double> rank(n);
  std::vector<std::size_t> tie_sizes;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    tie_sizes.push_back(j - i + 1);
    i = j + 1;
  }

  double w_plus = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (d[k] > 0) w_plus += rank[k];

  TestResult r;
  r.statistic = w_plus;
  if (n <= 25) {
    // Exact: distribution of 2*W+ by dynamic programming over doubled ranks
    // (average ranks are multiples of 0.5, so doubled ranks are integral).
    std::vector<long> rank2(n);
    long total2 = 0;
    for (std::size_t k = 0; k < n; ++k) {
      rank2[k] = std::lround(2.0 * rank[k]);
      total2 += rank2[k];
    }
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    for (std::size_t k = 0; k < n; ++k)
      for (long s = total2; s >= rank2[k]; --s)
        count[static_cast<std::size_t>(s)] +=
            count[static_cast<std::size_t>(s - rank2[k])];
    double denom = std::pow(2.0, static_cast<double>(n));
    long w2 = std::lround(2.0 * w_plus);
    double cdf = 0.0, sf = 0.0;
    for (long s = 0; s <= total2; ++s) {
      if (s <= w2) cdf += count[static_cast<std::size_t>(s)];
      if (s >= w2) sf += count[static_cast<std::size_t>(s)];
    }
    r.p = std::min(1.0, 2.0 * std::min(cdf, sf) / denom);
  } else {
    double mn = static_cast<double>(n) * (n + 1) / 4.0;
    double var = static_cast<double>(n) * (n + 1) * (2.0 * n + 1) / 24.0;
    for (std::size_t t : tie_sizes)
      var -= (static_cast<double>(t) * t * t - t) / 48.0;
    double diff = w_plus - mn;
    double cc = diff > 0 ? -0.5 : (diff < 0 ? 0.5 : 0.0);
    double z = (diff + cc) / std::sqrt(var);
    r.p = 2.0 * (1.0 - normal_cdf(std::abs(z)));
  }
  return r;
}

BlandAltman bland_altman(const QuantPairs& pairs) {
  pairs.validate();
  if (pairs.n() < 2) throw numeric_error("bland_altman needs n >= 2");
  BlandAltman r;
  std::vector<double> diffs(pairs.n());
  for (std::size_t i = 0; i < pairs.n(); ++i) {
    diffs[i] = pairs.q_pred[i] - pairs.q_ref[i];
    r.points.emplace_back(0.5 * (pairs.q_pred[i] + pairs.q_ref[i]), diffs[i]);
    r.bias += diffs[i];
  }
  r.bias /= static_cast<double>(pairs.n());
  double ss = 0.0;
  for (double d : diffs) ss += (d - r.bias) * (d - r.bias);
  double sd = std::sqrt(ss / static_cast<double>(pairs.n() - 1));
  r.loa_low = r.bias - 1.96 * sd;
  r.loa_high = r.bias + 1.96 * sd;
  return r;
}

AgreementRow gated_compare(const QuantPairs& pairs, double alpha) {
  pairs.validate();
  if (pairs.n() < 3) throw numeric_error("gated_compare needs n >= 3");

  AgreementRow row;
  row.region_code = pairs.region_code;
  if (pairs.region_code >= 1 && pairs.region_code <= kNumSubregions)
    row.region_name = subregion_names()[static_cast<std::size_t>(pairs.region_code)];
  row.n = pairs.n();
  row.p_value = std::numeric_limits<double>::quiet_NaN();
  row.normality_p_ref = std::numeric_limits<double>::quiet_NaN();
  row.normality_p_pred = std::numeric_limits<double>::quiet_NaN();

  try {
    auto [rmsd, cv] = rmsd_cv(pairs);
    row.rmsd = rmsd;
    row.cv_rmsd = cv;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  try {
    BlandAltman ba = bland_altman(pairs);
    row.bias = ba.bias;
    row.loa_low = ba.loa_low;
    row.loa_high = ba.loa_high;
    row.ba_points = std::move(ba.points);
  } catch (const std::exception& e) {
    if (!row.error.empty()) row.error += "; ";
    row.error += e.what();
  }

  bool gate_ok = true;
  try {
    row.normality_p_ref = shapiro_wilk(pairs.q_ref).p;
    row.normality_p_pred = shapiro_wilk(pairs.q_pred).p;
  } catch (const std::exception& e) {
    gate_ok = false;
    if (!row.error.empty()) row.error += "; ";
    row.error += std::string("normality: ") + e.what();
  }
  // Non-normal members route to Wilcoxon; a failed normality test (degenerate
  // sample) is treated as non-normal.
  row.test_used = (!gate_ok || row.normality_p_ref < alpha ||
                   row.normality_p_pred < alpha)
                      ? PairedTestKind::wilcoxon
                      : PairedTestKind::paired_t;
  try {
    TestResult t = row.test_used == PairedTestKind::paired_t
                       ? paired_t(pairs.q_pred, pairs.q_ref)
                       : wilcoxon_signed_rank(pairs.q_pred, pairs.q_ref);
    row.p_value = t.p;
  } catch (const std::exception& e) {
    if (!row.error.empty()) row.error += "; ";
    row.error += std::string("paired test: ") + e.what();
  }
  return row;
}

}  // namespace t1rho
