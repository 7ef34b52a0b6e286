#include "t1rho/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace t1rho {

namespace {

constexpr double kGolden = 0.6180339887498949;
constexpr int kPreScanPoints = 32;

// Profiled residual: best rss over the linear parameters at fixed t1rho.
struct ProfiledFit {
  double rss;
  double i0;
  double c;
};

ProfiledFit profile_at(std::span<const double> y, std::span<const double> tsl,
                       double t1rho, FitModel model) {
  const std::size_t n = y.size();
  constexpr std::size_t kStackSamples = 16;
  double stack_basis[kStackSamples];
  std::vector<double> heap_basis;
  double* basis = stack_basis;
  if (n > kStackSamples) {
    heap_basis.resize(n);
    basis = heap_basis.data();
  }
  for (std::size_t i = 0; i < n; ++i) basis[i] = std::exp(-tsl[i] / t1rho);

  ProfiledFit out{0.0, 0.0, 0.0};
  if (model == FitModel::two_param) {
    double bb = 0.0, by = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      bb += basis[i] * basis[i];
      by += basis[i] * y[i];
    }
    out.i0 = by / bb;
    for (std::size_t i = 0; i < n; ++i) {
      double r = y[i] - out.i0 * basis[i];
      out.rss += r * r;
    }
  } else {
    // Normal equations for [exp(-tsl/t), 1].
    double bb = 0, b1 = 0, by = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      bb += basis[i] * basis[i];
      b1 += basis[i];
      by += basis[i] * y[i];
      sy += y[i];
    }
    double det = bb * n - b1 * b1;
    if (std::abs(det) < 1e-300) det = 1e-300;
    out.i0 = (by * n - b1 * sy) / det;
    out.c = (bb * sy - b1 * by) / det;
    for (std::size_t i = 0; i < n; ++i) {
      double r = y[i] - out.i0 * basis[i] - out.c;
      out.rss += r * r;
    }
  }
  return out;
}

void check_inputs(std::span<const double> y, std::span<const double> tsl,
                  const FitConfig& cfg) {
  cfg.validate();
  if (y.size() != tsl.size()) throw numeric_error("intensity/tsl length mismatch");
  std::size_t min_samples = cfg.model == FitModel::two_param ? 2 : 3;
  if (y.size() < min_samples) throw numeric_error("fewer samples than parameters");
  for (std::size_t i = 0; i < tsl.size(); ++i)
    for (std::size_t j = i + 1; j < tsl.size(); ++j)
      if (tsl[i] == tsl[j]) throw numeric_error("tsl values must be distinct");
}

bool below_floor(std::span<const double> y, double floor) {
  return std::all_of(y.begin(), y.end(), [floor](double v) { return v <= floor; });
}

}  // namespace

double predict_signal(double i0, double t1rho, double c, double tsl) {
  if (t1rho <= 0) throw numeric_error("t1rho must be positive");
  return i0 * std::exp(-tsl / t1rho) + c;
}

FitResult fit_voxel(std::span<const double> intensities, std::span<const double> tsls,
                    const FitConfig& cfg) {
  check_inputs(intensities, tsls, cfg);
  if (below_floor(intensities, cfg.intensity_floor))
    throw numeric_error("signal below floor");

  // 32-point pre-scan picks the bracketing interval for the sectioning search.
  double best_t = cfg.t1rho_min;
  double best_rss = std::numeric_limits<double>::infinity();
  int best_idx = 0;
  const double span = cfg.t1rho_max - cfg.t1rho_min;
  for (int s = 0; s < kPreScanPoints; ++s) {
    double t = cfg.t1rho_min + span * s / (kPreScanPoints - 1);
    double rss = profile_at(intensities, tsls, t, cfg.model).rss;
    if (rss < best_rss) {
      best_rss = rss;
      best_t = t;
      best_idx = s;
    }
  }
  double a = cfg.t1rho_min + span * std::max(0, best_idx - 1) / (kPreScanPoints - 1);
  double b = cfg.t1rho_min +
             span * std::min(kPreScanPoints - 1, best_idx + 1) / (kPreScanPoints - 1);

  double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
  double f1 = profile_at(intensities, tsls, x1, cfg.model).rss;
  double f2 = profile_at(intensities, tsls, x2, cfg.model).rss;
  int iters = 0;
  const int max_iters = 200;
  while (b - a > cfg.tol && iters++ < max_iters) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = profile_at(intensities, tsls, x1, cfg.model).rss;
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = profile_at(intensities, tsls, x2, cfg.model).rss;
    }
  }

  double t_hat = 0.5 * (a + b);
  ProfiledFit fit = profile_at(intensities, tsls, t_hat, cfg.model);
  if (fit.rss > best_rss) {  // pre-scan point was better (flat or noisy profile)
    t_hat = best_t;
    fit = profile_at(intensities, tsls, t_hat, cfg.model);
  }

  FitResult r;
  r.t1rho = t_hat;
  r.i0 = fit.i0;
  r.c = fit.c;
  r.rss = fit.rss;
  r.converged = (b - a) <= cfg.tol;
  r.clamped = t_hat - cfg.t1rho_min <= cfg.tol || cfg.t1rho_max - t_hat <= cfg.tol;
  return r;
}

FitResult fit_voxel_grid_search(std::span<const double> intensities,
                                std::span<const double> tsls, const FitConfig& cfg,
                                double step_ms) {
  check_inputs(intensities, tsls, cfg);
  if (below_floor(intensities, cfg.intensity_floor))
    throw numeric_error("signal below floor");
  FitResult r;
  r.rss = std::numeric_limits<double>::infinity();
  for (double t = cfg.t1rho_min; t <= cfg.t1rho_max + 1e-12; t += step_ms) {
    ProfiledFit fit = profile_at(intensities, tsls, t, cfg.model);
    if (fit.rss < r.rss) {
      r.t1rho = t;
      r.i0 = fit.i0;
      r.c = fit.c;
      r.rss = fit.rss;
    }
  }
  r.converged = true;
  r.clamped = r.t1rho - cfg.t1rho_min <= step_ms || cfg.t1rho_max - r.t1rho <= step_ms;
  return r;
}

T1rhoMap fit_map(const DynamicSeries& series, const LabelVolume& region,
                 const FitConfig& cfg) {
  cfg.validate();
  series.validate();
  const Volume& grid = series.frames.front().second;
  if (region.dims != grid.dims)
    throw numeric_error("region must share the series grid");

  // Frames re-sorted by ascending tsl regardless of acquisition order.
  std::vector<std::size_t> order(series.frames.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return series.frames[l].first < series.frames[r].first;
  });
  std::vector<double> tsl(order.size());
  std::vector<const Eigen::ArrayXd*> frame_data(order.size());
  for (std::size_t f = 0; f < order.size(); ++f) {
    tsl[f] = series.frames[order[f]].first;
    frame_data[f] = &series.frames[order[f]].second.data;
  }

  T1rhoMap map;
  map.t1rho = grid.grid_like();
  map.i0 = grid.grid_like();
  map.rss = grid.grid_like();
  map.flags.dims = grid.dims;
  map.flags.spacing = grid.spacing;
  map.flags.affine = grid.affine;
  map.flags.data = Eigen::ArrayXi::Zero(grid.data.size());

  std::vector<std::size_t> voxels;
  for (Eigen::Index i = 0; i < region.data.size(); ++i)
    if (region.data[i] != 0) voxels.push_back(static_cast<std::size_t>(i));

  auto worker = [&](std::size_t begin, std::size_t end) {
    std::vector<double> y(tsl.size());
    for (std::size_t v = begin; v < end; ++v) {
      std::size_t idx = voxels[v];
      for (std::size_t f = 0; f < tsl.size(); ++f)
        y[f] = (*frame_data[f])[static_cast<Eigen::Index>(idx)];
      if (below_floor(y, cfg.intensity_floor)) {
        map.flags.data[static_cast<Eigen::Index>(idx)] = kBelowFloor;
        continue;
      }
      FitResult r = fit_voxel(y, tsl, cfg);
      map.t1rho.data[static_cast<Eigen::Index>(idx)] = r.t1rho;
      map.i0.data[static_cast<Eigen::Index>(idx)] = r.i0;
      map.rss.data[static_cast<Eigen::Index>(idx)] = r.rss;
      map.flags.data[static_cast<Eigen::Index>(idx)] =
          r.clamped || !r.converged ? kClamped : kFitted;
    }
  };

  int threads = cfg.threads > 0 ? cfg.threads
                                : static_cast<int>(
                                      std::max(1u, std::thread::hardware_concurrency()));
  if (threads <= 1 || voxels.size() < 1024) {
    worker(0, voxels.size());
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (voxels.size() + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      std::size_t b = static_cast<std::size_t>(w) * chunk;
      if (b >= voxels.size()) break;
      pool.emplace_back(worker, b, std::min(voxels.size(), b + chunk));
    }
    for (auto& th : pool) th.join();
  }
  return map;
}

std::vector<RegionStats> region_stats(const T1rhoMap& map,
                                      const SubregionVolume& subregions) {
  if (subregions.dims != map.t1rho.dims)
    throw numeric_error("subregions must share the map grid");

  auto compartment_row = [](int code) {
    if (code >= kAMFC && code <= kPLFC) return kFCRow;
    if (code >= kAMTC && code <= kCMTC) return kMTCRow;
    return kLTCRow;
  };

  std::vector<std::vector<double>> values(kLTCRow + 1);
  std::vector<std::size_t> excluded(kLTCRow + 1, 0);
  for (Eigen::Index i = 0; i < subregions.data.size(); ++i) {
    int code = subregions.data[i];
    if (code < 1 || code > kNumSubregions) continue;
    int flag = map.flags.data[i];
    if (flag == kFitted) {
      values[static_cast<std::size_t>(code)].push_back(map.t1rho.data[i]);
      values[static_cast<std::size_t>(compartment_row(code))].push_back(
          map.t1rho.data[i]);
    } else {
      ++excluded[static_cast<std::size_t>(code)];
      ++excluded[static_cast<std::size_t>(compartment_row(code))];
    }
  }

  auto row_name = [](int code) -> std::string {
    if (code <= kNumSubregions) return subregion_names()[static_cast<std::size_t>(code)];
    return code == kFCRow ? "FC" : code == kMTCRow ? "MTC" : "LTC";
  };

  std::vector<RegionStats> rows;
  for (int code = 1; code <= kLTCRow; ++code) {
    RegionStats s;
    s.region_code = code;
    s.region_name = row_name(code);
    auto& v = values[static_cast<std::size_t>(code)];
    s.n = v.size();
    s.excluded_n = excluded[static_cast<std::size_t>(code)];
    if (!v.empty()) {
      std::sort(v.begin(), v.end());
      double sum = std::accumulate(v.begin(), v.end(), 0.0);
      s.mean = sum / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - s.mean) * (x - s.mean);
      s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
      s.median = v.size() % 2 ? v[v.size() / 2]
                              : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
      s.min = v.front();
      s.max = v.back();
    }
    rows.push_back(std::move(s));
  }
  return rows;
}

}  // namespace t1rho
