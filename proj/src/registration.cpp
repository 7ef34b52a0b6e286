#include "t1rho/registration.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>
#include <vector>

namespace t1rho {

namespace {

constexpr double kGolden = 0.6180339887498949;

struct MetricTerms {
  double sq_sum = 0.0;
  long inside = 0;
  long total = 0;
};

// Rotation about a fixed world centre plus local translation; converted to
// the origin-based RigidTransform for the public interface.
RigidTransform to_rigid(const Vec3& angles_deg, const Vec3& t_local, const Vec3& centre) {
  RigidTransform t;
  t.rotations_deg = angles_deg;
  Mat3 r = rotation_zyx(angles_deg);
  t.translation_mm = centre - r * centre + t_local;
  return t;
}

Vec3 world_centre(const Volume& v) {
  Eigen::Vector4d mid((v.dims[0] - 1) / 2.0, (v.dims[1] - 1) / 2.0,
                      (v.dims[2] - 1) / 2.0, 1.0);
  return (v.affine * mid).head<3>();
}

MetricTerms metric_slab(const Volume& moving, const Volume& reference, const Mat4& map,
                        int stride, int k_begin, int k_end) {
  MetricTerms t;
  const Vec3i md = moving.dims;
  for (int k = k_begin; k < k_end; k += stride)
    for (int j = 0; j < reference.dims[1]; j += stride)
      for (int i = 0; i < reference.dims[0]; i += stride) {
        Vec3 p = (map * Eigen::Vector4d(i, j, k, 1.0)).head<3>();
        ++t.total;
        if (p[0] < 0 || p[1] < 0 || p[2] < 0 || p[0] > md[0] - 1 ||
            p[1] > md[1] - 1 || p[2] > md[2] - 1)
          continue;
        ++t.inside;
        double diff = detail::sample_trilinear(moving, p) - reference.at(i, j, k);
        t.sq_sum += diff * diff;
      }
  return t;
}

double mse_or_inf(const Volume& moving, const Volume& reference, const RigidTransform& t,
                  int stride, int threads, double* overlap_out = nullptr) {
  Mat4 map = detail::index_map(moving.affine, reference.affine, t);
  int nz = reference.dims[2];
  int nworkers = std::max(1, std::min(threads, nz));
  std::vector<MetricTerms> parts(static_cast<std::size_t>(nworkers));
  if (nworkers == 1) {
    parts[0] = metric_slab(moving, reference, map, stride, 0, nz);
  } else {
    std::vector<std::thread> pool;
    int chunk = (nz + nworkers - 1) / nworkers;
    // Align chunk starts to the stride so the visited voxel set matches the
    // single-threaded loop exactly.
    chunk = ((chunk + stride - 1) / stride) * stride;
    for (int w = 0; w < nworkers; ++w) {
      int k0 = w * chunk, k1 = std::min(nz, (w + 1) * chunk);
      if (k0 >= nz) break;
      pool.emplace_back([&, w, k0, k1] {
        parts[static_cast<std::size_t>(w)] =
            metric_slab(moving, reference, map, stride, k0, k1);
      });
    }
    for (auto& th : pool) th.join();
  }
  MetricTerms sum;
  for (const auto& p : parts) {  // ordered reduction
    sum.sq_sum += p.sq_sum;
    sum.inside += p.inside;
    sum.total += p.total;
  }
  double overlap = sum.total > 0 ? double(sum.inside) / double(sum.total) : 0.0;
  if (overlap_out) *overlap_out = overlap;
  if (overlap < 0.10) return std::numeric_limits<double>::infinity();
  return sum.sq_sum / double(sum.inside);
}

// Golden-section minimisation over [lo, hi], guarded by a coarse pre-scan.
double minimise_1d(const std::function<double(double)>& f, double lo, double hi,
                   double tol) {
  constexpr int kPreScan = 9;
  double best_x = lo, best_f = f(lo);
  for (int s = 1; s < kPreScan; ++s) {
    double x = lo + (hi - lo) * s / (kPreScan - 1);
    double fx = f(x);
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  double step = (hi - lo) / (kPreScan - 1);
  double a = std::max(lo, best_x - step), b = std::min(hi, best_x + step);
  double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = f(x2);
    }
  }
  double mid = 0.5 * (a + b), fm = f(mid);
  return fm < best_f ? mid : best_x;
}

int stride_for(const Volume& v, long budget_voxels) {
  long n = static_cast<long>(v.size());
  int stride = 1;
  while (n / (static_cast<long>(stride) * stride * stride) > budget_voxels) ++stride;
  return stride;
}

}  // namespace

Volume downsample2(const Volume& v) {
  Vec3i nd((v.dims[0] + 1) / 2, (v.dims[1] + 1) / 2, (v.dims[2] + 1) / 2);
  Volume out;
  out.dims = nd;
  out.spacing = v.spacing * 2.0;
  Mat4 s = Mat4::Identity();
  s(0, 0) = s(1, 1) = s(2, 2) = 2.0;
  s(0, 3) = s(1, 3) = s(2, 3) = 0.5;  // block centre in old index space
  out.affine = v.affine * s;
  out.data = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(out.size()));
  for (int k = 0; k < nd[2]; ++k)
    for (int j = 0; j < nd[1]; ++j)
      for (int i = 0; i < nd[0]; ++i) {
        double acc = 0.0;
        int cnt = 0;
        for (int dk = 0; dk < 2; ++dk)
          for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di) {
              int oi = 2 * i + di, oj = 2 * j + dj, ok = 2 * k + dk;
              if (!v.contains(oi, oj, ok)) continue;
              acc += v.at(oi, oj, ok);
              ++cnt;
            }
        out.data[out.index(i, j, k)] = acc / cnt;
      }
  return out;
}

double registration_mse(const Volume& moving, const Volume& reference,
                        const RigidTransform& t, int stride, int threads) {
  double overlap = 0.0;
  double mse = mse_or_inf(moving, reference, t, stride, std::max(1, threads), &overlap);
  if (overlap < 0.10) throw numeric_error("insufficient overlap between fields of view");
  return mse;
}

RigidTransform rigid_register(const Volume& moving, const Volume& reference,
                              const RegistrationConfig& config) {
  if (config.pyramid_levels < 1) throw config_error("pyramid_levels must be >= 1");
  int threads = config.threads > 0
                    ? config.threads
                    : std::max(1u, std::thread::hardware_concurrency());

  std::vector<Volume> ref_pyr{reference}, mov_pyr{moving};
  for (int l = 1; l < config.pyramid_levels; ++l) {
    ref_pyr.push_back(downsample2(ref_pyr.back()));
    mov_pyr.push_back(downsample2(mov_pyr.back()));
  }

  const Vec3 centre = world_centre(reference);
  Vec3 angles = Vec3::Zero();
  Vec3 t_local = world_centre(reference) - world_centre(moving);
  for (int i = 0; i < 3; ++i)
    t_local[i] = std::clamp(t_local[i], -config.trans_bound_mm, config.trans_bound_mm);

  {
    double overlap = 0.0;
    mse_or_inf(mov_pyr.back(), ref_pyr.back(), to_rigid(angles, t_local, centre),
               1, threads, &overlap);
    if (overlap < 0.10)
      throw numeric_error("insufficient overlap between fields of view");
  }

  for (int level = config.pyramid_levels - 1; level >= 0; --level) {
    const Volume& ref = ref_pyr[static_cast<std::size_t>(level)];
    const Volume& mov = mov_pyr[static_cast<std::size_t>(level)];
    int stride = stride_for(ref, 250000);
    double shrink = std::pow(4.0, config.pyramid_levels - 1 - level);
    double rot_radius = std::max(config.rot_bound_deg / shrink, 20 * config.tol_deg);
    double trans_radius = std::max(config.trans_bound_mm / shrink, 20 * config.tol_mm);

    auto eval = [&](const Vec3& a, const Vec3& t) {
      return mse_or_inf(mov, ref, to_rigid(a, t, centre), stride, threads);
    };

    for (int sweep = 0; sweep < config.max_iters_per_level; ++sweep) {
      double max_move = 0.0;
      for (int p = 0; p < 6; ++p) {
        bool is_rot = p < 3;
        double radius = is_rot ? rot_radius : trans_radius;
        double bound = is_rot ? config.rot_bound_deg : config.trans_bound_mm;
        double tol = is_rot ? config.tol_deg : config.tol_mm;
        double cur = is_rot ? angles[p] : t_local[p - 3];
        double lo = std::max(-bound, cur - radius);
        double hi = std::min(bound, cur + radius);
        auto f = [&](double x) {
          Vec3 a = angles, t = t_local;
          if (is_rot)
            a[p] = x;
          else
            t[p - 3] = x;
          return eval(a, t);
        };
        double best = minimise_1d(f, lo, hi, tol);
        max_move = std::max(max_move, std::abs(best - cur) / (is_rot ? config.tol_deg
                                                                     : config.tol_mm));
        if (is_rot)
          angles[p] = best;
        else
          t_local[p - 3] = best;
      }
      if (max_move < 1.0) break;  // every parameter moved by less than its tol
    }
  }
  return to_rigid(angles, t_local, centre);
}

StandardizationResult standardize_case(const DynamicSeries& series,
                                       const LabelVolume& mask,
                                       const Volume& reference,
                                       const RegistrationConfig& config) {
  series.validate();
  const Volume& first = series.frames.front().second;
  if (mask.dims != first.dims ||
      (mask.affine - first.affine).cwiseAbs().maxCoeff() > 1e-6)
    throw numeric_error("mask must share the series grid");

  OrientationOps ops = detect_orientation(series.frames.front().second.affine);
  DynamicSeries canon;
  canon.acquisition_order = series.acquisition_order;
  for (const auto& [tsl, vol] : series.frames)
    canon.frames.emplace_back(tsl, apply_orientation(vol, ops));
  LabelVolume canon_mask = apply_orientation(mask, ops);

  Volume mean = mean_series(canon);
  RigidTransform rigid = rigid_register(mean, reference, config);

  StandardizationResult out;
  out.orientation_ops = ops;
  out.rigid = rigid;
  out.series.acquisition_order = series.acquisition_order;
  for (const auto& [tsl, vol] : canon.frames)
    out.series.frames.emplace_back(
        tsl, resample(vol, reference, rigid, Interpolation::trilinear));
  out.mask = resample_nearest(canon_mask, reference, rigid);
  return out;
}

}  // namespace t1rho
