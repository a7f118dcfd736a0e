#include "coilsim/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "coilsim/rng.hpp"

namespace coilsim {

namespace {

double point_segment_dist2(const Vec3& p, const Vec3& a, const Vec3& b) {
  Vec3 ab = b - a;
  double len2 = ab.squaredNorm();
  double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).squaredNorm();
}

}  // namespace

VoxelGrid voxelize(const std::vector<Vec3>& centerline, double D2, const Lattice& lattice) {
  VoxelGrid grid;
  grid.lattice = lattice;
  grid.values.assign(lattice.size(), 0.0);
  if (centerline.empty()) return grid;

  const double r = 0.5 * D2;
  const double r2 = r * r;
  const double h = lattice.spacing;
  const auto [nx, ny, nz] = lattice.dims;

  Vec3 lat_hi = lattice.origin + h * Vec3(nx, ny, nz);
  for (const Vec3& p : centerline) {
    if ((p - lattice.origin).minCoeff() < 0 || (lat_hi - p).minCoeff() < 0)
      throw OutOfBounds("voxelize: centerline leaves the lattice cube");
  }

  // Mark cells in the inflated bounding box of each segment; cell centers
  // within the sweep radius of the polyline get value 1.
  auto mark_segment = [&](const Vec3& a, const Vec3& b) {
    Vec3 lo = a.cwiseMin(b) - Vec3::Constant(r + h);
    Vec3 hi = a.cwiseMax(b) + Vec3::Constant(r + h);
    int i0 = std::max(0, static_cast<int>(std::floor((lo.x() - lattice.origin.x()) / h)));
    int j0 = std::max(0, static_cast<int>(std::floor((lo.y() - lattice.origin.y()) / h)));
    int k0 = std::max(0, static_cast<int>(std::floor((lo.z() - lattice.origin.z()) / h)));
    int i1 = std::min(nx - 1, static_cast<int>(std::ceil((hi.x() - lattice.origin.x()) / h)));
    int j1 = std::min(ny - 1, static_cast<int>(std::ceil((hi.y() - lattice.origin.y()) / h)));
    int k1 = std::min(nz - 1, static_cast<int>(std::ceil((hi.z() - lattice.origin.z()) / h)));
    for (int k = k0; k <= k1; ++k)
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
          size_t idx = lattice.index(i, j, k);
          if (grid.values[idx] != 0.0) continue;
          if (point_segment_dist2(lattice.cell_center(i, j, k), a, b) <= r2)
            grid.values[idx] = 1.0;
        }
  };

  if (centerline.size() == 1)
    mark_segment(centerline[0], centerline[0]);
  else
    for (size_t s = 0; s + 1 < centerline.size(); ++s) mark_segment(centerline[s], centerline[s + 1]);
  return grid;
}

double voxel_volume(const VoxelGrid& grid) {
  double sum = 0.0;
  for (double v : grid.values) sum += v;
  return sum * grid.lattice.cell_volume();
}

EnsembleStats ensemble_stats(const std::vector<VoxelGrid>& grids) {
  if (grids.empty()) throw InvalidConfig("ensemble_stats: empty ensemble");
  const Lattice& lat = grids[0].lattice;
  for (const VoxelGrid& g : grids)
    if (!g.lattice.same_as(lat) || g.values.size() != grids[0].values.size())
      throw LatticeMismatch("ensemble_stats: grids on different lattices");

  EnsembleStats out;
  out.mean.lattice = lat;
  out.variance.lattice = lat;
  size_t n = grids[0].values.size();
  out.mean.values.assign(n, 0.0);
  out.variance.values.assign(n, 0.0);

  const double inv = 1.0 / static_cast<double>(grids.size());
  for (const VoxelGrid& g : grids)
    for (size_t i = 0; i < n; ++i) out.mean.values[i] += g.values[i];
  for (size_t i = 0; i < n; ++i) out.mean.values[i] *= inv;
  for (const VoxelGrid& g : grids)
    for (size_t i = 0; i < n; ++i) {
      double d = out.mean.values[i] - g.values[i];
      out.variance.values[i] += d * d;
    }
  for (size_t i = 0; i < n; ++i) out.variance.values[i] *= inv;
  return out;
}

namespace {

double masked_integral(const VoxelGrid& field, const std::vector<uint8_t>& mask) {
  double sum = 0.0;
  for (size_t i = 0; i < field.values.size(); ++i)
    if (mask[i]) sum += field.values[i];
  return sum * field.lattice.cell_volume();
}

void check_lattice(const VoxelGrid& field, const RegionPartition& part) {
  if (!field.lattice.same_as(part.lattice) || field.values.size() != part.cavity.size())
    throw LatticeMismatch("field and partition live on different lattices");
}

}  // namespace

RegionFractions region_fractions(const VoxelGrid& field, const RegionPartition& part) {
  check_lattice(field, part);
  RegionFractions out;
  double va = part.cavity_volume();
  double vs = part.sphere_volume();
  out.psi_BA = va > 0 ? masked_integral(field, part.boundary) / va : 0.0;
  out.psi_CA = va > 0 ? masked_integral(field, part.core) / va : 0.0;
  out.psi_AA = va > 0 ? masked_integral(field, part.cavity) / va : 0.0;
  out.psi_SS = vs > 0 ? masked_integral(field, part.sphere) / vs : 0.0;
  return out;
}

RegionalDensities regional_densities(const VoxelGrid& field, const RegionPartition& part) {
  check_lattice(field, part);
  RegionalDensities out;
  double vc = part.core_volume(), vb = part.boundary_volume(), vs = part.sphere_volume();
  out.core_pd = vc > 0 ? masked_integral(field, part.core) / vc : 0.0;
  out.boundary_pd = vb > 0 ? masked_integral(field, part.boundary) / vb : 0.0;
  out.sphere_pd = vs > 0 ? masked_integral(field, part.sphere) / vs : 0.0;
  return out;
}

RegionFractionStd region_fraction_std(const std::vector<VoxelGrid>& grids,
                                      const RegionPartition& part) {
  if (grids.empty()) return {};
  for (const VoxelGrid& g : grids) check_lattice(g, part);

  auto collect = [&](const std::vector<uint8_t>& mask, double norm, double& out) {
    double mean = 0.0;
    std::vector<double> vals(grids.size());
    for (size_t i = 0; i < grids.size(); ++i) {
      vals[i] = masked_integral(grids[i], mask);
      mean += vals[i];
    }
    mean /= static_cast<double>(grids.size());
    double var = 0.0;
    for (double v : vals) var += (mean - v) * (mean - v);
    var /= static_cast<double>(grids.size());
    out = norm > 0 ? std::sqrt(var) / norm : 0.0;
  };

  RegionFractionStd out;
  double va = part.cavity_volume(), vs = part.sphere_volume();
  collect(part.boundary, va, out.psi_BA);
  collect(part.core, va, out.psi_CA);
  collect(part.cavity, va, out.psi_AA);
  collect(part.sphere, vs, out.psi_SS);
  return out;
}

std::string to_string(OcclusionClass c) {
  switch (c) {
    case OcclusionClass::I: return "I";
    case OcclusionClass::II: return "II";
    case OcclusionClass::IIIa: return "IIIa";
    case OcclusionClass::IIIb: return "IIIb";
    case OcclusionClass::Fail: return "Fail";
  }
  return "?";
}

OcclusionClass occlusion_class_from_string(const std::string& s) {
  if (s == "I") return OcclusionClass::I;
  if (s == "II") return OcclusionClass::II;
  if (s == "IIIa") return OcclusionClass::IIIa;
  if (s == "IIIb") return OcclusionClass::IIIb;
  if (s == "Fail") return OcclusionClass::Fail;
  throw InvalidConfig("unknown occlusion class: " + s);
}

void ClassifierThresholds::validate() const {
  if (!(core > 0 && core <= 1 && boundary > 0 && boundary <= 1 && sphere > 0 && sphere <= 1))
    throw InvalidConfig("classifier thresholds must lie in (0, 1]");
}

OcclusionClass classify(double core_pd, double boundary_pd, double sphere_pd,
                        const ClassifierThresholds& th) {
  bool core_full = core_pd >= th.core;
  bool boundary_full = boundary_pd >= th.boundary;
  bool sphere_full = sphere_pd >= th.sphere;
  if (boundary_full) {
    if (core_full) return sphere_full ? OcclusionClass::I : OcclusionClass::II;
    return OcclusionClass::IIIa;
  }
  return core_full ? OcclusionClass::IIIb : OcclusionClass::Fail;
}

OcclusionReport make_report(const VoxelGrid& field, const RegionPartition& part,
                            const ClassifierThresholds& th) {
  OcclusionReport rep;
  rep.fractions = region_fractions(field, part);
  rep.densities = regional_densities(field, part);
  rep.occlusion = classify(rep.densities.core_pd, rep.densities.boundary_pd,
                           rep.densities.sphere_pd, th);
  return rep;
}

SweepResult parameter_sweep(double lo, double hi, int n_samples, uint64_t seed,
                            const SweepRunner& runner, int bins, int min_per_bin) {
  if (!(hi > lo) || bins < 1) throw InvalidConfig("parameter_sweep: bad interval or bin count");
  int per_bin = n_samples / bins;
  if (per_bin < min_per_bin)
    throw InsufficientSamples("parameter_sweep: " + std::to_string(n_samples) + " samples give " +
                              std::to_string(per_bin) + " per bin, need " +
                              std::to_string(min_per_bin));

  // Stratified draw: the bin structure is guaranteed up front rather than
  // hoped for from a raw uniform sample.
  SweepResult out;
  Rng rng(Rng::derive(seed, 0x5eeb));
  double width = (hi - lo) / bins;
  std::vector<int> bin_of;
  for (int b = 0; b < bins; ++b) {
    int count = per_bin + (b < n_samples % bins ? 1 : 0);
    for (int i = 0; i < count; ++i) {
      out.samples.push_back(lo + width * b + width * rng.uniform());
      bin_of.push_back(b);
    }
  }

  std::vector<RegionFractions> results = runner(out.samples, seed);
  if (results.size() != out.samples.size())
    throw Error("parameter_sweep: runner returned wrong result count");
  out.values = results;

  out.bins.resize(bins);
  std::vector<std::vector<RegionFractions>> grouped(bins);
  for (size_t i = 0; i < results.size(); ++i) {
    if (std::isnan(results[i].psi_AA)) continue;  // failed run, re-bin over successes
    grouped[bin_of[i]].push_back(results[i]);
  }
  for (int b = 0; b < bins; ++b) {
    SweepBin& bin = out.bins[b];
    bin.center = lo + width * (b + 0.5);
    bin.count = static_cast<int>(grouped[b].size());
    if (bin.count == 0) continue;
    auto acc = [&](auto proj) {
      double mean = 0;
      for (const auto& r : grouped[b]) mean += proj(r);
      mean /= bin.count;
      double var = 0;
      for (const auto& r : grouped[b]) var += (proj(r) - mean) * (proj(r) - mean);
      return std::make_pair(mean, std::sqrt(var / bin.count));
    };
    std::tie(bin.mean.psi_BA, bin.std_dev.psi_BA) = acc([](const RegionFractions& r) { return r.psi_BA; });
    std::tie(bin.mean.psi_CA, bin.std_dev.psi_CA) = acc([](const RegionFractions& r) { return r.psi_CA; });
    std::tie(bin.mean.psi_AA, bin.std_dev.psi_AA) = acc([](const RegionFractions& r) { return r.psi_AA; });
    std::tie(bin.mean.psi_SS, bin.std_dev.psi_SS) = acc([](const RegionFractions& r) { return r.psi_SS; });
  }
  return out;
}

std::map<std::string, int> PerturbationResult::histogram() const {
  std::map<std::string, int> h = {{"I", 0}, {"II", 0}, {"IIIa", 0}, {"IIIb", 0}, {"Fail", 0}};
  for (OcclusionClass c : classes) h[to_string(c)] += 1;
  if (!failed_runs.empty()) h["error"] = static_cast<int>(failed_runs.size());
  return h;
}

PerturbationResult perturbation_ensemble(double radius, int n, uint64_t seed,
                                         const PerturbationRunner& runner) {
  if (n < 1 || radius < 0) throw InvalidConfig("perturbation_ensemble: bad parameters");
  PerturbationResult out;
  Rng rng(Rng::derive(seed, 0x9e27));
  out.offsets.reserve(n);
  for (int i = 0; i < n; ++i) out.offsets.push_back(radius > 0 ? rng.in_ball(radius) : Vec3::Zero());

  auto classes = runner(out.offsets, seed);
  if (classes.size() != out.offsets.size())
    throw Error("perturbation_ensemble: runner returned wrong result count");
  for (size_t i = 0; i < classes.size(); ++i) {
    if (classes[i])
      out.classes.push_back(*classes[i]);
    else
      out.failed_runs.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace coilsim
