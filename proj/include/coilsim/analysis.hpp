#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "coilsim/geometry.hpp"
#include "coilsim/types.hpp"

namespace coilsim {

// Binary coil occupancy (single run) or mean field in [0,1] (ensemble).
struct VoxelGrid {
  Lattice lattice;
  std::vector<double> values;
};

// Cell value 1 iff the cell center lies within D2/2 of the centerline
// polyline (the swept-circle radius; D2 is the rod diameter everywhere).
// Throws OutOfBounds when the centerline leaves the lattice cube.
VoxelGrid voxelize(const std::vector<Vec3>& centerline, double D2, const Lattice& lattice);

// Coil volume represented by the grid: sum * cell volume.
double voxel_volume(const VoxelGrid& grid);

// Pointwise empirical mean and biased variance (divide by N).
struct EnsembleStats {
  VoxelGrid mean;
  VoxelGrid variance;
};
EnsembleStats ensemble_stats(const std::vector<VoxelGrid>& grids);

// Regional integrals of a (mean) field over the partition, normalized per
// the report definitions: BA/CA/AA over the full cavity volume, SS over the
// clipped sphere volume.
struct RegionFractions {
  double psi_BA = 0, psi_CA = 0, psi_AA = 0, psi_SS = 0;
};
RegionFractions region_fractions(const VoxelGrid& field, const RegionPartition& part);

// Packing densities of each region relative to the region's own volume;
// these feed the classifier thresholds.
struct RegionalDensities {
  double core_pd = 0, boundary_pd = 0, sphere_pd = 0;
};
RegionalDensities regional_densities(const VoxelGrid& field, const RegionPartition& part);

// Std of the regional integrals across an ensemble (same normalization as
// the corresponding fractions).
struct RegionFractionStd {
  double psi_BA = 0, psi_CA = 0, psi_AA = 0, psi_SS = 0;
};
RegionFractionStd region_fraction_std(const std::vector<VoxelGrid>& grids,
                                      const RegionPartition& part);

enum class OcclusionClass { I, II, IIIa, IIIb, Fail };

std::string to_string(OcclusionClass c);
OcclusionClass occlusion_class_from_string(const std::string& s);

struct ClassifierThresholds {
  double core = 0.20;
  double boundary = 0.18;
  double sphere = 0.18;
  void validate() const;
};

// Table-driven classification; "full" means the regional packing density
// reaches the threshold and above (inclusive).
OcclusionClass classify(double core_pd, double boundary_pd, double sphere_pd,
                        const ClassifierThresholds& th = {});

struct OcclusionReport {
  RegionFractions fractions;
  RegionFractionStd std_dev;
  RegionalDensities densities;
  OcclusionClass occlusion = OcclusionClass::Fail;
};

OcclusionReport make_report(const VoxelGrid& field, const RegionPartition& part,
                            const ClassifierThresholds& th = {});

// --- parameter sweep ------------------------------------------------------

struct SweepBin {
  double center = 0;
  int count = 0;
  RegionFractions mean;
  RegionFractions std_dev;
};

struct SweepResult {
  std::vector<double> samples;          // parameter values, run order
  std::vector<RegionFractions> values;  // one per successful sample
  std::vector<SweepBin> bins;
};

// Stratified uniform sampling over [lo, hi] into `bins` sub-intervals with
// at least min_per_bin samples each; the batch runner maps parameter values
// to per-run fraction results (entries may be skipped by returning NaNs,
// failures are re-binned over successes).
using SweepRunner =
    std::function<std::vector<RegionFractions>(const std::vector<double>& values, uint64_t seed)>;

SweepResult parameter_sweep(double lo, double hi, int n_samples, uint64_t seed,
                            const SweepRunner& runner, int bins = 5, int min_per_bin = 30);

// --- catheter-tip perturbation ensemble ------------------------------------

struct PerturbationResult {
  std::vector<Vec3> offsets;                 // sampled tip offsets, run order
  std::vector<OcclusionClass> classes;       // one per successful run
  std::vector<int> failed_runs;              // indices of failed runs
  std::map<std::string, int> histogram() const;
};

using PerturbationRunner =
    std::function<std::vector<std::optional<OcclusionClass>>(const std::vector<Vec3>& offsets,
                                                             uint64_t seed)>;

// Offsets sampled uniformly in a ball of `radius` around the catheter tip.
PerturbationResult perturbation_ensemble(double radius, int n, uint64_t seed,
                                         const PerturbationRunner& runner);

}  // namespace coilsim
