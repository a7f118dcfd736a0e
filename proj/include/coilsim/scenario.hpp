#pragma once

#include <memory>
#include <optional>
#include <string>

#include "coilsim/analysis.hpp"
#include "coilsim/dynamics.hpp"
#include "coilsim/shapes.hpp"

namespace coilsim {

// Fully parsed run configuration; one JSON file covers the coil, the cavity
// meshes, the catheter, contact/sim parameters and the classifier setup.
struct Scenario {
  CoilSpec coil;
  std::string shape = "helix";  // straight | helix | frame3d
  double helix_pitch = 0.0;     // 0 -> 1.2 * D2
  uint64_t shape_seed = 1;
  double edge_length = 0.0;  // 0 -> D2

  TriangleMesh cavity_feed;
  TriangleMesh cavity_full;  // may equal cavity_feed
  bool has_full_mesh = false;

  Vec3 neck_point = Vec3::Zero();
  Vec3 neck_normal = Vec3::Zero();
  std::optional<Vec3> neck_sphere_center;
  std::optional<double> neck_sphere_radius;

  std::array<Vec3, 3> catheter_points;
  double catheter_radius = 0.0;
  int catheter_circ_segments = 24;

  ContactParams contact;
  SimConfig sim;
  ClassifierThresholds thresholds;
  int voxels_per_axis = 70;

  uint64_t seed = 1;
  std::string out_dir = "runs";

  double cavity_volume = 0.0;  // feed-geometry volume (packing denominator)

  // Derived pieces assembled on demand.
  double resolved_edge_length() const { return edge_length > 0 ? edge_length : coil.D2; }
  double resolved_helix_pitch() const { return helix_pitch > 0 ? helix_pitch : 1.2 * coil.D2; }
};

// Parses + validates a config file; loads or synthesizes the meshes and
// prints their ingestion reports to stderr.
Scenario load_scenario(const std::string& config_path);
Scenario scenario_from_json(const std::string& json_text, const std::string& base_dir);

// Natural-shape centerline for the configured generator, sized so the coil
// reaches sim.psi_target in the feed cavity.
std::vector<Vec3> scenario_centerline(const Scenario& sc, uint64_t seed);

// Outputs of one deployment run.
struct RunOutput {
  DeploymentDiagnostics diagnostics;
  std::vector<Vec3> final_centerline;
  std::vector<Snapshot> snapshots;
  VoxelGrid voxels;
  OcclusionReport report;
  double length_based_psi = 0.0;
  double run_seconds = 0.0;
};

// Region partition of the scenario's analysis lattice (feed geometry).
// Built once per scenario and shared across ensemble runs.
struct ScenarioAnalysis {
  Lattice lattice;
  SignedDistanceGrid sdf;
  RegionPartition partition;
};
ScenarioAnalysis build_scenario_analysis(const Scenario& sc);

// Runs one deployment for the scenario, optionally with a perturbed catheter
// tip. The analysis partition is rebuilt when not supplied.
RunOutput run_deployment(const Scenario& sc, uint64_t seed,
                         const Vec3& tip_offset = Vec3::Zero(),
                         const ScenarioAnalysis* analysis = nullptr);

// Writes run artifacts (manifest, summary, centerline, voxels, report) into
// dir; returns the manifest JSON text.
std::string write_run_outputs(const Scenario& sc, const RunOutput& out,
                              const std::vector<Snapshot>& snapshots, const std::string& dir,
                              uint64_t seed, const std::string& config_snapshot);

std::string version_string();

}  // namespace coilsim
