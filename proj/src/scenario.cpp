#include "coilsim/scenario.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "coilsim/io.hpp"
#include "coilsim/rng.hpp"

namespace coilsim {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version_string() { return "coilsim 0.1.0"; }

namespace {

Vec3 vec3_of(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3)
    throw InvalidConfig("config key '" + key + "': expected [x, y, z]");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

double get_or(const json& j, const std::string& key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

TriangleMesh mesh_from_config(const json& j, const std::string& base_dir, const std::string& key) {
  if (j.contains("stl") || j.contains("obj") || j.contains("path")) {
    std::string rel = j.contains("path") ? j.at("path").get<std::string>()
                      : j.contains("stl") ? j.at("stl").get<std::string>()
                                          : j.at("obj").get<std::string>();
    fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : fs::path(base_dir) / rel;
    if (!fs::exists(p))
      throw InvalidConfig("config key '" + key + "': mesh file not found: " + p.string());
    return load_mesh(p.string());
  }
  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    std::string type = s.at("type").get<std::string>();
    if (type == "sphere_with_neck")
      return make_sphere_with_neck(s.at("radius").get<double>(), s.at("neck_radius").get<double>(),
                                   s.at("neck_length").get<double>(),
                                   s.at("edge_length").get<double>());
    if (type == "icosphere")
      return make_icosphere(s.at("radius").get<double>(), s.value("subdivisions", 3));
    throw InvalidConfig("config key '" + key + "': unknown synthetic mesh type: " + type);
  }
  throw InvalidConfig("config key '" + key + "': expected a mesh path or a synthetic block");
}

}  // namespace

Scenario scenario_from_json(const std::string& json_text, const std::string& base_dir) {
  json cfg;
  try {
    cfg = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw InvalidConfig(std::string("config parse error: ") + e.what());
  }

  Scenario sc;

  const json& coil = cfg.at("coil");
  sc.coil.D1 = get_or(coil, "D1", sc.coil.D1);
  sc.coil.D2 = get_or(coil, "D2", sc.coil.D2);
  sc.coil.D3 = get_or(coil, "D3", sc.coil.D3);
  sc.coil.pitch_factor = get_or(coil, "pitch_factor", sc.coil.pitch_factor);
  sc.coil.E_w = get_or(coil, "E_w", sc.coil.E_w);
  sc.coil.mu_w = get_or(coil, "mu_w", sc.coil.mu_w);
  sc.coil.rho = get_or(coil, "rho", sc.coil.rho);
  sc.shape = coil.value("shape", sc.shape);
  sc.helix_pitch = get_or(coil, "helix_pitch", 0.0);
  sc.shape_seed = coil.value("shape_seed", sc.shape_seed);
  sc.edge_length = get_or(coil, "edge_length", 0.0);
  if (sc.shape != "straight" && sc.shape != "helix" && sc.shape != "frame3d")
    throw InvalidConfig("coil.shape must be straight | helix | frame3d");

  if (!cfg.contains("cavity")) throw InvalidConfig("config key 'cavity' is required");
  sc.cavity_feed = mesh_from_config(cfg.at("cavity"), base_dir, "cavity");
  if (cfg.contains("cavity_full")) {
    sc.cavity_full = mesh_from_config(cfg.at("cavity_full"), base_dir, "cavity_full");
    sc.has_full_mesh = true;
  } else {
    sc.cavity_full = sc.cavity_feed;
  }

  const json& neck = cfg.at("neck");
  sc.neck_point = vec3_of(neck.at("point"), "neck.point");
  sc.neck_normal = vec3_of(neck.at("normal"), "neck.normal");
  if (neck.contains("sphere_center"))
    sc.neck_sphere_center = vec3_of(neck.at("sphere_center"), "neck.sphere_center");
  if (neck.contains("sphere_radius")) sc.neck_sphere_radius = neck.at("sphere_radius").get<double>();

  const json& cath = cfg.at("catheter");
  const json& pts = cath.at("points");
  if (!pts.is_array() || pts.size() != 3)
    throw InvalidConfig("catheter.points: expected exactly 3 control points");
  for (int i = 0; i < 3; ++i) sc.catheter_points[i] = vec3_of(pts[i], "catheter.points");
  sc.catheter_radius = cath.at("radius").get<double>();
  sc.catheter_circ_segments = cath.value("circ_segments", 24);

  if (cfg.contains("contact")) {
    const json& c = cfg.at("contact");
    sc.contact.k_sc = get_or(c, "k_sc", sc.contact.k_sc);
    sc.contact.k_w = get_or(c, "k_w", sc.contact.k_w);
    sc.contact.gamma_sc = get_or(c, "gamma_sc", sc.contact.gamma_sc);
    sc.contact.gamma_w = get_or(c, "gamma_w", sc.contact.gamma_w);
    sc.contact.mu_slip_cc = get_or(c, "mu_slip_cc", sc.contact.mu_slip_cc);
    sc.contact.mu_slip_cw = get_or(c, "mu_slip_cw", sc.contact.mu_slip_cw);
    sc.contact.mu_stick_cw = get_or(c, "mu_stick_cw", sc.contact.mu_stick_cw);
    sc.contact.v_eps = get_or(c, "v_eps", sc.contact.v_eps);
  }
  sc.contact.validate();

  const json& sim = cfg.at("sim");
  sc.sim.dt = get_or(sim, "dt", 0.0);
  if (sim.contains("v_push")) {
    sc.sim.v_push = vec3_of(sim.at("v_push"), "sim.v_push");
  } else {
    // Scalar speed along the catheter axis (inlet -> tip).
    double speed = get_or(sim, "push_speed", 0.03);
    Vec3 axis = sc.catheter_points[2] - sc.catheter_points[0];
    if (axis.norm() == 0) throw InvalidConfig("catheter control points degenerate");
    sc.sim.v_push = speed * axis.normalized();
  }
  sc.sim.eta_x = get_or(sim, "eta_x", sc.sim.eta_x);
  sc.sim.eta_phi = get_or(sim, "eta_phi", sc.sim.eta_phi);
  sc.sim.psi_target = get_or(sim, "psi_target", sc.sim.psi_target);
  if (sim.contains("gravity")) sc.sim.body_accel = vec3_of(sim.at("gravity"), "sim.gravity");
  sc.sim.release_wall_after_insertion =
      sim.value("release_wall_after_insertion", sc.sim.release_wall_after_insertion);
  sc.sim.settle_time = get_or(sim, "settle_time", sc.sim.settle_time);
  sc.sim.snapshot_every = sim.value("snapshot_every", 0);
  sc.sim.max_sim_time = get_or(sim, "max_sim_time", 0.0);
  sc.sim.node_mass = node_mass(sc.coil, sc.resolved_edge_length());

  if (cfg.contains("classify")) {
    const json& cl = cfg.at("classify");
    sc.thresholds.core = get_or(cl, "core_th", sc.thresholds.core);
    sc.thresholds.boundary = get_or(cl, "boundary_th", sc.thresholds.boundary);
    sc.thresholds.sphere = get_or(cl, "sphere_th", sc.thresholds.sphere);
  }
  sc.thresholds.validate();
  sc.voxels_per_axis = cfg.value("nv", 70);

  sc.seed = cfg.value("seed", 1);
  sc.out_dir = cfg.value("out", "runs");

  sc.cavity_volume = mesh_volume(sc.cavity_feed);
  if (sc.cavity_volume <= 0)
    throw InvalidConfig("cavity mesh has negative volume (inward orientation)");

  std::cerr << "[coilsim] cavity " << ingestion_report(sc.cavity_feed, sc.coil.D2) << "\n";
  if (sc.has_full_mesh)
    std::cerr << "[coilsim] cavity_full " << ingestion_report(sc.cavity_full, sc.coil.D2) << "\n";

  return sc;
}

Scenario load_scenario(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw InvalidConfig("cannot open config: " + config_path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return scenario_from_json(text, fs::path(config_path).parent_path().string());
}

std::vector<Vec3> scenario_centerline(const Scenario& sc, uint64_t seed) {
  double L = coil_length_for_density(sc.sim.psi_target, sc.coil.D2, sc.cavity_volume);
  double ell = sc.resolved_edge_length();
  if (sc.shape == "straight") return make_straight(L, ell);
  if (sc.shape == "helix") return make_helix(sc.coil.D3, sc.resolved_helix_pitch(), L, ell);
  return make_3d_frame_shape(sc.coil.D3, L, ell, Rng::derive(seed, sc.shape_seed));
}

ScenarioAnalysis build_scenario_analysis(const Scenario& sc) {
  ScenarioAnalysis out;
  out.lattice = cavity_lattice(sc.cavity_feed, sc.voxels_per_axis, sc.coil.D2);
  out.sdf = build_sdf(sc.cavity_feed, out.lattice);
  NeckSphere neck = neck_sphere(sc.cavity_feed, sc.neck_point, sc.neck_normal,
                                sc.neck_sphere_center, sc.neck_sphere_radius);
  out.partition = build_partition(out.sdf, neck);
  return out;
}

RunOutput run_deployment(const Scenario& sc, uint64_t seed, const Vec3& tip_offset,
                         const ScenarioAnalysis* analysis) {
  auto t0 = std::chrono::steady_clock::now();

  std::array<Vec3, 3> cath_pts = sc.catheter_points;
  cath_pts[2] += tip_offset;
  SimConfig sim = sc.sim;
  if (tip_offset.squaredNorm() > 0) {
    // Re-aim the push direction at the perturbed tip.
    double speed = sc.sim.v_push.norm();
    Vec3 axis = cath_pts[2] - cath_pts[0];
    if (axis.norm() == 0) throw InvalidConfig("perturbed catheter degenerate");
    sim.v_push = speed * axis.normalized();
  }

  Catheter catheter(cath_pts, sc.catheter_radius, sc.catheter_circ_segments);

  std::vector<Vec3> centerline = scenario_centerline(sc, seed);
  NaturalShape nat = build_natural_shape(centerline);

  DeploymentSetup setup;
  setup.natural = nat;
  setup.stiffness = spring_constants(sc.coil, 0.1);
  setup.D2 = sc.coil.D2;
  setup.contact = sc.contact;
  setup.sim = sim;
  setup.cavity_feed = &sc.cavity_feed;
  setup.cavity_full = sc.has_full_mesh ? &sc.cavity_full : nullptr;
  setup.catheter = &catheter;

  DeploymentResult dep = insert_coil(setup);

  RunOutput out;
  out.diagnostics = dep.diagnostics;
  out.final_centerline = dep.final_state.positions;
  out.snapshots = std::move(dep.snapshots);
  out.length_based_psi =
      packing_density(dep.diagnostics.inserted_length, sc.coil.D2, sc.cavity_volume);

  ScenarioAnalysis local_analysis;
  if (!analysis) {
    local_analysis = build_scenario_analysis(sc);
    analysis = &local_analysis;
  }
  out.voxels = voxelize(out.final_centerline, sc.coil.D2, analysis->lattice);
  out.report = make_report(out.voxels, analysis->partition, sc.thresholds);

  out.run_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::string write_run_outputs(const Scenario& sc, const RunOutput& out,
                              const std::vector<Snapshot>& snapshots, const std::string& dir,
                              uint64_t seed, const std::string& config_snapshot) {
  fs::create_directories(dir);

  save_centerline_csv(out.final_centerline, dir + "/centerline_final.csv");
  save_lattice_field(out.voxels.lattice, out.voxels.values, dir + "/voxels");

  if (!snapshots.empty()) {
    fs::create_directories(dir + "/snapshots");
    int idx = 0;
    for (const Snapshot& s : snapshots) {
      char name[64];
      std::snprintf(name, sizeof(name), "/snapshots/snap_%06d.csv", idx++);
      save_centerline_csv(s.positions, dir + name);
    }
  }

  json report = {
      {"class", to_string(out.report.occlusion)},
      {"fractions",
       {{"psi_BA", out.report.fractions.psi_BA},
        {"psi_CA", out.report.fractions.psi_CA},
        {"psi_AA", out.report.fractions.psi_AA},
        {"psi_SS", out.report.fractions.psi_SS}}},
      {"densities",
       {{"core_pd", out.report.densities.core_pd},
        {"boundary_pd", out.report.densities.boundary_pd},
        {"sphere_pd", out.report.densities.sphere_pd}}},
      {"thresholds",
       {{"core", sc.thresholds.core},
        {"boundary", sc.thresholds.boundary},
        {"sphere", sc.thresholds.sphere}}},
  };
  std::ofstream rf(dir + "/report.json");
  rf << report.dump(2) << '\n';

  json summary = {
      {"inserted_length_m", out.diagnostics.inserted_length},
      {"length_based_psi", out.length_based_psi},
      {"initial_energy_J", out.diagnostics.initial_energy},
      {"final_energy_J", out.diagnostics.final_energy},
      {"max_wall_penetration_m", out.diagnostics.max_wall_penetration},
      {"max_containment_violation_m", out.diagnostics.max_containment_violation},
      {"wall_swap_time_s", out.diagnostics.wall_swap_time},
      {"sim_time_s", out.diagnostics.sim_time},
      {"steps", out.diagnostics.steps},
      {"membership_reentries", out.diagnostics.membership_reentries},
      {"class", to_string(out.report.occlusion)},
  };
  std::ofstream sf(dir + "/summary.json");
  sf << summary.dump(2) << '\n';

  json manifest = {
      {"tool", version_string()},
      {"seed", seed},
      {"run_seconds", out.run_seconds},
      {"config", json::parse(config_snapshot, nullptr, true, true)},
      {"artifacts",
       {"centerline_final.csv", "voxels.raw", "voxels.json", "report.json", "summary.json"}},
      {"diagnostics", summary},
  };
  std::string manifest_text = manifest.dump(2);
  // Atomic publish: the manifest appears only once fully written.
  std::string tmp = dir + "/manifest.json.tmp";
  {
    std::ofstream mf(tmp);
    mf << manifest_text << '\n';
  }
  fs::rename(tmp, dir + "/manifest.json");
  return manifest_text;
}

}  // namespace coilsim
