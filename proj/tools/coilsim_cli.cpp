#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "coilsim/io.hpp"
#include "coilsim/rng.hpp"
#include "coilsim/scenario.hpp"

namespace fs = std::filesystem;
using namespace coilsim;
using nlohmann::json;

namespace {

constexpr int kExitSimFailure = 1;
constexpr int kExitBadInput = 2;

int default_workers() {
  if (const char* env = std::getenv("COILSIM_WORKERS")) {
    int w = std::atoi(env);
    if (w > 0) return w;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string timestamp_utc() {
  auto now = std::chrono::system_clock::now();
  std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", std::gmtime(&tt));
  return buf;
}

// Index-ordered parallel map; results land by index so aggregation order
// never depends on scheduling.
template <typename Fn>
void parallel_for_indices(int n, int workers, Fn&& fn) {
  std::atomic<int> next{0};
  auto worker = [&] {
    while (true) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  int count = std::max(1, std::min(workers, n));
  pool.reserve(count);
  for (int w = 0; w < count; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

std::mutex log_mutex;
void log_line(const std::string& s) {
  std::lock_guard<std::mutex> lock(log_mutex);
  std::cerr << s << "\n";
}

struct ThresholdFlags {
  double core = -1, boundary = -1, sphere = -1;
  void apply(ClassifierThresholds& th) const {
    if (core >= 0) th.core = core;
    if (boundary >= 0) th.boundary = boundary;
    if (sphere >= 0) th.sphere = sphere;
    th.validate();
  }
  void add_to(CLI::App* cmd) {
    cmd->add_option("--core-th", core, "core packing density threshold");
    cmd->add_option("--boundary-th", boundary, "boundary packing density threshold");
    cmd->add_option("--sphere-th", sphere, "sphere packing density threshold");
  }
};

void apply_sweep_variable(Scenario& sc, const std::string& variable, double value) {
  if (variable == "E_w")
    sc.coil.E_w = value;
  else if (variable == "D2")
    sc.coil.D2 = value;
  else if (variable == "D3")
    sc.coil.D3 = value;
  else
    throw InvalidConfig("sweep variable must be one of E_w, D2, D3");
  sc.sim.node_mass = node_mass(sc.coil, sc.resolved_edge_length());
}

json report_json(const OcclusionReport& rep, const ClassifierThresholds& th) {
  return json{{"class", to_string(rep.occlusion)},
              {"fractions",
               {{"psi_BA", rep.fractions.psi_BA},
                {"psi_CA", rep.fractions.psi_CA},
                {"psi_AA", rep.fractions.psi_AA},
                {"psi_SS", rep.fractions.psi_SS}}},
              {"densities",
               {{"core_pd", rep.densities.core_pd},
                {"boundary_pd", rep.densities.boundary_pd},
                {"sphere_pd", rep.densities.sphere_pd}}},
              {"thresholds", {{"core", th.core}, {"boundary", th.boundary}, {"sphere", th.sphere}}}};
}

int cmd_simulate(const std::string& config_path, uint64_t seed_override, bool has_seed,
                 const std::string& out_override, int snapshot_every) {
  Scenario sc = load_scenario(config_path);
  if (has_seed) sc.seed = seed_override;
  if (!out_override.empty()) sc.out_dir = out_override;
  if (snapshot_every >= 0) sc.sim.snapshot_every = snapshot_every;

  std::string dir = sc.out_dir + "/run_" + timestamp_utc() + "_seed" + std::to_string(sc.seed);
  std::cerr << "[coilsim] simulate -> " << dir << "\n";

  ScenarioAnalysis analysis = build_scenario_analysis(sc);
  RunOutput out = run_deployment(sc, sc.seed, Vec3::Zero(), &analysis);
  write_run_outputs(sc, out, out.snapshots, dir, sc.seed, read_file(config_path));
  save_lattice_field(analysis.sdf.lattice, analysis.sdf.values, dir + "/sdf");

  std::cerr << "[coilsim] inserted " << out.diagnostics.inserted_length << " m, class "
            << to_string(out.report.occlusion) << ", " << out.run_seconds << " s\n";
  std::cout << dir << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& variable, double lo, double hi,
              int n, int bins, int min_per_bin, uint64_t seed_override, bool has_seed,
              const std::string& out_override, int workers, bool resume) {
  Scenario base = load_scenario(config_path);
  if (has_seed) base.seed = seed_override;
  if (!out_override.empty()) base.out_dir = out_override;

  std::string dir = base.out_dir + "/sweep_" + variable + "_seed" + std::to_string(base.seed);
  fs::create_directories(dir + "/runs");
  std::string config_text = read_file(config_path);

  ScenarioAnalysis analysis = build_scenario_analysis(base);

  std::atomic<int> failures{0};

  SweepRunner runner = [&](const std::vector<double>& values, uint64_t seed) {
    std::vector<RegionFractions> results(values.size());
    parallel_for_indices(static_cast<int>(values.size()), workers, [&](int i) {
      char name[64];
      std::snprintf(name, sizeof(name), "/runs/run_%05d", i);
      std::string run_dir = dir + name;
      uint64_t run_seed = Rng::derive(seed, i);

      if (resume && fs::exists(run_dir + "/manifest.json") && fs::exists(run_dir + "/report.json")) {
        std::ifstream rf(run_dir + "/report.json");
        json rep = json::parse(rf);
        results[i] = {rep["fractions"]["psi_BA"], rep["fractions"]["psi_CA"],
                      rep["fractions"]["psi_AA"], rep["fractions"]["psi_SS"]};
        log_line("[coilsim] sweep " + std::to_string(i) + ": resumed");
        return;
      }
      try {
        Scenario sc = base;
        apply_sweep_variable(sc, variable, values[i]);
        RunOutput out = run_deployment(sc, run_seed, Vec3::Zero(), &analysis);
        write_run_outputs(sc, out, {}, run_dir, run_seed, config_text);
        results[i] = out.report.fractions;
        log_line("[coilsim] sweep " + std::to_string(i) + ": " + variable + "=" +
                 std::to_string(values[i]) + " class " + to_string(out.report.occlusion));
      } catch (const std::exception& e) {
        results[i] = {NAN, NAN, NAN, NAN};
        ++failures;
        log_line(std::string("[coilsim] sweep run failed: ") + e.what());
      }
    });
    return results;
  };

  SweepResult res = parameter_sweep(lo, hi, n, base.seed, runner, bins, min_per_bin);

  std::ofstream curves(dir + "/curves.csv");
  curves << "bin_center,count,psi_BA_mean,psi_BA_std,psi_CA_mean,psi_CA_std,"
            "psi_AA_mean,psi_AA_std,psi_SS_mean,psi_SS_std\n"
         << std::setprecision(12);
  for (const SweepBin& b : res.bins)
    curves << b.center << ',' << b.count << ',' << b.mean.psi_BA << ',' << b.std_dev.psi_BA << ','
           << b.mean.psi_CA << ',' << b.std_dev.psi_CA << ',' << b.mean.psi_AA << ','
           << b.std_dev.psi_AA << ',' << b.mean.psi_SS << ',' << b.std_dev.psi_SS << '\n';
  curves.close();

  json manifest = {{"tool", version_string()}, {"variable", variable}, {"interval", {lo, hi}},
                   {"samples", n},             {"bins", bins},         {"seed", base.seed},
                   {"failures", failures.load()}, {"curves", "curves.csv"}};
  std::ofstream mf(dir + "/manifest.json");
  mf << manifest.dump(2) << '\n';

  std::cerr << "[coilsim] sweep complete, " << failures.load() << " failures -> " << dir << "\n";
  std::cout << dir << "\n";
  return failures.load() == n ? kExitSimFailure : 0;
}

int cmd_perturb(const std::string& config_path, double radius, int n, uint64_t seed_override,
                bool has_seed, const std::string& out_override, int workers) {
  Scenario base = load_scenario(config_path);
  if (has_seed) base.seed = seed_override;
  if (!out_override.empty()) base.out_dir = out_override;

  std::string dir = base.out_dir + "/perturb_seed" + std::to_string(base.seed);
  fs::create_directories(dir + "/runs");
  std::string config_text = read_file(config_path);

  ScenarioAnalysis analysis = build_scenario_analysis(base);

  PerturbationRunner runner = [&](const std::vector<Vec3>& offsets, uint64_t seed) {
    std::vector<std::optional<OcclusionClass>> classes(offsets.size());
    parallel_for_indices(static_cast<int>(offsets.size()), workers, [&](int i) {
      char name[64];
      std::snprintf(name, sizeof(name), "/runs/run_%05d", i);
      uint64_t run_seed = Rng::derive(seed, i);
      try {
        RunOutput out = run_deployment(base, run_seed, offsets[i], &analysis);
        write_run_outputs(base, out, {}, dir + name, run_seed, config_text);
        classes[i] = out.report.occlusion;
        log_line("[coilsim] perturb " + std::to_string(i) + ": class " +
                 to_string(out.report.occlusion));
      } catch (const std::exception& e) {
        classes[i] = std::nullopt;
        log_line(std::string("[coilsim] perturb run failed: ") + e.what());
      }
    });
    return classes;
  };

  PerturbationResult res = perturbation_ensemble(radius, n, base.seed, runner);
  auto hist = res.histogram();

  // class histogram: one count per class for this scenario
  std::ofstream hf(dir + "/histogram.csv");
  hf << "class,count\n";
  for (const char* cls : {"I", "II", "IIIa", "IIIb", "Fail"})
    hf << cls << ',' << (hist.count(cls) ? hist[cls] : 0) << '\n';
  if (hist.count("error")) hf << "error," << hist["error"] << '\n';
  hf.close();

  json manifest = {{"tool", version_string()},
                   {"radius", radius},
                   {"samples", n},
                   {"seed", base.seed},
                   {"histogram", hist},
                   {"failures", static_cast<int>(res.failed_runs.size())}};
  std::ofstream mf(dir + "/manifest.json");
  mf << manifest.dump(2) << '\n';

  std::cerr << "[coilsim] perturbation ensemble complete -> " << dir << "\n";
  std::cout << dir << "\n";
  return 0;
}

int cmd_voxelize(const std::string& config_path, const std::string& centerline_path,
                 const std::string& out_prefix, int nv) {
  Scenario sc = load_scenario(config_path);
  if (nv > 0) sc.voxels_per_axis = nv;
  std::vector<Vec3> centerline = load_centerline_csv(centerline_path);
  Lattice lat = cavity_lattice(sc.cavity_feed, sc.voxels_per_axis, sc.coil.D2);
  VoxelGrid grid = voxelize(centerline, sc.coil.D2, lat);
  save_lattice_field(grid.lattice, grid.values, out_prefix);
  std::cerr << "[coilsim] voxelized " << centerline.size() << " nodes, coil volume "
            << voxel_volume(grid) << " m^3 -> " << out_prefix << ".raw\n";
  return 0;
}

int cmd_classify(const std::string& config_path, const std::string& grid_prefix,
                 const ThresholdFlags& flags, const std::string& out_path) {
  Scenario sc = load_scenario(config_path);
  flags.apply(sc.thresholds);

  auto [lat, values] = load_lattice_field(grid_prefix);
  ScenarioAnalysis analysis = build_scenario_analysis(sc);
  if (!analysis.lattice.same_as(lat))
    throw LatticeMismatch("voxel grid lattice differs from the scenario lattice");
  VoxelGrid grid{lat, std::move(values)};

  OcclusionReport rep = make_report(grid, analysis.partition, sc.thresholds);
  std::ofstream of(out_path);
  if (!of) throw Error("cannot write " + out_path);
  of << report_json(rep, sc.thresholds).dump(2) << '\n';
  std::cerr << "[coilsim] class " << to_string(rep.occlusion) << " -> " << out_path << "\n";
  return 0;
}

int cmd_report(const std::string& run_dir, const ThresholdFlags& flags) {
  std::string manifest_path = run_dir + "/manifest.json";
  if (!fs::exists(manifest_path)) throw InvalidConfig("no manifest.json in " + run_dir);
  std::ifstream mf(manifest_path);
  json manifest = json::parse(mf);

  Scenario sc = scenario_from_json(manifest.at("config").dump(), run_dir);
  flags.apply(sc.thresholds);

  auto [lat, values] = load_lattice_field(run_dir + "/voxels");
  VoxelGrid grid{lat, std::move(values)};
  ScenarioAnalysis analysis = build_scenario_analysis(sc);
  OcclusionReport rep = make_report(grid, analysis.partition, sc.thresholds);

  std::ofstream of(run_dir + "/report.json");
  of << report_json(rep, sc.thresholds).dump(2) << '\n';
  std::cerr << "[coilsim] report regenerated: class " << to_string(rep.occlusion) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coilsim: elastic-wire deployment simulator and occlusion analysis"};
  app.require_subcommand(1);

  std::string config, out_dir, centerline, grid_prefix, run_dir, variable, out_path;
  uint64_t seed = 0;
  bool has_seed = false;
  int workers = default_workers();
  int snapshot_every = -1;
  double lo = 0, hi = 0, radius = 1e-3;
  int n = 50, bins = 5, min_per_bin = 30, nv = 0;
  bool resume = false;
  ThresholdFlags thresholds;

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option_function<uint64_t>(
        "--seed",
        [&](const uint64_t& v) {
          seed = v;
          has_seed = true;
        },
        "override the config seed");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "run one deployment");
  simulate->add_option("--config", config, "run configuration (JSON)")->required();
  simulate->add_option("--out", out_dir, "output directory root");
  simulate->add_option("--snapshot-every", snapshot_every, "steps between checkpoints");
  add_seed(simulate);

  CLI::App* sweep = app.add_subcommand("sweep", "interval-binned parameter sweep");
  sweep->add_option("--config", config)->required();
  sweep->add_option("--variable", variable, "E_w | D2 | D3")->required();
  sweep->add_option("--lo", lo, "interval lower bound")->required();
  sweep->add_option("--hi", hi, "interval upper bound")->required();
  sweep->add_option("--n", n, "number of samples")->required();
  sweep->add_option("--bins", bins);
  sweep->add_option("--min-per-bin", min_per_bin);
  sweep->add_option("--out", out_dir);
  sweep->add_option("--workers", workers);
  sweep->add_flag("--resume", resume, "skip completed run directories");
  add_seed(sweep);

  CLI::App* perturb = app.add_subcommand("perturb", "catheter-tip perturbation ensemble");
  perturb->add_option("--config", config)->required();
  perturb->add_option("--radius", radius, "perturbation ball radius [m]");
  perturb->add_option("--n", n, "ensemble size");
  perturb->add_option("--out", out_dir);
  perturb->add_option("--workers", workers);
  add_seed(perturb);

  CLI::App* voxelize_cmd = app.add_subcommand("voxelize", "voxelize a centerline CSV");
  voxelize_cmd->add_option("--config", config)->required();
  voxelize_cmd->add_option("--centerline", centerline)->required();
  voxelize_cmd->add_option("--out", out_path, "output path prefix")->required();
  voxelize_cmd->add_option("--nv", nv, "voxels per axis");

  CLI::App* classify_cmd = app.add_subcommand("classify", "classify a voxel grid");
  classify_cmd->add_option("--config", config)->required();
  classify_cmd->add_option("--grid", grid_prefix, "lattice field path prefix")->required();
  classify_cmd->add_option("--out", out_path, "report output path")->required();
  thresholds.add_to(classify_cmd);

  CLI::App* report = app.add_subcommand("report", "regenerate a run report");
  report->add_option("--run", run_dir, "run directory")->required();
  thresholds.add_to(report);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed())
      return cmd_simulate(config, seed, has_seed, out_dir, snapshot_every);
    if (sweep->parsed())
      return cmd_sweep(config, variable, lo, hi, n, bins, min_per_bin, seed, has_seed, out_dir,
                       workers, resume);
    if (perturb->parsed())
      return cmd_perturb(config, radius, n, seed, has_seed, out_dir, workers);
    if (voxelize_cmd->parsed()) return cmd_voxelize(config, centerline, out_path, nv);
    if (classify_cmd->parsed()) return cmd_classify(config, grid_prefix, thresholds, out_path);
    if (report->parsed()) return cmd_report(run_dir, thresholds);
  } catch (const InvalidConfig& e) {
    std::cerr << "[coilsim] input error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const LatticeMismatch& e) {
    std::cerr << "[coilsim] input error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const NotWatertight& e) {
    std::cerr << "[coilsim] input error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const InsufficientSamples& e) {
    std::cerr << "[coilsim] input error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const Error& e) {
    std::cerr << "[coilsim] simulation error: " << e.what() << "\n";
    return kExitSimFailure;
  } catch (const std::exception& e) {
    std::cerr << "[coilsim] error: " << e.what() << "\n";
    return kExitSimFailure;
  }
  return 0;
}
