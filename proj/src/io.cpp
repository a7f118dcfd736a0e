#include "coilsim/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace coilsim {

std::vector<Vec3> load_centerline_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open centerline file: " + path);
  std::vector<Vec3> pts;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream ls(line);
    Vec3 p;
    if (!(ls >> p.x() >> p.y() >> p.z())) {
      if (lineno == 1) continue;  // header row
      throw InvalidConfig(path + ":" + std::to_string(lineno) + ": expected x,y,z");
    }
    pts.push_back(p);
  }
  return pts;
}

void save_centerline_csv(const std::vector<Vec3>& points, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "x,y,z\n" << std::setprecision(17);
  for (const Vec3& p : points) out << p.x() << ',' << p.y() << ',' << p.z() << '\n';
}

void save_lattice_field(const Lattice& lattice, const std::vector<double>& values,
                        const std::string& path_prefix) {
  if (values.size() != lattice.size()) throw LatticeMismatch("save_lattice_field: size mismatch");
  nlohmann::json manifest = {
      {"dims", {lattice.dims[0], lattice.dims[1], lattice.dims[2]}},
      {"origin", {lattice.origin.x(), lattice.origin.y(), lattice.origin.z()}},
      {"spacing", lattice.spacing},
      {"order", "x-fastest"},
      {"dtype", "float64"},
  };
  std::ofstream mh(path_prefix + ".json");
  if (!mh) throw Error("cannot write " + path_prefix + ".json");
  mh << manifest.dump(2) << '\n';

  std::ofstream raw(path_prefix + ".raw", std::ios::binary);
  if (!raw) throw Error("cannot write " + path_prefix + ".raw");
  raw.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

std::pair<Lattice, std::vector<double>> load_lattice_field(const std::string& path_prefix) {
  std::ifstream mh(path_prefix + ".json");
  if (!mh) throw InvalidConfig("cannot open " + path_prefix + ".json");
  nlohmann::json manifest = nlohmann::json::parse(mh);
  Lattice lat;
  lat.dims = {manifest["dims"][0], manifest["dims"][1], manifest["dims"][2]};
  lat.origin = Vec3(manifest["origin"][0], manifest["origin"][1], manifest["origin"][2]);
  lat.spacing = manifest["spacing"];

  std::ifstream raw(path_prefix + ".raw", std::ios::binary);
  if (!raw) throw InvalidConfig("cannot open " + path_prefix + ".raw");
  std::vector<double> values(lat.size());
  raw.read(reinterpret_cast<char*>(values.data()),
           static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!raw) throw InvalidConfig(path_prefix + ".raw truncated");
  return {lat, std::move(values)};
}

}  // namespace coilsim
