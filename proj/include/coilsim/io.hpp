#pragma once

#include <string>
#include <vector>

#include "coilsim/geometry.hpp"
#include "coilsim/types.hpp"

namespace coilsim {

// Centerline CSV: one "x,y,z" row per node; a header row is tolerated on
// read and written on save.
std::vector<Vec3> load_centerline_csv(const std::string& path);
void save_centerline_csv(const std::vector<Vec3>& points, const std::string& path);

// Scalar lattice exchange format: <path>.raw holds little-endian float64
// values (x fastest), <path>.json a manifest {dims, origin, spacing}.
void save_lattice_field(const Lattice& lattice, const std::vector<double>& values,
                        const std::string& path_prefix);
std::pair<Lattice, std::vector<double>> load_lattice_field(const std::string& path_prefix);

}  // namespace coilsim
