#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <stdexcept>
#include <string>

namespace coilsim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Base class for all library errors. Subclasses name the failure mode so
// callers can map them to exit codes / diagnostics.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class AntiParallelTangents : public Error {
 public:
  explicit AntiParallelTangents(const std::string& msg) : Error(msg) {}
};

class SizeMismatch : public Error {
 public:
  explicit SizeMismatch(const std::string& msg) : Error(msg) {}
};

class DegenerateCenterline : public Error {
 public:
  explicit DegenerateCenterline(const std::string& msg) : Error(msg) {}
};

class DegenerateSegment : public Error {
 public:
  explicit DegenerateSegment(const std::string& msg) : Error(msg) {}
};

class DegenerateTriangle : public Error {
 public:
  explicit DegenerateTriangle(const std::string& msg) : Error(msg) {}
};

class DegenerateSpline : public Error {
 public:
  explicit DegenerateSpline(const std::string& msg) : Error(msg) {}
};

class NotWatertight : public Error {
 public:
  explicit NotWatertight(const std::string& msg) : Error(msg) {}
};

class OutOfBounds : public Error {
 public:
  explicit OutOfBounds(const std::string& msg) : Error(msg) {}
};

class LatticeMismatch : public Error {
 public:
  explicit LatticeMismatch(const std::string& msg) : Error(msg) {}
};

class InsufficientSamples : public Error {
 public:
  explicit InsufficientSamples(const std::string& msg) : Error(msg) {}
};

class NeckNotDefined : public Error {
 public:
  explicit NeckNotDefined(const std::string& msg) : Error(msg) {}
};

class StepDiverged : public Error {
 public:
  explicit StepDiverged(const std::string& msg) : Error(msg) {}
};

class CoilStuck : public Error {
 public:
  explicit CoilStuck(const std::string& msg) : Error(msg) {}
};

class InvalidConfig : public Error {
 public:
  explicit InvalidConfig(const std::string& msg) : Error(msg) {}
};

}  // namespace coilsim
