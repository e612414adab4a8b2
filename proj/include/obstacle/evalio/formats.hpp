#pragma once

// On-disk formats. Numbers are written with 17 significant digits so text
// round trips are lossless; checkpoints carry raw little-endian doubles.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "obstacle/networks/network.hpp"
#include "obstacle/optimizer/s2foba.hpp"
#include "obstacle/oracle/grid.hpp"

namespace obstacle::evalio {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& what);

  std::size_t line;
  std::size_t column;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_double(double v);

// Trajectory CSV: header row then one row per iteration.
inline constexpr const char* kTrajectoryHeader = "iter,upper_loss,lower_loss,alpha,beta,eta,c_k,wall_ms";
void write_trajectory(std::ostream& os, const std::vector<opt::TrajectoryRow>& rows);
void write_trajectory(const std::filesystem::path& path, const std::vector<opt::TrajectoryRow>& rows);
std::vector<opt::TrajectoryRow> read_trajectory(std::istream& is, const std::string& source = "<stream>");
std::vector<opt::TrajectoryRow> read_trajectory(const std::filesystem::path& path);

// Field dump: "# x1 x2 <name>" then "x1 x2 value" per interior node.
void write_field(std::ostream& os, const oracle::GridField& f, const std::string& name);
void write_field(const std::filesystem::path& path, const oracle::GridField& f, const std::string& name);
oracle::GridField read_field(std::istream& is, const std::string& source = "<stream>");

struct Checkpoint {
  std::string problem;
  std::string stage;  // stage1, stage2, single_level
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
  net::NetworkSpec state_spec;
  net::NetworkSpec control_spec;
  std::vector<double> state;
  std::vector<double> control;
};

/// One text header line, then state and control parameters as consecutive
/// little-endian IEEE-754 doubles.
void save_checkpoint(std::ostream& os, const Checkpoint& c);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(std::istream& is, const std::string& source = "<stream>");
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string describe_spec(const net::NetworkSpec& s);
net::NetworkSpec parse_spec(const std::string& text);

}  // namespace obstacle::evalio
