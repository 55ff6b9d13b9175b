#ifndef RAPOPT_IO_HPP
#define RAPOPT_IO_HPP

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rapopt/generators.hpp"
#include "rapopt/metrics.hpp"
#include "rapopt/problems.hpp"

namespace rapopt {

// Dense text format: first line "rows cols", then one whitespace-separated
// row per line. Values are written with 17 significant digits so the
// round trip is bit-exact.
void write_dense(const std::string& path, const Matrix& A);
Matrix read_dense(const std::string& path);

// Sparse text format: first line "rows cols nnz", then "i j v" triplets with
// 0-based indices.
void write_sparse(const std::string& path, const Matrix& A);
Matrix read_sparse(const std::string& path);

void write_vector(const std::string& path, const Vector& v);
Vector read_vector(const std::string& path);

std::string sha256_hex(const std::string& data);

// Writes the instance files plus a JSON descriptor embedding the generating
// spec; returns the instance digest (SHA-256 of the canonical descriptor and
// the referenced file contents, in listed order).
std::string save_instance(const std::string& dir, const ScadLsInstance& inst);
std::string save_instance(const std::string& dir,
                          const CompressedSensingInstance& inst);

struct LoadedProblem {
  std::string family;
  std::optional<ScadLsInstance> scad_ls;
  std::optional<CompressedSensingInstance> compressed_sensing;
  nlohmann::json descriptor;
};

LoadedProblem load_problem(const std::string& descriptor_path);
std::string instance_digest(const std::string& descriptor_path);

// Trajectory CSV: header pass,objective,grad_norm_sq,feasibility_sq,wall_ms;
// the feasibility cell is empty when not applicable.
void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryRow>& rows);
std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path);

// Pointwise mean of several trajectories, linearly interpolated onto the
// union of their pass grids.
std::vector<TrajectoryRow> mean_trajectory(
    const std::vector<std::vector<TrajectoryRow>>& runs);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace rapopt

#endif
