#include "rapopt/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rapopt {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

}  // namespace

void write_text_file(const std::string& path, const std::string& content) {
  auto out = open_out(path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_dense(const std::string& path, const Matrix& A) {
  auto out = open_out(path);
  out << A.rows() << ' ' << A.cols() << '\n';
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(A(i, j));
    }
    out << '\n';
  }
}

Matrix read_dense(const std::string& path) {
  auto in = open_in(path);
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0) {
    throw std::runtime_error("malformed dense matrix header: " + path);
  }
  Matrix A(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(in >> A(i, j))) {
        throw std::runtime_error("truncated dense matrix: " + path);
      }
    }
  }
  return A;
}

void write_sparse(const std::string& path, const Matrix& A) {
  long long nnz = 0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (A(i, j) != 0.0) ++nnz;
    }
  }
  auto out = open_out(path);
  out << A.rows() << ' ' << A.cols() << ' ' << nnz << '\n';
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (A(i, j) != 0.0) {
        out << i << ' ' << j << ' ' << format_double(A(i, j)) << '\n';
      }
    }
  }
}

Matrix read_sparse(const std::string& path) {
  auto in = open_in(path);
  Eigen::Index rows = 0, cols = 0;
  long long nnz = 0;
  if (!(in >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
    throw std::runtime_error("malformed sparse matrix header: " + path);
  }
  Matrix A = Matrix::Zero(rows, cols);
  for (long long k = 0; k < nnz; ++k) {
    Eigen::Index i = 0, j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v) || i < 0 || i >= rows || j < 0 || j >= cols) {
      throw std::runtime_error("malformed sparse triplet: " + path);
    }
    A(i, j) = v;
  }
  return A;
}

void write_vector(const std::string& path, const Vector& v) {
  write_dense(path, v);
}

Vector read_vector(const std::string& path) {
  const Matrix A = read_dense(path);
  if (A.cols() != 1) throw std::runtime_error("expected a column vector: " + path);
  return A.col(0);
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("sha256: context allocation failed");
  if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256: digest computation failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

namespace {

nlohmann::json scad_json(const ScadParams& p) {
  return {{"lambda", p.lambda}, {"gamma", p.gamma}, {"eps", p.eps}, {"rho", p.rho}};
}

ScadParams scad_from_json(const nlohmann::json& j) {
  ScadParams p;
  p.lambda = j.at("lambda").get<double>();
  p.gamma = j.at("gamma").get<double>();
  p.eps = j.at("eps").get<double>();
  p.rho = j.at("rho").get<double>();
  return p;
}

nlohmann::json spec_json(const GenSpec& spec) {
  return {{"family", spec.family},
          {"m", spec.m},
          {"n", spec.n},
          {"block_dim", spec.block_dim},
          {"sparsity", spec.sparsity},
          {"nnz_signal", spec.nnz_signal},
          {"seed", spec.seed},
          {"scad", scad_json(spec.scad)},
          {"penalty_weight", spec.penalty_weight}};
}

GenSpec spec_from_json(const nlohmann::json& j) {
  GenSpec spec;
  spec.family = j.at("family").get<std::string>();
  spec.m = j.at("m").get<long long>();
  spec.n = j.at("n").get<long long>();
  spec.block_dim = j.at("block_dim").get<long long>();
  spec.sparsity = j.at("sparsity").get<double>();
  spec.nnz_signal = j.at("nnz_signal").get<long long>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.scad = scad_from_json(j.at("scad"));
  spec.penalty_weight = j.at("penalty_weight").get<double>();
  return spec;
}

std::string digest_of(const std::filesystem::path& dir,
                      const nlohmann::json& descriptor) {
  std::string blob = descriptor.dump();
  for (const auto& [key, value] : descriptor.at("files").items()) {
    blob += read_text_file((dir / value.get<std::string>()).string());
  }
  return sha256_hex(blob);
}

}  // namespace

std::string save_instance(const std::string& dir, const ScadLsInstance& inst) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  write_dense((base / "A.txt").string(), inst.A);
  write_vector((base / "b.txt").string(), inst.b);
  write_vector((base / "xhat.txt").string(), inst.xhat);

  nlohmann::json desc;
  desc["spec"] = spec_json(inst.spec);
  desc["files"] = {{"A", "A.txt"}, {"b", "b.txt"}, {"xhat", "xhat.txt"}};
  desc["format"] = {{"A", "dense"}, {"b", "dense"}, {"xhat", "dense"}};
  desc["constants"] = {{"mu", inst.problem.mu}, {"L", inst.problem.L}};
  const std::string digest = digest_of(base, desc);
  desc["digest"] = digest;
  write_text_file((base / "problem.json").string(), desc.dump(2) + "\n");
  return digest;
}

std::string save_instance(const std::string& dir,
                          const CompressedSensingInstance& inst) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  const long long blocks = inst.spec.m - 1;
  // All leading block matrices stored column-concatenated in one sparse file.
  Matrix stacked(inst.spec.n, blocks * inst.spec.block_dim);
  for (long long i = 0; i < blocks; ++i) {
    stacked.middleCols(i * inst.spec.block_dim, inst.spec.block_dim) =
        inst.problem.blocks[static_cast<std::size_t>(i)].A;
  }
  write_sparse((base / "blocks.txt").string(), stacked);
  write_vector((base / "b.txt").string(), inst.b);
  write_vector((base / "xhat.txt").string(), inst.xhat);

  nlohmann::json desc;
  desc["spec"] = spec_json(inst.spec);
  desc["files"] = {{"blocks", "blocks.txt"}, {"b", "b.txt"}, {"xhat", "xhat.txt"}};
  desc["format"] = {{"blocks", "sparse"}, {"b", "dense"}, {"xhat", "dense"}};
  desc["last_block"] = "identity";
  desc["redrawn_columns"] = inst.redrawn_columns;
  desc["constants"] = {{"mu", inst.problem.mu}, {"L", inst.problem.L}};
  const std::string digest = digest_of(base, desc);
  desc["digest"] = digest;
  write_text_file((base / "problem.json").string(), desc.dump(2) + "\n");
  return digest;
}

LoadedProblem load_problem(const std::string& descriptor_path) {
  const nlohmann::json desc = nlohmann::json::parse(read_text_file(descriptor_path));
  const std::filesystem::path base =
      std::filesystem::path(descriptor_path).parent_path();
  LoadedProblem loaded;
  loaded.descriptor = desc;
  const GenSpec spec = spec_from_json(desc.at("spec"));
  loaded.family = spec.family;

  if (spec.family == "scad-ls") {
    ScadLsInstance inst;
    inst.spec = spec;
    inst.A = read_dense((base / desc.at("files").at("A").get<std::string>()).string());
    inst.b = read_vector((base / desc.at("files").at("b").get<std::string>()).string());
    inst.xhat =
        read_vector((base / desc.at("files").at("xhat").get<std::string>()).string());
    inst.problem = build_scad_ls(inst.A, inst.b, spec.scad);
    loaded.scad_ls = std::move(inst);
  } else if (spec.family == "compressed-sensing") {
    // Reconstruct deterministically from the seed, then cross-check against
    // the stored files.
    CompressedSensingInstance inst = gen_compressed_sensing(spec);
    const Matrix stacked = read_sparse(
        (base / desc.at("files").at("blocks").get<std::string>()).string());
    const Vector b =
        read_vector((base / desc.at("files").at("b").get<std::string>()).string());
    for (long long i = 0; i < spec.m - 1; ++i) {
      const Matrix& Ai = inst.problem.blocks[static_cast<std::size_t>(i)].A;
      if (Ai != stacked.middleCols(i * spec.block_dim, spec.block_dim)) {
        throw std::runtime_error("load_problem: block file disagrees with the seed");
      }
    }
    if (b != inst.b) {
      throw std::runtime_error("load_problem: right-hand side disagrees with the seed");
    }
    loaded.compressed_sensing = std::move(inst);
  } else {
    throw std::runtime_error("load_problem: unknown family " + spec.family);
  }
  return loaded;
}

std::string instance_digest(const std::string& descriptor_path) {
  nlohmann::json desc = nlohmann::json::parse(read_text_file(descriptor_path));
  desc.erase("digest");
  return digest_of(std::filesystem::path(descriptor_path).parent_path(), desc);
}

void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryRow>& rows) {
  auto out = open_out(path);
  out << "pass,objective,grad_norm_sq,feasibility_sq,wall_ms\n";
  for (const auto& r : rows) {
    out << format_double(r.pass) << ',' << format_double(r.objective) << ','
        << format_double(r.grad_norm_sq) << ',';
    if (!std::isnan(r.feasibility_sq)) out << format_double(r.feasibility_sq);
    out << ',' << r.wall_ms << '\n';
  }
}

std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty CSV: " + path);
  }
  if (line.rfind("pass,objective,grad_norm_sq", 0) != 0) {
    throw std::runtime_error("unexpected CSV header in " + path);
  }
  std::vector<TrajectoryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 5) throw std::runtime_error("malformed CSV row in " + path);
    TrajectoryRow r;
    r.pass = std::stod(cells[0]);
    r.objective = std::stod(cells[1]);
    r.grad_norm_sq = std::stod(cells[2]);
    r.feasibility_sq = cells[3].empty()
                           ? std::numeric_limits<double>::quiet_NaN()
                           : std::stod(cells[3]);
    r.wall_ms = std::stoll(cells[4]);
    rows.push_back(r);
  }
  if (rows.empty()) throw std::runtime_error("CSV has no data rows: " + path);
  return rows;
}

namespace {

template <typename Get>
double interp(const std::vector<TrajectoryRow>& rows, double pass, Get get) {
  if (pass <= rows.front().pass) return get(rows.front());
  if (pass >= rows.back().pass) return get(rows.back());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].pass >= pass) {
      const double x0 = rows[i - 1].pass, x1 = rows[i].pass;
      const double y0 = get(rows[i - 1]), y1 = get(rows[i]);
      if (x1 == x0) return y1;
      const double w = (pass - x0) / (x1 - x0);
      return y0 + w * (y1 - y0);
    }
  }
  return get(rows.back());
}

}  // namespace

std::vector<TrajectoryRow> mean_trajectory(
    const std::vector<std::vector<TrajectoryRow>>& runs) {
  if (runs.empty()) return {};
  std::set<double> grid;
  bool has_feasibility = true;
  for (const auto& rows : runs) {
    for (const auto& r : rows) grid.insert(r.pass);
    if (!rows.empty() && std::isnan(rows.front().feasibility_sq)) {
      has_feasibility = false;
    }
  }
  std::vector<TrajectoryRow> mean;
  mean.reserve(grid.size());
  const double count = static_cast<double>(runs.size());
  for (const double pass : grid) {
    TrajectoryRow r;
    r.pass = pass;
    double wall = 0.0;
    double feas = 0.0;
    for (const auto& rows : runs) {
      r.objective += interp(rows, pass, [](const TrajectoryRow& t) { return t.objective; });
      r.grad_norm_sq +=
          interp(rows, pass, [](const TrajectoryRow& t) { return t.grad_norm_sq; });
      if (has_feasibility) {
        feas += interp(rows, pass,
                       [](const TrajectoryRow& t) { return t.feasibility_sq; });
      }
      wall += interp(rows, pass, [](const TrajectoryRow& t) {
        return static_cast<double>(t.wall_ms);
      });
    }
    r.objective /= count;
    r.grad_norm_sq /= count;
    r.feasibility_sq = has_feasibility
                           ? feas / count
                           : std::numeric_limits<double>::quiet_NaN();
    r.wall_ms = static_cast<std::int64_t>(wall / count);
    mean.push_back(r);
  }
  return mean;
}

}  // namespace rapopt
