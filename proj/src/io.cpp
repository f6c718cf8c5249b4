#include "mfrc/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <sstream>

namespace mfrc::io {

std::string fmt(double v) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<size_t>(len));
}

std::string sha256_hex(const void* data, size_t len) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int dlen = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, data, len);
  EVP_DigestFinal_ex(ctx, digest, &dlen);
  EVP_MD_CTX_free(ctx);
  static const char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * dlen);
  for (unsigned int i = 0; i < dlen; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string matrix_hash(const SpMat& m) {
  std::string bytes;
  bytes.reserve(static_cast<size_t>(m.nonZeros()) * 16);
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) {
      const int64_t rc[2] = {it.row(), it.col()};
      const double v = it.value();
      bytes.append(reinterpret_cast<const char*>(rc), sizeof(rc));
      bytes.append(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  return sha256_hex(bytes.data(), bytes.size());
}

std::string matrix_hash(const Eigen::MatrixXd& m) {
  return sha256_hex(m.data(), sizeof(double) * static_cast<size_t>(m.size()));
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ValidationError("cannot open " + p.string() + " for writing");
  f << text;
}

void write_timeseries_csv(const std::filesystem::path& p, const TimeSeries& ts) {
  std::ostringstream os;
  os << "t";
  for (int i = 1; i <= ts.dim(); ++i) os << ",x" << i;
  os << "\n";
  for (Eigen::Index j = 0; j < ts.size(); ++j) {
    os << fmt(ts.time_at(j));
    for (Eigen::Index i = 0; i < ts.dim(); ++i) os << ',' << fmt(ts.samples(i, j));
    os << "\n";
  }
  write_text(p, os.str());
}

TimeSeries read_timeseries_csv(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw ValidationError("cannot open " + p.string());
  std::string line;
  if (!std::getline(f, line)) throw ValidationError(p.string() + ": empty file");
  const auto dim = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',')) ;
  if (dim < 1) throw ValidationError(p.string() + ": bad header");
  std::vector<double> times;
  std::vector<double> vals;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    int col = 0;
    while (std::getline(row, cell, ',')) {
      const double v = std::stod(cell);
      if (col == 0)
        times.push_back(v);
      else
        vals.push_back(v);
      ++col;
    }
    if (col != dim + 1) throw ValidationError(p.string() + ": ragged row");
  }
  if (times.size() < 2) throw ValidationError(p.string() + ": need at least 2 samples");
  TimeSeries ts;
  ts.t0 = times.front();
  ts.dt = times[1] - times[0];
  ts.samples.resize(dim, static_cast<Eigen::Index>(times.size()));
  for (size_t j = 0; j < times.size(); ++j)
    for (Eigen::Index i = 0; i < dim; ++i)
      ts.samples(i, static_cast<Eigen::Index>(j)) = vals[j * static_cast<size_t>(dim) + static_cast<size_t>(i)];
  ts.validate();
  return ts;
}

void write_matrices(const std::filesystem::path& dir, const ReservoirMatrices& mat,
                    const ReservoirConfig& cfg) {
  std::filesystem::create_directories(dir);
  {
    std::ostringstream os;
    os << "row,col,value\n";
    for (int k = 0; k < mat.m.outerSize(); ++k)
      for (SpMat::InnerIterator it(mat.m, k); it; ++it)
        os << it.row() << ',' << it.col() << ',' << fmt(it.value()) << "\n";
    write_text(dir / "m.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "row,col,value\n";
    for (Eigen::Index i = 0; i < mat.w_in.rows(); ++i)
      for (Eigen::Index j = 0; j < mat.w_in.cols(); ++j)
        if (mat.w_in(i, j) != 0.0) os << i << ',' << j << ',' << fmt(mat.w_in(i, j)) << "\n";
    write_text(dir / "w_in.csv", os.str());
  }
  std::ostringstream os;
  os << "{\n"
     << "  \"N\": " << cfg.n_neurons << ",\n"
     << "  \"D\": " << cfg.dim_in << ",\n"
     << "  \"rho\": " << fmt(cfg.rho) << ",\n"
     << "  \"sigma\": " << fmt(cfg.sigma) << ",\n"
     << "  \"P\": " << fmt(cfg.conn_prob) << ",\n"
     << "  \"seed\": " << cfg.seed << ",\n"
     << "  \"m_sha256\": \"" << matrix_hash(mat.m) << "\",\n"
     << "  \"w_in_sha256\": \"" << matrix_hash(mat.w_in) << "\"\n"
     << "}\n";
  write_text(dir / "matrices.json", os.str());
}

void write_readout(const std::filesystem::path& csv_path, const Readout& r,
                   const ReservoirMatrices& mat) {
  std::ostringstream os;
  for (Eigen::Index i = 0; i < r.w_out.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.w_out.cols(); ++j) {
      if (j) os << ',';
      os << fmt(r.w_out(i, j));
    }
    os << "\n";
  }
  write_text(csv_path, os.str());

  std::ostringstream meta;
  meta << "{\n"
       << "  \"kind\": \"" << r.prov.kind << "\",\n"
       << "  \"case\": \"" << r.prov.case_id << "\",\n"
       << "  \"alpha\": " << fmt(r.prov.alpha) << ",\n"
       << "  \"rho\": " << fmt(r.prov.rho) << ",\n"
       << "  \"sigma\": " << fmt(r.prov.sigma) << ",\n"
       << "  \"beta\": " << fmt(r.prov.beta) << ",\n"
       << "  \"seed\": " << r.prov.seed << ",\n"
       << "  \"solve_residual\": " << fmt(r.prov.solve_residual) << ",\n"
       << "  \"m_sha256\": \"" << matrix_hash(mat.m) << "\",\n"
       << "  \"w_in_sha256\": \"" << matrix_hash(mat.w_in) << "\"\n"
       << "}\n";
  auto side = csv_path;
  side.replace_extension(".json");
  write_text(side, meta.str());
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw ValidationError("cannot open " + p.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError(p.string() + ": ragged matrix");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(p.string() + ": empty matrix");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

std::string classification_header() {
  return "alpha,rho,ic_tag,label,theta_own,theta_other,period,fp_x1,fp_x2,fp_x3";
}

std::string classification_row(double alpha, double rho, const std::string& ic_tag,
                               const BehaviorLabel& label) {
  std::ostringstream os;
  os << fmt(alpha) << ',' << fmt(rho) << ',' << ic_tag << ',' << to_string(label.kind) << ',';
  if (std::isfinite(label.theta_own)) os << fmt(label.theta_own);
  os << ',';
  if (std::isfinite(label.theta_other)) os << fmt(label.theta_other);
  os << ',';
  if (label.period) os << fmt(*label.period);
  for (int i = 0; i < 3; ++i) {
    os << ',';
    if (label.fixed_point && i < label.fixed_point->size()) os << fmt((*label.fixed_point)[i]);
  }
  return os.str();
}

void write_label_grid(const std::filesystem::path& p, const LabelGrid& grid,
                      const std::string& ic_tag) {
  std::ostringstream os;
  os << classification_header() << "\n";
  for (size_t i = 0; i < grid.rhos.size(); ++i)
    for (size_t j = 0; j < grid.alphas.size(); ++j) {
      const CellResult& cell = grid.at(i, j);
      os << classification_row(grid.alphas[j], grid.rhos[i], ic_tag, cell.label);
      os << "\n";
    }
  write_text(p, os.str());
}

void write_mask(const std::filesystem::path& p, const std::vector<double>& rows_rho,
                const std::vector<double>& cols_alpha, const std::vector<uint8_t>& mask,
                bool delta_mode) {
  std::ostringstream os;
  os << (delta_mode ? "delta,rho,multifunctional\n" : "alpha,rho,multifunctional\n");
  if (delta_mode) {
    // mask is row-major (i_delta, j_rho)
    for (size_t i = 0; i < cols_alpha.size(); ++i)
      for (size_t j = 0; j < rows_rho.size(); ++j)
        os << fmt(cols_alpha[i]) << ',' << fmt(rows_rho[j]) << ','
           << int(mask[i * rows_rho.size() + j]) << "\n";
  } else {
    for (size_t i = 0; i < rows_rho.size(); ++i)
      for (size_t j = 0; j < cols_alpha.size(); ++j)
        os << fmt(cols_alpha[j]) << ',' << fmt(rows_rho[i]) << ','
           << int(mask[i * cols_alpha.size() + j]) << "\n";
  }
  write_text(p, os.str());
}

namespace {

std::string join_semicolon(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += fmt(v[i]);
  }
  return out;
}

}  // namespace

void write_branch(const std::filesystem::path& p, const Branch& branch) {
  std::ostringstream os;
  os << "param,class,period,x3_fp,x3_maxima,x3_minima\n";
  for (const BranchPoint& bp : branch.points) {
    os << fmt(bp.param) << ',' << to_string(bp.att.cls) << ',';
    if (bp.att.cls == AttractorClass::LimitCycle) os << fmt(bp.att.period);
    os << ',';
    if (bp.att.cls == AttractorClass::FixedPoint && bp.att.location.size() > 0)
      os << fmt(bp.att.location[bp.att.location.size() - 1]);
    os << ',' << join_semicolon(bp.att.x3_maxima) << ',' << join_semicolon(bp.att.x3_minima)
       << "\n";
  }
  os << "# termination," << to_string(branch.term);
  if (branch.landing) os << ",landing_param=" << fmt(branch.landing_param);
  os << "\n";
  write_text(p, os.str());
}

void write_events(const std::filesystem::path& p, const std::vector<BifurcationEvent>& events) {
  std::ostringstream os;
  os << "kind,alpha,rho,evidence\n";
  for (const BifurcationEvent& e : events)
    os << to_string(e.kind) << ',' << fmt(e.alpha) << ',' << fmt(e.rho) << ",\"" << e.evidence
       << "\"\n";
  write_text(p, os.str());
}

void write_attractors(const std::filesystem::path& p,
                      const std::vector<AttractorSummary>& attractors) {
  std::ostringstream os;
  os << "class,basin_count,period,residual,u1,u2,u3,x3_maxima,x3_minima\n";
  for (const AttractorSummary& a : attractors) {
    os << to_string(a.cls) << ',' << a.basin_count << ',';
    if (a.cls == AttractorClass::LimitCycle) os << fmt(a.period);
    os << ',';
    if (std::isfinite(a.residual)) os << fmt(a.residual);
    for (int i = 0; i < 3; ++i) {
      os << ',';
      if (a.location.size() > i) os << fmt(a.location[i]);
    }
    os << ',' << join_semicolon(a.x3_maxima) << ',' << join_semicolon(a.x3_minima) << "\n";
  }
  write_text(p, os.str());
}

}  // namespace mfrc::io
