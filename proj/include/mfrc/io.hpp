#pragma once

#include <filesystem>
#include <string>

#include "mfrc/continuation.hpp"
#include "mfrc/sweep.hpp"

namespace mfrc::io {

/// Shortest-round-trip decimal for a double (17 significant digits).
std::string fmt(double v);

/// SHA-256 hex digest of a byte buffer.
std::string sha256_hex(const void* data, size_t len);
std::string matrix_hash(const SpMat& m);
std::string matrix_hash(const Eigen::MatrixXd& m);

void write_text(const std::filesystem::path& p, const std::string& text);

/// TimeSeries CSV: header t,x1,...,xD; one row per sample.
void write_timeseries_csv(const std::filesystem::path& p, const TimeSeries& ts);
TimeSeries read_timeseries_csv(const std::filesystem::path& p);

/// Sparse matrix as coordinate-list CSV (row,col,value) plus a JSON sidecar
/// with N, D, rho, sigma, P and the seed.
void write_matrices(const std::filesystem::path& dir, const ReservoirMatrices& mat,
                    const ReservoirConfig& cfg);

/// Readout CSV (D x 2N) with a JSON provenance sidecar including content
/// hashes of M and W_in.
void write_readout(const std::filesystem::path& csv_path, const Readout& r,
                   const ReservoirMatrices& mat);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& p);

/// Classification record row: alpha,rho,ic_tag,label,theta_own,theta_other,
/// period,fp_x1,fp_x2,fp_x3 (empty fields where not applicable).
std::string classification_row(double alpha, double rho, const std::string& ic_tag,
                               const BehaviorLabel& label);
std::string classification_header();

void write_label_grid(const std::filesystem::path& p, const LabelGrid& grid,
                      const std::string& ic_tag);
void write_mask(const std::filesystem::path& p, const std::vector<double>& rows_rho,
                const std::vector<double>& cols_alpha, const std::vector<uint8_t>& mask,
                bool delta_mode = false);

/// Branch CSV: param,class,period,x3_fp,x3_maxima,x3_minima with semicolon
/// separated list fields; events CSV: kind,alpha,rho,evidence.
void write_branch(const std::filesystem::path& p, const Branch& branch);
void write_events(const std::filesystem::path& p, const std::vector<BifurcationEvent>& events);
void write_attractors(const std::filesystem::path& p,
                      const std::vector<AttractorSummary>& attractors);

}  // namespace mfrc::io
