#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mfrc/io.hpp"

using namespace mfrc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("mfrc_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("fmt round-trips doubles at full precision") {
  for (double v : {1.0 / 3.0, 0.1, 1e-17, -123456.789012345678, 2e300}) {
    CHECK(std::stod(io::fmt(v)) == v);
  }
}

TEST_CASE("sha256 of a known vector") {
  // "abc" digest from the specification test vectors
  CHECK(io::sha256_hex("abc", 3) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("matrix hashes distinguish different draws") {
  ReservoirConfig cfg;
  cfg.n_neurons = 32;
  cfg.conn_prob = 0.2;
  cfg.seed = 1;
  const ReservoirMatrices a = build_matrices(cfg);
  cfg.seed = 2;
  const ReservoirMatrices b = build_matrices(cfg);
  CHECK(io::matrix_hash(a.m) != io::matrix_hash(b.m));
  CHECK(io::matrix_hash(a.w_in) != io::matrix_hash(b.w_in));
  CHECK(io::matrix_hash(a.m) == io::matrix_hash(a.m));
}

TEST_CASE("timeseries CSV round trip is exact") {
  TempDir tmp;
  const GuanParams p;
  const TimeSeries ts = integrate_guan(p, {1, 1, 1}, 0.0, 2.0, 0.01);
  io::write_timeseries_csv(tmp.path / "ts.csv", ts);
  const TimeSeries back = io::read_timeseries_csv(tmp.path / "ts.csv");
  REQUIRE(back.size() == ts.size());
  CHECK(back.samples == ts.samples);
  CHECK(back.dt == ts.dt);

  const std::string header = slurp(tmp.path / "ts.csv").substr(0, 11);
  CHECK(header == "t,x1,x2,x3\n");
}

TEST_CASE("matrix export writes coordinate lists plus a provenance sidecar") {
  TempDir tmp;
  ReservoirConfig cfg;
  cfg.n_neurons = 16;
  cfg.conn_prob = 0.3;
  cfg.seed = 5;
  const ReservoirMatrices mat = build_matrices(cfg);
  io::write_matrices(tmp.path, mat, cfg);
  const std::string meta = slurp(tmp.path / "matrices.json");
  CHECK(meta.find("\"N\": 16") != std::string::npos);
  CHECK(meta.find("m_sha256") != std::string::npos);
  const std::string coo = slurp(tmp.path / "m.csv");
  CHECK(coo.rfind("row,col,value\n", 0) == 0);
}

TEST_CASE("readout export round trip") {
  TempDir tmp;
  ReservoirConfig cfg;
  cfg.n_neurons = 16;
  cfg.conn_prob = 0.3;
  cfg.seed = 5;
  const ReservoirMatrices mat = build_matrices(cfg);
  Readout r;
  r.w_out = Eigen::MatrixXd::Random(3, 32);
  r.prov.kind = "blended";
  r.prov.alpha = 0.5;
  io::write_readout(tmp.path / "readout.csv", r, mat);
  const Eigen::MatrixXd back = io::read_matrix_csv(tmp.path / "readout.csv");
  CHECK(back == r.w_out);
  CHECK(slurp(tmp.path / "readout.json").find("\"blended\"") != std::string::npos);
}

TEST_CASE("classification rows carry the optional fields") {
  BehaviorLabel fp;
  fp.kind = Behavior::FixedPoint;
  fp.fixed_point = Eigen::Vector3d(1.0, 2.0, 3.0);
  const std::string row = io::classification_row(0.5, 0.7, "A1", fp);
  CHECK(row.find("FixedPoint") != std::string::npos);
  CHECK(row.find(",1,2,3") != std::string::npos);

  BehaviorLabel rec;
  rec.kind = Behavior::Reconstructed;
  rec.theta_own = 0.2;
  rec.theta_other = 0.5;
  const std::string row2 = io::classification_row(0.3, 0.9, "A2", rec);
  CHECK(row2.find("Reconstructed,0.2") != std::string::npos);

  CHECK(io::classification_header() ==
        "alpha,rho,ic_tag,label,theta_own,theta_other,period,fp_x1,fp_x2,fp_x3");
}

TEST_CASE("branch, events and attractor writers produce the documented columns") {
  TempDir tmp;
  Branch br;
  br.rho = 0.7;
  BranchPoint bp;
  bp.param = 0.5;
  bp.att.cls = AttractorClass::LimitCycle;
  bp.att.period = 5.0;
  bp.att.x3_maxima = {1.0, 2.0};
  bp.att.x3_minima = {-1.0};
  br.points.push_back(bp);
  br.term = BranchTermination::GridEdge;
  io::write_branch(tmp.path / "branch.csv", br);
  const std::string branch_text = slurp(tmp.path / "branch.csv");
  CHECK(branch_text.rfind("param,class,period,x3_fp,x3_maxima,x3_minima\n", 0) == 0);
  CHECK(branch_text.find("1;2") != std::string::npos);
  CHECK(branch_text.find("grid-edge") != std::string::npos);

  io::write_events(tmp.path / "events.csv",
                   {{BifKind::PeriodDoubling, 0.5, 0.125, "count 1 -> 2"}});
  CHECK(slurp(tmp.path / "events.csv").find("PeriodDoubling,0.5,0.125") != std::string::npos);

  AttractorSummary a;
  a.cls = AttractorClass::FixedPoint;
  a.location = Eigen::Vector3d(1, 2, 3);
  a.basin_count = 7;
  a.residual = 1e-12;
  io::write_attractors(tmp.path / "att.csv", {a});
  CHECK(slurp(tmp.path / "att.csv").find("FixedPoint,7") != std::string::npos);
}
