#pragma once

#include "ratunnel/semiclassics.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ratunnel {

struct ScanSpec {
  ModelParams params;
  std::vector<int> N_list;
  std::vector<double> phi_list;   // empty: params.phi
  std::vector<double> b_list;     // empty: params.b_mod
  std::vector<int> n_list{0};
  Methods methods;
  std::filesystem::path output_dir; // empty: no files
  std::string csv_name = "splittings.csv";
  bool point_json = true;
  int workers = 0; // 0: RATUNNEL_WORKERS or hardware concurrency
  SemiclassicalOptions options{};

  void validate() const;
};

Methods parse_methods(const std::string& list);
std::string methods_string(const Methods& m);

/// Worker count from RATUNNEL_WORKERS, else the hardware concurrency.
int default_workers();

/// Evaluates every (b, phi, N, n) point. Rows come back ordered by
/// (b, N, phi, n) whatever the completion order.
std::vector<SplittingRecord> run_scan(const ScanSpec& spec);

inline constexpr const char* kMasterCsvHeader =
    "N,phi,b_mod,n,E_n,dE_exact,dE_cpath,dE_direct,dE_rat,dE_unpert,sigma_c,sigma_tilde,Sigma,S_in,S_out,"
    "denom,flags";

void write_master_csv(std::ostream& os, const std::vector<SplittingRecord>& rows);
void write_point_json(std::ostream& os, const SplittingRecord& row, const ModelParams& params);

/// Fixed scientific formatting used by every CSV writer.
std::string format_real(double x);

struct Polyline {
  double energy = 0.0;
  std::vector<PhasePoint> points;
};

/// Level sets of H over the cell [0, pi]^2 by marching squares on a
/// resolution^2 grid of cells, chained into polylines.
std::vector<Polyline> phase_portrait(const ModelParams& params, const std::vector<double>& energies,
                                     int resolution = 512);
void write_portrait_csv(std::ostream& os, const std::vector<Polyline>& lines);

struct TraceFile {
  std::string name; // chain, separatrix, direct
  std::filesystem::path path;
  double sigma = 0.0;
  double max_energy_error = 0.0;
  std::string error; // empty on success
};

/// Shoots the three crossings at E and writes one trajectory CSV per leg.
/// Rows whose energy error exceeds 1e-8 make the leg fail.
std::vector<TraceFile> dump_complex_traces(const ModelParams& params, double E,
                                           const std::filesystem::path& dir,
                                           const ShootingOptions& opt = {});

} // namespace ratunnel
