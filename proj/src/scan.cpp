#include "ratunnel/scan.hpp"

#include "ratunnel/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

namespace ratunnel {

void ScanSpec::validate() const {
  params.validate();
  if (N_list.empty()) {
    throw ConfigError("scan needs at least one N");
  }
  for (int N : N_list) {
    if (N < 2) throw ConfigError("N must be at least 2, got " + std::to_string(N));
  }
  for (int n : n_list) {
    if (n < 0) throw ConfigError("level index must be non-negative");
  }
  for (double b : b_list) {
    if (!(b >= 0.0)) throw ConfigError("|b| must be non-negative");
  }
  if (n_list.empty()) {
    throw ConfigError("scan needs at least one level");
  }
}

Methods parse_methods(const std::string& list) {
  Methods m{false, false, false, false, false};
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "exact") m.exact = true;
    else if (item == "cpath") m.cpath = true;
    else if (item == "direct") m.direct = true;
    else if (item == "rat") m.rat = true;
    else if (item == "unpert") m.unpert = true;
    else if (item == "all") m = Methods{};
    else throw ConfigError("unknown method '" + item + "'");
  }
  return m;
}

std::string methods_string(const Methods& m) {
  std::string out;
  const auto add = [&out](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(m.exact, "exact");
  add(m.cpath, "cpath");
  add(m.direct, "direct");
  add(m.rat, "rat");
  add(m.unpert, "unpert");
  return out;
}

int default_workers() {
  if (const char* env = std::getenv("RATUNNEL_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return buf;
}

void write_master_csv(std::ostream& os, const std::vector<SplittingRecord>& rows) {
  os << kMasterCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.N << ',' << format_real(r.phi) << ',' << format_real(r.b_mod) << ',' << r.n << ','
       << format_real(r.E_n) << ',' << format_real(r.dE_exact) << ',' << format_real(r.dE_complex_path) << ','
       << format_real(r.dE_direct) << ',' << format_real(r.dE_rat) << ',' << format_real(r.dE_unpert) << ','
       << format_real(r.sigma_c) << ',' << format_real(r.sigma_tilde) << ',' << format_real(r.Sigma) << ','
       << format_real(r.S_in) << ',' << format_real(r.S_out) << ',' << format_real(r.denominator) << ','
       << r.flag_string() << '\n';
  }
}

namespace {

nlohmann::json real_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

} // namespace

void write_point_json(std::ostream& os, const SplittingRecord& r, const ModelParams& params) {
  nlohmann::json j;
  j["params"] = {{"a1", params.a1}, {"a2", params.a2}, {"b_mod", r.b_mod}, {"phi", r.phi}, {"ell", params.ell}};
  j["N"] = r.N;
  j["hbar"] = r.hbar;
  j["n"] = r.n;
  j["E_n"] = real_or_null(r.E_n);
  j["splittings"] = {{"exact", real_or_null(r.dE_exact)},   {"cpath", real_or_null(r.dE_complex_path)},
                     {"direct", real_or_null(r.dE_direct)}, {"rat", real_or_null(r.dE_rat)},
                     {"unpert", real_or_null(r.dE_unpert)}};
  j["diagnostics"] = {{"sigma_c", real_or_null(r.sigma_c)}, {"sigma_tilde", real_or_null(r.sigma_tilde)},
                      {"Sigma", real_or_null(r.Sigma)},     {"S_in", real_or_null(r.S_in)},
                      {"S_out", real_or_null(r.S_out)},     {"omega_in", real_or_null(r.omega_in)},
                      {"omega_out", real_or_null(r.omega_out)}, {"denom", real_or_null(r.denominator)}};
  if (std::isinf(r.dE_complex_path)) {
    j["splittings"]["cpath"] = "inf";
  }
  j["flags"] = r.flags;
  os << j.dump(2) << '\n';
}

std::vector<SplittingRecord> run_scan(const ScanSpec& spec) {
  spec.validate();
  const std::vector<double> bs = spec.b_list.empty() ? std::vector<double>{spec.params.b_mod} : spec.b_list;
  const std::vector<double> phis = spec.phi_list.empty() ? std::vector<double>{spec.params.phi} : spec.phi_list;

  struct Item {
    int b_index, N, phi_index, n;
  };
  std::vector<Item> items;
  for (int bi = 0; bi < static_cast<int>(bs.size()); ++bi) {
    for (int N : spec.N_list) {
      for (int pi = 0; pi < static_cast<int>(phis.size()); ++pi) {
        for (int n : spec.n_list) {
          items.push_back({bi, N, pi, n});
        }
      }
    }
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return std::tie(a.b_index, a.N, a.phi_index, a.n) < std::tie(b.b_index, b.N, b.phi_index, b.n);
  });

  std::map<std::pair<int, int>, double> areas;
  if (spec.methods.rat) {
    for (int bi = 0; bi < static_cast<int>(bs.size()); ++bi) {
      for (int pi = 0; pi < static_cast<int>(phis.size()); ++pi) {
        areas[{bi, pi}] = island_area(spec.params.with_b(bs[bi]).with_phi(phis[pi]));
      }
    }
  }

  std::vector<SplittingRecord> rows(items.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t k = next++; k < items.size(); k = next++) {
      const auto& it = items[k];
      const auto params = spec.params.with_b(bs[it.b_index]).with_phi(phis[it.phi_index]);
      std::optional<double> area;
      if (auto a = areas.find({it.b_index, it.phi_index}); a != areas.end()) area = a->second;
      try {
        rows[k] = evaluate_point(it.N, it.n, params, spec.methods, spec.options, area);
      } catch (const std::exception& e) {
        SplittingRecord r;
        r.N = it.N;
        r.n = it.n;
        r.phi = params.phi;
        r.b_mod = params.b_mod;
        r.hbar = kPi / (2.0 * it.N);
        const auto* err = dynamic_cast<const Error*>(&e);
        r.flags.push_back(std::string("point:") + (err ? err->kind() : "error"));
        rows[k] = r;
      }
    }
  };
  const int workers = std::max(1, std::min<int>(spec.workers > 0 ? spec.workers : default_workers(),
                                                static_cast<int>(items.size())));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }

  if (!spec.output_dir.empty()) {
    std::filesystem::create_directories(spec.output_dir);
    std::ofstream csv(spec.output_dir / spec.csv_name);
    if (!csv) throw ConfigError("cannot write " + (spec.output_dir / spec.csv_name).string());
    write_master_csv(csv, rows);
    if (spec.point_json) {
      const auto dir = spec.output_dir / "points";
      std::filesystem::create_directories(dir);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& it = items[k];
        const std::string name = "N" + std::to_string(it.N) + "_phi" + std::to_string(it.phi_index) + "_b" +
                                 std::to_string(it.b_index) + "_n" + std::to_string(it.n) + ".json";
        std::ofstream js(dir / name);
        write_point_json(js, rows[k], spec.params);
      }
    }
  }
  return rows;
}

std::vector<Polyline> phase_portrait(const ModelParams& params, const std::vector<double>& energies,
                                     int resolution) {
  if (resolution < 2) {
    throw ConfigError("portrait resolution must be at least 2");
  }
  const int R = resolution;
  const double h = kPi / R;
  std::vector<double> H(static_cast<std::size_t>(R + 1) * (R + 1));
  const auto node = [R](int i, int j) { return static_cast<std::size_t>(i) * (R + 1) + j; };
  for (int i = 0; i <= R; ++i) {
    for (int j = 0; j <= R; ++j) {
      H[node(i, j)] = eval_H(i * h, j * h, params);
    }
  }
  // Edge ids: horizontal (i,j)-(i+1,j) even, vertical (i,j)-(i,j+1) odd.
  const auto hedge = [&](int i, int j) { return 2 * static_cast<long>(node(i, j)); };
  const auto vedge = [&](int i, int j) { return 2 * static_cast<long>(node(i, j)) + 1; };

  std::vector<Polyline> out;
  for (double E : energies) {
    std::map<long, PhasePoint> crossing;
    std::vector<std::pair<long, long>> segments;
    const auto point_on = [&](long id) {
      if (auto it = crossing.find(id); it != crossing.end()) return;
      const long base = id / 2;
      const int i = static_cast<int>(base / (R + 1));
      const int j = static_cast<int>(base % (R + 1));
      const int i2 = (id % 2 == 0) ? i + 1 : i;
      const int j2 = (id % 2 == 0) ? j : j + 1;
      const double fa = H[node(i, j)] - E;
      const double fb = H[node(i2, j2)] - E;
      const double t = fa / (fa - fb);
      crossing[id] = {(i + t * (i2 - i)) * h, (j + t * (j2 - j)) * h};
    };
    for (int i = 0; i < R; ++i) {
      for (int j = 0; j < R; ++j) {
        const double f[4] = {H[node(i, j)] - E, H[node(i + 1, j)] - E, H[node(i + 1, j + 1)] - E,
                             H[node(i, j + 1)] - E};
        const long edge[4] = {hedge(i, j), vedge(i + 1, j), hedge(i, j + 1), vedge(i, j)};
        const bool up[4] = {f[0] > 0.0, f[1] > 0.0, f[2] > 0.0, f[3] > 0.0};
        std::vector<int> cut;
        for (int e = 0; e < 4; ++e) {
          if (up[e] != up[(e + 1) % 4]) cut.push_back(e);
        }
        if (cut.size() == 2) {
          segments.emplace_back(edge[cut[0]], edge[cut[1]]);
        } else if (cut.size() == 4) {
          const bool centre_up = 0.25 * (f[0] + f[1] + f[2] + f[3]) > 0.0;
          if (centre_up == up[0]) {
            segments.emplace_back(edge[0], edge[1]);
            segments.emplace_back(edge[2], edge[3]);
          } else {
            segments.emplace_back(edge[3], edge[0]);
            segments.emplace_back(edge[1], edge[2]);
          }
        }
      }
    }
    std::map<long, std::vector<std::size_t>> touching;
    for (std::size_t s = 0; s < segments.size(); ++s) {
      touching[segments[s].first].push_back(s);
      touching[segments[s].second].push_back(s);
      point_on(segments[s].first);
      point_on(segments[s].second);
    }
    std::vector<bool> used(segments.size(), false);
    const auto walk = [&](std::size_t s0, long start) {
      Polyline line;
      line.energy = E;
      line.points.push_back(crossing[start]);
      long at = start;
      std::size_t s = s0;
      while (true) {
        used[s] = true;
        at = segments[s].first == at ? segments[s].second : segments[s].first;
        line.points.push_back(crossing[at]);
        std::size_t next = segments.size();
        for (std::size_t cand : touching[at]) {
          if (!used[cand]) {
            next = cand;
            break;
          }
        }
        if (next == segments.size()) break;
        s = next;
      }
      out.push_back(std::move(line));
    };
    for (const auto& [id, list] : touching) {
      if (list.size() == 1 && !used[list[0]]) walk(list[0], id);
    }
    for (std::size_t s = 0; s < segments.size(); ++s) {
      if (!used[s]) walk(s, segments[s].first);
    }
  }
  return out;
}

void write_portrait_csv(std::ostream& os, const std::vector<Polyline>& lines) {
  os << "E,line,p,q\n";
  for (std::size_t k = 0; k < lines.size(); ++k) {
    for (const auto& pt : lines[k].points) {
      os << format_real(lines[k].energy) << ',' << k << ',' << format_real(pt.p) << ',' << format_real(pt.q)
         << '\n';
    }
  }
}

std::vector<TraceFile> dump_complex_traces(const ModelParams& params, double E, const std::filesystem::path& dir,
                                           const ShootingOptions& opt) {
  std::filesystem::create_directories(dir);
  struct Leg {
    const char* name;
    Branch launch;
    ImaginaryActionResult (*shoot)(double, const ModelParams&, const ShootingOptions&);
  };
  const Leg legs[] = {{"chain", Branch::Inner, &shoot_chain_crossing},
                      {"separatrix", Branch::Outer, &shoot_separatrix_crossing},
                      {"direct", Branch::Inner, &shoot_direct}};
  std::vector<TraceFile> out;
  for (const auto& leg : legs) {
    TraceFile tf;
    tf.name = leg.name;
    try {
      const auto shot = leg.shoot(E, params, opt);
      const auto traj = trace_shot(E, leg.launch, shot, params, opt.complex);
      tf.sigma = shot.sigma;
      for (const auto& smp : traj.samples) {
        tf.max_energy_error = std::max(tf.max_energy_error, std::abs(eval_H(smp.p, smp.q, params) - E));
      }
      if (tf.max_energy_error > 1e-8) {
        throw StepFailure("energy drift " + format_real(tf.max_energy_error) + " along the " + leg.name + " leg");
      }
      tf.path = dir / (std::string(leg.name) + ".csv");
      std::ofstream os(tf.path);
      write_trajectory_csv(os, traj);
    } catch (const Error& e) {
      tf.error = std::string(e.kind()) + ": " + e.what();
      tf.path.clear();
    }
    out.push_back(tf);
  }
  return out;
}

} // namespace ratunnel
