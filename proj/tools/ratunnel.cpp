#include "ratunnel/errors.hpp"
#include "ratunnel/quantum.hpp"
#include "ratunnel/scan.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace ratunnel;

namespace {

double parse_angle(const std::string& text);

struct ParamFlags {
  std::string config;
  std::optional<double> a1, a2, b;
  std::optional<std::string> phi;
  std::optional<int> ell;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "key=value parameter file");
    app->add_option("--a1", a1, "quadratic coefficient");
    app->add_option("--a2", a2, "quartic coefficient");
    app->add_option("--b", b, "resonance strength |b|");
    app->add_option("--phi", phi, "resonance phase, e.g. 0.3 or 3pi/4");
    app->add_option("--ell", ell, "resonance order");
  }

  ModelParams resolve() const {
    ModelParams p = config.empty() ? ModelParams{} : read_params_file(config);
    if (a1) p.a1 = *a1;
    if (a2) p.a2 = *a2;
    if (b) p.b_mod = *b;
    if (phi) p.phi = parse_angle(*phi);
    if (ell) p.ell = *ell;
    p.validate();
    return p;
  }
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

// Accepts plain numbers and multiples of pi such as "pi", "3pi/4", "0.5pi".
double parse_angle(const std::string& text) {
  const auto pos = text.find("pi");
  if (pos == std::string::npos) return to_double(text);
  const std::string head = text.substr(0, pos);
  const std::string tail = text.substr(pos + 2);
  double v = kPi;
  if (!head.empty()) v *= head == "-" ? -1.0 : to_double(head);
  if (!tail.empty()) {
    if (tail[0] != '/') throw ConfigError("bad angle '" + text + "'");
    v /= to_double(tail.substr(1));
  }
  return v;
}

std::vector<double> parse_phi_grid(const std::string& text) {
  if (text.rfind("uniform:", 0) == 0) {
    const int k = std::stoi(text.substr(8));
    if (k < 1) throw ConfigError("uniform phi grid needs at least one point");
    std::vector<double> out;
    for (int i = 0; i < k; ++i) out.push_back(2.0 * kPi * i / k);
    return out;
  }
  std::vector<double> out;
  for (const auto& t : split(text, ',')) out.push_back(parse_angle(t));
  return out;
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  for (const auto& t : split(text, ',')) out.push_back(std::stoi(t));
  return out;
}

std::vector<int> parse_range(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() < 2 || parts.size() > 3) throw ConfigError("range must be lo:hi or lo:hi:step");
  const int lo = std::stoi(parts[0]);
  const int hi = std::stoi(parts[1]);
  const int step = parts.size() == 3 ? std::stoi(parts[2]) : 1;
  if (step < 1 || hi < lo) throw ConfigError("empty range '" + text + "'");
  std::vector<int> out;
  for (int N = lo; N <= hi; N += step) out.push_back(N);
  return out;
}

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  for (const auto& t : split(text, ',')) out.push_back(to_double(t));
  return out;
}

struct ScanFlags {
  std::string N_list, N_range, phi_grid, b_list, levels = "0", methods, out;

  void attach(CLI::App* app, const std::string& default_out) {
    out = default_out;
    app->add_option("--N", N_list, "comma separated N values");
    app->add_option("--N-range", N_range, "lo:hi[:step]");
    app->add_option("--phi-grid", phi_grid, "comma separated phases (3pi/4 allowed) or uniform:K");
    app->add_option("--b-list", b_list, "comma separated |b| values");
    app->add_option("--levels", levels, "comma separated quartet levels");
    app->add_option("--methods", methods, "subset of exact,cpath,direct,rat,unpert");
    app->add_option("--out", out, "output directory");
  }

  ScanSpec spec(const ModelParams& params, const std::string& default_methods) const {
    ScanSpec s;
    s.params = params;
    if (!N_list.empty()) s.N_list = parse_ints(N_list);
    if (!N_range.empty()) {
      const auto r = parse_range(N_range);
      s.N_list.insert(s.N_list.end(), r.begin(), r.end());
    }
    if (!phi_grid.empty()) s.phi_list = parse_phi_grid(phi_grid);
    if (!b_list.empty()) s.b_list = parse_reals(b_list);
    s.n_list = parse_ints(levels);
    s.methods = parse_methods(methods.empty() ? default_methods : methods);
    s.output_dir = out;
    return s;
  }
};

int report_scan(const std::vector<SplittingRecord>& rows, const std::filesystem::path& csv) {
  int flagged = 0;
  for (const auto& r : rows) flagged += r.flagged() ? 1 : 0;
  std::cerr << rows.size() << " points, " << flagged << " flagged, written to " << csv.string() << '\n';
  return flagged > 0 ? 2 : 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resonance-assisted tunnelling splittings on a periodic quartic lattice"};
  app.require_subcommand(1);

  ParamFlags pf;

  auto* spectrum = app.add_subcommand("spectrum", "diagonalize at one N and assign quartets");
  int spec_N = 20;
  std::string spec_levels = "0", spec_out;
  pf.attach(spectrum);
  spectrum->add_option("--N", spec_N, "grid parameter, dimension 4N")->required();
  spectrum->add_option("--levels", spec_levels, "quartet levels to track");
  spectrum->add_option("--out", spec_out, "JSON file (default stdout)");

  auto* scan = app.add_subcommand("split-scan", "splittings over N, phi, |b| and levels");
  ScanFlags sf;
  pf.attach(scan);
  sf.attach(scan, "scan_out");

  auto* rat = app.add_subcommand("rat-compare", "exact against perturbative and complex-path splittings");
  ScanFlags rf;
  pf.attach(rat);
  rf.attach(rat, "rat_out");

  auto* portrait = app.add_subcommand("portrait", "energy contours over one cell");
  std::string portrait_E, portrait_out = "portrait.csv";
  int resolution = 512;
  pf.attach(portrait);
  portrait->add_option("--energies", portrait_E, "comma separated energies (default separatrix, chain, 0.035)");
  portrait->add_option("--resolution", resolution, "grid cells per side");
  portrait->add_option("--out", portrait_out, "CSV file");

  auto* trace = app.add_subcommand("trace", "complex trajectories of the three crossings");
  double trace_E = 0.035;
  std::string trace_out = "traces";
  pf.attach(trace);
  trace->add_option("--energy", trace_E, "energy of the launch tori");
  trace->add_option("--out", trace_out, "output directory");

  auto* criterion = app.add_subcommand("criterion", "peak position and crossover hbar per level");
  std::string crit_levels = "0,1,2", crit_out;
  pf.attach(criterion);
  criterion->add_option("--levels", crit_levels, "quartet levels");
  criterion->add_option("--out", crit_out, "CSV file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    const ModelParams params = pf.resolve();

    if (*spectrum) {
      const TorusGrid grid(spec_N);
      const auto result = diagonalize(build_hamiltonian(params, grid), grid);
      std::vector<SplittingResult> tracked;
      bool flagged = false;
      for (int n : parse_ints(spec_levels)) {
        try {
          tracked.push_back(exact_splitting(n, result, grid));
          flagged |= tracked.back().low_confidence || tracked.back().ambiguous;
        } catch (const Error& e) {
          std::cerr << "level " << n << ": " << e.kind() << ": " << e.what() << '\n';
          flagged = true;
        }
      }
      if (spec_out.empty()) {
        write_spectrum_json(std::cout, result, params, tracked);
      } else {
        std::ofstream os(spec_out);
        write_spectrum_json(os, result, params, tracked);
      }
      return flagged ? 2 : 0;
    }

    if (*scan || *rat) {
      const auto spec = *scan ? sf.spec(params, "all") : rf.spec(params, "exact,cpath,rat,unpert");
      auto s = spec;
      if (*rat) s.csv_name = "rat_compare.csv";
      const auto rows = run_scan(s);
      return report_scan(rows, s.output_dir / s.csv_name);
    }

    if (*portrait) {
      std::vector<double> energies;
      if (portrait_E.empty()) {
        const auto land = energy_landscape(params);
        energies = {land.separatrix, land.chain, 0.035};
      } else {
        energies = parse_reals(portrait_E);
      }
      const auto lines = phase_portrait(params, energies, resolution);
      std::ofstream os(portrait_out);
      write_portrait_csv(os, lines);
      std::cerr << lines.size() << " contour lines written to " << portrait_out << '\n';
      return 0;
    }

    if (*trace) {
      const auto files = dump_complex_traces(params, trace_E, trace_out);
      int failed = 0;
      for (const auto& f : files) {
        if (f.error.empty()) {
          std::cerr << f.name << ": sigma " << format_real(f.sigma) << " -> " << f.path.string() << '\n';
        } else {
          std::cerr << f.name << ": " << f.error << '\n';
          ++failed;
        }
      }
      return failed > 0 ? 2 : 0;
    }

    if (*criterion) {
      std::ofstream file;
      if (!crit_out.empty()) file.open(crit_out);
      std::ostream& os = crit_out.empty() ? std::cout : file;
      os << "n,b_mod,phi,hbar_peak,N_peak,hbar_res,N_res,chain_area,island_area,flags\n";
      int flagged = 0;
      for (int n : parse_ints(crit_levels)) {
        try {
          const auto c = hbar_res(n, params, params.ell);
          os << n << ',' << format_real(params.b_mod) << ',' << format_real(params.phi) << ','
             << format_real(c.hbar_peak) << ',' << format_real(kPi / (2.0 * c.hbar_peak)) << ','
             << format_real(c.hbar_res) << ',' << format_real(c.N_res) << ',' << format_real(c.chain_area) << ','
             << format_real(c.island_area) << ',' << (c.monotone ? "" : "non_monotone") << '\n';
          flagged += c.monotone ? 0 : 1;
        } catch (const Error& e) {
          os << n << ',' << format_real(params.b_mod) << ',' << format_real(params.phi) << ",nan,nan,nan,nan,nan,nan,"
             << e.kind() << '\n';
          ++flagged;
        }
      }
      return flagged > 0 ? 2 : 0;
    }
  } catch (const Error& e) {
    std::cerr << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
