#pragma once

#include <atomic>
#include <cstdio>
#include <mutex>
#include <thread>
#include <vector>

#include "epfrac/runner.hpp"

namespace epfrac {

struct CampaignRun {
  std::string id;
  Config cfg;
};

struct Campaign {
  std::string name;
  std::vector<CampaignRun> runs;
  // per-config-key provenance: "published" (value stated in the literature
  // the experiment reproduces) or "artifact-default" (desk-scale choice)
  std::map<std::string, std::string> provenance;
};

inline std::vector<std::string> campaign_names() {
  return {"notch-sharp-pstress", "notch-sharp-pstrain", "notch-vangle-pstress",
          "notch-vangle-pstrain", "surfing-pstrain",     "surfing-pstress",
          "ell-sweep",            "mesh-sweep",           "psi-sweep",
          "profile-validation"};
}

namespace detail {

inline Config notch_base(PlanarMode mode) {
  Config c;
  c.set("material.E", 1.3);
  c.set("material.nu", 0.3);
  c.set("material.Gc", 0.7);
  c.set("material.mode", to_string(mode));
  // ell chosen so that the nucleation stress is 5
  MaterialParams m;
  m.E = 1.3;
  m.nu = 0.3;
  m.Gc = 0.7;
  m.mode = mode;
  const double sigc = 5.0;
  const double ell = 3.0 * m.Gc * effective_modulus(m) / (8.0 * sigc * sigc);
  c.set("material.ell", ell);
  c.set("mesh.type", "notch");
  c.set("mesh.R", 50.0 * ell);
  c.set("mesh.delta_tip", ell / 3.0);
  c.set("mesh.grade", 0.22);
  c.set("load.type", "notch");
  c.set("load.steps", 90);
  c.set("solver.scheme", "aup");
  return c;
}

inline void set_notch_amplitude(Config& c, double omega_deg, double r_y) {
  const double sigc = 5.0;
  c.set("material.sigma0", sigc / r_y);
  c.set("mesh.omega_deg", omega_deg);
  const double lam = solve_lambda(omega_deg * std::numbers::pi / 180.0);
  MaterialParams m = material_from_config(c);
  const DerivedParams d = derive_params(m, m.ell / 3.0);
  const double kc = std::pow(d.K_Ic, 2.0 - 2.0 * lam) * std::pow(d.sigma_c, 2.0 * lam - 1.0);
  c.set("load.t1", 1.8 * kc / (lam * (lam + 1.0)));
}

inline Config surfing_base(PlanarMode mode, double ell, double delta_over_ell, double sigma0) {
  Config c;
  c.set("material.E", 1.0);
  c.set("material.nu", 0.2);
  c.set("material.Gc", 1.0);
  c.set("material.ell", ell);
  c.set("material.sigma0", sigma0);
  c.set("material.mode", to_string(mode));
  c.set("mesh.type", "rectangle");
  c.set("mesh.L", 30.0);
  c.set("mesh.H", 10.0);
  c.set("mesh.delta", delta_over_ell * ell);
  c.set("mesh.precrack", 2.0);
  c.set("load.type", "surfing");
  c.set("load.psi", 1.0);
  c.set("load.V", 1.0);
  c.set("load.t1", 26.0);
  c.set("load.steps", 104);
  c.set("solver.scheme", "aup");
  return c;
}

}  // namespace detail

inline Campaign preset(const std::string& name) {
  Campaign camp;
  camp.name = name;
  auto& prov = camp.provenance;

  const auto notch_family = [&](PlanarMode mode, const std::vector<double>& angles,
                                const std::vector<double>& rys) {
    for (double w : angles)
      for (double ry : rys) {
        Config c = detail::notch_base(mode);
        detail::set_notch_amplitude(c, w, ry);
        char id[64];
        std::snprintf(id, sizeof(id), "omega_%g_ry_%g", w, ry);
        camp.runs.push_back({id, c});
      }
    prov = {{"material.E", "published"},        {"material.nu", "published"},
            {"material.Gc", "published"},       {"material.ell", "published"},
            {"material.sigma0", "published"},   {"mesh.delta_tip", "published"},
            {"mesh.omega_deg", "published"},    {"mesh.R", "artifact-default"},
            {"mesh.grade", "artifact-default"}, {"load.t1", "artifact-default"},
            {"load.steps", "artifact-default"}};
  };

  if (name == "notch-sharp-pstress") {
    notch_family(PlanarMode::plane_stress, {1.0}, {0.1, 0.5, 2.0, 5.0});
  } else if (name == "notch-sharp-pstrain") {
    notch_family(PlanarMode::plane_strain, {1.0}, {0.1, 0.5, 2.0, 5.0});
  } else if (name == "notch-vangle-pstress") {
    notch_family(PlanarMode::plane_stress, {1.0, 30.0, 60.0, 85.0}, {0.1, 2.0});
  } else if (name == "notch-vangle-pstrain") {
    notch_family(PlanarMode::plane_strain, {1.0, 30.0, 60.0, 85.0}, {0.1, 2.0});
  } else if (name == "surfing-pstrain") {
    camp.runs.push_back({"base", detail::surfing_base(PlanarMode::plane_strain, 0.25, 0.4, 0.5)});
    prov = {{"material.E", "published"},      {"material.nu", "published"},
            {"material.Gc", "published"},     {"material.ell", "published"},
            {"material.sigma0", "published"}, {"mesh.delta", "published"},
            {"load.psi", "published"},        {"mesh.L", "artifact-default"},
            {"mesh.H", "artifact-default"},   {"mesh.precrack", "artifact-default"},
            {"load.V", "artifact-default"},   {"load.t1", "artifact-default"}};
  } else if (name == "surfing-pstress") {
    camp.runs.push_back({"base", detail::surfing_base(PlanarMode::plane_stress, 0.4, 0.4, 0.5)});
    prov = {{"material.ell", "published"},      {"material.sigma0", "published"},
            {"mesh.delta", "published"},        {"mesh.L", "artifact-default"},
            {"mesh.H", "artifact-default"},     {"load.t1", "artifact-default"}};
  } else if (name == "ell-sweep") {
    for (double ell : {0.1, 0.25, 0.4}) {
      char id[32];
      std::snprintf(id, sizeof(id), "ell_%g", ell);
      camp.runs.push_back({id, detail::surfing_base(PlanarMode::plane_strain, ell, 0.4, 0.5)});
    }
    prov = {{"material.ell", "published"},
            {"mesh.delta", "published"},  // delta/ell held at 0.4 so Gc_num is constant
            {"material.sigma0", "published"}};
  } else if (name == "mesh-sweep") {
    for (double doe : {0.2, 0.4, 0.6}) {
      char id[32];
      std::snprintf(id, sizeof(id), "delta_over_ell_%g", doe);
      camp.runs.push_back({id, detail::surfing_base(PlanarMode::plane_strain, 0.25, doe, 0.5)});
    }
    prov = {{"material.ell", "published"}, {"mesh.delta", "artifact-default"}};
  } else if (name == "psi-sweep") {
    for (double psi : {0.5, 1.0, 2.0}) {
      Config c = detail::surfing_base(PlanarMode::plane_strain, 0.25, 0.4, 0.5);
      c.set("material.elastic", "true");
      c.set("load.psi", psi);
      char id[32];
      std::snprintf(id, sizeof(id), "psi_%g", psi);
      camp.runs.push_back({id, c});
    }
    prov = {{"load.psi", "published"}, {"material.elastic", "artifact-default"}};
  } else if (name == "profile-validation") {
    Config c;
    c.set("task", "profile");
    c.set("material.Gc", 1.0);
    c.set("profile.ells", "0.1 0.25 0.4");
    c.set("profile.delta_over_ell", 0.2);
    camp.runs.push_back({"profiles", c});
    prov = {{"profile.ells", "artifact-default"}, {"profile.delta_over_ell", "artifact-default"}};
  } else {
    throw std::invalid_argument("unknown campaign preset: " + name);
  }
  return camp;
}

/// Execute all runs of a campaign on a small worker pool. Each run is an
/// independent deterministic simulation writing to out_dir/<name>/<id>/.
/// Returns the number of failed runs.
inline int run_campaign(const Campaign& camp, const std::string& out_dir, int jobs,
                        std::ostream* log = nullptr) {
  std::filesystem::create_directories(out_dir + "/" + camp.name);
  {
    nlohmann::json j;
    j["name"] = camp.name;
    j["provenance"] = camp.provenance;
    std::vector<std::string> ids;
    for (const auto& r : camp.runs) ids.push_back(r.id);
    j["runs"] = ids;
    detail::write_text(out_dir + "/" + camp.name + "/campaign.json", j.dump(2) + "\n");
  }
  std::atomic<int> next{0};
  std::atomic<int> failures{0};
  std::mutex log_mutex;
  jobs = std::max(1, jobs);
  const auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= static_cast<int>(camp.runs.size())) return;
      const auto& run = camp.runs[i];
      const std::string dir = out_dir + "/" + camp.name + "/" + run.id;
      try {
        if (run.cfg.get_str("task", "run") == "profile") {
          run_profile_study(run.cfg, dir);
        } else {
          const RunResult res = run_simulation(run.cfg, dir);
          if (res.failed) failures++;
        }
        if (log) {
          std::lock_guard<std::mutex> lk(log_mutex);
          (*log) << camp.name << "/" << run.id << " done\n";
        }
      } catch (const std::exception& ex) {
        failures++;
        std::lock_guard<std::mutex> lk(log_mutex);
        if (log) (*log) << camp.name << "/" << run.id << " FAILED: " << ex.what() << "\n";
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return failures.load();
}

struct CompareReport {
  double peak_J_a = 0.0, peak_J_b = 0.0;
  double final_len_a = 0.0, final_len_b = 0.0;
  int jumps_a = 0, jumps_b = 0;
  std::string csv_path;
};

/// Tabulate two run ledgers side by side: peak J, crack-jump counts and the
/// energy curves, plus a plot-ready CSV. Throws on schema mismatch.
inline CompareReport compare_runs(const std::string& dir_a, const std::string& dir_b,
                                  const std::string& out_csv, double jump_threshold = 0.0) {
  const Ledger a = Ledger::read_csv(dir_a + "/ledger.csv");
  const Ledger b = Ledger::read_csv(dir_b + "/ledger.csv");
  require(!a.rows.empty() && !b.rows.empty(), "compare: empty ledger");

  if (jump_threshold <= 0.0) {
    // default: two regularization lengths from the run metadata, if present
    for (const std::string& dir : {dir_a, dir_b}) {
      std::ifstream is(dir + "/meta.json");
      if (!is.good()) continue;
      nlohmann::json j;
      is >> j;
      if (j.contains("material") && j["material"].contains("ell"))
        jump_threshold = std::max(jump_threshold, 2.0 * j["material"]["ell"].get<double>());
    }
    if (jump_threshold <= 0.0) jump_threshold = 1e300;
  }

  CompareReport rep;
  const auto peaks = [&](const Ledger& led, double& peak, int& jumps, double& final_len) {
    peak = 0.0;
    jumps = 0;
    for (size_t i = 0; i < led.rows.size(); ++i) {
      peak = std::max(peak, led.rows[i].J);
      if (i > 0 && led.rows[i].crack_len - led.rows[i - 1].crack_len >= jump_threshold) jumps++;
    }
    final_len = led.rows.back().crack_len;
  };
  peaks(a, rep.peak_J_a, rep.jumps_a, rep.final_len_a);
  peaks(b, rep.peak_J_b, rep.jumps_b, rep.final_len_b);

  std::FILE* f = std::fopen(out_csv.c_str(), "w");
  require(f != nullptr, "compare: cannot open " + out_csv);
  std::fprintf(f, "step,t_a,J_a,crack_len_a,elastic_a,surface_a,plastic_a,"
                  "t_b,J_b,crack_len_b,elastic_b,surface_b,plastic_b\n");
  const size_t n = std::min(a.rows.size(), b.rows.size());
  for (size_t i = 0; i < n; ++i) {
    const auto& ra = a.rows[i];
    const auto& rb = b.rows[i];
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                 ra.step, ra.t, ra.J, ra.crack_len, ra.elastic, ra.surface, ra.plastic, rb.t, rb.J,
                 rb.crack_len, rb.elastic, rb.surface, rb.plastic);
  }
  std::fclose(f);
  rep.csv_path = out_csv;
  return rep;
}

}  // namespace epfrac
