// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// line fails. argv[1] is the path of the rfnav CLI (used for determinism).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "rfnav/rfnav.hpp"

namespace fs = std::filesystem;
using namespace rfnav;

namespace {

int failures = 0;

void report(const std::string& id, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << id << "  " << detail << std::endl;
  if (!ok) ++failures;
}

std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

double angle_error(double a, double b) { return std::abs(wrap_angle(a - b)); }
double angle_to(const Vec2& from, const Vec2& to) { return std::atan2(to.y - from.y, to.x - from.x); }
double dir_angle(const Vec2& v) { return std::atan2(v.y, v.x); }

// Front reading of a vertical dipole at midpoint m (angle off +x, positive towards +y).
double front_of(const Vec2& m, const Vec2& s) {
  const Vec2 r = s - m;
  return std::asin(r.y / r.norm());
}

// ------------------------------------------------------------------ 1-3

void criterion_1() {
  const Timer t;
  const double d = RfConfig{}.half_side;
  const Vec2 p{d, 0.0}, q{-d, 0.0};
  RngStream rng(1001, 0);
  double worst_closed = 0.0, worst_general = 0.0;
  int bad_closed = 0, bad_general = 0, n = 0;
  while (n < 10000) {
    const Vec2 s{rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0)};
    if (s.norm() <= 1.0 || std::abs(s.y) <= 0.05) continue;
    ++n;
    const SquareAngles a = resolve_square(front_of(p, s), front_of(q, s), d);
    const double closed = square_aoa(a.theta1, a.theta2);
    const double e1 = angle_error(closed, dir_angle(s));
    worst_closed = std::max(worst_closed, e1);
    bad_closed += e1 > 1e-9;
    const AoaSolution sol = solve_general(DipolePair::at(p, a.theta1), DipolePair::at(q, a.theta2));
    const double e2 = sol.kind == AoaCase::Unique ? angle_error(dir_angle(sol.direction), closed) : kPi;
    worst_general = std::max(worst_general, e2);
    bad_general += e2 > 1e-9;
  }
  const double secs = t.seconds();
  report("1a", bad_closed == 0,
         "square_aoa(resolve_square) vs atan2 over 1e4 sources: " + std::to_string(bad_closed) +
             " above 1e-9 rad, worst " + num(worst_closed) + " rad");
  report("1b", bad_general == 0,
         "solve_general vs square_aoa: " + std::to_string(bad_general) + " above 1e-9 rad, worst " + num(worst_general) +
             " rad");
  report("1c", secs < 1.0, "runtime " + num(secs, 3) + " s (< 1 s)");
}

void criterion_2() {
  RngStream rng(1002, 0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t1 = rng.uniform(-kPi, kPi), t2 = rng.uniform(-kPi, kPi);
    const double det = system_determinant(DipolePair::at({0.225, 0.0}, t1), DipolePair::at({-0.225, 0.0}, t2));
    worst = std::max(worst, std::abs(det - std::sin(t1 - t2)));
  }
  report("2", worst <= 1e-12, "max |det(A) - sin(t1 - t2)| over 1e3 pairs = " + num(worst));
}

void criterion_3() {
  const double th = 1.1;
  const AoaSolution par = solve_general(DipolePair::at({0.225, 0.0}, th), DipolePair::at({-0.225, 0.0}, th));
  const bool par_ok = par.kind == AoaCase::ParallelFallback && distance(par.direction, unit_from_angle(th)) <= 1e-12;
  report("3a", par_ok, std::string("parallel readings -> ") + to_string(par.kind) + ", direction = d12");

  // Both rays point away from a source at (1, 3).
  const Vec2 s{1.0, 3.0}, p{0.225, 0.0}, q{-0.225, 0.0};
  const AoaSolution div = solve_general(DipolePair::at(p, angle_to(p, s) + kPi), DipolePair::at(q, angle_to(q, s) + kPi));
  report("3b", div.kind == AoaCase::RejectedDivergent, std::string("diverging rays -> ") + to_string(div.kind));

  RngStream rng(1003, 0);
  int bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec2 a1{rng.uniform(0.05, 0.25), rng.uniform(-0.05, 0.05)}, a2{0.0, 0.0};
    const Vec2 a4{rng.uniform(-0.05, 0.05), rng.uniform(0.05, 0.25)};
    Vec2 src;
    do src = {rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0)};
    while (src.norm() <= 1.0);
    const Vec2 m12 = (a1 + a2) * 0.5, m24 = (a2 + a4) * 0.5;
    const AoaSolution sol = three_antenna_solve(DipolePair::at(m12, angle_to(m12, src)), DipolePair::at(m24, angle_to(m24, src)));
    const double e = sol.kind == AoaCase::Unique ? angle_error(dir_angle(sol.direction), dir_angle(src)) : kPi;
    worst = std::max(worst, e);
    bad += e > 1e-9;
  }
  report("3c", bad == 0, "three_antenna_solve over 1e3 cases: " + std::to_string(bad) + " above 1e-9 rad, worst " + num(worst));
}

// ------------------------------------------------------------------ 4

void criterion_4() {
  const Timer t;
  RfConfig clean;
  clean.noise_sigma = 0.0;
  const CircleResult c = run_rf_circle_test(5.0, 72, clean, RngStream(kBenchmarkSeed, 0));
  report("4a", c.max_abs_err < 0.5 && c.mean_abs_err < 0.2,
         "noiseless circle (5 m, 72 bearings): max " + num(c.max_abs_err) + " deg (< 0.5), mean " +
             num(c.mean_abs_err) + " deg (< 0.2)");

  MissionConfig mc;
  mc.rf.noise_sigma = kCalibratedNoise;
  WorldMap open;
  const PursuitResult pr = run_rf_pursuit_test(open, mc, RngStream(kBenchmarkSeed, 0));
  report("4b", std::abs(pr.mean_err_deg - 1.48) <= 1.0 && pr.record.success(),
         "pursuit at noise " + num(kCalibratedNoise) + ": mean bearing error " + num(pr.mean_err_deg) +
             " deg (1.48 +- 1.0), outcome " + to_string(pr.record.outcome));
  const double secs = t.seconds();
  report("4c", secs < 10.0, "runtime " + num(secs, 3) + " s (< 10 s)");
}

// ------------------------------------------------------------------ 5

void criterion_5() {
  RngStream rng(1005, 0);
  const double h = 1e-5;
  double worst = 0.0;
  int n = 0;
  while (n < 1000) {
    FieldContext c;
    c.goal = {rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
    c.params = {rng.uniform(0.2, 3.0), rng.uniform(0.05, 2.0), rng.uniform(0.3, 2.0)};
    const int k = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < k; ++i) c.obstacles.push_back({{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)}, rng.uniform(0.2, 0.8), i});
    const Vec2 q{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
    bool ok = true;
    for (const Obstacle& ob : c.obstacles) {
      const double d = d_boundary(q, ob, c.r_drone);
      if (d <= 2 * kMinBoundary || std::abs(d - c.params.d0) < 10 * h) ok = false;
    }
    if (!ok) continue;
    ++n;
    const Vec2 fd{(u_total(q + Vec2{h, 0.0}, c) - u_total(q - Vec2{h, 0.0}, c)) / (2 * h),
                  (u_total(q + Vec2{0.0, h}, c) - u_total(q - Vec2{0.0, h}, c)) / (2 * h)};
    const Vec2 g = grad_u(q, c);
    worst = std::max(worst, (g - fd).norm() / std::max(1.0, g.norm()));
  }
  report("5", worst < 1e-4, "max relative gradient error over 1e3 points = " + num(worst) + " (< 1e-4)");
}

// ------------------------------------------------------------------ 6, 8

struct BenchmarkRun {
  std::vector<MapSummary> summaries;
  int penetrating_waypoints = 0;
  int checked_trajectories = 0;
  int colliding_successes = 0;
  double seconds = 0.0;
};

BenchmarkRun run_benchmark() {
  const Timer t;
  BenchmarkRun out;
  BenchmarkConfig cfg = default_benchmark_config();
  std::vector<std::vector<Obstacle>> seen;
  cfg.mission.on_plan = [&](std::span<const Obstacle> obs) { seen.emplace_back(obs.begin(), obs.end()); };
  const std::vector<MapPreset> presets = table_presets();
  for (std::size_t k = 0; k < presets.size(); ++k) {
    const WorldMap map = build_preset(presets[k]);
    seen.clear();
    const std::vector<RunPair> pairs = run_map_benchmark(map, static_cast<int>(k), cfg);
    // Missions run in order standard, modified per run; each cycle called on_plan once.
    std::size_t cursor = 0;
    for (const RunPair& rp : pairs) {
      for (const MissionRecord* rec : {&rp.standard, &rp.modified}) {
        for (const CycleRecord& cyc : rec->cycles) {
          const std::vector<Obstacle>& known = seen.at(cursor++);
          std::vector<const Trajectory*> trajs{&cyc.chosen};
          for (const Sample& s : cyc.samples) trajs.push_back(&s.trajectory);
          for (const Trajectory* tr : trajs) {
            ++out.checked_trajectories;
            for (const Vec2& p : tr->points) out.penetrating_waypoints += min_boundary(p, known, 0.2) < 0.0;
          }
        }
        if (rec->success())
          for (const Vec2& p : rec->trail)
            if (min_boundary(p, map.obstacles, cfg.mission.sampling.r_drone) < 0.0) {
              ++out.colliding_successes;
              break;
            }
      }
    }
    if (cursor != seen.size()) throw std::logic_error("planner spy out of step with cycle records");
    out.summaries.push_back(summarize(presets[k].name, pairs));
  }
  out.seconds = t.seconds();
  return out;
}

void criterion_6(const BenchmarkRun& b) {
  report("6a", b.penetrating_waypoints == 0,
         std::to_string(b.penetrating_waypoints) + " waypoints inside revealed inflated obstacles across " +
             std::to_string(b.checked_trajectories) + " sampled/chosen trajectories");
  report("6b", b.colliding_successes == 0, std::to_string(b.colliding_successes) + " successful missions with a collision");
}

void criterion_8(const BenchmarkRun& b) {
  std::string table;
  bool each = true;
  int ss = 0, sm = 0;
  double rl_s = 0.0, rl_m = 0.0;
  int joint = 0;
  for (const MapSummary& s : b.summaries) {
    each = each && s.success_modified >= s.success_standard;
    ss += s.success_standard;
    sm += s.success_modified;
    rl_s += s.avg_relative_length_standard * s.n_both_succeeded;
    rl_m += s.avg_relative_length_modified * s.n_both_succeeded;
    joint += s.n_both_succeeded;
    table += " " + s.name + " " + std::to_string(s.success_standard) + "/" + std::to_string(s.success_modified);
  }
  report("8a", each, "modified >= standard on every map (standard/modified):" + table);
  report("8b", sm - ss >= 8,
         "total successes standard " + std::to_string(ss) + "/35, modified " + std::to_string(sm) + "/35, gain " +
             std::to_string(sm - ss) + " (>= 8)");
  const MapSummary& m5 = b.summaries.back();
  report("8c", m5.success_modified >= 4 && m5.success_standard <= 2,
         "map5 modified " + std::to_string(m5.success_modified) + "/7 (>= 4), standard " +
             std::to_string(m5.success_standard) + "/7 (<= 2)");
  const double ratio = joint ? (rl_m / joint) / (rl_s / joint) : 0.0;
  report("8d", joint > 0 && ratio <= 1.02,
         "mean relative length modified " + num(joint ? rl_m / joint : 0.0) + " vs standard " +
             num(joint ? rl_s / joint : 0.0) + " over " + std::to_string(joint) + " joint runs, ratio " + num(ratio) +
             " (<= 1.02)");
  report("8e", b.seconds < 600.0, "benchmark runtime " + num(b.seconds, 3) + " s (< 600 s)");
}

// ------------------------------------------------------------------ 7

void criterion_7() {
  RngStream rng(1007, 0);
  bool mono = true;
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(0.0, 50.0), b = rng.uniform(0.0, 50.0), lam = rng.uniform(0.1, 10.0);
    if (a < b) mono = mono && weight(a, lam) > weight(b, lam);
  }
  report("7a", mono, "lower cost gives strictly greater weight (1e3 pairs)");

  double excess = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 16, m = 1 + rng.below(10);
    auto rand_traj = [&] {
      Trajectory t;
      for (std::size_t i = 0; i < n; ++i) t.points.push_back({rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)});
      return t;
    };
    const Trajectory init = rand_traj();
    std::vector<Trajectory> s;
    std::vector<double> w;
    for (std::size_t j = 0; j < m; ++j) {
      s.push_back(rand_traj());
      w.push_back(weight(rng.uniform(0.0, 30.0), 1.0));
    }
    const Trajectory f = fuse_optimal(init, s, w);
    for (std::size_t i = 0; i < n; ++i) {
      double lx = init.points[i].x, hx = lx, ly = init.points[i].y, hy = ly;
      for (const Trajectory& t : s) {
        lx = std::min(lx, t.points[i].x);
        hx = std::max(hx, t.points[i].x);
        ly = std::min(ly, t.points[i].y);
        hy = std::max(hy, t.points[i].y);
      }
      excess = std::max({excess, lx - f.points[i].x, f.points[i].x - hx, ly - f.points[i].y, f.points[i].y - hy});
    }
  }
  report("7b", excess <= 1e-12, "fused points outside the per-coordinate hull by at most " + num(excess));

  Trajectory init, a, b, c;
  init.points = {{0, 0}, {0.5, 0}, {1, 0}};
  a.points = {{0, 0}, {0.5, 0.4}, {1, 0.8}};
  b.points = {{0, 0}, {0.5, -0.4}, {1, -0.8}};
  c.points = {{0, 0}, {0.4, 0.1}, {0.9, 0.3}};
  const std::vector<Trajectory> abc{a, b, c};
  const std::vector<double> costs{1.0, 2.0, 4.0};
  auto dev = [](const Trajectory& x, const Trajectory& y) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.points.size(); ++i) m = std::max(m, distance(x.points[i], y.points[i]));
    return m;
  };
  Trajectory mean = init;
  for (std::size_t i = 0; i < mean.points.size(); ++i)
    mean.points[i] = (a.points[i] + b.points[i] + c.points[i]) / 3.0;
  const double cold = dev(fuse_optimal(init, abc, normalized_weights(costs, 1e-3)), a);
  const double hot = dev(fuse_optimal(init, abc, normalized_weights(costs, 1e15)), mean);
  report("7c", cold <= 1e-12 && hot <= 1e-12,
         "lambda -> 0 gives the cheapest sample (dev " + num(cold) + "), lambda -> inf the plain mean (dev " + num(hot) + ")");

  const double same = dev(fuse_optimal(init, std::vector<Trajectory>{init, init}, std::vector<double>{0.2, 0.7}), init);
  const double single = dev(fuse_optimal(init, std::vector<Trajectory>{c}, std::vector<double>{0.01}), c);
  const double sym = dev(fuse_optimal(init, std::vector<Trajectory>{a, b}, std::vector<double>{0.3, 0.3}), init);
  report("7d", same <= 1e-12 && single <= 1e-12 && sym <= 1e-12,
         "fuse cases: identical " + num(same) + ", single " + num(single) + ", symmetric " + num(sym));
}

// ------------------------------------------------------------------ 9

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    files[fs::relative(e.path(), root).string()] = os.str();
  }
  return files;
}

void criterion_9(const std::string& cli) {
  const fs::path base = fs::temp_directory_path() / "rfnav_acceptance";
  fs::remove_all(base);
  const std::vector<std::pair<std::string, std::string>> verbs{
      {"gen-map", "gen-map"},
      {"rf-circle", "rf-circle --seed 7"},
      {"rf-pursuit", "rf-pursuit --seed 7"},
      {"mission", "mission --seed 7 --preset 5"},
      {"benchmark", "benchmark"},
      {"export", "export --in " + (base / "benchmark_1").string()},
  };
  std::string detail;
  bool all = true;
  for (const auto& [name, args] : verbs) {
    bool ok = true;
    for (int k = 1; k <= 2; ++k) {
      const fs::path out = base / (name + "_" + std::to_string(k));
      const std::string cmd = "\"" + cli + "\" " + args + " --out \"" + out.string() + "\" > /dev/null";
      ok = ok && std::system(cmd.c_str()) == 0;
    }
    if (ok) {
      const auto a = snapshot(base / (name + "_1"));
      const auto b = snapshot(base / (name + "_2"));
      ok = !a.empty() && a == b;
      detail += " " + name + "(" + std::to_string(a.size()) + " files)" + (ok ? "" : "!");
    } else {
      detail += " " + name + "(exit!)";
    }
    all = all && ok;
  }
  report("9", all, "byte-identical reruns:" + detail);
  fs::remove_all(base);
}

// ------------------------------------------------------------------ 10

void criterion_10() {
  const std::vector<MapPreset> presets = table_presets();
  bool means = true;
  std::string detail;
  std::vector<double> var;
  for (const MapPreset& p : presets) {
    const DensityGrid g = obstacle_density(build_preset(p));
    means = means && std::abs(g.mean - p.mean) <= 0.1 * p.mean;
    var.push_back(g.variance);
    detail += " " + p.name + " " + num(g.mean) + "/" + num(g.variance);
  }
  report("10a", means, "means within 10% of targets (mean/variance):" + detail);
  bool order = true;
  for (std::size_t i = 0; i < presets.size(); ++i)
    for (std::size_t j = 0; j < presets.size(); ++j)
      if (presets[i].variance < presets[j].variance) order = order && var[i] < var[j];
  bool five = true;
  for (std::size_t i = 0; i + 1 < var.size(); ++i) five = five && var.back() > var[i];
  report("10b", order && five, std::string("variance rank order matches the targets") + (five ? ", map5 greatest" : ""));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path-to-rfnav-cli>\n";
    return 2;
  }
  const Timer total;
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  const BenchmarkRun bench = run_benchmark();
  criterion_6(bench);
  criterion_7();
  criterion_8(bench);
  criterion_9(argv[1]);
  criterion_10();
  std::cout << failures << " failing line(s), " << num(total.seconds(), 3) << " s" << std::endl;
  return failures ? 1 : 0;
}
