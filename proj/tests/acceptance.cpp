// Acceptance run: one PASS/FAIL line per criterion. argv[1] is the CLI binary.

#include "gromovlab/barycenter.hpp"
#include "gromovlab/gw_solver.hpp"
#include "gromovlab/lgw.hpp"
#include "gromovlab/mgw_solver.hpp"
#include "gromovlab/oracle.hpp"

#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace gromovlab;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "first failure: " << what << "; ";
      pass = false;
    }
  }
};

Vector random_weights(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> unit(0.2, 1.0);
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = unit(rng);
  w /= w.sum();
  w[n - 1] = 1.0 - w.head(n - 1).sum();
  return w;
}

MmSpace random_space(std::mt19937_64& rng, std::uint64_t seed, Eigen::Index n) {
  return random_cloud(seed, n, 2, random_weights(rng, n));
}

Permutation random_permutation(std::mt19937_64& rng, Eigen::Index n) {
  std::vector<Eigen::Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return Permutation(p);
}

Vector pair_weights(double p) {
  Vector w(2);
  w << p, 1.0 - p;
  return w;
}

std::string str(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool preserves_anchors(const LgwResult& r, const Plan2& sx, const Plan2& sy) {
  if (!r.plan3) return false;
  const double gap_x = (project_pair(*r.plan3, Axis3::S, Axis3::X).mass() - sx.mass()).cwiseAbs().maxCoeff();
  const double gap_y = (project_pair(*r.plan3, Axis3::S, Axis3::Y).mass() - sy.mass()).cwiseAbs().maxCoeff();
  return gap_x <= 1e-9 && gap_y <= 1e-9;
}

// Projection checks gathered from criteria 4 to 6, reported under 12.
int lgw_runs = 0;
int lgw_projection_failures = 0;
// Every sweep record from criterion 7, checked under 12.
std::vector<SweepRecord> all_records;

LgwResult lgw_exact(const MmSpace& s, const MmSpace& x, const MmSpace& y) {
  const GwResult sx = solve_gw(s, x), sy = solve_gw(s, y);
  LgwResult r = solve_lgw_exact(s, x, y, sx.plan, sy.plan, {}, {sx.objective, sy.objective});
  ++lgw_runs;
  if (!preserves_anchors(r, sx.plan, sy.plan)) ++lgw_projection_failures;
  return r;
}

void criterion_1(Verdict& v) {
  const MmSpace a = two_point(1.0), b = two_point(3.0);
  const double value = solve_gw(a, b).value;
  const int resolution = 10001;
  const double brute = oracle::brute_gw(a, b, resolution);
  v.require(std::abs(value - std::sqrt(2.0)) <= 0.02 * std::sqrt(2.0), "value " + str(value));
  // Grid spacing of the 1-D scan is (1/2)/(resolution-1); the functional is
  // smooth, so the grid minimum sits within a few spacings of the true one.
  v.require(std::abs(std::sqrt(brute) - value) <= 1e-3, "oracle " + str(std::sqrt(brute)));
  v.detail << "solver " << str(value) << ", oracle " << str(std::sqrt(brute)) << ", sqrt2 " << str(std::sqrt(2.0));
}

void criterion_2(Verdict& v) {
  std::mt19937_64 rng(2);
  double worst_self = 0.0, worst_perm = 0.0, worst_sym = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Eigen::Index n = 1 + k % 10;
    const MmSpace x = random_space(rng, 1000 + k, n);
    const MmSpace y = random_space(rng, 2000 + k, 1 + (k * 7) % 10);
    const double self = solve_gw(x, x).value;
    const double perm = solve_gw(x, apply_permutation(x, random_permutation(rng, n))).value;
    const double xy = solve_gw(x, y).value, yx = solve_gw(y, x).value;
    worst_self = std::max(worst_self, self);
    worst_perm = std::max(worst_perm, perm);
    worst_sym = std::max(worst_sym, std::abs(xy - yx) / (1.0 + xy));
    v.require(self <= 1e-4, "self " + str(self));
    v.require(perm <= 1e-4, "relabel " + str(perm));
    v.require(std::abs(xy - yx) <= 1e-3 * (1.0 + xy), "symmetry " + str(xy) + " vs " + str(yx));
  }
  v.detail << "max GW(X,X) " << str(worst_self) << ", max GW(X,pX) " << str(worst_perm) << ", max rel asym "
           << str(worst_sym);
}

void criterion_3(Verdict& v) {
  // 2 x 2 instances up to scale: X = two_point(1, p), Y = two_point(b, q).
  int count = 0;
  double worst = 0.0;
  for (double b : {0.25, 0.5, 1.0, 2.0, 3.0}) {
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      for (double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const MmSpace x = two_point(1.0, pair_weights(p)), y = two_point(b, pair_weights(q));
        const double brute = oracle::brute_gw(x, y, 20001);
        const double solved = solve_gw(x, y).objective;
        const double gap = std::abs(solved - brute);
        worst = std::max(worst, gap / std::max(brute, 1e-12));
        v.require(gap <= 0.01 * brute + 1e-9, "2x2 b=" + str(b) + " p=" + str(p) + " q=" + str(q));
        ++count;
      }
    }
  }
  for (int k = 0; k < 5; ++k) {
    const MmSpace x = random_cloud(300 + k, 3, 2), y = random_cloud(400 + k, 3, 2);
    const double brute = oracle::brute_gw(x, y, 41);
    const double solved = solve_gw(x, y).objective;
    // The grid minimum is an upper bound; the solver may only beat it by grid error.
    v.require(std::abs(solved - brute) <= 0.01 * brute + 1e-9, "3x3 seed " + std::to_string(300 + k));
    worst = std::max(worst, std::abs(solved - brute) / std::max(brute, 1e-12));
    ++count;
  }
  v.detail << count << " instances, max relative gap " << str(worst);
}

void criterion_4(Verdict& v) {
  std::mt19937_64 rng(4);
  const MmSpace point = single_point_space();
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const MmSpace x = random_space(rng, 4000 + k, 2 + k % 7), y = random_space(rng, 4100 + k, 3 + (k * 3) % 6);
    const double gw = solve_gw(x, y).value;
    const double lgw = lgw_exact(point, x, y).value;
    worst = std::max(worst, std::abs(lgw - gw) / gw);
    v.require(std::abs(lgw - gw) <= 0.01 * gw, "pair " + std::to_string(k));
  }
  v.detail << "max relative gap " << str(worst);
}

void criterion_5(Verdict& v) {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const MmSpace x = random_space(rng, 5000 + k, 2 + k % 7), y = random_space(rng, 5100 + k, 3 + (k * 3) % 6);
    const double gw = solve_gw(x, y).value;
    const double lgw = lgw_exact(x, x, y).value;
    worst = std::max(worst, std::abs(lgw - gw) / gw);
    v.require(std::abs(lgw - gw) <= 0.01 * gw, "pair " + std::to_string(k));
  }
  v.detail << "max relative gap " << str(worst);
}

void criterion_6(Verdict& v) {
  std::mt19937_64 rng(6);
  double lower_margin = INFINITY, upper_margin = INFINITY;
  for (int k = 0; k < 20; ++k) {
    const MmSpace s = random_space(rng, 6000 + k, 1 + k % 8);
    const MmSpace x = random_space(rng, 6100 + k, 2 + (k * 3) % 7);
    const MmSpace y = random_space(rng, 6200 + k, 2 + (k * 5) % 7);
    const double gw_xy = solve_gw(x, y).value;
    const double gw_sx = solve_gw(s, x).value, gw_sy = solve_gw(s, y).value;
    const double lgw = lgw_exact(s, x, y).value;
    const double tol = 1e-2 * (1.0 + gw_sx + gw_sy);
    lower_margin = std::min(lower_margin, lgw + tol - gw_xy);
    upper_margin = std::min(upper_margin, gw_sx + gw_sy + tol - lgw);
    v.require(gw_xy <= lgw + tol, "lower bound, triple " + std::to_string(k));
    v.require(lgw <= gw_sx + gw_sy + tol, "upper bound, triple " + std::to_string(k));
  }
  v.detail << "min slack lower " << str(lower_margin) << ", upper " << str(upper_margin);
}

void criterion_7(Verdict& v) {
  const SweepSchedule schedule{1.0, 0.5, 11};
  const SweepResult two = epsilon_sweep(two_point(2.0), two_point(1.0), two_point(3.0), schedule);
  v.require(!two.error && two.records.size() == 11, "two-point sweep incomplete");
  if (two.records.size() == 11) {
    all_records.insert(all_records.end(), two.records.begin(), two.records.end());
    const SweepRecord& last = two.records.back();
    v.require(std::abs(last.quad_part - 2.0) <= 0.1, "quad_part " + str(last.quad_part));
    v.require(std::abs(last.anchor_sx - 0.5) <= 0.025, "anchor_sx " + str(last.anchor_sx));
    v.require(std::abs(last.anchor_sy - 0.5) <= 0.025, "anchor_sy " + str(last.anchor_sy));
    for (std::size_t k = 9; k < 11; ++k) {
      const auto gap = [&](std::size_t i) {
        return std::abs(two.records[i].quad_part - two.records[i].lgw_ref * two.records[i].lgw_ref);
      };
      v.require(gap(k) <= gap(k - 1) + 1e-12, "gap increased at step " + std::to_string(k));
    }
    v.detail << "two-point final quad " << str(last.quad_part) << ", anchors " << str(last.anchor_sx) << "/"
             << str(last.anchor_sy) << "; ";
  }
  std::mt19937_64 rng(7);
  double worst_quad = 0.0, worst_anchor = 0.0;
  for (int k = 0; k < 5; ++k) {
    const MmSpace s = random_space(rng, 7000 + k, 2 + k % 5);
    const MmSpace x = random_space(rng, 7100 + k, 3 + (k * 2) % 4);
    const MmSpace y = random_space(rng, 7200 + k, 2 + (k * 3) % 5);
    const SweepResult r = epsilon_sweep(s, x, y, schedule);
    v.require(!r.error && r.records.size() == 11, "random sweep " + std::to_string(k) + " incomplete");
    if (r.records.empty()) continue;
    all_records.insert(all_records.end(), r.records.begin(), r.records.end());
    const SweepRecord& last = r.records.back();
    const double ref2 = last.lgw_ref * last.lgw_ref;
    const double quad_gap = std::abs(last.quad_part - ref2) / (1.0 + ref2);
    const double anchor_gap = std::max(std::abs(last.anchor_sx - last.gw2_sx_ref) / last.gw2_sx_ref,
                                       std::abs(last.anchor_sy - last.gw2_sy_ref) / last.gw2_sy_ref);
    worst_quad = std::max(worst_quad, quad_gap);
    worst_anchor = std::max(worst_anchor, anchor_gap);
    v.require(quad_gap <= 0.05, "random sweep " + std::to_string(k) + " quad gap " + str(quad_gap));
    v.require(anchor_gap <= 0.05, "random sweep " + std::to_string(k) + " anchor gap " + str(anchor_gap));
  }
  v.detail << "random triples: max quad gap " << str(worst_quad) << ", max anchor gap " << str(worst_anchor);
}

void criterion_8(Verdict& v) {
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const MmSpace x = random_space(rng, 8000 + k, 2 + k % 6), y = random_space(rng, 8100 + k, 2 + (k * 5) % 7);
    const double gw2 = solve_gw(x, y).objective;
    const double mgw = solve_mgw({x, y}, PairwiseCoefficients::constant(2, 0.5)).value;
    worst = std::max(worst, std::abs(mgw - gw2) / gw2);
    v.require(std::abs(mgw - gw2) <= 0.01 * gw2, "pair " + std::to_string(k));
  }
  v.detail << "max relative gap " << str(worst);
}

void criterion_9(Verdict& v) {
  std::mt19937_64 rng(9);
  const MmSpace x = random_space(rng, 9000, 6);
  const double single = solve_gw(free_support_barycenter({x}, BarycenterWeights::uniform(1)).bary, x).value;
  v.require(single <= 1e-3, "N=1 recovery " + str(single));
  const MmSpace y = random_space(rng, 9001, 5);
  const double pair = solve_gw(free_support_barycenter({y, y}, BarycenterWeights::uniform(2)).bary, y).value;
  v.require(pair <= 1e-3, "identical pair " + str(pair));
  const std::vector<MmSpace> spaces = {two_point(1.0), two_point(3.0)};
  const BarycenterWeights rho = BarycenterWeights::uniform(2);
  const double produced = barycenter_objective(free_support_barycenter(spaces, rho).bary, spaces, rho);
  const double midpoint = barycenter_objective(two_point(2.0), spaces, rho);
  v.require(produced <= midpoint * 1.05, "objective " + str(produced) + " vs midpoint " + str(midpoint));
  v.detail << "N=1 " << str(single) << ", identical " << str(pair) << ", objective " << str(produced)
           << " vs midpoint " << str(midpoint);
}

void criterion_10(Verdict& v) {
  const std::vector<MmSpace> spaces = {two_point(1.0), two_point(3.0), circle(5)};
  Vector w(3);
  w << 0.2, 0.3, 0.5;
  const BarycenterWeights rho{w};
  const FixedBarycenter point = fixed_support_barycenter(spaces, rho, Matrix::Zero(1, 1));
  double analytic = 0.0;
  for (std::size_t i = 0; i < spaces.size(); ++i) {
    const Matrix& d = spaces[i].dist();
    const Vector& mu = spaces[i].weights();
    analytic += w[static_cast<Eigen::Index>(i)] * mu.dot(d.cwiseProduct(d) * mu);
  }
  v.require(point.sigma_star.size() == 1 && point.sigma_star[0] == 1.0, "sigma_star not [1]");
  v.require(std::abs(point.mgw_value - analytic) <= 1e-9, "objective " + str(point.mgw_value));
  std::mt19937_64 rng(10);
  const MmSpace x = random_space(rng, 10000, 6);
  const double self = solve_gw(fixed_support_barycenter({x}, BarycenterWeights::uniform(1), x.dist()).bary, x).value;
  v.require(self <= 1e-3, "self support " + str(self));
  v.detail << "sigma_star " << str(point.sigma_star[0]) << ", objective gap " << str(point.mgw_value - analytic)
           << ", self-support GW " << str(self);
}

std::string capture(const std::string& command) {
  std::string out;
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) return out;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  pclose(pipe);
  return out;
}

void criterion_11(Verdict& v, const std::string& binary) {
  const fs::path dir = fs::temp_directory_path() / ("gromovlab_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto path = [&](const std::string& name) { return (dir / name).string(); };
  v.require(std::system((binary + " gen random_cloud --n 5 --seed 3 > " + path("r.json")).c_str()) == 0, "gen failed");
  v.require(std::system((binary + " gen random_cloud --n 6 --seed 4 > " + path("u.json")).c_str()) == 0, "gen failed");
  v.require(std::system((binary + " gen circle --n 5 > " + path("c.json")).c_str()) == 0, "gen failed");
  v.require(std::system((binary + " gen two_point --a 3 > " + path("t.json")).c_str()) == 0, "gen failed");
  const std::string inputs = path("u.json") + " " + path("c.json") + " " + path("t.json");
  const std::vector<std::string> commands = {
      "gw --x " + path("r.json") + " --y " + path("u.json") + " --seed 7",
      "mgw --spaces " + path("r.json") + " " + path("t.json") + " --seed 7",
      "lgw --ref " + path("r.json") + " --x " + path("u.json") + " --y " + path("c.json"),
      "barycenter --inputs " + path("c.json") + " " + path("t.json"),
      "eps-sweep --ref " + path("t.json") + " --x " + path("c.json") + " --y " + path("t.json") + " --steps 3",
  };
  int identical = 0;
  for (const std::string& c : commands) {
    const std::string first = capture(binary + " " + c);
    const std::string second = capture(binary + " " + c);
    v.require(!first.empty() && first == second, "repeat differs: " + c.substr(0, c.find(' ')));
    identical += !first.empty() && first == second;
  }
  const std::string matrix = binary + " lgw-matrix --ref " + path("r.json") + " --inputs " + inputs + " --threads ";
  const std::string one = capture(matrix + "1"), four = capture(matrix + "4");
  v.require(!one.empty() && one == four, "lgw-matrix differs between 1 and 4 threads");
  fs::remove_all(dir);
  v.detail << identical << "/" << commands.size() << " subcommands byte identical on repeat; lgw-matrix threads 1 vs 4 "
           << (one == four ? "identical" : "different");
}

void criterion_12(Verdict& v) {
  double worst = 0.0;
  for (const SweepRecord& r : all_records) {
    const double gap = std::abs(r.mgw_value - (r.eps * r.quad_part + r.anchor_sx + r.anchor_sy));
    worst = std::max(worst, gap);
    v.require(gap <= 1e-9, "sweep record at eps " + str(r.eps));
  }
  v.require(!all_records.empty(), "no sweep records");
  v.require(lgw_runs > 0 && lgw_projection_failures == 0, std::to_string(lgw_projection_failures) + " LGW plans moved");
  v.detail << all_records.size() << " sweep records, max identity gap " << str(worst) << "; " << lgw_runs
           << " LGW plans, " << lgw_projection_failures << " projection failures";
}

}  // namespace

int main(int argc, char** argv) {
  const std::string binary = argc > 1 ? argv[1] : "gromovlab";
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {"two-point closed form", criterion_1},
      {"metric sanity", criterion_2},
      {"oracle equivalence", criterion_3},
      {"single-point reference", criterion_4},
      {"reference equal to X", criterion_5},
      {"LGW bounds", criterion_6},
      {"eps-sweep convergence", criterion_7},
      {"two-marginal reduction", criterion_8},
      {"free-support barycenter", criterion_9},
      {"fixed-support barycenter", criterion_10},
      {"determinism", [&](Verdict& v) { criterion_11(v, binary); }},
      {"bookkeeping identities", criterion_12},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    failed += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << v.detail.str()
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
