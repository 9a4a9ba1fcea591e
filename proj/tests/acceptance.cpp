#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "tdgge/tdgge.hpp"

using namespace tdgge;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream note;
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int n, const char* name, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const Error& e) {
    o.pass = false;
    o.note << " [error " << to_string(e.code()) << ": " << e.what() << "]";
  } catch (const std::exception& e) {
    o.pass = false;
    o.note << " [exception: " << e.what() << "]";
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %d %s:%s (%.1fs)\n", o.pass ? "PASS" : "FAIL", n, name, o.note.str().c_str(), s);
  std::fflush(stdout);
}

double tau_pi_over(double delta, int k) {
  return tau_for_gamma(delta, pi / k, threshold_tau(delta) + 1e-9, 3.0);
}

double comm(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) { return exact::max_abs(A * B - B * A); }

bool halves(const std::vector<double>& r) {
  for (size_t i = 1; i < r.size(); ++i)
    if (!(std::abs(r[i]) <= 0.5 * std::abs(r[i - 1]))) return false;
  return true;
}

std::string list(const std::vector<double>& r) {
  std::ostringstream s;
  for (size_t i = 0; i < r.size(); ++i) s << (i ? " " : "") << std::abs(r[i]);
  return s.str();
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");

  criterion(1, "Trotter threshold", [](Outcome& o) {
    const double t = threshold_tau(2.5);
    o.note << " tau_th(2.5) = " << t;
    o.check(std::abs(t - 1.7952) <= 1e-4, "1.7952 +- 1e-4");
    for (double d : {1.5, 2.5, 3.0, 7.0}) o.check(std::abs(threshold_tau(d) - 2 * pi / (d + 1)) < 1e-15, "2 pi/(1 + delta)");
  });

  criterion(2, "free line", [](Outcome& o) {
    for (auto [d, t] : {std::pair{2.0, pi}, std::pair{4.0, pi / 2}, std::pair{2.5, 4 * pi / 5}}) {
      const auto s = make_free_point(d, t);
      const auto m = magnetization_series(s, 2000, 10000);
      double avg = 0;
      for (int k = 1000; k <= 10000; ++k) avg += m.site0[k];
      avg /= 9001;
      const auto a = magnetization_asymptotic(s);
      // j = 0 labels site 1: (-1)^{j+1}(|cos tau/2| - 1)
      const double closed0 = -(std::abs(std::cos(t / 2)) - 1.0);
      o.note << " (" << d << "," << t << "): avg " << avg << " asym " << a.site0 << ";";
      o.check(std::abs(avg - closed0) <= 1e-3, "time average");
      o.check(std::abs(a.site0 - closed0) <= 1e-12 && std::abs(a.site1 + closed0) <= 1e-12, "asymptotic");
    }
  });

  criterion(3, "gapped null", [](Outcome& o) {
    for (auto [d, t] : {std::pair{3.0, 0.4}, std::pair{2.5, 1.5}, std::pair{3.0, 1e-3}}) {
      const auto m = stag_mag_gapped(solve_gapped(derive_params(d, t), 20, 512));
      o.note << " (" << d << "," << t << "): " << m.staggered << ";";
      o.check(std::abs(m.staggered) < 1e-5, "|sigma| < 1e-5");
    }
  });

  criterion(4, "root-of-unity transition", [](Outcome& o) {
    const auto p = derive_params(2.5, tau_pi_over(2.5, 3));
    const double inf = site_mag_gapless(solve_gapless(p, 1024, 20.0)).staggered;
    const double e6 = exact::diagonal_ensemble_sz(p, 6).staggered;
    const double e12 = exact::diagonal_ensemble_sz(p, 12).staggered;
    o.note << " tau " << p.tau << " TBA " << inf << " DE L=6 " << e6 << " DE L=12 " << e12;
    o.check(std::abs(inf) > 1e-3, "nonzero");
    o.check(std::abs(e12 - inf) < std::abs(e6 - inf), "L=12 closer than L=6");
  });

  criterion(5, "circuit consistency", [](Outcome& o) {
    const auto p = derive_params(2.5, tau_pi_over(2.5, 3));
    const auto ev = exact::evolve_and_average(p, 10, 1000, 200, 1000);
    const auto de = exact::diagonal_ensemble_sz(p, 10);
    o.note << " tail " << ev.tail_site0 << " DE " << de.site0 << " antisym " << ev.max_antisymmetry;
    o.check(std::abs(ev.tail_site0 - de.site0) <= 5e-2, "tail vs DE");
    o.check(ev.max_antisymmetry <= 1e-12, "antisymmetry");
  });

  criterion(6, "integrability identities", [](Outcome& o) {
    double qc = 0, tc = 0, fv = 0, mod = 0, dr = 0;
    for (const auto& p : {derive_params(3.0, 0.4), derive_params(2.5, tau_pi_over(2.5, 3))}) {
      for (int L : {6, 8}) {
        const auto U = exact::build_floquet(p, L).M;
        for (int b : {1, -1}) qc = std::max(qc, comm(exact::build_charge_q1(p, L, b).M, U));
      }
      const auto A = exact::build_transfer_matrix(cplx(0.3, 0.1), p, 6).M;
      const auto B = exact::build_transfer_matrix(cplx(-0.6, 0.25), p, 6).M;
      tc = std::max(tc, comm(A, B));
      const auto f = exact::floquet_vs_transfer(p, 6);
      fv = std::max(fv, f.deviation);
      mod = std::max(mod, std::abs(std::abs(f.scalar) - 1.0));
      const auto D = exact::double_row(0.0, p, 6).M;
      dr = std::max(dr, exact::max_abs(D - Eigen::MatrixXcd::Identity(D.rows(), D.cols())));
    }
    o.note << " [Q,U] " << qc << " [T,T'] " << tc << " U~TT " << fv << " |c|-1 " << mod << " TT(0)-1 " << dr;
    o.check(qc < 1e-10, "charges");
    o.check(tc < 1e-10, "transfer commute");
    o.check(fv < 1e-10 && mod < 1e-10, "U proportional to TT");
    o.check(dr < 1e-10, "double row");
  });

  criterion(7, "Y-/T-system residuals", [](Outcome& o) {
    double ts = 0, ys = 0, gl = 0, bl = 0;
    for (const auto& p : {derive_params(3.0, 0.4), derive_params(2.5, 1.5), derive_params(2.5, 2.15)}) {
      const QtmData q(p.gamma, p.x, 0.05);
      for (double re : {-0.5, -0.1, 0.3, 0.6})
        for (double im : {-0.2, 0.15}) {
          const cplx u(re, im);
          for (int j = 1; j <= 5; ++j)
            for (int m = 1; m <= j; ++m) ts = std::max(ts, tsystem_residual(j, m, u, q));
          if (p.gapped())
            for (int j = 1; j <= 5; ++j) ys = std::max(ys, ysystem_residual(j, u, q));
        }
    }
    for (int k : {3, 4}) {
      const auto p = derive_params(2.5, tau_pi_over(2.5, k));
      const YFamilyGapless f(*detect_root_of_unity(p.gamma.real()), p, 0.05);
      for (double re : {-0.5, -0.1, 0.3, 0.6})
        for (double im : {-0.2, 0.15})
          for (double r : f.residuals(cplx(re, im))) gl = std::max(gl, r);
    }
    for (double tau : {0.4, 1.1}) {
      const auto p = derive_params(3.0, tau);
      EtaFamilyGapped fam(p, 2);
      for (double l : {-1.2, -0.5, 0.25, 0.8, 1.4}) {
        const auto e = fam.evaluate(l);
        for (int m = 1; m <= 2; ++m) bl = std::max(bl, rel(e[m - 1], eta_gapped_qtm(m, l, p)));
      }
    }
    o.note << " T-system " << ts << " gapped Y " << ys << " gapless Y " << gl << " beta->0 " << bl;
    o.check(ts < 1e-8, "T-system");
    o.check(ys < 1e-8, "gapped Y-system");
    o.check(gl < 1e-7, "gapless truncated Y-system");
    o.check(bl < 1e-6, "beta limit");
  });

  criterion(8, "finite-volume formula", [](Outcome& o) {
    double worst = 0;
    int roots = 0;
    for (const auto& p : {derive_params(3.0, 0.4), derive_params(2.5, tau_pi_over(2.5, 3))}) {
      for (const auto& s : exact::one_magnon_sector(p, 8)) {
        ++roots;
        FiniteVolumeInput odd{{s.p}, 8, p, 1}, even{{s.p}, 8, p, 0};
        worst = std::max(worst, std::abs(finite_volume_sz(odd) - s.sz_site0));
        worst = std::max(worst, std::abs(finite_volume_sz(even) - s.sz_site1));
      }
    }
    o.note << " roots " << roots << " max deviation " << worst;
    o.check(roots >= 14, "sector roots");
    o.check(worst < 1e-8, "finite volume");
  });

  criterion(9, "sum rules", [](Outcome& o) {
    const auto pg = derive_params(3.0, 0.4);
    const double sg = solve_gapped(pg, 20, 512).sum_rule();
    const auto pl = derive_params(2.5, tau_pi_over(2.5, 3));
    const double sl = solve_gapless(pl, 1024, 20.0).sum_rule();
    std::vector<double> nm, cut, grid;
    for (int n : {2, 4, 8, 16}) nm.push_back(solve_gapped(pg, n, 512).sum_rule());
    for (double c : {2.0, 4.0, 6.0, 8.0}) cut.push_back(solve_gapless(pl, 1024, c).sum_rule());
    for (int N : {64, 128, 256}) grid.push_back(solve_gapless(pl, N, 20.0).sum_rule());
    o.note << " gapped " << sg << " gapless " << sl << "; n_max 2..16: " << list(nm) << "; cutoff 2..8: "
           << list(cut) << "; gapless N 64..256: " << list(grid);
    o.check(std::abs(sg) < 2e-4, "gapped sum rule");
    o.check(std::abs(sl) < 1e-3, "gapless sum rule");
    o.check(halves(nm), "n_max ladder");
    o.check(halves(cut), "cutoff ladder");
    o.check(halves(grid), "grid ladder");
  });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
