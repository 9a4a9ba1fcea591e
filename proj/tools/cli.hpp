#ifndef TDGGE_TOOLS_CLI_HPP
#define TDGGE_TOOLS_CLI_HPP

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdgge/tdgge.hpp"

namespace tdgge::cli {

using json = nlohmann::ordered_json;

inline constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

// ---- formatting

inline std::string fmt15(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

// doubles go through %.15g so json and csv carry the same digits
inline json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::strtod(fmt15(v).c_str(), nullptr);
}

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> comments;  // csv only, emitted as "# ..." lines
  json meta = json::object();         // json fields, csv comment lines
};

inline std::string csv_cell(const Cell& c) {
  if (auto d = std::get_if<double>(&c)) return fmt15(*d);
  if (auto i = std::get_if<long long>(&c)) return std::to_string(*i);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

inline json json_cell(const Cell& c) {
  if (auto d = std::get_if<double>(&c)) return num(*d);
  if (auto i = std::get_if<long long>(&c)) return *i;
  return std::get<std::string>(c);
}

inline void write_table(std::ostream& os, const Table& t, const std::string& format) {
  if (format == "json") {
    json j = t.meta;
    j["columns"] = t.columns;
    json rows = json::array();
    for (const auto& r : t.rows) {
      json row = json::array();
      for (const auto& c : r) row.push_back(json_cell(c));
      rows.push_back(row);
    }
    j["rows"] = rows;
    os << j.dump(2) << "\n";
    return;
  }
  for (const auto& c : t.comments) os << "# " << c << "\n";
  for (auto it = t.meta.begin(); it != t.meta.end(); ++it)
    os << "# " << it.key() << " " << (it.value().is_string() ? it.value().get<std::string>() : it.value().dump()) << "\n";
  for (size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& r : t.rows) {
    for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_cell(r[i]);
    os << "\n";
  }
}

// csv form of a record: key,value rows, nested values as compact json
inline void write_record(std::ostream& os, const json& rec, const std::string& format) {
  if (format == "json") {
    os << rec.dump(2) << "\n";
    return;
  }
  os << "key,value\n";
  for (auto it = rec.begin(); it != rec.end(); ++it) {
    std::string v;
    if (it.value().is_number_float())
      v = fmt15(it.value().get<double>());
    else if (it.value().is_null())
      v = "nan";
    else if (it.value().is_string())
      v = it.value().get<std::string>();
    else
      v = it.value().dump();
    os << it.key() << "," << csv_cell(v) << "\n";
  }
}

// ---- helpers

inline json cplx_json(cplx z) { return json{{"re", num(z.real())}, {"im", num(z.imag())}}; }

inline std::vector<double> parse_points(const std::string& s) {
  std::vector<double> out;
  auto bad = [&] { return Error(ErrorCode::InvalidArgument, "cli", "bad --points value '" + s + "'"); };
  if (s.find(':') != std::string::npos) {
    double lo, hi;
    int n;
    char c1, c2;
    std::istringstream is(s);
    if (!(is >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1) throw bad();
    for (int i = 0; i < n; ++i) out.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    return out;
  }
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    try {
      size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size() && tok.find_first_not_of(" \t", pos) != std::string::npos) throw bad();
    } catch (const std::logic_error&) {
      throw bad();
    }
  }
  if (out.empty()) throw bad();
  return out;
}

// independent jobs 0..n-1 over a pool of std::threads; first exception is rethrown
inline void parallel_for(int n, int threads, const std::function<void(int)>& job) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex m;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(m);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// first tau in (lo, hi) where Re gamma crosses the target, by scan then bisection
inline double snap_tau(double delta, double gamma, double lo, double hi, int scan = 400) {
  auto f = [&](double t) -> double {
    try {
      const auto d = derive_params(delta, t);
      if (d.regime == Regime::Gapped) return nan_v;
      return d.gamma.real() - gamma;
    } catch (const Error&) {
      return nan_v;
    }
  };
  double ta = lo, fa = f(lo);
  for (int i = 1; i <= scan; ++i) {
    const double tb = lo + (hi - lo) * i / scan, fb = f(tb);
    if (std::isfinite(fa) && std::isfinite(fb) && (fa <= 0) != (fb <= 0)) return tau_for_gamma(delta, gamma, ta, tb);
    ta = tb;
    fa = fb;
  }
  throw Error(ErrorCode::NoBracket, "cli", "no tau with the requested gamma in the scanned range");
}

inline double snap_tau_above_threshold(double delta, double gamma) {
  if (!(delta > -1.0)) throw Error(ErrorCode::InvalidArgument, "cli", "--gamma-over-pi needs delta > -1");
  return snap_tau(delta, gamma, threshold_tau(delta) + 1e-9, 2 * pi - 1e-6);
}

struct SolveKnobs {
  int n_max = 20;
  int grid_n = 0;  // 0: 512 gapped, 1024 gapless
  double cutoff = 20.0;
  double tol = 1e-10;
  int max_iter = 1000;
  int max_nu = 8;
};

struct StagPoint {
  DerivedParams p;
  MagnetizationResult mag;
  double sum_rule = nan_v;
  std::optional<RootOfUnityPoint> root;
  std::string status = "ok";
  std::string method;
};

inline StagPoint stag_point(double delta, double tau, const SolveKnobs& k) {
  StagPoint r;
  r.p = derive_params(delta, tau);
  const auto& p = r.p;
  if (p.regime == Regime::Gapped) {
    GappedSolveOptions o;
    o.tol = k.tol;
    o.max_iter = k.max_iter;
    const auto st = solve_gapped(p, k.n_max, k.grid_n ? k.grid_n : 512, o);
    r.mag = stag_mag_gapped(st);
    r.sum_rule = st.sum_rule();
    r.method = "tba_gapped";
  } else if (p.regime == Regime::Gapless) {
    GaplessSolveOptions o;
    o.tol = k.tol;
    o.max_iter = k.max_iter;
    r.root = detect_root_of_unity(p.gamma.real(), k.max_nu);
    const auto st = solve_gapless(p, k.grid_n ? k.grid_n : 1024, k.cutoff, o, k.max_nu);
    r.mag = site_mag_gapless(st);
    r.sum_rule = st.sum_rule();
    r.method = "tba_gapless";
  } else if (p.regime == Regime::FreePoint) {
    const auto a = magnetization_asymptotic(make_free_point(delta, tau));
    r.mag.site0 = a.site0;
    r.mag.site1 = a.site1;
    r.mag.staggered = (a.site0 - a.site1) / 2;
    r.mag.uniform = 0.0;
    r.method = "free_fermion";
  } else {
    throw Error(ErrorCode::NotSupported, "cli", "isotropic point delta = 1 is not supported");
  }
  return r;
}

// ---- config and options

struct Global {
  int threads = 1;
  std::string output;
  std::string format;
  std::string config;
};

inline std::string env_name(const std::string& flag) {
  std::string s = "TDGGE_";
  for (char c : flag) s += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

template <class T>
CLI::Option* opt(CLI::App* app, const std::string& name, T& var, const std::string& desc) {
  return app->add_option("--" + name, var, desc)->envname(env_name(name))->capture_default_str();
}

inline json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cli", "cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "cli", std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "cli", "config must be a JSON object");
  return j;
}

// config values become option defaults, so env and flags still override them
inline void apply_config(CLI::App& app, const json& cfg) {
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    if (it.key() == "command" || it.key() == "config") continue;
    std::string v;
    if (it.value().is_string())
      v = it.value().get<std::string>();
    else if (it.value().is_number_float())
      v = fmt15(it.value().get<double>());
    else
      v = it.value().dump();
    bool found = false;
    auto set = [&](CLI::App* a) {
      if (auto* o = a->get_option_no_throw("--" + it.key())) {
        o->default_str(v);
        o->default_val(v);
        found = true;
      }
    };
    set(&app);
    for (auto* sub : app.get_subcommands({})) set(sub);
    if (!found) throw Error(ErrorCode::InvalidArgument, "cli", "unknown config key '" + it.key() + "'");
  }
}

inline int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::NoConvergence:
    case ErrorCode::LimitNotConverged:
    case ErrorCode::RootMatchFailed:
    case ErrorCode::NegativeDensity:
    case ErrorCode::SingularGaudin:
    case ErrorCode::PoleProximity:
    case ErrorCode::RecursionPole:
    case ErrorCode::DegeneracyUnresolved:
      return 2;
    default:
      return 1;
  }
}

inline void need(double v, const char* flag) {
  if (std::isnan(v)) throw Error(ErrorCode::InvalidArgument, "cli", std::string(flag) + " is required");
}

// ---- commands

inline void cmd_params(std::ostream& os, const std::string& fmt, double delta, double tau, double root_tol,
                       int max_nu) {
  const auto d = derive_params(delta, tau);
  json j;
  j["delta"] = num(delta);
  j["tau"] = num(tau);
  j["s"] = num(d.s);
  j["gamma_re"] = num(d.gamma.real());
  j["gamma_im"] = num(d.gamma.imag());
  j["x_re"] = num(d.x.real());
  j["x_im"] = num(d.x.imag());
  j["x_tm_re"] = num(d.x_tm.real());
  j["x_tm_im"] = num(d.x_tm.imag());
  j["regime"] = to_string(d.regime);
  j["tau_th"] = num(d.tau_th);
  j["shift"] = num(d.shift);
  const auto r = d.gapped() ? std::nullopt : detect_root_of_unity(d.gamma.real(), max_nu, root_tol);
  j["root_of_unity"] = r ? json{{"nu1", r->nu1}, {"nu2", r->nu2}} : json(nullptr);
  write_record(os, j, fmt);
}

inline void cmd_dgge(std::ostream& os, const std::string& fmt, double delta, double tau, const SolveKnobs& k) {
  const auto p = derive_params(delta, tau);
  Table t;
  Eigen::MatrixXd rho, rh, eta;
  Eigen::VectorXd nodes;
  double sum = 0, imag = 0;
  if (p.regime == Regime::Gapped) {
    GappedSolveOptions o;
    o.tol = k.tol;
    o.max_iter = k.max_iter;
    const auto st = solve_gapped(p, k.n_max, k.grid_n ? k.grid_n : 512, o);
    rho = st.rho;
    rh = st.rho_h;
    eta = st.eta;
    nodes = st.grid.nodes;
    sum = st.sum_rule();
    imag = st.eta_imag_residue;
    t.meta["solver"] = "tba_gapped";
  } else if (p.regime == Regime::Gapless) {
    const auto root = detect_root_of_unity(p.gamma.real(), k.max_nu);
    if (!root)
      throw Error(ErrorCode::UnsupportedRoot, "cli",
                  "gapless regime but gamma/pi = " + fmt15(p.gamma.real() / pi) +
                      " is not pi/(nu1 + 1/nu2) with nu1, nu2 <= " + std::to_string(k.max_nu) +
                      "; use --gamma-over-pi to snap tau");
    GaplessSolveOptions o;
    o.tol = k.tol;
    o.max_iter = k.max_iter;
    const auto st = solve_gapless(p, k.grid_n ? k.grid_n : 1024, k.cutoff, o, k.max_nu);
    rho = st.rho;
    rh = st.rho_h;
    eta = st.eta;
    nodes = st.grid.nodes;
    sum = st.sum_rule();
    imag = st.eta_imag_residue;
    t.meta["solver"] = "tba_gapless";
    json strings = json::array();
    for (const auto& e : st.table.entries)
      strings.push_back(json{{"n", e.n}, {"parity", e.upsilon}, {"q", num(e.q)}});
    t.meta["strings"] = strings;
    t.meta["nu1"] = root->nu1;
    t.meta["nu2"] = root->nu2;
  } else {
    throw Error(ErrorCode::NotSupported, "cli",
                std::string("no TBA solver for regime ") + to_string(p.regime) + "; use the free command on the free line");
  }
  t.meta["delta"] = num(delta);
  t.meta["tau"] = num(tau);
  t.meta["sum_rule"] = num(sum);
  t.meta["eta_imag_residue"] = num(imag);
  const int ns = static_cast<int>(rho.rows());
  t.columns.push_back("lambda");
  for (const char* pre : {"rho_", "rhoh_", "eta_"})
    for (int n = 1; n <= ns; ++n) t.columns.push_back(pre + std::to_string(n));
  for (Eigen::Index i = 0; i < nodes.size(); ++i) {
    std::vector<Cell> row{nodes[i]};
    for (const auto* M : {&rho, &rh, &eta})
      for (int n = 0; n < ns; ++n) row.push_back((*M)(n, i));
    t.rows.push_back(std::move(row));
  }
  write_table(os, t, fmt);
}

inline std::vector<double> nudged_vec(const YFamilyGapless& f, cplx u) {
  try {
    return f.residuals(u);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::PoleProximity) throw;
    return f.residuals(u + 1e-9);
  }
}

inline void cmd_ysystem(std::ostream& os, const std::string& fmt, double delta, double tau, double beta,
                        int max_nu) {
  const auto p = derive_params(delta, tau);
  const QtmData q(p.gamma, p.x, beta);
  const std::vector<cplx> us{{0.31, 0.17}, {-0.23, 0.41}, {0.52, -0.13}};
  json j;
  j["delta"] = num(delta);
  j["tau"] = num(tau);
  j["beta"] = num(beta);
  j["regime"] = to_string(p.regime);
  double ts = 0;
  for (const auto& u : us)
    for (int jj = 1; jj <= 4; ++jj)
      for (int m = 1; m <= jj; ++m) ts = std::max(ts, nudged([&](cplx v) { return cplx(tsystem_residual(jj, m, v, q)); }, u).real());
  j["tsystem_max"] = num(ts);
  if (p.gapped()) {
    double ys = 0;
    for (const auto& u : us)
      for (int jj = 1; jj <= 4; ++jj) ys = std::max(ys, nudged([&](cplx v) { return cplx(ysystem_residual(jj, v, q)); }, u).real());
    j["ysystem_max"] = num(ys);
    if (!p.gapped_shifted()) {
      EtaFamilyGapped fam(p, 2);
      double em = 0, am = 0;
      DerivedParams pm = p;
      pm.x = -p.x;
      for (double l : {0.13, 0.57, 1.21}) {
        const auto ex = fam.evaluate(cplx(l, 0.0));
        for (int m = 1; m <= 2; ++m) em = std::max(em, rel(ex[m - 1], eta_gapped_qtm(m, l, p)));
        am = std::max(am, rel(afrak(cplx(l, 0.0), pm), afrak_qtm_limit(l, p)));
      }
      j["eta_limit_max"] = num(em);
      j["afrak_limit_max"] = num(am);
    }
  } else if (const auto r = detect_root_of_unity(p.gamma.real(), max_nu)) {
    const YFamilyGapless f(*r, p, beta);
    std::vector<double> worst;
    for (const auto& u : us) {
      const auto res = nudged_vec(f, u);
      if (worst.empty()) worst.assign(res.size(), 0.0);
      for (size_t i = 0; i < res.size(); ++i) worst[i] = std::max(worst[i], res[i]);
    }
    json a = json::array();
    for (double w : worst) a.push_back(num(w));
    j["nu1"] = r->nu1;
    j["nu2"] = r->nu2;
    j["truncated"] = a;
    j["truncated_max"] = num(*std::max_element(worst.begin(), worst.end()));
  }
  write_record(os, j, fmt);
}

inline json mag_json(const StagPoint& r, double delta, double tau) {
  json j;
  j["delta"] = num(delta);
  j["tau"] = num(tau);
  j["regime"] = to_string(r.p.regime);
  j["gamma"] = cplx_json(r.p.gamma);
  j["method"] = r.method;
  j["staggered"] = num(r.mag.staggered);
  j["abs"] = num(std::abs(r.mag.staggered));
  j["uniform"] = num(r.mag.uniform);
  j["site0"] = num(r.mag.site0);
  j["site1"] = num(r.mag.site1);
  j["sum_rule"] = num(r.sum_rule);
  json ps = json::array();
  for (double v : r.mag.per_string) ps.push_back(num(v));
  j["per_string"] = ps;
  return j;
}

inline Table sweep_table(double delta, const std::vector<double>& taus, const SolveKnobs& k, int threads) {
  std::vector<StagPoint> res(taus.size());
  parallel_for(static_cast<int>(taus.size()), threads, [&](int i) {
    try {
      res[i] = stag_point(delta, taus[i], k);
    } catch (const Error& e) {
      res[i].status = to_string(e.code());
      res[i].mag.staggered = nan_v;
      try {
        res[i].p = derive_params(delta, taus[i]);
      } catch (const Error&) {
        res[i].p.gamma = cplx(nan_v, nan_v);
        res[i].p.regime = Regime::Degenerate;
      }
    }
  });
  Table t;
  t.columns = {"tau", "gamma_re", "gamma_im", "regime", "staggered", "abs", "status"};
  for (size_t i = 0; i < taus.size(); ++i) {
    const auto& r = res[i];
    t.rows.push_back({taus[i], r.p.gamma.real(), r.p.gamma.imag(), std::string(to_string(r.p.regime)),
                      r.mag.staggered, std::abs(r.mag.staggered), r.status});
  }
  t.meta["delta"] = num(delta);
  return t;
}

struct EdKnobs {
  int L = 8;
  std::string mode = "dgge";
  int steps = 1000;
  int window_begin = 200;
  int window_end = -1;
};

inline void cmd_ed(std::ostream& os, const std::string& fmt, double delta, double tau, const EdKnobs& k) {
  using namespace tdgge::exact;
  const auto p = derive_params(ModelParams{delta, tau, k.L});
  const int L = k.L;
  if (k.mode == "dgge") {
    const auto r = diagonal_ensemble_sz(p, L);
    json j;
    j["L"] = L;
    j["delta"] = num(delta);
    j["tau"] = num(tau);
    j["site0"] = num(r.site0);
    j["site1"] = num(r.site1);
    j["staggered"] = num(r.staggered);
    j["probability"] = num(r.probability);
    j["dim"] = r.dim;
    j["blocks"] = r.blocks;
    j["degenerate_blocks"] = r.degenerate_blocks;
    j["unitarity"] = num(r.unitarity);
    write_record(os, j, fmt.empty() ? "json" : fmt);
  } else if (k.mode == "evolve") {
    const int we = k.window_end < 0 ? k.steps : k.window_end;
    const auto r = evolve_and_average(p, L, k.steps, k.window_begin, we);
    Table t;
    t.columns = {"t", "site0", "site1", "running_site0"};
    double acc = 0;
    for (int s = 0; s <= k.steps; ++s) {
      double a = 0, b = 0;
      for (int i = 0; i < L; i += 2) a += r.sz(s, i);
      for (int i = 1; i < L; i += 2) b += r.sz(s, i);
      a /= L / 2;
      b /= L / 2;
      acc += a;
      t.rows.push_back({static_cast<long long>(s), a, b, acc / (s + 1)});
    }
    t.meta["L"] = L;
    t.meta["window_begin"] = r.window_begin;
    t.meta["window_end"] = r.window_end;
    t.meta["tail_site0"] = num(r.tail_site0);
    t.meta["tail_site1"] = num(r.tail_site1);
    t.meta["max_antisymmetry"] = num(r.max_antisymmetry);
    t.comments.push_back("tail_site0 " + fmt15(r.tail_site0) + " over steps " + std::to_string(r.window_begin) +
                         ".." + std::to_string(r.window_end));
    write_table(os, t, fmt.empty() ? "csv" : fmt);
  } else if (k.mode == "charges") {
    const Eigen::MatrixXcd U = build_floquet(p, L).M;
    const Eigen::MatrixXcd Qp = build_charge_q1(p, L, 1).M, Qm = build_charge_q1(p, L, -1).M;
    const Eigen::MatrixXcd T = translation(L).M;
    json j;
    j["L"] = L;
    j["commutator_plus"] = num(max_abs(Qp * U - U * Qp));
    j["commutator_minus"] = num(max_abs(Qm * U - U * Qm));
    j["hermiticity_plus"] = num(max_abs(Qp - Qp.adjoint()));
    j["hermiticity_minus"] = num(max_abs(Qm - Qm.adjoint()));
    j["translation_transposed"] = num(max_abs(T * Qp * T.adjoint() - Qm.transpose()));
    write_record(os, j, fmt.empty() ? "json" : fmt);
  } else if (k.mode == "transfer") {
    const Eigen::MatrixXcd T1 = build_transfer_matrix(cplx(0.31, 0.07), p, L).M;
    const Eigen::MatrixXcd T2 = build_transfer_matrix(cplx(-0.22, 0.13), p, L).M;
    const auto pc = floquet_vs_transfer(p, L);
    const Eigen::MatrixXcd D = double_row(0.0, p, L).M;
    json j;
    j["L"] = L;
    j["transfer_commutator"] = num(max_abs(T1 * T2 - T2 * T1));
    j["scalar"] = cplx_json(pc.scalar);
    j["scalar_abs"] = num(std::abs(pc.scalar));
    j["proportionality_deviation"] = num(pc.deviation);
    j["double_row_identity"] = num(max_abs(D - Eigen::MatrixXcd::Identity(D.rows(), D.cols())));
    write_record(os, j, fmt.empty() ? "json" : fmt);
  } else if (k.mode == "one-magnon") {
    const auto states = one_magnon_sector(p, L);
    Table t;
    t.columns = {"q", "p_re", "p_im", "eigenphase", "pairing_residual", "bethe_residual",
                 "sz_odd", "sz_even", "fv_odd", "fv_even"};
    for (const auto& s : states) {
      FiniteVolumeInput in{{s.p}, L, p, 1};
      const double fo = finite_volume_sz(in);
      in.m = 0;
      const double fe = finite_volume_sz(in);
      t.rows.push_back({static_cast<long long>(s.q), s.p.real(), s.p.imag(), s.eigenphase, s.pairing_residual,
                        s.bethe_residual, s.sz_site0, s.sz_site1, fo, fe});
    }
    t.meta["L"] = L;
    write_table(os, t, fmt.empty() ? "csv" : fmt);
  } else {
    throw Error(ErrorCode::InvalidArgument, "cli", "unknown ed mode " + k.mode);
  }
}

struct FreeKnobs {
  std::string mode = "asymptotic";
  int L = 2000;
  int steps = 10000;
  int window_begin = 1000;
  double line_tol = 1e-6;
};

inline void cmd_free(std::ostream& os, const std::string& fmt, double delta, double tau, const FreeKnobs& k) {
  const auto s = make_free_point(delta, tau, k.line_tol);
  if (k.mode == "asymptotic") {
    const auto a = magnetization_asymptotic(s);
    json j;
    j["delta"] = num(delta);
    j["tau"] = num(tau);
    j["n"] = s.n;
    j["site0"] = num(a.site0);
    j["site1"] = num(a.site1);
    j["magnitude"] = num(std::abs(a.site0));
    j["quadrature"] = num(magnetization_asymptotic_quadrature(s));
    write_record(os, j, fmt.empty() ? "json" : fmt);
  } else if (k.mode == "evolve") {
    if (k.window_begin < 0 || k.window_begin > k.steps)
      throw Error(ErrorCode::InvalidArgument, "cli", "--window-begin outside [0, steps]");
    const auto m = magnetization_series(s, k.L, k.steps);
    Table t;
    t.columns = {"t", "site0", "site1"};
    double acc = 0;
    for (int i = 0; i <= k.steps; ++i) {
      t.rows.push_back({static_cast<long long>(i), m.site0[i], -m.site0[i]});
      if (i >= k.window_begin) acc += m.site0[i];
    }
    const double avg = acc / (k.steps - k.window_begin + 1);
    t.meta["L"] = k.L;
    t.meta["window_begin"] = k.window_begin;
    t.meta["average_site0"] = num(avg);
    t.meta["asymptotic_site0"] = num(magnetization_asymptotic(s).site0);
    t.comments.push_back("average_site0 " + fmt15(avg) + " over steps " + std::to_string(k.window_begin) + ".." +
                         std::to_string(k.steps));
    write_table(os, t, fmt.empty() ? "csv" : fmt);
  } else if (k.mode == "current") {
    const auto c = current_asymptotic(s, neel_density(s));
    json j;
    j["delta"] = num(delta);
    j["tau"] = num(tau);
    j["ghd"] = num(c.ghd);
    j["microscopic"] = num(c.microscopic);
    j["dephased"] = num(current_dephased(s));
    write_record(os, j, fmt.empty() ? "json" : fmt);
  } else {
    throw Error(ErrorCode::InvalidArgument, "cli", "unknown free mode " + k.mode);
  }
}

// ---- reproduce

struct ReproKnobs {
  std::string figure = "fig1";
  std::string output_dir = ".";
  double delta = 2.5;
  int max_L = 12;
  int steps = 1000;
  std::string deltas = "2.5,3,4";
};

inline void write_file(const std::filesystem::path& path, const Table& t) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cli", "cannot write " + path.string());
  write_table(f, t, "csv");
}

inline std::vector<std::pair<RootOfUnityPoint, double>> root_points(double delta, int max_nu1) {
  std::vector<std::pair<RootOfUnityPoint, double>> out;
  for (int n2 = 1; n2 <= 2; ++n2)
    for (int n1 = 1; n1 <= max_nu1; ++n1) {
      const RootOfUnityPoint r{n1, n2};
      try {
        out.emplace_back(r, snap_tau_above_threshold(delta, r.gamma()));
      } catch (const Error&) {
      }
    }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  return out;
}

inline std::string repro_fig1(const std::filesystem::path& dir, const ReproKnobs& k, const SolveKnobs& s,
                              int threads) {
  const double th = threshold_tau(k.delta);
  std::vector<double> taus;
  for (int i = 1; i <= 12; ++i) taus.push_back(th * i / 13.0);
  const auto roots = root_points(k.delta, 5);
  for (const auto& r : roots) taus.push_back(r.second);
  Table t = sweep_table(k.delta, taus, s, threads);
  t.columns.insert(t.columns.begin() + 4, {"nu1", "nu2"});
  for (size_t i = 0; i < t.rows.size(); ++i) {
    Cell a = std::string(""), b = std::string("");
    if (i >= 12) {
      a = static_cast<long long>(roots[i - 12].first.nu1);
      b = static_cast<long long>(roots[i - 12].first.nu2);
    }
    t.rows[i].insert(t.rows[i].begin() + 4, {a, b});
  }
  t.comments.push_back("delta " + fmt15(k.delta) + ", tau_th " + fmt15(th));
  const auto path = dir / "fig1.csv";
  write_file(path, t);
  return path.string();
}

inline std::string repro_fig2(const std::filesystem::path& dir, const ReproKnobs& k, const SolveKnobs& s,
                              int threads) {
  const double th = threshold_tau(k.delta);
  const std::vector<double> taus{0.25 * th, 0.5 * th, 0.75 * th, 0.95 * th};
  std::vector<TbaStateGapped> st(taus.size());
  parallel_for(static_cast<int>(taus.size()), threads, [&](int i) {
    GappedSolveOptions o;
    o.tol = s.tol;
    o.max_iter = s.max_iter;
    st[i] = solve_gapped(derive_params(k.delta, taus[i]), s.n_max, s.grid_n ? s.grid_n : 512, o);
  });
  Table t;
  t.columns = {"tau", "lambda", "rho_1", "rho_2"};
  for (size_t i = 0; i < taus.size(); ++i)
    for (Eigen::Index q = 0; q < st[i].grid.nodes.size(); ++q)
      t.rows.push_back({taus[i], st[i].grid.nodes[q], st[i].rho(0, q), st[i].rho(1, q)});
  t.comments.push_back("delta " + fmt15(k.delta) + ", n_max " + std::to_string(s.n_max));
  const auto path = dir / "fig2.csv";
  write_file(path, t);
  return path.string();
}

inline std::string repro_fig3(const std::filesystem::path& dir, const ReproKnobs& k, int threads) {
  const int L = std::min(k.max_L, exact::max_state_L);
  const double th = threshold_tau(k.delta);
  std::vector<double> taus{0.5 * th, 0.85 * th};
  for (int kk : {3, 4}) taus.push_back(snap_tau_above_threshold(k.delta, pi / kk));
  std::vector<exact::EvolutionResult> ev(taus.size());
  parallel_for(static_cast<int>(taus.size()), threads, [&](int i) {
    ev[i] = exact::evolve_and_average(derive_params(ModelParams{k.delta, taus[i], L}), L, k.steps, 0, k.steps);
  });
  Table t;
  t.columns = {"tau", "L", "t", "staggered", "running_average"};
  t.comments.push_back("finite-L exact state-vector evolution of the Floquet circuit stands in for iTEBD");
  t.comments.push_back("delta " + fmt15(k.delta) + ", L " + std::to_string(L) + ", staggered = mean sigma^z on odd sites");
  for (size_t i = 0; i < taus.size(); ++i) {
    double acc = 0;
    for (int s = 0; s <= k.steps; ++s) {
      double a = 0;
      for (int j = 0; j < L; j += 2) a += ev[i].sz(s, j);
      a /= L / 2;
      acc += a;
      t.rows.push_back({taus[i], static_cast<long long>(L), static_cast<long long>(s), a, acc / (s + 1)});
    }
  }
  const auto path = dir / "fig3.csv";
  write_file(path, t);
  return path.string();
}

inline std::string repro_figS4(const std::filesystem::path& dir, const ReproKnobs& k, const SolveKnobs& s,
                               int threads) {
  struct Job {
    int kk;
    double delta, tau;
    int L;
  };
  std::vector<Job> jobs;
  for (double d : parse_points(k.deltas))
    for (int kk : {3, 4, 5}) {
      double tau;
      try {
        tau = snap_tau_above_threshold(d, pi / kk);
      } catch (const Error&) {
        continue;
      }
      for (int L = 2 * kk; L <= std::min(k.max_L, 16); L += 2 * kk) jobs.push_back({kk, d, tau, L});
    }
  std::vector<double> sl(jobs.size(), nan_v), si(jobs.size(), nan_v);
  std::vector<std::string> status(jobs.size(), "ok");
  parallel_for(static_cast<int>(jobs.size()), threads, [&](int i) {
    const auto& j = jobs[i];
    try {
      const auto p = derive_params(ModelParams{j.delta, j.tau, j.L});
      sl[i] = exact::diagonal_ensemble_sz(p, j.L).staggered;
      si[i] = stag_point(j.delta, j.tau, s).mag.staggered;
    } catch (const Error& e) {
      status[i] = to_string(e.code());
    }
  });
  Table t;
  t.columns = {"gamma_over_pi", "delta", "tau", "x_im", "L", "sigma_L", "sigma_inf", "status"};
  for (size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    const auto p = derive_params(j.delta, j.tau);
    t.rows.push_back({1.0 / j.kk, j.delta, j.tau, p.x.imag(), static_cast<long long>(j.L), sl[i], si[i], status[i]});
  }
  t.comments.push_back("diagonal ensemble on the odd sublattice, L multiple of 2k at gamma = pi/k");
  const auto path = dir / "figS4.csv";
  write_file(path, t);
  return path.string();
}

// ---- entry point

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Late-time ensemble of the Trotterized XXZ circuit from the Neel state"};
  app.name("tdgge");
  app.fallthrough();
  app.require_subcommand(1);
  Global g;
  opt(&app, "threads", g.threads, "worker threads for sweeps")->check(CLI::Range(1, 256));
  opt(&app, "output", g.output, "output file (default stdout)");
  opt(&app, "format", g.format, "csv or json (default per command)")->check(CLI::IsMember({"", "csv", "json"}));
  opt(&app, "config", g.config, "JSON config with kebab-case keys");

  double delta = nan_v, tau = nan_v, gamma_over_pi = nan_v, root_tol = 1e-9, beta = 0.05;
  SolveKnobs sk;
  EdKnobs ek;
  FreeKnobs fk;
  ReproKnobs rk;
  std::string points;

  auto model = [&](CLI::App* sub) {
    opt(sub, "delta", delta, "anisotropy");
    opt(sub, "tau", tau, "Trotter step");
  };
  auto solve = [&](CLI::App* sub) {
    opt(sub, "n-max", sk.n_max, "gapped string truncation")->check(CLI::Range(1, 200));
    opt(sub, "grid-n", sk.grid_n, "grid points (0: 512 gapped, 1024 gapless)")->check(CLI::Range(0, 1 << 20));
    opt(sub, "cutoff", sk.cutoff, "gapless rapidity cutoff")->check(CLI::PositiveNumber);
    opt(sub, "tol", sk.tol, "linear solve tolerance")->check(CLI::PositiveNumber);
    opt(sub, "max-iter", sk.max_iter, "linear solve iteration cap")->check(CLI::PositiveNumber);
    opt(sub, "max-nu", sk.max_nu, "largest nu1, nu2 in root detection")->check(CLI::Range(1, 32));
  };

  auto* c_params = app.add_subcommand("params", "derived parameters and regime");
  model(c_params);
  opt(c_params, "root-tol", root_tol, "tolerance of root-of-unity detection")->check(CLI::PositiveNumber);
  opt(c_params, "max-nu", sk.max_nu, "largest nu1, nu2 in root detection")->check(CLI::Range(1, 32));

  auto* c_dgge = app.add_subcommand("dgge", "root densities and eta functions");
  model(c_dgge);
  solve(c_dgge);
  opt(c_dgge, "gamma-over-pi", gamma_over_pi, "snap tau above threshold to this gamma/pi");

  auto* c_ys = app.add_subcommand("ysystem-check", "T-system and Y-system residuals");
  model(c_ys);
  opt(c_ys, "beta", beta, "QTM regulator");
  opt(c_ys, "max-nu", sk.max_nu, "largest nu1, nu2 in root detection")->check(CLI::Range(1, 32));

  auto* c_stag = app.add_subcommand("stagmag", "late-time staggered magnetization");
  model(c_stag);
  solve(c_stag);
  opt(c_stag, "gamma-over-pi", gamma_over_pi, "snap tau above threshold to this gamma/pi");

  auto* c_sweep = app.add_subcommand("stagmag-sweep", "staggered magnetization over tau points");
  opt(c_sweep, "delta", delta, "anisotropy");
  opt(c_sweep, "points", points, "tau list a,b,c or range lo:hi:n");
  solve(c_sweep);

  auto* c_ed = app.add_subcommand("ed", "exact diagonalization oracles");
  model(c_ed);
  opt(c_ed, "L", ek.L, "chain length");
  opt(c_ed, "mode", ek.mode, "dgge, evolve, charges, transfer, one-magnon")
      ->check(CLI::IsMember({"dgge", "evolve", "charges", "transfer", "one-magnon"}));
  opt(c_ed, "steps", ek.steps, "Floquet steps (evolve)");
  opt(c_ed, "window-begin", ek.window_begin, "first averaged step (evolve)");
  opt(c_ed, "window-end", ek.window_end, "last averaged step, -1 for steps (evolve)");

  auto* c_free = app.add_subcommand("free", "free-fermion line");
  model(c_free);
  opt(c_free, "mode", fk.mode, "evolve, asymptotic, current")->check(CLI::IsMember({"evolve", "asymptotic", "current"}));
  opt(c_free, "L", fk.L, "chain length (evolve)");
  opt(c_free, "steps", fk.steps, "Floquet steps (evolve)");
  opt(c_free, "window-begin", fk.window_begin, "first averaged step (evolve)");
  opt(c_free, "line-tol", fk.line_tol, "relative tolerance on tau delta/(2 pi) being an integer")
      ->check(CLI::PositiveNumber);

  auto* c_rep = app.add_subcommand("reproduce", "figure datasets as CSV");
  opt(c_rep, "figure", rk.figure, "fig1, fig2, fig3, figS4")->check(CLI::IsMember({"fig1", "fig2", "fig3", "figS4"}));
  opt(c_rep, "output-dir", rk.output_dir, "directory for the CSV files");
  opt(c_rep, "delta", rk.delta, "anisotropy (fig1, fig2, fig3)");
  opt(c_rep, "max-L", rk.max_L, "largest ED chain (fig3, figS4)");
  opt(c_rep, "steps", rk.steps, "Floquet steps (fig3)");
  opt(c_rep, "deltas", rk.deltas, "anisotropies for figS4");
  solve(c_rep);

  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);

  try {
    // --config is read before parsing so that its values sit below env and flags
    std::string cfg_path;
    for (int i = 1; i < argc; ++i) {
      const std::string a = argv[i];
      if (a == "--config" && i + 1 < argc) cfg_path = argv[i + 1];
      if (a.rfind("--config=", 0) == 0) cfg_path = a.substr(9);
    }
    if (cfg_path.empty())
      if (const char* e = std::getenv("TDGGE_CONFIG")) cfg_path = e;
    if (!cfg_path.empty()) {
      const json cfg = load_config(cfg_path);
      apply_config(app, cfg);
      if (cfg.contains("command")) {
        bool has = false;
        for (int i = 1; i < argc; ++i)
          for (auto* sub : app.get_subcommands({}))
            if (sub->get_name() == argv[i]) has = true;
        if (!has) {
          if (!cfg["command"].is_string())
            throw Error(ErrorCode::InvalidArgument, "cli", "config 'command' must be a string");
          args.push_back(cfg["command"].get<std::string>());
        }
      }
    }
    try {
      app.parse(args);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) {
        app.exit(e, out, err);
        return 0;
      }
      app.exit(e, out, err);
      return 1;
    }

    std::ofstream file;
    if (!g.output.empty()) {
      file.open(g.output);
      if (!file) throw Error(ErrorCode::InvalidArgument, "cli", "cannot open output " + g.output);
    }
    std::ostream& os = g.output.empty() ? out : file;
    auto fmt_or = [&](const char* d) { return g.format.empty() ? std::string(d) : g.format; };

    if (c_params->parsed()) {
      need(delta, "--delta");
      need(tau, "--tau");
      cmd_params(os, fmt_or("json"), delta, tau, root_tol, sk.max_nu);
    } else if (c_dgge->parsed() || c_stag->parsed()) {
      need(delta, "--delta");
      if (!std::isnan(gamma_over_pi)) {
        if (!std::isnan(tau)) throw Error(ErrorCode::InvalidArgument, "cli", "give --tau or --gamma-over-pi, not both");
        tau = snap_tau_above_threshold(delta, pi * gamma_over_pi);
      }
      need(tau, "--tau");
      if (c_dgge->parsed())
        cmd_dgge(os, fmt_or("csv"), delta, tau, sk);
      else
        write_record(os, mag_json(stag_point(delta, tau, sk), delta, tau), fmt_or("json"));
    } else if (c_ys->parsed()) {
      need(delta, "--delta");
      need(tau, "--tau");
      cmd_ysystem(os, fmt_or("json"), delta, tau, beta, sk.max_nu);
    } else if (c_sweep->parsed()) {
      need(delta, "--delta");
      if (points.empty()) throw Error(ErrorCode::InvalidArgument, "cli", "--points is required");
      write_table(os, sweep_table(delta, parse_points(points), sk, g.threads), fmt_or("csv"));
    } else if (c_ed->parsed()) {
      need(delta, "--delta");
      need(tau, "--tau");
      cmd_ed(os, g.format, delta, tau, ek);
    } else if (c_free->parsed()) {
      need(delta, "--delta");
      need(tau, "--tau");
      cmd_free(os, g.format, delta, tau, fk);
    } else if (c_rep->parsed()) {
      const std::filesystem::path dir(rk.output_dir);
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) throw Error(ErrorCode::InvalidArgument, "cli", "cannot create " + dir.string());
      std::string path;
      if (rk.figure == "fig1") path = repro_fig1(dir, rk, sk, g.threads);
      if (rk.figure == "fig2") path = repro_fig2(dir, rk, sk, g.threads);
      if (rk.figure == "fig3") path = repro_fig3(dir, rk, g.threads);
      if (rk.figure == "figS4") path = repro_figS4(dir, rk, sk, g.threads);
      os << path << "\n";
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tdgge::cli

#endif
