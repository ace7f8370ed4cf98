#pragma once

// Run configuration, the full domain -> mesh -> certificate -> solver
// pipeline, and report rendering (text and JSON). Reports carry every real
// as a decimal string at full working precision, so they are backend
// agnostic and machine-readable output round-trips exactly.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cfdim/constants.hpp"
#include "cfdim/ifs.hpp"
#include "cfdim/interval.hpp"
#include "cfdim/matrix.hpp"
#include "cfdim/mesh.hpp"
#include "cfdim/real.hpp"
#include "cfdim/solver.hpp"
#include "cfdim/third_party/json.hpp"

namespace cfdim {

struct usage_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    std::vector<std::string> digits;  // decimal strings, parsed at working precision
    int r = 8;
    std::string h = "0.01";
    int nu = 1;
    int nu_prime = 0;
    int precision_decimal_digits = 34;
    bool verify = true;
    std::string tol = "0";     // 0: bracket width / 100
    std::string mu_cap = "4";
    bool json_output = false;
    bool json_timings = false;
    std::string dump_matrix_path;  // empty: no dump

    std::string set_label() const {
        std::string s = "[";
        for (std::size_t i = 0; i < digits.size(); ++i) {
            if (i) s += ",";
            s += digits[i];
        }
        return s + "]";
    }
};

inline void validate(const RunConfig& cfg) {
    if (cfg.digits.size() < 2) throw usage_error("need at least two digits in --set");
    if (cfg.r < 2) throw usage_error("--degree must be >= 2");
    if (cfg.nu < 1) throw usage_error("--nu must be >= 1");
    if (cfg.nu_prime < 0 || cfg.nu_prime > cfg.nu) throw usage_error("--nu-prime must be in [0, nu]");
    if (cfg.precision_decimal_digits < 17) throw usage_error("--digits (precision) must be >= 17");
    double h = std::strtod(cfg.h.c_str(), nullptr);
    if (!(h > 0)) throw usage_error("--h must be > 0");
    double mu_cap = std::strtod(cfg.mu_cap.c_str(), nullptr);
    if (!(mu_cap >= 1)) throw usage_error("--mu-cap must be >= 1");
    double tol = std::strtod(cfg.tol.c_str(), nullptr);
    if (tol < 0) throw usage_error("--tol must be >= 0");
}

// ---------------------------------------------------------------------------
// report (all reals as decimal strings)

struct Report {
    RunConfig config;
    std::string backend;
    int backend_digits = 0;
    std::string epsilon;

    std::string a_inf, b_inf;
    std::size_t sequence_depth = 0;

    struct IntervalRow {
        std::string a, b, h;
        std::size_t cells = 0;
    };
    std::vector<IntervalRow> mesh_intervals;
    std::size_t interval_count = 0, cell_count = 0, Q = 0;
    std::string mesh_h, mesh_h_min, mesh_mu;

    struct Cert {
        std::string s, chi, psi_r, eta_r, c_nu, M0_nu, kappa1, kappa2, M, M_prime, E, G, D, H, M1,
            M2, u;
        std::string cond_8_3_lhs, cond_8_4_lhs, cond_8_4_rhs;
        bool cond_8_3 = false, cond_8_4 = false, cond_h1 = false, M_gt_M2 = false, h_le_02 = false,
             s_range = false, chi_ge_1 = false, gap_condition = false;
        bool kappa1_warning = false;
        bool verified = false;
        std::vector<std::string> reasons;
    } certificate;

    struct TraceRow {
        std::string phase, s, rho_lo, rho_hi;
        std::size_t power_iterations = 0;
    };
    std::vector<TraceRow> solver_trace;

    struct Bracket {
        std::string s_l, s_u, s_mid, H;
        std::string rho_sl_lo, rho_sl_hi, rho_su_lo, rho_su_hi;
        int digits_guaranteed = 0;
        bool verified = false;
    } bracket;

    std::string dimension_display;  // truncated to the guaranteed digits
    std::map<std::string, double> timings_sec;

    std::string error;  // nonempty when the run failed
    int exit_status = 0;
};

nlohmann::json to_json(const Report& rep);
std::string render_text(const Report& rep);

// ---------------------------------------------------------------------------
// typed pipeline driver

template <class Real>
struct TypedResult {
    Report report;
    std::optional<DimensionBracket<Real>> bracket;
    std::optional<HypothesisCertificate<Real>> certificate;
};

namespace detail {

// Truncates (never rounds) the midpoint to the guaranteed digit count.
template <class Real>
std::string truncated_display(const Real& s_mid, int digits_guaranteed) {
    int shown = std::max(1, std::min(digits_guaranteed, real_traits<Real>::digits10()));
    std::ostringstream os;
    os << std::fixed << std::setprecision(shown + 6) << s_mid;
    std::string full = os.str();
    std::size_t dot = full.find('.');
    if (dot == std::string::npos) return full;
    return full.substr(0, dot + 1 + std::size_t(shown));
}

class stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  public:
    double lap() {
        auto t1 = std::chrono::steady_clock::now();
        double sec = std::chrono::duration<double>(t1 - t0).count();
        t0 = t1;
        return sec;
    }
};

}  // namespace detail

template <class Real>
TypedResult<Real> run_typed(const RunConfig& cfg) {
    validate(cfg);
    TypedResult<Real> out;
    Report& rep = out.report;
    rep.config = cfg;
    rep.backend = real_traits<Real>::backend_name();
    rep.backend_digits = real_traits<Real>::digits10();
    rep.epsilon = to_decimal_string(real_eps<Real>());

    detail::stopwatch watch;

    std::vector<Real> digit_values;
    digit_values.reserve(cfg.digits.size());
    for (const auto& d : cfg.digits) digit_values.push_back(parse_real<Real>(d));
    std::sort(digit_values.begin(), digit_values.end());
    GaussIFS<Real> ifs(digit_values);
    InvariantInterval<Real> inv =
        invariant_interval(ifs, std::max<std::size_t>(200, std::size_t(cfg.nu) + 2));
    rep.a_inf = to_decimal_string(inv.a_inf);
    rep.b_inf = to_decimal_string(inv.b_inf);
    rep.sequence_depth = inv.depth();
    rep.timings_sec["domain"] = watch.lap();

    const Real h_target = parse_real<Real>(cfg.h);
    const Real mu_cap = parse_real<Real>(cfg.mu_cap);
    auto subs = build_subintervals(ifs, std::size_t(cfg.nu_prime), inv, cfg.r, mu_cap, h_target);
    Mesh<Real> mesh = build_mesh(subs, cfg.r, h_target);
    for (const auto& iv : mesh.intervals)
        rep.mesh_intervals.push_back(
            {to_decimal_string(iv.a), to_decimal_string(iv.b), to_decimal_string(iv.h), iv.cells});
    rep.interval_count = mesh.intervals.size();
    rep.cell_count = mesh.total_cells();
    rep.Q = mesh.Q;
    rep.mesh_h = to_decimal_string(mesh.h);
    rep.mesh_h_min = to_decimal_string(mesh.h_min);
    rep.mesh_mu = to_decimal_string(mesh.mu);
    rep.timings_sec["mesh"] = watch.lap();

    WordTable<Real> words(ifs, std::size_t(cfg.nu));
    rep.timings_sec["words"] = watch.lap();

    Pipeline<Real> pipe(ifs, inv, mesh, words);
    SolverOptions<Real> opts;
    opts.tol = parse_real<Real>(cfg.tol);
    opts.force_heuristic = !cfg.verify;
    RootResult<Real> root = rho_root(pipe, opts);
    rep.timings_sec["root"] = watch.lap();

    DimensionBracket<Real> bracket = certify_bracket(pipe, root, opts);
    rep.timings_sec["bracket"] = watch.lap();

    HypothesisCertificate<Real> cert = pipe.certificate(bracket.s_mid, opts.cert);
    out.bracket = bracket;
    out.certificate = cert;

    auto& rc = rep.certificate;
    rc.s = to_decimal_string(cert.s);
    rc.chi = to_decimal_string(cert.chi);
    rc.psi_r = to_decimal_string(cert.psi_r);
    rc.eta_r = to_decimal_string(cert.eta_r);
    rc.c_nu = to_decimal_string(cert.c_nu);
    rc.M0_nu = to_decimal_string(cert.M0_nu);
    rc.kappa1 = to_decimal_string(cert.kappa1);
    rc.kappa2 = to_decimal_string(cert.kappa2);
    rc.M = to_decimal_string(cert.M);
    rc.M_prime = to_decimal_string(cert.M_prime);
    rc.E = to_decimal_string(cert.E);
    rc.G = to_decimal_string(cert.G);
    rc.D = to_decimal_string(cert.D);
    rc.H = to_decimal_string(cert.H);
    rc.M1 = to_decimal_string(cert.M1);
    rc.M2 = to_decimal_string(cert.M2);
    rc.u = to_decimal_string(cert.u);
    {
        using std::exp;
        Real eu = exp(cert.u);
        Real lhs83 = cert.psi_r * cert.u * eu;
        rc.cond_8_3_lhs = to_decimal_string(lhs83);
        if (lhs83 < 1 && cert.M > 0) {
            rc.cond_8_4_lhs = to_decimal_string(Real(cert.kappa1 * eu / (1 - lhs83)));
            rc.cond_8_4_rhs = to_decimal_string(Real(cert.kappa2 - cert.s * cert.M0_nu / cert.M));
        }
    }
    rc.cond_8_3 = cert.checks.cond_8_3;
    rc.cond_8_4 = cert.checks.cond_8_4;
    rc.cond_h1 = cert.checks.cond_h1;
    rc.M_gt_M2 = cert.checks.M_gt_M2;
    rc.h_le_02 = cert.checks.h_le_02;
    rc.s_range = cert.checks.s_range;
    rc.chi_ge_1 = cert.checks.chi_ge_1;
    rc.gap_condition = cert.checks.gap_condition;
    rc.kappa1_warning = cert.kappa1_warn;
    rc.verified = cert.verified;
    rc.reasons = cert.reasons;

    for (const auto& t : pipe.trace)
        rep.solver_trace.push_back({t.phase, to_decimal_string(t.s), to_decimal_string(t.rho_lo),
                                    to_decimal_string(t.rho_hi), t.power_iterations});

    auto& rb = rep.bracket;
    rb.s_l = to_decimal_string(bracket.s_l);
    rb.s_u = to_decimal_string(bracket.s_u);
    rb.s_mid = to_decimal_string(bracket.s_mid);
    rb.H = to_decimal_string(bracket.H);
    rb.rho_sl_lo = to_decimal_string(bracket.rho_at_sl.lo);
    rb.rho_sl_hi = to_decimal_string(bracket.rho_at_sl.hi);
    rb.rho_su_lo = to_decimal_string(bracket.rho_at_su.lo);
    rb.rho_su_hi = to_decimal_string(bracket.rho_at_su.hi);
    rb.digits_guaranteed = bracket.digits_guaranteed;
    rb.verified = bracket.verified;
    rep.dimension_display = detail::truncated_display(bracket.s_mid, bracket.digits_guaranteed);
    rep.exit_status = bracket.verified ? 0 : 2;

    if (!cfg.dump_matrix_path.empty()) {
        auto mat = assemble(ifs, mesh, words, bracket.s_mid);
        std::ofstream os(cfg.dump_matrix_path);
        if (!os) throw std::runtime_error("cannot open matrix dump path " + cfg.dump_matrix_path);
        dump_matrix(mat, os);
    }
    rep.timings_sec["report"] = watch.lap();
    return out;
}

// Backend dispatch on the requested precision: binary128 covers up to 34
// digits, anything above runs on MPFR at exactly the requested precision.
Report run(const RunConfig& cfg);

struct BatchReport {
    std::vector<Report> rows;
    std::string table_text;
    nlohmann::json sidecar;
    int exit_status = 0;
};

BatchReport batch_table(const std::vector<RunConfig>& rows, bool parallel_rows_opt = false);

// ---------------------------------------------------------------------------
// implementations (header-only library)

inline nlohmann::json to_json(const Report& rep) {
    nlohmann::json j;
    j["config"] = {{"set", rep.config.digits},
                   {"degree", rep.config.r},
                   {"h", rep.config.h},
                   {"nu", rep.config.nu},
                   {"nu_prime", rep.config.nu_prime},
                   {"precision_decimal_digits", rep.config.precision_decimal_digits},
                   {"verify", rep.config.verify},
                   {"tol", rep.config.tol},
                   {"mu_cap", rep.config.mu_cap}};
    j["backend"] = {{"name", rep.backend},
                    {"decimal_digits", rep.backend_digits},
                    {"epsilon", rep.epsilon}};
    if (!rep.error.empty()) {
        j["error"] = rep.error;
        j["exit_status"] = rep.exit_status;
        return j;
    }
    j["domain"] = {{"a_inf", rep.a_inf}, {"b_inf", rep.b_inf}, {"sequence_depth", rep.sequence_depth}};
    nlohmann::json intervals = nlohmann::json::array();
    for (const auto& iv : rep.mesh_intervals)
        intervals.push_back({{"a", iv.a}, {"b", iv.b}, {"h", iv.h}, {"cells", iv.cells}});
    j["mesh"] = {{"intervals", intervals}, {"interval_count", rep.interval_count},
                 {"cell_count", rep.cell_count}, {"Q", rep.Q},
                 {"h", rep.mesh_h},           {"h_min", rep.mesh_h_min},
                 {"mu", rep.mesh_mu}};
    const auto& c = rep.certificate;
    j["certificate"] = {{"s", c.s},
                        {"chi", c.chi},
                        {"psi_r", c.psi_r},
                        {"eta_r", c.eta_r},
                        {"c_nu", c.c_nu},
                        {"M0_nu", c.M0_nu},
                        {"kappa1", c.kappa1},
                        {"kappa2", c.kappa2},
                        {"M", c.M},
                        {"M_prime", c.M_prime},
                        {"E", c.E},
                        {"G", c.G},
                        {"D", c.D},
                        {"H", c.H},
                        {"M1", c.M1},
                        {"M2", c.M2},
                        {"u", c.u},
                        {"cond_8_3_lhs", c.cond_8_3_lhs},
                        {"cond_8_4_lhs", c.cond_8_4_lhs},
                        {"cond_8_4_rhs", c.cond_8_4_rhs},
                        {"checks",
                         {{"cond_8_3", c.cond_8_3},
                          {"cond_8_4", c.cond_8_4},
                          {"cond_h1", c.cond_h1},
                          {"M_gt_M2", c.M_gt_M2},
                          {"h_le_02", c.h_le_02},
                          {"s_range", c.s_range},
                          {"chi_ge_1", c.chi_ge_1},
                          {"gap_condition", c.gap_condition}}},
                        {"kappa1_warning", c.kappa1_warning},
                        {"verified", c.verified},
                        {"reasons", c.reasons}};
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& t : rep.solver_trace)
        trace.push_back({{"phase", t.phase},
                         {"s", t.s},
                         {"rho_lo", t.rho_lo},
                         {"rho_hi", t.rho_hi},
                         {"power_iterations", t.power_iterations}});
    j["solver_trace"] = trace;
    const auto& b = rep.bracket;
    j["bracket"] = {{"s_l", b.s_l},
                    {"s_u", b.s_u},
                    {"s_mid", b.s_mid},
                    {"H", b.H},
                    {"rho_at_sl", {{"lo", b.rho_sl_lo}, {"hi", b.rho_sl_hi}}},
                    {"rho_at_su", {{"lo", b.rho_su_lo}, {"hi", b.rho_su_hi}}},
                    {"digits_guaranteed", b.digits_guaranteed},
                    {"verified", b.verified}};
    j["result"] = {{"dimension", rep.dimension_display},
                   {"digits_guaranteed", b.digits_guaranteed},
                   {"verified", b.verified}};
    j["exit_status"] = rep.exit_status;
    if (rep.config.json_timings) {
        nlohmann::json t;
        for (const auto& [k, v] : rep.timings_sec) t[k] = v;
        j["timings_sec"] = t;
    }
    return j;
}

inline std::string render_text(const Report& rep) {
    std::ostringstream os;
    os << "cfdim run: set " << rep.config.set_label() << "  r=" << rep.config.r
       << "  h=" << rep.config.h << "  nu=" << rep.config.nu << "  nu'=" << rep.config.nu_prime
       << "\n";
    os << "precision: " << rep.backend << " (" << rep.backend_digits << " decimal digits)\n";
    if (!rep.error.empty()) {
        os << "error: " << rep.error << "\n";
        return os.str();
    }
    os << "\n[domain]\n";
    os << "  a_inf = " << rep.a_inf << "\n  b_inf = " << rep.b_inf << "\n";
    os << "\n[mesh]\n";
    os << "  intervals I = " << rep.interval_count << ", cells N = " << rep.cell_count
       << ", dof Q = " << rep.Q << "\n";
    os << "  h = " << rep.mesh_h << ", h_min = " << rep.mesh_h_min << ", mu = " << rep.mesh_mu
       << "\n";
    const auto& c = rep.certificate;
    os << "\n[certificate at s_mid]\n";
    os << "  chi = " << c.chi << "\n  psi(r) = " << c.psi_r << ", eta(r) = " << c.eta_r << "\n";
    os << "  c(nu) = " << c.c_nu << ", M0(nu) = " << c.M0_nu << "\n";
    os << "  kappa1 = " << c.kappa1 << (c.kappa1_warning ? "  (warning: above 4/5)" : "")
       << ", kappa2 = " << c.kappa2 << "\n";
    os << "  M = " << c.M << ", M' = " << c.M_prime << ", u = " << c.u << "\n";
    os << "  E = " << c.E << ", G = " << c.G << ", D = " << c.D << ", H = " << c.H << "\n";
    os << "  M1 = " << c.M1 << ", M2 = " << c.M2 << "\n";
    auto yn = [](bool v) { return v ? "pass" : "FAIL"; };
    os << "  conditions: (8.3) " << yn(c.cond_8_3) << " [" << c.cond_8_3_lhs << " < 1], (8.4) "
       << yn(c.cond_8_4) << " [" << c.cond_8_4_lhs << " < " << c.cond_8_4_rhs << "]\n";
    os << "              h-cond " << yn(c.cond_h1) << ", M>M2 " << yn(c.M_gt_M2) << ", h<=0.2 "
       << yn(c.h_le_02) << ", s-range " << yn(c.s_range) << ", chi>=1 " << yn(c.chi_ge_1)
       << ", gaps " << yn(c.gap_condition) << "\n";
    os << "  certificate verified: " << (c.verified ? "yes" : "NO") << "\n";
    for (const auto& r : c.reasons) os << "    reason: " << r << "\n";
    const auto& b = rep.bracket;
    os << "\n[bracket]\n";
    os << "  s_l   = " << b.s_l << "\n  s_mid = " << b.s_mid << "\n  s_u   = " << b.s_u << "\n";
    os << "  rho at s_l in [" << b.rho_sl_lo << ", " << b.rho_sl_hi << "]\n";
    os << "  rho at s_u in [" << b.rho_su_lo << ", " << b.rho_su_hi << "]\n";
    os << "  guaranteed digits: " << b.digits_guaranteed << "\n";
    os << "\n[result]\n";
    if (!b.verified)
        os << "  *** UNVERIFIED (heuristic) result: the cone-mapping hypotheses were not "
              "established ***\n";
    os << "  dimension = " << rep.dimension_display << (b.verified ? "" : "  (unverified)")
       << "\n";
    os << "  rho evaluations: " << rep.solver_trace.size() << "\n";
    os << "\n[timings]\n";
    for (const auto& [k, v] : rep.timings_sec) os << "  " << k << ": " << v << " s\n";
    return os.str();
}

inline Report run(const RunConfig& cfg) {
    validate(cfg);
    if (cfg.precision_decimal_digits <= 34) {
        return run_typed<float128>(cfg).report;
    }
    set_mpfr_working_digits(unsigned(cfg.precision_decimal_digits));
    return run_typed<mpfloat>(cfg).report;
}

inline BatchReport batch_table(const std::vector<RunConfig>& rows, bool parallel_rows_opt) {
    if (rows.empty()) throw usage_error("batch: empty row list");
    BatchReport batch;
    batch.rows.resize(rows.size());

    auto run_row = [&](std::size_t i) {
        try {
            batch.rows[i] = run(rows[i]);
        } catch (const usage_error& e) {
            batch.rows[i].config = rows[i];
            batch.rows[i].error = e.what();
            batch.rows[i].exit_status = 64;
        } catch (const std::exception& e) {
            batch.rows[i].config = rows[i];
            batch.rows[i].error = e.what();
            batch.rows[i].exit_status = 1;
        }
    };

    bool same_precision = true;
    for (const auto& r : rows)
        if (r.precision_decimal_digits != rows[0].precision_decimal_digits) same_precision = false;

    if (parallel_rows_opt && same_precision && rows.size() > 1) {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        unsigned workers = std::min<unsigned>(thread_count(), unsigned(rows.size()));
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= rows.size()) return;
                    run_row(i);
                }
            });
        for (auto& t : pool) t.join();
    } else {
        for (std::size_t i = 0; i < rows.size(); ++i) run_row(i);
    }

    std::ostringstream table;
    table << "set            r    h          nu   s (guaranteed digits)                verified\n";
    table << "-------------------------------------------------------------------------------\n";
    batch.exit_status = 0;
    nlohmann::json side = nlohmann::json::array();
    for (const auto& rep : batch.rows) {
        side.push_back(to_json(rep));
        std::ostringstream row;
        row << rep.config.set_label();
        std::string set = row.str();
        if (set.size() < 15) set.resize(15, ' ');
        table << set << rep.config.r << "    " << rep.config.h << "     " << rep.config.nu
              << "    ";
        if (!rep.error.empty()) {
            table << "ERROR: " << rep.error << "\n";
            batch.exit_status = 1;
        } else {
            std::string dim = rep.dimension_display;
            if (dim.size() < 37) dim.resize(37, ' ');
            table << dim << (rep.bracket.verified ? "yes" : "no (heuristic)") << "\n";
            if (!rep.bracket.verified && batch.exit_status == 0) batch.exit_status = 2;
        }
    }
    batch.table_text = table.str();
    batch.sidecar = side;
    return batch;
}

}  // namespace cfdim
