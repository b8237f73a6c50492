#include "hgmf/studies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "hgmf/errors.hpp"
#include "hgmf/metrics.hpp"
#include "hgmf/particles.hpp"
#include "hgmf/vlasov.hpp"

namespace hgmf {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::logic_error&) {
        throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    }
}

long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        long d = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::logic_error&) {
        throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
    }
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        if constexpr (std::is_floating_point_v<T>)
            s += format_double(v[i]);
        else
            s += std::to_string(v[i]);
    }
    return s;
}

double balanced_f(double x) { return 4.0 * (x - 0.5) * (x - 0.5); }

std::string family_name(const std::string& spec) { return spec.substr(0, spec.find(':')); }

std::string family_arg(const std::string& spec) {
    auto c = spec.find(':');
    return c == std::string::npos ? "" : spec.substr(c + 1);
}

double parse_theta(const ExperimentConfig& cfg) {
    std::string a = family_arg(cfg.hypergraph);
    return a.empty() ? 0.1 : to_double("hypergraph", a);
}

long gcd_l(long a, long b) { return b == 0 ? a : gcd_l(b, a % b); }

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------- config

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    auto ints = [&] {
        std::vector<int> out;
        for (const auto& s : split(v, ',')) out.push_back(static_cast<int>(to_long(key, s)));
        return out;
    };
    auto doubles = [&] {
        std::vector<double> out;
        for (const auto& s : split(v, ',')) out.push_back(to_double(key, s));
        return out;
    };
    if (key == "hypergraph") c.hypergraph = v;
    else if (key == "max_rank") c.max_rank = static_cast<int>(to_long(key, v));
    else if (key == "orders") c.orders = ints();
    else if (key == "kernel") c.kernel = v;
    else if (key == "nx") c.nx = static_cast<int>(to_long(key, v));
    else if (key == "nxi") c.nxi = static_cast<int>(to_long(key, v));
    else if (key == "x_min") c.x_min = to_double(key, v);
    else if (key == "x_max") c.x_max = to_double(key, v);
    else if (key == "init_lo") c.init_lo = to_double(key, v);
    else if (key == "init_hi") c.init_hi = to_double(key, v);
    else if (key == "dt") c.dt = to_double(key, v);
    else if (key == "t_end") c.t_end = to_double(key, v);
    else if (key == "snapshots") c.snapshots = doubles();
    else if (key == "n_list") c.n_list = ints();
    else if (key == "replicas") c.replicas = static_cast<int>(to_long(key, v));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_long(key, v));
    else if (key == "alpha") c.alpha = v;
    else if (key == "p") c.p = to_double(key, v);
    else if (key == "offset") c.offset = to_double(key, v);
    else if (key == "refinement") c.refinement = static_cast<int>(to_long(key, v));
    else if (key == "cut_restarts") c.cut_restarts = static_cast<int>(to_long(key, v));
    else if (key == "cut_ref") c.cut_ref = static_cast<int>(to_long(key, v));
    else if (key == "fig_n") c.fig_n = static_cast<int>(to_long(key, v));
    else if (key == "fig_compare") c.fig_compare = ints();
    else if (key == "fig_times") c.fig_times = doubles();
    else if (key == "out") c.out = v;
    else if (key == "threads") c.threads = static_cast<int>(to_long(key, v));
    else throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", no);
        try {
            set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ParseError(e.what(), no);
        }
    }
    return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

void ExperimentConfig::check() const {
    const std::string fam = family_name(hypergraph);
    if (fam != "homogeneous" && fam != "balanced" && fam != "all-to-all" && fam != "zero" && fam != "file")
        throw ConfigError("unknown hypergraph family '" + hypergraph + "'");
    if (fam == "homogeneous") {
        double th = parse_theta(*this);
        if (!(th > 0.0 && th <= 1.0)) throw ConfigError("homogeneous theta must lie in (0, 1]");
    }
    if (max_rank < 2) throw ConfigError("max_rank must be >= 2");
    if (orders.empty()) throw ConfigError("orders must not be empty");
    for (int l : orders)
        if (l < 1 || l > max_rank - 1) throw ConfigError("order " + std::to_string(l) + " outside 1..max_rank-1");
    kernel_family(*this);
    if (nx < 2 || nxi < 1) throw ConfigError("grid sizes must be positive");
    if (!(x_max > x_min)) throw ConfigError("x_max must exceed x_min");
    if (!(init_hi > init_lo) || init_lo < x_min || init_hi > x_max)
        throw ConfigError("initial interval must lie inside [x_min, x_max]");
    if (!(dt > 0.0) || !(t_end >= 0.0)) throw ConfigError("dt must be positive and t_end non-negative");
    for (double s : snapshots)
        if (s < 0.0 || s > t_end + 1e-12) throw ConfigError("snapshot time " + format_double(s) + " outside [0, t_end]");
    for (int n : n_list)
        if (n < 1) throw ConfigError("n_list entries must be positive");
    if (replicas < 1) throw ConfigError("replicas must be >= 1");
    if (!(p >= 1.0)) throw ConfigError("p must be >= 1");
    if (refinement < 1) throw ConfigError("refinement must be >= 1");
    if (!(offset >= 0.0 && offset <= 1.0)) throw ConfigError("offset must lie in [0, 1]");
    try {
        AlphaSequence::parse(alpha);
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream o;
    o << "hypergraph=" << hypergraph << "\n"
      << "max_rank=" << max_rank << "\n"
      << "orders=" << join(orders) << "\n"
      << "kernel=" << kernel << "\n"
      << "nx=" << nx << "\n"
      << "nxi=" << nxi << "\n"
      << "x_min=" << format_double(x_min) << "\n"
      << "x_max=" << format_double(x_max) << "\n"
      << "init_lo=" << format_double(init_lo) << "\n"
      << "init_hi=" << format_double(init_hi) << "\n"
      << "dt=" << format_double(dt) << "\n"
      << "t_end=" << format_double(t_end) << "\n"
      << "snapshots=" << join(snapshots) << "\n"
      << "n_list=" << join(n_list) << "\n"
      << "replicas=" << replicas << "\n"
      << "seed=" << seed << "\n"
      << "alpha=" << alpha << "\n"
      << "p=" << format_double(p) << "\n"
      << "offset=" << format_double(offset) << "\n"
      << "refinement=" << refinement << "\n"
      << "cut_restarts=" << cut_restarts << "\n"
      << "cut_ref=" << cut_ref << "\n"
      << "fig_n=" << fig_n << "\n"
      << "fig_compare=" << join(fig_compare) << "\n"
      << "fig_times=" << join(fig_times) << "\n";
    return o.str();
}

std::uint64_t ExperimentConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : canonical()) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string ExperimentConfig::hash_hex() const {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

std::string csv_header(const ExperimentConfig& cfg) {
    std::string s = "# config " + cfg.hash_hex() + " ";
    std::string c = cfg.canonical();
    std::replace(c.begin(), c.end(), '\n', ';');
    return s + c + "\n";
}

// ---------------------------------------------------------------- families

URHypergraphon limit_hypergraphon(const ExperimentConfig& cfg) {
    const std::string fam = family_name(cfg.hypergraph);
    if (fam == "homogeneous") return homogeneous_hypergraphon(parse_theta(cfg), cfg.orders);
    if (fam == "balanced") return balanced_quadratic_hypergraphon(cfg.orders);
    if (fam == "all-to-all") return constant_hypergraphon(1.0, cfg.orders);
    if (fam == "zero") return constant_hypergraphon(0.0, cfg.orders);
    if (fam == "file") return load_step(family_arg(cfg.hypergraph));
    throw ConfigError("unknown hypergraph family '" + cfg.hypergraph + "'");
}

Hypergraph finite_hypergraph(const ExperimentConfig& cfg, int n) {
    const std::string fam = family_name(cfg.hypergraph);
    const int r = std::min(cfg.max_rank, n);
    Hypergraph h;
    if (fam == "homogeneous")
        h = build_homogeneous(n, parse_theta(cfg), r);
    else if (fam == "balanced")
        h = build_balanced(n, balanced_f, r);
    else if (fam == "all-to-all")
        h = build_all_to_all(n, r);
    else if (fam == "zero")
        h = Hypergraph(n, r);
    else if (fam == "file") {
        h = load(family_arg(cfg.hypergraph));
        if (h.num_nodes() != n) throw ConfigError("hypergraph file has " + std::to_string(h.num_nodes()) + " nodes, not " + std::to_string(n));
        return h;
    } else
        throw ConfigError("unknown hypergraph family '" + cfg.hypergraph + "'");
    return h.restricted(cfg.orders);
}

KernelFamily kernel_family(const ExperimentConfig& cfg) {
    const std::string name = family_name(cfg.kernel);
    if (name == "skardal") return skardal_kernels();
    KernelFamily k;
    for (int l : cfg.orders) {
        if (name == "linear")
            k.add(linear_mean_kernel(l, cfg.x_min, cfg.x_max));
        else if (name == "kuramoto")
            k.add(kuramoto_kernel(l));
        else if (name == "opinion")
            k.add(opinion_diam_kernel(l, to_double("kernel", family_arg(cfg.kernel)), cfg.x_min, cfg.x_max));
        else
            throw ConfigError("unknown kernel '" + cfg.kernel + "'");
    }
    return k;
}

KernelFamily kernels_for(const KernelFamily& k, const Hypergraph& h) {
    KernelFamily out;
    for (const auto& ker : k.kernels())
        if (h.has_order(ker.order)) out.add(ker);
    return out;
}

// ---------------------------------------------------------------- convergence

ConvergenceResult run_convergence_study(const ExperimentConfig& cfg) {
    cfg.check();
    const KernelFamily kernels = kernel_family(cfg);
    const URHypergraphon w = limit_hypergraphon(cfg);

    std::vector<double> times = cfg.snapshots;
    if (times.empty()) times = {0.0, cfg.t_end};
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    // Reference: Vlasov solution for the limit hypergraphon.
    SolveOptions so;
    so.snapshot_times = times;
    so.force.threads = cfg.threads;
    auto rho0 = density_uniform(cfg.nx, cfg.nxi, cfg.x_min, cfg.x_max, cfg.init_lo, cfg.init_hi);
    auto ref = solve(w, kernels, rho0, cfg.t_end, cfg.dt, so);
    std::vector<DiscreteMeasure> ref_marginal;
    for (const auto& r : ref.snapshots) ref_marginal.push_back(to_atoms(r).marginal());

    ConvergenceResult res;
    res.times = times;
    for (int n : cfg.n_list) {
        // A single agent has nothing to interact with and stays put.
        const Hypergraph h = n >= 2 ? finite_hypergraph(cfg, n) : Hypergraph();
        const KernelFamily kn = n >= 2 ? kernels_for(kernels, h) : KernelFamily();
        std::vector<std::vector<ConvergenceRow>> per(cfg.replicas);
#pragma omp parallel for schedule(dynamic, 1) num_threads(cfg.threads > 0 ? cfg.threads : 1)
        for (int rep = 0; rep < cfg.replicas; ++rep) {
            auto x0 = sample_uniform(n, 1, cfg.init_lo, cfg.init_hi, cfg.seed, static_cast<std::uint64_t>(rep));
            IntegrateOptions io;
            io.snapshot_times = times;
            io.threads = 1;
            Trajectory tr = kn.empty() ? Trajectory{} : integrate(h, kn, x0, cfg.t_end, cfg.dt, io);
            for (std::size_t s = 0; s < times.size(); ++s) {
                const ParticleState& xs = kn.empty() ? x0 : tr.snapshots[s];
                FiberedAtoms emp = empirical_fibered(xs);
                ConvergenceRow row;
                row.n = n;
                row.replica = rep;
                row.t = times[s];
                row.distance = d_p_nu(emp, ref.snapshots[s], cfg.p);
                row.marginal = d_bl(emp.marginal(), ref_marginal[s]);
                per[rep].push_back(row);
            }
        }
        ConvergenceSummary sm;
        sm.n = n;
        std::vector<double> sups;
        double msum = 0.0;
        for (const auto& rows : per) {
            double sup = 0.0, msup = 0.0;
            for (const auto& r : rows) {
                sup = std::max(sup, r.distance);
                msup = std::max(msup, r.marginal);
                res.rows.push_back(r);
            }
            sups.push_back(sup);
            msum += msup;
        }
        const double m = std::accumulate(sups.begin(), sups.end(), 0.0) / sups.size();
        double var = 0.0;
        for (double s : sups) var += (s - m) * (s - m);
        sm.mean_sup = m;
        sm.se_sup = sups.size() > 1 ? std::sqrt(var / (sups.size() - 1) / sups.size()) : 0.0;
        sm.mean_marginal_sup = msum / cfg.replicas;
        if (!kn.empty() && cfg.p <= 2.0) {
            auto c = mckean_error_constants(h, kn, cfg.p);
            sm.eps_p = c.eps_p;
            sm.c_inf = c.c_inf;
            sm.c_p = c.c_p;
        }
        res.summary.push_back(sm);
    }
    return res;
}

std::string convergence_rows_csv(const ExperimentConfig& cfg, const ConvergenceResult& r) {
    std::string s = csv_header(cfg) + "n,replica,t,d_p_nu,marginal_bl\n";
    for (const auto& row : r.rows)
        s += std::to_string(row.n) + "," + std::to_string(row.replica) + "," + format_double(row.t) + "," +
             format_double(row.distance) + "," + format_double(row.marginal) + "\n";
    return s;
}

std::string convergence_summary_csv(const ExperimentConfig& cfg, const ConvergenceResult& r) {
    std::string s = csv_header(cfg) + "n,mean_sup_d_p_nu,stderr,mean_sup_marginal_bl,eps_p,c_inf,c_p\n";
    for (const auto& m : r.summary)
        s += std::to_string(m.n) + "," + format_double(m.mean_sup) + "," + format_double(m.se_sup) + "," +
             format_double(m.mean_marginal_sup) + "," + format_double(m.eps_p) + "," + format_double(m.c_inf) + "," +
             format_double(m.c_p) + "\n";
    return s;
}

std::string convergence_svg(const ConvergenceResult& r) {
    const double W = 480, H = 320, pad = 50;
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (r.summary.empty()) {
        o << "</svg>\n";
        return o.str();
    }
    double lx0 = std::log(r.summary.front().n), lx1 = std::log(r.summary.back().n);
    if (lx1 <= lx0) lx1 = lx0 + 1;
    double ly0 = 1e300, ly1 = -1e300;
    for (const auto& m : r.summary)
        for (double v : {m.mean_sup + m.se_sup, std::max(m.mean_sup - m.se_sup, 1e-12), m.mean_marginal_sup}) {
            double lv = std::log(std::max(v, 1e-12));
            ly0 = std::min(ly0, lv);
            ly1 = std::max(ly1, lv);
        }
    if (ly1 - ly0 < 1e-9) ly1 = ly0 + 1;
    auto X = [&](double n) { return pad + (std::log(n) - lx0) / (lx1 - lx0) * (W - 2 * pad); };
    auto Y = [&](double v) { return H - pad - (std::log(std::max(v, 1e-12)) - ly0) / (ly1 - ly0) * (H - 2 * pad); };
    o << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad
      << "\" stroke=\"black\"/>\n<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad
      << "\" stroke=\"black\"/>\n";
    auto poly = [&](auto value, const char* color) {
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
        for (const auto& m : r.summary) o << X(m.n) << "," << Y(value(m)) << " ";
        o << "\"/>\n";
    };
    poly([](const ConvergenceSummary& m) { return m.mean_sup; }, "black");
    poly([](const ConvergenceSummary& m) { return m.mean_marginal_sup; }, "gray");
    for (const auto& m : r.summary) {
        o << "<line x1=\"" << X(m.n) << "\" y1=\"" << Y(m.mean_sup - m.se_sup) << "\" x2=\"" << X(m.n) << "\" y2=\""
          << Y(m.mean_sup + m.se_sup) << "\" stroke=\"black\"/>\n";
        o << "<circle cx=\"" << X(m.n) << "\" cy=\"" << Y(m.mean_sup) << "\" r=\"3\"/>\n";
        o << "<text x=\"" << X(m.n) << "\" y=\"" << H - pad + 15 << "\" font-size=\"10\" text-anchor=\"middle\">" << m.n
          << "</text>\n";
    }
    o << "<text x=\"" << W / 2 << "\" y=\"20\" font-size=\"12\" text-anchor=\"middle\">"
      << "sup_t distance vs N (black: fibered, gray: marginal), log-log</text>\n</svg>\n";
    return o.str();
}

// ---------------------------------------------------------------- cut distances

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ParameterError("slope fit needs two or more points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= x.size();
    my /= x.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double a = std::log(x[i]) - mx;
        sxy += a * (std::log(y[i]) - my);
        sxx += a * a;
    }
    return sxy / sxx;
}

CutStudyResult run_cutdist_study(const ExperimentConfig& cfg) {
    cfg.check();
    const URHypergraphon w = limit_hypergraphon(cfg);
    if (w.is_step()) throw ConfigError("the cut-distance study needs an analytic family");
    const std::string fam = family_name(cfg.hypergraph);
    const int top = *std::max_element(cfg.orders.begin(), cfg.orders.end());

    // Cut distances are taken against cell averages of the limit on a common refinement of every n.
    long ref = cfg.cut_ref;
    if (ref == 0) {
        long l = 1;
        for (int n : cfg.n_list) l = l / gcd_l(l, n) * n;
        const long cap = top >= 3 ? 0 : top == 2 ? 160 : 2000;
        ref = l <= cap ? l : 0;
    }

    CutStudyResult res;
    std::vector<std::string> schemes = {"pointwise", "l1"};
    for (const auto& scheme : schemes)
        for (int l : cfg.orders) {
            std::vector<double> ns, l1s;
            for (int n : cfg.n_list) {
                Hypergraph h;
                if (scheme == "pointwise")
                    h = (fam == "homogeneous" && cfg.offset == 0.0) ? finite_hypergraph(cfg, n)
                                                                     : discretize_pointwise(w, n, cfg.offset);
                else
                    h = discretize_l1(w, n, cfg.refinement);
                URHypergraphon wn = step_from_hypergraph(h);
                CutRow row;
                row.scheme = scheme;
                row.order = l;
                row.n = n;
                row.l1 = l1_level_distance(w, wn, l, cfg.refinement);
                row.bound = std::numeric_limits<double>::quiet_NaN();
                const AnalyticLevel* al = w.analytic_level(l);
                if (fam == "homogeneous")
                    row.bound = 2.0 * l * (l + 1) / n;
                else if (al && al->lipschitz)
                    row.bound = std::sqrt(l + 1.0) * *al->lipschitz / n;
                row.cut = std::numeric_limits<double>::quiet_NaN();
                row.cut_mode = "none";
                if (ref > 0 && ref % n == 0) {
                    DenseLevel diff = wn.step().dense_level(l).refined(static_cast<int>(ref / n)) -
                                      cell_averages(w, l, static_cast<int>(ref), cfg.refinement);
                    CutValue cv = cut_norm(diff, cfg.cut_restarts, cfg.seed);
                    row.cut = cv.value;
                    row.cut_mode = cv.mode();
                }
                res.rows.push_back(row);
                ns.push_back(n);
                l1s.push_back(row.l1);
            }
            bool positive = ns.size() >= 2 && std::all_of(l1s.begin(), l1s.end(), [](double v) { return v > 0.0; });
            res.fits.push_back({scheme, l, positive ? loglog_slope(ns, l1s) : std::numeric_limits<double>::quiet_NaN()});
        }
    return res;
}

std::string cutdist_csv(const ExperimentConfig& cfg, const CutStudyResult& r) {
    std::string s = csv_header(cfg) + "scheme,order,n,l1,bound,cut,cut_mode\n";
    for (const auto& row : r.rows)
        s += row.scheme + "," + std::to_string(row.order) + "," + std::to_string(row.n) + "," + format_double(row.l1) +
             "," + format_double(row.bound) + "," + format_double(row.cut) + "," + row.cut_mode + "\n";
    for (const auto& f : r.fits)
        s += "# slope " + f.scheme + " order " + std::to_string(f.order) + " " + format_double(f.slope) + "\n";
    return s;
}

// ---------------------------------------------------------------- figures

std::vector<int> bin_agents(const std::vector<double>& x) {
    std::vector<int> bins(100, 0);
    const int n = static_cast<int>(x.size());
    for (int i = 0; i < n; ++i) {
        int lb = std::min(9, static_cast<int>((i + 0.5) / n * 10.0));
        int sb = static_cast<int>(std::floor(x[i] * 10.0));
        sb = std::clamp(sb, 0, 9);
        ++bins[lb * 10 + sb];
    }
    return bins;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
}

std::string svg_heatmap(const std::vector<double>& v, int rows, int cols, const std::string& title,
                        const std::vector<std::pair<double, double>>& dots, double y_lo, double y_hi) {
    const double W = 360, H = 360, pad = 30;
    const double cw = (W - 2 * pad) / cols, ch = (H - 2 * pad) / rows;
    double vmax = 0.0;
    for (double a : v) vmax = std::max(vmax, a);
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double a = vmax > 0 ? v[static_cast<std::size_t>(r) * cols + c] / vmax : 0.0;
            int red = static_cast<int>(255 * (1 - a) + 20 * a), green = static_cast<int>(255 * (1 - a) + 60 * a),
                blue = static_cast<int>(255 * (1 - a) + 160 * a);
            o << "<rect x=\"" << pad + c * cw << "\" y=\"" << H - pad - (r + 1) * ch << "\" width=\"" << cw + 0.05
              << "\" height=\"" << ch + 0.05 << "\" fill=\"rgb(" << red << "," << green << "," << blue << ")\"/>\n";
        }
    for (auto [xi, y] : dots) {
        double px = pad + xi * (W - 2 * pad), py = H - pad - (y - y_lo) / (y_hi - y_lo) * (H - 2 * pad);
        o << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"1.5\" fill=\"black\"/>\n";
    }
    o << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << W - 2 * pad << "\" height=\"" << H - 2 * pad
      << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"18\" font-size=\"12\" text-anchor=\"middle\">" << title << "</text>\n</svg>\n";
    return o.str();
}

namespace {

// Density snapshot as rows = state cells, cols = fibers, cropped to [0, 1] in state.
std::vector<double> density_grid(const FiberedDensity& d, int& rows, double& lo, double& hi) {
    int c0 = 0, c1 = d.nx;
    while (c0 < d.nx && d.x_face(c0 + 1) <= 0.0 + 1e-12) ++c0;
    while (c1 > c0 && d.x_face(c1 - 1) >= 1.0 - 1e-12) --c1;
    rows = c1 - c0;
    lo = d.x_face(c0);
    hi = d.x_face(c1);
    std::vector<double> v(static_cast<std::size_t>(rows) * d.nxi);
    for (int r = 0; r < rows; ++r)
        for (int f = 0; f < d.nxi; ++f) v[static_cast<std::size_t>(r) * d.nxi + f] = d.fiber(f)[c0 + r];
    return v;
}

std::vector<std::pair<double, double>> agent_dots(const std::vector<double>& x) {
    std::vector<std::pair<double, double>> dots;
    const int n = static_cast<int>(x.size());
    for (int i = 0; i < n; ++i) dots.push_back({(i + 0.5) / n, x[i]});
    return dots;
}

std::vector<double> bins_grid(const std::vector<int>& bins) {
    // bins are [label][state]; the heatmap wants [state row][label col].
    std::vector<double> v(100);
    for (int lb = 0; lb < 10; ++lb)
        for (int sb = 0; sb < 10; ++sb) v[sb * 10 + lb] = bins[lb * 10 + sb];
    return v;
}

std::string tag(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    return buf;
}

}  // namespace

FigureReport reproduce_figures(const ExperimentConfig& cfg) {
    cfg.check();
    const std::string fam = family_name(cfg.hypergraph);
    const bool homog = fam == "homogeneous";
    const bool bal = fam == "balanced";
    const int n = cfg.fig_n > 0 ? cfg.fig_n : (bal ? 300 : 600);
    std::vector<double> times = cfg.fig_times;
    if (times.empty()) times = bal ? std::vector<double>{0.0, 0.8, 1.6, 2.4} : std::vector<double>{0.0, 4.0, 8.0, 10.0};
    std::vector<int> compare = cfg.fig_compare;
    if (compare.empty() && homog) compare = {100, 200, 400, 600};
    const double T = *std::max_element(times.begin(), times.end());

    std::filesystem::create_directories(cfg.out);
    auto path = [&](const std::string& f) { return (std::filesystem::path(cfg.out) / f).string(); };
    FigureReport rep;
    auto emit = [&](const std::string& f, const std::string& text) {
        write_text(path(f), text);
        rep.files.push_back(f);
    };

    // Hypergraph pixel plots at N = 20: order 1 adjacency and the order-2 slice through the middle agent.
    {
        ExperimentConfig hc = cfg;
        hc.orders = {1, 2};
        Hypergraph h = finite_hypergraph(hc, 20);
        StepHypergraphon s = step_from_hypergraph(h);
        for (int l : {1, 2}) {
            if (l > s.max_order()) continue;
            std::vector<double> v(400, 0.0);
            for (int a = 0; a < 20; ++a)
                for (int b = 0; b < 20; ++b) {
                    std::vector<int> idx = l == 1 ? std::vector<int>{a, b} : std::vector<int>{10, a, b};
                    v[static_cast<std::size_t>(b) * 20 + a] = h.weight(idx);
                }
            emit("hypergraph_order" + std::to_string(l) + ".svg",
                 svg_heatmap(v, 20, 20, fam + " hypergraph, N=20, order " + std::to_string(l)));
        }
    }

    const KernelFamily kernels = kernel_family(cfg);
    const URHypergraphon w = limit_hypergraphon(cfg);

    // Vlasov snapshots.
    SolveOptions so;
    so.snapshot_times = times;
    so.force.threads = cfg.threads;
    auto rho0 = density_uniform(cfg.nx, cfg.nxi, cfg.x_min, cfg.x_max, cfg.init_lo, cfg.init_hi);
    auto sol = solve(w, kernels, rho0, T, cfg.dt, so);

    // Particles at N.
    const Hypergraph h = finite_hypergraph(cfg, n);
    const KernelFamily kn = kernels_for(kernels, h);
    IntegrateOptions io;
    io.snapshot_times = times;
    io.threads = cfg.threads;
    auto x0 = sample_uniform(n, 1, cfg.init_lo, cfg.init_hi, cfg.seed, 0);
    Trajectory tr = integrate(h, kn, x0, T, cfg.dt, io);

    std::string moments = csv_header(cfg) + "t,fiber,xi,mean,variance\n";
    for (std::size_t s = 0; s < times.size(); ++s) {
        int rows;
        double lo, hi;
        auto grid = density_grid(sol.snapshots[s], rows, lo, hi);
        const std::string t = tag(times[s]);
        emit("vlasov_t" + t + ".svg", svg_heatmap(grid, rows, cfg.nxi, "Vlasov density, t=" + t));
        emit("overlay_N" + std::to_string(n) + "_t" + t + ".svg",
             svg_heatmap(grid, rows, cfg.nxi, "Vlasov density and N=" + std::to_string(n) + " agents, t=" + t,
                         agent_dots(tr.snapshots[s].x), lo, hi));
        auto bins = bin_agents(tr.snapshots[s].x);
        rep.bins.push_back(bins);
        emit("binned_N" + std::to_string(n) + "_t" + t + ".svg",
             svg_heatmap(bins_grid(bins), 10, 10, "binned agents, N=" + std::to_string(n) + ", t=" + t,
                         agent_dots(tr.snapshots[s].x)));
        for (int f = 0; f < cfg.nxi; ++f)
            moments += format_double(times[s]) + "," + std::to_string(f) + "," +
                       format_double(sol.snapshots[s].xi_center(f)) + "," + format_double(sol.snapshots[s].mean(f)) +
                       "," + format_double(sol.snapshots[s].variance(f)) + "\n";
    }
    emit("vlasov_moments.csv", moments);

    // Final-time comparison across N.
    for (int m : compare) {
        const Hypergraph hm = finite_hypergraph(cfg, m);
        IntegrateOptions om;
        om.snapshot_times = {T};
        om.threads = cfg.threads;
        auto xm = integrate(hm, kernels_for(kernels, hm), sample_uniform(m, 1, cfg.init_lo, cfg.init_hi, cfg.seed, 0), T,
                            cfg.dt, om);
        auto bins = bin_agents(xm.snapshots.back().x);
        rep.bins.push_back(bins);
        emit("final_N" + std::to_string(m) + ".svg",
             svg_heatmap(bins_grid(bins), 10, 10, "binned agents at t=" + tag(T) + ", N=" + std::to_string(m),
                         agent_dots(xm.snapshots.back().x)));
    }
    return rep;
}

}  // namespace hgmf
