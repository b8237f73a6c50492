// hgmf: command-line driver for simulations, distances and studies.
// Exit codes: 0 success, 2 invalid input (validation, parse, config, parameter), 3 resource limit, 1 other.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>

#include "hgmf/errors.hpp"
#include "hgmf/hypergraph.hpp"
#include "hgmf/hypergraphon.hpp"
#include "hgmf/metrics.hpp"
#include "hgmf/particles.hpp"
#include "hgmf/studies.hpp"
#include "hgmf/vlasov.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace hgmf;

namespace {

struct Globals {
    std::string config_path;
    std::vector<std::string> sets;
    long long seed = -1;
    int threads = -1;
    std::string out;
};

ExperimentConfig resolve(const Globals& g) {
    ExperimentConfig cfg;
    if (!g.config_path.empty()) cfg = load_config(g.config_path);
    for (const auto& kv : g.sets) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (g.seed >= 0) cfg.seed = static_cast<std::uint64_t>(g.seed);
    if (g.threads >= 0) cfg.threads = g.threads;
    if (!g.out.empty()) cfg.out = g.out;
#ifdef _OPENMP
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif
    cfg.check();
    return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& file) {
    std::filesystem::create_directories(cfg.out);
    return (std::filesystem::path(cfg.out) / file).string();
}

// "0.1,0.4" (unit masses) or "0.1:0.5,0.4:0.5"; normalised to total mass 1.
DiscreteMeasure parse_measure(const std::string& s) {
    DiscreteMeasure m;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find(',', start);
        std::string tok = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (!tok.empty()) {
            auto colon = tok.find(':');
            try {
                if (colon == std::string::npos)
                    m.add(std::stod(tok), 1.0);
                else
                    m.add(std::stod(tok.substr(0, colon)), std::stod(tok.substr(colon + 1)));
            } catch (const std::logic_error&) {
                throw ParameterError("bad measure token '" + tok + "'");
            }
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    if (m.empty()) throw ParameterError("empty measure");
    const double total = m.total();
    for (double& v : m.mass) v /= total;
    return m;
}

// Common refinement of two dense levels of one order.
std::pair<DenseLevel, DenseLevel> aligned(const StepHypergraphon& a, const StepHypergraphon& b, int order) {
    DenseLevel da = a.dense_level(order), db = b.dense_level(order);
    const int l = std::lcm(da.parts, db.parts);
    return {da.refined(l / da.parts), db.refined(l / db.parts)};
}

// One CSV row of the distance output: kind,order,value,mode.
void print_row(const std::string& kind, int order, double v, const std::string& mode = "exact") {
    std::printf("kind,order,value,mode\n%s,%d,%s,%s\n", kind.c_str(), order, format_double(v).c_str(), mode.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hgmf: hypergraph mean-field simulations and distances"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "experiment config file (key = value lines)");
    app.add_option("--set", g.sets, "override a config key, key=value (repeatable)");
    app.add_option("--seed", g.seed, "base seed");
    app.add_option("--threads", g.threads, "worker threads (0: runtime default)");
    app.add_option("--out", g.out, "output directory");

    // simulate
    auto* sim = app.add_subcommand("simulate", "integrate the particle system");
    int sim_n = 0;
    std::string sim_file;
    bool sim_euler = false;
    sim->add_option("--n", sim_n, "number of agents (default: first of n_list)");
    sim->add_option("--hypergraph-file", sim_file, "load the hypergraph instead of building the configured family");
    sim->add_flag("--euler", sim_euler, "forward Euler instead of RK4");

    // vlasov
    auto* vl = app.add_subcommand("vlasov", "solve the fibered Vlasov equation for the limit hypergraphon");

    // continuum
    auto* ct = app.add_subcommand("continuum", "solve the continuum-limit equation with X0(xi) = init_lo + (init_hi - init_lo) xi");

    // distance
    auto* dist = app.add_subcommand("distance", "distances between measures and hypergraphons");
    dist->require_subcommand(1);
    std::string da, db, dmu, dtree, dexp;
    int dorder = 1;
    double dp = 1.0;
    auto* d_bl_cmd = dist->add_subcommand("bl", "bounded-Lipschitz distance of two discrete measures");
    d_bl_cmd->add_option("--a", da, "atoms x[:m],...")->required();
    d_bl_cmd->add_option("--b", db, "atoms x[:m],...")->required();
    auto* d_pnu = dist->add_subcommand("dpnu", "d_{p,nu} of two density files");
    d_pnu->add_option("--a", da)->required()->check(CLI::ExistingFile);
    d_pnu->add_option("--b", db)->required()->check(CLI::ExistingFile);
    d_pnu->add_option("--p", dp);
    auto* d_cut = dist->add_subcommand("cut", "labeled cut norm of the difference of two step hypergraphons");
    auto* d_op = dist->add_subcommand("opnorm", "(L^inf)^l -> L^1 norm of the difference of two step hypergraphons");
    for (auto* c : {d_cut, d_op}) {
        c->add_option("--a", da)->required()->check(CLI::ExistingFile);
        c->add_option("--b", db)->required()->check(CLI::ExistingFile);
        c->add_option("--order", dorder);
    }
    auto* d_l1 = dist->add_subcommand("l1", "L1 distance of one order; --a defaults to the configured limit family");
    d_l1->add_option("--a", da)->check(CLI::ExistingFile);
    d_l1->add_option("--b", db)->required()->check(CLI::ExistingFile);
    d_l1->add_option("--order", dorder);
    auto* d_perm = dist->add_subcommand("delta-perm", "minimum alpha-weighted cut distance over part relabelings");
    d_perm->add_option("--a", da)->required()->check(CLI::ExistingFile);
    d_perm->add_option("--b", db)->required()->check(CLI::ExistingFile);
    auto* d_tree = dist->add_subcommand("hypertree", "hypertree observable of (w, mu)");
    d_tree->add_option("--tree", dtree, "e.g. 1:2,3;2:4")->required();
    d_tree->add_option("--w", da, "step hypergraphon file (default: configured limit family)");
    d_tree->add_option("--mu", dmu, "density file")->required()->check(CLI::ExistingFile);
    d_tree->add_option("--exponents", dexp, "one moment exponent per node, comma separated")->required();

    auto* conv = app.add_subcommand("convergence-study", "particle vs Vlasov distances over the N sweep");
    auto* cutd = app.add_subcommand("cutdist-study", "discretization L1 and cut distances over the N sweep");
    auto* figs = app.add_subcommand("figures", "SVG figure set for the configured family");
    auto* val = app.add_subcommand("validate", "check a hypergraph file and/or the config");
    std::string val_file;
    val->add_option("--hypergraph-file", val_file)->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (val->parsed()) {
            ExperimentConfig cfg = resolve(g);
            std::printf("config ok %s\n", cfg.hash_hex().c_str());
            if (!val_file.empty()) {
                Hypergraph h = load(val_file, false);
                ValidationReport r = validate(h);
                std::printf("nodes %d rank %d scaling_bound %s\n", h.num_nodes(), h.rank(),
                            format_double(scaling_bound(h)).c_str());
                for (const auto& v : r.violations) {
                    std::string idx;
                    for (int i : v.index) idx += (idx.empty() ? "" : ",") + std::to_string(i + 1);
                    const char* kind = v.kind == Violation::Loop           ? "loop"
                                       : v.kind == Violation::HeadSymmetry ? "head-symmetry"
                                                                           : "full-symmetry";
                    std::printf("violation %s order %d (%s) %s\n", kind, v.order, idx.c_str(), v.detail.c_str());
                }
                std::printf("%zu violation(s)\n", r.violations.size());
                return r.ok() ? 0 : 2;
            }
            return 0;
        }

        ExperimentConfig cfg = resolve(g);

        if (sim->parsed()) {
            const int n = sim_n > 0 ? sim_n : cfg.n_list.front();
            Hypergraph h = sim_file.empty() ? finite_hypergraph(cfg, n) : load(sim_file);
            KernelFamily k = kernels_for(kernel_family(cfg), h);
            IntegrateOptions io;
            io.method = sim_euler ? Method::Euler : Method::RK4;
            io.snapshot_times = cfg.snapshots;
            io.threads = cfg.threads;
            auto x0 = sample_uniform(h.num_nodes(), 1, cfg.init_lo, cfg.init_hi, cfg.seed, 0);
            Trajectory tr = integrate(h, k, x0, cfg.t_end, cfg.dt, io);
            std::string csv = csv_header(cfg) + "t,agent,label,x\n";
            for (std::size_t s = 0; s < tr.times.size(); ++s)
                for (int i = 0; i < h.num_nodes(); ++i)
                    csv += format_double(tr.times[s]) + "," + std::to_string(i + 1) + "," +
                           format_double((i + 0.5) / h.num_nodes()) + "," + format_double(tr.snapshots[s].x[i]) + "\n";
            write_text(out_path(cfg, "trajectory.csv"), csv);
            std::printf("wrote %s\n", out_path(cfg, "trajectory.csv").c_str());
        } else if (vl->parsed()) {
            SolveOptions so;
            so.snapshot_times = cfg.snapshots;
            so.force.threads = cfg.threads;
            auto rho0 = density_uniform(cfg.nx, cfg.nxi, cfg.x_min, cfg.x_max, cfg.init_lo, cfg.init_hi);
            auto sol = solve(limit_hypergraphon(cfg), kernel_family(cfg), rho0, cfg.t_end, cfg.dt, so);
            std::string csv = csv_header(cfg) + "t,fiber,xi,mass,mean,variance\n";
            for (std::size_t s = 0; s < sol.times.size(); ++s) {
                const auto& r = sol.snapshots[s];
                for (int f = 0; f < r.nxi; ++f)
                    csv += format_double(sol.times[s]) + "," + std::to_string(f) + "," + format_double(r.xi_center(f)) +
                           "," + format_double(r.mass(f)) + "," + format_double(r.mean(f)) + "," +
                           format_double(r.variance(f)) + "\n";
                save_density(r, out_path(cfg, "density_" + std::to_string(s) + ".txt"));
            }
            write_text(out_path(cfg, "vlasov_moments.csv"), csv);
            std::printf("steps %ld, wrote %zu snapshots to %s\n", sol.steps, sol.times.size(), cfg.out.c_str());
        } else if (ct->parsed()) {
            LabelField x0;
            for (int f = 0; f < cfg.nxi; ++f) x0.x.push_back(cfg.init_lo + (cfg.init_hi - cfg.init_lo) * (f + 0.5) / cfg.nxi);
            auto s = solve_continuum(limit_hypergraphon(cfg), kernel_family(cfg), x0, cfg.t_end, cfg.dt, cfg.snapshots);
            std::string csv = csv_header(cfg) + "t,fiber,xi,x\n";
            for (const auto& snap : s.snapshots)
                for (int f = 0; f < snap.size(); ++f)
                    csv += format_double(snap.time) + "," + std::to_string(f) + "," +
                           format_double((f + 0.5) / cfg.nxi) + "," + format_double(snap.x[f]) + "\n";
            write_text(out_path(cfg, "continuum.csv"), csv);
            std::printf("wrote %s\n", out_path(cfg, "continuum.csv").c_str());
        } else if (dist->parsed()) {
            if (d_bl_cmd->parsed()) {
                print_row("bl", 0, d_bl(parse_measure(da), parse_measure(db)));
            } else if (d_pnu->parsed()) {
                print_row("dpnu", 0, d_p_nu(load_density(da), load_density(db), dp));
            } else if (d_cut->parsed() || d_op->parsed()) {
                auto [x, y] = aligned(load_step(da), load_step(db), dorder);
                DenseLevel diff = x - y;
                if (d_cut->parsed()) {
                    CutValue c = cut_norm(diff, cfg.cut_restarts, cfg.seed);
                    print_row("cut", dorder, c.value, c.mode());
                } else {
                    print_row("opnorm", dorder, operator_norm_infty_to_1(diff));
                }
            } else if (d_l1->parsed()) {
                URHypergraphon a = da.empty() ? limit_hypergraphon(cfg) : URHypergraphon(load_step(da));
                print_row("l1", dorder, l1_level_distance(a, load_step(db), dorder, cfg.refinement), "quadrature");
            } else if (d_perm->parsed()) {
                PermResult r = delta_square_perm(load_step(da), load_step(db), AlphaSequence::parse(cfg.alpha));
                bool exact = std::all_of(r.best.terms.begin(), r.best.terms.end(), [](const auto& t) { return t.exact; });
                print_row("delta-perm", 0, r.best.total, exact ? "exact" : "heuristic");
                std::string perm;
                for (int v : r.permutation) perm += (perm.empty() ? "" : " ") + std::to_string(v + 1);
                std::printf("# permutation %s\n", perm.c_str());
            } else if (d_tree->parsed()) {
                URHypergraphon w = da.empty() ? limit_hypergraphon(cfg) : URHypergraphon(load_step(da));
                std::vector<int> ex;
                std::size_t start = 0;
                while (start <= dexp.size()) {
                    auto end = dexp.find(',', start);
                    std::string tok = dexp.substr(start, end == std::string::npos ? std::string::npos : end - start);
                    try {
                        if (!tok.empty()) ex.push_back(std::stoi(tok));
                    } catch (const std::logic_error&) {
                        throw ParameterError("bad exponent '" + tok + "'");
                    }
                    if (end == std::string::npos) break;
                    start = end + 1;
                }
                print_row("hypertree", 0, hypertree_moment(DirectedHypertree::parse(dtree), w, to_atoms(load_density(dmu)), ex));
            }
        } else if (conv->parsed()) {
            auto r = run_convergence_study(cfg);
            write_text(out_path(cfg, "convergence_rows.csv"), convergence_rows_csv(cfg, r));
            write_text(out_path(cfg, "convergence_summary.csv"), convergence_summary_csv(cfg, r));
            write_text(out_path(cfg, "convergence.svg"), convergence_svg(r));
            for (const auto& m : r.summary)
                std::printf("N=%d mean_sup=%s se=%s marginal=%s eps_p=%s\n", m.n, format_double(m.mean_sup).c_str(),
                            format_double(m.se_sup).c_str(), format_double(m.mean_marginal_sup).c_str(),
                            format_double(m.eps_p).c_str());
        } else if (cutd->parsed()) {
            auto r = run_cutdist_study(cfg);
            write_text(out_path(cfg, "cutdist.csv"), cutdist_csv(cfg, r));
            for (const auto& f : r.fits)
                std::printf("%s order %d slope %s\n", f.scheme.c_str(), f.order, format_double(f.slope).c_str());
        } else if (figs->parsed()) {
            auto r = reproduce_figures(cfg);
            for (const auto& f : r.files) std::printf("%s\n", f.c_str());
        }
        return 0;
    } catch (const ResourceError& e) {
        std::fprintf(stderr, "resource limit: %s\n", e.what());
        return 3;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ParameterError& e) {
        std::fprintf(stderr, "parameter error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
