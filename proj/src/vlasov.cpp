#include "hgmf/vlasov.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hgmf/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hgmf {

namespace {

int thread_count(int requested) {
#ifdef _OPENMP
    return requested > 0 ? requested : omp_get_max_threads();
#else
    (void)requested;
    return 1;
#endif
}

bool order_present(const URHypergraphon& w, int l) {
    if (w.is_step()) return l >= 1 && l <= w.step().max_order();
    return w.analytic_level(l) != nullptr;
}

bool advance(std::vector<int>& g, int hi) {
    int k = static_cast<int>(g.size()) - 1;
    while (k >= 0 && g[k] == hi - 1) g[k--] = 0;
    if (k < 0) return false;
    ++g[k];
    return true;
}

}  // namespace

// ---------------------------------------------------------------- quadrature

FiberQuadrature::FiberQuadrature(const URHypergraphon& w, int nxi, const std::vector<int>& orders, double budget)
    : nxi_(nxi) {
    if (nxi < 1) throw ParameterError("need at least one fiber");
    for (int l : orders) {
        if (!order_present(w, l)) throw ConfigError("order " + std::to_string(l) + " is not a level of the hypergraphon");
        Level lv;
        lv.order = l;
        std::vector<std::vector<int>> heads(nxi);
        std::vector<std::vector<double>> vals(nxi);

        if (w.is_step() && w.step().parts == nxi) {
            const AdjacencyTensor& t = w.step().levels[l - 1];
            for (std::size_t e = 0; e < t.size(); ++e) {
                std::vector<int> p(t.key(e).begin(), t.key(e).end());
                auto push = [&](const std::vector<int>& q) {
                    heads[q[0]].insert(heads[q[0]].end(), q.begin() + 1, q.end());
                    vals[q[0]].push_back(t.weight_at(e));
                };
                if (t.symmetry() == Symmetry::None) {
                    push(p);
                } else {
                    do push(p);
                    while (std::next_permutation(p.begin(), p.end()));
                }
            }
        } else {
            if (std::pow(static_cast<double>(nxi), l + 1) > budget)
                throw ResourceError("sampling order " + std::to_string(l) + " on " + std::to_string(nxi) +
                                    " fibers exceeds the quadrature budget");
#pragma omp parallel for schedule(dynamic)
            for (int i = 0; i < nxi; ++i) {
                std::vector<int> g(l, 0);
                std::vector<double> pt(l + 1);
                pt[0] = (i + 0.5) / nxi;
                do {
                    for (int k = 0; k < l; ++k) pt[k + 1] = (g[k] + 0.5) / nxi;
                    double v = w.evaluate(l, pt);
                    if (v != 0.0) {
                        heads[i].insert(heads[i].end(), g.begin(), g.end());
                        vals[i].push_back(v);
                    }
                } while (advance(g, nxi));
            }
        }
        lv.row.assign(nxi + 1, 0);
        for (int i = 0; i < nxi; ++i) {
            lv.row[i + 1] = lv.row[i] + vals[i].size();
            lv.heads.insert(lv.heads.end(), heads[i].begin(), heads[i].end());
            lv.value.insert(lv.value.end(), vals[i].begin(), vals[i].end());
        }
        levels_.push_back(std::move(lv));
    }
}

const FiberQuadrature::Level* FiberQuadrature::level(int order) const {
    for (const auto& lv : levels_)
        if (lv.order == order) return &lv;
    return nullptr;
}

double FiberQuadrature::row_l1(int order, int i) const {
    const Level* lv = level(order);
    if (!lv) return 0.0;
    double s = 0.0;
    for (std::size_t e = lv->row[i]; e < lv->row[i + 1]; ++e) s += lv->value[e];
    return s * std::pow(dxi(), order);
}

// ---------------------------------------------------------------- force

double ForceField::max_abs() const {
    double m = 0.0;
    for (double v : centers) m = std::max(m, std::abs(v));
    for (double v : faces) m = std::max(m, std::abs(v));
    return m;
}

MeanFieldForce::MeanFieldForce(const URHypergraphon& w, const KernelFamily& k, int nxi, ForceOptions opt)
    : kernels_(k), quad_(w, nxi, k.orders()), opt_(opt) {
    for (const auto& ker : kernels_.kernels()) {
        if (ker.dim > 1) throw ConfigError("the Vlasov solver is one-dimensional");
        if (ker.has_separable() && opt_.verify_separable) {
            double err = separable_error(ker, 100, 0x5EEDull + static_cast<std::uint64_t>(ker.order));
            if (!(err <= 1e-10 * (1.0 + ker.bound)))
                throw ConfigError("separable decomposition of '" + ker.name + "' disagrees with direct evaluation");
        }
    }
}

bool MeanFieldForce::uses_fast_path(int order) const {
    const InteractionKernel* k = kernels_.find(order);
    return k && k->has_separable();
}

void MeanFieldForce::evaluate_separable(const InteractionKernel& k, const FiberQuadrature::Level& lv,
                                        const FiberedDensity& rho, std::span<const double> xs,
                                        std::vector<double>& out) const {
    const int l = k.order, nxi = quad_.nxi(), nx = rho.nx, R = static_cast<int>(k.separable.size());
    const std::size_t np = xs.size();
    const double dx = rho.dx();

    // mom[(r*l + m)*nxi + j] = int b_{r,m} d(rho_j)
    std::vector<double> mom(static_cast<std::size_t>(R) * l * nxi, 0.0);
    std::vector<double> table(nx);
    for (int r = 0; r < R; ++r)
        for (int m = 0; m < l; ++m) {
            for (int c = 0; c < nx; ++c) table[c] = k.separable[r].heads[m](rho.x_center(c));
            for (int j = 0; j < nxi; ++j) {
                auto f = rho.fiber(j);
                double s = 0.0;
                for (int c = 0; c < nx; ++c) s += table[c] * f[c];
                mom[(static_cast<std::size_t>(r) * l + m) * nxi + j] = s * dx;
            }
        }

    std::vector<double> a(static_cast<std::size_t>(R) * np);
    for (int r = 0; r < R; ++r)
        for (std::size_t c = 0; c < np; ++c) a[r * np + c] = k.separable[r].coeff * k.separable[r].self(xs[c]);

    const double scale = std::pow(quad_.dxi(), l);
#pragma omp parallel for schedule(dynamic, 4) num_threads(thread_count(opt_.threads))
    for (int i = 0; i < nxi; ++i) {
        std::vector<double> coef(R, 0.0);
        for (std::size_t e = lv.row[i]; e < lv.row[i + 1]; ++e) {
            const int* h = lv.heads.data() + e * l;
            const double v = lv.value[e];
            for (int r = 0; r < R; ++r) {
                double p = v;
                const double* base = mom.data() + static_cast<std::size_t>(r) * l * nxi;
                for (int m = 0; m < l; ++m) p *= base[static_cast<std::size_t>(m) * nxi + h[m]];
                coef[r] += p;
            }
        }
        double* o = out.data() + static_cast<std::size_t>(i) * np;
        for (int r = 0; r < R; ++r) {
            const double cr = coef[r] * scale;
            if (cr == 0.0) continue;
            for (std::size_t c = 0; c < np; ++c) o[c] += cr * a[r * np + c];
        }
    }
}

void MeanFieldForce::evaluate_generic(const InteractionKernel& k, const FiberQuadrature::Level& lv,
                                      const FiberedDensity& rho, std::span<const double> xs,
                                      std::vector<double>& out) const {
    const int l = k.order, nxi = quad_.nxi(), nx = rho.nx;
    const std::size_t np = xs.size();
    const double dx = rho.dx();

    // Distinct head tuples, encoded base nxi.
    std::vector<long> code(lv.value.size());
    for (std::size_t e = 0; e < lv.value.size(); ++e) {
        long c = 0;
        for (int m = 0; m < l; ++m) c = c * nxi + lv.heads[e * l + m];
        code[e] = c;
    }
    std::vector<long> uniq = code;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

    std::vector<std::vector<int>> support(nxi);
    for (int j = 0; j < nxi; ++j) {
        auto f = rho.fiber(j);
        for (int c = 0; c < nx; ++c)
            if (f[c] != 0.0) support[j].push_back(c);
    }
    if (l >= 3) {
        double work = static_cast<double>(uniq.size()) * std::pow(static_cast<double>(nx), l) * np;
        if (work > opt_.generic_budget)
            throw ResourceError("generic quadrature for order " + std::to_string(l) + " needs " + std::to_string(work) +
                                " kernel evaluations (budget " + std::to_string(opt_.generic_budget) + ")");
    }

    // g[u * np + c] = int K(xs[c], y1..yl) d rho_{J1}(y1) ... d rho_{Jl}(yl)
    std::vector<double> g(uniq.size() * np, 0.0);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(opt_.threads))
    for (std::size_t u = 0; u < uniq.size(); ++u) {
        std::vector<int> J(l);
        long c = uniq[u];
        for (int m = l - 1; m >= 0; --m) {
            J[m] = static_cast<int>(c % nxi);
            c /= nxi;
        }
        bool empty = false;
        for (int m = 0; m < l; ++m) empty |= support[J[m]].empty();
        if (empty) continue;
        std::vector<int> pos(l, 0);
        std::vector<double> hx(l);
        double val = 0.0;
        while (true) {
            double wgt = 1.0;
            for (int m = 0; m < l; ++m) {
                int cell = support[J[m]][pos[m]];
                hx[m] = rho.x_center(cell);
                wgt *= rho.fiber(J[m])[cell] * dx;
            }
            for (std::size_t q = 0; q < np; ++q) {
                double x = xs[q];
                k.fn(std::span<const double>(&x, 1), hx, std::span<double>(&val, 1));
                g[u * np + q] += wgt * val;
            }
            int m = l - 1;
            while (m >= 0 && pos[m] + 1 == static_cast<int>(support[J[m]].size())) pos[m--] = 0;
            if (m < 0) break;
            ++pos[m];
        }
    }

    const double scale = std::pow(quad_.dxi(), l);
#pragma omp parallel for schedule(dynamic, 4) num_threads(thread_count(opt_.threads))
    for (int i = 0; i < nxi; ++i) {
        double* o = out.data() + static_cast<std::size_t>(i) * np;
        for (std::size_t e = lv.row[i]; e < lv.row[i + 1]; ++e) {
            std::size_t u = static_cast<std::size_t>(std::lower_bound(uniq.begin(), uniq.end(), code[e]) - uniq.begin());
            const double v = lv.value[e] * scale;
            for (std::size_t q = 0; q < np; ++q) o[q] += v * g[u * np + q];
        }
    }
}

void MeanFieldForce::evaluate(const FiberedDensity& rho, std::span<const double> xs, std::vector<double>& out) const {
    if (rho.nxi != quad_.nxi())
        throw ConfigError("density has " + std::to_string(rho.nxi) + " fibers, force expects " +
                          std::to_string(quad_.nxi()));
    out.assign(static_cast<std::size_t>(rho.nxi) * xs.size(), 0.0);
    for (const auto& k : kernels_.kernels()) {
        const auto* lv = quad_.level(k.order);
        if (!lv || lv->value.empty()) continue;
        if (k.has_separable())
            evaluate_separable(k, *lv, rho, xs, out);
        else
            evaluate_generic(k, *lv, rho, xs, out);
    }
}

ForceField MeanFieldForce::operator()(const FiberedDensity& rho) const {
    std::vector<double> xs;
    for (int c = 0; c < rho.nx; ++c) xs.push_back(rho.x_center(c));
    for (int c = 0; c <= rho.nx; ++c) xs.push_back(rho.x_face(c));
    std::vector<double> all;
    evaluate(rho, xs, all);
    ForceField f;
    f.nx = rho.nx;
    f.nxi = rho.nxi;
    const std::size_t np = xs.size();
    for (int i = 0; i < rho.nxi; ++i) {
        const double* row = all.data() + static_cast<std::size_t>(i) * np;
        f.centers.insert(f.centers.end(), row, row + rho.nx);
        f.faces.insert(f.faces.end(), row + rho.nx, row + np);
    }
    return f;
}

std::vector<double> MeanFieldForce::faces(const FiberedDensity& rho) const {
    std::vector<double> xs(rho.nx + 1);
    for (int c = 0; c <= rho.nx; ++c) xs[c] = rho.x_face(c);
    std::vector<double> out;
    evaluate(rho, xs, out);
    return out;
}

ForceConstants MeanFieldForce::constants(double p) const {
    if (!(p >= 1.0) || !std::isfinite(p)) throw ParameterError("p must lie in [1, inf)");
    const bool q_inf = p == 1.0;
    const double q = q_inf ? 0.0 : p / (p - 1.0);
    const int nxi = quad_.nxi();
    const double dxi = quad_.dxi();
    std::vector<double> bsum(nxi, 0.0), lsum(nxi, 0.0), csum(nxi, 0.0);
    for (const auto& k : kernels_.kernels()) {
        const auto* lv = quad_.level(k.order);
        if (!lv) continue;
        const int l = k.order;
        const double rest = std::pow(dxi, l - 1);
        std::vector<double> g(nxi, 0.0);
        for (int i = 0; i < nxi; ++i) {
            const double r = quad_.row_l1(l, i);
            bsum[i] += k.bound * r;
            lsum[i] += k.lipschitz * r;
            double norms = 0.0;
            for (int m = 0; m < l; ++m) {
                std::fill(g.begin(), g.end(), 0.0);
                for (std::size_t e = lv->row[i]; e < lv->row[i + 1]; ++e) g[lv->heads[e * l + m]] += lv->value[e] * rest;
                double nk = 0.0;
                if (q_inf) {
                    for (double v : g) nk = std::max(nk, v);
                } else {
                    for (double v : g) nk += std::pow(v, q) * dxi;
                    nk = std::pow(nk, 1.0 / q);
                }
                norms += nk;
            }
            csum[i] += k.bl() * norms;
        }
    }
    ForceConstants c;
    double sp = 0.0;
    for (int i = 0; i < nxi; ++i) {
        c.b_f = std::max(c.b_f, bsum[i]);
        c.l_f = std::max(c.l_f, lsum[i]);
        sp += std::pow(csum[i], p) * dxi;
    }
    c.c_p = std::pow(sp, 1.0 / p);
    return c;
}

ForceField mean_field_force(const URHypergraphon& w, const FiberedDensity& rho, const KernelFamily& k) {
    return MeanFieldForce(w, k, rho.nxi)(rho);
}

// ---------------------------------------------------------------- transport

double outflow_speed(const FiberedDensity& rho, std::span<const double> faces) {
    const int nx = rho.nx;
    double s = 0.0;
    for (int f = 0; f < rho.nxi; ++f) {
        const double* v = faces.data() + static_cast<std::size_t>(f) * (nx + 1);
        for (int c = 0; c < nx; ++c) {
            double out = 0.0;
            if (c + 1 < nx) out += std::max(v[c + 1], 0.0);
            if (c > 0) out += std::max(-v[c], 0.0);
            s = std::max(s, out);
        }
    }
    return s;
}

FiberedDensity step_transport(const FiberedDensity& rho, std::span<const double> faces, double dt, double cfl) {
    const int nx = rho.nx;
    if (faces.size() != static_cast<std::size_t>(rho.nxi) * (nx + 1))
        throw ConfigError("face velocity array has the wrong size");
    if (!(dt >= 0.0)) throw ParameterError("dt must be non-negative");
    const double dx = rho.dx();
    const double speed = outflow_speed(rho, faces);
    if (dt * speed > cfl * dx * (1.0 + 1e-12)) {
        double fmax = 0.0;
        for (double v : faces) fmax = std::max(fmax, std::abs(v));
        char buf[200];
        std::snprintf(buf, sizeof buf, "CFL violated: max|F| = %.6g (outflow %.6g), dt must be <= %.6g", fmax, speed,
                      cfl * dx / speed);
        throw ParameterError(buf);
    }
    FiberedDensity out = rho;
    const double lam = dt / dx;
#pragma omp parallel for schedule(static)
    for (int f = 0; f < rho.nxi; ++f) {
        auto r = rho.fiber(f);
        auto o = out.fiber(f);
        const double* v = faces.data() + static_cast<std::size_t>(f) * (nx + 1);
        double left = 0.0;  // flux through face c
        for (int c = 0; c < nx; ++c) {
            double right = 0.0;
            if (c + 1 < nx) right = v[c + 1] > 0 ? v[c + 1] * r[c] : v[c + 1] * r[c + 1];
            o[c] = r[c] - lam * (right - left);
            left = right;
        }
    }
    return out;
}

DensitySeries solve(const URHypergraphon& w, const KernelFamily& k, const FiberedDensity& rho0, double T, double dt,
                    const SolveOptions& opt) {
    if (!(dt > 0.0)) throw ParameterError("dt must be positive");
    if (!(T >= 0.0)) throw ParameterError("T must be non-negative");
    for (int f = 0; f < rho0.nxi; ++f)
        if (std::abs(rho0.mass(f) - 1.0) > 1e-8) throw ValidationError("fiber " + std::to_string(f) + " is not a probability density");
    if (rho0.min_value() < 0.0) throw ValidationError("negative initial density");

    std::vector<double> snaps = opt.snapshot_times.empty() ? std::vector<double>{0.0, T} : opt.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    for (double s : snaps)
        if (s < 0.0 || s > T) throw ParameterError("snapshot time outside [0, T]");

    MeanFieldForce force(w, k, rho0.nxi, opt.force);
    DensitySeries out;
    FiberedDensity rho = rho0;
    const double tol = 1e-12 * std::max(1.0, T);
    double t = 0.0;
    std::size_t next = 0;
    auto record = [&] {
        while (next < snaps.size() && std::abs(snaps[next] - t) <= tol) {
            if (out.times.empty() || out.times.back() != snaps[next]) {
                out.times.push_back(snaps[next]);
                out.snapshots.push_back(rho);
            }
            ++next;
        }
    };
    record();
    const double dx = rho.dx();
    while (t < T - tol) {
        std::vector<double> faces = force.faces(rho);
        double target = next < snaps.size() ? std::min(T, snaps[next]) : T;
        double h = std::min(dt, target - t);
        const double speed = outflow_speed(rho, faces);
        if (opt.auto_dt && speed * h > opt.cfl * dx) h = opt.cfl * dx / speed;
        rho = step_transport(rho, faces, h, opt.cfl);
        t = (target - (t + h) <= tol) ? target : t + h;
        ++out.steps;
        for (double v : rho.rho)
            if (!std::isfinite(v)) throw IntegrationError("non-finite density", t);
        if (opt.on_step) opt.on_step(t, rho);
        record();
    }
    return out;
}

// ---------------------------------------------------------------- continuum limit

LabelSeries solve_continuum(const URHypergraphon& w, const KernelFamily& k, const LabelField& x0, double T, double dt,
                            const std::vector<double>& snapshot_times) {
    if (!(dt > 0.0)) throw ParameterError("dt must be positive");
    if (!(T >= 0.0)) throw ParameterError("T must be non-negative");
    const int n = x0.size(), d = x0.dim;
    for (const auto& ker : k.kernels())
        if (ker.dim != 0 && ker.dim != d) throw ConfigError("kernel '" + ker.name + "' has a different dimension");
    FiberQuadrature quad(w, n, k.orders());

    auto rhs = [&](const std::vector<double>& x, std::vector<double>& f) {
        f.assign(x.size(), 0.0);
#pragma omp parallel
        {
            std::vector<double> hx, val(d);
#pragma omp for schedule(dynamic, 4)
            for (int i = 0; i < n; ++i) {
                std::span<const double> xi(x.data() + static_cast<std::size_t>(i) * d, d);
                for (const auto& ker : k.kernels()) {
                    const auto* lv = quad.level(ker.order);
                    const int l = ker.order;
                    const double scale = std::pow(quad.dxi(), l);
                    hx.resize(static_cast<std::size_t>(l) * d);
                    for (std::size_t e = lv->row[i]; e < lv->row[i + 1]; ++e) {
                        for (int m = 0; m < l; ++m)
                            for (int c = 0; c < d; ++c)
                                hx[m * d + c] = x[static_cast<std::size_t>(lv->heads[e * l + m]) * d + c];
                        ker.fn(xi, hx, val);
                        for (int c = 0; c < d; ++c) f[static_cast<std::size_t>(i) * d + c] += scale * lv->value[e] * val[c];
                    }
                }
            }
        }
    };

    std::vector<double> snaps = snapshot_times.empty() ? std::vector<double>{0.0, T} : snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    const double tol = 1e-12 * std::max(1.0, T);
    LabelSeries out;
    std::vector<double> x = x0.x, k1, k2, k3, k4, tmp(x.size());
    double t = 0.0;
    std::size_t next = 0;
    auto record = [&] {
        while (next < snaps.size() && std::abs(snaps[next] - t) <= tol) {
            out.snapshots.push_back({d, x, snaps[next]});
            ++next;
        }
    };
    record();
    long step = 0;
    while (t < T - tol) {
        double target = next < snaps.size() ? std::min(T, snaps[next]) : T;
        double grid_next = (step + 1) * dt;
        double tn = std::min(target, grid_next);
        if (target - tn <= tol) tn = target;
        const double h = tn - t;
        rhs(x, k1);
        for (std::size_t c = 0; c < x.size(); ++c) tmp[c] = x[c] + 0.5 * h * k1[c];
        rhs(tmp, k2);
        for (std::size_t c = 0; c < x.size(); ++c) tmp[c] = x[c] + 0.5 * h * k2[c];
        rhs(tmp, k3);
        for (std::size_t c = 0; c < x.size(); ++c) tmp[c] = x[c] + h * k3[c];
        rhs(tmp, k4);
        for (std::size_t c = 0; c < x.size(); ++c) x[c] += h / 6.0 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
        if (tn >= grid_next - tol) ++step;
        t = tn;
        for (double v : x)
            if (!std::isfinite(v)) throw IntegrationError("non-finite label field", t);
        record();
    }
    return out;
}

DensitySeries solve_coupled_pde(const Hypergraph& h, const KernelFamily& k, const std::vector<std::vector<double>>& laws,
                                double x_min, double x_max, double T, double dt, const SolveOptions& opt) {
    const int n = h.num_nodes();
    if (static_cast<int>(laws.size()) != n)
        throw ConfigError("got " + std::to_string(laws.size()) + " initial laws for " + std::to_string(n) + " agents");
    if (laws.empty()) throw ConfigError("no agents");
    const int nx = static_cast<int>(laws[0].size());
    FiberedDensity rho(nx, n, x_min, x_max);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(laws[i].size()) != nx) throw ConfigError("initial laws must share one x-grid");
        double m = 0.0;
        for (double v : laws[i]) {
            if (v < 0) throw ValidationError("negative initial law");
            m += v;
        }
        m *= rho.dx();
        if (!(m > 0)) throw ValidationError("initial law of agent " + std::to_string(i + 1) + " has zero mass");
        auto f = rho.fiber(i);
        for (int c = 0; c < nx; ++c) f[c] = laws[i][c] / m;
    }
    return solve(URHypergraphon(step_from_hypergraph(h)), k, rho, T, dt, opt);
}

// ---------------------------------------------------------------- initial data

namespace {
void normalise(FiberedDensity& d) {
    for (int f = 0; f < d.nxi; ++f) {
        double m = d.mass(f);
        if (!(m > 0)) throw ParameterError("fiber " + std::to_string(f) + " has zero mass");
        for (double& v : d.fiber(f)) v /= m;
    }
}
}  // namespace

FiberedDensity density_uniform(int nx, int nxi, double x_min, double x_max, double a, double b) {
    if (!(b > a)) throw ParameterError("uniform law needs b > a");
    FiberedDensity d(nx, nxi, x_min, x_max);
    for (int c = 0; c < nx; ++c) {
        double lo = std::max(a, d.x_face(c)), hi = std::min(b, d.x_face(c + 1));
        double v = hi > lo ? (hi - lo) / (d.dx() * (b - a)) : 0.0;
        for (int f = 0; f < nxi; ++f) d.fiber(f)[c] = v;
    }
    normalise(d);
    return d;
}

FiberedDensity density_from_function(int nx, int nxi, double x_min, double x_max,
                                     const std::function<double(double, double)>& fn, int sub) {
    FiberedDensity d(nx, nxi, x_min, x_max);
    for (int f = 0; f < nxi; ++f) {
        double xi = d.xi_center(f);
        for (int c = 0; c < nx; ++c) {
            double s = 0.0;
            for (int q = 0; q < sub; ++q) s += fn(d.x_face(c) + (q + 0.5) / sub * d.dx(), xi);
            if (s < 0) throw ParameterError("density function is negative");
            d.fiber(f)[c] = s / sub;
        }
    }
    normalise(d);
    return d;
}

FiberedDensity density_gaussian(int nx, int nxi, double x_min, double x_max, const std::function<double(double)>& mean,
                                double sd) {
    if (!(sd > 0)) throw ParameterError("standard deviation must be positive");
    return density_from_function(nx, nxi, x_min, x_max, [&](double x, double xi) {
        double z = (x - mean(xi)) / sd;
        return std::exp(-0.5 * z * z);
    });
}

// ---------------------------------------------------------------- text format

std::string density_to_text(const FiberedDensity& d) {
    std::ostringstream os;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d.x_min);
    os << "density v1 nx=" << d.nx << " nxi=" << d.nxi << " xmin=" << buf;
    std::snprintf(buf, sizeof buf, "%.17g", d.x_max);
    os << " xmax=" << buf << "\n";
    for (int f = 0; f < d.nxi; ++f) {
        auto r = d.fiber(f);
        for (int c = 0; c < d.nx; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", r[c]);
            os << buf << (c + 1 == d.nx ? '\n' : ' ');
        }
    }
    return os.str();
}

FiberedDensity density_from_text(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    int nx = -1, nxi = -1;
    double lo = 0, hi = 0;
    bool header = false;
    while (!header && std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ls(line);
        std::string tag, ver;
        if (!(ls >> tag)) continue;
        if (!(ls >> ver) || tag != "density" || ver != "v1") throw ParseError("expected 'density v1' header", lineno);
        std::string kv;
        int seen = 0;
        try {
            while (ls >> kv) {
                auto eq = kv.find('=');
                if (eq == std::string::npos) throw ParseError("malformed header field", lineno);
                std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
                if (key == "nx") nx = std::stoi(val);
                else if (key == "nxi") nxi = std::stoi(val);
                else if (key == "xmin") lo = std::stod(val);
                else if (key == "xmax") hi = std::stod(val);
                else throw ParseError("unknown header field '" + key + "'", lineno);
                ++seen;
            }
        } catch (const std::logic_error&) {
            throw ParseError("malformed header value", lineno);
        }
        if (seen != 4) throw ParseError("header needs nx, nxi, xmin, xmax", lineno);
        header = true;
    }
    if (!header || nx < 1 || nxi < 1 || !(hi > lo)) throw ParseError("missing or invalid density header", lineno);
    FiberedDensity d(nx, nxi, lo, hi);
    std::size_t pos = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            if (pos >= d.rho.size()) throw ParseError("too many density values", lineno);
            try {
                std::size_t used;
                double v = std::stod(tok, &used);
                if (used != tok.size() || !std::isfinite(v) || v < 0) throw std::invalid_argument(tok);
                d.rho[pos++] = v;
            } catch (const std::exception&) {
                throw ParseError("malformed density value '" + tok + "'", lineno);
            }
        }
    }
    if (pos != d.rho.size()) throw ParseError("density block truncated", lineno);
    return d;
}

void save_density(const FiberedDensity& d, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << density_to_text(d);
}

FiberedDensity load_density(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path, 0);
    std::stringstream ss;
    ss << f.rdbuf();
    return density_from_text(ss.str());
}

}  // namespace hgmf
