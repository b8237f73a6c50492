#include "hgmf/particles.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hgmf/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hgmf {

namespace {

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

int thread_count(int requested) {
#ifdef _OPENMP
    return requested > 0 ? requested : omp_get_max_threads();
#else
    (void)requested;
    return 1;
#endif
}

// Heads of a stored entry as seen from agent i (one copy of i removed); false if i absent.
bool heads_for(const AdjacencyTensor& t, std::size_t e, int i, std::vector<int>& heads) {
    auto key = t.key(e);
    heads.clear();
    if (t.symmetry() == Symmetry::None) {
        if (key[0] != i) return false;
        heads.assign(key.begin() + 1, key.end());
        return true;
    }
    bool removed = false;
    for (int v : key) {
        if (!removed && v == i) {
            removed = true;
            continue;
        }
        heads.push_back(v);
    }
    return removed;
}

// Calls f(ordered heads) for every distinct ordering the entry contributes to row i.
template <class F>
void for_each_ordering(const AdjacencyTensor& t, std::vector<int>& heads, F&& f) {
    if (t.symmetry() == Symmetry::None) {
        f(heads);
        return;
    }
    do f(heads);
    while (std::next_permutation(heads.begin(), heads.end()));
}

}  // namespace

// ---------------------------------------------------------------- force

ForcePlan::ForcePlan(const Hypergraph& h, const KernelFamily& k, int dim) : n_(h.num_nodes()), dim_(dim) {
    if (dim < 1) throw ParameterError("state dimension must be >= 1");
    for (const auto& ker : k.kernels()) {
        if (!h.has_order(ker.order))
            throw ConfigError("kernel order " + std::to_string(ker.order) + " has no tensor (hypergraph max_rank " +
                              std::to_string(h.max_rank()) + ")");
        if (ker.dim != 0 && ker.dim != dim)
            throw ConfigError("kernel '" + ker.name + "' needs dimension " + std::to_string(ker.dim));
        const AdjacencyTensor& t = h.tensor(ker.order);
        if (t.empty()) continue;
        Level lv{&t, &ker, {}, {}, {}, {}};
        std::vector<std::size_t> count(n_ + 1, 0);
        auto owners = [&](std::size_t e, auto&& emit) {
            auto key = t.key(e);
            if (t.symmetry() == Symmetry::None) {
                emit(key[0]);
                return;
            }
            for (std::size_t m = 0; m < key.size(); ++m)
                if (m == 0 || key[m] != key[m - 1]) emit(key[m]);
        };
        for (std::size_t e = 0; e < t.size(); ++e) owners(e, [&](int a) { ++count[a + 1]; });
        for (int a = 0; a < n_; ++a) count[a + 1] += count[a];
        lv.offsets = count;
        lv.entries.resize(count[n_]);
        std::vector<std::size_t> fill(count.begin(), count.end() - 1);
        for (std::size_t e = 0; e < t.size(); ++e) owners(e, [&](int a) { lv.entries[fill[a]++] = e; });
        // Heads seen from each owner, and the number of orderings they stand for (0: enumerate).
        const int l = ker.order;
        const bool collapse = t.symmetry() == Symmetry::Full && ker.symmetric_head;
        lv.heads.resize(lv.entries.size() * l);
        lv.mult.resize(lv.entries.size());
        std::vector<int> hs;
        for (int a = 0; a < n_; ++a)
            for (std::size_t p = lv.offsets[a]; p < lv.offsets[a + 1]; ++p) {
                heads_for(t, lv.entries[p], a, hs);
                std::copy(hs.begin(), hs.end(), lv.heads.begin() + p * l);
                if (t.symmetry() == Symmetry::None)
                    lv.mult[p] = 1.0;
                else if (collapse)
                    lv.mult[p] = std::adjacent_find(hs.begin(), hs.end()) == hs.end() ? factorial(l) : distinct_permutations(hs);
                else
                    lv.mult[p] = 0.0;
            }
        levels_.push_back(std::move(lv));
    }
}

void ForcePlan::apply(const std::vector<double>& x, std::vector<double>& out, int threads) const {
    const int d = dim_;
    if (static_cast<int>(x.size()) != n_ * d) throw ConfigError("state size does not match the hypergraph");
    out.assign(x.size(), 0.0);
    // Separable kernels (d = 1): tabulate every factor once per call, tab[level][(term*(l+1) + slot)*n + agent].
    std::vector<std::vector<double>> tab(levels_.size());
    for (std::size_t L = 0; L < levels_.size(); ++L) {
        const InteractionKernel& ker = *levels_[L].kernel;
        if (d != 1 || !ker.has_separable()) continue;
        const int l = ker.order;
        auto& tb = tab[L];
        tb.resize(ker.separable.size() * (l + 1) * static_cast<std::size_t>(n_));
        for (std::size_t t = 0; t < ker.separable.size(); ++t) {
            const auto& term = ker.separable[t];
            double* base = tb.data() + t * (l + 1) * n_;
            for (int j = 0; j < n_; ++j) {
                base[j] = term.coeff * term.self(x[j]);
                for (int k = 0; k < l; ++k) base[(k + 1) * n_ + j] = term.heads[k](x[j]);
            }
        }
    }
#pragma omp parallel num_threads(thread_count(threads))
    {
        std::vector<int> heads;
        std::vector<double> hx, val(d);
#pragma omp for schedule(dynamic, 16)
        for (int i = 0; i < n_; ++i) {
            std::span<const double> xi(x.data() + static_cast<std::size_t>(i) * d, d);
            double* fi = out.data() + static_cast<std::size_t>(i) * d;
            for (std::size_t L = 0; L < levels_.size(); ++L) {
                const auto& lv = levels_[L];
                const auto& tb = tab[L];
                const std::size_t nterms = lv.kernel->separable.size();
                const int l = lv.kernel->order;
                hx.resize(static_cast<std::size_t>(l) * d);
                auto eval = [&](const int* hs, double wm) {
                    if (!tb.empty()) {
                        double v = 0.0;
                        for (std::size_t t = 0; t < nterms; ++t) {
                            const double* base = tb.data() + t * (l + 1) * n_;
                            double term = base[i];
                            for (int k = 0; k < l; ++k) term *= base[(k + 1) * n_ + hs[k]];
                            v += term;
                        }
                        fi[0] += wm * v;
                        return;
                    }
                    for (int k = 0; k < l; ++k)
                        for (int c = 0; c < d; ++c) hx[k * d + c] = x[static_cast<std::size_t>(hs[k]) * d + c];
                    lv.kernel->fn(xi, hx, val);
                    for (int c = 0; c < d; ++c) fi[c] += wm * val[c];
                };
                for (std::size_t p = lv.offsets[i]; p < lv.offsets[i + 1]; ++p) {
                    const double w = lv.tensor->weight_at(lv.entries[p]);
                    const int* hp = lv.heads.data() + p * l;
                    if (lv.mult[p] > 0.0) {
                        eval(hp, w * lv.mult[p]);
                    } else {
                        heads.assign(hp, hp + l);
                        do eval(heads.data(), w);
                        while (std::next_permutation(heads.begin(), heads.end()));
                    }
                }
            }
        }
    }
}

std::vector<double> force_particles(const Hypergraph& h, const KernelFamily& k, const ParticleState& x) {
    if (x.size() != h.num_nodes()) throw ConfigError("agent count does not match the hypergraph");
    ForcePlan plan(h, k, x.dim);
    std::vector<double> out;
    plan.apply(x.x, out);
    return out;
}

// ---------------------------------------------------------------- integration

Trajectory integrate(const Hypergraph& h, const KernelFamily& k, const ParticleState& x0, double T, double dt,
                     const IntegrateOptions& opt) {
    if (!(dt > 0.0)) throw ParameterError("dt must be positive");
    if (!(T >= 0.0)) throw ParameterError("T must be non-negative");
    if (x0.size() != h.num_nodes()) throw ConfigError("agent count does not match the hypergraph");
    if (!opt.drift.empty() && opt.drift.size() != x0.x.size()) throw ConfigError("drift must have N*d entries");
    for (double s : opt.snapshot_times)
        if (s < 0.0 || s > T) throw ParameterError("snapshot time outside [0, T]");

    const double tol = 1e-12 * std::max(1.0, T);
    std::vector<double> stops;
    for (long m = 1;; ++m) {
        double t = m * dt;
        if (t >= T - tol) break;
        stops.push_back(t);
    }
    for (double s : opt.snapshot_times) stops.push_back(s);
    stops.push_back(T);
    std::sort(stops.begin(), stops.end());
    std::vector<double> uniq;
    for (double s : stops)
        if (s > tol && (uniq.empty() || s - uniq.back() > tol)) uniq.push_back(s);
    if (T <= tol) uniq.clear();

    auto wanted = [&](double t) {
        if (opt.snapshot_times.empty()) return true;
        return std::any_of(opt.snapshot_times.begin(), opt.snapshot_times.end(),
                           [&](double s) { return std::abs(s - t) <= tol; });
    };

    ForcePlan plan(h, k, x0.dim);
    auto rhs = [&](const std::vector<double>& x, std::vector<double>& f) {
        plan.apply(x, f, opt.threads);
        if (!opt.drift.empty())
            for (std::size_t c = 0; c < f.size(); ++c) f[c] += opt.drift[c];
    };

    Trajectory tr;
    std::vector<double> x = x0.x;
    double t = 0.0;
    if (wanted(0.0)) {
        tr.times.push_back(0.0);
        tr.snapshots.emplace_back(x, x0.dim, 0.0);
    }
    const std::size_t n = x.size();
    std::vector<double> k1, k2, k3, k4, tmp(n);
    for (double tn : uniq) {
        const double h_ = tn - t;
        if (opt.method == Method::Euler) {
            rhs(x, k1);
            for (std::size_t c = 0; c < n; ++c) x[c] += h_ * k1[c];
        } else {
            rhs(x, k1);
            for (std::size_t c = 0; c < n; ++c) tmp[c] = x[c] + 0.5 * h_ * k1[c];
            rhs(tmp, k2);
            for (std::size_t c = 0; c < n; ++c) tmp[c] = x[c] + 0.5 * h_ * k2[c];
            rhs(tmp, k3);
            for (std::size_t c = 0; c < n; ++c) tmp[c] = x[c] + h_ * k3[c];
            rhs(tmp, k4);
            for (std::size_t c = 0; c < n; ++c) x[c] += h_ / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        t = tn;
        for (double v : x)
            if (!std::isfinite(v)) throw IntegrationError("non-finite particle state", t);
        if (wanted(t)) {
            tr.times.push_back(t);
            tr.snapshots.emplace_back(x, x0.dim, t);
        }
    }
    return tr;
}

FiberedAtoms empirical_fibered(const ParticleState& x) {
    if (x.dim != 1) throw ConfigError("fibered measures are one-dimensional");
    FiberedAtoms a;
    a.fibers.reserve(x.size());
    for (double v : x.x) a.fibers.push_back(DiscreteMeasure::dirac(v));
    return a;
}

// ---------------------------------------------------------------- error constants

McKeanConstants mckean_error_constants(const Hypergraph& h, const KernelFamily& k, double p) {
    if (!(p >= 1.0 && p <= 2.0)) throw ParameterError("p must lie in [1, 2]");
    const bool q_inf = p == 1.0;
    const double q = q_inf ? 0.0 : p / (p - 1.0);
    const int n = h.num_nodes();

    std::vector<double> row_lip(n, 0.0), row_cp(n, 0.0), row_eps(n, 0.0);
    std::vector<const InteractionKernel*> kers;
    for (const auto& ker : k.kernels())
        if (h.has_order(ker.order) && !h.tensor(ker.order).empty()) kers.push_back(&ker);

    for (const InteractionKernel* ker : kers) {
        const AdjacencyTensor& t = h.tensor(ker->order);
        const int l = ker->order;
        // Rows are assembled per agent from the entries that contain it.
        std::vector<std::vector<std::size_t>> by_agent(n);
        for (std::size_t e = 0; e < t.size(); ++e) {
            auto key = t.key(e);
            if (t.symmetry() == Symmetry::None) {
                by_agent[key[0]].push_back(e);
            } else {
                for (std::size_t m = 0; m < key.size(); ++m)
                    if (m == 0 || key[m] != key[m - 1]) by_agent[key[m]].push_back(e);
            }
        }
#pragma omp parallel for schedule(dynamic, 8)
        for (int i = 0; i < n; ++i) {
            std::vector<int> heads, rest;
            std::map<std::vector<int>, double> col;  // (k, j-hat) -> sum_j w^q (or max)
            double s1 = 0.0, s2 = 0.0;
            for (std::size_t e : by_agent[i]) {
                if (!heads_for(t, e, i, heads)) continue;
                const double w = t.weight_at(e);
                for_each_ordering(t, heads, [&](const std::vector<int>& hs) {
                    s1 += w;
                    s2 += w * w;
                    for (int kk = 0; kk < l; ++kk) {
                        rest.assign(1, kk);
                        for (int m = 0; m < l; ++m)
                            if (m != kk) rest.push_back(hs[m]);
                        double& c = col[rest];
                        c = q_inf ? std::max(c, w) : c + std::pow(w, q);
                    }
                });
            }
            double cp = 0.0;
            for (const auto& [key, v] : col) cp += q_inf ? v : std::pow(v, 1.0 / q);
            row_lip[i] += ker->lipschitz * s1;
            row_cp[i] += ker->lipschitz * cp;
            row_eps[i] += std::sqrt(factorial(l)) * ker->bound * std::sqrt(s2);
        }
    }

    McKeanConstants c;
    double sp = 0.0, se = 0.0;
    for (int i = 0; i < n; ++i) {
        c.c_inf = std::max(c.c_inf, row_lip[i]);
        sp += std::pow(row_cp[i], p);
        se += std::pow(row_eps[i], p);
    }
    c.c_p = std::pow(sp, 1.0 / p);
    c.eps_p = n > 0 ? 2.0 * std::pow(se / n, 1.0 / p) : 0.0;
    return c;
}

// ---------------------------------------------------------------- sampling

namespace {
std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t h = splitmix(seed ^ splitmix(stream ^ splitmix(index ^ 0xD1B54A32D192ED03ull)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

ParticleState sample_uniform(int n, int d, double lo, double hi, std::uint64_t seed, std::uint64_t replica) {
    ParticleState s(n, d);
    for (std::size_t c = 0; c < s.x.size(); ++c) s.x[c] = lo + (hi - lo) * counter_uniform(seed, replica, c);
    return s;
}

}  // namespace hgmf
