#include "hgmf/metrics.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "hgmf/errors.hpp"

namespace hgmf {

// ---------------------------------------------------------------- bounded-Lipschitz

namespace {

struct Pt {
    double x, y;
};

// Piecewise-linear interpolation of sorted breakpoints at x (x within their range).
double interp(const std::vector<Pt>& p, double x) {
    if (x <= p.front().x) return p.front().y;
    if (x >= p.back().x) return p.back().y;
    auto it = std::upper_bound(p.begin(), p.end(), x, [](double v, const Pt& q) { return v < q.x; });
    const Pt& b = *it;
    const Pt& a = *(it - 1);
    if (b.x == a.x) return std::max(a.y, b.y);
    return a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x);
}

// Dynamic program over phi_k = phi(a_k) at the sorted support. V_k(phi) is the best partial
// objective with phi_k = phi; it stays concave piecewise linear on [-1, 1]. The Lipschitz
// coupling |phi_{k+1} - phi_k| <= gap widens the maximiser into a plateau of half-width gap.
double bl_oriented(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(a.size() + b.size());
    for (std::size_t i = 0; i < a.size(); ++i) atoms.emplace_back(a.pos[i], a.mass[i]);
    for (std::size_t i = 0; i < b.size(); ++i) atoms.emplace_back(b.pos[i], -b.mass[i]);
    for (const auto& [x, m] : atoms)
        if (!std::isfinite(x) || !std::isfinite(m)) throw ParameterError("d_bl needs finite atoms");
    std::sort(atoms.begin(), atoms.end(), [](const auto& p, const auto& q) { return p.first < q.first; });

    std::vector<double> xs, cs;
    for (const auto& [x, m] : atoms) {
        if (!xs.empty() && xs.back() == x)
            cs.back() += m;
        else {
            xs.push_back(x);
            cs.push_back(m);
        }
    }

    std::vector<Pt> v{{-1.0, -cs[0]}, {1.0, cs[0]}};
    std::vector<Pt> u;
    for (std::size_t k = 1; k < xs.size(); ++k) {
        const double g = xs[k] - xs[k - 1];
        std::size_t arg = 0;
        for (std::size_t m = 1; m < v.size(); ++m)
            if (v[m].y > v[arg].y) arg = m;
        u.clear();
        for (std::size_t m = 0; m <= arg; ++m) u.push_back({v[m].x - g, v[m].y});
        for (std::size_t m = arg; m < v.size(); ++m) u.push_back({v[m].x + g, v[m].y});

        v.clear();
        v.push_back({-1.0, interp(u, -1.0)});
        for (const Pt& p : u)
            if (p.x > -1.0 && p.x < 1.0) v.push_back(p);
        v.push_back({1.0, interp(u, 1.0)});
        for (Pt& p : v) p.y += cs[k] * p.x;
    }
    double best = v.front().y;
    for (const Pt& p : v) best = std::max(best, p.y);
    return std::max(best, 0.0);
}

}  // namespace

// Both orientations agree in exact arithmetic; taking the larger keeps the result symmetric bit for bit.
double d_bl(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    if (a.empty() || b.empty()) throw ParameterError("d_bl needs non-empty measures");
    return std::max(bl_oriented(a, b), bl_oriented(b, a));
}

// ---------------------------------------------------------------- fibered distance

std::vector<double> fiber_distances(const FiberedAtoms& a, const FiberedAtoms& b) {
    const int na = a.size(), nb = b.size();
    if (na < 1 || nb < 1) throw ParameterError("fibered measures need at least one fiber");
    const int fine = std::max(na, nb), coarse = std::min(na, nb);
    if (fine % coarse != 0)
        throw ConfigError("incompatible fiber grids: " + std::to_string(na) + " vs " + std::to_string(nb));
    std::vector<double> d(fine);
#pragma omp parallel for schedule(dynamic)
    for (int f = 0; f < fine; ++f) {
        const auto& fa = a.fibers[na == fine ? f : f / (fine / na)];
        const auto& fb = b.fibers[nb == fine ? f : f / (fine / nb)];
        d[f] = d_bl(fa, fb);
    }
    return d;
}

double d_p_nu(const FiberedAtoms& a, const FiberedAtoms& b, double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw ParameterError("p must lie in [1, inf)");
    auto d = fiber_distances(a, b);
    double s = 0.0;
    for (double v : d) s += std::pow(v, p);
    return std::pow(s / d.size(), 1.0 / p);
}

double d_p_nu(const FiberedDensity& a, const FiberedDensity& b, double p) { return d_p_nu(to_atoms(a), to_atoms(b), p); }

double d_p_nu(const FiberedAtoms& a, const FiberedDensity& b, double p) { return d_p_nu(a, to_atoms(b), p); }

// ---------------------------------------------------------------- cut norm and operator norm

bool cut_exact_feasible(int parts, int order) {
    if (parts < 1 || order < 1) return false;
    return order == 1 ? parts <= 20 : parts * order <= 16;
}

namespace {

// B[i][j] = sum over j1..j_{l-1} of A[i, j1, .., j_{l-1}, j] * prod_k u_k(j_k).
void contract_leading(const DenseLevel& a, const std::vector<std::vector<double>>& u, std::vector<double>& out) {
    const int n = a.parts, l = a.order;
    out.assign(static_cast<std::size_t>(n) * n, 0.0);
    if (l == 1) {
        out = a.values;
        return;
    }
    std::vector<int> mid(l - 1, 0);
    for (int i = 0; i < n; ++i) {
        std::fill(mid.begin(), mid.end(), 0);
        while (true) {
            double w = 1.0;
            std::size_t base = i;
            for (int k = 0; k < l - 1; ++k) {
                w *= u[k][mid[k]];
                base = base * n + mid[k];
            }
            if (w != 0.0) {
                const double* row = a.values.data() + base * n;
                double* o = out.data() + static_cast<std::size_t>(i) * n;
                for (int j = 0; j < n; ++j) o[j] += w * row[j];
            }
            int k = l - 2;
            while (k >= 0 && mid[k] == n - 1) mid[k--] = 0;
            if (k < 0) break;
            ++mid[k];
        }
    }
}

// Visits every assignment of the leading l-1 coordinate vectors drawn from {lo, hi}^n.
template <class F>
void for_each_leading(int n, int l, double lo, double hi, F&& f) {
    std::vector<std::vector<double>> u(std::max(0, l - 1), std::vector<double>(n, lo));
    const long total_bits = static_cast<long>(n) * (l - 1);
    const unsigned long long count = 1ull << total_bits;
    for (unsigned long long mask = 0; mask < count; ++mask) {
        for (long b = 0; b < total_bits; ++b) u[b / n][b % n] = (mask >> b) & 1 ? hi : lo;
        f(u);
    }
}

void check_enumerable(const DenseLevel& a) {
    if (!cut_exact_feasible(a.parts, a.order))
        throw ResourceError("exhaustive enumeration infeasible for parts=" + std::to_string(a.parts) + ", order=" +
                            std::to_string(a.order) + "; use the heuristic");
}

}  // namespace

double cut_norm_exact(const DenseLevel& a) {
    check_enumerable(a);
    const int n = a.parts, l = a.order;
    std::vector<double> bmat, r(n);
    double best = 0.0;
    for_each_leading(n, l, 0.0, 1.0, [&](const std::vector<std::vector<double>>& u) {
        contract_leading(a, u, bmat);
        std::fill(r.begin(), r.end(), 0.0);
        std::vector<char> in(n, 0);
        for (unsigned long t = 1; t < (1ul << n); ++t) {
            int j = __builtin_ctzl(t);
            double s = in[j] ? -1.0 : 1.0;
            in[j] ^= 1;
            double pos = 0.0, neg = 0.0;
            for (int i = 0; i < n; ++i) {
                r[i] += s * bmat[static_cast<std::size_t>(i) * n + j];
                if (r[i] > 0) pos += r[i];
                else neg -= r[i];
            }
            best = std::max(best, std::max(pos, neg));
        }
    });
    return best / std::pow(static_cast<double>(n), l + 1);
}

double operator_norm_infty_to_1(const DenseLevel& a) {
    check_enumerable(a);
    const int n = a.parts, l = a.order;
    std::vector<double> bmat, r(n);
    double best = 0.0;
    for_each_leading(n, l, 1.0, -1.0, [&](const std::vector<std::vector<double>>& u) {
        contract_leading(a, u, bmat);
        std::vector<double> psi(n, 1.0);
        for (int i = 0; i < n; ++i) {
            r[i] = 0.0;
            for (int j = 0; j < n; ++j) r[i] += bmat[static_cast<std::size_t>(i) * n + j];
        }
        auto value = [&] {
            double s = 0.0;
            for (double v : r) s += std::abs(v);
            return s;
        };
        best = std::max(best, value());
        for (unsigned long t = 1; t < (1ul << n); ++t) {
            int j = __builtin_ctzl(t);
            for (int i = 0; i < n; ++i) r[i] -= 2.0 * psi[j] * bmat[static_cast<std::size_t>(i) * n + j];
            psi[j] = -psi[j];
            best = std::max(best, value());
        }
    });
    return best / std::pow(static_cast<double>(n), l + 1);
}

double cut_norm_heuristic(const DenseLevel& a, int restarts, std::uint64_t seed) {
    const int n = a.parts, l = a.order, arity = l + 1;
    if (n < 1) return 0.0;
    restarts = std::max(restarts, 1);
    std::vector<int> idx(arity);

    auto objective = [&](const std::vector<std::vector<char>>& sets) {
        double s = 0.0;
        std::fill(idx.begin(), idx.end(), 0);
        for (std::size_t f = 0; f < a.values.size(); ++f) {
            bool inside = true;
            for (int m = 0; m < arity && inside; ++m) inside = sets[m][idx[m]];
            if (inside) s += a.values[f];
            for (int m = arity - 1; m >= 0; --m) {
                if (++idx[m] < n) break;
                idx[m] = 0;
            }
        }
        return s;
    };

    // c(j) = sum of A over entries with coordinate m equal to j and all others inside their sets.
    auto coordinate_sums = [&](const std::vector<std::vector<char>>& sets, int m, std::vector<double>& c) {
        c.assign(n, 0.0);
        std::fill(idx.begin(), idx.end(), 0);
        for (std::size_t f = 0; f < a.values.size(); ++f) {
            bool inside = true;
            for (int q = 0; q < arity && inside; ++q)
                if (q != m) inside = sets[q][idx[q]];
            if (inside) c[idx[m]] += a.values[f];
            for (int q = arity - 1; q >= 0; --q) {
                if (++idx[q] < n) break;
                idx[q] = 0;
            }
        }
    };

    double best = 0.0;
    std::vector<double> c;
    for (int r = 0; r < restarts; ++r) {
        for (double sign : {1.0, -1.0}) {
            std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(r) * 2 + (sign < 0));
            std::bernoulli_distribution coin(0.5);
            std::vector<std::vector<char>> sets(arity, std::vector<char>(n, 1));
            if (r > 0)
                for (auto& s : sets)
                    for (auto& v : s) v = coin(rng);
            double cur = sign * objective(sets);
            for (int sweep = 0; sweep < 200; ++sweep) {
                bool improved = false;
                for (int m = 0; m < arity; ++m) {
                    coordinate_sums(sets, m, c);
                    double val = 0.0;
                    for (int j = 0; j < n; ++j) {
                        sets[m][j] = sign * c[j] > 0;
                        if (sets[m][j]) val += sign * c[j];
                    }
                    if (val > cur + 1e-15 * (1 + std::abs(cur))) improved = true;
                    cur = std::max(cur, val);
                }
                if (!improved) break;
            }
            best = std::max(best, sign * objective(sets));
        }
    }
    return best / std::pow(static_cast<double>(n), l + 1);
}

CutValue cut_norm(const DenseLevel& a, int restarts, std::uint64_t seed) {
    if (cut_exact_feasible(a.parts, a.order)) return {cut_norm_exact(a), true};
    return {cut_norm_heuristic(a, restarts, seed), false};
}

// ---------------------------------------------------------------- cut distance

double AlphaSequence::operator()(int order) const {
    if (!explicit_values.empty()) {
        if (order < 1 || order > static_cast<int>(explicit_values.size()))
            throw ConfigError("alpha list has no entry for order " + std::to_string(order));
        return explicit_values[order - 1];
    }
    return std::pow(ratio, order);
}

AlphaSequence AlphaSequence::parse(const std::string& spec) {
    AlphaSequence a;
    if (spec.empty()) return a;
    auto colon = spec.find(':');
    std::string kind = spec.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    try {
        if (kind == "geometric") {
            a.ratio = rest.empty() ? 0.5 : std::stod(rest);
            if (!(a.ratio > 0 && a.ratio < 1)) throw ParameterError("geometric ratio must lie in (0,1)");
        } else if (kind == "list") {
            std::stringstream ss(rest);
            std::string item;
            while (std::getline(ss, item, ',')) {
                double v = std::stod(item);
                if (!(v > 0)) throw ParameterError("alpha values must be positive");
                a.explicit_values.push_back(v);
            }
            if (a.explicit_values.empty()) throw ParameterError("empty alpha list");
        } else {
            throw ParameterError("alpha spec must be geometric:<r> or list:<a1,a2,..>");
        }
    } catch (const ParameterError&) {
        throw;
    } catch (const std::exception&) {
        throw ParameterError("malformed alpha spec '" + spec + "'");
    }
    return a;
}

std::string AlphaSequence::describe() const {
    std::ostringstream os;
    if (explicit_values.empty()) {
        os << "geometric:" << ratio;
    } else {
        os << "list:";
        for (std::size_t i = 0; i < explicit_values.size(); ++i) os << (i ? "," : "") << explicit_values[i];
    }
    return os.str();
}

namespace {

DenseLevel dense_on(const StepHypergraphon& s, int order, int grid) {
    DenseLevel d = s.dense_level(order);
    return grid == s.parts ? d : d.refined(grid / s.parts);
}

}  // namespace

DSquareResult d_square(const URHypergraphon& w, const URHypergraphon& wbar, const AlphaSequence& alpha, int restarts,
                       std::uint64_t seed) {
    if (!w.is_step() || !wbar.is_step()) throw ConfigError("d_square needs step hypergraphons");
    const auto& a = w.step();
    const auto& b = wbar.step();
    const int grid = std::lcm(a.parts, b.parts);
    std::vector<int> orders = a.active_orders();
    for (int l : b.active_orders()) orders.push_back(l);
    std::sort(orders.begin(), orders.end());
    orders.erase(std::unique(orders.begin(), orders.end()), orders.end());

    DSquareResult res;
    for (int l : orders) {
        DenseLevel diff = dense_on(a, l, grid) - dense_on(b, l, grid);
        CutValue c = cut_norm(diff, restarts, seed + static_cast<std::uint64_t>(l));
        double al = alpha(l);
        res.terms.push_back({l, al, c.value, c.exact});
        res.total += al * c.value;
    }
    return res;
}

PermResult delta_square_perm(const StepHypergraphon& w, const StepHypergraphon& wbar, const AlphaSequence& alpha) {
    const int n = w.parts;
    if (wbar.parts != n) throw ConfigError("delta-square-perm needs equal partitions");
    if (n > 8) throw ResourceError("delta-square-perm limited to at most 8 parts");
    std::vector<int> orders = w.active_orders();
    for (int l : wbar.active_orders()) orders.push_back(l);
    std::sort(orders.begin(), orders.end());
    orders.erase(std::unique(orders.begin(), orders.end()), orders.end());

    double cost = std::tgamma(n + 1.0), per = 0.0;
    for (int l : orders) {
        if (!cut_exact_feasible(n, l)) throw ResourceError("order " + std::to_string(l) + " too large for exact search");
        per += std::pow(2.0, n * (l - 1)) * (std::pow(n, l + 1) + std::pow(2.0, n) * n);
    }
    if (cost * per > 4e9) throw ResourceError("permutation search exceeds the work budget");

    std::vector<DenseLevel> da, db;
    for (int l : orders) {
        da.push_back(w.dense_level(l));
        db.push_back(wbar.dense_level(l));
    }
    std::vector<int> sigma(n);
    std::iota(sigma.begin(), sigma.end(), 0);
    PermResult out;
    out.best.total = std::numeric_limits<double>::infinity();
    do {
        DSquareResult r;
        for (std::size_t k = 0; k < orders.size(); ++k) {
            const int l = orders[k];
            DenseLevel perm(n, l);
            std::vector<int> idx(l + 1, 0), src(l + 1);
            for (std::size_t f = 0; f < perm.values.size(); ++f) {
                for (int m = 0; m <= l; ++m) src[m] = sigma[idx[m]];
                perm.values[f] = db[k].at(src);
                for (int m = l; m >= 0; --m) {
                    if (++idx[m] < n) break;
                    idx[m] = 0;
                }
            }
            double v = cut_norm_exact(da[k] - perm);
            r.terms.push_back({l, alpha(l), v, true});
            r.total += alpha(l) * v;
        }
        if (r.total < out.best.total) {
            out.best = r;
            out.permutation = sigma;
        }
    } while (std::next_permutation(sigma.begin(), sigma.end()));
    if (orders.empty()) out.best.total = 0.0;
    return out;
}

// ---------------------------------------------------------------- hypertrees

void DirectedHypertree::check() const {
    if (nodes < 1) throw ParameterError("hypertree needs at least one node");
    std::vector<char> seen(nodes, 0);
    seen[0] = 1;
    for (const auto& e : edges) {
        if (e.tail < 0 || e.tail >= nodes || !seen[e.tail])
            throw ParameterError("hyperedge tail " + std::to_string(e.tail + 1) + " not yet in the tree");
        if (e.heads.empty()) throw ParameterError("hyperedge without heads");
        for (int h : e.heads) {
            if (h < 0 || h >= nodes) throw ParameterError("head node out of range");
            if (seen[h]) throw ParameterError("head node " + std::to_string(h + 1) + " already in the tree");
            seen[h] = 1;
        }
    }
    for (int v = 0; v < nodes; ++v)
        if (!seen[v]) throw ParameterError("hypertree is not connected (node " + std::to_string(v + 1) + ")");
}

DirectedHypertree DirectedHypertree::parse(const std::string& spec) {
    DirectedHypertree t;
    int max_node = 1;
    std::stringstream ss(spec);
    std::string edge;
    try {
        while (std::getline(ss, edge, ';')) {
            if (edge.find_first_not_of(" \t") == std::string::npos) continue;
            auto colon = edge.find(':');
            if (colon == std::string::npos) throw ParameterError("hyperedge '" + edge + "' lacks ':'");
            Edge e;
            e.tail = std::stoi(edge.substr(0, colon)) - 1;
            std::stringstream hs(edge.substr(colon + 1));
            std::string h;
            while (std::getline(hs, h, ',')) e.heads.push_back(std::stoi(h) - 1);
            max_node = std::max(max_node, e.tail + 1);
            for (int v : e.heads) max_node = std::max(max_node, v + 1);
            t.edges.push_back(std::move(e));
        }
    } catch (const ParameterError&) {
        throw;
    } catch (const std::logic_error&) {
        throw ParameterError("malformed hypertree '" + spec + "'");
    }
    t.nodes = max_node;
    t.check();
    return t;
}

double hypertree_moment(const DirectedHypertree& tree, const URHypergraphon& w, const FiberedAtoms& mu,
                        const std::vector<int>& exponents, double budget) {
    tree.check();
    if (static_cast<int>(exponents.size()) != tree.nodes) throw ParameterError("one exponent per node required");
    const int n = mu.size();
    if (n < 1) throw ParameterError("empty fibered measure");
    double work = 0.0;
    for (const auto& e : tree.edges) work += std::pow(static_cast<double>(n), e.heads.size() + 1);
    if (work > budget) throw ResourceError("hypertree quadrature exceeds the budget");

    std::vector<std::vector<double>> msg(tree.nodes, std::vector<double>(n));
    for (int v = 0; v < tree.nodes; ++v)
        for (int f = 0; f < n; ++f) msg[v][f] = mu.fibers[f].moment(exponents[v]);

    // Heads only acquire children in later edges, so reverse order finalises them first.
    for (auto it = tree.edges.rbegin(); it != tree.edges.rend(); ++it) {
        const int l = static_cast<int>(it->heads.size());
        const double scale = std::pow(static_cast<double>(n), -l);
        std::vector<double> factor(n, 0.0);
        std::vector<int> g(l);
        std::vector<double> pt(l + 1);
        for (int f = 0; f < n; ++f) {
            pt[0] = (f + 0.5) / n;
            std::fill(g.begin(), g.end(), 0);
            double s = 0.0;
            while (true) {
                double prod = 1.0;
                for (int k = 0; k < l; ++k) {
                    pt[k + 1] = (g[k] + 0.5) / n;
                    prod *= msg[it->heads[k]][g[k]];
                }
                if (prod != 0.0) s += prod * w.evaluate(l, pt);
                int k = l - 1;
                while (k >= 0 && g[k] == n - 1) g[k--] = 0;
                if (k < 0) break;
                ++g[k];
            }
            factor[f] = s * scale;
        }
        for (int f = 0; f < n; ++f) msg[it->tail][f] *= factor[f];
    }
    double total = 0.0;
    for (double v : msg[0]) total += v;
    return total / n;
}

}  // namespace hgmf
