#include "hgmf/hypergraphon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hgmf/errors.hpp"

namespace hgmf {

namespace {

constexpr double kMaxCells = 5e7;
constexpr double kDiamTol = 1e-12;

double ipow(double b, int e) {
    double r = 1.0;
    for (int i = 0; i < std::abs(e); ++i) r *= b;
    return e < 0 ? 1.0 / r : r;
}

// Advance a non-decreasing tuple c[from..] within [lo, hi); false when exhausted.
bool next_sorted(std::vector<int>& c, int from, int hi) {
    int k = static_cast<int>(c.size()) - 1;
    while (k >= from && c[k] == hi - 1) --k;
    if (k < from) return false;
    ++c[k];
    for (int j = k + 1; j < static_cast<int>(c.size()); ++j) c[j] = c[k];
    return true;
}

bool next_tuple(std::vector<int>& c, int from, int hi) {
    int k = static_cast<int>(c.size()) - 1;
    while (k >= from && c[k] == hi - 1) c[k--] = 0;
    if (k < from) return false;
    ++c[k];
    return true;
}

}  // namespace

// ---------------------------------------------------------------- dense

DenseLevel::DenseLevel(int p, int l) : parts(p), order(l) {
    double n = ipow(p, l + 1);
    if (n > kMaxCells) throw ResourceError("dense level with " + std::to_string(n) + " cells exceeds budget");
    values.assign(static_cast<std::size_t>(n), 0.0);
}

std::size_t DenseLevel::flat(std::span<const int> idx) const {
    std::size_t f = 0;
    for (int i : idx) f = f * parts + i;
    return f;
}

DenseLevel DenseLevel::refined(int factor) const {
    DenseLevel r(parts * factor, order);
    std::vector<int> fine(order + 1, 0), coarse(order + 1);
    do {
        for (int k = 0; k <= order; ++k) coarse[k] = fine[k] / factor;
        r.at(fine) = at(coarse);
    } while (next_tuple(fine, 0, r.parts));
    return r;
}

DenseLevel operator-(const DenseLevel& a, const DenseLevel& b) {
    if (a.parts != b.parts || a.order != b.order) throw ConfigError("dense levels differ in shape");
    DenseLevel r = a;
    for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] -= b.values[i];
    return r;
}

// ---------------------------------------------------------------- step

std::vector<int> StepHypergraphon::active_orders() const {
    std::vector<int> o;
    for (const auto& t : levels)
        if (!t.empty()) o.push_back(t.order());
    return o;
}

double StepHypergraphon::cell_value(int order, std::span<const int> cells) const {
    if (order < 1 || order > max_order()) return 0.0;
    return levels[order - 1].get(cells);
}

double StepHypergraphon::evaluate(int order, std::span<const double> point) const {
    if (order < 1 || order > max_order()) return 0.0;
    if (static_cast<int>(point.size()) != order + 1) throw ConfigError("point has the wrong arity");
    int buf[16];
    std::vector<int> big;
    int* c = buf;
    if (point.size() > 16) {
        big.resize(point.size());
        c = big.data();
    }
    for (std::size_t k = 0; k < point.size(); ++k)
        c[k] = std::clamp(static_cast<int>(std::floor(point[k] * parts)), 0, parts - 1);
    return levels[order - 1].get({c, point.size()});
}

bool StepHypergraphon::level_symmetric(int order) const {
    if (order < 1 || order > max_order()) return true;
    const auto& t = levels[order - 1];
    if (t.symmetry() == Symmetry::Full) return true;
    for (std::size_t e = 0; e < t.size(); ++e) {
        std::vector<int> p(t.key(e).begin(), t.key(e).end());
        std::sort(p.begin(), p.end());
        do
            if (t.get(p) != t.weight_at(e)) return false;
        while (std::next_permutation(p.begin(), p.end()));
    }
    return true;
}

DenseLevel StepHypergraphon::dense_level(int order) const {
    DenseLevel d(parts, order);
    if (order < 1 || order > max_order()) return d;
    const auto& t = levels[order - 1];
    for (std::size_t e = 0; e < t.size(); ++e) {
        std::vector<int> p(t.key(e).begin(), t.key(e).end());
        if (t.symmetry() == Symmetry::Full) {
            do d.at(p) = t.weight_at(e);
            while (std::next_permutation(p.begin(), p.end()));
        } else {
            d.at(p) = t.weight_at(e);
        }
    }
    return d;
}

StepHypergraphon step_from_hypergraph(const Hypergraph& h) {
    StepHypergraphon s;
    s.parts = h.num_nodes();
    for (const auto& t : h.tensors()) {
        TensorBuilder b(t.order(), t.symmetry());
        const double scale = ipow(h.num_nodes(), t.order());
        for (std::size_t e = 0; e < t.size(); ++e) b.add(t.key(e), scale * t.weight_at(e));
        s.levels.push_back(b.build());
    }
    s.sup_bound = scaling_bound(h);
    return s;
}

StepHypergraphon step_from_dense(const std::vector<DenseLevel>& dense) {
    StepHypergraphon s;
    if (dense.empty()) return s;
    s.parts = dense.front().parts;
    int max_order = 0;
    for (const auto& d : dense) {
        if (d.parts != s.parts) throw ConfigError("dense levels must share one partition");
        max_order = std::max(max_order, d.order);
    }
    for (int l = 1; l <= max_order; ++l) s.levels.emplace_back(l, Symmetry::Full);
    for (const auto& d : dense) {
        TensorBuilder b(d.order, Symmetry::Full);
        std::vector<int> idx(d.order + 1, 0);
        std::size_t nonzero = 0;
        do {
            double v = d.at(idx);
            if (v < 0) throw ValidationError("negative hypergraphon value");
            if (v != 0) {
                b.add(idx, v);
                ++nonzero;
            }
            s.sup_bound = std::max(s.sup_bound, v);
        } while (next_tuple(idx, 0, d.parts));
        AdjacencyTensor t = b.build();  // throws on conflicting permutations
        double expected = 0;
        for (std::size_t e = 0; e < t.size(); ++e) expected += distinct_permutations(t.key(e));
        if (static_cast<double>(nonzero) != expected)
            throw ValidationError("order " + std::to_string(d.order) + " block is not symmetric");
        s.levels[d.order - 1] = std::move(t);
    }
    return s;
}

// ---------------------------------------------------------------- analytic families

AnalyticHypergraphon homogeneous_hypergraphon(double theta, const std::vector<int>& orders) {
    if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("theta must lie in (0,1]");
    AnalyticHypergraphon a;
    a.name = "homogeneous";
    for (int l : orders) {
        AnalyticLevel lv;
        lv.order = l;
        lv.sup_bound = 1.0;
        lv.fn = [theta](std::span<const double> x) {
            auto [mn, mx] = std::minmax_element(x.begin(), x.end());
            return (*mx - *mn) <= theta + kDiamTol ? 1.0 : 0.0;
        };
        lv.range = [theta](std::span<const double> lo, std::span<const double> hi) {
            double max_diam = *std::max_element(hi.begin(), hi.end()) - *std::min_element(lo.begin(), lo.end());
            double min_diam =
                std::max(0.0, *std::max_element(lo.begin(), lo.end()) - *std::min_element(hi.begin(), hi.end()));
            if (max_diam <= theta + kDiamTol) return std::pair{1.0, 1.0};
            if (min_diam > theta + kDiamTol) return std::pair{0.0, 0.0};
            return std::pair{0.0, 1.0};
        };
        a.levels.push_back(std::move(lv));
    }
    return a;
}

AnalyticHypergraphon balanced_hypergraphon(std::function<double(double)> f, double f_slope,
                                           const std::vector<int>& orders) {
    AnalyticHypergraphon a;
    a.name = "balanced";
    const double sup = f(0.0);
    for (int l : orders) {
        AnalyticLevel lv;
        lv.order = l;
        lv.sup_bound = sup;
        lv.lipschitz = f_slope / std::sqrt(l + 1.0);
        lv.fn = [f](std::span<const double> x) {
            double m = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
            return f(std::abs(m - 0.5));
        };
        lv.range = [f](std::span<const double> lo, std::span<const double> hi) {
            double mlo = std::accumulate(lo.begin(), lo.end(), 0.0) / lo.size() - 0.5;
            double mhi = std::accumulate(hi.begin(), hi.end(), 0.0) / hi.size() - 0.5;
            double dmin = (mlo <= 0 && mhi >= 0) ? 0.0 : std::min(std::abs(mlo), std::abs(mhi));
            double dmax = std::max(std::abs(mlo), std::abs(mhi));
            return std::pair{f(dmax), f(dmin)};
        };
        a.levels.push_back(std::move(lv));
    }
    return a;
}

AnalyticHypergraphon balanced_quadratic_hypergraphon(const std::vector<int>& orders) {
    auto a = balanced_hypergraphon([](double x) { return 4.0 * (x - 0.5) * (x - 0.5); }, 4.0, orders);
    a.name = "balanced_quadratic";
    return a;
}

AnalyticHypergraphon constant_hypergraphon(double c, const std::vector<int>& orders) {
    if (c < 0) throw ParameterError("hypergraphon values must be non-negative");
    AnalyticHypergraphon a;
    a.name = "constant";
    for (int l : orders) {
        AnalyticLevel lv;
        lv.order = l;
        lv.sup_bound = c;
        lv.lipschitz = 0.0;
        lv.fn = [c](std::span<const double>) { return c; };
        lv.range = [c](std::span<const double>, std::span<const double>) { return std::pair{c, c}; };
        a.levels.push_back(std::move(lv));
    }
    return a;
}

// ---------------------------------------------------------------- union

std::vector<int> URHypergraphon::active_orders() const {
    if (is_step()) return step().active_orders();
    std::vector<int> o;
    for (const auto& lv : analytic().levels) o.push_back(lv.order);
    std::sort(o.begin(), o.end());
    return o;
}

bool URHypergraphon::is_active(int order) const {
    auto o = active_orders();
    return std::find(o.begin(), o.end(), order) != o.end();
}

double URHypergraphon::sup_bound() const {
    if (is_step()) return step().sup_bound;
    double s = 0;
    for (const auto& lv : analytic().levels) s = std::max(s, lv.sup_bound);
    return s;
}

const AnalyticLevel* URHypergraphon::analytic_level(int order) const {
    if (is_step()) return nullptr;
    for (const auto& lv : analytic().levels)
        if (lv.order == order) return &lv;
    return nullptr;
}

double URHypergraphon::evaluate(int order, std::span<const double> point) const {
    if (is_step()) return step().evaluate(order, point);
    const AnalyticLevel* lv = analytic_level(order);
    if (!lv) return 0.0;
    if (static_cast<int>(point.size()) != order + 1) throw ConfigError("point has the wrong arity");
    return lv->fn(point);
}

// ---------------------------------------------------------------- discretization

namespace {

// Value on the cell box when the level is known to be constant there.
std::optional<double> constant_on_cell(const URHypergraphon& w, int order, std::span<const int> cells, int grid,
                                       std::vector<double>& lo, std::vector<double>& hi) {
    if (w.is_step()) {
        const auto& s = w.step();
        if (grid % s.parts != 0) return std::nullopt;
        std::vector<int> c(cells.begin(), cells.end());
        for (int& v : c) v /= grid / s.parts;
        return s.cell_value(order, c);
    }
    const AnalyticLevel* lv = w.analytic_level(order);
    if (!lv) return 0.0;
    if (!lv->range) return std::nullopt;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        lo[k] = static_cast<double>(cells[k]) / grid;
        hi[k] = static_cast<double>(cells[k] + 1) / grid;
    }
    auto [a, b] = lv->range(lo, hi);
    if (a == b) return a;
    return std::nullopt;
}

// Midpoint-rule average of g over the cell box with r nodes per axis.
template <class G>
double cell_mean(std::span<const int> cells, int grid, int r, G&& g) {
    const std::size_t a = cells.size();
    std::vector<int> q(a, 0);
    std::vector<double> pt(a);
    double sum = 0.0;
    do {
        for (std::size_t k = 0; k < a; ++k) pt[k] = (cells[k] + (q[k] + 0.5) / r) / grid;
        sum += g(std::span<const double>(pt));
    } while (next_tuple(q, 0, r));
    return sum / ipow(r, static_cast<int>(a));
}

Hypergraph discretize(const URHypergraphon& w, int n, const std::function<double(int, std::span<const int>)>& value) {
    if (n < 2) throw ParameterError("discretization needs N >= 2");
    std::vector<int> orders;
    for (int l : w.active_orders())
        if (l <= n - 1) orders.push_back(l);
    int max_rank = orders.empty() ? 2 : orders.back() + 1;
    std::vector<AdjacencyTensor> tensors;
    for (int l = 1; l < max_rank; ++l) {
        TensorBuilder b(l, Symmetry::Full);
        if (std::find(orders.begin(), orders.end(), l) != orders.end()) {
            double count = 1;
            for (int i = 1; i <= l + 1; ++i) count = count * (n - l - 1 + i) / i;
            if (count > kMaxCells) throw ResourceError("discretization exceeds the hyperedge budget");
            const double scale = ipow(n, -l);
            for_each_combination(n, l + 1, [&](std::span<const int> c) { b.add(c, scale * value(l, c)); });
        }
        tensors.push_back(b.build());
    }
    return Hypergraph(n, max_rank, std::move(tensors));
}

}  // namespace

Hypergraph discretize_pointwise(const URHypergraphon& w, int n, double offset) {
    if (!(offset >= 0.0 && offset < 1.0)) throw ParameterError("grid offset must lie in [0,1)");
    if (n >= 2 && w.is_step() && n % w.step().parts != 0)
        throw ParameterError("step hypergraphon parts must divide N");
    std::vector<double> pt;
    return discretize(w, n, [&](int l, std::span<const int> c) {
        pt.resize(l + 1);
        for (int k = 0; k <= l; ++k) pt[k] = (c[k] + offset) / n;
        return w.evaluate(l, pt);
    });
}

Hypergraph discretize_l1(const URHypergraphon& w, int n, int nodes) {
    if (nodes < 1) throw ParameterError("need at least one quadrature node per axis");
    std::vector<double> lo, hi;
    return discretize(w, n, [&](int l, std::span<const int> c) {
        lo.resize(l + 1);
        hi.resize(l + 1);
        if (auto v = constant_on_cell(w, l, c, n, lo, hi)) return *v;
        return cell_mean(c, n, nodes, [&](std::span<const double> p) { return w.evaluate(l, p); });
    });
}

DenseLevel cell_averages(const URHypergraphon& w, int order, int parts, int nodes) {
    if (parts < 1 || nodes < 1) throw ParameterError("parts and nodes must be positive");
    if (ipow(static_cast<double>(parts), order + 1) > kMaxCells) throw ResourceError("dense level too large");
    DenseLevel d(parts, order);
    std::vector<int> c(order + 1, 0);
    std::vector<double> lo(order + 1), hi(order + 1);
    do {
        double v;
        if (auto k = constant_on_cell(w, order, c, parts, lo, hi))
            v = *k;
        else
            v = cell_mean(c, parts, nodes, [&](std::span<const double> p) { return w.evaluate(order, p); });
        d.at(c) = v;
    } while (next_tuple(c, 0, parts));
    return d;
}

double l1_level_distance(const URHypergraphon& a, const URHypergraphon& b, int order, int refinement) {
    if (refinement < 1) throw ParameterError("refinement must be >= 1");
    long grid = 1;
    for (const URHypergraphon* w : {&a, &b})
        if (w->is_step()) grid = std::lcm(grid, static_cast<long>(w->step().parts));
    if (ipow(static_cast<double>(grid), order + 1) > kMaxCells)
        throw ResourceError("common grid too large for L1 quadrature");
    const int m = static_cast<int>(grid);
    const bool sym = (!a.is_step() || a.step().level_symmetric(order)) &&
                     (!b.is_step() || b.step().level_symmetric(order));
    const double vol = ipow(1.0 / m, order + 1);

    std::vector<double> partial(m, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (int c0 = 0; c0 < m; ++c0) {
        std::vector<int> c(order + 1, sym ? c0 : 0);
        c[0] = c0;
        std::vector<double> lo(order + 1), hi(order + 1);
        double acc = 0.0;
        do {
            double mult = sym ? distinct_permutations(c) : 1.0;
            auto va = constant_on_cell(a, order, c, m, lo, hi);
            auto vb = constant_on_cell(b, order, c, m, lo, hi);
            double cell;
            if (va && vb) {
                cell = std::abs(*va - *vb);
            } else {
                cell = cell_mean(c, m, refinement, [&](std::span<const double> p) {
                    double x = va ? *va : a.evaluate(order, p);
                    double y = vb ? *vb : b.evaluate(order, p);
                    return std::abs(x - y);
                });
            }
            acc += mult * cell;
        } while (sym ? next_sorted(c, 1, m) : next_tuple(c, 1, m));
        partial[c0] = acc * vol;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

// ---------------------------------------------------------------- text format

std::string step_to_text(const StepHypergraphon& w) {
    std::ostringstream os;
    auto orders = w.active_orders();
    os << "hypergraphon v1 parts=" << w.parts << " orders=";
    for (std::size_t i = 0; i < orders.size(); ++i) os << (i ? "," : "") << orders[i];
    os << "\n";
    char buf[40];
    for (int l : orders) {
        os << "# order " << l << "\n";
        DenseLevel d = w.dense_level(l);
        for (std::size_t i = 0; i < d.values.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", d.values[i]);
            os << buf << ((i + 1) % w.parts == 0 ? '\n' : ' ');
        }
    }
    return os.str();
}

void save_step(const StepHypergraphon& w, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << step_to_text(w);
}

StepHypergraphon step_from_text(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    int parts = -1;
    std::vector<int> orders;
    bool header = false;
    while (!header && std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ls(line);
        std::string a, b, c, d;
        if (!(ls >> a)) continue;
        if (!(ls >> b >> c >> d) || a != "hypergraphon" || b != "v1" || c.rfind("parts=", 0) != 0 ||
            d.rfind("orders=", 0) != 0)
            throw ParseError("expected header 'hypergraphon v1 parts=<N> orders=<list>'", lineno);
        try {
            parts = std::stoi(c.substr(6));
            std::string list = d.substr(7);
            std::stringstream ss(list);
            std::string item;
            while (std::getline(ss, item, ','))
                if (!item.empty()) orders.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ParseError("malformed header value", lineno);
        }
        header = true;
    }
    if (!header || parts < 1) throw ParseError("missing or invalid header", lineno);
    for (int l : orders)
        if (l < 1) throw ParseError("orders must be >= 1", lineno);

    std::vector<DenseLevel> dense;
    for (int l : orders) dense.emplace_back(parts, l);
    std::size_t lvl = 0, pos = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            if (lvl >= dense.size()) throw ParseError("more values than the declared orders need", lineno);
            double v;
            try {
                std::size_t used;
                v = std::stod(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ParseError("malformed value '" + tok + "'", lineno);
            }
            if (v < 0 || !std::isfinite(v)) throw ParseError("values must be finite and non-negative", lineno);
            dense[lvl].values[pos++] = v;
            if (pos == dense[lvl].values.size()) {
                ++lvl;
                pos = 0;
            }
        }
    }
    if (lvl != dense.size()) throw ParseError("value block truncated", lineno);
    try {
        return step_from_dense(dense);
    } catch (const ValidationError& e) {
        throw ParseError(e.what(), 0);
    }
}

StepHypergraphon load_step(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path, 0);
    std::stringstream ss;
    ss << f.rdbuf();
    return step_from_text(ss.str());
}

}  // namespace hgmf
