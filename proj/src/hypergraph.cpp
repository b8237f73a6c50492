#include "hgmf/hypergraph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hgmf/errors.hpp"

namespace hgmf {

namespace {

constexpr double kMaxEntries = 5e7;

bool key_less(const int* a, const int* b, int n) {
    return std::lexicographical_compare(a, a + n, b, b + n);
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

void check_budget(double count, const char* what) {
    if (count > kMaxEntries) {
        throw ResourceError(std::string(what) + ": " + std::to_string(count) +
                            " hyperedges exceed the storage budget");
    }
}

}  // namespace

// ---------------------------------------------------------------- tensor

long AdjacencyTensor::find(std::span<const int> canon) const {
    const int a = arity();
    std::size_t lo = 0, hi = weights_.size();
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (key_less(keys_.data() + mid * a, canon.data(), a))
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo < weights_.size() && std::equal(canon.begin(), canon.end(), keys_.data() + lo * a))
        return static_cast<long>(lo);
    return -1;
}

double AdjacencyTensor::get(std::span<const int> idx) const {
    if (static_cast<int>(idx.size()) != arity())
        throw ConfigError("tensor of order " + std::to_string(order_) + " queried with " +
                          std::to_string(idx.size()) + " indices");
    long e;
    if (sym_ == Symmetry::Full) {
        int buf[16];
        std::vector<int> big;
        int* p = buf;
        if (idx.size() > 16) {
            big.resize(idx.size());
            p = big.data();
        }
        std::copy(idx.begin(), idx.end(), p);
        std::sort(p, p + idx.size());
        e = find({p, idx.size()});
    } else {
        e = find(idx);
    }
    return e < 0 ? 0.0 : weights_[static_cast<std::size_t>(e)];
}

double AdjacencyTensor::max_weight() const {
    double m = 0.0;
    for (double w : weights_) m = std::max(m, w);
    return m;
}

void TensorBuilder::add(std::span<const int> idx, double w) {
    if (static_cast<int>(idx.size()) != order_ + 1)
        throw ConfigError("wrong index count for order " + std::to_string(order_));
    if (w == 0.0) return;
    std::size_t at = keys_.size();
    keys_.insert(keys_.end(), idx.begin(), idx.end());
    if (sym_ == Symmetry::Full) std::sort(keys_.begin() + static_cast<long>(at), keys_.end());
    weights_.push_back(w);
}

AdjacencyTensor TensorBuilder::build() {
    const int a = order_ + 1;
    const std::size_t n = weights_.size();
    AdjacencyTensor t(order_, sym_);

    bool sorted = true;
    for (std::size_t e = 1; e < n && sorted; ++e)
        if (!key_less(keys_.data() + (e - 1) * a, keys_.data() + e * a, a)) sorted = false;

    if (sorted) {
        t.keys_ = std::move(keys_);
        t.weights_ = std::move(weights_);
    } else {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::stable_sort(perm.begin(), perm.end(), [&](std::size_t x, std::size_t y) {
            return key_less(keys_.data() + x * a, keys_.data() + y * a, a);
        });
        t.keys_.reserve(keys_.size());
        t.weights_.reserve(n);
        for (std::size_t k = 0; k < n; ++k) {
            const int* key = keys_.data() + perm[k] * a;
            double w = weights_[perm[k]];
            if (!t.weights_.empty() &&
                std::equal(key, key + a, t.keys_.end() - a)) {
                if (t.weights_.back() != w) {
                    std::string s;
                    for (int i = 0; i < a; ++i) s += (i ? " " : "") + std::to_string(key[i] + 1);
                    throw ValidationError("conflicting weights for hyperedge (" + s + ")");
                }
                continue;
            }
            t.keys_.insert(t.keys_.end(), key, key + a);
            t.weights_.push_back(w);
        }
    }
    keys_.clear();
    weights_.clear();
    return t;
}

// ---------------------------------------------------------------- hypergraph

Hypergraph::Hypergraph(int num_nodes, int max_rank, Symmetry sym) : n_(num_nodes), max_rank_(max_rank) {
    if (num_nodes < 0) throw ParameterError("negative node count");
    if (max_rank < 1) throw ParameterError("max_rank must be at least 1");
    for (int l = 1; l < max_rank; ++l) tensors_.emplace_back(l, sym);
}

Hypergraph::Hypergraph(int num_nodes, int max_rank, std::vector<AdjacencyTensor> tensors)
    : n_(num_nodes), max_rank_(max_rank), tensors_(std::move(tensors)) {
    if (static_cast<int>(tensors_.size()) != max_rank - 1)
        throw ConfigError("expected one tensor per order 1..max_rank-1");
    for (int l = 1; l < max_rank; ++l)
        if (tensors_[l - 1].order() != l) throw ConfigError("tensor orders out of sequence");
}

int Hypergraph::rank() const {
    for (int l = max_rank_ - 1; l >= 1; --l)
        if (!tensors_[l - 1].empty()) return l + 1;
    return 0;
}

bool Hypergraph::fully_symmetric() const {
    return std::all_of(tensors_.begin(), tensors_.end(),
                       [](const AdjacencyTensor& t) { return t.symmetry() == Symmetry::Full; });
}

const AdjacencyTensor& Hypergraph::tensor(int order) const {
    if (!has_order(order))
        throw ConfigError("order " + std::to_string(order) + " not present (max_rank " +
                          std::to_string(max_rank_) + ")");
    return tensors_[order - 1];
}

std::vector<int> Hypergraph::active_orders() const {
    std::vector<int> out;
    for (const auto& t : tensors_)
        if (!t.empty()) out.push_back(t.order());
    return out;
}

double Hypergraph::weight(std::span<const int> idx) const {
    int l = static_cast<int>(idx.size()) - 1;
    if (!has_order(l)) return 0.0;
    return tensors_[l - 1].get(idx);
}

Hypergraph Hypergraph::restricted(const std::vector<int>& orders) const {
    Hypergraph h = *this;
    for (auto& t : h.tensors_)
        if (std::find(orders.begin(), orders.end(), t.order()) == orders.end())
            t = AdjacencyTensor(t.order(), t.symmetry());
    return h;
}

// ---------------------------------------------------------------- builders

void for_each_combination(int n, int k, const std::function<void(std::span<const int>)>& f) {
    if (k < 0 || k > n) return;
    std::vector<int> c(k);
    std::iota(c.begin(), c.end(), 0);
    if (k == 0) {
        f(c);
        return;
    }
    while (true) {
        f(c);
        int i = k - 1;
        while (i >= 0 && c[i] == n - k + i) --i;
        if (i < 0) break;
        ++c[i];
        for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
    }
}

Hypergraph build_homogeneous(int n, double theta, int max_rank) {
    if (n < 1) throw ParameterError("N must be positive");
    if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("theta must lie in (0,1]");
    if (max_rank < 2 || max_rank > n) throw ParameterError("max_rank must lie in [2, N]");

    const int window = static_cast<int>(std::floor(theta * n + 1e-9));
    std::vector<AdjacencyTensor> tensors;
    for (int l = 1; l < max_rank; ++l) {
        check_budget(n * binomial(std::min(window, n - 1), l), "build_homogeneous");
        TensorBuilder b(l, Symmetry::Full);
        const double w = std::pow(static_cast<double>(n), -l);
        std::vector<int> key(l + 1);
        for (int a0 = 0; a0 < n; ++a0) {
            int span = std::min(window, n - 1 - a0);
            key[0] = a0;
            for_each_combination(span, l, [&](std::span<const int> c) {
                for (int k = 0; k < l; ++k) key[k + 1] = a0 + 1 + c[k];
                b.add(key, w);
            });
        }
        tensors.push_back(b.build());
    }
    return Hypergraph(n, max_rank, std::move(tensors));
}

Hypergraph build_balanced(int n, const std::function<double(double)>& f, int max_rank) {
    if (n < 1) throw ParameterError("N must be positive");
    if (max_rank < 2 || max_rank > n) throw ParameterError("max_rank must lie in [2, N]");

    std::vector<AdjacencyTensor> tensors;
    for (int l = 1; l < max_rank; ++l) {
        check_budget(binomial(n, l + 1), "build_balanced");
        TensorBuilder b(l, Symmetry::Full);
        const double scale = std::pow(static_cast<double>(n), -l);
        for_each_combination(n, l + 1, [&](std::span<const int> c) {
            double mean = 0.0;
            for (int a : c) mean += a;
            mean /= (l + 1);
            double v = f(std::abs((mean - 0.5 * (n - 1)) / n));
            if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("balanced f must be finite and non-negative");
            b.add(c, scale * v);
        });
        tensors.push_back(b.build());
    }
    return Hypergraph(n, max_rank, std::move(tensors));
}

Hypergraph build_clique_lift(const std::vector<int>& adj, int n, int max_rank) {
    if (static_cast<int>(adj.size()) != n * n) throw ParameterError("adjacency must be N x N");
    if (max_rank < 2 || max_rank > n) throw ParameterError("max_rank must lie in [2, N]");
    for (int i = 0; i < n; ++i) {
        if (adj[i * n + i] != 0) throw ValidationError("adjacency has a nonzero diagonal entry");
        for (int j = 0; j < n; ++j) {
            if (adj[i * n + j] != 0 && adj[i * n + j] != 1) throw ValidationError("adjacency must be 0/1");
            if (adj[i * n + j] != adj[j * n + i])
                throw ValidationError("adjacency not symmetric at (" + std::to_string(i + 1) + "," +
                                      std::to_string(j + 1) + ")");
        }
    }

    std::vector<TensorBuilder> builders;
    for (int l = 1; l < max_rank; ++l) builders.emplace_back(l, Symmetry::Full);

    std::vector<int> clique;
    double count = 0;
    std::function<void(int)> grow = [&](int next) {
        for (int v = next; v < n; ++v) {
            bool ok = true;
            for (int u : clique)
                if (!adj[u * n + v]) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            clique.push_back(v);
            int l = static_cast<int>(clique.size()) - 1;
            if (l >= 1) {
                check_budget(++count, "build_clique_lift");
                builders[l - 1].add(clique, std::pow(static_cast<double>(n), -l));
            }
            if (static_cast<int>(clique.size()) < max_rank) grow(v + 1);
            clique.pop_back();
        }
    };
    grow(0);

    std::vector<AdjacencyTensor> tensors;
    for (auto& b : builders) tensors.push_back(b.build());
    return Hypergraph(n, max_rank, std::move(tensors));
}

Hypergraph build_all_to_all(int n, int max_rank) { return build_homogeneous(n, 1.0, max_rank); }

double scaling_bound(const Hypergraph& h) {
    double w = 0.0;
    for (const auto& t : h.tensors())
        w = std::max(w, std::pow(static_cast<double>(h.num_nodes()), t.order()) * t.max_weight());
    return w;
}

// ---------------------------------------------------------------- validation

double distinct_permutations(std::span<const int> v) {
    std::vector<int> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    double r = std::tgamma(static_cast<double>(s.size()) + 1.0);
    for (std::size_t i = 0; i < s.size();) {
        std::size_t j = i;
        while (j < s.size() && s[j] == s[i]) ++j;
        r /= std::tgamma(static_cast<double>(j - i) + 1.0);
        i = j;
    }
    return std::round(r);
}

std::size_t ValidationReport::count(Violation::Kind k) const {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(), [k](const Violation& v) { return v.kind == k; }));
}

ValidationReport validate(const Hypergraph& h) {
    ValidationReport rep;
    for (const auto& t : h.tensors()) {
        for (std::size_t e = 0; e < t.size(); ++e) {
            std::vector<int> key(t.key(e).begin(), t.key(e).end());
            double w = t.weight_at(e);

            std::vector<int> sorted = key;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                rep.violations.push_back({Violation::Loop, t.order(), key, "repeated index"});

            std::vector<int> heads(key.begin() + 1, key.end());
            std::sort(heads.begin(), heads.end());
            do {
                std::vector<int> q{key[0]};
                q.insert(q.end(), heads.begin(), heads.end());
                double v = t.get(q);
                if (v != w) {
                    rep.violations.push_back({Violation::HeadSymmetry, t.order(), key, "head permutation differs"});
                    break;
                }
            } while (std::next_permutation(heads.begin(), heads.end()));

            do {
                double v = t.get(sorted);
                if (v != w) {
                    rep.violations.push_back({Violation::FullSymmetry, t.order(), key, "index permutation differs"});
                    break;
                }
            } while (std::next_permutation(sorted.begin(), sorted.end()));
        }
    }
    return rep;
}

// ---------------------------------------------------------------- text format

namespace {

std::string fmt_weight(double w) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", w);
    return buf;
}

template <class T>
bool parse_num(std::string_view s, T& out) {
    auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace

std::string to_text(const Hypergraph& h) {
    std::ostringstream os;
    bool sym = h.fully_symmetric();
    os << "hypergraph v1 N=" << h.num_nodes() << " max_rank=" << h.max_rank() << " symmetric=" << (sym ? 1 : 0)
       << "\n";
    for (const auto& t : h.tensors()) {
        for (std::size_t e = 0; e < t.size(); ++e) {
            auto k = t.key(e);
            auto emit = [&](std::span<const int> idx) {
                os << t.order();
                for (int i : idx) os << ' ' << (i + 1);
                os << ' ' << fmt_weight(t.weight_at(e)) << '\n';
            };
            if (sym || t.symmetry() == Symmetry::None) {
                emit(k);
            } else {
                std::vector<int> p(k.begin(), k.end());
                do emit(p);
                while (std::next_permutation(p.begin(), p.end()));
            }
        }
    }
    return os.str();
}

void save(const Hypergraph& h, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << to_text(h);
}

Hypergraph from_text(const std::string& text, bool strict) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    int n = -1, max_rank = -1, sym = -1;

    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok.size() != 5 || tok[0] != "hypergraph" || tok[1] != "v1")
            throw ParseError("expected header 'hypergraph v1 N=.. max_rank=.. symmetric=..'", lineno);
        for (int k = 2; k < 5; ++k) {
            auto eq = tok[k].find('=');
            if (eq == std::string_view::npos) throw ParseError("malformed header field", lineno);
            auto key = tok[k].substr(0, eq);
            auto val = tok[k].substr(eq + 1);
            int v;
            if (!parse_num(val, v)) throw ParseError("malformed header value", lineno);
            if (key == "N") n = v;
            else if (key == "max_rank") max_rank = v;
            else if (key == "symmetric") sym = v;
            else throw ParseError("unknown header field '" + std::string(key) + "'", lineno);
        }
        break;
    }
    if (n < 1 || max_rank < 1 || (sym != 0 && sym != 1))
        throw ParseError("missing or invalid header", lineno);
    if (max_rank > n) throw ParseError("max_rank exceeds N", lineno);

    const Symmetry mode = sym ? Symmetry::Full : Symmetry::None;
    std::vector<TensorBuilder> builders;
    for (int l = 1; l < max_rank; ++l) builders.emplace_back(l, mode);

    std::vector<int> idx;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto tok = split_ws(line);
        if (tok.empty()) continue;
        int l;
        if (!parse_num(tok[0], l)) throw ParseError("malformed order", lineno);
        if (l < 1 || l >= max_rank) throw ParseError("order " + std::to_string(l) + " outside 1..max_rank-1", lineno);
        if (static_cast<int>(tok.size()) != l + 3)
            throw ParseError("expected " + std::to_string(l + 1) + " indices and a weight", lineno);
        idx.assign(l + 1, 0);
        for (int k = 0; k <= l; ++k) {
            int v;
            if (!parse_num(tok[1 + k], v)) throw ParseError("malformed index", lineno);
            if (v < 1 || v > n) throw ParseError("index " + std::to_string(v) + " out of range", lineno);
            idx[k] = v - 1;
        }
        double w;
        if (!parse_num(tok[l + 2], w) || !std::isfinite(w)) throw ParseError("malformed weight", lineno);
        if (w < 0.0) throw ParseError("negative weight", lineno);
        if (strict) {
            std::vector<int> s = idx;
            std::sort(s.begin(), s.end());
            if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw ParseError("loop (repeated index)", lineno);
        }
        try {
            builders[l - 1].add(idx, w);
        } catch (const std::exception& e) {
            throw ParseError(e.what(), lineno);
        }
    }

    std::vector<AdjacencyTensor> tensors;
    for (auto& b : builders) {
        try {
            tensors.push_back(b.build());
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), 0);
        }
    }
    return Hypergraph(n, max_rank, std::move(tensors));
}

Hypergraph load(const std::string& path, bool strict) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path, 0);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_text(ss.str(), strict);
}

}  // namespace hgmf
