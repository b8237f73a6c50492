#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hgmf {

// Storage convention of an order-l tensor.
//   Full: one canonical (sorted) key per hyperedge, value shared by all orderings.
//   None: every ordered (i, j1..jl) stored as given.
enum class Symmetry { Full, None };

// Sparse (l+1)-index weight tensor. Indices are 0-based. Entries with zero
// weight are never stored. Immutable once built; see TensorBuilder.
class AdjacencyTensor {
public:
    AdjacencyTensor() = default;
    AdjacencyTensor(int order, Symmetry sym) : order_(order), sym_(sym) {}

    int order() const { return order_; }
    int arity() const { return order_ + 1; }
    Symmetry symmetry() const { return sym_; }
    std::size_t size() const { return weights_.size(); }
    bool empty() const { return weights_.empty(); }

    std::span<const int> key(std::size_t e) const {
        return {keys_.data() + e * static_cast<std::size_t>(arity()), static_cast<std::size_t>(arity())};
    }
    double weight_at(std::size_t e) const { return weights_[e]; }
    const std::vector<double>& weights() const { return weights_; }

    // Value at an arbitrary ordered index tuple.
    double get(std::span<const int> idx) const;

    // Largest stored weight (0 when empty).
    double max_weight() const;

    bool operator==(const AdjacencyTensor& o) const = default;

private:
    friend class TensorBuilder;
    long find(std::span<const int> canon) const;

    int order_ = 1;
    Symmetry sym_ = Symmetry::Full;
    std::vector<int> keys_;
    std::vector<double> weights_;
};

class TensorBuilder {
public:
    TensorBuilder(int order, Symmetry sym) : order_(order), sym_(sym) {}

    // Adds (or repeats) an entry. Full mode sorts the key. Zero weights are dropped.
    void add(std::span<const int> idx, double w);
    void add(std::initializer_list<int> idx, double w) {
        std::vector<int> v(idx);
        add(std::span<const int>(v), w);
    }

    // Sorts and merges. Repeated keys with different weights throw ValidationError.
    AdjacencyTensor build();

private:
    int order_;
    Symmetry sym_;
    std::vector<int> keys_;
    std::vector<double> weights_;
};

// N nodes plus one tensor for each order l = 1..max_rank-1.
class Hypergraph {
public:
    Hypergraph() = default;
    Hypergraph(int num_nodes, int max_rank, Symmetry sym = Symmetry::Full);
    Hypergraph(int num_nodes, int max_rank, std::vector<AdjacencyTensor> tensors);

    int num_nodes() const { return n_; }
    int max_rank() const { return max_rank_; }
    // Largest hyperedge cardinality carrying a nonzero weight (0 if none).
    int rank() const;
    bool fully_symmetric() const;

    bool has_order(int order) const { return order >= 1 && order <= max_rank_ - 1; }
    const AdjacencyTensor& tensor(int order) const;
    const std::vector<AdjacencyTensor>& tensors() const { return tensors_; }
    // Orders with at least one stored entry.
    std::vector<int> active_orders() const;

    double weight(std::span<const int> idx) const;
    double weight(std::initializer_list<int> idx) const {
        std::vector<int> v(idx);
        return weight(std::span<const int>(v));
    }

    // Copy in which every order outside `orders` is emptied.
    Hypergraph restricted(const std::vector<int>& orders) const;

    bool operator==(const Hypergraph& o) const = default;

private:
    int n_ = 0;
    int max_rank_ = 1;
    std::vector<AdjacencyTensor> tensors_;
};

Hypergraph build_homogeneous(int n, double theta, int max_rank);
Hypergraph build_balanced(int n, const std::function<double(double)>& f, int max_rank);
// adjacency: row-major n x n 0/1 matrix.
Hypergraph build_clique_lift(const std::vector<int>& adjacency, int n, int max_rank);
// Every loop-free tuple gets weight 1/N^l.
Hypergraph build_all_to_all(int n, int max_rank);

double scaling_bound(const Hypergraph& h);

struct Violation {
    enum Kind { Loop, HeadSymmetry, FullSymmetry } kind;
    int order;
    std::vector<int> index;  // 0-based
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::size_t count(Violation::Kind k) const;
};

ValidationReport validate(const Hypergraph& h);

// Exact number of multinomial orderings of the multiset `v`.
double distinct_permutations(std::span<const int> v);

// Calls f(sorted combination) for every strictly increasing k-subset of [0, n).
void for_each_combination(int n, int k, const std::function<void(std::span<const int>)>& f);

void save(const Hypergraph& h, const std::string& path);
std::string to_text(const Hypergraph& h);
// strict=false keeps loop entries so validate() can report them.
Hypergraph load(const std::string& path, bool strict = true);
Hypergraph from_text(const std::string& text, bool strict = true);

}  // namespace hgmf
