#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hgmf/hypergraphon.hpp"
#include "hgmf/measures.hpp"

namespace hgmf {

// sup { int phi d(a - b) : |phi| <= 1, Lip(phi) <= 1 }, exact.
double d_bl(const DiscreteMeasure& a, const DiscreteMeasure& b);

// (int_0^1 d_BL(a^xi, b^xi)^p dxi)^(1/p). Fiber counts must divide one another.
double d_p_nu(const FiberedAtoms& a, const FiberedAtoms& b, double p);
double d_p_nu(const FiberedDensity& a, const FiberedDensity& b, double p);
double d_p_nu(const FiberedAtoms& a, const FiberedDensity& b, double p);
// Per-fiber d_BL on the finer of the two grids.
std::vector<double> fiber_distances(const FiberedAtoms& a, const FiberedAtoms& b);

// Whether exhaustive enumeration is allowed for this shape.
bool cut_exact_feasible(int parts, int order);

// sup over unions of cells S x S1 x ... x Sl of |integral of A|.
double cut_norm_exact(const DenseLevel& a);
// Coordinate-ascent lower bound of cut_norm_exact.
double cut_norm_heuristic(const DenseLevel& a, int restarts, std::uint64_t seed);

struct CutValue {
    double value = 0.0;
    bool exact = true;
    std::string mode() const { return exact ? "exact" : "heuristic"; }
};
CutValue cut_norm(const DenseLevel& a, int restarts = 16, std::uint64_t seed = 1);

// Multilinear (L^inf)^l -> L^1 norm of the step operator, by enumeration of sign vectors.
double operator_norm_infty_to_1(const DenseLevel& a);

// alpha_l weights; parse("geometric:0.5") gives 0.5^l, parse("list:0.5,0.1") explicit values.
struct AlphaSequence {
    std::vector<double> explicit_values;
    double ratio = 0.5;
    double operator()(int order) const;
    static AlphaSequence parse(const std::string& spec);
    std::string describe() const;
};

struct DSquareResult {
    struct Term {
        int order;
        double alpha;
        double value;
        bool exact;
    };
    double total = 0.0;
    std::vector<Term> terms;
};

// Both arguments must be step hypergraphons; grids are refined to their lcm.
DSquareResult d_square(const URHypergraphon& w, const URHypergraphon& wbar, const AlphaSequence& alpha,
                       int restarts = 16, std::uint64_t seed = 1);

struct PermResult {
    DSquareResult best;
    std::vector<int> permutation;
};
// Minimum of d_square over relabelings of wbar's parts (parts <= 8).
PermResult delta_square_perm(const StepHypergraphon& w, const StepHypergraphon& wbar, const AlphaSequence& alpha);

struct DirectedHypertree {
    struct Edge {
        int tail;                // 0-based node
        std::vector<int> heads;  // 0-based nodes, new in this edge
    };
    int nodes = 1;
    std::vector<Edge> edges;

    void check() const;
    // "1:2,3;2:4" (1-based tail:heads; edges separated by ';').
    static DirectedHypertree parse(const std::string& spec);
};

// Label quadrature of prod_edges w_l(xi_tail, xi_heads) prod_nodes m_{e_i}(xi_i) on mu's fiber grid.
double hypertree_moment(const DirectedHypertree& tree, const URHypergraphon& w, const FiberedAtoms& mu,
                        const std::vector<int>& exponents, double budget = 1e9);

}  // namespace hgmf
