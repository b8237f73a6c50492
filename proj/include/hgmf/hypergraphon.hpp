#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hgmf/hypergraph.hpp"

namespace hgmf {

// Dense row-major array over [parts]^{order+1}; index order (i, j1, ..., jl).
struct DenseLevel {
    int parts = 0;
    int order = 1;
    std::vector<double> values;

    DenseLevel() = default;
    DenseLevel(int parts, int order);
    std::size_t size() const { return values.size(); }
    std::size_t flat(std::span<const int> idx) const;
    double at(std::span<const int> idx) const { return values[flat(idx)]; }
    double& at(std::span<const int> idx) { return values[flat(idx)]; }
    // Each cell split into factor^(l+1) equal sub-cells.
    DenseLevel refined(int factor) const;
};

DenseLevel operator-(const DenseLevel& a, const DenseLevel& b);

// Piecewise constant on the uniform partition I_i = [(i-1)/N, i/N).
struct StepHypergraphon {
    int parts = 1;
    std::vector<AdjacencyTensor> levels;  // one per order 1..max order; cell values
    double sup_bound = 0.0;

    int max_order() const { return static_cast<int>(levels.size()); }
    std::vector<int> active_orders() const;
    double evaluate(int order, std::span<const double> point) const;
    double cell_value(int order, std::span<const int> cells) const;
    bool level_symmetric(int order) const;
    DenseLevel dense_level(int order) const;
};

struct AnalyticLevel {
    int order = 1;
    std::function<double(std::span<const double>)> fn;
    double sup_bound = 1.0;
    std::optional<double> lipschitz;  // Euclidean
    // Exact {min, max} of fn over an axis-aligned box, when known.
    std::function<std::pair<double, double>(std::span<const double> lo, std::span<const double> hi)> range;
};

struct AnalyticHypergraphon {
    std::string name;
    std::vector<AnalyticLevel> levels;
};

class URHypergraphon {
public:
    URHypergraphon() = default;
    URHypergraphon(StepHypergraphon s) : v_(std::move(s)) {}
    URHypergraphon(AnalyticHypergraphon a) : v_(std::move(a)) {}

    bool is_step() const { return std::holds_alternative<StepHypergraphon>(v_); }
    const StepHypergraphon& step() const { return std::get<StepHypergraphon>(v_); }
    const AnalyticHypergraphon& analytic() const { return std::get<AnalyticHypergraphon>(v_); }

    std::vector<int> active_orders() const;
    bool is_active(int order) const;
    double sup_bound() const;
    // 0 for inactive orders.
    double evaluate(int order, std::span<const double> point) const;
    double evaluate(int order, std::initializer_list<double> point) const {
        std::vector<double> p(point);
        return evaluate(order, std::span<const double>(p));
    }
    const AnalyticLevel* analytic_level(int order) const;

private:
    std::variant<StepHypergraphon, AnalyticHypergraphon> v_;
};

// 1 when the diameter of the labels is at most theta.
AnalyticHypergraphon homogeneous_hypergraphon(double theta, const std::vector<int>& orders);
// f(|mean(xi) - 1/2|) with f decreasing on [0, 1/2]; f_slope bounds |f'|.
AnalyticHypergraphon balanced_hypergraphon(std::function<double(double)> f, double f_slope,
                                           const std::vector<int>& orders);
// f(x) = 4 (x - 1/2)^2.
AnalyticHypergraphon balanced_quadratic_hypergraphon(const std::vector<int>& orders);
AnalyticHypergraphon constant_hypergraphon(double c, const std::vector<int>& orders);

StepHypergraphon step_from_hypergraph(const Hypergraph& h);
Hypergraph discretize_pointwise(const URHypergraphon& w, int n, double grid_offset);
Hypergraph discretize_l1(const URHypergraphon& w, int n, int nodes_per_axis);

// Midpoint-rule cell averages of level `order` on every cell, diagonal cells included.
DenseLevel cell_averages(const URHypergraphon& w, int order, int parts, int nodes);

// Midpoint quadrature of |a_l - b_l| on a grid refining every step partition involved.
double l1_level_distance(const URHypergraphon& a, const URHypergraphon& b, int order, int refinement);

void save_step(const StepHypergraphon& w, const std::string& path);
StepHypergraphon load_step(const std::string& path);
std::string step_to_text(const StepHypergraphon& w);
StepHypergraphon step_from_text(const std::string& text);

// Step hypergraphon from dense per-order blocks (values must be symmetric).
StepHypergraphon step_from_dense(const std::vector<DenseLevel>& levels);

}  // namespace hgmf
