#include "hgmf/measures.hpp"

#include <algorithm>
#include <cmath>

#include "hgmf/errors.hpp"

namespace hgmf {

DiscreteMeasure::DiscreteMeasure(std::vector<double> p, std::vector<double> m) : pos(std::move(p)), mass(std::move(m)) {
    if (pos.size() != mass.size()) throw ParameterError("positions and masses differ in length");
}

void DiscreteMeasure::add(double x, double m) {
    pos.push_back(x);
    mass.push_back(m);
}

double DiscreteMeasure::total() const {
    double s = 0.0;
    for (double m : mass) s += m;
    return s;
}

double DiscreteMeasure::moment(int k) const {
    double s = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) s += mass[i] * std::pow(pos[i], k);
    return s;
}

const DiscreteMeasure& FiberedAtoms::at_label(double xi) const {
    if (fibers.empty()) throw ParameterError("no fibers");
    int f = std::clamp(static_cast<int>(std::floor(xi * size())), 0, size() - 1);
    return fibers[f];
}

DiscreteMeasure FiberedAtoms::marginal() const {
    DiscreteMeasure m;
    const double w = 1.0 / std::max(1, size());
    for (const auto& f : fibers)
        for (std::size_t i = 0; i < f.size(); ++i) m.add(f.pos[i], f.mass[i] * w);
    return m;
}

FiberedDensity::FiberedDensity(int nx_, int nxi_, double lo, double hi) : nx(nx_), nxi(nxi_), x_min(lo), x_max(hi) {
    if (nx < 1 || nxi < 1) throw ParameterError("grid counts must be positive");
    if (!(hi > lo)) throw ParameterError("x_max must exceed x_min");
    rho.assign(static_cast<std::size_t>(nx) * nxi, 0.0);
}

double FiberedDensity::mass(int f) const {
    double s = 0.0;
    for (double r : fiber(f)) s += r;
    return s * dx();
}

double FiberedDensity::moment(int f, int k) const {
    auto r = fiber(f);
    double s = 0.0;
    for (int c = 0; c < nx; ++c) s += r[c] * std::pow(x_center(c), k);
    return s * dx();
}

double FiberedDensity::mean(int f) const { return moment(f, 1) / mass(f); }

double FiberedDensity::variance(int f) const {
    double m = mean(f);
    auto r = fiber(f);
    double s = 0.0;
    for (int c = 0; c < nx; ++c) {
        double d = x_center(c) - m;
        s += r[c] * d * d;
    }
    return s * dx() / mass(f);
}

double FiberedDensity::min_value() const { return rho.empty() ? 0.0 : *std::min_element(rho.begin(), rho.end()); }

FiberedAtoms to_atoms(const FiberedDensity& d) {
    FiberedAtoms a;
    a.fibers.resize(d.nxi);
    for (int f = 0; f < d.nxi; ++f) {
        auto r = d.fiber(f);
        for (int c = 0; c < d.nx; ++c)
            if (r[c] > 0.0) a.fibers[f].add(d.x_center(c), r[c] * d.dx());
    }
    return a;
}

}  // namespace hgmf
