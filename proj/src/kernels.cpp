#include "hgmf/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hgmf/errors.hpp"

namespace hgmf {

double InteractionKernel::operator()(double x, std::span<const double> heads) const {
    double out = 0.0;
    fn(std::span<const double>(&x, 1), heads, std::span<double>(&out, 1));
    return out;
}

double InteractionKernel::eval_separable(double x, std::span<const double> heads) const {
    double s = 0.0;
    for (const auto& t : separable) {
        double v = t.coeff * t.self(x);
        for (std::size_t k = 0; k < t.heads.size(); ++k) v *= t.heads[k](heads[k]);
        s += v;
    }
    return s;
}

KernelFamily::KernelFamily(std::initializer_list<InteractionKernel> ks) {
    for (const auto& k : ks) add(k);
}

void KernelFamily::add(InteractionKernel k) {
    if (k.order < 1) throw ParameterError("kernel order must be >= 1");
    if (find(k.order)) throw ConfigError("duplicate kernel order " + std::to_string(k.order));
    kernels_.push_back(std::move(k));
    std::sort(kernels_.begin(), kernels_.end(),
              [](const InteractionKernel& a, const InteractionKernel& b) { return a.order < b.order; });
}

const InteractionKernel* KernelFamily::find(int order) const {
    for (const auto& k : kernels_)
        if (k.order == order) return &k;
    return nullptr;
}

std::vector<int> KernelFamily::orders() const {
    std::vector<int> o;
    for (const auto& k : kernels_) o.push_back(k.order);
    return o;
}

int KernelFamily::max_order() const { return kernels_.empty() ? 0 : kernels_.back().order; }

// ---------------------------------------------------------------- built-ins

namespace {

double one(double) { return 1.0; }
double ident(double x) { return x; }
double neg(double x) { return -x; }

std::vector<SeparableTerm> mean_minus_self_terms(int l) {
    std::vector<SeparableTerm> terms;
    terms.push_back({1.0, neg, std::vector<std::function<double(double)>>(l, one)});
    for (int m = 0; m < l; ++m) {
        SeparableTerm t{1.0 / l, one, std::vector<std::function<double(double)>>(l, one)};
        t.heads[m] = ident;
        terms.push_back(std::move(t));
    }
    return terms;
}

// mean of heads minus x, componentwise, any dimension.
void mean_minus_self(std::span<const double> x, std::span<const double> heads, std::span<double> out, int l) {
    const std::size_t d = x.size();
    for (std::size_t c = 0; c < d; ++c) {
        double s = 0.0;
        for (int k = 0; k < l; ++k) s += heads[k * d + c];
        out[c] = s / l - x[c];
    }
}

double head_diameter(std::span<const double> heads, int l, std::size_t d) {
    double diam = 0.0;
    for (int a = 0; a < l; ++a)
        for (int b = a + 1; b < l; ++b) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                double t = heads[a * d + c] - heads[b * d + c];
                s += t * t;
            }
            diam = std::max(diam, std::sqrt(s));
        }
    return diam;
}

}  // namespace

InteractionKernel linear_mean_kernel(int l, double a, double b) {
    if (l < 1) throw ParameterError("order must be >= 1");
    if (!(b > a)) throw ParameterError("state box must have b > a");
    InteractionKernel k;
    k.order = l;
    k.dim = 0;
    k.name = "linear_mean";
    k.fn = [l](std::span<const double> x, std::span<const double> h, std::span<double> out) {
        mean_minus_self(x, h, out, l);
    };
    k.bound = b - a;
    k.lipschitz = 2.0;
    k.symmetric_head = true;
    k.box_lo = a;
    k.box_hi = b;
    k.separable = mean_minus_self_terms(l);
    return k;
}

InteractionKernel phase_kernel(const std::vector<double>& c, std::string name) {
    const int l = static_cast<int>(c.size()) - 1;
    if (l < 1) throw ParameterError("phase kernel needs at least one head coefficient");
    InteractionKernel k;
    k.order = l;
    k.dim = 1;
    k.name = std::move(name);
    k.fn = [c, l](std::span<const double> x, std::span<const double> h, std::span<double> out) {
        double s = c[0] * x[0];
        for (int m = 0; m < l; ++m) s += c[m + 1] * h[m];
        out[0] = std::sin(s);
    };
    k.bound = 1.0;
    double lip = 0.0;
    for (double v : c) lip = std::max(lip, std::abs(v));
    k.lipschitz = lip;
    k.symmetric_head = std::all_of(c.begin() + 1, c.end(), [&](double v) { return v == c[1]; });
    k.box_lo = -M_PI;
    k.box_hi = M_PI;

    // sin(sum theta) = sum over odd subsets S of (-1)^((|S|-1)/2) prod_S sin prod_rest cos
    for (unsigned mask = 0; mask < (1u << (l + 1)); ++mask) {
        int pc = __builtin_popcount(mask);
        if (pc % 2 == 0) continue;
        SeparableTerm t;
        t.coeff = ((pc - 1) / 2) % 2 ? -1.0 : 1.0;
        auto factor = [&](int m) -> std::function<double(double)> {
            double cm = c[m];
            if (mask & (1u << m)) return [cm](double v) { return std::sin(cm * v); };
            return [cm](double v) { return std::cos(cm * v); };
        };
        t.self = factor(0);
        for (int m = 1; m <= l; ++m) t.heads.push_back(factor(m));
        k.separable.push_back(std::move(t));
    }
    return k;
}

InteractionKernel kuramoto_kernel(int l) {
    std::vector<double> c(l + 1, 1.0);
    c[0] = -l;
    auto k = phase_kernel(c, "kuramoto");
    k.symmetric_head = true;
    return k;
}

KernelFamily skardal_kernels() {
    KernelFamily f;
    f.add(phase_kernel({-1, 1}, "skardal1"));
    f.add(phase_kernel({-1, 2, -1}, "skardal2"));
    f.add(phase_kernel({-1, 1, 1, -1}, "skardal3"));
    return f;
}

InteractionKernel opinion_diam_kernel(int l, double lambda, double a, double b) {
    if (l < 1) throw ParameterError("order must be >= 1");
    if (!(b > a)) throw ParameterError("state box must have b > a");
    InteractionKernel k;
    k.order = l;
    k.dim = 0;
    k.name = "opinion";
    k.fn = [l, lambda](std::span<const double> x, std::span<const double> h, std::span<double> out) {
        const double s = std::exp(lambda * head_diameter(h, l, x.size()));
        mean_minus_self(x, h, out, l);
        for (double& o : out) o *= s;
    };
    const double emax = std::exp(std::max(0.0, lambda * (b - a)));
    k.bound = emax * (b - a);
    k.lipschitz = emax * (std::abs(lambda) * (b - a) + 2.0);
    k.symmetric_head = true;
    k.box_lo = a;
    k.box_hi = b;
    if (lambda == 0.0) k.separable = mean_minus_self_terms(l);
    return k;
}

// ---------------------------------------------------------------- checks

Assumption1Report check_assumption1(const KernelFamily& family, double eta, int samples, std::uint64_t seed) {
    if (eta <= 0.0 && family.kernels().size() > 1)
        throw ParameterError("eta must be positive for a family with several orders");
    if (samples < 0) throw ParameterError("negative sample count");

    Assumption1Report rep;
    std::mt19937_64 rng(seed);
    for (const auto& k : family.kernels()) {
        const int l = k.order;
        const double fact = std::tgamma(l + 1.0);
        if (eta > 0.0)
            rep.sum_bound += std::sqrt(fact) * k.bound / std::pow(eta, l);
        else
            rep.sum_bound = k.bound > 0 ? std::numeric_limits<double>::infinity() : rep.sum_bound;
        rep.sum_lip += l * k.lipschitz;

        std::uniform_real_distribution<double> box(k.box_lo, k.box_hi);
        std::normal_distribution<double> jitter(0.0, 1e-3 * (k.box_hi - k.box_lo));
        std::vector<double> z(l + 1), y(l + 1), p(l);
        double worst_b = 0.0, worst_l = 0.0;
        bool asym = false;
        for (int s = 0; s < samples; ++s) {
            for (auto& v : z) v = box(rng);
            const double kz = k(z[0], std::span<const double>(z).subspan(1));
            worst_b = std::max(worst_b, std::abs(kz));

            // Alternate global pairs and nearby pairs.
            double dist = 0.0;
            for (int m = 0; m <= l; ++m) {
                y[m] = (s % 2 == 0) ? box(rng) : std::clamp(z[m] + jitter(rng), k.box_lo, k.box_hi);
                dist += std::abs(y[m] - z[m]);
            }
            const double ky = k(y[0], std::span<const double>(y).subspan(1));
            if (dist > 0) worst_l = std::max(worst_l, std::abs(ky - kz) - k.lipschitz * dist);

            if (l >= 2) {
                std::copy(z.begin() + 1, z.end(), p.begin());
                std::shuffle(p.begin(), p.end(), rng);
                const double kp = k(z[0], p);
                if (std::abs(kp - kz) > 1e-12 * (1.0 + std::abs(kz))) asym = true;
            }
        }
        if (worst_b > k.bound * (1 + 1e-9) + 1e-9)
            rep.violations.push_back({l, "bound", "sampled |K| = " + std::to_string(worst_b) +
                                                      " exceeds B = " + std::to_string(k.bound)});
        if (worst_l > 1e-9)
            rep.violations.push_back({l, "lipschitz", "difference quotient exceeds L by " + std::to_string(worst_l)});
        if (asym) {
            rep.asymmetric_orders.push_back(l);
            if (k.symmetric_head)
                rep.violations.push_back({l, "symmetry", "declared head-symmetric but a permutation changed the value"});
        }
    }
    return rep;
}

double separable_error(const InteractionKernel& k, int samples, std::uint64_t seed) {
    if (!k.has_separable()) return std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> box(k.box_lo, k.box_hi);
    std::vector<double> h(k.order);
    double err = 0.0;
    for (int s = 0; s < samples; ++s) {
        double x = box(rng);
        for (auto& v : h) v = box(rng);
        err = std::max(err, std::abs(k(x, h) - k.eval_separable(x, h)));
    }
    return err;
}

}  // namespace hgmf
