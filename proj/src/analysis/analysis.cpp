#include "srps/analysis.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "srps/wire.hpp"

namespace srps::analysis {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt3 = 1.7320508075688772;

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

template <class F>
double integrate(F f, double a, double b) {
    double err = 0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12, &err);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

double area(double x, double r) {
    if (r <= 0) throw std::domain_error("area: r must be positive");
    if (x < 0 || x > 2 * r) throw std::domain_error("area: x must lie in [0, 2r]");
    double radicand = std::max(0.0, r * r - x * x / 4);
    return 2 * r * r * std::acos(x / (2 * r)) - 2 * x * std::sqrt(radicand);
}

double lens_area(double x, double r) {
    if (x < 0 || x > 2 * r) throw std::domain_error("lens_area: x must lie in [0, 2r]");
    double radicand = std::max(0.0, r * r - x * x / 4);
    return 2 * r * r * std::acos(x / (2 * r)) - x * std::sqrt(radicand);
}

ExpectedArea expected_area(double r) {
    ExpectedArea e;
    e.quadrature = integrate([r](double x) { return area(x, r) / r; }, 0.0, r);
    e.closed_form = kSqrt3 * r * r;
    e.relative_gap = (e.closed_form - e.quadrature) / e.quadrature;
    return e;
}

double expected_lens_area(double r) {
    return integrate([r](double x) { return lens_area(x, r) / r; }, 0.0, r);
}

GuardCounts guard_counts(double r, double d) {
    GuardCounts g;
    g.g_min = 0.36 * r * r * d;
    g.g_min_exact = area(r, r) * d;
    g.g = kSqrt3 * r * r * d;
    g.g_quadrature = expected_area(r).quadrature * d;
    g.nb = kPi * r * r * d;
    return g;
}

double density_for_nb(double nb, double r) { return nb / (kPi * r * r); }

double binomial_coefficient(std::uint32_t n, std::uint32_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    if (n <= 60) {
        std::uint64_t c = 1;
        for (std::uint32_t i = 1; i <= k; ++i) c = c * (n - k + i) / i;  // exact: stays an integer each step
        return static_cast<double>(c);
    }
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

double binomial_pmf(std::uint32_t n, std::uint32_t k, double p) {
    if (k > n) return 0;
    if (p <= 0) return k == 0 ? 1.0 : 0.0;
    if (p >= 1) return k == n ? 1.0 : 0.0;
    if (n <= 60) return binomial_coefficient(n, k) * std::pow(p, k) * std::pow(1 - p, n - k);
    double lg = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    return std::exp(lg + k * std::log(p) + (n - k) * std::log1p(-p));
}

double binomial_tail(std::uint32_t n, std::uint32_t k, double p) {
    if (k == 0) return 1.0;
    if (k > n) return 0.0;
    double s = 0;
    for (std::uint32_t i = k; i <= n; ++i) s += binomial_pmf(n, i, p);
    return clamp01(s);
}

double p_alert(double alpha, std::uint32_t beta, std::uint32_t mu) {
    if (beta > mu) return 0;
    return binomial_tail(mu, beta, alpha);
}

DetectProb p_detect(std::uint32_t gamma, std::uint32_t g, double p) {
    DetectProb d;
    d.binomial_sum = binomial_tail(g, gamma, p);
    if (gamma == 0) {
        d.incomplete_beta = 1.0;
    } else if (gamma > g) {
        d.incomplete_beta = 0.0;
    } else if (p <= 0) {
        d.incomplete_beta = 0.0;
    } else if (p >= 1) {
        d.incomplete_beta = 1.0;
    } else {
        // P[X >= gamma] = I_p(gamma, g - gamma + 1)
        d.incomplete_beta = boost::math::ibeta(double(gamma), double(g - gamma + 1), p);
    }
    return d;
}

FalseAlarm p_false_alarm_curves(double p_c, std::uint32_t beta, std::uint32_t mu, std::uint32_t gamma,
                                std::uint32_t g) {
    FalseAlarm f;
    f.p_fa = p_c * (1 - p_c) * (1 - p_c);
    f.p_fa_beta_mu = binomial_tail(mu, beta, f.p_fa);
    f.p_fa_gamma = binomial_tail(g, gamma, f.p_fa_beta_mu);
    return f;
}

Misdetection p_misdetection(double p_c) { return {1 - p_c, p_c}; }

double pc_linear(double nb, double base, double anchor_nb, double cap) {
    return std::min(base * nb / anchor_nb, cap);
}

std::uint32_t guards_for_nb(double nb) {
    return static_cast<std::uint32_t>(std::lround(kSqrt3 / kPi * nb));
}

CoveragePoint coverage_at(double nb, double p_c, std::uint32_t mu, std::uint32_t beta, std::uint32_t gamma) {
    CoveragePoint c;
    c.nb = nb;
    c.p_c = p_c;
    c.g = guards_for_nb(nb);
    c.p_alert = p_alert(1 - p_c, beta, mu);
    c.p_detect = p_detect(gamma, c.g, c.p_alert).binomial_sum;
    c.p_fa_gamma = p_false_alarm_curves(p_c, beta, mu, gamma, c.g).p_fa_gamma;
    return c;
}

std::uint64_t memory_cost(const CostParams& c) { return 12 * c.nn + 64 * c.lc + 12 * c.rte + 30 * c.nbe; }

PacketSizes packet_sizes() {
    PacketSizes p;
    p.rdp = wire::kModelRdp;
    p.key_disclosure = wire::kModelKeyDisclosure;
    p.rrp = wire::kModelRrp;
    p.engine_rdp = wire::kRdp;
    p.engine_key_disclosure = wire::kKeyDisclosure;
    p.engine_rrp = wire::kRrp;
    p.note =
        "engine RDP adds forwarder id and key index; engine RRP carries full addressing, both MACs and key index";
    return p;
}

ComputeCost compute_cost() { return {}; }

std::string fig9a_csv(const CurveOptions& o) {
    std::ostringstream os;
    os << "nb,p_c,g,p_alert,p_detect\n";
    for (std::uint32_t nb = o.nb_min; nb <= o.nb_max; ++nb) {
        auto c = coverage_at(nb, pc_linear(nb, o.pc_base, o.pc_anchor_nb), o.mu, o.beta, o.gamma);
        os << nb << ',' << fmt(c.p_c) << ',' << c.g << ',' << fmt(c.p_alert) << ',' << fmt(c.p_detect) << '\n';
    }
    return os.str();
}

std::string fig9b_csv(const CurveOptions& o) {
    std::ostringstream os;
    os << "nb,p_c,g,p_fa,p_fa_beta_mu,p_fa_gamma\n";
    for (std::uint32_t nb = o.nb_min; nb <= o.nb_max; ++nb) {
        double pc = pc_linear(nb, o.pc_base, o.pc_anchor_nb);
        std::uint32_t g = guards_for_nb(nb);
        auto f = p_false_alarm_curves(pc, o.beta, o.mu, o.gamma, g);
        os << nb << ',' << fmt(pc) << ',' << g << ',' << fmt(f.p_fa) << ',' << fmt(f.p_fa_beta_mu) << ','
           << fmt(f.p_fa_gamma) << '\n';
    }
    return os.str();
}

std::string fig12_csv(const CurveOptions& o) {
    std::ostringstream os;
    os << "gamma,nb,p_c,g,p_alert,p_detect\n";
    double pc = pc_linear(o.nb_fixed, o.pc_base, o.pc_anchor_nb);
    for (std::uint32_t gm = o.gamma_min; gm <= o.gamma_max; ++gm) {
        auto c = coverage_at(o.nb_fixed, pc, o.mu, o.beta, gm);
        os << gm << ',' << fmt(o.nb_fixed) << ',' << fmt(pc) << ',' << c.g << ',' << fmt(c.p_alert) << ','
           << fmt(c.p_detect) << '\n';
    }
    return os.str();
}

std::string costs_csv(const CostParams& c) {
    auto p = packet_sizes();
    auto cc = compute_cost();
    std::ostringstream os;
    os << "item,value\n";
    os << "memory_nn," << c.nn << "\nmemory_lc," << c.lc << "\nmemory_rte," << c.rte << "\nmemory_nbe," << c.nbe
       << '\n';
    os << "memory_bytes," << memory_cost(c) << '\n';
    os << "packet_rdp," << p.rdp << "\npacket_key_disclosure," << p.key_disclosure << "\npacket_rrp," << p.rrp
       << '\n';
    os << "engine_packet_rdp," << p.engine_rdp << "\nengine_packet_key_disclosure," << p.engine_key_disclosure
       << "\nengine_packet_rrp," << p.engine_rrp << '\n';
    os << "source_mac," << cc.source.mac_ops << "\nsource_hash," << cc.source.hash_ops << '\n';
    os << "intermediate_mac," << cc.intermediate.mac_ops << "\nintermediate_hash," << cc.intermediate.hash_ops
       << '\n';
    os << "destination_mac," << cc.destination.mac_ops << "\ndestination_hash," << cc.destination.hash_ops << '\n';
    return os.str();
}

double worst_false_alarm(const CurveOptions& o) {
    double worst = 0;
    for (std::uint32_t nb = o.nb_min; nb <= o.nb_max; ++nb) {
        double pc = pc_linear(nb, o.pc_base, o.pc_anchor_nb);
        worst = std::max(worst, p_false_alarm_curves(pc, o.beta, o.mu, o.gamma, guards_for_nb(nb)).p_fa_gamma);
    }
    return worst;
}

}  // namespace srps::analysis
