#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace srps::analysis {

// Common coverage of two nodes at distance x:
// 2r^2 acos(x/2r) - 2x sqrt(r^2 - x^2/4). Throws std::domain_error outside [0, 2r].
double area(double x, double r);
// Geometric lens area (single x term), used for Monte Carlo comparisons.
double lens_area(double x, double r);

struct ExpectedArea {
    double quadrature = 0;   // integral of area(x)/r over (0, r)
    double closed_form = 0;  // sqrt(3) r^2
    double relative_gap = 0; // (closed_form - quadrature) / quadrature
};
ExpectedArea expected_area(double r);
// Same integral using the geometric lens area.
double expected_lens_area(double r);

struct GuardCounts {
    double g_min = 0;        // 0.36 r^2 d
    double g_min_exact = 0;  // area(r, r) d
    double g = 0;            // sqrt(3) r^2 d
    double g_quadrature = 0; // expected_area(r).quadrature d
    double nb = 0;           // pi r^2 d
};
GuardCounts guard_counts(double r, double d);
double density_for_nb(double nb, double r);

// Exact binomial coefficient; uses a log-space path beyond 60.
double binomial_coefficient(std::uint32_t n, std::uint32_t k);
double binomial_pmf(std::uint32_t n, std::uint32_t k, double p);
// P[X >= k] for X ~ Binomial(n, p).
double binomial_tail(std::uint32_t n, std::uint32_t k, double p);

// P_{beta|mu}: a guard sees at least beta of mu events with per-event probability alpha.
double p_alert(double alpha, std::uint32_t beta, std::uint32_t mu);

struct DetectProb {
    double binomial_sum = 0;
    double incomplete_beta = 0;
};
// P_{>=gamma} over g guards with per-guard alert probability p.
DetectProb p_detect(std::uint32_t gamma, std::uint32_t g, double p);

struct FalseAlarm {
    double p_fa = 0;
    double p_fa_beta_mu = 0;
    double p_fa_gamma = 0;
};
FalseAlarm p_false_alarm_curves(double p_c, std::uint32_t beta, std::uint32_t mu, std::uint32_t gamma,
                                std::uint32_t g);

struct Misdetection {
    double heard = 0;      // 1 - p_c: the guard hears the event
    double collided = 0;   // p_c: the guard misses it to a collision
};
Misdetection p_misdetection(double p_c);

// p_c(NB) = min(base * NB / anchor_nb, cap).
double pc_linear(double nb, double base = 0.05, double anchor_nb = 3.0, double cap = 0.95);

// Expected guards for a link at the given NB, rounded to an integer count.
std::uint32_t guards_for_nb(double nb);

struct CoveragePoint {
    double nb = 0;
    double p_c = 0;
    std::uint32_t g = 0;
    double p_alert = 0;
    double p_detect = 0;
    double p_fa_gamma = 0;
};
CoveragePoint coverage_at(double nb, double p_c, std::uint32_t mu, std::uint32_t beta, std::uint32_t gamma);

struct CostParams {
    std::uint64_t nn = 0, lc = 0, rte = 0, nbe = 0;
};
std::uint64_t memory_cost(const CostParams& c);

struct PacketSizes {
    std::uint32_t rdp = 47;
    std::uint32_t key_disclosure = 12;
    std::uint32_t rrp = 18;
    // Sizes the engine actually puts on the air.
    std::uint32_t engine_rdp = 0;
    std::uint32_t engine_key_disclosure = 0;
    std::uint32_t engine_rrp = 0;
    std::string note;
};
PacketSizes packet_sizes();

struct RoleCost {
    std::uint32_t mac_ops = 0;
    std::uint32_t hash_ops = 0;
};
struct ComputeCost {
    RoleCost source{3, 2};
    RoleCost intermediate{2, 3};
    RoleCost destination{5, 1};
};
ComputeCost compute_cost();

// Figure analogues as CSV text.
struct CurveOptions {
    std::uint32_t mu = 7;
    std::uint32_t beta = 5;
    std::uint32_t gamma = 3;
    double pc_base = 0.05;
    double pc_anchor_nb = 3;
    double nb_fixed = 15;  // fig12
    std::uint32_t nb_min = 3;
    std::uint32_t nb_max = 60;
    std::uint32_t gamma_min = 2;
    std::uint32_t gamma_max = 8;
};
std::string fig9a_csv(const CurveOptions& o);
std::string fig9b_csv(const CurveOptions& o);
std::string fig12_csv(const CurveOptions& o);
std::string costs_csv(const CostParams& c);

// Largest p_fa_gamma over the fig9b sweep.
double worst_false_alarm(const CurveOptions& o);

}  // namespace srps::analysis
