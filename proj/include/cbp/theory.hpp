#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbp/model.hpp"
#include "cbp/ode.hpp"

namespace cbp::theory {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Scaled activation-rate function of one regime.
struct BetaSpec {
    Regime regime = Regime::QEqualsG;
    int r = 2;
    double alpha_R = 0.0;
    double alpha_B = 0.0;
    /// Residual Poisson mass at which the q = 1/p series is cut.
    double truncation_tol = 1e-12;

    /// Throws DomainError unless alpha_R > alpha_B > 0, r >= 2 and
    /// truncation_tol in (0, 1e-6].
    void check() const;
    double alpha(Color c) const noexcept { return c == Color::Red ? alpha_R : alpha_B; }
};

/// (beta_R, beta_B) at (x_R, x_B). Requires x_R, x_B >= 0.
Vec2 beta(const BetaSpec& spec, double x_R, double x_B);
double beta(const BetaSpec& spec, Color c, double x_R, double x_B);

/// r^{-1} (1 - r^{-1})^{r-1}.
double c_r(int r);

/// P(Po(lambda_1) - Po(lambda_2) >= r), cut once the neglected Po(lambda_2) mass is below tol.
double skellam_tail(double lambda_1, double lambda_2, int r, double tol = 1e-12);

struct Zeros {
    std::optional<double> z;  // smallest positive zero
    std::optional<double> w;  // second zero (equal to z at the tangent case)
};

/// Zeros of beta_S on (0, inf) for q = g by bracketed bisection to 1e-12 absolute.
/// Absent markers when there is none (alpha_S > 1). Throws DomainError for other regimes.
Zeros beta_zeros(const BetaSpec& spec, Color c);

/// r = 2 closed forms 2 - a -/+ 2 sqrt(1 - a); absent when a > 1.
Zeros beta_zeros_r2(double alpha);

/// Closed-form decoupled solution for g << q << 1/p:
/// h(x) = (alpha^{1-r} - (r-1) x / r!)^{-1/(r-1)} - alpha, blowing up at r!/((r-1) alpha^{r-1}).
double h_closed(double alpha, int r, double x);
double kappa_h(double alpha, int r);

struct SolveOptions {
    double ceiling = 1e8;  // blow-up detection level for the R component
    OdeOptions ode{};
};

/// Solution of one of the two Cauchy problems.
struct OdeSolution {
    std::vector<double> grid;
    std::vector<Vec2> values;
    std::vector<Vec2> derivatives;
    /// Right end of the maximal domain; nullopt is +infinity.
    std::optional<double> kappa;
    /// Limit of the B component at kappa (for an infinite kappa: the value at the last grid point,
    /// or the extrapolated limit when `terminal_B_estimated` is set).
    double terminal_B = 0.0;
    bool terminal_B_estimated = false;
    /// B component at the last integrated point (the blow-up stop for g).
    double ode_terminal_B = 0.0;
    bool analytic = false;

    double x_end() const { return grid.back(); }
    /// Hermite interpolation on the stored grid.
    Vec2 value_at(double x) const;
};

/// g' = beta(g), g(0) = 0 on [0, min(x_max, kappa_g)).
OdeSolution solve_g(const BetaSpec& spec, double x_max, const SolveOptions& options = {});

/// f' = beta(f) / (beta_R(f) + beta_B(f)), f(0) = 0 on [0, min(x_max, kappa_f)).
OdeSolution solve_f(const BetaSpec& spec, double x_max, const SolveOptions& options = {});

/// Same problem through f = g o z^{-1}, z = g_R + g_B, on a uniform grid of `points` abscissae.
/// Only for q << 1/p (q = g and g << q << 1/p).
OdeSolution solve_f_transfer(const BetaSpec& spec, double x_max, int points = 1001,
                             const SolveOptions& options = {});

/// kappa_g = int_0^inf dy / beta_R(y) for q = g or g << q << 1/p; nullopt (+inf) when the
/// integral diverges (q = g, alpha_R <= 1) or for q >= 1/p.
std::optional<double> kappa_g(const BetaSpec& spec);

/// kappa_f: z_R + z_B for q = g with alpha_R <= 1, otherwise +inf (nullopt).
std::optional<double> kappa_f(const BetaSpec& spec);

/// int_0^upper dy / beta_S(y) for the decoupled regimes (upper may be +inf).
double reciprocal_integral(const BetaSpec& spec, Color c, double upper);

/// Solves int_0^G dy / beta_B(y) = kappa for G (decoupled regimes).
double solve_terminal(const BetaSpec& spec, Color c, double kappa);

/// Regime scaling factor of physical time.
double eta(Regime regime, std::int64_t n, double p, double q, int r);

/// int_0^kappa dx / (beta_R(f) + beta_B(f)) along `f` (a solve_f result for `spec`).
/// Throws DomainError when kappa < 0 or kappa >= kappa_f or beyond the stored solution.
double timing_tau(const BetaSpec& spec, const OdeSolution& f, double kappa, double tol = 1e-10);
/// Convenience: solves f on [0, kappa] first.
double timing_tau(const BetaSpec& spec, double kappa, double tol = 1e-10);

/// Color-indexed variant: int_0^{f_S^{-1}(kappa_S)} dx / (beta_R(f) + beta_B(f)).
double timing_tau_color(const BetaSpec& spec, const OdeSolution& f, Color c, double kappa_S, double tol = 1e-10);

/// Separable form int_0^{kappa_S} dy / beta_S(y), valid for q << 1/p.
double separable_time(const BetaSpec& spec, Color c, double kappa_S);

struct TheoryPrediction {
    Regime regime = Regime::QEqualsG;
    int r = 2;
    double alpha_R = 0.0;
    double alpha_B = 0.0;
    std::optional<double> z_R, z_B, w_B;
    std::optional<double> kappa_g;           // nullopt: +inf
    std::optional<double> g_B_at_kappa_g;    // only when kappa_g is finite
    std::optional<double> kappa_f;           // nullopt: +inf
    double lim_f_R = 0.0;                    // +inf encoded as infinity()
    double lim_f_B = 0.0;
    bool lim_f_B_estimated = false;          // numeric estimate without closed form
    double limit_AR_over_scale = 0.0;
    std::string ar_scale = "q";              // "q" or "n"
    double limit_AB_over_q = 0.0;
    std::string ab_statement = "limit";      // limit | liminf | fluid
    std::optional<double> eta;
};

/// r = 2, q = g closed forms. Requires alpha_R > 1, alpha_R > alpha_B > 0, alpha_B != 1;
/// throws DomainError otherwise.
TheoryPrediction closed_form_r2(double alpha_R, double alpha_B);

/// Numeric prediction by the ODE and quadrature route, any regime and r.
/// The instance (n, p, q) only fills eta.
TheoryPrediction predict(const BetaSpec& spec, std::optional<std::int64_t> n = std::nullopt,
                         std::optional<double> p = std::nullopt, std::optional<double> q = std::nullopt);

/// pi_S(k_R, k_B) = P(Bin(k_S + a_S, p) - Bin(k_Sbar + a_Sbar, p) >= r).
double pi_S(const ModelParams& params, Color c, std::int64_t k_R, std::int64_t k_B);

/// zeta(x) = 1 - x + x log x, zeta(0) = 1. DomainError for x < 0.
double zeta(double x);

enum class TailKind {
    BinomialUpper,       // P(Bin(m,q) >= k) <= exp(-mu zeta(k/mu)), k >= mu
    BinomialUpperLarge,  // P(Bin(m,q) >= k) <= exp(-(k/2) log(k/mu)), k >= e^2 mu
    BinomialLower,       // P(Bin(m,q) <= k) <= exp(-mu zeta(k/mu)), k <= mu
    PoissonLower,        // P(Po(lambda) <= k) <= exp(-lambda zeta(k/lambda)), k <= lambda
};

/// Upper bound on the tail probability; `q` is ignored for the Poisson bound.
/// Throws DomainError outside the bound's validity range.
double tail_bound(TailKind kind, double m_or_lambda, double q, double k);

/// One line of the fluid-limit summary table.
struct TableRow {
    std::string label;
    std::string parameters;
    std::optional<double> kappa_f;
    double lim_f_R;
    double lim_f_B;
    bool estimated;
};
TableRow table_row(const BetaSpec& spec);

}  // namespace cbp::theory
