#pragma once

// Reverse-game data trading between a mining pool (buyer, bids m) and a data
// provider (seller, answers with a markup rule D_s(m)). The provider moves
// first by committing to the rule; the pool then bids. Purchase probability
//
//   p = eps1*r + eps2*Ds/ds_bar + (1-eps1-eps2)*m/m_bar
//
// rises with the pool's reputation r, the provider's markup and the bid.
// Leakage enters through the provider's expected loss c = alpha*(1-r) +
// beta*eta*Ds and the pool's expected gain ct = alpha_t*(1-r) +
// beta_t*eta*Ds. Utility rates (per unit time, static strategies):
//
//   pool:     p * (Q + ct - m - Ds)
//   provider: p * (m + Ds - c)
//
// Both best responses are closed-form because each objective is a quadratic;
// p is kept unclamped inside this algebra (it is a likelihood score, not yet
// a probability) and only clamped where a trade is actually drawn.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "pofl/errors.hpp"
#include "pofl/hash.hpp"

namespace pofl {

struct TradingParams {
  double eps1 = 0.4;   // weight of reputation in p
  double eps2 = 0.4;   // weight of the normalized markup
  double r = 0.5;      // pool reputation in [0,1]
  double m_bar = 1.0;  // highest recent bid (normalizer)
  double ds_bar = 1.0; // highest recent markup (normalizer)
  double alpha = 1.5;  // provider leak-loss vs reputation
  double beta = 1.0;   // provider leak-loss vs data value
  double eta = 1.8;    // data value per unit markup (V = eta*Ds)
  double q = 8.0;      // pool's legal net profit from the trade
  double alpha_t = 1.5; // pool leak-gain vs reputation
  double beta_t = 1.0;  // pool leak-gain vs data value

  double eps3() const { return 1.0 - eps1 - eps2; }

  void validate() const {
    if (!(eps1 > 0) || !(eps2 > 0) || !(eps1 + eps2 < 1))
      throw InvalidArgument("trading: eps weights must be positive and sum below 1");
    if (!(r >= 0 && r <= 1)) throw InvalidArgument("trading: r outside [0,1]");
    if (!(m_bar > 0) || !(ds_bar > 0)) throw InvalidArgument("trading: normalizers must be positive");
    if (!(eta > 0) || alpha < 0 || beta < 0 || alpha_t < 0 || beta_t < 0 || !(q > 0))
      throw InvalidArgument("trading: bad economic coefficients");
  }
};

// Coefficients of the two quadratics. The provider's objective is concave in
// Ds iff beta*eta > 1 (a0 > 0); the pool's objective composed with the
// provider's rule is (p0 + p1*m)(s0 + s1*m), concave iff p1*s1 < 0. Note the
// second condition is NOT implied by beta_t*eta > 1; callers that sweep
// beta_t must stay inside it.
struct GameCoeffs {
  double a0, u, v, p0, p1, s0, s1;

  static GameCoeffs from(const TradingParams& t) {
    t.validate();
    GameCoeffs c{};
    c.a0 = 2.0 * t.eps2 * (t.beta * t.eta - 1.0);
    if (!(c.a0 > 0))
      throw InvalidArgument("trading: provider objective not concave (needs beta*eta > 1)");
    c.u = ((1.0 - t.beta * t.eta) * t.ds_bar * t.eps1 * t.r - t.eps2 * t.alpha * (1.0 - t.r)) / c.a0;
    c.v = (t.eps2 + (1.0 - t.beta * t.eta) * t.eps3() * t.ds_bar / t.m_bar) / c.a0;
    c.p0 = t.eps1 * t.r + t.eps2 * c.u / t.ds_bar;
    c.p1 = t.eps2 * c.v / t.ds_bar + t.eps3() / t.m_bar;
    c.s0 = t.q + t.alpha_t * (1.0 - t.r) + (t.beta_t * t.eta - 1.0) * c.u;
    c.s1 = (t.beta_t * t.eta - 1.0) * c.v - 1.0;
    return c;
  }

  bool pool_concave() const { return p1 * s1 < 0; }
};

inline double raw_probability(const TradingParams& t, double ds, double m) {
  return t.eps1 * t.r + t.eps2 * ds / t.ds_bar + t.eps3() * m / t.m_bar;
}

// p used as an actual probability: clamped to [0,1].
inline double trading_probability(const TradingParams& t, double ds, double m) {
  return std::clamp(raw_probability(t, ds, m), 0.0, 1.0);
}

inline double pool_utility_rate(const TradingParams& t, double m, double ds) {
  double ct = t.alpha_t * (1.0 - t.r) + t.beta_t * t.eta * ds;
  return raw_probability(t, ds, m) * (t.q + ct - m - ds);
}

inline double provider_utility_rate(const TradingParams& t, double m, double ds) {
  double c = t.alpha * (1.0 - t.r) + t.beta * t.eta * ds;
  return raw_probability(t, ds, m) * (m + ds - c);
}

// The provider's committed rule: markup maximizing her utility for any bid.
inline double provider_best_markup(const TradingParams& t, double m) {
  GameCoeffs c = GameCoeffs::from(t);
  return c.u + c.v * m;
}

// The pool's best bid against the rule (vertex of the composed quadratic).
inline double pool_best_bid(const TradingParams& t) {
  GameCoeffs c = GameCoeffs::from(t);
  if (!c.pool_concave())
    throw InvalidArgument("trading: pool objective not concave against the rule");
  return -(c.p0 * c.s1 + c.p1 * c.s0) / (2.0 * c.p1 * c.s1);
}

struct Equilibrium {
  double m_star = 0;
  double ds_star = 0;
  double p_raw = 0;        // unclamped likelihood at the equilibrium
  double p = 0;            // clamped to [0,1]
  double pool_utility = 0; // rates at (m_star, ds_star), raw p
  double provider_utility = 0;
};

inline Equilibrium solve_equilibrium(const TradingParams& t) {
  Equilibrium e;
  e.m_star = pool_best_bid(t);
  e.ds_star = provider_best_markup(t, e.m_star);
  e.p_raw = raw_probability(t, e.ds_star, e.m_star);
  e.p = std::clamp(e.p_raw, 0.0, 1.0);
  e.pool_utility = pool_utility_rate(t, e.m_star, e.ds_star);
  e.provider_utility = provider_utility_rate(t, e.m_star, e.ds_star);
  return e;
}

// One concrete trade offer; `accepted` is a Bernoulli(p) draw.
struct TradeQuote {
  double m = 0, ds = 0, price = 0, p = 0;
  bool accepted = false;
};

inline TradeQuote make_quote(const TradingParams& t, SplitPrg& prg) {
  Equilibrium e = solve_equilibrium(t);
  TradeQuote q;
  q.m = e.m_star;
  q.ds = e.ds_star;
  q.price = e.m_star + e.ds_star;
  q.p = e.p;
  q.accepted = prg.uniform_double() < q.p;
  return q;
}

// ---- exhaustive-search oracles --------------------------------------------
// Plain grid scans, deliberately independent of the closed forms above; used
// by the test suites to validate the algebra.

inline double grid_argmax_markup(const TradingParams& t, double m, double lo, double hi,
                                 double step) {
  double best_ds = lo, best_val = -HUGE_VAL;
  long n = static_cast<long>(std::floor((hi - lo) / step));
  for (long i = 0; i <= n; ++i) {
    double ds = lo + static_cast<double>(i) * step;
    double val = provider_utility_rate(t, m, ds);
    if (val > best_val) {
      best_val = val;
      best_ds = ds;
    }
  }
  return best_ds;
}

// Argmax over the bid with the provider's rule substituted in.
inline double grid_argmax_bid(const TradingParams& t, double lo, double hi, double step) {
  GameCoeffs c = GameCoeffs::from(t);
  double best_m = lo, best_val = -HUGE_VAL;
  long n = static_cast<long>(std::floor((hi - lo) / step));
  for (long i = 0; i <= n; ++i) {
    double m = lo + static_cast<double>(i) * step;
    double val = (c.p0 + c.p1 * m) * (c.s0 + c.s1 * m);
    if (val > best_val) {
      best_val = val;
      best_m = m;
    }
  }
  return best_m;
}

// ---- incentive-compatibility audit ----------------------------------------
// The pool's private inputs are (q, alpha_t, beta_t). Misreporting them only
// moves his bid away from the true optimum, so his true utility cannot
// improve. The audit sweeps a fake-report grid spanning +-span around the
// truthful values and checks no fake report beats truth.

struct IcReport {
  std::uint64_t checked = 0;
  std::uint64_t violations = 0;
  double worst_gap = 0;  // most positive (fake - truth) utility difference
};

inline IcReport ic_audit(const TradingParams& t, int grid_n = 21, double span = 0.5,
                         double tol = 1e-9) {
  if (grid_n < 2) throw InvalidArgument("ic_audit: grid_n must be >= 2");
  double m_true = pool_best_bid(t);
  double u_true = pool_utility_rate(t, m_true, provider_best_markup(t, m_true));
  IcReport rep;
  auto axis = [&](double center) {
    std::vector<double> vals(grid_n);
    for (int i = 0; i < grid_n; ++i)
      vals[i] = center * (1.0 - span + 2.0 * span * i / (grid_n - 1));
    return vals;
  };
  for (double fq : axis(t.q))
    for (double fat : axis(t.alpha_t))
      for (double fbt : axis(t.beta_t)) {
        TradingParams fake = t;
        fake.q = fq;
        fake.alpha_t = fat;
        fake.beta_t = fbt;
        // Bid the fake problem's optimum, but collect utility under truth.
        double m_fake = std::max(0.0, pool_best_bid(fake));
        double u_fake = pool_utility_rate(t, m_fake, provider_best_markup(t, m_fake));
        ++rep.checked;
        double gap = u_fake - u_true;
        rep.worst_gap = std::max(rep.worst_gap, gap);
        if (gap > tol) ++rep.violations;
      }
  return rep;
}

// ---- random admissible scenarios ------------------------------------------
// Rejection-samples parameter sets that satisfy every analytic precondition:
// concave objectives (including across the whole ic_audit fake grid), an
// interior positive equilibrium, and a meaningful likelihood there.

inline TradingParams sample_admissible(SplitPrg& prg, double ic_span = 0.5) {
  for (int tries = 0; tries < 10000; ++tries) {
    TradingParams t;
    t.eps1 = prg.uniform_double(0.05, 0.6);
    t.eps2 = prg.uniform_double(0.05, std::min(0.85 - t.eps1, 0.6));
    if (t.eps3() < 0.1) continue;
    t.r = prg.uniform_double(0.05, 0.95);
    t.m_bar = prg.uniform_double(0.5, 3.0);
    t.ds_bar = prg.uniform_double(0.5, 3.0);
    t.eta = prg.uniform_double(1.05, 2.5);
    t.beta = prg.uniform_double(1.05 / t.eta, 3.0 / t.eta);
    t.beta_t = prg.uniform_double(1.05 / t.eta, 3.0 / t.eta);
    t.alpha = prg.uniform_double(0.2, 3.0);
    t.alpha_t = prg.uniform_double(0.2, 3.0);
    t.q = prg.uniform_double(1.0, 12.0);
    if (!(t.beta * t.eta > 1.02) || !(t.beta_t * t.eta > 1.02)) continue;
    GameCoeffs c{};
    try {
      c = GameCoeffs::from(t);
    } catch (const InvalidArgument&) {
      continue;
    }
    if (!(c.p1 * c.s1 < -1e-3)) continue;
    // Concavity must also hold across the audit's fake beta_t axis; p1*s1 is
    // linear in the fake value, so the two endpoints bound the whole grid.
    double s1_lo = ((1.0 - ic_span) * t.beta_t * t.eta - 1.0) * c.v - 1.0;
    double s1_hi = ((1.0 + ic_span) * t.beta_t * t.eta - 1.0) * c.v - 1.0;
    if (!(c.p1 * s1_lo < -1e-3) || !(c.p1 * s1_hi < -1e-3)) continue;
    Equilibrium e = solve_equilibrium(t);
    if (!(e.m_star > 0.05) || !(e.p_raw > 0.05)) continue;
    if (!std::isfinite(e.ds_star) || std::fabs(e.ds_star) > 50.0 || e.m_star > 50.0) continue;
    return t;
  }
  throw InvalidArgument("sample_admissible: rejection sampling exhausted");
}

}  // namespace pofl
