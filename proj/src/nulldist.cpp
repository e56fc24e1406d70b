#include "nivtest/nulldist.hpp"

#include "nivtest/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace nivtest::nulldist {

namespace {

// AS 241 (Wichura): Phi^{-1}(p), double precision.
double std_normal_quantile(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) *
                    r +
                4.5921953931549871457e4) *
                   r +
               1.3731693765509461125e4) *
                  r +
              1.9715909503065514427e3) *
                 r +
             1.3314166789178437745e2) *
                r +
            3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) *
                    r +
                2.1213794301586595867e4) *
                   r +
               5.3941960214247511077e3) *
                  r +
              6.8718700749205790830e2) *
                 r +
             4.2313330701600911252e1) *
                r +
            1.0);
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) *
                    r +
                2.41780725177450611770e-1) *
                   r +
               1.27045825245236838258e0) *
                  r +
              3.64784832476320460504e0) *
                 r +
             5.76949722146069140550e0) *
                r +
            4.63033784615654529590e0) *
               r +
           1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) *
                    r +
                1.51986665636164571966e-2) *
                   r +
               1.48103976427480074590e-1) *
                  r +
              6.89767334985100004550e-1) *
                 r +
             1.67638483018380384940e0) *
                r +
            2.05319162663775882187e0) *
               r +
           1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) *
                    r +
                1.24266094738807843860e-3) *
                   r +
               2.65321895265761230930e-2) *
                  r +
              2.96560571828504891230e-1) *
                 r +
             1.78482653991729133580e0) *
                r +
            5.46378491116411436990e0) *
               r +
           6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) *
                    r +
                1.84631831751005468180e-5) *
                   r +
               7.86869131145613259100e-4) *
                  r +
              1.48753612908506148525e-2) *
                 r +
             1.36929880922735805310e-1) *
                r +
            5.99832206555887937690e-1) *
               r +
           1.0);
  }
  return q < 0 ? -val : val;
}

// Recursive adaptive Simpson with error estimate from Richardson.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_segment(const std::function<double(double)>& f, double a,
                         double b, double fa, double fb, double tol) {
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 45);
}

// Cohen-Villegas-Zagier acceleration of an alternating series whose terms
// are given with signs (a[0] - a[1] + a[2] - ... expected after factoring
// the leading sign out). Input: magnitudes of the first n terms.
double cvz_alternating_sum(const std::vector<double>& mag) {
  const int n = static_cast<int>(mag.size());
  double d = std::pow(3.0 + std::sqrt(8.0), n);
  d = 0.5 * (d + 1.0 / d);
  double b = -1.0;
  double c = -d;
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    c = b - c;
    s += c * mag[k];
    b = (k + n) * (k - n) * b / ((k + 0.5) * (k + 1.0));
  }
  return s / d;
}

struct ImhofIntegrand {
  std::vector<double> mu;  // positive weights scaled so max = 1
  double y;                // x scaled by the same factor

  double sum_mu() const {
    double s = 0.0;
    for (double m : mu) s += m;
    return s;
  }

  double theta(double u) const {
    double s = 0.0;
    for (double m : mu) s += std::atan(m * u);
    return 0.5 * s - 0.5 * y * u;
  }

  // Upper bound for |theta'| on [u, inf).
  double slope_bound(double u) const {
    double a = 0.0;
    for (double m : mu) a += m / (1.0 + m * m * u * u);
    return 0.5 * a + 0.5 * y;
  }

  double operator()(double u) const {
    if (u <= 0.0) return 0.5 * (sum_mu() - y);
    double th = 0.0;
    double lnrho = 0.0;
    for (double m : mu) {
      const double mu_u = m * u;
      if (mu_u < 1e-8) {  // atan(x) = x, log1p(x^2) = x^2 to double precision
        th += mu_u;
        lnrho += mu_u * mu_u;
      } else {
        th += std::atan(mu_u);
        lnrho += std::log1p(mu_u * mu_u);
      }
    }
    th = 0.5 * th - 0.5 * y * u;
    return std::sin(th) * std::exp(-0.25 * lnrho) / u;
  }
};

// Integrates the Imhof integrand over [0, inf). Segments are delimited by
// the crossings theta(u) = k*pi, so that sin(theta) has constant sign on
// each segment; once segment integrals settle into an alternating run, the
// remaining tail is summed by series acceleration.
double imhof_integral(const ImhofIntegrand& g) {
  constexpr double kSegTol = 2e-11;
  constexpr int kMaxSegments = 4000;
  constexpr int kRunLength = 18;

  const std::function<double(double)> f = [&g](double u) { return g(u); };

  double total = 0.0;
  std::vector<double> segs;
  segs.reserve(128);

  auto band = [](double t) {
    return static_cast<long>(std::floor(t / M_PI));
  };

  double u = 0.0;
  double th = 0.0;
  long cur_band = 0;
  double seg_start = 0.0;
  double f_seg_start = g(0.0);
  int tiny_in_a_row = 0;

  while (static_cast<int>(segs.size()) < kMaxSegments) {
    // walk forward until theta enters a new pi-band; the step keeps
    // |delta theta| <= pi/2, so bands change by at most one
    const double du = M_PI / (2.0 * g.slope_bound(u));
    const double u2 = u + du;
    const double th2 = g.theta(u2);
    const long b2 = band(th2);
    if (b2 == cur_band) {
      u = u2;
      th = th2;
      continue;
    }
    // bisect the crossing of the band boundary
    const double boundary =
        static_cast<double>(b2 > cur_band ? cur_band + 1 : cur_band) * M_PI;
    double lo = u, hi = u2;
    const double side = th - boundary;
    for (int it = 0; it < 100 && hi - lo > 1e-13 * (1.0 + hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((g.theta(mid) - boundary) * side > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double u_cross = 0.5 * (lo + hi);
    const double f_cross = g(u_cross);
    const double seg =
        integrate_segment(f, seg_start, u_cross, f_seg_start, f_cross, kSegTol);
    segs.push_back(seg);
    total += seg;

    seg_start = u_cross;
    f_seg_start = f_cross;
    u = u2;  // the overshoot point is strictly inside the new band
    th = th2;
    cur_band = b2;

    if (std::abs(seg) < kSegTol) {
      if (++tiny_in_a_row >= 2) return total;
    } else {
      tiny_in_a_row = 0;
    }

    // once segment integrals settle into an alternating run with shrinking
    // magnitudes, extrapolate the remaining tail; two staggered
    // extrapolations must agree before the result is accepted
    const int ns = static_cast<int>(segs.size());
    if (ns >= kRunLength) {
      int run = 1;
      for (int i = ns - 1; i > 0; --i) {
        const bool alternates = segs[i] * segs[i - 1] < 0.0;
        const bool shrinks = std::abs(segs[i]) <= std::abs(segs[i - 1]);
        if (alternates && shrinks) {
          ++run;
        } else {
          break;
        }
      }
      if (run >= kRunLength) {
        const int start = ns - run;
        double head = 0.0;
        for (int i = 0; i < start; ++i) head += segs[i];
        std::vector<double> mag(segs.begin() + start, segs.end());
        const double sign = mag[0] < 0.0 ? -1.0 : 1.0;
        for (double& v : mag) v = std::abs(v);

        const int skip = 4;
        const double tail_full = cvz_alternating_sum(mag);
        double head_skip = 0.0;
        double sgn = 1.0;
        for (int i = 0; i < skip; ++i) {
          head_skip += sgn * mag[i];
          sgn = -sgn;
        }
        const std::vector<double> rest(mag.begin() + skip, mag.end());
        const double tail_skip = head_skip + sgn * cvz_alternating_sum(rest);
        if (std::abs(tail_full - tail_skip) <= 1e-8) {
          // partial sums of a monotone alternating series bracket the limit
          double s_n = 0.0;
          sgn = 1.0;
          for (double v : mag) {
            s_n += sgn * v;
            sgn = -sgn;
          }
          const double s_prev = s_n + sgn * mag.back();
          const double tail = std::clamp(tail_skip, std::min(s_n, s_prev),
                                         std::max(s_n, s_prev));
          return head + sign * tail;
        }
      }
    }
  }
  throw Error(ErrorCode::IntegrationFailure,
              "mixture_survival: integral did not settle");
}

}  // namespace

MixtureWeights::MixtureWeights(VectorXd lambdas) : lambdas_(std::move(lambdas)) {
  if (!lambdas_.allFinite()) {
    throw Error(ErrorCode::NonFinite, "MixtureWeights: non-finite weight");
  }
  for (Eigen::Index i = 0; i < lambdas_.size(); ++i) {
    if (lambdas_(i) < 0.0) {
      throw Error(ErrorCode::OutOfRange,
                  "MixtureWeights: negative weight (clip eigenvalues first)");
    }
  }
  std::sort(lambdas_.data(), lambdas_.data() + lambdas_.size(),
            std::greater<double>());
  n_positive_ = 0;
  while (n_positive_ < lambdas_.size() && lambdas_(n_positive_) > 0.0) {
    ++n_positive_;
  }
}

double mixture_survival(const MixtureWeights& w, double x) {
  if (!std::isfinite(x)) {
    throw Error(ErrorCode::NonFinite, "mixture_survival: x not finite");
  }
  if (w.degenerate()) {
    throw Error(ErrorCode::DegenerateMixture,
                "mixture_survival: all weights are zero");
  }
  if (x <= 0.0) return 1.0;

  const auto& lam = w.lambdas();
  const double scale = lam(0);
  ImhofIntegrand g;
  g.y = x / scale;
  g.mu.reserve(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double m = lam(i) / scale;
    if (m >= 1e-14) g.mu.push_back(m);
  }
  const double p = 0.5 + imhof_integral(g) / M_PI;
  return std::clamp(p, 0.0, 1.0);
}

double mixture_quantile(const MixtureWeights& w, double alpha) {
  if (w.degenerate()) {
    throw Error(ErrorCode::DegenerateMixture,
                "mixture_quantile: all weights are zero");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::OutOfRange,
                "mixture_quantile: alpha must lie in (0,1)");
  }
  // solve at unit scale so bracketing tolerances are scale-free; the
  // quantile is exactly scale equivariant
  if (w.lambdas()(0) != 1.0) {
    const double scale = w.lambdas()(0);
    MixtureWeights unit{(w.lambdas() / scale).eval()};
    return scale * mixture_quantile(unit, alpha);
  }
  const auto& lam = w.lambdas();
  const double lam_sum = lam.sum();
  const double lam_max = lam(0);

  const double z = normal_quantile(alpha / 2.0);
  double hi = lam_sum * z * z + 50.0 * lam_max;
  double lo = 0.0;
  double f_hi = mixture_survival(w, hi) - alpha;
  int expand = 0;
  while (f_hi > 0.0) {
    lo = hi;
    hi *= 2.0;
    f_hi = mixture_survival(w, hi) - alpha;
    if (++expand > 200) {
      throw Error(ErrorCode::NoConvergence,
                  "mixture_quantile: bracket expansion failed");
    }
  }
  double f_lo = mixture_survival(w, lo) - alpha;
  if (f_lo < 0.0) {
    throw Error(ErrorCode::NoConvergence, "mixture_quantile: bad bracket");
  }

  // Illinois-damped regula falsi with bisection fallback.
  double best = hi;
  double f_best = f_hi;
  for (int it = 0; it < 500; ++it) {
    double mid;
    if (f_lo - f_hi > 0.0) {
      mid = lo + (hi - lo) * f_lo / (f_lo - f_hi);
      if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    } else {
      mid = 0.5 * (lo + hi);
    }
    const double f_mid = mixture_survival(w, mid) - alpha;
    if (std::abs(f_mid) < std::abs(f_best)) {
      best = mid;
      f_best = f_mid;
    }
    if (std::abs(f_mid) <= 1e-6) return mid;
    if (f_mid > 0.0) {
      lo = mid;
      f_lo = f_mid;
      f_hi *= 0.5;
    } else {
      hi = mid;
      f_hi = f_mid;
      f_lo *= 0.5;
    }
    if (hi - lo <= 1e-13 * (1.0 + hi)) break;
  }
  if (std::abs(f_best) <= 1e-5) return best;
  throw Error(ErrorCode::NoConvergence,
              "mixture_quantile: root refinement failed");
}

double mixture_quantile_mc(const MixtureWeights& w, double alpha, long draws,
                           std::uint64_t seed) {
  if (draws < 1) {
    throw Error(ErrorCode::OutOfRange, "mixture_quantile_mc: draws must be >= 1");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::OutOfRange,
                "mixture_quantile_mc: alpha must lie in (0,1)");
  }
  const auto& lam = w.lambdas();
  CounterRng rng(seed);
  std::vector<double> q(static_cast<std::size_t>(draws));
  for (long d = 0; d < draws; ++d) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < lam.size(); ++j) {
      if (lam(j) <= 0.0) break;  // sorted descending, zeros draw nothing
      const double gj = rng.next_normal();
      acc += lam(j) * gj * gj;
    }
    q[static_cast<std::size_t>(d)] = acc;
  }
  std::sort(q.begin(), q.end());
  const double rank = std::ceil((1.0 - alpha) * static_cast<double>(draws));
  long idx = static_cast<long>(rank) - 1;
  idx = std::clamp(idx, 0L, draws - 1);
  return q[static_cast<std::size_t>(idx)];
}

double normal_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::OutOfRange,
                "normal_quantile: alpha must lie in (0,1)");
  }
  // Phi^{-1}(1 - alpha) = -Phi^{-1}(alpha); the right-hand form keeps full
  // precision for small alpha.
  return -std_normal_quantile(alpha);
}

double normal_survival(double t) { return 0.5 * std::erfc(t / std::sqrt(2.0)); }

}  // namespace nivtest::nulldist
