#pragma once

// Simulation scenarios: univariate laws for the Gini experiments with their
// exact Gini mean difference and U-statistic variance, and the paired
// multivariate scenarios for the independence tests.

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "splitstat/core.hpp"
#include "splitstat/dcov.hpp"
#include "splitstat/random.hpp"

namespace splitstat::harness {

enum class Family { normal, gamma, poisson };

// normal(mean, sd), gamma(shape, scale), poisson(lambda, unused)
struct Univariate {
  Family family = Family::normal;
  double p1 = 1.0;
  double p2 = 1.0;

  static Univariate normal(double mean = 1.0, double sd = 1.0) { return {Family::normal, mean, sd}; }
  static Univariate gamma(double shape = 3.0, double scale = 1.0) { return {Family::gamma, shape, scale}; }
  static Univariate poisson(double lambda = 4.0) { return {Family::poisson, lambda, 0.0}; }

  std::string name() const {
    switch (family) {
      case Family::normal: return "gaussian";
      case Family::gamma: return "gamma";
      case Family::poisson: return "poisson";
    }
    return "?";
  }
};

// The three laws of the simulation study: N(1,1), Gamma(3,1), Poisson(4).
inline Univariate scenario_by_name(const std::string& name) {
  if (name == "gaussian" || name == "normal") return Univariate::normal();
  if (name == "gamma") return Univariate::gamma();
  if (name == "poisson") return Univariate::poisson();
  detail::fail(Errc::invalid_argument, "unknown scenario '" + name + "' (gaussian, gamma, poisson)");
}

inline std::vector<double> draw(const Univariate& u, std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  switch (u.family) {
    case Family::normal: {
      std::normal_distribution<double> d(u.p1, u.p2);
      for (auto& v : out) v = d(rng);
      break;
    }
    case Family::gamma: {
      std::gamma_distribution<double> d(u.p1, u.p2);
      for (auto& v : out) v = d(rng);
      break;
    }
    case Family::poisson: {
      std::poisson_distribution<int> d(u.p1);
      for (auto& v : out) v = static_cast<double>(d(rng));
      break;
    }
  }
  return out;
}

inline DataTable draw_table(const Univariate& u, std::size_t n, SeedSpec seed) {
  Rng rng = derive_stream(seed, kDataLane, 0);
  return DataTable(draw(u, n, rng), 1);
}

namespace internal {

inline std::vector<double> poisson_pmf(double lambda) {
  std::vector<double> p;
  double v = std::exp(-lambda);
  for (int j = 0; j < 1000; ++j) {
    p.push_back(v);
    v *= lambda / (j + 1);
    if (j > lambda && v < 1e-300) break;
  }
  return p;
}

// g(x) = E|x - X| for the standard normal.
inline double std_normal_g(double z) {
  const boost::math::normal_distribution<double> nd;
  return z * (2.0 * boost::math::cdf(nd, z) - 1.0) + 2.0 * boost::math::pdf(nd, z);
}

template <class F>
double integrate(F f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

}  // namespace internal

// theta = E|X - X'|.
inline double true_gini(const Univariate& u) {
  switch (u.family) {
    case Family::normal: return 2.0 * u.p2 / std::sqrt(std::numbers::pi);
    case Family::gamma:
      return 2.0 * u.p2 * std::exp(std::lgamma(u.p1 + 0.5) - std::lgamma(u.p1)) / std::sqrt(std::numbers::pi);
    case Family::poisson: {
      const auto p = internal::poisson_pmf(u.p1);
      double s = 0.0;
      for (std::size_t j = 0; j < p.size(); ++j) {
        for (std::size_t k = 0; k < j; ++k) s += 2.0 * static_cast<double>(j - k) * p[j] * p[k];
      }
      return s;
    }
  }
  return 0.0;
}

// zeta_1 = Var g(X) with g(x) = E|x - X'|.
inline double gini_zeta1(const Univariate& u) {
  const double theta = true_gini(u);
  switch (u.family) {
    case Family::normal: {
      const boost::math::normal_distribution<double> nd;
      const double m2 = internal::integrate(
          [&](double z) {
            const double g = internal::std_normal_g(z);
            return g * g * boost::math::pdf(nd, z);
          },
          -12.0, 12.0);
      return u.p2 * u.p2 * m2 - theta * theta;
    }
    case Family::gamma: {
      const double a = u.p1;
      const double s = u.p2;
      // In units of the scale: g(x) = x(2P(a,x) - 1) + a - 2a P(a+1,x).
      const double upper = a + 60.0 * std::sqrt(a) + 60.0;
      const double m2 = internal::integrate(
          [&](double x) {
            if (x <= 0.0) return 0.0;
            const double g = x * (2.0 * boost::math::gamma_p(a, x) - 1.0) + a - 2.0 * a * boost::math::gamma_p(a + 1.0, x);
            const double dens = std::exp((a - 1.0) * std::log(x) - x - std::lgamma(a));
            return g * g * dens;
          },
          0.0, upper);
      return s * s * m2 - theta * theta;
    }
    case Family::poisson: {
      const auto p = internal::poisson_pmf(u.p1);
      double m2 = 0.0;
      for (std::size_t j = 0; j < p.size(); ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) g += std::abs(static_cast<double>(j) - static_cast<double>(k)) * p[k];
        m2 += g * g * p[j];
      }
      return m2 - theta * theta;
    }
  }
  return 0.0;
}

// zeta_2 = Var |X - X'| = 2 Var X - theta^2.
inline double gini_zeta2(const Univariate& u) {
  double var = 0.0;
  switch (u.family) {
    case Family::normal: var = u.p2 * u.p2; break;
    case Family::gamma: var = u.p1 * u.p2 * u.p2; break;
    case Family::poisson: var = u.p1; break;
  }
  const double theta = true_gini(u);
  return 2.0 * var - theta * theta;
}

// Var(U_n) = 4(n-2)/(n(n-1)) zeta_1 + 2/(n(n-1)) zeta_2.
inline double gini_u_variance(const Univariate& u, std::size_t n) {
  const double nn = static_cast<double>(n);
  return 4.0 * (nn - 2.0) / (nn * (nn - 1.0)) * gini_zeta1(u) + 2.0 / (nn * (nn - 1.0)) * gini_zeta2(u);
}

// Var(U_{N,K}) = sum_k (n_k / N)^2 Var(U_{n_k}) over independent blocks.
inline double gini_distributed_variance(const Univariate& u, std::span<const std::size_t> sizes) {
  const double z1 = gini_zeta1(u);
  const double z2 = gini_zeta2(u);
  double n = 0.0;
  for (auto s : sizes) n += static_cast<double>(s);
  double v = 0.0;
  for (auto s : sizes) {
    const double m = static_cast<double>(s);
    const double w = m / n;
    v += w * w * (4.0 * (m - 2.0) / (m * (m - 1.0)) * z1 + 2.0 / (m * (m - 1.0)) * z2);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Paired scenarios: I  N(0, I_p) x N(0, I_p)
//                   II N(0, I_p) x t_6^p
//                   III t_6^p x t_6^p
// With rho > 0 the underlying Gaussian pair has cor(Y_j, Z_k) = rho^{|j-k-p|}
// and identity within Y and within Z; t_6 components divide a Gaussian
// component by an independent sqrt(chi2_6 / 6).

enum class PairScenario { I, II, III };

inline PairScenario pair_scenario_by_name(const std::string& s) {
  if (s == "I" || s == "1" || s == "i") return PairScenario::I;
  if (s == "II" || s == "2" || s == "ii") return PairScenario::II;
  if (s == "III" || s == "3" || s == "iii") return PairScenario::III;
  detail::fail(Errc::invalid_argument, "unknown dcov scenario '" + s + "' (I, II, III)");
}

inline std::string to_string(PairScenario s) {
  switch (s) {
    case PairScenario::I: return "I";
    case PairScenario::II: return "II";
    case PairScenario::III: return "III";
  }
  return "?";
}

struct PairSpec {
  PairScenario scenario = PairScenario::I;
  std::size_t p = 5;
  double rho = 0.0;
};

class PairGenerator {
 public:
  explicit PairGenerator(PairSpec spec) : spec_(spec) {
    detail::require(spec.p >= 1, Errc::invalid_argument, "dimension p must be positive");
    detail::require(spec.rho >= 0.0 && spec.rho < 1.0, Errc::invalid_argument, "rho must lie in [0, 1)");
    if (spec.rho > 0.0) {
      const auto p = static_cast<Eigen::Index>(spec.p);
      Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(2 * p, 2 * p);
      for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index k = 0; k < p; ++k) {
          const double c = std::pow(spec.rho, static_cast<double>(std::abs(j - k - p)));
          sigma(j, p + k) = c;
          sigma(p + k, j) = c;
        }
      }
      Eigen::LLT<Eigen::MatrixXd> llt(sigma);
      detail::require(llt.info() == Eigen::Success, Errc::invalid_argument,
                      "cross-correlation matrix is not positive definite for this rho and p");
      chol_ = llt.matrixL();
    }
  }

  PairSample draw(std::size_t n, Rng& rng) const {
    const std::size_t p = spec_.p;
    std::normal_distribution<double> nd;
    std::chi_squared_distribution<double> chi(6.0);
    std::vector<double> y(n * p);
    std::vector<double> z(n * p);
    Eigen::VectorXd e(static_cast<Eigen::Index>(2 * p));
    Eigen::VectorXd w;
    const bool t_y = spec_.scenario == PairScenario::III;
    const bool t_z = spec_.scenario != PairScenario::I;
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : e) v = nd(rng);
      if (chol_.size() > 0) {
        w = chol_.triangularView<Eigen::Lower>() * e;
      } else {
        w = e;
      }
      for (std::size_t j = 0; j < p; ++j) {
        double a = w(static_cast<Eigen::Index>(j));
        double b = w(static_cast<Eigen::Index>(p + j));
        if (t_y) a /= std::sqrt(chi(rng) / 6.0);
        if (t_z) b /= std::sqrt(chi(rng) / 6.0);
        y[i * p + j] = a;
        z[i * p + j] = b;
      }
    }
    return PairSample(DataTable(std::move(y), p), DataTable(std::move(z), p));
  }

  const PairSpec& spec() const noexcept { return spec_; }

 private:
  PairSpec spec_;
  Eigen::MatrixXd chol_;
};

}  // namespace splitstat::harness
