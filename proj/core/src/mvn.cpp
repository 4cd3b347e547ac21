#include "tailtree/mvn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "tailtree/normal.hpp"
#include "tailtree/rng.hpp"

namespace tailtree {

namespace {

void require_symmetric(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols())
    throw DimensionMismatch("covariance matrix is not square");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw NotPositiveDefinite("covariance matrix is not symmetric");
}

bool try_cholesky(const Eigen::MatrixXd& a, Eigen::MatrixXd& l) {
  const Eigen::Index p = a.rows();
  l.setZero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) return false;
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return true;
}

}  // namespace

Eigen::MatrixXd cholesky(const Eigen::MatrixXd& cov) {
  require_symmetric(cov);
  Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::MatrixXd l;
  if (try_cholesky(sym, l)) return l;
  const double jitter = 1e-12 * sym.trace() / static_cast<double>(sym.rows());
  sym.diagonal().array() += jitter;
  if (try_cholesky(sym, l)) return l;
  throw NotPositiveDefinite("covariance matrix is not positive definite");
}

double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const Eigen::MatrixXd& cov) {
  if (x.size() != mean.size() || x.size() != cov.rows())
    throw DimensionMismatch("mvn_logpdf dimensions disagree");
  const Eigen::MatrixXd l = cholesky(cov);
  const Eigen::VectorXd z = l.triangularView<Eigen::Lower>().solve(x - mean);
  const double log_det = l.diagonal().array().log().sum();
  constexpr double log_2pi = 1.8378770664093454836;
  return -0.5 * static_cast<double>(x.size()) * log_2pi - log_det -
         0.5 * z.squaredNorm();
}

namespace {

constexpr double kSqrtPrimes[] = {
    1.4142135623730951, 1.7320508075688772, 2.23606797749979,
    2.6457513110645907, 3.3166247903554,    3.605551275463989,
    4.123105625617661,  4.358898943540674,  4.795831523312719,
    5.385164807134504,  5.5677643628300215, 6.082762530298219,
    6.4031242374328485, 6.557438524302,     6.855654600401044,
    7.280109889280518};

struct OrderedFactor {
  Eigen::MatrixXd l;  // lower-triangular after reordering
  Eigen::VectorXd b;  // reordered finite upper limits
  bool underflow_zero = false;
};

/// Cholesky with greedy variable selection: at each step pick the remaining
/// variable whose conditional probability (at the truncated means of the
/// earlier ones) is smallest. Shrinks the integrand's variance without
/// changing the integral.
OrderedFactor ordered_cholesky(Eigen::MatrixXd c, Eigen::VectorXd b) {
  const Eigen::Index p = c.rows();
  OrderedFactor out;
  out.l.setZero(p, p);
  out.b = b;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(p);
  bool applied_jitter = false;
  for (Eigen::Index i = 0; i < p; ++i) {
    Eigen::Index best = i;
    double best_prob = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = i; j < p; ++j) {
      double var = c(j, j);
      double shift = 0.0;
      for (Eigen::Index k = 0; k < i; ++k) {
        var -= out.l(j, k) * out.l(j, k);
        shift += out.l(j, k) * y(k);
      }
      const double sd = std::sqrt(std::max(var, 0.0));
      const double prob = sd > 0.0 ? norm_cdf((out.b(j) - shift) / sd)
                                   : (out.b(j) - shift >= 0.0 ? 1.0 : 0.0);
      if (prob < best_prob) {
        best_prob = prob;
        best = j;
      }
    }
    if (best != i) {
      c.row(best).swap(c.row(i));
      c.col(best).swap(c.col(i));
      out.l.row(best).swap(out.l.row(i));
      std::swap(out.b(best), out.b(i));
    }
    double var = c(i, i);
    double shift = 0.0;
    for (Eigen::Index k = 0; k < i; ++k) {
      var -= out.l(i, k) * out.l(i, k);
      shift += out.l(i, k) * y(k);
    }
    if (var <= 0.0) {
      if (applied_jitter)
        throw NotPositiveDefinite("covariance matrix is not positive definite");
      applied_jitter = true;
      const double jitter = 1e-12 * c.trace() / static_cast<double>(p);
      c.diagonal().array() += jitter;
      var += jitter;
      if (var <= 0.0)
        throw NotPositiveDefinite("covariance matrix is not positive definite");
    }
    out.l(i, i) = std::sqrt(var);
    for (Eigen::Index r = i + 1; r < p; ++r) {
      double s = c(r, i);
      for (Eigen::Index k = 0; k < i; ++k) s -= out.l(r, k) * out.l(i, k);
      out.l(r, i) = s / out.l(i, i);
    }
    const double z = (out.b(i) - shift) / out.l(i, i);
    const double cdf = norm_cdf(z);
    if (cdf <= 0.0) {
      // probability below double underflow along every path
      out.underflow_zero = true;
      return out;
    }
    y(i) = -norm_pdf(z) / cdf;  // truncated-normal mean E[Z | Z <= z]
  }
  return out;
}

/// One separation-of-variables evaluation at point w in [0,1)^(p-1).
double sov_integrand(const OrderedFactor& f, const double* w) {
  const Eigen::Index p = f.l.rows();
  double prod = 1.0;
  double y[kMaxMvnDim];
  for (Eigen::Index i = 0; i < p; ++i) {
    double shift = 0.0;
    for (Eigen::Index k = 0; k < i; ++k) shift += f.l(i, k) * y[k];
    const double z = (f.b(i) - shift) / f.l(i, i);
    const double e = norm_cdf(z);
    if (e <= 0.0) return 0.0;
    prod *= e;
    if (i + 1 < p) {
      const double u =
          std::clamp(e * w[i], 1e-300, 1.0 - std::numeric_limits<double>::epsilon() / 2);
      y[i] = norm_quantile(u);
    }
  }
  return prod;
}

}  // namespace

CdfResult mvn_cdf(const Eigen::VectorXd& upper, const Eigen::VectorXd& mean,
                  const Eigen::MatrixXd& cov, const MvnOptions& options) {
  const Eigen::Index p = upper.size();
  if (mean.size() != p || cov.rows() != p || cov.cols() != p)
    throw DimensionMismatch("mvn_cdf dimensions disagree");
  if (p < 1) throw DimensionMismatch("mvn_cdf needs dimension >= 1");
  if (p > kMaxMvnDim)
    throw DimensionMismatch("mvn_cdf supports dimension <= " +
                            std::to_string(kMaxMvnDim));
  if (options.tol <= 0.0) throw DimensionMismatch("tolerance must be positive");
  require_symmetric(cov);

  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd b = upper - mean;
  for (Eigen::Index i = 0; i < p; ++i)
    if (b(i) == -inf) return CdfResult{0.0, 0.0, 0};

  // coordinates with an infinite limit integrate out exactly
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < p; ++i)
    if (b(i) < inf) keep.push_back(i);
  if (keep.empty()) return CdfResult{1.0, 0.0, 0};

  const Eigen::Index q = static_cast<Eigen::Index>(keep.size());
  Eigen::VectorXd bq(q);
  Eigen::MatrixXd cq(q, q);
  for (Eigen::Index i = 0; i < q; ++i) {
    bq(i) = b(keep[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < q; ++j)
      cq(i, j) = cov(keep[static_cast<std::size_t>(i)],
                     keep[static_cast<std::size_t>(j)]);
  }

  if (q == 1) {
    if (cq(0, 0) <= 0.0) throw NotPositiveDefinite("variance must be positive");
    return CdfResult{norm_cdf(bq(0) / std::sqrt(cq(0, 0))), 0.0, 1};
  }

  OrderedFactor f = ordered_cholesky(cq, bq);
  if (f.underflow_zero) return CdfResult{0.0, 0.0, 0};

  constexpr int kShifts = 12;
  const int dim = static_cast<int>(q) - 1;
  double shift[kShifts][kMaxMvnDim];
  {
    RngStream rng(0x7461696C74726565ull, rng_purpose::kMvnShift);
    for (auto& row : shift)
      for (int k = 0; k < dim; ++k) row[k] = rng.next_unit_open();
  }

  double sums[kShifts] = {};
  long counts = 0;
  long evaluations = 0;
  CdfResult out;
  long batch = 128;
  for (;;) {
    for (int s = 0; s < kShifts; ++s) {
      double w[kMaxMvnDim];
      for (long j = counts + 1; j <= counts + batch; ++j) {
        for (int k = 0; k < dim; ++k) {
          const double v =
              std::fmod(static_cast<double>(j) * kSqrtPrimes[k] + shift[s][k], 1.0);
          w[k] = std::fabs(2.0 * v - 1.0);  // baker's transform
        }
        sums[s] += sov_integrand(f, w);
      }
    }
    counts += batch;
    evaluations += batch * kShifts;

    double m = 0.0;
    for (double s : sums) m += s / static_cast<double>(counts);
    m /= kShifts;
    double var = 0.0;
    for (double s : sums) {
      const double d = s / static_cast<double>(counts) - m;
      var += d * d;
    }
    var /= kShifts * (kShifts - 1);
    out.value = std::clamp(m, 0.0, 1.0);
    out.error_estimate = 3.0 * std::sqrt(var);
    out.evaluations = evaluations;
    if (out.error_estimate <= options.tol ||
        evaluations >= options.max_evaluations)
      return out;
    batch = std::min(2 * batch,
                     (options.max_evaluations - evaluations) / kShifts + 1);
  }
}

}  // namespace tailtree
