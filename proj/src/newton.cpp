#include "lineoptics/newton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

namespace lineoptics {

namespace {

constexpr double kSvdThreshold = 1e-8;
constexpr int kMaxHalvings = 12;

double max_norm(const VectorX& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

bool all_finite(const VectorX& v) { return v.allFinite(); }

std::optional<VectorX> evaluate(const ResidualMap& f, const VectorX& x) {
  auto y = f(x);
  if (!y || !all_finite(*y)) return std::nullopt;
  return y;
}

std::optional<Eigen::MatrixXd> fd_jacobian(const ResidualMap& f, const VectorX& x, const VectorX& fx,
                                           double step) {
  const auto n = x.size();
  Eigen::MatrixXd jac(fx.size(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = step * std::max(1.0, std::abs(x[j]));
    VectorX xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    auto fp = evaluate(f, xp);
    auto fm = evaluate(f, xm);
    if (fp && fm && fp->size() == fx.size() && fm->size() == fx.size()) {
      jac.col(j) = (*fp - *fm) / (2.0 * h);
    } else if (fp && fp->size() == fx.size()) {
      jac.col(j) = (*fp - fx) / h;
    } else if (fm && fm->size() == fx.size()) {
      jac.col(j) = (fx - *fm) / h;
    } else {
      return std::nullopt;
    }
  }
  return jac;
}

bool lexicographic_less(const VectorX& a, const VectorX& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace

NewtonResult newton_solve(const ResidualMap& f, const VectorX& seed, const NewtonOptions& opts) {
  NewtonResult out;
  out.x = seed;
  out.accept = opts.accept;
  out.residual = std::numeric_limits<double>::infinity();

  auto fx = evaluate(f, seed);
  if (!fx) return out;
  out.residual = max_norm(*fx);
  out.status = NewtonStatus::MaxIterations;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (out.residual < opts.tol) {
      out.status = NewtonStatus::Converged;
      return out;
    }
    auto jac = fd_jacobian(f, out.x, *fx, opts.fd_step);
    if (!jac) {
      out.status = NewtonStatus::Stalled;
      return out;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(*jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(kSvdThreshold);
    const VectorX step = -svd.solve(*fx);
    if (!all_finite(step)) {
      out.status = NewtonStatus::Stalled;
      return out;
    }

    const double current = fx->squaredNorm();
    double lambda = 1.0;
    bool improved = false;
    for (int k = 0; k <= kMaxHalvings; ++k, lambda *= 0.5) {
      const VectorX trial = out.x + lambda * step;
      auto ft = evaluate(f, trial);
      if (ft && ft->squaredNorm() < current) {
        out.x = trial;
        fx = std::move(ft);
        improved = true;
        break;
      }
    }
    out.iterations = iter + 1;
    if (!improved) {
      out.status = NewtonStatus::Stalled;
      return out;
    }
    out.residual = max_norm(*fx);
  }
  if (out.residual < opts.tol) out.status = NewtonStatus::Converged;
  return out;
}

MultistartReport multistart_solve(const ResidualMap& f, const std::vector<VectorX>& seeds,
                                  const SolveOptions& opts,
                                  const std::function<bool(const VectorX&)>& keep) {
  MultistartReport report;
  report.best_unaccepted = std::numeric_limits<double>::infinity();

  std::vector<NewtonResult> found;
  for (const auto& seed : seeds) {
    NewtonResult res = newton_solve(f, seed, opts.newton);
    if (res.accepted()) {
      if (keep && !keep(res.x)) continue;
      found.push_back(std::move(res));
    } else if (res.status != NewtonStatus::EvaluationFailed && (!keep || keep(res.x))) {
      report.best_unaccepted = std::min(report.best_unaccepted, res.residual);
      if (res.residual < opts.suspicion) report.stalled_near_root = true;
    }
  }

  // Merge near-duplicates, best residual first so it wins the merge.
  std::sort(found.begin(), found.end(),
            [](const NewtonResult& a, const NewtonResult& b) { return a.residual < b.residual; });
  for (auto& cand : found) {
    const bool dup = std::any_of(report.roots.begin(), report.roots.end(), [&](const NewtonResult& r) {
      return (r.x - cand.x).norm() < opts.dedup;
    });
    if (!dup) report.roots.push_back(std::move(cand));
  }
  std::sort(report.roots.begin(), report.roots.end(),
            [](const NewtonResult& a, const NewtonResult& b) { return lexicographic_less(a.x, b.x); });
  return report;
}

}  // namespace lineoptics
