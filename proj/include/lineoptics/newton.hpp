#ifndef LINEOPTICS_NEWTON_HPP
#define LINEOPTICS_NEWTON_HPP

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace lineoptics {

using VectorX = Eigen::VectorXd;

/// A residual map R^n -> R^m (m >= n). Returning nullopt marks the point as
/// outside the map's domain (e.g. a chart-excluded direction); the solver
/// backs off from such points.
using ResidualMap = std::function<std::optional<VectorX>(const VectorX&)>;

struct NewtonOptions {
  double tol = 1e-12;     // stop once max |residual| drops below this
  double accept = 1e-10;  // a root is certified when max |residual| < accept
  int max_iter = 50;
  double fd_step = 1e-7;  // central-difference step, scaled by max(1, |x_j|)
};

enum class NewtonStatus { Converged, Stalled, MaxIterations, EvaluationFailed };

struct NewtonResult {
  VectorX x;
  double residual = 0.0;  // max-norm of the residual at x
  int iterations = 0;
  NewtonStatus status = NewtonStatus::EvaluationFailed;
  double accept = 1e-10;

  bool accepted() const { return status != NewtonStatus::EvaluationFailed && residual < accept; }
};

/// Damped Gauss-Newton with a finite-difference Jacobian. Steps come from an
/// SVD pseudo-inverse, so rank-deficient systems (continua of roots) converge
/// to the nearest point of the solution set instead of blowing up. For square
/// regular systems this is plain Newton.
NewtonResult newton_solve(const ResidualMap& f, const VectorX& seed, const NewtonOptions& opts = {});

/// Settings shared by every multistart root search over a parameter rectangle.
struct SolveOptions {
  int grid = 16;            // seeds per side of the parameter rectangle
  double dedup = 1e-6;      // roots closer than this are merged
  double suspicion = 1e-6;  // unconverged endpoints below this signal SolverFailure
  NewtonOptions newton;
};

struct MultistartReport {
  std::vector<NewtonResult> roots;  // accepted, deduplicated, sorted lexicographically
  double best_unaccepted = 0.0;     // smallest residual among seeds that failed
  bool stalled_near_root = false;   // a seed stalled below the suspicion threshold where `keep` holds
};

/// Runs newton_solve from every seed. Accepted roots that pass `keep` are
/// deduplicated at opts.dedup (keeping the smaller residual).
MultistartReport multistart_solve(const ResidualMap& f, const std::vector<VectorX>& seeds,
                                  const SolveOptions& opts,
                                  const std::function<bool(const VectorX&)>& keep = {});

}  // namespace lineoptics

#endif  // LINEOPTICS_NEWTON_HPP
