#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lsparcom/image.hpp"
#include "lsparcom/model.hpp"
#include "lsparcom/stats.hpp"

namespace lsparcom {

struct SolverConfig {
    double lambda = 0.0;
    int max_iters = 100;
    Formulation formulation = Formulation::var;
    bool accelerated = false;  ///< FISTA momentum
    double step_scale = 1.0;   ///< multiplier on 1 / L_f

    void validate() const;
};

struct SolverTrace {
    std::vector<double> objective_per_iter;  ///< objective after each iteration
    EmitterMap final_x;
    int iterations_run = 0;
};

/// The quadratic model behind both formulations: f(x) = 1/2 x^T M x - v^T x + c,
/// where c = 1/2 ||g_Y||^2 (var) or 1/2 ||R_y||_F^2 (cov).
struct SparseProblem {
    Eigen::VectorXd v;
    GramOperator gram;
    double data_energy = 0.0;  ///< the constant c
    int side = 0;              ///< N, for reshaping x

    double objective(const Eigen::VectorXd& x, const Eigen::VectorXd& mx, double lambda) const;
};

/// Variance formulation inputs: v = A~^T g_Y, M = A~^T A~ (matrix-free).
SparseProblem make_var_problem(const MeasurementOperator& a_sq, const Image& g_y);

/// Covariance formulation inputs: v_l = a_l^T R_y a_l, M = |A^T A|^2. `a` must be explicit.
SparseProblem make_cov_problem(const MeasurementOperator& a, const CovarianceMatrix& r_y);

/// Element-wise max(x - alpha, 0). Throws on negative alpha.
Eigen::ArrayXd positive_soft_threshold(const Eigen::ArrayXd& x, double alpha);
Image positive_soft_threshold(const Image& x, double alpha);

/// lambda ||x||_1 + 1/2 ||g_Y - A~ x||^2.
double objective_var(const Image& x, const MeasurementOperator& a_sq, const Image& g_y,
                     double lambda);

/// lambda ||x||_1 + 1/2 ||R_y - sum_l a_l a_l^T x_l||_F^2. `a` must be explicit.
double objective_cov(const Image& x, const MeasurementOperator& a, const CovarianceMatrix& r_y,
                     double lambda);

/// Proximal gradient iterations from x = 0:
///   x <- T+_{lambda/L}[ x - (M x - v) / L ]
SolverTrace ista_solve(const SparseProblem& problem, double lipschitz, const SolverConfig& config);

/// Same proximal step with Beck-Teboulle momentum (no restarts).
SolverTrace fista_solve(const SparseProblem& problem, double lipschitz, const SolverConfig& config);

/// Dispatches on config.accelerated.
SolverTrace solve(const SparseProblem& problem, double lipschitz, const SolverConfig& config);

}  // namespace lsparcom
