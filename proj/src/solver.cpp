#include "lsparcom/solver.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lsparcom {

void SolverConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("SolverConfig: lambda must be finite and >= 0");
    }
    if (max_iters < 1) throw std::invalid_argument("SolverConfig: max_iters must be >= 1");
    if (!(step_scale > 0.0)) throw std::invalid_argument("SolverConfig: step_scale must be positive");
}

double SparseProblem::objective(const Eigen::VectorXd& x, const Eigen::VectorXd& mx,
                                double lambda) const {
    return lambda * x.lpNorm<1>() + 0.5 * x.dot(mx) - v.dot(x) + data_energy;
}

SparseProblem make_var_problem(const MeasurementOperator& a_sq, const Image& g_y) {
    SparseProblem p;
    p.v = compute_v_var(a_sq, g_y);
    p.gram = gram_operator(a_sq, Formulation::var);
    p.data_energy = 0.5 * g_y.square().sum();
    p.side = a_sq.grid().high_side();
    return p;
}

SparseProblem make_cov_problem(const MeasurementOperator& a, const CovarianceMatrix& r_y) {
    SparseProblem p;
    p.v = compute_v_cov(a, r_y);
    p.gram = gram_operator(a, Formulation::cov);
    p.data_energy = 0.5 * r_y.values.squaredNorm();
    p.side = a.grid().high_side();
    return p;
}

Eigen::ArrayXd positive_soft_threshold(const Eigen::ArrayXd& x, double alpha) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("positive_soft_threshold: alpha must be >= 0");
    return (x - alpha).max(0.0);
}

Image positive_soft_threshold(const Image& x, double alpha) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("positive_soft_threshold: alpha must be >= 0");
    return (x - alpha).max(0.0);
}

double objective_var(const Image& x, const MeasurementOperator& a_sq, const Image& g_y,
                     double lambda) {
    if (g_y.rows() != a_sq.grid().low_side || g_y.cols() != a_sq.grid().low_side) {
        throw std::invalid_argument("objective_var: g_Y does not match the grid");
    }
    const Image r = g_y - a_sq.forward(x);
    return lambda * x.abs().sum() + 0.5 * r.square().sum();
}

double objective_cov(const Image& x, const MeasurementOperator& a, const CovarianceMatrix& r_y,
                     double lambda) {
    const Eigen::MatrixXd& mat = a.matrix();
    if (x.size() != mat.cols() || r_y.values.rows() != mat.rows()) {
        throw std::invalid_argument("objective_cov: shape mismatch");
    }
    const Eigen::VectorXd xv = as_vector(x);
    const Eigen::MatrixXd model = mat * xv.asDiagonal() * mat.transpose();
    return lambda * xv.lpNorm<1>() + 0.5 * (r_y.values - model).squaredNorm();
}

namespace {

void check_inputs(const SparseProblem& problem, double lipschitz, const SolverConfig& config) {
    config.validate();
    if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) {
        throw std::invalid_argument("solver: Lipschitz constant must be positive and finite");
    }
    if (problem.v.size() != problem.gram.dim) {
        throw std::invalid_argument("solver: v does not match the operator dimension");
    }
    if (Eigen::Index{problem.side} * problem.side != problem.v.size()) {
        throw std::invalid_argument("solver: side does not match v");
    }
}

void check_finite(const Eigen::VectorXd& x, int iteration) {
    if (!x.allFinite()) {
        std::ostringstream msg;
        msg << "solver: non-finite iterate at iteration " << iteration;
        throw std::runtime_error(msg.str());
    }
}

SolverTrace finish(const SparseProblem& problem, Eigen::VectorXd x, SolverTrace trace) {
    // The prox output is already >= 0; this only normalizes -0.0.
    x = x.cwiseMax(0.0);
    trace.final_x = EmitterMap(as_image(x, problem.side, problem.side));
    return trace;
}

}  // namespace

SolverTrace ista_solve(const SparseProblem& problem, double lipschitz, const SolverConfig& config) {
    check_inputs(problem, lipschitz, config);
    const double step = config.step_scale / lipschitz;
    const double thresh = config.lambda * step;
    SolverTrace trace;
    trace.objective_per_iter.reserve(static_cast<std::size_t>(config.max_iters));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(problem.v.size());
    Eigen::VectorXd mx = Eigen::VectorXd::Zero(problem.v.size());
    for (int k = 0; k < config.max_iters; ++k) {
        const Eigen::ArrayXd z = (x + step * (problem.v - mx)).array();
        x = positive_soft_threshold(z, thresh).matrix();
        check_finite(x, k + 1);
        mx = problem.gram(x);
        trace.objective_per_iter.push_back(problem.objective(x, mx, config.lambda));
        trace.iterations_run = k + 1;
    }
    return finish(problem, std::move(x), std::move(trace));
}

SolverTrace fista_solve(const SparseProblem& problem, double lipschitz, const SolverConfig& config) {
    check_inputs(problem, lipschitz, config);
    const double step = config.step_scale / lipschitz;
    const double thresh = config.lambda * step;
    SolverTrace trace;
    trace.objective_per_iter.reserve(static_cast<std::size_t>(config.max_iters));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(problem.v.size());
    Eigen::VectorXd x_prev = x;
    Eigen::VectorXd y = x;
    double t = 1.0;
    for (int k = 0; k < config.max_iters; ++k) {
        const Eigen::VectorXd my = problem.gram(y);
        const Eigen::ArrayXd z = (y + step * (problem.v - my)).array();
        x_prev = x;
        x = positive_soft_threshold(z, thresh).matrix();
        check_finite(x, k + 1);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = x + ((t - 1.0) / t_next) * (x - x_prev);
        t = t_next;
        const Eigen::VectorXd mx = problem.gram(x);
        trace.objective_per_iter.push_back(problem.objective(x, mx, config.lambda));
        trace.iterations_run = k + 1;
    }
    return finish(problem, std::move(x), std::move(trace));
}

SolverTrace solve(const SparseProblem& problem, double lipschitz, const SolverConfig& config) {
    return config.accelerated ? fista_solve(problem, lipschitz, config)
                              : ista_solve(problem, lipschitz, config);
}

}  // namespace lsparcom
