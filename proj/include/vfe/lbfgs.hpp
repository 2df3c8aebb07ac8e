#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vfe/numeric.hpp"

namespace vfe::opt
{
struct Evaluation
{
    Scalar value = 0;
    VecX gradient;
};

/// Returns std::nullopt when x is infeasible; the line search then backtracks.
using Objective = std::function<std::optional<Evaluation>(const VecX&)>;
/// Stopping measure of the gradient at x.
using GradientNorm = std::function<Scalar(const VecX& x, const VecX& gradient)>;
/// Approximate inverse Hessian applied to a vector.
using Preconditioner = std::function<VecX(const VecX&)>;
/// Maps a trial point back into the admissible set.
using Projection = std::function<VecX(const VecX&)>;
/// Called once per accepted iterate (including the initial point, iteration 0).
using Observer = std::function<void(int iteration, const VecX& x, Scalar value, Scalar gradient_norm)>;

struct LbfgsOptions
{
    int memory = 12;
    int max_iter = 2000;
    Scalar tolerance = 1e-8;
    int max_backtracks = 50;
    Scalar armijo = 1e-4;
};

enum class Status
{
    converged,
    max_iterations,
    stagnated,
};

struct LbfgsResult
{
    VecX x;
    Scalar value = 0;
    Scalar gradient_norm = 0;
    int iterations = 0;
    Status status = Status::max_iterations;
};

struct LbfgsHooks
{
    GradientNorm gradient_norm;
    Preconditioner preconditioner;
    Projection projection;
    Observer observer;
};

/// Limited-memory BFGS minimization with a backtracking line search (Armijo, or the
/// approximate Wolfe conditions once value differences reach rounding level). Accepted
/// values are nonincreasing up to a relative 1e-14 allowed in the approximate Wolfe branch.
/// A line search that fails `max_backtracks` times
/// is retried once along the preconditioned steepest-descent direction; a second
/// failure ends the run with Status::stagnated.
LbfgsResult minimize_lbfgs(const Objective& objective, const VecX& x0, const LbfgsOptions& options,
                           const LbfgsHooks& hooks = {});

std::string to_string(Status status);

} // namespace vfe::opt
