#include "vfe/lbfgs.hpp"

#include <cmath>
#include <deque>

#include "vfe/errors.hpp"

namespace vfe::opt
{
namespace
{
struct Pair
{
    VecX s;
    VecX y;
    Scalar rho;
};

VecX two_loop(const std::deque<Pair>& memory, const VecX& gradient, const Preconditioner& precondition)
{
    VecX q = gradient;
    std::vector<Scalar> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;)
    {
        alpha[i] = memory[i].rho * memory[i].s.dot(q);
        q -= alpha[i] * memory[i].y;
    }
    VecX r = precondition ? precondition(q) : q;
    if (!memory.empty())
    {
        const Pair& last = memory.back();
        const VecX hy = precondition ? precondition(last.y) : last.y;
        const Scalar yhy = last.y.dot(hy);
        if (yhy > 0)
        {
            r *= last.s.dot(last.y) / yhy;
        }
    }
    for (std::size_t i = 0; i < memory.size(); ++i)
    {
        const Scalar beta = memory[i].rho * memory[i].y.dot(r);
        r += (alpha[i] - beta) * memory[i].s;
    }
    return r;
}

} // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, const VecX& x0, const LbfgsOptions& options,
                           const LbfgsHooks& hooks)
{
    const auto project = [&](const VecX& x) { return hooks.projection ? hooks.projection(x) : x; };
    const auto norm_of = [&](const VecX& x, const VecX& g) {
        return hooks.gradient_norm ? hooks.gradient_norm(x, g) : g.lpNorm<Eigen::Infinity>();
    };

    LbfgsResult result;
    result.x = project(x0);
    auto current = objective(result.x);
    if (!current)
    {
        throw DomainError("lbfgs: initial point is not admissible");
    }
    result.value = current->value;
    VecX gradient = current->gradient;
    result.gradient_norm = norm_of(result.x, gradient);
    if (hooks.observer)
    {
        hooks.observer(0, result.x, result.value, result.gradient_norm);
    }

    std::deque<Pair> memory;
    for (int iter = 1; iter <= options.max_iter; ++iter)
    {
        if (result.gradient_norm < options.tolerance)
        {
            result.status = Status::converged;
            return result;
        }

        bool accepted = false;
        VecX next_x;
        Evaluation next;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt)
        {
            if (attempt == 1)
            {
                if (memory.empty())
                {
                    break;
                }
                memory.clear();
            }
            VecX direction = -two_loop(memory, gradient, hooks.preconditioner);
            if (gradient.dot(direction) >= 0)
            {
                memory.clear();
                direction = hooks.preconditioner ? VecX(-hooks.preconditioner(gradient)) : VecX(-gradient);
            }
            Scalar step = 1;
            for (int bt = 0; bt < options.max_backtracks; ++bt, step *= 0.5)
            {
                VecX trial = project(result.x + step * direction);
                auto eval = objective(trial);
                if (!eval || !std::isfinite(eval->value))
                {
                    continue;
                }
                const VecX step_taken = trial - result.x;
                const Scalar slope = gradient.dot(step_taken);
                const Scalar new_slope = eval->gradient.dot(step_taken);
                const bool armijo = eval->value <= result.value + options.armijo * slope && eval->value < result.value;
                // Near the minimum value differences drown in rounding; fall back on the
                // approximate Wolfe test, which only needs directional derivatives.
                const bool approximate_wolfe = slope < 0 &&
                                               eval->value <= result.value + 1e-14 * std::abs(result.value) &&
                                               new_slope >= 0.9 * slope && new_slope <= -0.8 * slope;
                if (armijo || approximate_wolfe)
                {
                    next_x = std::move(trial);
                    next = std::move(*eval);
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted)
        {
            result.status = Status::stagnated;
            result.iterations = iter - 1;
            return result;
        }

        Pair pair{next_x - result.x, next.gradient - gradient, 0};
        const Scalar sy = pair.s.dot(pair.y);
        if (sy > 1e-300 && sy > 1e-12 * pair.s.norm() * pair.y.norm())
        {
            pair.rho = 1 / sy;
            memory.push_back(std::move(pair));
            if (static_cast<int>(memory.size()) > options.memory)
            {
                memory.pop_front();
            }
        }

        result.x = std::move(next_x);
        result.value = next.value;
        gradient = std::move(next.gradient);
        result.gradient_norm = norm_of(result.x, gradient);
        result.iterations = iter;
        if (hooks.observer)
        {
            hooks.observer(iter, result.x, result.value, result.gradient_norm);
        }
    }
    result.status = result.gradient_norm < options.tolerance ? Status::converged : Status::max_iterations;
    return result;
}

std::string to_string(Status status)
{
    switch (status)
    {
    case Status::converged:
        return "converged";
    case Status::max_iterations:
        return "max_iterations";
    case Status::stagnated:
        return "stagnated";
    }
    return "unknown";
}

} // namespace vfe::opt
