"""Distorted discounted value of a strategy profile, and how far to look.

The value a player assigns to a profile is a discounted sum over stages: at
each stage the player's own (state, action) mass multiplies the valued
payoff, and each joint opponent (state, action) tuple enters through the
player's weighting function applied once to the product of the opponents'
marginal probabilities.  Because the chains are independent, the whole
objective is a function of the per-player marginal tables alone and is
linear in the player's own table.

Discounting makes the infinite sum approximable by a finite one:
``truncation_horizon`` returns the stage count whose tail bound is below a
third of the target accuracy, ``truncation_error_bound`` exposes the bound
itself, and ``lipschitz_delta`` converts the same kind of bound into a
simplex grid step fine enough for grid search (only available when every
weighting function is Lipschitz, which rules out prelec).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game import ValidatedGame

__all__ = [
    "PTPayoffReport",
    "TruncationParams",
    "opponent_weight_vector",
    "pt_payoff",
    "truncation_horizon",
    "truncation_error_bound",
    "lipschitz_delta",
]


@dataclass(frozen=True)
class PTPayoffReport:
    """Truncated distorted values of every player under one profile.

    ``values[i]`` is the sum of ``stage_contributions[i]``, which keep the
    discount factored in (stage t contributes with weight beta**(t-1)).
    """

    horizon: int
    values: np.ndarray
    stage_contributions: np.ndarray

    def value(self, player: int) -> float:
        return float(self.values[player])


@dataclass(frozen=True)
class TruncationParams:
    """Horizon certified to approximate the infinite sum within epsilon/3.

    ``value_bounds[i]`` is the exact maximum of |v_i(r_i)| used in the tail
    bound; the horizon is floored at 1 (stage counts below 1 are meaningless
    even when the bound would allow them).
    """

    epsilon: float
    horizon: int
    value_bounds: np.ndarray


def _check_marginal_tables(game: ValidatedGame, marginals, horizon: int, skip: int = -1):
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if len(marginals) != game.n:
        raise ValueError(
            f"need one marginal table per player ({game.n}), got {len(marginals)}"
        )
    for j, table in enumerate(marginals):
        if j == skip:
            continue
        if table is None:
            raise ValueError(f"marginal table for player {j} is missing")
        if table.player != j:
            raise ValueError(
                f"marginal table at position {j} belongs to player {table.player}"
            )
        spec = game.players[j]
        if (table.state_count, table.action_count) != (spec.state_count, spec.action_count):
            raise ValueError(
                f"marginal table of player {j} has sizes "
                f"({table.state_count}, {table.action_count}), game declares "
                f"({spec.state_count}, {spec.action_count})"
            )
        if table.horizon < horizon:
            raise ValueError(
                f"marginal table of player {j} covers {table.horizon} stages, "
                f"horizon {horizon} requested"
            )


def opponent_weight_vector(
    game: ValidatedGame, player: int, marginals, stage_index: int
) -> np.ndarray:
    """Player's weighting applied to the joint probability of every opponent
    (state, action) tuple at one stage.

    Tuples are ordered players-ascending then (state, action) lexicographic,
    matching the columns of the validated game's valued payoff matrix.  The
    summation/outer-product order is fixed, so results are reproducible
    bit-for-bit.  With no opponents the single empty tuple has probability 1.
    """
    vec = np.ones(1)
    for j in range(game.n):
        if j != player:
            vec = np.multiply.outer(vec, marginals[j].probs[stage_index].ravel()).ravel()
    return game.players[player].weighting(vec)


def pt_payoff(game: ValidatedGame, marginals, horizon: int) -> PTPayoffReport:
    """Truncated distorted discounted value of every player.

    ``marginals`` holds one :class:`~ptgames.marginals.MarginalTable` per
    player (covering at least ``horizon`` stages).  Stage t contributes

        beta**(t-1) * sum_own own_mass * sum_opp w(prod opp mass) * v(payoff)

    for each player; the per-stage pieces are kept in the report.
    """
    _check_marginal_tables(game, marginals, horizon)
    beta = game.discount_beta
    contributions = np.zeros((game.n, horizon))
    for i in range(game.n):
        mat = game.valued_payoffs[i]
        own = marginals[i].probs
        discount = 1.0
        for k in range(horizon):
            weights = opponent_weight_vector(game, i, marginals, k)
            contributions[i, k] = discount * float(own[k].ravel() @ (mat @ weights))
            discount *= beta
    return PTPayoffReport(
        horizon=horizon,
        values=contributions.sum(axis=1),
        stage_contributions=contributions,
    )


def truncation_horizon(epsilon: float, game: ValidatedGame) -> TruncationParams:
    """Smallest stage count (floored at 1) whose stated tail bound is at most
    ``epsilon``/3 for every player.

    Players whose payoffs value to zero everywhere put no constraint on the
    horizon; if that is all of them, any horizon works and 1 is returned.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    beta = game.discount_beta
    sizes = game.joint_state_count * game.joint_action_count
    worst = 1
    for bound in game.value_bounds:
        if bound <= 0.0:
            continue
        ratio = math.log((1.0 - beta) * epsilon / (3.0 * bound * sizes)) / math.log(beta)
        worst = max(worst, math.ceil(ratio))
    return TruncationParams(
        epsilon=epsilon, horizon=worst, value_bounds=np.array(game.value_bounds)
    )


def truncation_error_bound(game: ValidatedGame, horizon: int) -> np.ndarray:
    """Per-player bound on |full value - value truncated after ``horizon``|:
    geometric tail of the worst valued payoff over the whole product space."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    beta = game.discount_beta
    sizes = game.joint_state_count * game.joint_action_count
    return np.array(game.value_bounds) * sizes * beta**horizon / (1.0 - beta)


def lipschitz_delta(epsilon: float, game: ValidatedGame, lipschitz_bound: float):
    """Simplex grid step guaranteeing some grid profile is close enough in
    value to any profile, together with the horizon used in its derivation.

    Returns ``(delta, horizon)``.  Requires every player's weighting function
    to be Lipschitz with constant at most ``lipschitz_bound`` (>= 1); prelec
    weightings with exponent below 1 are rejected because their slope is
    unbounded.  Degenerate games whose payoffs value to zero everywhere admit
    any grid, and step 1 is returned for them.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if lipschitz_bound < 1.0:
        raise ValueError(f"Lipschitz bound must be >= 1, got {lipschitz_bound}")
    for i, p in enumerate(game.players):
        constant = p.weighting.lipschitz_constant
        if constant is None:
            raise ValueError(
                f"weighting of player {i} ({p.weighting.kind}) is not Lipschitz; "
                "grid-step bounds do not apply, use sampled search"
            )
        if constant > lipschitz_bound:
            raise ValueError(
                f"weighting of player {i} has Lipschitz constant {constant}, "
                f"exceeding the declared bound {lipschitz_bound}"
            )
    beta = game.discount_beta
    sizes = game.joint_state_count * game.joint_action_count
    horizon = 1
    for bound in game.value_bounds:
        if bound <= 0.0:
            continue
        ratio = math.log((1.0 - beta) * epsilon / (6.0 * bound * sizes)) / math.log(beta)
        horizon = max(horizon, math.ceil(ratio))
    worst = float(np.max(game.value_bounds))
    if worst <= 0.0:
        return 1.0, horizon
    pair_tail = sum(
        (p.state_count * p.action_count) ** horizon for p in game.players
    )
    delta = (1.0 - beta) * epsilon / (
        6.0 * lipschitz_bound * worst * sizes * horizon * pair_tail
    )
    return delta, horizon
