"""Search for certified Markov epsilon-equilibria on simplex grids.

A profile passes certification when every player's truncated distorted value
is within epsilon/3 of that player's exact best-response value against the
others; by the truncation bounds this makes the profile an epsilon-
equilibrium of the infinite-horizon game.  The candidate set is the grid of
profiles whose per-(stage, state) action distributions have coordinates on a
uniform simplex lattice.  ``search_grid`` scans the grid exhaustively in a
fixed order; ``search_sampled`` draws candidates uniformly without
replacement from the same grid (the only option when the grid is too large
or no Lipschitz step is available).  Both halve the lattice step and retry
when a level is exhausted, up to a refinement cap.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .best_response import backward_induction, induced_stage_rewards
from .criterion import pt_payoff, truncation_horizon
from .game import ValidatedGame
from .marginals import MarkovStrategy, forward_marginals

__all__ = [
    "GridTooLargeError",
    "EquilibriumNotFoundError",
    "SearchConfig",
    "EquilibriumCertificate",
    "simplex_grid",
    "ProfileGrid",
    "grid_profiles",
    "sampled_profile_indices",
    "certify",
    "search_grid",
    "search_sampled",
]

# Numerical slack on the pass condition; gaps are differences of values
# computed through the same tables, so anything beyond a few ulp is real.
PASS_SLACK = 1e-12


class GridTooLargeError(RuntimeError):
    """Exhaustive enumeration of the profile grid would exceed the candidate
    cap; sampled mode handles such grids."""


class EquilibriumNotFoundError(RuntimeError):
    """No profile passed certification within the refinement cap.

    ``best_certificate`` keeps the closest candidate found (smallest worst
    gap) so callers can report how near the search came.
    """

    def __init__(self, best_certificate, levels: int):
        self.best_certificate = best_certificate
        self.levels = levels
        gap = float(np.max(best_certificate.gaps)) if best_certificate else math.inf
        allowance = (
            best_certificate.epsilon / 3.0 if best_certificate else math.nan
        )
        super().__init__(
            f"no profile passed certification within {levels} grid level(s); "
            f"best worst-case gap {gap:.6g} against allowance {allowance:.6g}"
        )


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of both search modes.

    ``horizon`` overrides the truncation horizon computed from ``epsilon``
    when set.  ``max_candidates`` caps the grid size in grid mode and the
    number of draws per level in sampled mode; ``refinement_cap`` bounds how
    often the lattice step is halved after exhausting a level.
    """

    epsilon: float
    initial_delta: float = 0.5
    mode: str = "grid"
    max_candidates: int = 100_000
    rng_seed: int = 0
    horizon: int | None = None
    refinement_cap: int = 6
    threads: int = 1

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.initial_delta < 1.0:
            raise ValueError(
                f"initial grid step must lie in (0,1), got {self.initial_delta}"
            )
        if self.mode not in ("grid", "sampled"):
            raise ValueError(f"mode must be 'grid' or 'sampled', got {self.mode!r}")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be positive")
        if self.refinement_cap < 0:
            raise ValueError("refinement_cap must be >= 0")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class EquilibriumCertificate:
    """Per-player evidence that a profile is (or is not) close to optimal.

    ``values[i]`` is the truncated distorted value achieved by the profile,
    ``best_values[i]`` the exact best-response value against the others, and
    ``gaps[i]`` their difference (nonnegative up to numerics).  ``passed``
    holds exactly when the largest gap is at most epsilon/3 plus slack.
    ``candidates_examined``/``final_delta`` are filled in by the searches.
    """

    profile: tuple
    values: np.ndarray
    best_values: np.ndarray
    gaps: np.ndarray
    epsilon: float
    horizon: int
    passed: bool
    candidates_examined: int = 1
    final_delta: float | None = None


def simplex_grid(action_count: int, delta: float) -> np.ndarray:
    """All probability vectors over ``action_count`` entries whose coordinates
    are multiples of the grid step, as rows in lexicographic order.

    1/``delta`` is rounded up to an integer resolution, so the effective step
    never exceeds the requested one.  The row count is the number of weak
    compositions of the resolution into ``action_count`` parts.
    """
    if action_count < 1:
        raise ValueError(f"need at least one action, got {action_count}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"grid step must lie in (0,1], got {delta}")
    resolution = max(1, math.ceil(1.0 / delta - 1e-9))
    rows = [
        comp
        for comp in _compositions(resolution, action_count)
    ]
    return np.array(rows, dtype=float) / resolution


def _compositions(total: int, parts: int):
    """Weak compositions of ``total`` into ``parts`` nonnegative integers,
    lexicographically ascending."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


class ProfileGrid:
    """Deterministic enumeration of all Markov profiles whose per-(stage,
    state) action distributions lie on the simplex lattice with one step.

    Cells are ordered (player, stage, state); a profile is an assignment of
    one lattice distribution per cell, and enumeration is lexicographic over
    the per-cell indices with the last cell varying fastest.  That makes "the
    first passing profile" well defined and bit-reproducible, and halving the
    step always produces a superset of the previous lattice.
    """

    def __init__(self, game: ValidatedGame, horizon: int, delta: float):
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        self.game = game
        self.horizon = horizon
        self.resolution = max(1, math.ceil(1.0 / delta - 1e-9))
        self.delta = 1.0 / self.resolution
        self._options = {}
        for p in game.players:
            if p.action_count not in self._options:
                self._options[p.action_count] = simplex_grid(
                    p.action_count, self.delta
                )
        self.cell_sizes = []
        for p in game.players:
            size = len(self._options[p.action_count])
            self.cell_sizes.extend([size] * (horizon * p.state_count))
        self.total_profiles = 1
        for size in self.cell_sizes:
            self.total_profiles *= size

    def distributions(self, player: int) -> np.ndarray:
        """Lattice distributions available to ``player`` in each cell."""
        return self._options[self.game.players[player].action_count]

    def index_tuples(self):
        """All per-cell index assignments in enumeration order."""
        return itertools.product(*(range(size) for size in self.cell_sizes))

    def profile_at(self, indices) -> tuple:
        """Materialize the profile for one per-cell index assignment."""
        out = []
        pos = 0
        for i, p in enumerate(self.game.players):
            options = self._options[p.action_count]
            dist = np.empty((self.horizon, p.state_count, p.action_count))
            for t in range(self.horizon):
                for s in range(p.state_count):
                    dist[t, s] = options[indices[pos]]
                    pos += 1
            out.append(MarkovStrategy(player=i, dist=dist))
        return tuple(out)

    def profiles(self):
        for indices in self.index_tuples():
            yield self.profile_at(indices)

    __iter__ = profiles


def grid_profiles(
    delta: float, game: ValidatedGame, horizon: int, cap: int | None = None
) -> ProfileGrid:
    """Build the profile grid for one lattice step, refusing grids whose full
    enumeration would exceed ``cap`` candidates (use sampled mode there)."""
    grid = ProfileGrid(game, horizon, delta)
    if cap is not None and grid.total_profiles > cap:
        raise GridTooLargeError(
            f"profile grid holds {grid.total_profiles} candidates, above the cap "
            f"{cap}; use sampled mode"
        )
    return grid


def sampled_profile_indices(grid: ProfileGrid, rng: np.random.Generator, limit: int):
    """Yield distinct per-cell index tuples drawn uniformly from ``grid``:
    at most ``limit``, fewer when the grid is exhausted first.

    Small grids are shuffled whole; larger ones use rejection against a
    visited set (uniform per-cell draws are uniform over the product).  The
    sequence is fully determined by the generator state.
    """
    if grid.total_profiles <= limit:
        everything = list(grid.index_tuples())
        for pos in rng.permutation(len(everything)):
            yield everything[pos]
        return
    highs = np.array(grid.cell_sizes)
    visited = set()
    produced = 0
    attempts = 0
    # The attempt cap only matters when the grid barely exceeds the limit and
    # collisions pile up; the draw sequence stays deterministic either way.
    while produced < limit and attempts < 20 * limit:
        attempts += 1
        candidate = tuple(int(v) for v in rng.integers(0, highs))
        if candidate in visited:
            continue
        visited.add(candidate)
        produced += 1
        yield candidate


def certify(
    game: ValidatedGame,
    profile,
    initial_state,
    horizon: int,
    epsilon: float,
) -> EquilibriumCertificate:
    """Check the sufficient equilibrium condition for one profile.

    Computes every player's truncated distorted value under the profile and
    the exact best-response value against the frozen opponents; the profile
    passes when no player can gain more than ``epsilon``/3 (plus numerical
    slack) by deviating.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    x = tuple(int(v) for v in initial_state)
    if len(x) != game.n:
        raise ValueError(
            f"initial state has {len(x)} components, game has {game.n} players"
        )
    profile = tuple(profile)
    if len(profile) != game.n:
        raise ValueError(
            f"profile has {len(profile)} strategies, game has {game.n} players"
        )
    tables = [
        forward_marginals(game, profile[i], x[i], horizon) for i in range(game.n)
    ]
    report = pt_payoff(game, tables, horizon)
    best = np.empty(game.n)
    for i in range(game.n):
        rewards = induced_stage_rewards(game, i, tables, horizon)
        best[i] = backward_induction(game, i, rewards, x[i], horizon).value
    gaps = best - report.values
    passed = bool(np.max(gaps) <= epsilon / 3.0 + PASS_SLACK)
    return EquilibriumCertificate(
        profile=profile,
        values=report.values,
        best_values=best,
        gaps=gaps,
        epsilon=epsilon,
        horizon=horizon,
        passed=passed,
    )


def _resolve_horizon(game: ValidatedGame, config: SearchConfig) -> int:
    if config.horizon is not None:
        if config.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {config.horizon}")
        return config.horizon
    return truncation_horizon(config.epsilon, game).horizon


def _chunks(iterable, size: int):
    iterator = iter(iterable)
    while True:
        block = list(itertools.islice(iterator, size))
        if not block:
            return
        yield block


def search_grid(
    game: ValidatedGame, initial_state, config: SearchConfig
) -> EquilibriumCertificate:
    """Scan each lattice level's profiles in enumeration order and return the
    first certificate that passes; halve the step on exhaustion.

    Raises :class:`GridTooLargeError` when a level cannot be enumerated
    within ``max_candidates`` and :class:`EquilibriumNotFoundError` when the
    refinement cap runs out (the latter carries the best candidate seen).
    With ``threads`` > 1 candidates are certified in parallel chunks, but the
    reported certificate is still the first passing one in enumeration order.
    """
    horizon = _resolve_horizon(game, config)
    examined = 0
    best = None
    resolution = None
    for _level in range(config.refinement_cap + 1):
        delta = config.initial_delta if resolution is None else 1.0 / resolution
        grid = grid_profiles(delta, game, horizon, cap=config.max_candidates)
        resolution = 2 * grid.resolution

        def _run(indices):
            return certify(game, grid.profile_at(indices), initial_state, horizon, config.epsilon)

        if config.threads > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                for block in _chunks(grid.index_tuples(), 16 * config.threads):
                    for cert in pool.map(_run, block):
                        examined += 1
                        if best is None or np.max(cert.gaps) < np.max(best.gaps):
                            best = cert
                        if cert.passed:
                            return replace(
                                cert,
                                candidates_examined=examined,
                                final_delta=grid.delta,
                            )
        else:
            for indices in grid.index_tuples():
                cert = _run(indices)
                examined += 1
                if best is None or np.max(cert.gaps) < np.max(best.gaps):
                    best = cert
                if cert.passed:
                    return replace(
                        cert, candidates_examined=examined, final_delta=grid.delta
                    )
    if best is not None:
        best = replace(
            best, candidates_examined=examined, final_delta=2.0 / resolution
        )
    raise EquilibriumNotFoundError(best, config.refinement_cap + 1)


def search_sampled(
    game: ValidatedGame, initial_state, config: SearchConfig
) -> EquilibriumCertificate:
    """Certify up to ``max_candidates`` profiles per lattice level, drawn
    uniformly without replacement from the grid by a seeded generator; halve
    the step when a level is exhausted or its budget is spent.

    Fully deterministic for a given seed.  Raises
    :class:`EquilibriumNotFoundError` (carrying the best candidate) when the
    refinement cap runs out.
    """
    rng = np.random.default_rng(config.rng_seed)
    horizon = _resolve_horizon(game, config)
    examined = 0
    best = None
    resolution = None
    for _level in range(config.refinement_cap + 1):
        delta = config.initial_delta if resolution is None else 1.0 / resolution
        grid = ProfileGrid(game, horizon, delta)
        resolution = 2 * grid.resolution
        for indices in sampled_profile_indices(grid, rng, config.max_candidates):
            cert = certify(
                game, grid.profile_at(indices), initial_state, horizon, config.epsilon
            )
            examined += 1
            if best is None or np.max(cert.gaps) < np.max(best.gaps):
                best = cert
            if cert.passed:
                return replace(
                    cert, candidates_examined=examined, final_delta=grid.delta
                )
    if best is not None:
        best = replace(
            best, candidates_examined=examined, final_delta=2.0 / resolution
        )
    raise EquilibriumNotFoundError(best, config.refinement_cap + 1)
