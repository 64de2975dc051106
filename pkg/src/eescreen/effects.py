"""First- and second-order elementary effects and their statistics.

Effects are taken in reduced space with the *signed* step ``s_i = sign_i *
delta_i`` as divisor, so a linear model gives the same effect whichever
direction the reflection rule chose. The second-order effect is the mixed
difference

    EE_ij = | [y(x + s_i + s_j) - y(x + s_i) - y(x + s_j) + y(x)] / (s_i s_j) |

written as ``|SEE_ij - EE_i / s_j - EE_j / s_i|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Optional

from .design import FIRST_ORDER, DesignPlan, PairBlock, Trajectory
from .exceptions import EmptyGroupError, IncompleteEvaluationError

FIRST = "first"
SECOND = "second"


@dataclass(frozen=True)
class EffectSample:
    kind: str  # "first" or "second"
    i: int
    j: Optional[int]
    replicate: int
    value: float


@dataclass(frozen=True)
class EffectsSummary:
    """Statistics of one parameter's (or pair's) effects over replicates.

    ``sigma`` is None for a single replicate; ratios are None when their
    denominator is zero.
    """

    kind: str
    i: int
    j: Optional[int]
    mu: float
    mu_star: float
    sigma: Optional[float]
    ratio_star: Optional[float]
    ratio_abs: Optional[float]
    n: int

    @property
    def label(self) -> str:
        """1-based parameter number, ``"i-j"`` for pairs."""
        if self.j is None:
            return str(self.i + 1)
        return f"{self.i + 1}-{self.j + 1}"


@dataclass(frozen=True)
class BlockEffects:
    first: dict  # i -> EE_i
    see: dict  # (i, j) -> SEE_ij
    pair: dict  # (i, j) -> EE_ij


def _lookup(outputs: Mapping[int, float], ids: Iterable[int]) -> dict:
    ids = list(ids)
    missing = [pid for pid in ids if pid not in outputs]
    if missing:
        raise IncompleteEvaluationError(missing)
    return {pid: float(outputs[pid]) for pid in ids}


def _signed_steps(parameters, signs):
    return [sign * p.delta for p, sign in zip(parameters, signs)]


def first_order_effects(
    trajectory: Trajectory, outputs: Mapping[int, float], parameters, replicate: int = 0
) -> list[EffectSample]:
    """One elementary effect per parameter from one trajectory.

    Samples are returned in parameter order, not step order.
    """
    y = _lookup(outputs, trajectory.point_ids)
    steps = _signed_steps(parameters, trajectory.signs)
    values = {}
    for s, i in enumerate(trajectory.order):
        before = y[trajectory.point_ids[s]]
        after = y[trajectory.point_ids[s + 1]]
        values[i] = (after - before) / steps[i]
    return [EffectSample(FIRST, i, None, replicate, values[i]) for i in sorted(values)]


def second_order_effects(block: PairBlock, outputs: Mapping[int, float], parameters) -> BlockEffects:
    k = len(block.signs)
    ids = [block.base_id, *block.single_ids.values(), *block.double_ids.values()]
    y = _lookup(outputs, ids)
    steps = _signed_steps(parameters, block.signs)
    y0 = y[block.base_id]
    first = {i: (y[block.single_ids[i]] - y0) / steps[i] for i in range(k)}
    see, pair = {}, {}
    for i, j in combinations(range(k), 2):
        si, sj = steps[i], steps[j]
        see[(i, j)] = (y[block.double_ids[(i, j)]] - y0) / (si * sj)
        pair[(i, j)] = abs(see[(i, j)] - first[i] / sj - first[j] / si)
    return BlockEffects(first, see, pair)


def compute_effects(plan: DesignPlan, outputs: Mapping[int, float]) -> list[EffectSample]:
    """All effect samples of a plan, in (kind, i, j, replicate) order.

    Raises :class:`IncompleteEvaluationError` listing every missing point id.
    """
    missing = [n for n in range(plan.n_distinct) if n not in outputs]
    if missing:
        raise IncompleteEvaluationError(missing)
    samples = []
    if plan.mode == FIRST_ORDER:
        for t, traj in enumerate(plan.trajectories):
            samples.extend(first_order_effects(traj, outputs, plan.parameters, t))
    else:
        for t, block in enumerate(plan.blocks):
            fx = second_order_effects(block, outputs, plan.parameters)
            samples.extend(EffectSample(FIRST, i, None, t, v) for i, v in fx.first.items())
            samples.extend(EffectSample(SECOND, i, j, t, v) for (i, j), v in fx.pair.items())
    samples.sort(key=lambda s: (s.kind != FIRST, s.i, -1 if s.j is None else s.j, s.replicate))
    return samples


def summarize(values, kind: str = FIRST, i: int = 0, j: Optional[int] = None) -> EffectsSummary:
    """mu, mu*, sigma (divisor n - 1) and the two spread ratios of ``values``."""
    values = [float(v) for v in values]
    n = len(values)
    if n == 0:
        raise EmptyGroupError(f"no effect samples for {kind} group ({i}, {j})")
    mu = math.fsum(values) / n
    mu_star = math.fsum(abs(v) for v in values) / n
    sigma = None
    if n >= 2:
        sigma = math.sqrt(math.fsum((v - mu) ** 2 for v in values) / (n - 1))
    ratio_star = ratio_abs = None
    if sigma is not None:
        if mu_star != 0.0:
            ratio_star = sigma / mu_star
        if mu != 0.0:
            ratio_abs = sigma / abs(mu)
    return EffectsSummary(kind, i, j, mu, mu_star, sigma, ratio_star, ratio_abs, n)


def aggregate(samples: Iterable[EffectSample]) -> list[EffectsSummary]:
    """Group samples by (kind, i, j) and summarize each group in stable order."""
    groups: dict = {}
    for s in samples:
        groups.setdefault((s.kind, s.i, s.j), []).append(s)
    out = []
    for key in sorted(groups, key=lambda g: (g[0] != FIRST, g[1], -1 if g[2] is None else g[2])):
        group = sorted(groups[key], key=lambda s: s.replicate)
        out.append(summarize([s.value for s in group], *key))
    return out
