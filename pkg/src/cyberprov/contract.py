"""Bonus-Malus contract mechanics, mitigation menu, and yearly dynamics.

A contract state is a pair (level, status). Levels form an ordered set of
integers where lower means a larger experience discount. The status is
``"no"`` before the contract is first signed, ``"on"`` while it is active,
and ``"off_y"`` after a withdrawal, where the counter ``y`` advances only
through the configured inactive-transition table.

Claim transitions are piecewise in the claim amount: a dedicated level for
a zero claim, then bands ``(c_k, c_{k+1}]`` each mapping to a level. The
left-open/right-closed convention makes the preimage of every level an
interval, which is what the solver's claim sets require; transitions must
be nondecreasing in the claim amount.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import AdmissibilityViolation, DomainError
from .intervals import Interval

__all__ = [
    "STATUS_NO",
    "STATUS_ON",
    "off_status",
    "contract_statuses",
    "MitigationMenu",
    "BonusMalusRule",
    "ContractSchedules",
    "ContractState",
    "ContractSpec",
]

STATUS_NO = "no"
STATUS_ON = "on"


def off_status(counter: int) -> str:
    return f"off_{counter}"


def contract_statuses(horizon: int) -> tuple[str, ...]:
    """All contract statuses for a given horizon: no, on, off_1..off_T."""
    return (STATUS_NO, STATUS_ON) + tuple(off_status(y) for y in range(1, horizon + 1))


class ContractState(NamedTuple):
    level: int
    status: str


@dataclass(frozen=True)
class MitigationMenu:
    """Mutually exclusive self-mitigation measures, indexed 0..D.

    Measure 0 is "do nothing": zero investment, zero effect. Measure d
    costs ``betas[d]`` per year and clips each event loss by ``gammas[d]``.
    """

    betas: tuple[float, ...]
    gammas: tuple[float, ...]

    def __post_init__(self):
        if len(self.betas) != len(self.gammas) or not self.betas:
            raise DomainError("betas and gammas must be equal-length, nonempty")
        if self.betas[0] != 0.0 or self.gammas[0] != 0.0:
            raise DomainError("measure 0 must have zero cost and zero effect")
        if any(b < 0 for b in self.betas) or any(g < 0 for g in self.gammas):
            raise DomainError("investments and reductions must be nonnegative")

    @property
    def measures(self) -> range:
        return range(len(self.betas))

    def beta(self, d: int) -> float:
        return self.betas[d]

    def gamma(self, d: int) -> float:
        return self.gammas[d]


def _merge_pieces(pieces):
    merged = [list(pieces[0])]
    for thr, lvl in pieces[1:]:
        if lvl == merged[-1][1]:
            continue
        merged.append([thr, lvl])
    return tuple((float(t), int(l)) for t, l in merged)


@dataclass(frozen=True)
class BonusMalusRule:
    """Level-transition rules for claims and for inactive years.

    Attributes:
        levels: Ordered levels, strictly increasing, containing 0.
        statuses: All contract statuses (depends on the horizon).
        zero_claim: Level reached from each level after a claim-free year
            (equivalently a claim of exactly zero).
        pieces: Per level, bands ``(threshold, level)``; the first
            threshold must be 0 and band k covers claims in
            ``(thr_k, thr_{k+1}]``, the last extending to infinity.
        inactive: Transition applied when no premium is paid, keyed by
            (level, status); the not-yet-signed status is a fixed point
            and is filled in automatically.
    """

    levels: tuple[int, ...]
    statuses: tuple[str, ...]
    zero_claim: dict
    pieces: dict
    inactive: dict

    def __post_init__(self):
        levels = tuple(int(b) for b in self.levels)
        if list(levels) != sorted(set(levels)):
            raise DomainError("levels must be strictly increasing")
        if 0 not in levels:
            raise DomainError("levels must contain the initial level 0")
        object.__setattr__(self, "levels", levels)

        pieces = {}
        for b in levels:
            if b not in self.zero_claim or b not in self.pieces:
                raise DomainError(f"claim transition missing for level {b}")
            raw = tuple((float(t), int(l)) for t, l in self.pieces[b])
            if not raw or raw[0][0] != 0.0:
                raise DomainError(f"level {b}: first claim band must start at 0")
            thresholds = [t for t, _ in raw]
            if any(t2 <= t1 for t1, t2 in zip(thresholds, thresholds[1:])):
                raise DomainError(f"level {b}: band thresholds must increase")
            lvls = [l for _, l in raw]
            if any(l2 < l1 for l1, l2 in zip(lvls, lvls[1:])):
                raise DomainError(f"level {b}: claim transition must be nondecreasing")
            if self.zero_claim[b] > lvls[0]:
                raise DomainError(f"level {b}: zero-claim level exceeds first band")
            if self.zero_claim[b] not in levels or any(l not in levels for l in lvls):
                raise DomainError(f"level {b}: transition targets unknown level")
            pieces[b] = _merge_pieces(raw)
        object.__setattr__(self, "pieces", pieces)

        inactive = {}
        for b in levels:
            inactive[(b, STATUS_NO)] = (b, STATUS_NO)
            for status in self.statuses:
                if status == STATUS_NO:
                    if (b, status) in self.inactive and self.inactive[
                        (b, status)
                    ] != (b, status):
                        raise DomainError(
                            f"inactive transition must fix ({b}, no)"
                        )
                    continue
                try:
                    b2, s2 = self.inactive[(b, status)]
                except KeyError:
                    raise DomainError(
                        f"inactive transition missing for ({b}, {status})"
                    ) from None
                if b2 not in levels or s2 not in self.statuses or s2 == STATUS_ON:
                    raise DomainError(
                        f"inactive transition ({b}, {status}) -> ({b2}, {s2}) invalid"
                    )
                inactive[(b, status)] = (int(b2), s2)
        object.__setattr__(self, "inactive", inactive)

    def claim_level(self, b: int, c: float) -> int:
        """Level after a year with claim amount ``c`` (contract active)."""
        if c < 0:
            raise DomainError(f"claim amount must be >= 0, got {c}")
        if c == 0.0:
            return self.zero_claim[b]
        bands = self.pieces[b]
        idx = 0
        for k, (thr, _) in enumerate(bands):
            if c > thr:
                idx = k
            else:
                break
        return bands[idx][1]

    def claim_level_array(self, b: int, c: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`claim_level` for one origin level."""
        bands = self.pieces[b]
        thresholds = np.array([thr for thr, _ in bands])
        targets = np.array([lvl for _, lvl in bands])
        idx = np.searchsorted(thresholds, c, side="left") - 1
        out = targets[np.maximum(idx, 0)]
        return np.where(c == 0.0, self.zero_claim[b], out)

    def lowest_reachable(self, b: int) -> int:
        return self.zero_claim[b]

    def highest_reachable(self, b: int) -> int:
        return self.pieces[b][-1][1]

    def level_interval(self, b: int, target: int) -> Interval | None:
        """The set of claim amounts taking level ``b`` to ``target``.

        Always an interval by monotonicity: ``[0, u]`` when the zero-claim
        level matches the first band, a degenerate ``[0, 0]`` when only a
        zero claim reaches the target, or a band ``(lo, hi]``. Returns
        None when ``target`` is unreachable from ``b``.
        """
        bands = self.pieces[b]
        edges = [thr for thr, _ in bands] + [np.inf]
        run = [
            (edges[k], edges[k + 1])
            for k, (_, lvl) in enumerate(bands)
            if lvl == target
        ]
        if self.zero_claim[b] == target:
            hi = run[-1][1] if run else 0.0
            return Interval(0.0, hi, lo_open=False, hi_open=False)
        if not run:
            return None
        return Interval(run[0][0], run[-1][1], lo_open=True, hi_open=False)

    def inactive_step(self, b: int, status: str) -> tuple[int, str]:
        return self.inactive[(b, status)]


@dataclass(frozen=True)
class ContractSchedules:
    """Dense per-level, per-year premium/deductible/cap and fee schedules.

    Arrays are indexed ``[level_index, year - 1]``; fee schedules are
    per-year vectors. Premiums must be nondecreasing in the level for
    every year (higher level, higher surcharge).
    """

    levels: tuple[int, ...]
    horizon: int
    premium: np.ndarray  # (n_levels, horizon)
    deductible: np.ndarray  # (n_levels, horizon)
    max_comp: np.ndarray  # (n_levels, horizon)
    fee_in: np.ndarray  # (horizon,) sign-on fee
    fee_out: np.ndarray  # (horizon,) withdrawal penalty
    fee_re: float  # re-activation penalty
    discount_factor: float  # per-year factor exp(-r)

    def __post_init__(self):
        shape = (len(self.levels), self.horizon)
        for name in ("premium", "deductible", "max_comp"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise DomainError(f"{name} must have shape {shape}, got {arr.shape}")
            if np.any(arr < 0):
                raise DomainError(f"{name} entries must be nonnegative")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("fee_in", "fee_out"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            if arr.shape != (self.horizon,):
                raise DomainError(f"{name} must have shape ({self.horizon},)")
            if np.any(arr < 0):
                raise DomainError(f"{name} entries must be nonnegative")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.fee_re < 0:
            raise DomainError("fee_re must be nonnegative")
        if not 0 < self.discount_factor <= 1:
            raise DomainError(
                f"discount factor must lie in (0, 1], got {self.discount_factor}"
            )
        if np.any(np.diff(self.premium, axis=0) < 0):
            raise DomainError("premium must be nondecreasing in the level")

    def level_index(self, b: int) -> int:
        return self.levels.index(b)


@dataclass(frozen=True)
class ContractSpec:
    """Complete contract: transition rule, schedules, and mitigation menu."""

    rule: BonusMalusRule
    schedules: ContractSchedules
    menu: MitigationMenu

    def __post_init__(self):
        if self.rule.levels != self.schedules.levels:
            raise DomainError("rule and schedules disagree on the level set")
        if len(self.rule.statuses) != self.schedules.horizon + 2:
            raise DomainError("rule statuses do not match the horizon")

    @property
    def horizon(self) -> int:
        return self.schedules.horizon

    def aggregate_loss(self, d: int, severities: Sequence[float]) -> float:
        """Annual loss after mitigation: sum of clipped event losses."""
        gamma = self.menu.gamma(d)
        if len(severities) == 0:
            return 0.0
        x = np.asarray(severities, dtype=float)
        if np.any(x < 0):
            raise DomainError("event losses must be nonnegative")
        return float(np.maximum(x - gamma, 0.0).sum())

    def compensation(self, b: int, t: int, loss: float) -> float:
        """Claimable amount: loss above the deductible, capped.

        Nondecreasing and 1-Lipschitz in the loss; never exceeds the cap.
        """
        if loss < 0:
            raise DomainError(f"loss must be >= 0, got {loss}")
        ib = self.schedules.level_index(b)
        dtb = self.schedules.deductible[ib, t - 1]
        cap = self.schedules.max_comp[ib, t - 1]
        return float(min(max(loss - dtb, 0.0), cap))

    def step(
        self,
        state: ContractState,
        t: int,
        d: int,
        iota: int,
        j: int,
        severities: Sequence[float],
    ) -> ContractState:
        """Next contract state given the year's decisions and losses."""
        if iota == 0 and j == 1:
            raise AdmissibilityViolation("cannot claim without active cover")
        if iota == 1:
            loss = self.aggregate_loss(d, severities)
            claim = j * self.compensation(state.level, t, loss)
            return ContractState(self.rule.claim_level(state.level, claim), STATUS_ON)
        b2, s2 = self.rule.inactive_step(state.level, state.status)
        return ContractState(b2, s2)

    def stage_cost(
        self,
        state: ContractState,
        t: int,
        d: int,
        iota: int,
        j: int,
        severities: Sequence[float],
    ) -> float:
        """Cash outflow of one year: investment, premium, fees, net loss."""
        if iota == 0 and j == 1:
            raise AdmissibilityViolation("cannot claim without active cover")
        b, status = state
        ib = self.schedules.level_index(b)
        loss = self.aggregate_loss(d, severities)
        cost = self.menu.beta(d) + loss
        if iota == 1:
            cost += self.schedules.premium[ib, t - 1]
            if status == STATUS_NO:
                cost += self.schedules.fee_in[t - 1]
            elif status != STATUS_ON:
                cost += self.schedules.fee_re
            cost -= j * self.compensation(b, t, loss)
        elif status == STATUS_ON:
            cost += self.schedules.fee_out[t - 1]
        return cost
