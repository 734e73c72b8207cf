"""Backward-induction solver for the provisioning problem.

One year unfolds in three stages: choose a mitigation measure and whether
to keep the cover active (before losses realize), observe the aggregate
loss, then decide whether to claim. The claim stage admits a closed-form
optimum: claiming beats absorbing the loss exactly when the compensation
strictly exceeds the continuation-value gap of the level the claim leads
to, so the optimal claim region is a union of intervals in compensation
space ("claim sets"). This collapses the inner minimization to layered
expectations over the aggregate-loss grid, and the outer minimization to
a small argmin per state.

Alongside the value and decision tables the solver produces the optimally
controlled chain's transition kernels and marginal state occupancies, and
a standard set of reporting quantities (mitigation adoption, discounted
mitigation spend, payments to the insurer, loss prevented, compensation
received). Reporting quantities discount the year-t term by the factor
``discount**(t-1)``; the optimization objective itself compounds one
discount factor per backward step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .compound import CompensationGrid, DiscreteLossDistribution
from .contract import STATUS_NO, STATUS_ON, ContractSpec
from .errors import ConfigError

__all__ = [
    "PolicySolution",
    "OccupancySummary",
    "solve",
    "claim_rule",
    "occupancy_summaries",
    "insurer_profit",
]

QOI_SPEND = "mitigation_spend"
QOI_PAYMENTS = "payments_to_insurer"
QOI_PREVENTED = "loss_prevented"
QOI_COMPENSATION = "compensation_received"


@dataclass
class PolicySolution:
    """Value tables, decision tables, chain law, and reporting aggregates.

    Arrays indexed by ``[t, level_index, status_index]`` with ``t`` running
    0..T for values/marginals and 1..T (offset by one) for decisions and
    kernels. Flat state indices are ``level_index * n_statuses +
    status_index``. Instances are immutable by convention; arrays are
    write-protected.
    """

    contract: ContractSpec
    distributions: Mapping[int, DiscreteLossDistribution]
    expected_losses: Mapping[int, float]
    values: np.ndarray  # (T+1, nL, nS)
    d_opt: np.ndarray  # (T, nL, nS) chosen measure
    iota_opt: np.ndarray  # (T, nL, nS) cover on/off
    claim_sets: list  # [t-1][level_index] -> list of (target level, Interval)
    kernels: np.ndarray  # (T, S, S) row-stochastic
    marginals: np.ndarray  # (T+1, S)
    adoption: np.ndarray  # (T, D+1) probability measure d is chosen in year t
    qoi_per_year: dict = field(default_factory=dict)  # name -> (T,) array
    qoi_total: dict = field(default_factory=dict)  # name -> float

    @property
    def value(self) -> float:
        """Optimal expected discounted total cost from the initial state."""
        ib = self.contract.schedules.level_index(0)
        return float(self.values[0, ib, 0])

    def state_index(self, b: int, status: str) -> int:
        ib = self.contract.schedules.level_index(b)
        ii = self.contract.rule.statuses.index(status)
        return ib * len(self.contract.rule.statuses) + ii


@dataclass(frozen=True)
class OccupancySummary:
    """Per-year occupancy aggregates of the optimally controlled chain."""

    retention_rate: float  # mean fraction of years with active cover
    on_probability: np.ndarray  # (T,) probability cover is active in year t
    years_by_level: dict  # level -> expected active years at that level
    years_uninsured: float
    mitigation_years: np.ndarray  # (D+1,) expected years on each measure


def solve(
    contract: ContractSpec,
    distributions: Mapping[int, DiscreteLossDistribution],
    expected_losses: Mapping[int, float],
    grid_cache: dict | None = None,
) -> PolicySolution:
    """Run the backward induction and the forward chain-law pass.

    Args:
        contract: Contract specification (rule, schedules, menu).
        distributions: Aggregate-loss distribution per mitigation measure.
        expected_losses: Exact mean aggregate loss per measure (closed
            form, not the grid mean).
        grid_cache: Optional dict reused across calls that share the same
            distributions; holds the prefix-sum layer tables, which do not
            depend on the premium schedule.

    Raises:
        ConfigError: If a distribution or expected loss is missing for
            some mitigation measure.
    """
    rule = contract.rule
    sched = contract.schedules
    menu = contract.menu
    levels = rule.levels
    statuses = rule.statuses
    n_levels, n_status = len(levels), len(statuses)
    n_states = n_levels * n_status
    T = contract.horizon
    df = sched.discount_factor
    measures = list(menu.measures)
    for d in measures:
        if d not in distributions:
            raise ConfigError(f"distributions: missing mitigation measure {d}")
        if d not in expected_losses:
            raise ConfigError(f"expected_losses: missing mitigation measure {d}")
    level_index = {b: k for k, b in enumerate(levels)}
    on_idx = statuses.index(STATUS_ON)

    def sidx(ib: int, ii: int) -> int:
        return ib * n_status + ii

    # Inactive-transition lookup as flat state indices.
    bm0 = np.empty((n_levels, n_status), dtype=int)
    for ib, b in enumerate(levels):
        for ii, status in enumerate(statuses):
            b2, s2 = rule.inactive_step(b, status)
            bm0[ib, ii] = sidx(level_index[b2], statuses.index(s2))

    # Candidate (d, iota) pairs in tie-break order: smallest measure first,
    # then abstention; argmin keeps the first minimum.
    candidates = [(d, io) for d in measures for io in (0, 1)]
    betas = np.array([menu.beta(d) for d in measures])
    el = np.array([expected_losses[d] for d in measures])

    grids = grid_cache if grid_cache is not None else {}

    def grid_for(d: int, dtb: float, cap: float) -> CompensationGrid:
        key = (d, dtb, cap)
        if key not in grids:
            grids[key] = CompensationGrid(distributions[d], dtb, cap)
        return grids[key]

    is_no = np.array([s == STATUS_NO for s in statuses])
    is_on = np.array([s == STATUS_ON for s in statuses])
    is_off = ~(is_no | is_on)

    values = np.zeros((T + 1, n_levels, n_status))
    d_opt = np.zeros((T, n_levels, n_status), dtype=int)
    iota_opt = np.zeros((T, n_levels, n_status), dtype=int)
    kernels = np.zeros((T, n_states, n_states))
    claim_sets: list = [[None] * n_levels for _ in range(T)]
    # Expected claimed compensation per (t, level, measure), for reporting.
    comp_mass = np.zeros((T, n_levels, len(measures)))
    claim_prob = np.zeros((T, n_levels, len(measures), n_levels))

    for t in range(T, 0, -1):
        v_next = values[t]
        for ib, b in enumerate(levels):
            dtb = sched.deductible[ib, t - 1]
            cap = sched.max_comp[ib, t - 1]
            b_low = rule.lowest_reachable(b)
            b_high = rule.highest_reachable(b)
            v_low = v_next[level_index[b_low], on_idx]
            reachable = []  # (target level, band interval, value gap)
            for b2 in levels:
                if b2 < b_low or b2 > b_high:
                    continue
                band = rule.level_interval(b, b2)
                if band is None:
                    continue
                alpha = v_next[level_index[b2], on_idx] - v_low
                reachable.append((b2, band, alpha))
            claim_sets[t - 1][ib] = [
                (b2, band.cut_below(alpha)) for b2, band, alpha in reachable
            ]

            h_on = np.empty(len(measures))
            for d in measures:
                grid = grid_for(d, dtb, cap)
                layered = 0.0
                mass = 0.0
                for b2, band, alpha in reachable:
                    layered += grid.expectation_above(band, alpha)
                    claim_set = band.cut_below(alpha)
                    mass += grid.compensation_mass(claim_set)
                    claim_prob[t - 1, ib, d, level_index[b2]] = grid.probability(
                        claim_set
                    )
                h_on[d] = v_low - layered
                comp_mass[t - 1, ib, d] = mass

            h_off = values[t].reshape(-1)[bm0[ib]]  # (nS,)
            # One-stage costs per status and candidate, in tie-break order.
            cost = np.empty((n_status, len(candidates)))
            for k, (d, io) in enumerate(candidates):
                if io:
                    cost[:, k] = (
                        betas[d]
                        + sched.premium[ib, t - 1]
                        + sched.fee_in[t - 1] * is_no
                        + sched.fee_re * is_off
                        + el[d]
                        + h_on[d]
                    )
                else:
                    cost[:, k] = (
                        betas[d] + sched.fee_out[t - 1] * is_on + el[d] + h_off
                    )
            best = np.argmin(cost, axis=1)
            values[t - 1, ib] = df * cost[np.arange(n_status), best]
            d_opt[t - 1, ib] = [candidates[k][0] for k in best]
            iota_opt[t - 1, ib] = [candidates[k][1] for k in best]

            for ii in range(n_status):
                row = kernels[t - 1, sidx(ib, ii)]
                if iota_opt[t - 1, ib, ii]:
                    d_hat = d_opt[t - 1, ib, ii]
                    stay = 1.0
                    for b2, _, _ in reachable:
                        if b2 == b_low:
                            continue
                        p = claim_prob[t - 1, ib, d_hat, level_index[b2]]
                        row[sidx(level_index[b2], on_idx)] = p
                        stay -= p
                    row[sidx(level_index[b_low], on_idx)] = stay
                else:
                    row[bm0[ib, ii]] = 1.0

    # Forward pass: chain law from the initial state (level 0, unsigned).
    marginals = np.zeros((T + 1, n_states))
    marginals[0, sidx(level_index[0], 0)] = 1.0
    for t in range(1, T + 1):
        marginals[t] = kernels[t - 1].T @ marginals[t - 1]

    # Reporting quantities; year-t terms carry discount**(t-1).
    adoption = np.zeros((T, len(measures)))
    spend = np.zeros(T)
    payments = np.zeros(T)
    prevented = np.zeros(T)
    compensation = np.zeros(T)
    for t in range(1, T + 1):
        disc = df ** (t - 1)
        occ = marginals[t - 1].reshape(n_levels, n_status)
        d_hat = d_opt[t - 1]
        io_hat = iota_opt[t - 1]
        for d in measures:
            adoption[t - 1, d] = float(occ[d_hat == d].sum())
        spend[t - 1] = disc * float((betas[d_hat] * occ).sum())
        pay_states = io_hat * (
            sched.premium[:, t - 1 : t]
            + sched.fee_in[t - 1] * is_no[None, :]
            + sched.fee_re * is_off[None, :]
        ) + (1 - io_hat) * sched.fee_out[t - 1] * is_on[None, :]
        payments[t - 1] = disc * float((pay_states * occ).sum())
        prevented[t - 1] = disc * float(((el[0] - el[d_hat]) * occ).sum())
        comp_states = io_hat * comp_mass[t - 1][
            np.arange(n_levels)[:, None], d_hat
        ]
        compensation[t - 1] = disc * float((comp_states * occ).sum())

    qoi_per_year = {
        QOI_SPEND: spend,
        QOI_PAYMENTS: payments,
        QOI_PREVENTED: prevented,
        QOI_COMPENSATION: compensation,
    }
    qoi_total = {name: float(arr.sum()) for name, arr in qoi_per_year.items()}

    for arr in (values, d_opt, iota_opt, kernels, marginals, adoption):
        arr.setflags(write=False)
    return PolicySolution(
        contract=contract,
        distributions=dict(distributions),
        expected_losses=dict(expected_losses),
        values=values,
        d_opt=d_opt,
        iota_opt=iota_opt,
        claim_sets=claim_sets,
        kernels=kernels,
        marginals=marginals,
        adoption=adoption,
        qoi_per_year=qoi_per_year,
        qoi_total=qoi_total,
    )


def claim_rule(solution: PolicySolution, b: int, status: str, t: int, loss: float) -> int:
    """Optimal claim indicator for a realized annual loss.

    Returns 1 iff the cover is active under the optimal policy and the
    compensation falls in one of the year's claim sets. A compensation
    exactly equal to a value-gap threshold does not claim (strict
    inequality), and an insured below the deductible never claims.
    """
    contract = solution.contract
    ib = contract.schedules.level_index(b)
    ii = contract.rule.statuses.index(status)
    if not solution.iota_opt[t - 1, ib, ii]:
        return 0
    lam = contract.compensation(b, t, loss)
    for _, claim_set in solution.claim_sets[t - 1][ib]:
        if not claim_set.empty and bool(claim_set.contains(lam)):
            return 1
    return 0


def occupancy_summaries(solution: PolicySolution) -> OccupancySummary:
    """Retention, time per level, and mitigation-adoption aggregates."""
    contract = solution.contract
    statuses = contract.rule.statuses
    levels = contract.rule.levels
    n_status = len(statuses)
    on_idx = statuses.index(STATUS_ON)
    T = contract.horizon
    occ = solution.marginals[1:].reshape(T, len(levels), n_status)
    on_prob = occ[:, :, on_idx].sum(axis=1)
    years_by_level = {
        b: float(occ[:, ib, on_idx].sum()) for ib, b in enumerate(levels)
    }
    years_on = float(on_prob.sum())
    years_uninsured = T - years_on
    if abs(years_uninsured) < 1e-9:  # roundoff from kernel products
        years_uninsured = 0.0
    mitigation_years = solution.adoption.sum(axis=0)
    return OccupancySummary(
        retention_rate=years_on / T,
        on_probability=on_prob,
        years_by_level=years_by_level,
        years_uninsured=years_uninsured,
        mitigation_years=mitigation_years,
    )


def insurer_profit(solution: PolicySolution) -> float:
    """Expected discounted payments received minus compensation paid.

    Nonpositive at the optimum: the insured can always decline cover, so
    a rational policyholder never leaves the insurer a positive margin in
    this zero-sum accounting.
    """
    return solution.qoi_total[QOI_PAYMENTS] - solution.qoi_total[QOI_COMPENSATION]
