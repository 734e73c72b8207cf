"""Contract mechanics: transitions, compensation, yearly cost."""

from __future__ import annotations

import numpy as np
import pytest

from cyberprov.config import build_contract, build_menu, build_severity, emit_experiment_defaults
from cyberprov.contract import (
    STATUS_NO,
    STATUS_ON,
    BonusMalusRule,
    ContractSchedules,
    ContractSpec,
    ContractState,
    MitigationMenu,
    contract_statuses,
)
from cyberprov.errors import AdmissibilityViolation, DomainError


@pytest.fixture(scope="module")
def experiment():
    config = emit_experiment_defaults()
    severity = build_severity(config)
    menu = build_menu(config, severity)
    return build_contract(config, menu, base_premium=4.70, variant="bm")


@pytest.fixture(scope="module")
def flat(experiment):
    config = emit_experiment_defaults()
    severity = build_severity(config)
    menu = build_menu(config, severity)
    return build_contract(config, menu, base_premium=4.70, variant="flat")


# ---------------------------------------------------------------------------
# Aggregate loss and compensation
# ---------------------------------------------------------------------------
class TestLossAndCompensation:
    def test_unmitigated_sum(self, experiment):
        assert experiment.aggregate_loss(0, (1.0, 2.5)) == 3.5

    def test_clipped_sum(self):
        menu = MitigationMenu(betas=(0.0, 0.1), gammas=(0.0, 1.0))
        spec = _tiny_contract(menu)
        assert spec.aggregate_loss(1, (1.0, 2.5)) == 1.5

    def test_empty_year(self, experiment):
        assert experiment.aggregate_loss(1, ()) == 0.0

    def test_compensation_examples(self, experiment):
        assert experiment.compensation(0, 1, 0.0) == 0.0
        assert experiment.compensation(0, 1, 3.0) == 2.5
        assert experiment.compensation(0, 1, 2000.0) == 1000.0

    def test_compensation_below_loss(self, experiment):
        rng = np.random.default_rng(5)
        for loss in rng.uniform(0.0, 50.0, size=200):
            lam = experiment.compensation(-1, 3, float(loss))
            assert 0.0 <= lam <= loss

    def test_compensation_lipschitz(self, experiment):
        losses = np.linspace(0.0, 2000.0, 400)
        lams = [experiment.compensation(1, 5, float(l)) for l in losses]
        steps = np.diff(lams) / np.diff(losses)
        assert np.all(steps >= 0) and np.all(steps <= 1 + 1e-12)


# ---------------------------------------------------------------------------
# The reference experiment's transition tables
# ---------------------------------------------------------------------------
class TestExperimentTables:
    # (level before, claim amount class) -> level after
    CLAIM_CELLS = {
        (-2, "zero"): -2,
        (-2, "positive"): 1,
        (-1, "zero"): -2,
        (-1, "positive"): 1,
        (0, "zero"): -1,
        (0, "positive"): 1,
        (1, "zero"): 0,
        (1, "positive"): 1,
    }
    INACTIVE_CELLS = {
        (-2, "on"): (-2, "off_1"),
        (-2, "off_1"): (-1, "off_1"),
        (-1, "on"): (-1, "off_1"),
        (-1, "off_1"): (0, "off_1"),
        (0, "on"): (0, "off_1"),
        (0, "off_1"): (0, "off_1"),
        (1, "on"): (1, "off_1"),
        (1, "off_1"): (0, "off_1"),
    }

    def test_claim_transitions(self, experiment):
        for (level, kind), target in self.CLAIM_CELLS.items():
            amount = 0.0 if kind == "zero" else 7.3
            assert experiment.rule.claim_level(level, amount) == target

    def test_inactive_transitions(self, experiment):
        for (level, status), target in self.INACTIVE_CELLS.items():
            assert experiment.rule.inactive_step(level, status) == target

    def test_unsigned_is_fixed_point(self, experiment):
        for level in experiment.rule.levels:
            assert experiment.rule.inactive_step(level, STATUS_NO) == (
                level,
                STATUS_NO,
            )

    def test_claim_monotone_in_amount(self, experiment):
        rng = np.random.default_rng(7)
        for level in experiment.rule.levels:
            amounts = np.sort(rng.uniform(0.0, 100.0, size=50))
            targets = [experiment.rule.claim_level(level, a) for a in amounts]
            assert targets == sorted(targets)

    def test_level_intervals(self, experiment):
        rule = experiment.rule
        zero_band = rule.level_interval(0, -1)
        assert not zero_band.lo_open and zero_band.lo == zero_band.hi == 0.0
        claims = rule.level_interval(0, 1)
        assert claims.lo == 0.0 and claims.lo_open and np.isinf(claims.hi)
        assert rule.level_interval(0, -2) is None
        assert rule.level_interval(-2, 0) is None

    def test_flat_variant_interval(self, flat):
        band = flat.rule.level_interval(0, 0)
        assert not band.lo_open and band.lo == 0.0 and np.isinf(band.hi)


# ---------------------------------------------------------------------------
# Yearly transition and cost
# ---------------------------------------------------------------------------
class TestStep:
    def test_claim_moves_to_surcharge_level(self, experiment):
        state = ContractState(0, STATUS_ON)
        nxt = experiment.step(state, 3, 0, 1, 1, (9.0,))
        assert nxt == ContractState(1, STATUS_ON)

    def test_claim_free_year_earns_discount(self, experiment):
        state = ContractState(-1, STATUS_ON)
        nxt = experiment.step(state, 3, 0, 1, 0, (9.0,))
        assert nxt == ContractState(-2, STATUS_ON)

    def test_unsigned_stays_unsigned(self, experiment):
        state = ContractState(0, STATUS_NO)
        assert experiment.step(state, 1, 0, 0, 0, ()) == state

    def test_claim_without_cover_rejected(self, experiment):
        with pytest.raises(AdmissibilityViolation):
            experiment.step(ContractState(0, STATUS_NO), 1, 0, 0, 1, (2.0,))
        with pytest.raises(AdmissibilityViolation):
            experiment.stage_cost(ContractState(0, STATUS_NO), 1, 0, 0, 1, (2.0,))

    def test_small_claim_counts_as_claim_free(self, experiment):
        # A claim of exactly zero compensation transitions like no claim.
        state = ContractState(0, STATUS_ON)
        nxt = experiment.step(state, 3, 0, 1, 1, (0.3,))  # below deductible
        assert nxt == ContractState(-1, STATUS_ON)


class TestStageCost:
    def test_idle_year_costs_nothing(self, experiment):
        assert experiment.stage_cost(ContractState(0, STATUS_NO), 1, 0, 0, 0, ()) == 0.0

    def test_first_year_sign_on(self, experiment):
        # Sign-on fee is zero in year one; cost is the investment plus the
        # base premium.
        cost = experiment.stage_cost(ContractState(0, STATUS_NO), 1, 1, 1, 0, ())
        assert cost == pytest.approx(0.5 + 4.70, abs=1e-12)

    def test_late_withdrawal_penalty(self, experiment):
        cost = experiment.stage_cost(ContractState(0, STATUS_ON), 20, 0, 0, 0, (2.0,))
        assert cost == pytest.approx(8.0 + 2.0, abs=1e-12)

    def test_reactivation_fee(self, experiment):
        cost = experiment.stage_cost(ContractState(0, "off_1"), 5, 0, 1, 0, ())
        assert cost == pytest.approx(3.0 + 4.70, abs=1e-12)

    def test_nonnegative_on_random_inputs(self, experiment):
        rng = np.random.default_rng(11)
        statuses = experiment.rule.statuses
        for _ in range(300):
            level = int(rng.choice(experiment.rule.levels))
            status = statuses[rng.integers(len(statuses))]
            t = int(rng.integers(1, 21))
            d = int(rng.integers(0, 2))
            iota = int(rng.integers(0, 2))
            j = int(rng.integers(0, 2)) if iota else 0
            losses = tuple(rng.uniform(0.0, 30.0, size=rng.integers(0, 4)))
            cost = experiment.stage_cost(
                ContractState(level, status), t, d, iota, j, losses
            )
            assert cost >= 0.0

    def test_compensation_nets_out(self, experiment):
        state = ContractState(0, STATUS_ON)
        gross = experiment.stage_cost(state, 3, 0, 1, 0, (10.0,))
        net = experiment.stage_cost(state, 3, 0, 1, 1, (10.0,))
        assert gross - net == pytest.approx(experiment.compensation(0, 3, 10.0))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------
def _tiny_contract(menu=None) -> ContractSpec:
    T = 2
    levels = (0,)
    statuses = contract_statuses(T)
    rule = BonusMalusRule(
        levels=levels,
        statuses=statuses,
        zero_claim={0: 0},
        pieces={0: ((0.0, 0),)},
        inactive={(0, s): (0, "off_1") for s in statuses if s != STATUS_NO},
    )
    schedules = ContractSchedules(
        levels=levels,
        horizon=T,
        premium=np.full((1, T), 1.0),
        deductible=np.zeros((1, T)),
        max_comp=np.full((1, T), 10.0),
        fee_in=np.zeros(T),
        fee_out=np.zeros(T),
        fee_re=0.0,
        discount_factor=1.0,
    )
    return ContractSpec(
        rule=rule,
        schedules=schedules,
        menu=menu or MitigationMenu(betas=(0.0,), gammas=(0.0,)),
    )


class TestValidation:
    def test_menu_requires_null_measure(self):
        with pytest.raises(DomainError):
            MitigationMenu(betas=(0.5,), gammas=(0.0,))
        with pytest.raises(DomainError):
            MitigationMenu(betas=(0.0, -1.0), gammas=(0.0, 1.0))

    def test_rule_rejects_decreasing_claim_transition(self):
        statuses = contract_statuses(1)
        with pytest.raises(DomainError):
            BonusMalusRule(
                levels=(-1, 0, 1),
                statuses=statuses,
                zero_claim={-1: -1, 0: 0, 1: 1},
                pieces={
                    -1: ((0.0, 1), (2.0, 0)),  # decreasing in the claim
                    0: ((0.0, 1),),
                    1: ((0.0, 1),),
                },
                inactive={
                    (b, s): (b, "off_1")
                    for b in (-1, 0, 1)
                    for s in statuses
                    if s != STATUS_NO
                },
            )

    def test_rule_rejects_missing_inactive_entry(self):
        statuses = contract_statuses(2)
        with pytest.raises(DomainError):
            BonusMalusRule(
                levels=(0,),
                statuses=statuses,
                zero_claim={0: 0},
                pieces={0: ((0.0, 0),)},
                inactive={(0, STATUS_ON): (0, "off_1")},  # off_1, off_2 missing
            )

    def test_rule_rejects_zero_above_first_band(self):
        statuses = contract_statuses(1)
        with pytest.raises(DomainError):
            BonusMalusRule(
                levels=(0, 1),
                statuses=statuses,
                zero_claim={0: 1, 1: 1},
                pieces={0: ((0.0, 0),), 1: ((0.0, 1),)},
                inactive={
                    (b, s): (b, "off_1")
                    for b in (0, 1)
                    for s in statuses
                    if s != STATUS_NO
                },
            )

    def test_schedules_reject_premium_decreasing_in_level(self):
        statuses = contract_statuses(1)
        with pytest.raises(DomainError):
            ContractSchedules(
                levels=(0, 1),
                horizon=1,
                premium=np.array([[2.0], [1.0]]),
                deductible=np.zeros((2, 1)),
                max_comp=np.ones((2, 1)),
                fee_in=np.zeros(1),
                fee_out=np.zeros(1),
                fee_re=0.0,
                discount_factor=0.95,
            )

    def test_negative_event_loss_rejected(self, experiment):
        with pytest.raises(DomainError):
            experiment.aggregate_loss(0, (-1.0,))
