from __future__ import annotations

import io
import math

import numpy as np
import pytest
from scipy import stats

from crnlab import models
from crnlab.errors import ContractError, PropensityOverflowError
from crnlab.network import (
    Complex,
    Reaction,
    ReactionNetwork,
    conservation_vectors,
    generator_apply,
    total_rate,
    transitions,
)
from crnlab.simulate import (
    Displacement,
    Downcross,
    FixedTime,
    HitSet,
    JumpExcluding,
    JumpOfType,
    NthJump,
    RuleSequence,
    SimConfig,
    Thinning,
    entropy_energy,
    estimate_drift,
    hitting_time_sample,
    iter_events,
    joint_occupation,
    linear_energy,
    occupation_measure,
    polynomial_energy,
    replica_rng,
    run_until,
    simulate,
)


def cfg(seed=1, max_time=10.0, **kw):
    return SimConfig(seed=seed, max_time=max_time, **kw)


class TestDeterminism:
    def test_bit_identical_reruns(self):
        net = models.showcase()
        c = cfg(seed=99, max_time=50.0)
        a = simulate(net, (5, 5), c)
        b = simulate(net, (5, 5), c)
        assert np.array_equal(a.times, b.times)
        assert np.array_equal(a.states, b.states)
        assert a.event_count == b.event_count

    def test_engines_agree_on_event_path(self):
        net = models.showcase()
        a = simulate(net, (5, 5), cfg(seed=7, max_time=20.0, engine="python"))
        b = simulate(net, (5, 5), cfg(seed=7, max_time=20.0, engine="numba"))
        assert np.array_equal(a.states, b.states)
        assert a.event_count == b.event_count
        assert np.max(np.abs(a.times - b.times)) < 1e-12 * max(1.0, a.times[-1])

    def test_key_separates_streams(self):
        net = models.mm_infinity()
        a = simulate(net, (0,), cfg(seed=1, max_time=30.0), key=(0,))
        b = simulate(net, (0,), cfg(seed=1, max_time=30.0), key=(1,))
        assert not np.array_equal(a.times, b.times)


class TestRecording:
    def test_first_sample_is_initial_state(self):
        net = models.triangle()
        rec = simulate(net, (4, 6), cfg(seed=2, max_time=5.0))
        assert rec.times[0] == 0.0
        assert tuple(rec.states[0]) == (4, 6)

    def test_times_strictly_increasing(self):
        net = models.showcase()
        rec = simulate(net, (3, 3), cfg(seed=5, max_time=40.0))
        assert np.all(np.diff(rec.times) > 0)

    def test_no_reactions_absorbed_immediately(self):
        net = ReactionNetwork(("S1",), ())
        rec = simulate(net, (4,), cfg(seed=1, max_time=5.0))
        assert rec.termination == "absorbed"
        assert rec.times.shape == (1,)
        assert rec.final_state == (4,)

    def test_every_k_thinning(self):
        net = models.mm_infinity()
        full = simulate(net, (0,), cfg(seed=3, max_time=200.0))
        thin = simulate(net, (0,), cfg(seed=3, max_time=200.0, thinning=Thinning.every(10)))
        assert thin.event_count == full.event_count
        assert np.array_equal(thin.times, np.concatenate(([0.0], full.times[10::10])))

    def test_grid_thinning_matches_event_record(self):
        net = models.mm_infinity()
        full = simulate(net, (0,), cfg(seed=4, max_time=50.0))
        grid = np.linspace(1.0, 49.0, 25)
        gridded = simulate(
            net, (0,), cfg(seed=4, max_time=50.0, thinning=Thinning.at_times(grid))
        )
        # state at grid time g is the last event state at or before g
        for g, row in zip(grid, gridded.states[1:]):
            i = np.searchsorted(full.times, g, side="right") - 1
            assert tuple(row) == tuple(full.states[i])

    def test_event_limit_reported(self):
        net = models.mm_infinity()
        rec = simulate(net, (0,), cfg(seed=1, max_time=1e9, max_events=100))
        assert rec.termination == "event-limit"
        assert rec.event_count == 100

    def test_csv_round_trip(self):
        net = models.triangle()
        rec = simulate(net, (2, 3), cfg(seed=8, max_time=3.0))
        buf = io.StringIO()
        rec.to_csv(buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "t,x_1,x_2"
        assert lines[-1].startswith("# termination:")
        assert len(lines) == rec.times.size + 2


class TestConservationAlongPaths:
    def test_exact_invariance(self):
        net = models.conserved_triple()
        vecs = conservation_vectors(net)
        rec = simulate(net, (6, 7, 7), cfg(seed=21, max_time=1e6, max_events=20000))
        for rho in vecs:
            series = rec.states @ np.array(rho)
            assert np.all(series == series[0])


class TestStopRules:
    def test_first_jump_time_is_exponential(self):
        lam, mu = 1.0, 1.0
        net = models.mm_infinity(lam, mu)
        x0 = (4,)
        rate = total_rate(net, x0)
        times = []
        c = cfg(seed=17, max_time=1e6, thinning=Thinning.none())
        for r in range(400):
            res = run_until(net, x0, NthJump(1), c, key=(r,))
            assert res.fired
            times.append(res.time)
        times = np.asarray(times)
        se = times.std(ddof=1) / math.sqrt(times.size)
        assert abs(times.mean() - 1.0 / rate) < 3 * se
        ks = stats.kstest(times * rate, "expon")
        assert ks.pvalue > 0.01

    def test_fixed_time_zero(self):
        res = run_until(models.mm_infinity(), (3,), FixedTime(0.0), cfg(seed=1))
        assert res.fired and res.time == 0.0 and res.state == (3,)

    def test_fixed_time_on_absorbed_chain(self):
        net = ReactionNetwork(("S1",), ())
        res = run_until(net, (2,), FixedTime(4.0), cfg(seed=1, max_time=10.0))
        assert res.fired and res.time == 4.0 and res.state == (2,)

    def test_hit_set_containing_start(self):
        res = run_until(
            models.mm_infinity(), (5,), HitSet(coord=0, op=">=", value=3), cfg(seed=1)
        )
        assert res.fired and res.time == 0.0

    def test_hit_set_predicate_path(self):
        net = models.mm_infinity()
        structured = run_until(
            net, (0,), HitSet(coord=0, op=">=", value=6), cfg(seed=12, max_time=1e5)
        )
        pred = run_until(
            net, (0,), HitSet(predicate=lambda x: x[0] >= 6), cfg(seed=12, max_time=1e5)
        )
        assert structured.fired and pred.fired
        assert structured.time == pred.time
        assert structured.state == pred.state

    def test_censoring_reported(self):
        net = models.mm_infinity()
        res = run_until(
            net, (0,), HitSet(coord=0, op=">=", value=10**6), cfg(seed=1, max_time=5.0)
        )
        assert not res.fired
        assert res.record.termination == "time-limit"

    def test_jump_of_type_counts(self):
        net = models.mm_infinity()
        c = cfg(seed=33, max_time=1e6, thinning=Thinning.every_event())
        res = run_until(net, (0,), JumpOfType(reactions=(1,), count=3), c)
        assert res.fired
        # displacement of reaction 1 is -1: exactly 3 down-jumps happened
        downs = sum(1 for d in np.diff(res.record.states[:, 0]) if d == -1)
        assert downs == 3
        assert np.diff(res.record.states[:, 0])[-1] == -1

    def test_jump_excluding(self):
        sf = models.autocatalytic(p=3, q=2)
        c = cfg(seed=2, max_time=1e6, thinning=Thinning.every_event())
        res = run_until(sf, (50, 2), JumpExcluding(reactions=(2,), count=1), c)
        assert res.fired
        # every jump but the last is the excluded bulk conversion (-3, +1)
        diffs = np.diff(res.record.states, axis=0)
        for row in diffs[:-1]:
            assert tuple(row) == (-3, 1)
        assert tuple(diffs[-1]) != (-3, 1)

    def test_downcross_rule(self):
        sf = models.slow_fast(2)
        c = cfg(seed=9, max_time=1e7, thinning=Thinning.none())
        res = run_until(sf, (0, 50), Downcross(coord=0, level=2, count=1), c)
        assert res.fired
        assert res.state[0] == 1  # crossed from 2 to 1

    def test_rule_sequence_accumulates_time(self):
        net = models.mm_infinity()
        c = cfg(seed=14, max_time=100.0, thinning=Thinning.none())
        both = run_until(net, (0,), RuleSequence((FixedTime(1.0), FixedTime(2.0))), c)
        assert both.fired and both.time == pytest.approx(3.0)

    def test_overflow_raises_with_state(self):
        net = ReactionNetwork(
            ("S1",),
            (Reaction(Complex((20,)), Complex((21,)), 1e30),),
        )
        with pytest.raises(PropensityOverflowError) as exc:
            simulate(net, (10**15,), cfg(seed=1, max_time=1.0))
        assert exc.value.state == (10**15,)


class TestDrift:
    def test_dynkin_identity_at_first_jump(self):
        # E[f(X(t1))] - f(x) = generator(f)(x) * E[t1] for any f, here linear
        net = models.showcase()
        x0 = (4, 3)
        f = linear_energy((2.0, 1.0))
        est = estimate_drift(net, x0, f, NthJump(1), replicas=800, cfg=cfg(seed=5, max_time=1e6))
        support = {x0} | {z for z, _ in transitions(net, x0)}
        gen = generator_apply(net, {s: f(s) for s in support}, x0)
        expected_change = gen / total_rate(net, x0)
        assert abs(est.mean_change - expected_change) < 3 * est.stderr_change
        assert abs(est.mean_tau - 1.0 / total_rate(net, x0)) < 3 * est.stderr_tau

    def test_absorbing_state_with_deterministic_clock(self):
        net = ReactionNetwork(("S1",), ())
        est = estimate_drift(
            net, (5,), linear_energy(), FixedTime(2.0), replicas=4, cfg=cfg(seed=1, max_time=10.0)
        )
        assert est.mean_change == 0.0
        assert est.mean_tau == 2.0

    def test_absorbing_state_all_censored(self):
        net = ReactionNetwork(("S1",), ())
        with pytest.raises(ContractError):
            estimate_drift(
                net, (5,), linear_energy(), NthJump(1), replicas=4, cfg=cfg(seed=1, max_time=10.0)
            )

    def test_energy_functions(self):
        assert linear_energy()((3, 4)) == 7.0
        assert linear_energy((2.0, 0.5))((3, 4)) == 8.0
        assert entropy_energy()((0, 1)) == pytest.approx(1.0)  # 0 ln 0 = 0 term + (0 - 1 + 1)
        assert entropy_energy()((2,)) == pytest.approx(2 * math.log(2) - 1)
        assert polynomial_energy((1, 2))((3, 4)) == 19.0


class TestOccupation:
    def test_constant_trajectory_single_bin(self):
        net = ReactionNetwork(("S1", "S2"), ())
        occ = occupation_measure(
            net, (3, 1), projection=0, time_scale=2.0, space_scale=1.0,
            horizon=5.0, cfg=cfg(seed=1, max_time=100.0),
        )
        assert occ.total_mass() == pytest.approx(5.0)
        marg = occ.time_marginal()
        assert marg[3] == pytest.approx(1.0)

    def test_total_mass_equals_scaled_horizon(self):
        net = models.mm_infinity()
        occ = occupation_measure(
            net, (0,), projection=0, time_scale=4.0, space_scale=2.0,
            horizon=25.0, cfg=cfg(seed=6, max_time=200.0), time_bins=7,
        )
        assert occ.total_mass() == pytest.approx(25.0, abs=1e-9)
        assert occ.elapsed_scaled == pytest.approx(25.0)

    def test_joint_occupation_time_average(self):
        net = models.mm_infinity(1.0, 1.0)
        occ = joint_occupation(
            net, (0,), (64,), cfg(seed=10, max_time=4000.0), horizon=4000.0, time_bins=20
        )
        avg = occ.time_average()[0]
        batches = occ.batch_means()[:, 0]
        se = batches.std(ddof=1) / math.sqrt(batches.size)
        assert abs(avg - 1.0) < 4 * se

    def test_occupation_matches_event_replay(self):
        # exact sojourn accounting cross-checked against a replayed trajectory
        net = models.triangle()
        c = cfg(seed=44, max_time=30.0)
        rec = simulate(net, (3, 3), c)
        occ = occupation_measure(
            net, (3, 3), projection=1, time_scale=1.0, space_scale=1.0,
            horizon=30.0, cfg=c, state_cap=200,
        )
        times = np.concatenate((rec.times, [30.0]))
        sojourn = np.diff(times)
        expect = np.zeros(201)
        for v, d in zip(rec.states[:, 1], sojourn):
            expect[v] += d
        assert np.allclose(occ.mass.sum(axis=0), expect, atol=1e-9)


class TestHittingTimes:
    def test_target_containing_start_gives_zeros(self):
        samples = hitting_time_sample(
            models.mm_infinity(), (2,), HitSet(coord=0, op="<=", value=5),
            replicas=5, cfg=cfg(seed=3),
        )
        assert all(s.time == 0.0 and not s.censored for s in samples)

    def test_censored_flagged(self):
        samples = hitting_time_sample(
            models.mm_infinity(), (0,), HitSet(coord=0, op=">=", value=10**6),
            replicas=3, cfg=cfg(seed=3, max_time=2.0),
        )
        assert all(s.censored for s in samples)


class TestAgainstIndependentOracle:
    def test_holding_times_are_exponential(self):
        # KS on holding times at a few pinned states, Bonferroni over states
        net = models.mm_infinity(1.0, 1.0)
        rng = replica_rng(505)
        holds: dict[int, list[float]] = {0: [], 1: [], 2: []}
        prev_t, prev_x = 0.0, 0
        for t, _, x in iter_events(net, (0,), rng, 20000):
            if prev_x in holds:
                holds[prev_x].append(t - prev_t)
            prev_t, prev_x = t, x[0]
        alpha = 0.01 / len(holds)
        for k, samples in holds.items():
            rate = total_rate(net, (k,))
            ks = stats.kstest(np.array(samples) * rate, "expon")
            assert ks.pvalue > alpha, f"state {k}: p={ks.pvalue}"

    def test_jump_frequencies_match_q_matrix(self):
        # empirical jump choice vs q(x, z)/q(x) on a finite class
        net = models.conserved_triple()
        rng = replica_rng(606)
        counts: dict[tuple, int] = {}
        visits: dict[tuple, int] = {}
        prev = (8, 6, 6)
        n_events = 10**6
        for _, r, x in iter_events(net, prev, rng, n_events):
            visits[prev] = visits.get(prev, 0) + 1
            counts[(prev, x)] = counts.get((prev, x), 0) + 1
            prev = x
        assert len(visits) <= 500
        checked = 0
        for (x, z), k in counts.items():
            n = visits[x]
            if n < 50:
                continue
            rate_into = sum(a for zz, a in transitions(net, x) if zz == z)
            p = rate_into / total_rate(net, x)
            se = math.sqrt(p * (1 - p) / n)
            assert abs(k / n - p) <= 4 * se + 1e-12, (x, z, k / n, p)
            checked += 1
        assert checked > 50

    def test_kernel_agrees_with_oracle_distribution(self):
        # time-average of the kernel path vs the independent generator path
        net = models.triangle()
        occ = joint_occupation(
            net, (2, 2), (16, 16), cfg(seed=77, max_time=6000.0), horizon=6000.0
        )
        kernel_avg = occ.time_average()
        rng = replica_rng(78)
        tot = np.zeros(2)
        prev_t = 0.0
        prev_x = (2, 2)
        for t, _, x in iter_events(net, (2, 2), rng, 60000):
            if t > 6000.0:
                break
            tot += np.array(prev_x) * (t - prev_t)
            prev_t, prev_x = t, x
        oracle_avg = tot / prev_t
        assert np.allclose(kernel_avg, oracle_avg, atol=0.12)


def test_forced_first_event_from_empty_state():
    # from (0,0) only the source is enabled: the first event is always (1,1)
    net = models.slow_fast(2)
    for seed in range(5):
        res = run_until(net, (0, 0), NthJump(1), cfg(seed=seed, max_time=1e6))
        assert res.state == (1, 1)


class TestDisplacementAndComposite:
    def test_displacement_rule_matches_reaction_subset(self):
        # the pair annihilation is the unique (-1,-1) jump of this network
        net = models.slow_fast(2)
        c = cfg(seed=19, max_time=1e6, thinning=Thinning.none())
        by_delta = run_until(net, (10, 10), Displacement(delta=(-1, -1), count=4), c)
        by_type = run_until(net, (10, 10), JumpOfType(reactions=(1,), count=4), c)
        assert by_delta.fired and by_type.fired
        assert by_delta.time == by_type.time
        assert by_delta.state == by_type.state

    def test_displacement_shared_by_two_reactions(self):
        # both S1->S2 and S1+S2->2S2 displace by (-1,+1); the rule pools them
        net = models.conserved_triple()
        c = cfg(seed=23, max_time=1e6, thinning=Thinning.every_event())
        res = run_until(net, (8, 4, 4), Displacement(delta=(-1, 1, 0), count=5), c)
        assert res.fired
        diffs = np.diff(res.record.states, axis=0)
        assert sum(1 for row in diffs if tuple(row) == (-1, 1, 0)) == 5

    def test_displacement_never_matching_is_censored(self):
        net = models.mm_infinity()
        res = run_until(net, (3,), Displacement(delta=(7,)), cfg(seed=2, max_time=5.0))
        assert not res.fired

    def test_two_stage_boundary_then_drain(self):
        # from (N, b) with b below the conversion threshold: first wait for
        # x2 to reach q, then for the first jump that is not the conversion;
        # the composite clock is the sum of stage clocks
        net = models.autocatalytic(3, 2)
        rule = RuleSequence((
            HitSet(coord=1, op=">=", value=2),
            JumpExcluding(reactions=(2,), count=1),
        ))
        c = cfg(seed=29, max_time=1e9, thinning=Thinning.none())
        res = run_until(net, (150, 0), rule, c)
        assert res.fired
        # the drain stage ran: most of the bulk was converted
        assert res.state[0] < 100
        stage1 = run_until(net, (150, 0), HitSet(coord=1, op=">=", value=2), c)
        assert stage1.time < res.time


def test_occupation_time_bins_match_event_replay_exactly():
    # per-bin sojourn accounting vs a manual replay that splits intervals
    # across the same bin edges
    net = models.triangle()
    c = cfg(seed=61, max_time=24.0)
    rec = simulate(net, (3, 3), c)
    bins = 7
    occ = occupation_measure(
        net, (3, 3), projection=0, time_scale=1.0, space_scale=1.0,
        horizon=24.0, cfg=c, time_bins=bins, state_cap=128,
    )
    edges = np.linspace(0.0, 24.0, bins + 1)
    expect = np.zeros((bins, 129))
    times = np.concatenate((rec.times, [24.0]))
    for (t0, t1), v in zip(zip(times, times[1:]), rec.states[:, 0]):
        for b in range(bins):
            lo, hi = max(t0, edges[b]), min(t1, edges[b + 1])
            if hi > lo:
                expect[b, v] += hi - lo
    assert np.allclose(occ.mass, expect, atol=1e-9)
    assert np.allclose(occ.mass.sum(), 24.0, atol=1e-9)


def test_auto_engine_falls_back_without_numba(monkeypatch):
    from crnlab import _engine

    monkeypatch.setattr(_engine, "_numba_kernel", None)
    monkeypatch.setattr(_engine, "_numba_failed", True)
    kernel, name = _engine.get_kernel("auto")
    assert name == "python"
    with pytest.raises(RuntimeError):
        _engine.get_kernel("numba")
