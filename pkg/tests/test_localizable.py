import math

import numpy as np
import pytest

import trispin as ts
from trispin.free_fermion import CorrelationSeries
from trispin.localizable import (
    MeasurementPlan,
    branch_average,
    cluster_scheme_plan,
    concurrence_pure,
    entanglement_length,
    optimize_plan,
    lower_bound_plan,
)
from trispin.spin_core import ResourceLimitError

X = (math.pi / 2.0, 0.0)
Z = (0.0, 0.0)


def cluster_ground(n, b):
    return ts.ground_state(ts.cluster_hamiltonian(n, b))[1]


def random_plan(n, pair, seed):
    rng = np.random.default_rng(seed)
    angles = {
        s: (rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
        for s in range(n)
        if s not in pair
    }
    return MeasurementPlan(n, pair, angles)


class TestConcurrence:
    def test_bell_state(self):
        assert concurrence_pure([2**-0.5, 0, 0, 2**-0.5]) == pytest.approx(1.0)

    def test_product_state(self):
        assert concurrence_pure([0, 1, 0, 0]) == 0.0

    def test_partially_entangled(self):
        amps = [math.cos(math.pi / 8), 0, 0, math.sin(math.pi / 8)]
        assert concurrence_pure(amps) == pytest.approx(math.sin(math.pi / 4))

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError, match="normalized"):
            concurrence_pure([1.0, 1.0, 0.0, 0.0])

    def test_wrong_shape_rejected(self):
        with pytest.raises(ValueError):
            concurrence_pure([1.0, 0.0])


class TestMeasurementPlan:
    def test_identical_pair_rejected(self):
        with pytest.raises(ValueError):
            MeasurementPlan(4, (1, 1), {0: Z, 2: Z, 3: Z})

    def test_missing_angles_rejected(self):
        with pytest.raises(ValueError):
            MeasurementPlan(4, (0, 1), {2: Z})

    def test_theta_range_enforced(self):
        with pytest.raises(ValueError):
            MeasurementPlan(4, (0, 1), {2: (4.0, 0.0), 3: Z})


class TestBranchAverage:
    def test_product_state_gives_zero(self):
        st = ts.StateVector.basis_state(7, 0)
        res = branch_average(st, random_plan(7, (0, 4), seed=5))
        assert res.value < 1e-12

    def test_probabilities_sum_to_one(self):
        gs = cluster_ground(8, 0.6)
        res = branch_average(gs, random_plan(8, (1, 5), seed=8), keep_branches=True)
        total = sum(b.probability for b in res.branches)
        assert abs(total - 1.0) < 1e-10
        for b in res.branches:
            assert abs(np.linalg.norm(b.amplitudes) - 1.0) < 1e-10

    def test_cluster_state_deterministic_bell_pairs(self):
        gs = cluster_ground(8, 0.0)
        res = branch_average(gs, cluster_scheme_plan(8, (0, 4)), keep_branches=True)
        assert res.value == pytest.approx(1.0, abs=1e-9)
        assert all(b.concurrence > 1 - 1e-9 for b in res.branches)

    def test_explicit_path_plan_matches_recipe(self):
        # Z on the interior of one path, X on the rest: deterministic Bell pair
        angles = {1: Z, 2: Z, 3: Z, 5: X, 6: X, 7: X}
        res = branch_average(cluster_ground(8, 0.0), MeasurementPlan(8, (0, 4), angles))
        assert res.value == pytest.approx(1.0, abs=1e-9)

    def test_outcome_flip_convention_invariance(self):
        # theta -> pi - theta, phi -> phi + pi flips which outcome is which
        gs = cluster_ground(7, 0.6)
        plan = random_plan(7, (0, 3), seed=3)
        theta, phi = plan.angles[5]
        flipped_angles = dict(plan.angles)
        flipped_angles[5] = (math.pi - theta, (phi + math.pi) % (2 * math.pi))
        flipped = MeasurementPlan(7, (0, 3), flipped_angles)
        assert branch_average(gs, plan).value == pytest.approx(
            branch_average(gs, flipped).value, abs=1e-12
        )

    def test_measured_cap(self):
        with pytest.raises(ResourceLimitError):
            branch_average(
                ts.StateVector.basis_state(8), random_plan(8, (0, 4), 1), measured_cap=3
            )

    def test_unnormalized_state_rejected(self):
        st = ts.StateVector(6, np.ones(64))
        with pytest.raises(ValueError, match="normalized"):
            branch_average(st, random_plan(6, (0, 3), 1))

    def test_frozen_ring_fixture(self):
        # enumeration value frozen at build time: B=0.5, 9-site ring, L=9 recipe
        gs = cluster_ground(9, 0.5)
        res = branch_average(gs, lower_bound_plan(9, 9))
        assert res.value == pytest.approx(0.930092888739, abs=1e-9)


class TestSchemePlans:
    def test_cluster_scheme_shorter_arc(self):
        plan = cluster_scheme_plan(8, (0, 2))
        assert plan.angles[1] == Z
        for s in (3, 4, 5, 6, 7):
            assert plan.angles[s] == X

    def test_cluster_scheme_tie_break(self):
        # antipodal pair: the arc holding the smaller index is "between"
        plan = cluster_scheme_plan(8, (0, 4))
        assert plan.angles[1] == plan.angles[2] == plan.angles[3] == Z
        assert plan.angles[5] == plan.angles[6] == plan.angles[7] == X

    def test_lower_bound_transcription(self):
        plan = lower_bound_plan(8, 5)
        assert plan.target_pair == (0, 4)
        assert plan.angles[1] == X  # spin 2
        for site in (2, 3):  # spins 3..4
            assert plan.angles[site] == Z
        for site in (5, 6, 7):  # spins 6..8
            assert plan.angles[site] == Z

    def test_lower_bound_far_basis_variant(self):
        plan = lower_bound_plan(8, 5, far_basis="x")
        assert plan.angles[5] == X
        assert plan.angles[2] == Z

    def test_lower_bound_parity_constraint(self):
        with pytest.raises(ValueError, match="odd"):
            lower_bound_plan(6, 4)

    def test_lower_bound_converges_to_limit(self):
        b = 0.8
        limit = (1 - b * b) ** 0.25
        vals = []
        for k in (2, 3, 4):
            n = 2 * k + 1
            vals.append(branch_average(cluster_ground(n, b), lower_bound_plan(n, n)).value)
        assert all(y >= x - 1e-9 for x, y in zip(vals, vals[1:]))
        assert vals[-1] < limit
        assert limit - vals[-1] < 0.05


class TestOptimizer:
    def test_attains_unity_at_zero_field(self):
        gs = cluster_ground(7, 0.0)
        cfg = ts.AnnealConfig(n_temps=5, proposals_per_temp=5, restarts=1, seed=1)
        assert optimize_plan(gs, (0, 3), cfg).value == pytest.approx(1.0, abs=1e-9)

    def test_never_worse_than_schemes(self):
        gs = cluster_ground(10, 0.5)
        from trispin.localizable import scheme_seed_plans

        ensemble = max(branch_average(gs, p).value for p in scheme_seed_plans(10, (0, 4)))
        cfg = ts.AnnealConfig(n_temps=20, proposals_per_temp=10, restarts=1, seed=2)
        assert optimize_plan(gs, (0, 4), cfg).value >= ensemble - 1e-12

    def test_deterministic(self):
        gs = cluster_ground(8, 1.2)
        cfg = ts.AnnealConfig(n_temps=15, proposals_per_temp=8, restarts=2, seed=42)
        r1 = optimize_plan(gs, (0, 3), cfg)
        r2 = optimize_plan(gs, (0, 3), cfg)
        assert r1.value == r2.value
        assert r1.plan.angles == r2.plan.angles

    def test_trace_recorded(self):
        gs = cluster_ground(7, 0.9)
        cfg = ts.AnnealConfig(n_temps=4, proposals_per_temp=3, restarts=1, seed=0, keep_trace=True)
        res = optimize_plan(gs, (0, 2), cfg)
        assert len(res.trace) == 4
        best = [v for _, v in res.trace]
        assert best == sorted(best)

    @pytest.mark.slow
    @pytest.mark.parametrize("b", [0.5, 1.5])
    def test_distance_monotonicity_within_parity(self, b):
        # E_loc alternates with separation parity (sublattice structure), so
        # monotonic decay holds within each parity class separately
        gs = cluster_ground(12, b)
        cfg = ts.AnnealConfig(n_temps=60, proposals_per_temp=20, restarts=2, seed=13)
        vals = {s: optimize_plan(gs, (0, s), cfg).value for s in range(2, 7)}
        for seq in ([vals[2], vals[4], vals[6]], [vals[3], vals[5]]):
            assert all(later <= earlier + 1e-6 for earlier, later in zip(seq, seq[1:]))


class TestEntanglementLength:
    def test_constant_series_diverges(self):
        series = CorrelationSeries(list(range(2, 12)), [0.93] * 10)
        assert entanglement_length(series).diverges

    def test_exponential_series(self):
        lengths = list(range(2, 14))
        series = CorrelationSeries(lengths, [math.exp(-L / 2.0) for L in lengths])
        est = entanglement_length(series)
        assert est.model == "exponential"
        assert est.xi == pytest.approx(2.0, abs=1e-6)
