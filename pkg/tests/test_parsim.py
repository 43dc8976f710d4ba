import csv
import io

import numpy as np
import pytest

from fmm2d.errors import DomainError
from fmm2d.parsim import SWEEP_COLUMNS, MachineModel, simulate, sweep, sweep_csv
from fmm2d.partition import (
    ObjectiveWeights,
    Partition,
    SyntheticLoadModel,
    TreeLoadModel,
    initial_partition,
    objective,
)
from fmm2d.quadtree import build_tree

MACHINE = MachineModel()


@pytest.fixture(scope="module")
def clustered_model(clustered_10k):
    return TreeLoadModel(build_tree(clustered_10k[0], clustered_10k[1]), 12, k=3)


class TestSimulate:
    def test_single_rank(self, clustered_model):
        t = simulate(clustered_model, initial_partition(clustered_model, 1), MACHINE)
        assert t.comm_time.tolist() == [0.0]
        assert t.speedup == 1.0 and t.efficiency == 1.0

    @pytest.mark.parametrize("P", [1, 2, 4, 8])
    def test_perfect_balance_speedup(self, P):
        model = SyntheticLoadModel([3.0] * 8)
        t = simulate(model, initial_partition(model, P), MACHINE)
        assert t.speedup == P
        assert t.efficiency == 1.0

    def test_hand_timeline(self):
        model = SyntheticLoadModel([2e9, 1e9], {(0, 1): 500}, coarse_work=1e9)
        machine = MachineModel(flop_rate=1e9, latency=0.5, bandwidth=1000.0)
        t = simulate(model, Partition(0, 2, (0, 1)), machine)
        # each rank sends and receives one 500-byte message
        assert t.compute_time.tolist() == [3.0, 2.0]
        assert t.comm_time.tolist() == [2.0, 2.0]
        assert t.makespan == 5.0
        assert t.speedup == pytest.approx(4.0 / 5.0)
        assert t.imbalance == pytest.approx(5.0 / 4.5)

    def test_work_lower_bound(self, clustered_model, rng):
        for P in (2, 3, 8):
            a = rng.integers(0, P, size=clustered_model.n_units)
            t = simulate(clustered_model, Partition(3, P, tuple(a)), MACHINE)
            assert t.makespan >= clustered_model.total_work / (P * MACHINE.flop_rate)

    def test_identities(self, clustered_model, rng):
        a = rng.integers(0, 5, size=clustered_model.n_units)
        t = simulate(clustered_model, Partition(3, 5, tuple(a)), MACHINE)
        assert t.efficiency == pytest.approx(t.speedup / 5, rel=1e-15)
        assert t.imbalance >= 1.0
        assert np.all(t.total_time == t.compute_time + t.comm_time)

    def test_bad_machine(self):
        with pytest.raises(DomainError):
            MachineModel(bandwidth=0)


class TestSweep:
    def test_single_rank(self, clustered_model):
        (rec,) = sweep(clustered_model, [1])
        assert rec.timeline.speedup == 1.0

    def test_two_equal_units(self):
        recs = sweep(SyntheticLoadModel([1.0, 1.0]), [1, 2])
        assert [r.timeline.speedup for r in recs] == [1.0, 2.0]

    def test_refined_not_worse(self, clustered_model):
        w = ObjectiveWeights()
        for rec in sweep(clustered_model, [1, 2, 4, 8], w):
            assert objective(clustered_model, rec.partition, w) <= \
                objective(clustered_model, rec.initial, w)
            assert rec.timeline.makespan <= rec.initial_timeline.makespan

    def test_affine_case_makespan_dominance(self, rng):
        # without traffic the makespan is an affine function of J
        for _ in range(20):
            model = SyntheticLoadModel(rng.uniform(1, 10, size=12), coarse_work=5.0)
            for rec in sweep(model, [2, 3, 4], ObjectiveWeights(0)):
                assert rec.timeline.makespan <= rec.initial_timeline.makespan

    def test_efficiency_nonincreasing(self, clustered_model):
        eff = [r.timeline.efficiency for r in sweep(clustered_model, [1, 2, 4, 8])]
        assert all(b <= a for a, b in zip(eff, eff[1:]))

    def test_bad_ranks(self, clustered_model):
        with pytest.raises(DomainError):
            sweep(clustered_model, [])
        with pytest.raises(DomainError):
            sweep(clustered_model, [1, 0])

    def test_csv(self):
        text = sweep_csv(sweep(SyntheticLoadModel([1.0, 2.0, 3.0]), [1, 3]))
        rows = list(csv.reader(io.StringIO(text)))
        assert tuple(rows[0]) == SWEEP_COLUMNS
        assert [r[0] for r in rows[1:]] == ["1", "3"]
        assert float(rows[2][4]) == pytest.approx(2.0)
