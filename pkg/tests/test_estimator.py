import itertools

import numpy as np
import pytest

from statecomm.errors import ValidationError
from statecomm.estimator import (
    DistortionTable,
    EstimatorTable,
    expected_distortion,
    optimal_estimator,
    optimal_expected_distortion,
)
from statecomm.probcore import JointPmf


def brute_force_best(joint, z_axis, d):
    """Exhaustive search over every estimator table; returns min distortion."""
    m = np.moveaxis(joint.probs, z_axis, -1)
    cond_shape = m.shape[:-1]
    best = np.inf
    for combo in itertools.product(range(d.card_shat), repeat=int(np.prod(cond_shape))):
        table = EstimatorTable(np.array(combo).reshape(cond_shape), d.card_shat)
        best = min(best, expected_distortion(joint, z_axis, table, d))
    return best


class TestDistortionTable:
    def test_hamming(self):
        d = DistortionTable.hamming(3)
        assert d.d[1, 1] == 0 and d.d[0, 2] == 1

    def test_requires_zero_per_row(self):
        with pytest.raises(ValidationError):
            DistortionTable(np.array([[0.0, 1.0], [0.5, 1.0]]))

    def test_rejects_negative(self):
        with pytest.raises(ValidationError):
            DistortionTable(np.array([[0.0, -1.0], [1.0, 0.0]]))


class TestOptimalEstimator:
    def test_deterministic_posterior_gives_zero(self):
        # Z = V, Hamming
        joint = JointPmf((2, 2), np.array([[0.5, 0.0], [0.0, 0.5]]))
        d = DistortionTable.hamming(2)
        est = optimal_estimator(joint, 0, d)
        assert expected_distortion(joint, 0, est, d) == 0.0

    def test_independent_source_constant_choice(self):
        # V independent of Z ~ Bern(0.2): best blind guess is 0, distortion 0.2
        pz = np.array([0.8, 0.2])
        pv = np.array([0.5, 0.5])
        joint = JointPmf((2, 2), np.outer(pz, pv))
        d = DistortionTable.hamming(2)
        est = optimal_estimator(joint, 0, d)
        assert np.all(est.choice == 0)
        assert expected_distortion(joint, 0, est, d) == pytest.approx(0.2)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        d = DistortionTable.hamming(3)
        for _ in range(100):
            dims = (3, int(rng.integers(2, 4)))
            probs = rng.dirichlet(np.ones(int(np.prod(dims)))).reshape(dims)
            joint = JointPmf(dims, probs)
            est = optimal_estimator(joint, 0, d)
            got = expected_distortion(joint, 0, est, d)
            assert got <= brute_force_best(joint, 0, d) + 1e-12
            assert got == pytest.approx(optimal_expected_distortion(joint, 0, d), abs=1e-15)

    def test_tie_breaks_to_smallest_index(self):
        joint = JointPmf((2, 1), np.array([[0.5], [0.5]]))
        est = optimal_estimator(joint, 0, DistortionTable.hamming(2))
        assert est.choice[0] == 0

    def test_zero_probability_tuples_get_zero(self):
        probs = np.zeros((2, 2))
        probs[:, 0] = [0.3, 0.7]
        joint = JointPmf((2, 2), probs)
        est = optimal_estimator(joint, 0, DistortionTable.hamming(2))
        assert est.choice[1] == 0
        # and the choice there is insensitive to the rest of the table
        probs2 = np.zeros((2, 2))
        probs2[:, 0] = [0.6, 0.4]
        est2 = optimal_estimator(JointPmf((2, 2), probs2), 0, DistortionTable.hamming(2))
        assert est2.choice[1] == 0


class TestExpectedDistortion:
    def test_uniform_three_symbols(self):
        # estimator ignoring everything on uniform S over 3 symbols: 2/3
        joint = JointPmf((3, 1), np.full((3, 1), 1 / 3))
        d = DistortionTable.hamming(3)
        est = EstimatorTable(np.zeros((1,), dtype=int), 3)
        assert expected_distortion(joint, 0, est, d) == pytest.approx(2 / 3)

    def test_shape_mismatch(self):
        joint = JointPmf((2, 2), np.full((2, 2), 0.25))
        est = EstimatorTable(np.zeros((3,), dtype=int), 2)
        with pytest.raises(ValidationError):
            expected_distortion(joint, 0, est, DistortionTable.hamming(2))


class TestDataProcessing:
    def test_markov_chain_side_information_never_helps(self):
        # Z -> V -> W: best estimator from V alone matches best from (V, W),
        # both found by exhaustive enumeration.
        rng = np.random.default_rng(11)
        d = DistortionTable.hamming(3)
        for _ in range(60):
            nz, nv, nw = rng.integers(2, 4, size=3)
            pz = rng.dirichlet(np.ones(nz))
            pv_given_z = rng.dirichlet(np.ones(nv), size=nz)
            pw_given_v = rng.dirichlet(np.ones(nw), size=nv)
            probs = np.einsum("z,zv,vw->zvw", pz, pv_given_z, pw_given_v)
            joint_zvw = JointPmf((int(nz), int(nv), int(nw)), probs)
            joint_zv = joint_zvw.marginal((0, 1))
            dsub = DistortionTable.hamming(int(nz))
            best_v = brute_force_best(joint_zv, 0, dsub)
            best_vw = brute_force_best(joint_zvw, 0, dsub)
            assert best_v <= best_vw + 1e-12
            # the constructed estimator from V alone attains the enumerated optimum
            est_v = optimal_estimator(joint_zv, 0, dsub)
            assert expected_distortion(joint_zv, 0, est_v, dsub) == pytest.approx(
                best_v, abs=1e-12
            )
