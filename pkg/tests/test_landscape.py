import numpy as np
import pytest

from laekit.data import DataMatrix, synthetic
from laekit.landscape import (
    CriticalSpec,
    critical_point,
    curvature_signature,
    global_minimum,
    m0,
    numerical_hessian,
    pack_params,
    ppca_from_decoder,
    prop1_critical,
    unpack_params,
)
from laekit.model import KINDS, LaeParams, LossSpec, grad_norm, loss
from laekit.spectra import haar_orthogonal
from laekit.verify import hessian_signature

SCALAR = DataMatrix.from_array([[2.0]])


def test_critical_point_scalar_sum():
    p = critical_point(CriticalSpec("sum", (1,), np.eye(1)), SCALAR, 2.0)
    w = np.sqrt(1.0 - 2.0 / 4.0)
    assert p.W1[0, 0] == pytest.approx(w, abs=1e-12)
    assert p.W2[0, 0] == pytest.approx(w, abs=1e-12)


def test_critical_point_empty_index_set():
    data = synthetic(4, 5, [4.0, 3.0, 2.0, 1.0], seed=0)
    for kind in KINDS:
        p = critical_point(CriticalSpec(kind, (), np.zeros((2, 0))), data, 0.5)
        assert np.array_equal(p.W1, np.zeros((2, 4)))
        assert np.array_equal(p.W2, np.zeros((4, 2)))


def test_critical_point_unregularized_scaled_frame():
    data = synthetic(3, 4, [3.0, 2.0, 1.0], seed=1)
    u1 = data.svd.U[:, :1]
    p = critical_point(CriticalSpec("unregularized", (1,), np.array([[2.0]])), data, 0.0)
    assert np.allclose(p.W2, u1 / 2.0, atol=1e-12)
    assert np.allclose(p.W1, 2.0 * u1.T, atol=1e-12)
    assert np.allclose(p.product(), u1 @ u1.T, atol=1e-12)
    # gradient-norm oracle
    assert grad_norm(LossSpec("unregularized"), p, data) <= 1e-8 * np.linalg.norm(data.gram)


def test_critical_point_sum_ties_exactly():
    data = synthetic(5, 6, [5.0, 4.0, 3.0, 2.0, 1.0], seed=2)
    O = haar_orthogonal(3, 4)[:, :2]
    p = critical_point(CriticalSpec("sum", (1, 3), O), data, 1.5)
    assert np.array_equal(p.W1, p.W2.T)


def test_critical_point_errors():
    data = synthetic(3, 4, [3.0, 2.0, 1.0], seed=3)
    with pytest.raises(ValueError, match="collapsed"):
        critical_point(CriticalSpec("sum", (3,), np.eye(1)), data, 2.0)
    with pytest.raises(ValueError, match="degenerate lam"):
        critical_point(CriticalSpec("sum", (1,), np.eye(1)), data, 4.0)
    with pytest.raises(ValueError, match="orthonormal"):
        CriticalSpec("sum", (1,), np.array([[2.0]]))
    with pytest.raises(ValueError, match="rank deficient"):
        CriticalSpec("unregularized", (1, 2), np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(ValueError, match="increasing"):
        CriticalSpec("sum", (2, 1), np.eye(2))


def test_stationarity_sample(make_data, make_frame):
    rng = np.random.default_rng(5)
    for _ in range(40):
        m = int(rng.integers(2, 7))
        k = int(rng.integers(1, m + 1))
        spectrum = np.sort(rng.uniform(0.4, 4.0, m))[::-1] + np.arange(m, 0, -1) * 0.05
        data = make_data(m, m + 2, spectrum, seed=int(rng.integers(1 << 30)))
        kind = KINDS[int(rng.integers(3))]
        lam = 0.0 if kind == "unregularized" else float(rng.uniform(0.05, 0.8)) * spectrum[-1] ** 2
        ell = int(rng.integers(0, k + 1))
        idx = tuple(sorted(rng.choice(np.arange(1, m + 1), ell, replace=False).tolist()))
        frame = make_frame(k, ell, kind == "sum", rng)
        p = critical_point(CriticalSpec(kind, idx, frame), data, lam)
        gn = grad_norm(LossSpec(kind, lam), p, data)
        assert gn <= 1e-8 * (np.linalg.norm(data.gram) + lam)


def test_frame_symmetry_keeps_loss_and_criticality(make_data):
    data = make_data(5)
    lam = 1.2
    O = haar_orthogonal(3, 6)[:, :2]
    R = haar_orthogonal(2, 7)
    spec_a = CriticalSpec("sum", (1, 2), O)
    spec_b = CriticalSpec("sum", (1, 2), O @ R)
    pa = critical_point(spec_a, data, lam)
    pb = critical_point(spec_b, data, lam)
    la = loss(LossSpec("sum", lam), pa, data)
    lb = loss(LossSpec("sum", lam), pb, data)
    assert abs(la - lb) <= 1e-10 * max(1.0, la)
    assert grad_norm(LossSpec("sum", lam), pb, data) <= 1e-8 * (np.linalg.norm(data.gram) + lam)


def test_sum_global_min_beats_same_size_sets(make_data):
    data = make_data(5)
    lam = 0.8  # below sigma_5^2 = 1 so every index set stays feasible
    spec_loss = LossSpec("sum", lam)
    best = loss(spec_loss, critical_point(CriticalSpec("sum", (1, 2), np.eye(2)), data, lam), data)
    for idx in [(1, 3), (2, 3), (1, 4), (3, 4), (2, 5)]:
        other = loss(spec_loss, critical_point(CriticalSpec("sum", idx, np.eye(2)), data, lam), data)
        assert best < other


def test_prop1_scalar_hyperbola():
    Q1, Q2 = prop1_critical(np.diag([2.0]), np.diag([2.0]), (1,), np.array([[3.0]]))
    assert Q1[0, 0] == pytest.approx(3.0)
    assert Q2[0, 0] == pytest.approx(1.0 / 3.0)
    assert (Q2 @ Q1)[0, 0] == pytest.approx(1.0)


def test_prop1_empty_and_table_example():
    Q1, Q2 = prop1_critical(np.diag([2.0, 1.0]), np.diag([2.0, 1.0]), (), np.zeros((1, 0)))
    assert np.array_equal(Q1, np.zeros((1, 2)))
    assert np.array_equal(Q2, np.zeros((2, 1)))
    Q1, Q2 = prop1_critical(np.diag([2.0, 1.0]), np.diag([2.0, 1.0]), (1,), np.array([[3.0]]))
    assert np.allclose(Q1, [[3.0, 0.0]])
    assert np.allclose(Q2, [[1.0 / 3.0], [0.0]])
    assert np.allclose(Q2 @ Q1, np.diag([1.0, 0.0]))


def test_prop1_stationarity_fd():
    # oracle: finite differences of the quadratic core loss
    D = np.diag([2.0, 1.2, 0.7])
    S = np.diag([1.5, 1.0, 0.6])
    rng = np.random.default_rng(8)
    G = rng.standard_normal((2, 2)) + 2.0 * np.eye(2)
    Q1, Q2 = prop1_critical(D, S, (1, 3), G)

    def core(q1, q2):
        return np.trace(q2 @ q1 @ S**2 @ q1.T @ q2.T - 2.0 * q2 @ q1 @ D**2)

    h = 1e-6
    worst = 0.0
    for M, which in ((Q1, 0), (Q2, 1)):
        for i in range(M.shape[0]):
            for j in range(M.shape[1]):
                Mp, Mm = M.copy(), M.copy()
                Mp[i, j] += h
                Mm[i, j] -= h
                if which == 0:
                    diff = core(Mp, Q2) - core(Mm, Q2)
                else:
                    diff = core(Q1, Mp) - core(Q1, Mm)
                worst = max(worst, abs(diff / (2 * h)))
    assert worst <= 1e-8 * max(1.0, abs(core(Q1, Q2)))


def test_prop1_hypothesis_rejected():
    with pytest.raises(ValueError, match="distinct"):
        prop1_critical(np.diag([1.0, 1.0]), np.diag([1.0, 1.0]), (1,), np.eye(2)[:, :1])
    with pytest.raises(ValueError, match="invertible"):
        prop1_critical(np.diag([1.0, 2.0]), np.diag([1.0, 0.0]), (1,), np.eye(2)[:, :1])


def test_m0_examples():
    spectrum = np.arange(20, 0, -1.0)
    # oracle: explicit scan
    want = 0
    for i, s in enumerate(spectrum, start=1):
        if s**2 > 10.0:
            want = i
    assert m0(spectrum, 10.0) == want == 17
    assert m0(spectrum, 0.0) == 20
    assert m0(spectrum, 400.0) == 0
    assert m0([2.0], 4.0) == 0


def test_global_minimum_specs(make_data):
    assert global_minimum("sum", SCALAR, 1, 2.0).index_set == (1,)
    assert global_minimum("sum", SCALAR, 1, 5.0).index_set == ()
    data = make_data(20, 22, np.arange(20, 0, -1.0))
    spec = global_minimum("sum", data, 10, 10.0)
    assert spec.index_set == tuple(range(1, 11))
    spec = global_minimum("unregularized", data, 10, 0.0)
    assert spec.index_set == tuple(range(1, 11))
    sig = curvature_signature("sum", spec.index_set, 20, 10)
    assert sig.descending == 0
    haar_spec = global_minimum("sum", data, 10, 10.0, frame_seed=3)
    assert np.abs(haar_spec.frame.T @ haar_spec.frame - np.eye(10)).max() <= 1e-10


def test_ppca_map_scalar_and_empty():
    p = critical_point(CriticalSpec("sum", (1,), np.eye(1)), SCALAR, 2.0)
    assert ppca_from_decoder(p.W2, SCALAR)[0, 0] == pytest.approx(np.sqrt(2.0), abs=1e-12)
    z = ppca_from_decoder(np.zeros((1, 1)), SCALAR)
    assert np.array_equal(z, np.zeros((1, 1)))


def test_ppca_map_matches_closed_form(make_data, make_frame):
    rng = np.random.default_rng(9)
    data = make_data(5, 5, [5.0, 4.0, 3.0, 2.0, 1.0])
    lam = 1.7
    feasible = np.arange(1, 6)[data.svd.s**2 > lam]
    for _ in range(5):
        ell = int(rng.integers(1, 3))
        idx = tuple(sorted(rng.choice(feasible, ell, replace=False).tolist()))
        O = make_frame(2, ell, True, rng)
        p = critical_point(CriticalSpec("sum", idx, O), data, lam)
        got = ppca_from_decoder(p.W2, data)
        rows = np.asarray(idx) - 1
        sig = data.svd.s[rows]
        want = (data.svd.U[:, rows] * (sig * np.sqrt(1.0 - lam / sig**2))) @ O.T
        assert np.linalg.norm(got - want) <= 1e-9 * max(1e-30, np.linalg.norm(want))


def test_ppca_map_rejects_singular_gram():
    wide = DataMatrix.from_array(np.array([[1.0, 0.0], [1.0, 0.0]]))  # rank 1
    with pytest.raises(ValueError, match="singular"):
        ppca_from_decoder(np.zeros((2, 1)), wide)


def test_curvature_signature_examples():
    sig = curvature_signature("sum", (1, 2), 4, 2)
    assert (sig.descending, sig.flat, sig.ascending) == (0, 1, 15)
    sig = curvature_signature("sum", (2, 4), 4, 2)
    assert (sig.descending, sig.flat, sig.ascending) == (3, 1, 12)
    for kind in ("unregularized", "product"):
        sig = curvature_signature(kind, (), 4, 2)
        assert (sig.descending, sig.flat) == (8, 0)
    assert curvature_signature("sum", (1,), 4, 2).total == 16


def test_numerical_hessian_scalar_cases():
    spec = LossSpec("sum", 2.0)
    origin = LaeParams(np.zeros((1, 1)), np.zeros((1, 1)))
    H = numerical_hessian(spec, origin, SCALAR)
    # eigenvalues 2 lam +- 2 x^2 = (12, -4): one descending, one ascending
    assert hessian_signature(H, zero_band=1e-4) == (1, 0, 1)
    w = 1.0 / np.sqrt(2.0)
    H = numerical_hessian(spec, LaeParams(np.array([[w]]), np.array([[w]])), SCALAR)
    assert hessian_signature(H, zero_band=1e-4) == (0, 0, 2)


def test_numerical_hessian_sum_global_min(make_data):
    data = make_data(4, 6, [4.0, 3.0, 2.0, 1.0])
    p = critical_point(CriticalSpec("sum", (1, 2), np.eye(2)), data, 0.5)
    H = numerical_hessian(LossSpec("sum", 0.5), p, data)
    assert hessian_signature(H, zero_band=1e-4) == (0, 1, 15)


def test_quartic_transverse_degeneracy_of_partial_rank_cells(make_data):
    # At 0 < l < k the unregularized/product Hessians gain l(k-l) machine-zero
    # directions along which the loss grows quartically: flat at second order,
    # strictly ascending at fourth. This pins the corrected flat count.
    data = make_data(4, 6, [4.0, 3.0, 2.0, 1.0])
    rng = np.random.default_rng(11)
    frame = rng.standard_normal((2, 1))
    spec_loss = LossSpec("unregularized", 0.0)
    p = critical_point(CriticalSpec("unregularized", (2,), frame), data, 0.0)
    H = numerical_hessian(spec_loss, p, data)
    mu, vecs = np.linalg.eigh(H)
    band = 1e-4 * np.abs(mu).max()
    zero_idx = np.where(np.abs(mu) < band)[0]
    sig = curvature_signature("unregularized", (2,), 4, 2)
    assert len(zero_idx) == sig.flat == 2 * 1 + 1 * (2 - 1)
    # all machine zeros, not just inside the coarse band
    assert np.abs(mu[zero_idx]).max() <= 1e-8 * np.abs(mu).max()
    x0 = pack_params(p)
    base = loss(spec_loss, p, data)
    quartic_seen = False
    for j in zero_idx:
        v = vecs[:, j]
        d1 = loss(spec_loss, unpack_params(x0 + 0.1 * v, 4, 2), data) - base
        d2 = loss(spec_loss, unpack_params(x0 + 0.2 * v, 4, 2), data) - base
        if abs(d2) > 1e-9:
            # quartic scaling: doubling the displacement multiplies by ~16
            assert d2 > 0
            assert d2 / d1 == pytest.approx(16.0, rel=0.25)
            quartic_seen = True
    assert quartic_seen


def test_pack_unpack_roundtrip():
    rng = np.random.default_rng(12)
    p = LaeParams(rng.standard_normal((2, 5)), rng.standard_normal((5, 2)))
    q = unpack_params(pack_params(p), 5, 2)
    assert np.array_equal(p.W1, q.W1) and np.array_equal(p.W2, q.W2)
