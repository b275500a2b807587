import numpy as np
import pytest

from laekit.data import DataMatrix
from laekit.landscape import CriticalSpec, critical_point, global_minimum
from laekit.model import LaeParams, LossSpec, grad
from laekit.spectra import haar_orthogonal
from laekit.verify import (
    alignment_report,
    fd_grad,
    hessian_signature,
    principal_angles,
    shrinkage_points,
    shrinkage_theory,
    unit_circle_check,
)

SCALAR = DataMatrix.from_array([[2.0]])


def test_fd_grad_scalar_closed_form():
    # oracle: d/dw1 of x^2 (1 - w1 w2)^2 + lam (w1^2 + w2^2), by hand
    w1, w2, lam = 0.3, -0.8, 0.9
    p = LaeParams(np.array([[w1]]), np.array([[w2]]))
    f1, f2 = fd_grad(LossSpec("sum", lam), p, SCALAR)
    want1 = 2.0 * 4.0 * w2 * (w1 * w2 - 1.0) + 2.0 * lam * w1
    want2 = 2.0 * 4.0 * w1 * (w1 * w2 - 1.0) + 2.0 * lam * w2
    assert f1[0, 0] == pytest.approx(want1, abs=1e-8)
    assert f2[0, 0] == pytest.approx(want2, abs=1e-8)


def test_fd_grad_small_at_critical_point(make_data):
    data = make_data(4)
    lam = 0.8
    p = critical_point(global_minimum("sum", data, 2, lam), data, lam)
    f1, f2 = fd_grad(LossSpec("sum", lam), p, data)
    scale = np.linalg.norm(data.gram) + lam
    assert np.sqrt(np.sum(f1**2) + np.sum(f2**2)) <= 1e-6 * scale


def test_fd_grad_matches_analytic_all_kinds(make_data):
    rng = np.random.default_rng(0)
    data = make_data(4)
    for kind in ("unregularized", "product", "sum"):
        spec = LossSpec(kind, 0.0 if kind == "unregularized" else 1.3)
        p = LaeParams(rng.standard_normal((2, 4)), rng.standard_normal((4, 2)))
        a = grad(spec, p, data)
        f = fd_grad(spec, p, data)
        for ai, fi in zip(a, f):
            assert np.allclose(ai, fi, rtol=1e-5, atol=1e-7)


def test_hessian_signature_cases():
    assert hessian_signature(np.eye(4)) == (0, 0, 4)
    assert hessian_signature(np.diag([-1.0, 0.0, 2.0]), zero_band=1e-6) == (1, 1, 1)
    with pytest.raises(ValueError, match="symmetric"):
        hessian_signature(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_alignment_positive_control(make_data):
    data = make_data(6, 8, np.arange(6, 0, -1.0) + 1.0)
    lam = 1.5
    p = critical_point(global_minimum("sum", data, 3, lam, frame_seed=2), data, lam)
    rep = alignment_report(data, p.product())
    assert rep.rank == 3
    assert rep.decoder_aligned and rep.encoder_aligned
    assert rep.data_vs_decoder.diag_min_abs > 1 - 1e-9
    assert np.abs(rep.block_matrix).max() <= 1 + 1e-9


def test_alignment_negative_control(make_data):
    rng = np.random.default_rng(1)
    data = make_data(6, 8, np.arange(6, 0, -1.0) + 1.0)
    G = haar_orthogonal(3, 3) @ np.diag([2.0, 1.0, 0.4]) @ haar_orthogonal(3, 4)
    p = critical_point(CriticalSpec("unregularized", (1, 2, 3), G), data, 0.0)
    rep = alignment_report(data, p.product())
    assert not rep.encoder_aligned  # generic frame mixes the directions
    zero = alignment_report(data, np.zeros((6, 6)))
    assert zero.rank == 0
    assert not zero.decoder_aligned


def test_shrinkage_theory_values():
    assert shrinkage_theory("sum", 400.0, 10.0) == pytest.approx(0.975)
    assert shrinkage_theory("sum", 4.0, 10.0) == 0.0
    assert shrinkage_theory("unregularized", 123.0, 10.0) == 1.0
    assert shrinkage_theory("product", 100.0, 10.0) == pytest.approx(1.0 / 1.1)


def test_shrinkage_points_at_analytic_minimum(make_data):
    data = make_data(5, 7, [5.0, 4.0, 3.0, 2.0, 1.0])
    lam = 6.0  # collapses sigma^2 in {4, 1}
    p = critical_point(global_minimum("sum", data, 3, lam), data, lam)
    rep = shrinkage_points(data, p.product(), "sum", lam, k=3)
    assert rep.asymmetry <= 1e-10
    for i, (s2, tau2, theory) in enumerate(rep.points, start=1):
        if i <= 3 and s2 > lam:
            assert theory == pytest.approx(1.0 - lam / s2)
            assert tau2 == pytest.approx(theory, rel=1e-9)
        else:
            assert theory == 0.0
            assert abs(tau2) <= 1e-9
    assert rep.max_relative_error() <= 1e-9


def test_shrinkage_theory_monotone_in_sigma():
    lam = 7.0
    grid = np.linspace(lam * 1.01, lam * 30, 200)
    for kind in ("product", "sum"):
        vals = [shrinkage_theory(kind, s, lam) for s in grid]
        assert np.all(np.diff(vals) > 0)


def test_unit_circle_sum_minimum(make_data):
    data = make_data(5, 6, np.arange(5, 0, -1.0) + 0.5)
    lam = 0.8
    p = critical_point(global_minimum("sum", data, 2, lam, frame_seed=7), data, lam)
    rep = unit_circle_check(data, p, circle_points=64)
    assert rep.ab_residual < 1e-6
    assert rep.a_orthogonality_residual < 1e-6
    assert rep.b_orthogonality_residual < 1e-6
    assert set(rep.circles) == {"circle", "A", "B", "AB"}
    radii = np.linalg.norm(rep.circles["A"], axis=0)
    assert np.abs(radii - 1.0).max() < 1e-6  # orthogonal map preserves the circle


def test_unit_circle_unregularized_shears(make_data):
    data = make_data(5, 6, np.arange(5, 0, -1.0) + 0.5)
    G = haar_orthogonal(2, 9) @ np.diag([3.0, 0.3]) @ haar_orthogonal(2, 10)
    p = critical_point(CriticalSpec("unregularized", (1, 2), G), data, 0.0)
    rep = unit_circle_check(data, p)
    assert rep.ab_residual < 1e-6
    assert rep.a_orthogonality_residual > 1e-2  # ellipse, not circle


def test_unit_circle_identity_block():
    X = np.diag([2.0, 1.0, 0.5, 0.25])
    data = DataMatrix.from_array(X)
    W1 = np.eye(2, 4)
    W2 = np.eye(4, 2)
    rep = unit_circle_check(data, LaeParams(W1, W2))
    assert rep.ab_residual <= 1e-12
    assert rep.a_orthogonality_residual <= 1e-12
    assert rep.b_orthogonality_residual <= 1e-12


def test_unit_circle_rank_deficient():
    data = DataMatrix.from_array(np.diag([2.0, 1.0]))
    p = LaeParams(np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(ValueError, match="rank"):
        unit_circle_check(data, p)


def test_principal_angles():
    A = np.eye(4)[:, :2]
    assert np.abs(principal_angles(A, A)).max() <= 1e-12
    B = np.eye(4)[:, 2:]
    assert principal_angles(A, B)[-1] == pytest.approx(np.pi / 2)
