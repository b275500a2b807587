"""The self-check oracle suite behind `laekit verify`.

Each check re-derives an expected value from an independent route (finite
differences, Monte Carlo, enumeration, hand algebra) and confronts the
library with it at the documented tolerance. Designed to run in seconds.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import grassmann, landscape, model, training, verify
from .data import synthetic
from .model import KINDS, LaeParams, LossSpec
from .spectra import haar_orthogonal


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _conditioned_frame(k: int, ell: int, orthonormal: bool, rng) -> np.ndarray:
    if ell == 0:
        return np.zeros((k, 0))
    O1 = haar_orthogonal(k, rng)[:, :ell]
    if orthonormal:
        return O1
    return O1 @ np.diag(rng.uniform(0.5, 2.0, ell)) @ haar_orthogonal(ell, rng)


def check_svd_conventions(seed: int = 0) -> CheckResult:
    from .spectra import svd

    rng = np.random.default_rng(seed)
    A = rng.standard_normal((5, 4))
    d = svd(A)
    resid = np.linalg.norm(A - d.reconstruct()) / np.linalg.norm(A)
    descending = bool(np.all(np.diff(d.s) <= 0.0))
    signs = all(d.U[int(np.argmax(np.abs(d.U[:, j]))), j] > 0 for j in range(d.U.shape[1]))
    ok = resid <= 1e-10 and descending and signs
    return CheckResult("svd reconstruction and conventions", ok,
                       f"relative residual {resid:.2e}")


def check_pinv(seed: int = 1) -> CheckResult:
    from .spectra import pinv

    rng = np.random.default_rng(seed)
    G = rng.standard_normal((3, 2))
    P = pinv(G)
    worst = max(
        np.abs(G @ P @ G - G).max(),
        np.abs(P @ G @ P - P).max(),
        np.abs((G @ P) - (G @ P).T).max(),
        np.abs((P @ G) - (P @ G).T).max(),
    )
    scale = max(1.0, float(np.abs(G).max()))
    return CheckResult("pseudoinverse Penrose identities", worst <= 1e-8 * scale,
                       f"worst residual {worst:.2e}")


def check_stationarity(n_specs: int = 60, seed: int = 2) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_specs):
        m = int(rng.integers(3, 7))
        k = int(rng.integers(1, m + 1))
        spectrum = np.sort(rng.uniform(0.5, 5.0, m))[::-1]
        while np.any(np.diff(spectrum) > -1e-3):
            spectrum = np.sort(rng.uniform(0.5, 5.0, m))[::-1]
        data = synthetic(m, m + 2, spectrum, seed=int(rng.integers(1 << 31)))
        kind = KINDS[int(rng.integers(3))]
        lam = float(rng.uniform(0.05, 0.9)) * float(spectrum[-1] ** 2)
        lam_eff = 0.0 if kind == "unregularized" else lam
        ell = int(rng.integers(0, k + 1))
        idx = tuple(sorted(rng.choice(np.arange(1, m + 1), size=ell, replace=False).tolist()))
        frame = _conditioned_frame(k, ell, kind == "sum", rng)
        p = landscape.critical_point(landscape.CriticalSpec(kind, idx, frame), data, lam_eff)
        gn = model.grad_norm(LossSpec(kind, lam_eff), p, data)
        scale = float(np.linalg.norm(data.gram)) + lam_eff
        worst = max(worst, gn / scale)
    return CheckResult("closed-form critical points are stationary", worst <= 1e-8,
                       f"worst gradient norm {worst:.2e} of scale")


def check_fd_gradients(per_kind: int = 10, seed: int = 3) -> CheckResult:
    rng = np.random.default_rng(seed)
    ok = True
    worst = 0.0
    for kind in KINDS:
        for _ in range(per_kind):
            m = int(rng.integers(2, 6))
            k = int(rng.integers(1, m + 1))
            data = synthetic(m, m + 1, np.sort(rng.uniform(0.5, 3.0, m))[::-1], seed=int(rng.integers(1 << 31)))
            p = LaeParams(rng.standard_normal((k, m)), rng.standard_normal((m, k)))
            spec = LossSpec(kind, 0.0 if kind == "unregularized" else float(rng.uniform(0.1, 2.0)))
            a = model.grad(spec, p, data)
            f = verify.fd_grad(spec, p, data)
            for ai, fi in zip(a, f):
                if not np.allclose(ai, fi, rtol=1e-5, atol=1e-7):
                    ok = False
                worst = max(worst, float(np.abs(ai - fi).max()))
    return CheckResult("analytic gradients match finite differences", ok,
                       f"worst absolute deviation {worst:.2e}")


def check_hessian_signatures(seed: int = 4) -> CheckResult:
    rng = np.random.default_rng(seed)
    mismatches = []
    for (m, k) in ((3, 1), (4, 2)):
        data = synthetic(m, m + 2, np.arange(m, 0, -1.0), seed=m)
        lam = 0.5
        for kind in KINDS:
            lam_eff = 0.0 if kind == "unregularized" else lam
            for ell in range(k + 1):
                for idx in combinations(range(1, m + 1), ell):
                    frame = _conditioned_frame(k, ell, kind == "sum", rng)
                    p = landscape.critical_point(landscape.CriticalSpec(kind, idx, frame), data, lam_eff)
                    H = landscape.numerical_hessian(LossSpec(kind, lam_eff), p, data)
                    got = verify.hessian_signature(H, zero_band=1e-4)
                    ana = landscape.curvature_signature(kind, idx, m, k)
                    if got != (ana.descending, ana.flat, ana.ascending):
                        mismatches.append((m, k, kind, idx, got))
    return CheckResult("Hessian signatures match analytic counts", not mismatches,
                       f"{len(mismatches)} mismatches" if mismatches else "exhaustive over (3,1) and (4,2)")


def check_ppca_map(seed: int = 5) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        m, k = 5, 2
        spectrum = np.sort(rng.uniform(1.0, 5.0, m))[::-1]
        while np.any(np.diff(spectrum) > -1e-3):
            spectrum = np.sort(rng.uniform(1.0, 5.0, m))[::-1]
        data = synthetic(m, m, spectrum, seed=int(rng.integers(1 << 31)))
        lam = float(spectrum[-1] ** 2) * 0.5
        ell = int(rng.integers(0, k + 1))
        idx = tuple(sorted(rng.choice(np.arange(1, m + 1), size=ell, replace=False).tolist()))
        frame = _conditioned_frame(k, ell, True, rng)
        p = landscape.critical_point(landscape.CriticalSpec("sum", idx, frame), data, lam)
        got = landscape.ppca_from_decoder(p.W2, data)
        idx0 = np.asarray(idx, dtype=int) - 1
        sig = data.svd.s[idx0]
        want = (data.svd.U[:, idx0] * (sig * np.sqrt(1.0 - lam / sig**2))) @ frame.T
        denom = max(np.linalg.norm(want), 1e-30)
        worst = max(worst, float(np.linalg.norm(got - want)) / denom if ell else float(np.linalg.norm(got)))
    return CheckResult("decoder-to-pPCA map matches closed form", worst <= 1e-9,
                       f"worst relative deviation {worst:.2e}")


def check_morse(seed: int = 6) -> CheckResult:
    data = synthetic(4, 6, [4.0, 3.0, 2.0, 1.0], seed=seed)
    cells = grassmann.enumerate_cells(data, 2)
    multiset = sorted(c.morse_index for c in cells)
    ok = multiset == [0, 1, 2, 2, 3, 4]
    s2 = data.svd.s ** 2
    for c in cells:
        excluded = [i for i in range(1, 5) if i not in c.index_set]
        want = float(sum(s2[i - 1] for i in excluded))
        if abs(c.critical_value - want) > 1e-9 * max(1.0, want):
            ok = False
    parity_ok = all(
        grassmann.boundary_parity(m, k).all_even and grassmann.boundary_parity(m, k).counts_match
        for m in range(2, 7) for k in range(1, m + 1)
    )
    return CheckResult("Grassmannian Morse data", ok and parity_ok,
                       f"index multiset {multiset}, parity {'even' if parity_ok else 'odd!'}")


def check_oja(seed: int = 7) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        m, n = 4, 6
        X = rng.standard_normal((m, n))
        from .data import DataMatrix

        data = DataMatrix.from_array(X)
        w = rng.standard_normal((m, 1))
        alpha = 0.01
        got = training.tied_step(w, data, 0.0, alpha) - w
        ref = np.zeros_like(w)
        for j in range(n):
            x = X[:, j:j + 1]
            y = float((x.T @ w).item())
            ref += alpha * (x * y - w * y**2)
        worst = max(worst, float(np.abs(got - ref).max()))
    return CheckResult("tied rank-1 update equals the streaming-PCA rule", worst <= 1e-12,
                       f"worst entrywise deviation {worst:.2e}")


def check_dae_cae(seed: int = 8, draws: int = 10_000) -> CheckResult:
    rng = np.random.default_rng(seed)
    m, n, k = 3, 5, 2
    data = synthetic(m, n, [3.0, 2.0, 1.0], seed=seed)
    p = LaeParams(rng.standard_normal((k, m)) * 0.4, rng.standard_normal((m, k)) * 0.4)
    s2 = 0.05
    closed = model.dae_expected_loss(p, data, s2)
    W = p.W2 @ p.W1
    samples = np.empty(draws)
    for t in range(draws):
        eps = rng.normal(0.0, np.sqrt(s2), (m, n))
        samples[t] = float(np.sum((data.X - W @ (data.X + eps)) ** 2))
    se = samples.std(ddof=1) / np.sqrt(draws)
    mc_ok = abs(samples.mean() - closed) <= 3.0 * se
    gamma = 1.3
    W1 = rng.standard_normal((k, m))
    cae = model.cae_tied_loss(W1, data, gamma)
    ref = model.loss(LossSpec("sum", gamma / 2.0), LaeParams(W1, W1.T.copy()), data)
    cae_ok = abs(cae - ref) <= 1e-12 * max(1.0, abs(ref))
    return CheckResult("noisy and contractive identities", mc_ok and cae_ok,
                       f"MC gap {abs(samples.mean() - closed):.3g} vs 3*SE {3 * se:.3g}; "
                       f"tied identity gap {abs(cae - ref):.2e}")


def _minimize_scalar(kind: str, x2: float, lam: float, starts: np.ndarray) -> np.ndarray:
    """Minimize one scalar loss from each start: descent burn-in, Newton polish.

    The polish handles the degenerate lam = x2 boundary, where the minimum is
    quartically flat along the diagonal and first-order descent stalls.
    """
    lam_eff = 0.0 if kind == "unregularized" else lam

    def value(a, b):
        r = x2 * (1.0 - a * b) ** 2
        if kind == "product":
            return r + lam_eff * (a * b) ** 2
        if kind == "sum":
            return r + lam_eff * (a**2 + b**2)
        return r

    def gradient(a, b):
        c = a * b - 1.0
        g1 = 2.0 * x2 * b * c
        g2 = 2.0 * x2 * a * c
        if kind == "product":
            g1 += 2.0 * lam_eff * a * b**2
            g2 += 2.0 * lam_eff * b * a**2
        elif kind == "sum":
            g1 += 2.0 * lam_eff * a
            g2 += 2.0 * lam_eff * b
        return g1, g2

    def hessian(a, b):
        h11 = 2.0 * x2 * b**2
        h22 = 2.0 * x2 * a**2
        h12 = 2.0 * x2 * (2.0 * a * b - 1.0)
        if kind == "product":
            h11 += 2.0 * lam_eff * b**2
            h22 += 2.0 * lam_eff * a**2
            h12 += 4.0 * lam_eff * a * b
        elif kind == "sum":
            h11 += 2.0 * lam_eff
            h22 += 2.0 * lam_eff
        return np.array([[h11, h12], [h12, h22]])

    out = np.empty_like(starts)
    for row, (a0, b0) in enumerate(starts):
        w = np.array([a0, b0])
        step = 0.05
        for _ in range(2000):
            g = np.asarray(gradient(*w))
            base = value(*w)
            for _ in range(40):
                cand = w - step * g
                if value(*cand) <= base:
                    break
                step *= 0.5
            w = cand
            step = min(step * 1.2, 0.2)
            if np.abs(g).max() < 1e-10:
                break
        mu = 0.0
        for _ in range(400):
            g = np.asarray(gradient(*w))
            gnorm = float(np.linalg.norm(g))
            if gnorm < 1e-18:
                break
            H = hessian(*w)
            base = value(*w)
            # near the minimum the value saturates at machine epsilon while
            # the gradient still carries signal; accept on either improvement
            slack = 8.0 * np.finfo(float).eps * max(1.0, abs(base))
            accepted = False
            while mu < 1e12:
                try:
                    delta = np.linalg.solve(H + mu * np.eye(2), -g)
                except np.linalg.LinAlgError:
                    delta = None
                if delta is not None:
                    cand = w + delta
                    val = value(*cand)
                    gcand = float(np.linalg.norm(gradient(*cand)))
                    if val < base or (val <= base + slack and gcand < gnorm):
                        w = cand
                        mu /= 4.0
                        accepted = True
                        break
                mu = 10.0 * mu if mu > 0.0 else 1e-8
            if not accepted:
                break
        out[row] = w
    return out


def check_scalar_minima(seed: int = 9, starts: int = 30) -> CheckResult:
    rng = np.random.default_rng(seed)
    x2 = 4.0
    ok = True
    details = []
    pts = rng.uniform(-2.0, 2.0, (starts, 2))
    for lam, expect_origin in ((2.0, False), (4.0, True)):
        ends = _minimize_scalar("sum", x2, lam, pts)
        target = model.scalar_minima("sum", x2, lam)
        dists = np.min(
            [np.linalg.norm(ends - np.asarray(t), axis=1) for t in target.points], axis=0
        )
        if np.max(dists) > 1e-6:
            ok = False
        details.append(f"sum lam={lam:g} worst distance {np.max(dists):.2e}")
    ends = _minimize_scalar("product", x2, 2.0, pts)
    target = model.scalar_minima("product", x2, 2.0)
    resid = np.max(np.abs(ends[:, 0] * ends[:, 1] - target.product_value))
    if resid > 1e-6:
        ok = False
    details.append(f"product constraint residual {resid:.2e}")
    return CheckResult("scalar landscapes: descent recovers closed-form minima", ok,
                       "; ".join(details))


def check_alignment_controls(seed: int = 10) -> CheckResult:
    rng = np.random.default_rng(seed)
    m, k = 6, 3
    data = synthetic(m, m + 2, np.arange(m, 0, -1.0) + 1.0, seed=seed)
    lam = 1.5
    spec = landscape.global_minimum("sum", data, k, lam, frame_seed=1)
    p = landscape.critical_point(spec, data, lam)
    pos = verify.alignment_report(data, p.W2 @ p.W1)
    skew = _conditioned_frame(k, k, False, rng)
    p_neg = landscape.critical_point(
        landscape.CriticalSpec("unregularized", (1, 2, 3), skew), data, 0.0
    )
    neg = verify.alignment_report(data, p_neg.W2 @ p_neg.W1)
    ok = pos.decoder_aligned and pos.encoder_aligned and not neg.encoder_aligned
    return CheckResult("alignment diagnostics (positive and negative controls)", ok,
                       f"positive diag min {pos.data_vs_decoder.diag_min_abs:.4f}, "
                       f"negative aligned={neg.encoder_aligned}")


def check_unit_circle(seed: int = 11) -> CheckResult:
    rng = np.random.default_rng(seed)
    m, k = 5, 2
    data = synthetic(m, m + 1, np.arange(m, 0, -1.0) + 0.5, seed=seed)
    lam = 0.8
    p = landscape.critical_point(landscape.global_minimum("sum", data, k, lam, frame_seed=2), data, lam)
    good = verify.unit_circle_check(data, p)
    skew = _conditioned_frame(k, k, False, rng)
    skew = skew @ np.diag([3.0, 0.25])  # strongly non-orthogonal frame
    p_neg = landscape.critical_point(landscape.CriticalSpec("unregularized", (1, 2), skew), data, 0.0)
    bad = verify.unit_circle_check(data, p_neg)
    ok = (
        good.ab_residual < 1e-6
        and good.a_orthogonality_residual < 1e-6
        and good.b_orthogonality_residual < 1e-6
        and bad.ab_residual < 1e-6
        and bad.a_orthogonality_residual > 1e-2
    )
    return CheckResult("latent maps: orthogonal for sum, sheared without regularization", ok,
                       f"sum residuals ({good.ab_residual:.1e}, {good.a_orthogonality_residual:.1e}); "
                       f"unregularized shear {bad.a_orthogonality_residual:.2e}")


def check_transpose_dynamics(seed: int = 12) -> CheckResult:
    data = synthetic(8, 8, np.arange(8, 0, -1.0), seed=seed)
    gaps = {}
    for kind in KINDS:
        cfg = training.TrainConfig(kind=kind, lam=4.0 if kind != "unregularized" else 0.0,
                                   optimizer="adam", learning_rate=0.05, epochs=1500,
                                   seed=seed, record_every=50)
        _, trace = training.train(cfg, data, k=4)
        gaps[kind] = trace.final_transpose_gap
    ok = gaps["sum"] < 1e-4 and gaps["unregularized"] > 1e-2 and gaps["product"] > 1e-2
    return CheckResult("only the sum loss ties encoder and decoder", ok,
                       ", ".join(f"{k}: {v:.2e}" for k, v in gaps.items()))


ALL_CHECKS = (
    check_svd_conventions,
    check_pinv,
    check_stationarity,
    check_fd_gradients,
    check_hessian_signatures,
    check_ppca_map,
    check_morse,
    check_oja,
    check_dae_cae,
    check_scalar_minima,
    check_alignment_controls,
    check_unit_circle,
    check_transpose_dynamics,
)


def run_suite() -> list[CheckResult]:
    return [check() for check in ALL_CHECKS]
