"""Command-line harness: experiment recipes and CSV/figure artifact emission.

Subcommands: train, landscape, sweep, morse, pca, verify. Every run writes
its resolved configuration next to its artifacts; re-running that config
reproduces the CSVs up to the platform's math-library tolerance. The
LAEKIT_OUT environment variable overrides the output root; a flat
`key = value` config file can preset any flag, with flags winning.
"""

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from itertools import combinations
from pathlib import Path

import numpy as np

from . import figures, landscape, model, reports, training, verify
from .data import DataMatrix, load_idx, mean_center, synthetic
from .grassmann import MAX_AMBIENT_DIM, boundary_parity, enumerate_cells
from .model import KINDS, LossSpec
from .spectra import haar_orthogonal
from .suite import run_suite
from .training import OPTIMIZERS, TrainConfig

ENV_OUT = "LAEKIT_OUT"

MAX_LANDSCAPE_CELLS = 20_000


def parse_spectrum(text: str | None, m: int) -> np.ndarray:
    """Parse a spectrum descriptor: 'a..b' (descending integers) or a comma list."""
    if text is None:
        return np.arange(m, 0, -1.0)
    text = text.strip()
    if ".." in text:
        a, _, b = text.partition("..")
        hi, lo = float(a), float(b)
        if hi <= lo:
            raise ValueError(f"spectrum range must descend, got {text!r}")
        return np.arange(hi, lo - 0.5, -1.0)
    values = np.asarray([float(v) for v in text.split(",") if v.strip()], dtype=float)
    if values.size == 0:
        raise ValueError("empty spectrum")
    return values


def parse_lambdas(text: str) -> list[float]:
    values = [float(v) for v in str(text).split(",") if str(v).strip()]
    if not values:
        raise ValueError("empty lambda list")
    return values


def resolve_out(out: str | None, command: str) -> Path:
    root = os.environ.get(ENV_OUT)
    if out is None:
        base = Path(root) if root else Path("runs")
        return base / command
    p = Path(out)
    if root and not p.is_absolute():
        return Path(root) / p
    return p


def _load_input_matrix(path: str) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"input file not found: {p}")
    if p.suffix.lower() == ".csv":
        return np.atleast_2d(np.loadtxt(p, delimiter=",", ndmin=2))
    return load_idx(p)


def _build_data(args) -> DataMatrix:
    if getattr(args, "input", None):
        X = _load_input_matrix(args.input)
        return mean_center(X)
    spectrum = parse_spectrum(args.spectrum, args.m)
    return synthetic(args.m, args.n, spectrum, seed=args.seed)


def _resolved_config(args, command: str, extra: dict | None = None) -> dict:
    skip = {"func", "config"}
    values = {k: v for k, v in vars(args).items() if k not in skip and not callable(v)}
    values["command"] = command
    if extra:
        values.update(extra)
    return values


def _write_shrinkage_csv(path, rows):
    return reports.write_csv(
        path, "shrinkage",
        ["i", "sigma_sq", "tau_sq", "tau_sq_theory", "abs_err"],
        rows,
    )


def cmd_train(args) -> int:
    out = resolve_out(args.out, "train")
    out.mkdir(parents=True, exist_ok=True)
    data = _build_data(args)
    lam = parse_lambdas(args.lam)[0]
    cfg = TrainConfig(
        kind=args.kind,
        lam=lam if args.kind != "unregularized" else 0.0,
        optimizer=args.optimizer,
        learning_rate=args.lr,
        epochs=args.epochs,
        init_scale=args.init_scale,
        seed=args.seed,
        record_every=args.record_every,
    )
    print(f"seed = {args.seed}")
    params, trace = training.train(cfg, data, args.k)
    reports.write_config(out / "config.txt", _resolved_config(args, "train"))
    reports.write_csv(
        out / "trace.csv", "trace",
        ["epoch", "loss", "transpose_gap", "grad_norm"],
        zip(trace.epochs, trace.loss, trace.transpose_gap, trace.grad_norm),
    )
    W_star = params.product()
    align = verify.alignment_report(data, W_star)
    reports.write_matrix_csv(out / "alignment.csv", "alignment", align.block_matrix)
    shrink = verify.shrinkage_points(data, W_star, args.kind, lam, k=args.k)
    _write_shrinkage_csv(
        out / "shrinkage.csv",
        [(i + 1, s, t, th, abs(t - th)) for i, (s, t, th) in enumerate(shrink.points)],
    )
    summary = [
        f"final_loss = {trace.final_loss:.17g}",
        f"final_transpose_gap = {trace.final_transpose_gap:.17g}",
        f"final_grad_norm = {trace.final_grad_norm:.17g}",
        f"epochs_run = {int(trace.epochs[-1])}",
        f"decoder_aligned = {align.decoder_aligned}",
        f"encoder_aligned = {align.encoder_aligned}",
        f"product_asymmetry = {shrink.asymmetry:.17g}",
    ]
    (out / "summary.txt").write_text("\n".join(summary) + "\n")
    if args.figures:
        figures.plot_trace(trace, out / "trace.png", title=f"{args.kind} loss")
        figures.plot_alignment(align.block_matrix, data.m, out / "alignment.png",
                               title=f"{args.kind} loss")
        figures.plot_shrinkage({lam: shrink}, args.kind, out / "shrinkage.png")
    print("\n".join(summary))
    print(f"artifacts in {out}")
    return 0


def _landscape_frame(kind: str, k: int, ell: int, rng) -> np.ndarray:
    if ell == 0:
        return np.zeros((k, 0))
    O1 = haar_orthogonal(k, rng)[:, :ell]
    if kind == "sum":
        return O1
    return O1 @ np.diag(rng.uniform(0.5, 2.0, ell)) @ haar_orthogonal(ell, rng)


def cmd_landscape(args) -> int:
    out = resolve_out(args.out, "landscape")
    out.mkdir(parents=True, exist_ok=True)
    data = _build_data(args)
    lam = parse_lambdas(args.lam)[0]
    lam_eff = 0.0 if args.kind == "unregularized" else lam
    print(f"seed = {args.seed}")
    rank = data.svd.rank
    if args.kind == "sum":
        top = min(rank, landscape.m0(data.svd.s[:rank], lam_eff))
    else:
        top = rank
    spec_loss = LossSpec(args.kind, lam_eff)
    rng = np.random.default_rng(args.seed)
    rows = []
    plot_rows = []
    count = 0
    for ell in range(min(args.k, top) + 1):
        for idx in combinations(range(1, top + 1), ell):
            count += 1
            if count > MAX_LANDSCAPE_CELLS:
                raise ValueError(
                    f"landscape enumeration exceeds {MAX_LANDSCAPE_CELLS} cells; reduce m or k"
                )
            frame = _landscape_frame(args.kind, args.k, ell, rng)
            spec = landscape.CriticalSpec(args.kind, idx, frame)
            p = landscape.critical_point(spec, data, lam_eff)
            value = model.loss(spec_loss, p, data)
            gn = model.grad_norm(spec_loss, p, data)
            sig = landscape.curvature_signature(args.kind, idx, data.m, args.k)
            if 2 * args.k * data.m <= 64:
                H = landscape.numerical_hessian(spec_loss, p, data)
                hsig = verify.hessian_signature(H, zero_band=1e-4)
            else:
                hsig = ("", "", "")
            rows.append((
                args.kind, " ".join(map(str, idx)), ell, value, gn,
                sig.descending, sig.flat, sig.ascending, *hsig,
            ))
            plot_rows.append({"ell": ell, "loss": value, "descending": sig.descending})
    reports.write_config(out / "config.txt", _resolved_config(args, "landscape"))
    reports.write_csv(
        out / "criticals.csv", "criticals",
        ["kind", "index_set", "ell", "loss", "grad_norm",
         "descending", "flat", "ascending",
         "hessian_neg", "hessian_zero", "hessian_pos"],
        rows,
    )
    if args.figures:
        figures.plot_criticals(plot_rows, out / "criticals.png")
    print(f"{len(rows)} critical specs emitted; artifacts in {out}")
    return 0


def _sweep_one(payload) -> tuple[float, list[tuple]]:
    data, k, kind, lam, base = payload
    cfg = TrainConfig(
        kind=kind,
        lam=lam if kind != "unregularized" else 0.0,
        optimizer=base["optimizer"],
        learning_rate=base["lr"],
        epochs=base["epochs"],
        init_scale=base["init_scale"],
        seed=base["seed"],
        record_every=max(1, base["epochs"] // 10),
    )
    params, _ = training.train(cfg, data, k)
    shrink = verify.shrinkage_points(data, params.product(), kind, lam, k=k)
    rows = [
        (lam, i + 1, s, t, th, abs(t - th))
        for i, (s, t, th) in enumerate(shrink.points)
    ]
    return lam, rows


def cmd_sweep(args) -> int:
    out = resolve_out(args.out, "sweep")
    out.mkdir(parents=True, exist_ok=True)
    lams = parse_lambdas(args.lam)
    data = _build_data(args)
    print(f"seed = {args.seed}")
    base = {
        "optimizer": args.optimizer,
        "lr": args.lr,
        "epochs": args.epochs,
        "init_scale": args.init_scale,
        "seed": args.seed,
    }
    payloads = [(data, args.k, args.kind, lam, base) for lam in lams]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_one, payloads))
    else:
        results = [_sweep_one(p) for p in payloads]
    results.sort(key=lambda r: r[0])
    all_rows = [row for _, rows in results for row in rows]
    reports.write_config(out / "config.txt", _resolved_config(args, "sweep"))
    reports.write_csv(
        out / "shrinkage.csv", "shrinkage-sweep",
        ["lam", "i", "sigma_sq", "tau_sq", "tau_sq_theory", "abs_err"],
        all_rows,
    )
    summary_lines = []
    shrink_by_lam = {}
    for lam, rows in results:
        pts = tuple((s, t, th) for _, _, s, t, th, _ in rows)
        rel = max((abs(t - th) / th for _, t, th in pts if th > 0), default=0.0)
        summary_lines.append(f"lam = {lam:g}: max retained relative error = {rel:.4%}")
        shrink_by_lam[lam] = verify.ShrinkageReport(points=pts, asymmetry=0.0)
    (out / "summary.txt").write_text("\n".join(summary_lines) + "\n")
    if args.figures:
        figures.plot_shrinkage(shrink_by_lam, args.kind, out / "shrinkage.png")
    print("\n".join(summary_lines))
    print(f"artifacts in {out}")
    return 0


def cmd_morse(args) -> int:
    out = resolve_out(args.out, "morse")
    if args.m > MAX_AMBIENT_DIM:
        raise ValueError(f"morse: m={args.m} exceeds the guard rail {MAX_AMBIENT_DIM}")
    out.mkdir(parents=True, exist_ok=True)
    n = max(args.n, args.m)
    spectrum = parse_spectrum(args.spectrum, args.m)
    data = synthetic(args.m, n, spectrum, seed=args.seed)
    print(f"seed = {args.seed}")
    cells = enumerate_cells(data, args.k)
    parity = boundary_parity(args.m, args.k)
    reports.write_config(out / "config.txt", _resolved_config(args, "morse"))
    reports.write_csv(
        out / "cells.csv", "cells",
        ["index_set", "morse_index", "critical_value"],
        [(" ".join(map(str, c.index_set)), c.morse_index, c.critical_value) for c in cells],
    )
    lines = [
        f"cells = {len(cells)}",
        f"all_trajectory_counts_even = {parity.all_even}",
        f"per_index_counts = {dict(sorted(parity.index_counts.items()))}",
        f"box_partition_counts = {dict(sorted(parity.box_partition_counts.items()))}",
        f"counts_match = {parity.counts_match}",
    ]
    (out / "parity.txt").write_text("\n".join(lines) + "\n")
    if args.figures:
        figures.plot_cells(cells, out / "cells.png")
    print("\n".join(lines))
    print(f"artifacts in {out}")
    return 0


def cmd_pca(args) -> int:
    out = resolve_out(args.out, "pca")
    out.mkdir(parents=True, exist_ok=True)
    lam = parse_lambdas(args.lam)[0]
    print(f"seed = {args.seed}")
    if args.input:
        X = _load_input_matrix(args.input)
        data = mean_center(X)
        params = training.minibatch_adam(
            data.X, args.k, "sum", lam,
            epochs=args.epochs, batch_size=args.batch_size,
            learning_rate=args.lr if args.lr is not None else 0.05, seed=args.seed,
            anneal=args.anneal,
        )
    else:
        spectrum = parse_spectrum(args.spectrum, args.m)
        data = synthetic(args.m, args.n, spectrum, seed=args.seed)
        lr = args.lr if args.lr is not None else 1.0 / (float(data.svd.s[0]) ** 2 + lam)
        cfg = TrainConfig(
            kind="sum", lam=lam, optimizer=args.optimizer,
            learning_rate=lr, epochs=args.epochs,
            init_scale=args.init_scale, seed=args.seed,
            record_every=max(1, args.epochs // 20),
        )
        params, _ = training.train(cfg, data, args.k)
    recovery = training.recover_pca(params.W2, lam)
    if recovery.n_collapsed:
        print(f"{recovery.n_collapsed} of {args.k} components collapsed "
              f"(decoder singular value at numerical zero; no eigenvalue estimate)")
    reference_u = data.svd.U[:, : args.k]
    reference_eig = np.zeros(args.k)
    avail = min(args.k, len(data.svd.s))
    reference_eig[:avail] = data.svd.s[:avail] ** 2
    cosines = np.abs(np.sum(recovery.directions * reference_u, axis=0))
    rel_err = np.full(args.k, np.nan)
    retained = ~recovery.collapsed & (reference_eig > 0)
    rel_err[retained] = np.abs(recovery.eigenvalues[retained] - reference_eig[retained]) / reference_eig[retained]
    reports.write_config(out / "config.txt", _resolved_config(args, "pca"))
    reports.write_matrix_csv(out / "directions.csv", "directions", recovery.directions)
    reports.write_csv(
        out / "eigenvalues.csv", "eigenvalues",
        ["i", "eigenvalue", "reference_eigenvalue", "rel_err", "abs_cos", "collapsed"],
        [
            (i + 1, recovery.eigenvalues[i], reference_eig[i], rel_err[i],
             cosines[i], bool(recovery.collapsed[i]))
            for i in range(args.k)
        ],
    )
    kept = ~recovery.collapsed
    if kept.any():
        angles = verify.principal_angles(recovery.directions[:, kept], reference_u[:, : int(kept.sum())])
        largest_deg = float(np.degrees(angles[-1]))
    else:
        largest_deg = float("nan")
    lines = [
        f"retained_components = {int(kept.sum())}",
        f"largest_principal_angle_deg = {largest_deg:.6g}",
        f"min_abs_cos_retained = {float(cosines[kept].min()) if kept.any() else float('nan'):.6g}",
        f"max_eigenvalue_rel_err = {float(np.nanmax(rel_err)) if np.any(retained) else float('nan'):.6g}",
    ]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    if args.figures:
        figures.plot_components(recovery.directions, out / "components.png", reference=reference_u)
        figures.plot_eigenvalue_match(recovery.eigenvalues, reference_eig, out / "eigenvalues.png")
    print("\n".join(lines))
    print(f"artifacts in {out}")
    return 0


def cmd_verify(args) -> int:
    out = resolve_out(args.out, "verify")
    out.mkdir(parents=True, exist_ok=True)
    results = run_suite()
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status} {r.name}: {r.detail}")
    text = "\n".join(lines)
    (out / "verify.txt").write_text(text + "\n")
    reports.write_config(out / "config.txt", _resolved_config(args, "verify"))
    print(text)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed; report in {out}")
    return 1 if failed else 0


def _add_common(p: argparse.ArgumentParser, defaults: dict | None = None) -> None:
    d = defaults or {}
    p.add_argument("--m", type=int, default=d.get("m", 20), help="data rows")
    p.add_argument("--n", type=int, default=d.get("n", 20), help="data columns")
    p.add_argument("--k", type=int, default=d.get("k", 10), help="latent dimension")
    p.add_argument("--lambda", dest="lam", default=d.get("lam", "10"),
                   help="regularization weight; comma list for sweep")
    p.add_argument("--kind", choices=KINDS, default=d.get("kind", "sum"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spectrum", default=None,
                   help="'a..b' descending integer range or comma-separated values "
                        "(default m..1)")
    p.add_argument("--out", default=None, help="output directory (default runs/<command>)")
    p.add_argument("--no-figures", dest="figures", action="store_false",
                   help="skip PNG rendering next to the CSVs")
    p.add_argument("--config", default=None,
                   help="flat key = value config file; flags win over it")


def _add_training_flags(p: argparse.ArgumentParser, lr_default=0.05) -> None:
    p.add_argument("--optimizer", choices=OPTIMIZERS, default="adam")
    p.add_argument("--lr", type=float, default=lr_default, help="learning rate")
    p.add_argument("--epochs", type=int, default=4000)
    p.add_argument("--init-scale", dest="init_scale", type=float, default=0.1)
    p.add_argument("--record-every", dest="record_every", type=int, default=10)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="laekit",
        description="Regularized linear autoencoders: training, critical manifolds, "
                    "Morse combinatorics, and PCA recovery.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    table: dict[str, argparse.ArgumentParser] = {}

    p = subs.add_parser("train", help="train one configuration and emit trace/alignment/shrinkage")
    _add_common(p)
    _add_training_flags(p)
    p.add_argument("--input", default=None, help="IDX or CSV data file (mean-centered on load)")
    p.set_defaults(func=cmd_train)
    table["train"] = p

    p = subs.add_parser("landscape", help="enumerate closed-form critical points with signatures")
    _add_common(p, {"m": 4, "n": 6, "k": 2, "lam": "0.5"})
    p.add_argument("--input", default=None, help="IDX or CSV data file")
    p.set_defaults(func=cmd_landscape)
    table["landscape"] = p

    p = subs.add_parser("sweep", help="train across a lambda list and aggregate shrinkage")
    _add_common(p, {"lam": "1,10,100"})
    _add_training_flags(p)
    p.add_argument("--input", default=None, help="IDX or CSV data file")
    p.add_argument("--workers", type=int, default=1, help="process pool size (>1 enables pool)")
    p.set_defaults(func=cmd_sweep)
    table["sweep"] = p

    p = subs.add_parser("morse", help="Morse cells, indices, values, and boundary parity")
    _add_common(p, {"m": 4, "n": 4, "k": 2, "lam": "0"})
    p.set_defaults(func=cmd_morse)
    table["morse"] = p

    p = subs.add_parser("pca", help="train a sum-loss autoencoder and read PCA off the decoder")
    _add_common(p, {"m": 12, "n": 16, "k": 6, "lam": "5"})
    p.add_argument("--optimizer", choices=("gd", "adam"), default="gd")
    p.add_argument("--lr", type=float, default=None,
                   help="learning rate (default: 1/(sigma_1^2 + lambda) for synthetic runs)")
    p.add_argument("--epochs", type=int, default=4000)
    p.add_argument("--init-scale", dest="init_scale", type=float, default=0.1)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=32,
                   help="minibatch size for file inputs")
    p.add_argument("--anneal", action="store_true",
                   help="decay the minibatch learning rate over the second half of training")
    p.add_argument("--input", default=None, help="IDX or CSV data file (mean-centered on load)")
    p.set_defaults(func=cmd_pca)
    table["pca"] = p

    p = subs.add_parser("verify", help="run the oracle suite and report pass/fail per check")
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_verify, figures=False)
    table["verify"] = p

    return parser, table


def _apply_config_file(argv: list[str], table: dict[str, argparse.ArgumentParser]) -> None:
    if "--config" not in argv:
        return
    path = argv[argv.index("--config") + 1]
    values = reports.read_config(path)
    command = next((a for a in argv if a in table), None)
    if command is None:
        return
    sub = table[command]
    dests = {a.dest for a in sub._actions}
    mapped = {}
    for key, val in values.items():
        dest = "lam" if key == "lambda" else key
        if dest in dests:
            mapped[dest] = val
    sub.set_defaults(**mapped)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, table = build_parser()
    try:
        _apply_config_file(argv, table)
    except (OSError, ValueError, IndexError) as exc:
        print(f"error: bad config file: {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ValueError) else 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
