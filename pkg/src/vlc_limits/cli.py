"""Command-line front end: source ingestion, grid sweeps, CSV/JSON emission,
Monte Carlo orchestration, and figure-data bundles.

Exit codes: 0 success; 1 usage error or malformed input; 2 bound-ordering
violation in computed rows. A violation means an implementation bug, not
bad data, so it is a hard failure by design.

Output is deterministic for a fixed (config, seed, VLC_THREADS): rows are
assembled in grid order regardless of worker completion order, and every
float is printed with 12 significant digits. The header line embeds the
tool version and a digest of the canonicalized run configuration.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import cutoff as _cutoff
from . import erokhin as _erokhin
from . import iidlimits as _iid
from . import lossy as _lossy
from . import optcode as _optcode
from .errors import (
    DpStateCapExceeded,
    Infeasible,
    OutOfRange,
    ScaleExceeded,
    VlcLimitsError,
)
from .source import LOG2E, Pmf, ProductSource, binary_entropy

_SLACK = 1e-9


class UsageError(Exception):
    """Bad flags or malformed input files; exits with status 1."""


class BoundViolation(Exception):
    """An emitted row failed its bound ordering; exits with status 2."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; 2 is reserved for bound
    # violations here, so parse failures are routed to exit 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


# ---------------------------------------------------------------------------
# shared plumbing


def parse_grid(text: str, *, integer: bool = False) -> list:
    """Parse 'start:stop[:step]' (inclusive endpoints) or a single value."""
    parts = text.split(":")
    if len(parts) > 3:
        raise UsageError(f"bad grid {text!r}: use start:stop[:step]")
    try:
        nums = [int(x) if integer else float(x) for x in parts]
    except ValueError:
        kind = "an integer" if integer else "a number"
        raise UsageError(f"bad grid {text!r}: every part must be {kind}")
    if len(nums) == 1:
        return nums
    start, stop = nums[0], nums[1]
    if integer:
        step = nums[2] if len(nums) == 3 else 1
    else:
        if len(nums) < 3:
            raise UsageError(f"bad grid {text!r}: non-integer grids need a step")
        step = nums[2]
    if step <= 0 or stop < start:
        raise UsageError(f"bad grid {text!r}: need stop >= start and step > 0")
    if integer:
        return list(range(start, stop + 1, step))
    n = int(math.floor((stop - start) / step + 1e-9))
    # round away accumulation drift so grid values are the obvious decimals
    return [round(start + i * step, 12) for i in range(n + 1)]


def _load_json_object(path: str, what: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise UsageError(f"{what} file {path!r}: {e.strerror or e}")
    except json.JSONDecodeError as e:
        raise UsageError(f"{what} file {path!r} is not valid JSON: {e}")
    if not isinstance(doc, dict):
        raise UsageError(f"{what} file {path!r}: top level must be a JSON object")
    return doc


def load_source(args) -> Pmf:
    bern = getattr(args, "bernoulli", None)
    path = getattr(args, "source", None)
    if bern is not None and path:
        raise UsageError("give --source or --bernoulli, not both")
    if bern is not None:
        if not 0.0 < bern < 1.0:
            raise UsageError("--bernoulli needs 0 < p < 1")
        return Pmf([1.0 - bern, bern], labels=["0", "1"])
    if not path:
        raise UsageError("a source is required: --source FILE or --bernoulli P")
    doc = _load_json_object(path, "source")
    if "probs" not in doc:
        raise UsageError(f"source file {path!r}: missing field 'probs'")
    probs = doc["probs"]
    if (
        not isinstance(probs, list)
        or not probs
        or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in probs
        )
    ):
        raise UsageError(
            f"source file {path!r}: field 'probs' must be a non-empty list of numbers"
        )
    labels = doc.get("labels")
    if labels is not None and (
        not isinstance(labels, list) or len(labels) != len(probs)
    ):
        raise UsageError(
            f"source file {path!r}: field 'labels' must be a list matching 'probs'"
        )
    try:
        return Pmf(probs, labels=labels)
    except ValueError as e:
        raise UsageError(f"source file {path!r}: field 'probs': {e}")


def load_distortion(args) -> _lossy.DistortionSpec:
    ham = getattr(args, "hamming", None)
    path = getattr(args, "distortion", None)
    if ham is not None and path:
        raise UsageError("give --distortion or --hamming, not both")
    if ham is not None:
        if ham < 2:
            raise UsageError("--hamming needs an alphabet size >= 2")
        return _lossy.hamming(ham)
    if not path:
        raise UsageError("a distortion is required: --distortion FILE or --hamming N")
    doc = _load_json_object(path, "distortion")
    if "matrix" not in doc:
        raise UsageError(f"distortion file {path!r}: missing field 'matrix'")
    try:
        return _lossy.DistortionSpec(np.asarray(doc["matrix"], dtype=np.float64))
    except (ValueError, TypeError) as e:
        raise UsageError(f"distortion file {path!r}: field 'matrix': {e}")


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def fmt_cell(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    v = float(x)
    if not math.isfinite(v):
        raise AssertionError("non-finite cell; infeasible rows must be omitted")
    return format(v, ".12g")


def write_text(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)


def emit_table(columns, rows, cfg, out, out_format, notes=()) -> None:
    digest = config_hash(cfg)
    if out_format == "json":
        doc = {
            "tool": "vlc-limits",
            "version": __version__,
            "config_hash": digest,
            "columns": list(columns),
            "rows": [
                [int(c) if isinstance(c, (int, np.integer)) else float(c) for c in row]
                for row in rows
            ],
            "notes": list(notes),
        }
        write_text(json.dumps(doc, indent=2) + "\n", out)
        return
    lines = [f"# vlc-limits {__version__} config={digest}", ",".join(columns)]
    lines.extend(",".join(fmt_cell(c) for c in row) for row in rows)
    lines.extend(f"# note: {n}" for n in notes)
    write_text("\n".join(lines) + "\n", out)


def _resolve_out(args, default_format: str = "csv") -> tuple[str, str]:
    out = args.out
    fmt = getattr(args, "format", None)
    if out in ("csv", "json"):
        # a bare format name as the destination means stdout in that format
        fmt = fmt or out
        out = "-"
    return out, (fmt or default_format)


def thread_count() -> int:
    raw = os.environ.get("VLC_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError("VLC_THREADS must be an integer")
    if n < 1:
        raise UsageError("VLC_THREADS must be >= 1")
    return n


def map_in_order(fn, grid):
    """Apply fn across grid points, assembling results in grid order."""
    workers = min(thread_count(), len(grid))
    if workers <= 1:
        return [fn(g) for g in grid]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, grid))


def _check(lo: float, hi: float, name: str, ctx: str) -> None:
    if lo > hi + _SLACK:
        raise BoundViolation(f"{name} fails at {ctx}: {lo!r} > {hi!r}")


def _pmf_config(base: Pmf) -> list[float]:
    return [float(x) for x in base.probs]


# ---------------------------------------------------------------------------
# commands


def cmd_lstar(args) -> int:
    base = load_source(args)
    eps = float(args.eps)
    code = _optcode.build_code(base, eps)
    L = code.avg_length
    q0 = float(np.max(base.probs))
    if eps < 1.0 - q0:
        t2 = _optcode.theorem2_bounds(base, eps)
        t3 = _erokhin.theorem3_bounds(base, eps)
        bounds = {
            "t2_lower": t2[0],
            "t2_upper": t2[1],
            "t3_lower": t3[0],
            "t3_upper": t3[1],
            "psi_lower": t3[2],
        }
    else:
        # the optimum is exactly 0 in this regime and the sandwich
        # theorems degenerate to the zero bound
        bounds = dict.fromkeys(
            ("t2_lower", "t2_upper", "t3_lower", "t3_upper", "psi_lower"), 0.0
        )
    ctx = f"eps={eps}"
    _check(bounds["t2_lower"], L, "t2_lower <= L_star", ctx)
    _check(L, bounds["t2_upper"], "L_star <= t2_upper", ctx)
    _check(bounds["t3_lower"], L, "t3_lower <= L_star", ctx)
    _check(L, bounds["t3_upper"], "L_star <= t3_upper", ctx)
    _check(bounds["psi_lower"], L, "psi_lower <= L_star", ctx)

    cfg = {
        "command": "lstar",
        "probs": _pmf_config(base),
        "eps": eps,
        "deterministic": bool(args.deterministic),
        "mc": int(args.mc or 0),
        "seed": int(args.seed),
    }
    doc = {
        "tool": "vlc-limits",
        "version": __version__,
        "config_hash": config_hash(cfg),
        "epsilon": eps,
        "L_star": L,
        "M": code.M,
        "eta": code.eta,
        "alpha": code.alpha,
        "bounds": bounds,
    }
    if args.deterministic:
        ldet = _optcode.deterministic_length(base, eps)
        _check(L, ldet, "L_star <= L_det", ctx)
        doc["L_det"] = ldet
    if args.mc:
        if args.mc < 1:
            raise UsageError("--mc needs a positive sample count")
        doc["mc"] = _optcode.mc_validate(code, base, int(args.mc), int(args.seed))
    out = "-" if args.out in ("json", "csv") else args.out
    write_text(json.dumps(doc, indent=2) + "\n", out)
    return 0


def cmd_erokhin(args) -> int:
    base = load_source(args)
    grid = parse_grid(args.eps_grid)
    if any(not 0.0 <= e <= 1.0 for e in grid):
        raise UsageError("--eps-grid values must lie in [0, 1]")
    q0 = float(np.max(base.probs))

    def row(eps):
        h = _erokhin.erokhin_exact(base, eps).value
        if eps < 1.0 - q0:
            t1l, t1u = _erokhin.theorem1_bounds(base, eps)
            psil = _erokhin.psi_inv(h)
        else:
            # H is exactly 0 here, so 0 is a valid two-sided bound
            t1l = t1u = psil = 0.0
        return [eps, h, t1l, t1u, psil]

    rows = map_in_order(row, grid)
    for eps, h, t1l, t1u, psil in rows:
        ctx = f"eps={eps}"
        _check(t1l, h, "T1_lower <= H_exact", ctx)
        _check(h, t1u, "H_exact <= T1_upper", ctx)
        _check(psil, h, "psi_lower <= H_exact", ctx)
    out, fmt = _resolve_out(args)
    cfg = {"command": "erokhin", "probs": _pmf_config(base), "eps_grid": grid}
    emit_table(
        ["eps", "H_exact", "T1_lower", "T1_upper", "psi_lower"],
        rows, cfg, out, fmt,
    )
    return 0


_CURVE_COLUMNS = ("exact", "approx", "t2lower", "t2upper")


def cmd_curve(args) -> int:
    base = load_source(args)
    eps = float(args.eps)
    ks = parse_grid(args.k, integer=True)
    if ks[0] < 1:
        raise UsageError("--k values must be >= 1")
    cols = [c.strip() for c in args.columns.split(",") if c.strip()]
    if not cols:
        raise UsageError("--columns must name at least one column")
    for c in cols:
        if c not in _CURVE_COLUMNS:
            raise UsageError(
                f"unknown column {c!r}; choose from {', '.join(_CURVE_COLUMNS)}"
            )
    mode = args.remainder_mode
    if mode == "auto":
        binary_skewed = len(base) == 2 and float(np.min(base.probs)) < 0.5
        mode = "binary_refined" if binary_skewed else "none"
    q0 = float(np.max(base.probs))

    def row(k):
        src = ProductSource(base, k)
        cells = {"k": k}
        if "exact" in cols:
            cells["exact"] = _iid.lstar_exact(src, eps)
        if "approx" in cols:
            cells["approx"] = _iid.gaussian_approx(
                base, k, eps, remainder_mode=mode, theta_sign=args.theta_sign
            ).value
        if "t2lower" in cols or "t2upper" in cols:
            if eps < 1.0 - q0**k:
                t2l, t2u = _iid.theorem2_bounds_block(src, eps)
            else:
                t2l = t2u = 0.0
            cells["t2lower"] = t2l
            cells["t2upper"] = t2u
        return cells

    results = map_in_order(row, ks)
    for cells in results:
        if "exact" in cells:
            ctx = f"k={cells['k']}"
            if "t2lower" in cells:
                _check(cells["t2lower"], cells["exact"], "t2lower <= exact", ctx)
                _check(cells["exact"], cells["t2upper"], "exact <= t2upper", ctx)
    columns = ["k"] + cols
    rows = [[cells[c] for c in columns] for cells in results]
    out, fmt = _resolve_out(args)
    cfg = {
        "command": "curve",
        "probs": _pmf_config(base),
        "eps": eps,
        "k": ks,
        "columns": cols,
        "remainder_mode": mode,
        "theta_sign": int(args.theta_sign),
    }
    emit_table(columns, rows, cfg, out, fmt)
    return 0


def _chained_length_lower(x: float) -> float:
    """Lower bound on average length from a lower bound x on the excess-
    constrained information. Monotonicity of t - log2(t+1) - log2 e above
    its positive root keeps the chain valid; below it the value is
    negative anyway and clamps to 0."""
    if x <= 0.0:
        return 0.0
    return max(0.0, x - math.log2(x + 1.0) - LOG2E)


def cmd_lossy(args) -> int:
    base = load_source(args)
    dist = load_distortion(args)
    d = float(args.d)
    eps = float(args.eps)
    ks = parse_grid(args.k, integer=True)
    if ks[0] < 1:
        raise UsageError("--k values must be >= 1")
    try:
        sol = _lossy.rd_solve(base, dist, d)
    except OutOfRange as e:
        raise UsageError(f"--d {d}: {e}")
    exp = _lossy.tilted_cutoff_expansion(base, dist, d, eps, ks)
    out_q = sol.output_dist
    ej_per_letter = sol.rate + sol.slope_lambda * d  # E[J] in bits, one letter

    def row(ik):
        i, k = ik
        exact = float(exp["exact"][i])
        main = float(exp["main"][i])
        try:
            rp = _lossy.rplus(ProductSource(base, k), dist, d, eps, out_q)
        except (ScaleExceeded, DpStateCapExceeded, Infeasible) as e:
            return ("omit", k, str(e))
        x = (
            exact
            - math.log2(k * ej_per_letter + 1.0)
            - LOG2E
            - binary_entropy(eps)
        )
        t6l = _chained_length_lower(x)
        return ("row", [k, sol.rate, exact, main, t6l, rp])

    results = map_in_order(row, list(enumerate(ks)))
    rows, notes = [], []
    for res in results:
        if res[0] == "omit":
            notes.append(f"omitted k={res[1]}: {res[2]}")
        else:
            rows.append(res[1])
    for k, _rate, exact, _main, t6l, rp in rows:
        ctx = f"k={k}"
        _check(t6l, rp, "t6_lower <= rplus", ctx)
        _check(exact, rp, "tilted_cutoff <= rplus", ctx)
    out, fmt = _resolve_out(args)
    cfg = {
        "command": "lossy",
        "probs": _pmf_config(base),
        "matrix": [[float(x) for x in r] for r in dist.matrix],
        "d": d,
        "eps": eps,
        "k": ks,
    }
    emit_table(
        ["k", "rd_rate", "tilted_cutoff", "main_term", "t6_lower", "rplus"],
        rows, cfg, out, fmt, notes,
    )
    return 0


# ---------------------------------------------------------------------------
# figure bundles: fixed parameters so one command reproduces each data set


def cmd_figures(args) -> int:
    which = args.which
    out, fmt = _resolve_out(args)
    base = Pmf([0.89, 0.11], labels=["0", "1"])

    if which == "fig1":
        eps = 0.1
        ks = list(range(1, 17))

        def row1(k):
            src = ProductSource(base, k)
            h = _iid.erokhin_block_exact(src, eps).value
            t1l, t1u = _iid.theorem1_bounds_block(src, eps)
            return [k, h, t1l, t1u]

        rows = map_in_order(row1, ks)
        for k, h, t1l, t1u in rows:
            _check(t1l, h, "T1_lower <= H_exact", f"k={k}")
            _check(h, t1u, "H_exact <= T1_upper", f"k={k}")
        cfg = {"command": "figures", "which": "fig1", "bernoulli": 0.11,
               "eps": eps, "k": ks}
        emit_table(["k", "H_exact", "T1_lower", "T1_upper"], rows, cfg, out, fmt)
        return 0

    if which == "fig2":
        k = 100
        lengths, masses = _iid.length_class_pmf(ProductSource(base, k))
        rows = [[int(j), j / k, m] for j, m in zip(lengths, masses)]
        cfg = {"command": "figures", "which": "fig2", "bernoulli": 0.11, "k": k}
        emit_table(["length", "rate", "mass"], rows, cfg, out, fmt)
        return 0

    if which == "fig3":
        ks = list(range(1, 201))
        rows = []
        for eps in (1e-4, 0.1):

            def row3(k, eps=eps):
                L = _iid.lstar_exact(ProductSource(base, k), eps)
                approx = _iid.gaussian_approx(
                    base, k, eps, remainder_mode="binary_refined", theta_sign=-1
                ).value
                return [eps, k, L / k, approx / k]

            rows.extend(map_in_order(row3, ks))
        cfg = {"command": "figures", "which": "fig3", "bernoulli": 0.11,
               "eps": [1e-4, 0.1], "k": ks}
        emit_table(["eps", "k", "exact", "approx"], rows, cfg, out, fmt)
        return 0

    # fig4: per-symbol exact rate with its cutoff-information sandwich
    eps = 0.1
    ks = list(range(1, 201))

    def row4(k):
        src = ProductSource(base, k)
        L = _iid.lstar_exact(src, eps)
        t2l, t2u = _iid.theorem2_bounds_block(src, eps)
        return [k, L / k, t2l / k, t2u / k]

    rows = map_in_order(row4, ks)
    for k, rate, t2l, t2u in rows:
        _check(t2l, rate, "t2_lower <= exact", f"k={k}")
        _check(rate, t2u, "exact <= t2_upper", f"k={k}")
    cfg = {"command": "figures", "which": "fig4", "bernoulli": 0.11,
           "eps": eps, "k": ks}
    emit_table(["k", "exact", "t2_lower", "t2_upper"], rows, cfg, out, fmt)
    return 0


# ---------------------------------------------------------------------------
# self-test suite


def _validation_checks(quick: bool):
    rng = np.random.default_rng(20250816)

    def equiprobable_erokhin():
        sizes = (2, 16) if quick else (2, 4, 16, 256)
        for m in sizes:
            for eps in (0.0, 0.1, 0.3):
                if eps >= 1.0 - 1.0 / m:
                    continue
                got = _erokhin.erokhin_exact(Pmf(np.full(m, 1.0 / m)), eps).value
                want = math.log2(m) - eps * math.log2(m - 1) - binary_entropy(eps)
                if abs(got - want) > 1e-9:
                    return f"M={m} eps={eps}: {got!r} vs closed form {want!r}"

    def cutoff_variational():
        for _ in range(3 if quick else 10):
            v = rng.dirichlet(np.ones(6))
            p = Pmf(v / v.sum())
            for eps in (0.05, 0.2, 0.5):
                a = _cutoff.solve_cutoff(p.info, p.probs, eps).expectation
                b = _cutoff.cutoff_expectation_variational(p.info, p.probs, eps)
                if abs(a - b) > 1e-10:
                    return f"eps={eps}: closed {a!r} vs variational {b!r}"

    def block_matches_flat():
        base = Pmf([0.7, 0.3])
        for k in (2, 4) if quick else (2, 4, 6):
            flat = base.probs
            for _ in range(k - 1):
                flat = np.kron(flat, base.probs)
            for eps in (0.0, 0.1):
                a = _iid.lstar_exact(ProductSource(base, k), eps)
                b = _optcode.build_code(Pmf(flat), eps).avg_length
                if abs(a - b) > 1e-9:
                    return f"k={k} eps={eps}: block {a!r} vs flat {b!r}"

    def sandwich_orderings():
        pmfs = [Pmf([0.89, 0.11]), Pmf([0.4, 0.3, 0.2, 0.1])]
        if not quick:
            for _ in range(3):
                v = rng.dirichlet(np.ones(5))
                pmfs.append(Pmf(v / v.sum()))
        for p in pmfs:
            q0 = float(np.max(p.probs))
            for eps in (0.01, 0.05, 0.09):
                if eps >= 1.0 - q0:
                    continue
                L = _optcode.build_code(p, eps).avg_length
                h = _erokhin.erokhin_exact(p, eps).value
                t1l, t1u = _erokhin.theorem1_bounds(p, eps)
                t2l, t2u = _optcode.theorem2_bounds(p, eps)
                t3l, t3u, psil = _erokhin.theorem3_bounds(p, eps)
                pairs = [
                    (t1l, h, "t1_lower <= H"),
                    (h, t1u, "H <= t1_upper"),
                    (t2l, L, "t2_lower <= L"),
                    (L, t2u, "L <= t2_upper"),
                    (t3l, L, "t3_lower <= L"),
                    (L, t3u, "L <= t3_upper"),
                    (psil, L, "psi_inv(H) <= L"),
                ]
                for lo, hi, name in pairs:
                    if lo > hi + _SLACK:
                        return f"{name} at eps={eps}: {lo!r} > {hi!r}"

    def rd_binary_closed_form():
        p, d = 0.25, 0.05
        sol = _lossy.rd_solve(Pmf([1 - p, p]), _lossy.hamming(2), d)
        want = binary_entropy(p) - binary_entropy(d)
        if abs(sol.rate - want) > 1e-6:
            return f"rate {sol.rate!r} vs h(p)-h(d) {want!r}"
        if sol.csiszar_residual > 1e-7:
            return f"multiplier residual {sol.csiszar_residual!r}"

    def excess_matches_erokhin():
        p = Pmf([0.4, 0.3, 0.2, 0.1])
        for eps in (0.1, 0.25):
            a = _lossy.rd_excess_solve(p, _lossy.hamming(4), 0.0, eps)
            b = _erokhin.erokhin_exact(p, eps).value
            if abs(a - b) > 1e-6:
                return f"eps={eps}: excess solve {a!r} vs {b!r}"

    def rplus_lossless_identity():
        p = Pmf([0.4, 0.3, 0.2, 0.1])
        for eps in (0.1, 0.25):
            a = _lossy.rplus(ProductSource(p, 1), _lossy.hamming(4), 0.0, eps, p.probs)
            b = _cutoff.solve_cutoff(p.info, p.probs, eps).expectation
            if abs(a - b) > 1e-9:
                return f"eps={eps}: ball cutoff {a!r} vs info cutoff {b!r}"

    def lossy_ladder():
        base = Pmf([0.89, 0.11])
        dist = _lossy.hamming(2)
        d, eps = 0.05, 0.1
        sol = _lossy.rd_solve(base, dist, d)
        ks = [1, 2] if quick else [1, 2, 3]
        exp = _lossy.tilted_cutoff_expansion(base, dist, d, eps, ks)
        for i, k in enumerate(exp["k"]):
            k = int(k)
            rp = _lossy.rplus(ProductSource(base, k), dist, d, eps, sol.output_dist)
            exact = float(exp["exact"][i])
            x = (
                exact
                - math.log2(k * (sol.rate + sol.slope_lambda * d) + 1.0)
                - LOG2E
                - binary_entropy(eps)
            )
            t6l = _chained_length_lower(x)
            if t6l > rp + _SLACK:
                return f"k={k}: chained lower {t6l!r} above ball cutoff {rp!r}"
            if exact > rp + _SLACK:
                return f"k={k}: tilted cutoff {exact!r} above ball cutoff {rp!r}"

    def mc_closure():
        p = Pmf(np.full(4, 0.25))
        code = _optcode.build_code(p, 0.25)
        n = 100_000 if quick else 1_000_000
        rep = _optcode.mc_validate(code, p, n, seed=0)
        srt = p.sorted_probs
        cum = np.cumsum(srt)
        lo = 1 << code.eta
        hi = min((1 << (code.eta + 1)) - 1, srt.size)
        p_gt = max(0.0, 1.0 - float(cum[hi - 1]))
        p_eq = float(cum[hi - 1]) - (float(cum[lo - 2]) if lo >= 2 else 0.0)
        # erased rank-1 outcomes still decode correctly via the empty string
        exact_err = p_gt + code.alpha * p_eq
        if code.eta == 0:
            exact_err -= code.alpha * float(srt[0])
        if abs(rep["emp_error"] - exact_err) > rep["ci3_error"]:
            return (
                f"error {rep['emp_error']!r} vs exact {exact_err!r} "
                f"outside 3 sigma {rep['ci3_error']!r}"
            )
        if abs(rep["emp_avg_len"] - code.avg_length) > rep["ci3_avg_len"]:
            return (
                f"length {rep['emp_avg_len']!r} vs exact {code.avg_length!r} "
                f"outside 3 sigma {rep['ci3_avg_len']!r}"
            )
        if _optcode.mc_validate(code, p, n, seed=0) != rep:
            return "report not bit-identical across reruns"

    def dispersion_trend():
        grid = (1e-2, 1e-4, 1e-6) if quick else (1e-2, 1e-4, 1e-6, 1e-8)
        r = _iid.dispersion_smalleps_check(grid)
        if not np.all(np.diff(r) > 0):
            return f"ratios not monotone: {r.tolist()!r}"
        if not quick and abs(float(r[-1]) - 1.0) >= 0.15:
            return f"tail ratio {float(r[-1])!r} not within 0.15 of 1"

    return [
        ("equiprobable-erokhin", equiprobable_erokhin),
        ("cutoff-variational", cutoff_variational),
        ("block-matches-flat", block_matches_flat),
        ("sandwich-orderings", sandwich_orderings),
        ("rd-binary-closed-form", rd_binary_closed_form),
        ("excess-matches-erokhin", excess_matches_erokhin),
        ("rplus-lossless-identity", rplus_lossless_identity),
        ("lossy-ladder", lossy_ladder),
        ("mc-closure", mc_closure),
        ("dispersion-trend", dispersion_trend),
    ]


def cmd_validate(args) -> int:
    failures = 0
    for name, fn in _validation_checks(bool(args.quick)):
        try:
            detail = fn()
        except Exception as e:  # a crashed check is a failed check
            detail = f"raised {type(e).__name__}: {e}"
        if detail:
            failures += 1
            print(f"FAIL {name}: {detail}")
        else:
            print(f"ok {name}")
    if failures:
        print(f"{failures} check(s) failed")
        return 2
    print("all checks passed")
    return 0


# ---------------------------------------------------------------------------
# parser wiring


def _add_source_flags(sp) -> None:
    sp.add_argument(
        "--source", metavar="FILE",
        help="JSON source file with field 'probs' (optional 'labels')",
    )
    sp.add_argument(
        "--bernoulli", type=float, metavar="P",
        help="two-symbol source with P[second symbol] = P",
    )


def _add_out_flags(sp) -> None:
    sp.add_argument(
        "--out", default="-", metavar="PATH",
        help="output path; '-' streams to stdout (default)",
    )
    sp.add_argument("--format", choices=("csv", "json"), help="output format")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="vlc-limits",
        description=(
            "Exact values, bounds, and approximations for the minimum "
            "average length of variable-length coding with an error budget."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"vlc-limits {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("lstar", help="single-shot optimal average length, with bounds")
    _add_source_flags(p)
    p.add_argument("--eps", type=float, required=True, help="error budget in [0, 1]")
    p.add_argument(
        "--deterministic", action="store_true",
        help="also report the best deterministic-code length",
    )
    p.add_argument("--mc", type=int, metavar="N", help="simulate N draws of the code")
    p.add_argument("--seed", type=int, default=0, help="simulation seed (default 0)")
    p.add_argument("--out", default="-", metavar="PATH")
    p.set_defaults(func=cmd_lstar)

    p = sub.add_parser("erokhin", help="minimum mutual information over an eps grid")
    _add_source_flags(p)
    p.add_argument("--eps-grid", required=True, metavar="A:B:STEP")
    _add_out_flags(p)
    p.set_defaults(func=cmd_erokhin)

    p = sub.add_parser("curve", help="blocklength sweep: exact, approximation, bounds")
    _add_source_flags(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--k", required=True, metavar="A:B[:STEP]")
    p.add_argument(
        "--columns", default="exact,approx,t2lower,t2upper",
        help="comma-separated subset of exact,approx,t2lower,t2upper",
    )
    p.add_argument(
        "--remainder-mode", choices=("auto", "none", "binary_refined"),
        default="auto", help="remainder term for the approx column",
    )
    p.add_argument(
        "--theta-sign", type=int, choices=(-1, 1), default=-1,
        help="sign of the (log2 k)/2 remainder term (default -1)",
    )
    _add_out_flags(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("lossy", help="distortion-tolerant sweep over blocklengths")
    _add_source_flags(p)
    p.add_argument("--distortion", metavar="FILE", help="JSON file with field 'matrix'")
    p.add_argument(
        "--hamming", type=int, metavar="N",
        help="Hamming distortion on an N-symbol alphabet",
    )
    p.add_argument("--d", type=float, required=True, help="distortion budget")
    p.add_argument("--eps", type=float, required=True, help="excess probability")
    p.add_argument("--k", required=True, metavar="A:B[:STEP]")
    _add_out_flags(p)
    p.set_defaults(func=cmd_lossy)

    p = sub.add_parser("validate", help="run the invariant self-test suite")
    p.add_argument("--quick", action="store_true", help="small-scale variant")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("figures", help="emit the fixed figure data bundles")
    p.add_argument("--which", choices=("fig1", "fig2", "fig3", "fig4"), required=True)
    _add_out_flags(p)
    p.set_defaults(func=cmd_figures)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    try:
        return int(args.func(args))
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except BoundViolation as e:
        print(f"bound violation: {e}", file=sys.stderr)
        return 2
    except VlcLimitsError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
