"""Command-line front end.

Every subcommand writes plot-ready CSV (or JSONL) to ``--output`` or
standard output.  Exit codes: 0 success, 1 usage error, 2 input/output
error, 3 math/domain error (only raised for row errors under ``--strict``
and for failed self-checks).
"""
from __future__ import annotations

import argparse
import csv
import contextlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import kernels
from .binary import BinaryPrior, f_sigmoid_generic, f_softplus_generic
from .demo import run_demo
from .generators import DomainError, ReferenceMeasure, make_generator, scaled
from .loss import fy_loss
from .operators import batch_softargmax, f_softargmax
from .oracle import OracleConfig, oracle_pgd_batch
from .solver import SolverConfig, StopMode, bisection_trace

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_MATH = 0, 1, 2, 3
CHUNK = 256


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def fmt(x) -> str:
    """Shortest round-trip text for a number; empty for ``None``."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# ---------------------------------------------------------------------------
# Output


class Writer:
    def __init__(self, stream, fields: Sequence[str], kind: str):
        self.stream = stream
        self.fields = list(fields)
        self.kind = kind
        if kind == "csv":
            self._csv = csv.writer(stream, lineterminator="\n")
            self._csv.writerow(self.fields)

    def row(self, values: Iterable):
        values = list(values)
        if self.kind == "csv":
            self._csv.writerow([fmt(v) for v in values])
        else:
            obj = {}
            for k, v in zip(self.fields, values):
                if isinstance(v, (np.floating, float)):
                    v = float(v)
                    v = v if math.isfinite(v) else fmt(v)
                elif isinstance(v, np.integer):
                    v = int(v)
                elif isinstance(v, np.bool_):
                    v = bool(v)
                obj[k] = v
            self.stream.write(json.dumps(obj) + "\n")


def _open_output(path: Optional[str]):
    if path in (None, "-"):
        return sys.stdout, False
    try:
        return open(path, "w", encoding="utf-8", newline=""), True
    except OSError as exc:
        raise IOError(f"cannot open output {path!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# Shared options


def _common(p: argparse.ArgumentParser):
    p.add_argument("--divergence", "-d", default="kl", help="catalog divergence name (default kl)")
    p.add_argument("--alpha", type=float, default=None, help="alpha for the alpha family")
    p.add_argument("--beta", type=float, default=1.0, help="temperature (default 1)")
    p.add_argument("--q", default="uniform", help='reference measure: comma list or "uniform"')
    p.add_argument("--tol", type=float, default=1e-8, help="residual tolerance")
    p.add_argument("--max-iters", type=int, default=100, help="bisection iteration cap")
    p.add_argument("--fixed-iters", type=int, default=None,
                   help="run exactly this many halvings (bit-reproducible)")
    p.add_argument("--output", "-o", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--strict", action="store_true", help="exit 3 if any row fails")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None,
                   help="worker threads (default: FDIV_WORKERS or 1)")


def _generator(args):
    try:
        g = make_generator(args.divergence, args.alpha)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    if not args.beta > 0:
        raise UsageError(f"--beta must be positive, got {args.beta!r}")
    return scaled(g, args.beta)


def _solver_cfg(args) -> SolverConfig:
    try:
        if args.fixed_iters is not None:
            return SolverConfig(tolerance=args.tol, max_iterations=args.fixed_iters, mode=StopMode.FIXED)
        return SolverConfig(tolerance=args.tol, max_iterations=args.max_iters)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _reference(text: str, k: int) -> ReferenceMeasure:
    if text.strip().lower() == "uniform":
        return ReferenceMeasure.uniform(k)
    try:
        vals = [float(t) for t in text.split(",")]
        ref = ReferenceMeasure.of(vals)
    except ValueError as exc:
        raise UsageError(f"bad --q {text!r}: {exc}") from exc
    if len(ref) != k:
        raise UsageError(f"--q has {len(ref)} entries but the data has k = {k}")
    return ref


def _workers(args) -> int:
    n = args.workers
    if n is None:
        env = os.environ.get("FDIV_WORKERS")
        try:
            n = int(env) if env else 1
        except ValueError as exc:
            raise UsageError(f"FDIV_WORKERS must be an integer, got {env!r}") from exc
    if n < 1:
        raise UsageError("worker count must be at least 1")
    return n


def _float_list(text: str, name: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad {name} {text!r}") from exc


# ---------------------------------------------------------------------------
# eval


def _read_rows(path: Optional[str]):
    """Yield ``(line_number, fields)``; comments and a non-numeric header are skipped."""
    try:
        stream = sys.stdin if path in (None, "-") else open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IOError(f"cannot open input {path!r}: {exc}") from exc
    with stream if stream is not sys.stdin else contextlib.nullcontext(stream):
        first = True
        for lineno, fields in enumerate(csv.reader(stream), start=1):
            if not fields or fields[0].lstrip().startswith("#"):
                continue
            if first:
                first = False
                if all(not _is_number(f) for f in fields):
                    continue
            yield lineno, fields


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _parse_rows(rows, labels: bool):
    """Split rows into ``(lineno, logits, labels, error)``; k is fixed by the first good row."""
    parsed, k = [], None
    for lineno, fields in rows:
        try:
            vals = [float(f) for f in fields]
        except ValueError:
            parsed.append((lineno, None, None, f"line {lineno}: non-numeric field"))
            continue
        width = len(vals) // 2 if labels else len(vals)
        if labels and len(vals) % 2:
            parsed.append((lineno, None, None, f"line {lineno}: odd number of columns in loss mode"))
            continue
        if k is None:
            k = width
        if width != k or width == 0:
            parsed.append((lineno, None, None, f"line {lineno}: expected {k} logits, got {width}"))
            continue
        th = np.array(vals[:k])
        y = np.array(vals[k:]) if labels else None
        parsed.append((lineno, th, y, None))
    return parsed, k


def cmd_eval(args) -> int:
    g = _generator(args)
    cfg = _solver_cfg(args)
    workers = _workers(args)
    parsed, k = _parse_rows(_read_rows(args.input), args.labels)
    if k is None:
        if args.strict and parsed:
            sys.stderr.write(parsed[0][3] + "\n")
            return EXIT_IO
        k = 1
    ref = _reference(args.q, k)
    if args.strict:
        for _, _, _, err in parsed:
            if err:
                sys.stderr.write(err + "\n")
                return EXIT_IO

    good = [i for i, r in enumerate(parsed) if r[3] is None]
    thetas = np.array([parsed[i][1] for i in good]).reshape(len(good), k)
    chunks = [good[i:i + CHUNK] for i in range(0, len(good), CHUNK)]
    pos = {i: n for n, i in enumerate(good)}

    def solve(chunk):
        idx = np.array([pos[i] for i in chunk], dtype=int)
        res = batch_softargmax(g, thetas[idx], ref, cfg)
        out = []
        for j, i in enumerate(chunk):
            err = res.errors[j]
            loss = grad = None
            if err is None and args.labels:
                try:
                    lr = fy_loss(g, parsed[i][1], parsed[i][2], ref, cfg)
                    loss, grad = lr.value, lr.grad_theta
                except ValueError as exc:
                    err = str(exc)
            out.append((res.p[j], res.tau_star[j], res.softmax_value[j], res.iterations[j],
                        loss, grad, err))
        return out

    with ThreadPoolExecutor(max_workers=workers) as pool:
        solved = [r for part in pool.map(solve, chunks) for r in part]
    results = dict(zip(good, solved))

    fields = ["line"] + [f"p{j + 1}" for j in range(k)] + ["tau_star", "softmax_value", "iterations"]
    if args.labels:
        fields += ["loss"] + [f"grad{j + 1}" for j in range(k)]
    fields.append("error")
    stream, close = _open_output(args.output)
    failed = 0
    try:
        w = Writer(stream, fields, args.format)
        for i, (lineno, _, _, perr) in enumerate(parsed):
            if perr is not None:
                failed += 1
                w.row([lineno] + [None] * (len(fields) - 2) + [perr])
                continue
            p, tau, val, it, loss, grad, err = results[i]
            if err is not None:
                failed += 1
                w.row([lineno] + [None] * (len(fields) - 2) + [f"line {lineno}: {err}"])
                continue
            row = [lineno, *p, tau, val, it]
            if args.labels:
                row += [loss, *grad]
            w.row(row + [""])
    finally:
        if close:
            stream.close()
    if failed and args.strict:
        return EXIT_MATH
    return EXIT_OK


# ---------------------------------------------------------------------------
# sigmoid-sweep and heatmap


def cmd_sigmoid_sweep(args) -> int:
    g = _generator(args)
    cfg = _solver_cfg(args)
    if args.steps < 1:
        raise UsageError("--steps must be positive")
    s = np.linspace(args.s_min, args.s_max, args.steps)
    if args.q.strip().lower() != "uniform":
        ref = _reference(args.q, 2)
        priors = [BinaryPrior(*ref.q)]
    else:
        q1s = _float_list(args.q1, "--q1")
        if not all(0 < v < 1 for v in q1s):
            raise UsageError("--q1 values must lie in (0, 1)")
        priors = [BinaryPrior(1.0 - v, v) for v in q1s]
    closed = not args.generic
    stream, close = _open_output(args.output)
    bad = 0
    try:
        w = Writer(stream, ["s", "q0", "q1", "sigmoid", "softplus"], args.format)
        for pr in priors:
            sig = np.asarray(f_sigmoid_generic(g, s, pr, cfg, closed_form=closed), dtype=float)
            sp = np.asarray(f_softplus_generic(g, s, pr, cfg, closed_form=closed), dtype=float)
            # each row must be a valid probability
            bad += int(np.count_nonzero(~((sig >= 0) & (sig <= 1))))
            for row in zip(s, np.full(s.size, pr.q0), np.full(s.size, pr.q1), sig, sp):
                w.row(row)
    finally:
        if close:
            stream.close()
    if bad:
        sys.stderr.write(f"{bad} sigmoid values outside [0, 1]\n")
        return EXIT_MATH
    return EXIT_OK


def cmd_heatmap(args) -> int:
    g = _generator(args)
    cfg = _solver_cfg(args)
    ref = _reference(args.q, 3)
    if args.steps < 1:
        raise UsageError("--steps must be positive")
    axis = np.linspace(-args.range, args.range, args.steps)
    t1, t2 = np.meshgrid(axis, axis, indexing="ij")
    thetas = np.stack([t1.ravel(), t2.ravel(), np.zeros(t1.size)], axis=1)
    res = batch_softargmax(g, thetas, ref, cfg)
    p = res.p
    ok = np.all(p >= 0, axis=1) & (np.abs(p.sum(axis=1) - 1) <= 10 * args.tol + 1e-12)
    stream, close = _open_output(args.output)
    try:
        w = Writer(stream, ["theta1", "theta2", "p1", "p2", "p3"], args.format)
        for th, pp in zip(thetas, p):
            w.row([th[0], th[1], *pp])
    finally:
        if close:
            stream.close()
    if not ok.all():
        sys.stderr.write(f"{np.count_nonzero(~ok)} heatmap cells are not on the simplex\n")
        return EXIT_MATH
    return EXIT_OK


# ---------------------------------------------------------------------------
# bisect-trace


def cmd_bisect_trace(args) -> int:
    g = _generator(args)
    rng = np.random.default_rng(args.seed)
    proxy_t = max(args.iterations, 60)
    stream, close = _open_output(args.output)
    violations = 0
    try:
        w = Writer(stream, ["instance", "t", "measured_error", "bound"], args.format)
        for inst in range(args.instances):
            k = int(rng.integers(2, args.max_k + 1))
            theta = rng.uniform(-5, 5, k)
            q = rng.uniform(0.1, 3, k) if args.q.strip().lower() != "uniform" else np.ones(k)
            taus, br = bisection_trace(g, theta, q, proxy_t)
            for t in range(args.iterations + 1):
                err = abs(taus[t] - taus[proxy_t])
                bound = br.width * 2.0 ** (-t)
                violations += err > bound
                w.row([inst, t, err, bound])
    finally:
        if close:
            stream.close()
    if violations:
        sys.stderr.write(f"{violations} trace rows exceed the 2^-t bound\n")
        return EXIT_MATH
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench


def _median_time(fn, repeats, warmup):
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def _kl_closed(thetas, q):
    z = thetas + np.log(q)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cmd_bench(args) -> int:
    cfg = _solver_cfg(args)
    sizes = [int(v) for v in _float_list(args.batch_sizes, "--batch-sizes")]
    names = [d for d in args.divergence.split(",") if d.strip()]
    try:
        gens = [scaled(make_generator(n, args.alpha), args.beta) for n in names]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    backend = args.backend
    if backend not in kernels.BACKENDS:
        raise UsageError(f"backend {backend!r} unavailable (have {', '.join(kernels.BACKENDS)})")
    rng = np.random.default_rng(args.seed)
    stream, close = _open_output(args.output)
    try:
        w = Writer(stream, ["batch", "divergence", "backend", "wall_time", "per_row",
                            "kl_closed_form_time", "ratio"], args.format)
        for b in sizes:
            thetas = rng.uniform(-5, 5, (b, args.k))
            q = np.ones(args.k)
            t_cf = _median_time(lambda: _kl_closed(thetas, q), args.repeats, args.warmup)
            for name, g in zip(names, gens):
                t = _median_time(lambda: batch_softargmax(g, thetas, q, cfg, backend=backend),
                                 args.repeats, args.warmup)
                w.row([b, name, backend, t, t / b, t_cf, t / t_cf if t_cf > 0 else float("nan")])
    finally:
        if close:
            stream.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# train-demo and verify


def cmd_train_demo(args) -> int:
    cfg = _solver_cfg(args)
    try:
        rep = run_demo(args.divergence, args.alpha, epochs=args.epochs, lr=args.lr, seed=args.seed,
                       distill=args.distill, n=args.samples, k=args.classes, cfg=cfg)
    except DomainError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_MATH
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    stream, close = _open_output(args.output)
    try:
        w = Writer(stream, ["epoch", "loss", "accuracy"], args.format)
        for e, (l, a) in enumerate(zip(rep.losses, rep.accuracies)):
            w.row([e, l, a])
        w.row([args.epochs, None, rep.final_accuracy])
    finally:
        if close:
            stream.close()
    sys.stderr.write(f"final accuracy {rep.final_accuracy:.4f}\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    g = _generator(args)
    cfg = _solver_cfg(args)
    ocfg = OracleConfig.newton() if args.metric == "diagonal" else OracleConfig()
    rng = np.random.default_rng(args.seed)
    stream, close = _open_output(args.output)
    fails = 0
    try:
        w = Writer(stream, ["instance", "k", "max_abs_error", "pass"], args.format)
        for inst in range(args.instances):
            k = int(rng.integers(2, args.max_k + 1))
            theta = rng.uniform(-5, 5, k)
            q = rng.uniform(0.1, 3, k) if args.q.strip().lower() != "uniform" else np.ones(k)
            p = f_softargmax(g, theta, q, cfg).p
            ref = oracle_pgd_batch(g, theta[None], q[None], ocfg)[0]
            err = float(np.max(np.abs(p - ref)))
            ok = err <= args.threshold
            fails += not ok
            w.row([inst, k, err, ok])
    finally:
        if close:
            stream.close()
    return EXIT_MATH if fails else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fdiv", description="f-divergence softmax operators and losses")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="f-softargmax (and optional loss) for each input row")
    _common(p)
    p.add_argument("--input", "-i", default=None, help="CSV of logits, one row per instance")
    p.add_argument("--labels", action="store_true",
                   help="rows hold k logits followed by k label probabilities; adds loss columns")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sigmoid-sweep", help="binary f-sigmoid curves over s")
    _common(p)
    p.add_argument("--s-min", type=float, default=-5.0)
    p.add_argument("--s-max", type=float, default=5.0)
    p.add_argument("--steps", type=int, default=201)
    p.add_argument("--q1", default="0.1,0.25,0.5,0.75,0.9",
                   help="priors (1 - q1, q1) to sweep, used when --q is uniform")
    p.add_argument("--generic", action="store_true", help="bypass closed forms")
    p.set_defaults(func=cmd_sigmoid_sweep)

    p = sub.add_parser("heatmap", help="3-class f-softargmax over a (theta1, theta2) grid")
    _common(p)
    p.add_argument("--range", type=float, default=5.0)
    p.add_argument("--steps", type=int, default=51)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("bisect-trace", help="bisection error against the 2^-t bound")
    _common(p)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--iterations", type=int, default=40)
    p.add_argument("--max-k", type=int, default=8)
    p.set_defaults(func=cmd_bisect_trace)

    p = sub.add_parser("bench", help="batch timing against the KL closed form")
    _common(p)
    p.add_argument("--batch-sizes", default="1,16,256,1024,4096")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--backend", default=kernels.BACKEND, choices=("compiled", "python"))
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("train-demo", help="fit a linear classifier on synthetic data")
    _common(p)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=300)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--distill", action="store_true", help="train on soft teacher labels")
    p.set_defaults(func=cmd_train_demo)

    p = sub.add_parser("verify", help="compare f-softargmax with the projected-ascent oracle")
    _common(p)
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--max-k", type=int, default=6)
    p.add_argument("--threshold", type=float, default=1e-4)
    p.add_argument("--metric", choices=("diagonal", "euclidean"), default="diagonal")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"fdiv {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except (IOError, OSError) as exc:
        sys.stderr.write(f"fdiv {args.command}: {exc}\n")
        return EXIT_IO
    except DomainError as exc:
        sys.stderr.write(f"fdiv {args.command}: {exc}\n")
        return EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
