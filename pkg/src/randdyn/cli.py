"""Command-line front end: ``randdyn <command> --config FILE [flags]``.

Every run writes CSV files plus ``manifest.json`` into ``--out-dir``.
Output depends only on the config and flags, so reruns are byte-identical.
Exit codes: 0 success, 1 configuration error, 2 resource cap, 3 violated
mathematical precondition (the precondition is named on stderr).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
from pathlib import Path

from . import __version__, kernels
from .config import ExperimentConfig, load_config
from .errors import ConfigError, MathPreconditionError, RandDynError, ResourceLimitError

MANIFEST_VERSION = 1

COMMANDS = (
    "delta",
    "clt",
    "counterexample",
    "orbit",
    "canht",
    "expected-canht",
    "classify",
    "prob-finite",
    "census",
    "check",
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are configuration errors
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _num(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


class Run:
    def __init__(self, command: str, cfg: ExperimentConfig | None, args):
        self.command = command
        self.cfg = cfg
        self.args = args
        self.out = Path(args.out_dir)
        self.files: list[str] = []
        self.summary: dict = {}

    # parameters: command-line flag beats [run] entry beats default
    def param(self, name, cast, default):
        flag = getattr(self.args, name, None)
        if flag is not None:
            return cast(flag)
        if self.cfg is not None:
            return self.cfg.get(name, cast, default)
        return default

    @property
    def seed(self) -> int:
        return self.param("seed", int, 0)

    def need(self, what):
        if self.cfg is None:
            raise ConfigError(f"{self.command} needs --config")
        if what == "measure" and self.cfg.measure is None:
            raise ConfigError("config has no [measure] or [maps]")
        if what == "point" and self.cfg.point is None:
            raise ConfigError("config has no [point]")
        if what == "maps" and not self.cfg.maps:
            raise ConfigError("config has no [maps]")

    def write_csv(self, name: str, header, rows):
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_num(x) for x in r])
        self.files.append(name)

    def write_text(self, name: str, text: str):
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / name).write_text(text if text.endswith("\n") else text + "\n")
        self.files.append(name)

    def manifest(self):
        try:
            import gmpy2

            gv = gmpy2.version()
        except ImportError:  # pragma: no cover
            gv = None
        flags = {k: v for k, v in sorted(vars(self.args).items()) if k not in ("func", "out_dir") and v is not None}
        data = {
            "manifest_version": MANIFEST_VERSION,
            "command": self.command,
            "seed": self.seed,
            "flags": {k: str(v) for k, v in flags.items()},
            "config": self.cfg.raw if self.cfg is not None else None,
            "versions": {
                "randdyn": __version__,
                "python": platform.python_version(),
                "gmpy2": gv,
                "kernel_backend": kernels.BACKEND,
            },
            "outputs": sorted(self.files),
            "summary": self.summary,
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_delta(run: Run):
    from .degree_lab import dyndeg_birkhoff_mc, dyndeg_kingman_mc, dyndeg_morphism

    run.need("measure")
    measure = run.cfg.measure
    n = run.param("n", int, 10_000)
    trials = run.param("trials", int, 64)
    threads = run.param("threads", int, 1)
    rows = []
    try:
        cf = dyndeg_morphism(measure)
        rows.append((1, cf.point_estimate, cf.std_error, cf.method))
        mc = dyndeg_birkhoff_mc(measure, n, trials, run.seed, threads=threads)
        rows.append((n, mc.point_estimate, mc.std_error, mc.method))
    except MathPreconditionError as exc:
        print(f"skipping closed form and Birkhoff estimate: {exc}", file=sys.stderr)
    if measure.kind == "finite":
        km = dyndeg_kingman_mc(
            measure,
            n_list=run.cfg.int_list("n_list", (1, 2, 3, 4, 6, 8)),
            trials=run.param("kingman_trials", int, 200),
            seed=run.seed,
            budget=run.param("budget", int, 4096),
        )
        for n_, v, se, method in km.table:
            rows.append((n_, math.exp(v), math.exp(v) * se, method))
        rows.append((km.n_used, km.point_estimate, km.std_error, "kingman_min"))
    if not rows:
        raise MathPreconditionError("no estimator applies to this measure")
    run.write_csv("delta.csv", ("n", "estimate", "stderr", "method"), rows)
    for r in rows:
        print(f"{r[3]:>12}  n={r[0]:<6} delta={r[1]:.6f} +- {r[2]:.2g}")
    run.summary = {"delta": rows[0][1], "method": rows[0][3]}


def cmd_clt(run: Run):
    from .degree_lab import clt_sample

    run.need("measure")
    n = run.args.n_max if run.args.n_max is not None else run.cfg.get("clt_n", int, 1000)
    trials = run.param("trials", int, 2000)
    threads = run.param("threads", int, 1)
    ns = sorted({m for m in (n // 100, n // 10, n) if m >= 1})
    ks_rows = []
    last = None
    for m in ns:
        last = clt_sample(run.cfg.measure, m, trials, run.seed, threads=threads)
        ks_rows.append((m, last.ks_distance))
    run.write_csv("clt_z.csv", ("z",), [(z,) for z in last.z_values])
    run.write_csv("clt_ks.csv", ("n", "ks"), ks_rows)
    print(f"sigma={last.sigma:.6f}")
    for m, ks in ks_rows:
        print(f"n={m:<6} ks={ks:.4f}")
    run.summary = {"sigma": last.sigma, "ks": ks_rows[-1][1]}


def cmd_counterexample(run: Run):
    from .degree_lab import (
        doubling_block_closed_form,
        doubling_block_degree,
        doubling_block_limits,
        doubling_block_root,
    )

    k_max = run.param("k", int, 10)
    d1 = run.param("d1", int, 2)
    d2 = run.param("d2", int, 3)
    rows, closed = [], []
    for k in range(1, k_max + 1):
        e1, e2 = doubling_block_degree(k, d1, d2)
        rows.append((k, e1, e2, doubling_block_root(k, d1, d2)))
        c1, c2 = doubling_block_closed_form(k)
        closed.append((k, e1, e2, str(c1), str(c2), int(c1 == e1 and c2 == e2)))
    run.write_csv("counterexample.csv", ("k", "e1", "e2", "root"), rows)
    run.write_csv(
        "counterexample_closed_form.csv", ("k", "e1", "e2", "closed_e1", "closed_e2", "agrees"), closed
    )
    odd, even = doubling_block_limits(d1, d2)
    print(f"odd-k limit {odd:.6f}, even-k limit {even:.6f}")
    for r in rows:
        print(f"k={r[0]:<3} e1={r[1]:<8} e2={r[2]:<8} root={r[3]:.6f}")
    bad = [c[0] for c in closed if not c[5]]
    if bad:
        print(f"closed-form exponents disagree with the counts at k = {bad}")
    run.summary = {"odd_limit": odd, "even_limit": even}


def _show(P) -> str:
    if P.n == 1 and P.coords[1] != 0:
        return f"{P} (x = {P.affine()})"
    return str(P)


def _sequence(run: Run):
    from .random_model import SequenceStream

    cfg = run.cfg
    word = cfg.run.get("word")
    if word:
        return tuple(x.strip() for x in word.split(",") if x.strip())
    return SequenceStream(run.seed, run.param("trial", int, 0))


def cmd_orbit(run: Run):
    from .orbit_lab import DEFAULT_MAX_BITS, arithmetic_degree_estimate, iterate_orbit

    run.need("measure")
    run.need("point")
    cfg = run.cfg
    S = cfg.maps or None
    rec = iterate_orbit(
        S,
        _sequence(run),
        cfg.point,
        run.param("n_max", int, 20),
        measure=cfg.measure,
        max_bits=run.param("max_bits", int, DEFAULT_MAX_BITS),
    )
    run.write_csv(
        "orbit.csv",
        ("n", "point", "height", "cum_degree"),
        [(n, str(p), h, d) for n, p, h, d in rec.rows()],
    )
    est = arithmetic_degree_estimate(rec)
    print(f"status: {rec.status}" + (f" at step {rec.indeterminate_step}" if rec.indeterminate_step else ""))
    print(f"word: {rec.word_so_far.composition_string()}")
    if est.degenerate:
        print("arithmetic degree: degenerate (all heights zero)")
    else:
        print(f"arithmetic degree estimate: {est.final:.6f}")
    run.summary = {"status": rec.status, "steps": len(rec.points) - 1}


def cmd_canht(run: Run):
    from .orbit_lab import DEFAULT_MAX_BITS, canonical_height

    run.need("maps")
    run.need("point")
    cfg = run.cfg
    res = canonical_height(
        cfg.maps,
        _sequence(run),
        cfg.point,
        run.param("eps", float, 1e-6),
        measure=cfg.measure,
        max_bits=run.param("max_bits", int, DEFAULT_MAX_BITS),
    )
    run.write_csv(
        "canht.csv", ("n", "normalized_height", "cum_degree"),
        [(i, t, d) for i, (t, d) in enumerate(zip(res.trace, res.degrees))],
    )
    print(f"canonical height {res.value!r} radius {res.radius:.3g} at n={res.n} ({res.status.value})")
    run.summary = {"value": res.value, "radius": res.radius, "n": res.n, "status": res.status.value}


def cmd_expected(run: Run):
    from .orbit_lab import expected_canonical_height

    run.need("maps")
    run.need("point")
    cfg = run.cfg
    mode = run.param("mode", str, "exact")
    res = expected_canonical_height(
        cfg.maps,
        cfg.measure,
        cfg.point,
        mode,
        trials=run.param("trials", int, 200),
        seed=run.seed,
        eps=run.param("eps", float, 1e-6),
        depth=run.param("depth", int, 10),
        state_cap=run.param("state_cap", int, 10_000),
    )
    run.write_csv(
        "expected_canht.csv", ("mode", "value", "error", "samples", "status"),
        [(res.mode, res.value, res.error, res.samples, res.status.value)],
    )
    print(f"expected canonical height ({mode}) {res.value!r} +- {res.error:.3g} ({res.status.value})")
    run.summary = {"value": res.value, "error": res.error}


def cmd_classify(run: Run):
    from .orbit_lab import wandering_classify

    run.need("maps")
    run.need("point")
    cfg = run.cfg
    v = wandering_classify(cfg.maps, cfg.measure, cfg.point, state_cap=run.param("state_cap", int, 10_000))
    text = f"point: {_show(cfg.point)}\n" + v.report()
    run.write_text("classify.txt", text)
    print(text)
    run.summary = {"verdict": v.verdict}


def cmd_prob_finite(run: Run):
    from .orbit_lab import finite_orbit_probability

    run.need("maps")
    run.need("point")
    cfg = run.cfg
    p = finite_orbit_probability(cfg.maps, cfg.measure, cfg.point, state_cap=run.param("state_cap", int, 10_000))
    run.write_text("prob_finite.txt", str(p))
    print(p)
    run.summary = {"probability": str(p)}


def cmd_census(run: Run):
    from .orbit_lab import census

    run.need("measure")
    run.need("point")
    cfg = run.cfg
    S = cfg.maps or None
    res = census(
        S, cfg.measure, cfg.point, _sequence(run), run.param("n_max", int, 20), cfg.float_list("B_grid")
    )
    run.write_csv("census.csv", ("B", "count"), res.rows)

    def fmt(x):
        return "n/a" if x is None else f"{x:.6f}"

    print(f"fitted slope          {fmt(res.slope)}")
    print(f"1/log(delta)          {fmt(res.predicted_slope)}")
    print(f"1/delta               {fmt(res.one_over_delta)}")
    run.summary = {"slope": res.slope, "one_over_log_delta": res.predicted_slope, "one_over_delta": res.one_over_delta}


def cmd_check(run: Run):
    from .degree_lab import subadditivity_check
    from .maps import degree_independence_check, morphism_certificate

    run.need("maps")
    cfg = run.cfg
    lines = ["morphism certification:"]
    for lab, f in cfg.maps.items():
        cert = morphism_certificate(f)
        extra = ""
        if cert.resultant is not None:
            extra = f" (resultant {cert.resultant})"
        elif cert.witness is not None:
            extra = f" (base point {list(cert.witness)})"
        lines.append(f"  {lab}: {cert.status.value}{extra}")
    depth = run.param("depth", int, 3)
    lines.append(degree_independence_check(cfg.maps, depth).summary())
    measure = cfg.measure
    if measure is not None and measure.kind == "finite":
        total = run.param("subadd_max", int, 6)
        while total > 1 and len(measure.labels) ** total > run.param("budget", int, 4096):
            total -= 1
        rep = subadditivity_check(measure, max_total=total, budget=run.param("budget", int, 4096))
        lines.append(
            f"subadditivity E(m+n) <= E(m) + E(n), m+n <= {total}: "
            f"{'pass' if rep.passed else 'FAIL'} ({rep.checked} pairs)"
        )
        for m, n, lhs, rhs in rep.violations:
            lines.append(f"  violated at m={m}, n={n}: {lhs!r} > {rhs!r}")
    text = "\n".join(lines)
    run.write_text("check.txt", text)
    print(text)


HANDLERS = {
    "delta": cmd_delta,
    "clt": cmd_clt,
    "counterexample": cmd_counterexample,
    "orbit": cmd_orbit,
    "canht": cmd_canht,
    "expected-canht": cmd_expected,
    "classify": cmd_classify,
    "prob-finite": cmd_prob_finite,
    "census": cmd_census,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="randdyn", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"randdyn {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="experiment config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir", default="out")
        sp.add_argument("--trials", type=int)
        sp.add_argument("--n-max", dest="n_max", type=int)
        sp.add_argument("--eps", type=float)
        sp.add_argument("--threads", type=int)
        if name == "counterexample":
            sp.add_argument("--k", type=int)
            sp.add_argument("--d1", type=int)
            sp.add_argument("--d2", type=int)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else None
        run = Run(args.command, cfg, args)
        HANDLERS[args.command](run)
        run.manifest()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 2
    except MathPreconditionError as exc:
        print(f"precondition failed [{exc.precondition}]: {exc}", file=sys.stderr)
        return 3
    except RandDynError as exc:  # pragma: no cover - every subclass is handled above
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
