"""Command-line entry point: ``nuqw <scenario> [options]``.

Exit codes: 0 success, 2 configuration error, 3 domain error (or a failed
oracle check), 4 finished but some long-run observable did not converge.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import _backend
from .config import FORMATS, SCENARIOS, SCHEMAS, RunConfig, parse_config
from .core import PLUS, CoinSpec, Frame, WalkerState
from .dense import dense_evolve
from .engine import (
    DisorderSpec,
    FixedSteps,
    SurvivalBelow,
    evolve,
    lattice_half_width,
    monte_carlo_oracle,
)
from .errors import ConfigError, MalformedTable, WalkError
from .experiments import (
    RegionLayout,
    disorder_displacement,
    disorder_edge,
    displacement_scan,
    edge_experiment,
    ingest_counts,
    read_counts_csv,
    similarity,
)
from .field import CoinField
from .io import svg_heatmap, svg_lines, write_csv, write_json
from .topology import DEFAULT_GRID, GAP_TOL, phase_diagram

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_NONCONVERGED = 0, 2, 3, 4

SWEEP_NOTE = "theta1 sweep: 13 uniformly spaced interior points of (-pi/2, pi/2) (stand-in sample positions)"


class _Outputs:
    """Writes only the requested formats and remembers what was written."""

    def __init__(self, cfg: RunConfig):
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.formats = set(cfg.formats)
        self.files: list[str] = []

    def csv(self, name, header, rows):
        if "csv" in self.formats:
            self.files.append(write_csv(self.dir / name, header, rows).name)

    def svg(self, fn, name, *args, **kw):
        if "svg" in self.formats:
            self.files.append(fn(self.dir / name, *args, **kw).name)

    def json(self, name, payload):
        if "json" in self.formats:
            payload = {**payload, "files": sorted(self.files)}
            write_json(self.dir / name, payload)


def _meta(cfg: RunConfig, **extra) -> dict:
    return {"config": cfg.resolved(), "backend": _backend.BACKEND, **extra}


def _wide(positions, table):
    header = ["t"] + [str(int(x)) for x in positions]
    rows = [[t + 1, *row] for t, row in enumerate(table)]
    return header, rows


# ---------------------------------------------------------------- scenarios


def _phase_diagram(cfg: RunConfig, out: _Outputs) -> int:
    q = cfg.params
    pd = phase_diagram(q["theta1_range"], q["theta2_range"], q["resolution"], q["p"], q["grid"], cfg.workers)
    header = ["theta1", "theta2", "nu_prime", "nu_dprime", "nu_0", "nu_pi", "valid"]
    rows = list(pd.rows())
    out.csv("phase_diagram.csv", header, rows)

    def grid(key):
        vals = np.full((len(pd.theta2), len(pd.theta1)), np.nan)
        for r in rows:
            if r["valid"]:
                i = int(np.searchsorted(pd.theta1, r["theta1"]))
                j = int(np.searchsorted(pd.theta2, r["theta2"]))
                vals[j, i] = float(_fraction_value(r[key]))
        return vals

    for key in ("nu_0", "nu_pi"):
        out.svg(svg_heatmap, f"phase_diagram_{key}.svg", grid(key), pd.theta1, pd.theta2, "theta1", "theta2", key)
    n_valid = sum(r["valid"] for r in rows)
    out.json(
        "phase_diagram.json",
        _meta(cfg, gap_tolerance=GAP_TOL, cells=len(rows), valid_cells=n_valid, boundary_cells=len(rows) - n_valid),
    )
    return EXIT_OK


def _fraction_value(s) -> float:
    num, _, den = str(s).partition("/")
    return float(num) / float(den or 1)


def _displacement_scan(cfg: RunConfig, out: _Outputs) -> int:
    q = cfg.params
    rows = displacement_scan(
        q["theta2"],
        q["theta1"],
        q["p"],
        q["steps"],
        [Frame.parse(f) for f in q["frames"]],
        SurvivalBelow(q["eps"], q["t_max"]),
        q["winding"],
        cfg.workers,
    )
    header = [
        "frame", "p", "theta1", "theta2", "steps", "displacement", "dwell_time",
        "longrun_displacement", "longrun_displacement_tail_bound", "longrun_dwell_time",
        "longrun_dwell_time_tail_bound", "longrun_steps", "converged", "winding",
    ]
    table = [
        [
            r.frame.value, r.p, r.theta1, r.theta2, r.steps, r.displacement, r.dwell_time,
            r.longrun_displacement.value, r.longrun_displacement.tail_bound, r.longrun_dwell_time.value,
            r.longrun_dwell_time.tail_bound, r.longrun_displacement.steps_used, r.longrun_displacement.converged,
            r.winding,
        ]
        for r in rows
    ]
    out.csv("displacement_scan.csv", header, table)
    for kind, attr in (("finite", "displacement"), ("longrun", "longrun_displacement")):
        series = {}
        for r in rows:
            label = f"{r.frame.value} p={r.p:.4g}"
            xs, ys = series.setdefault(label, ([], []))
            xs.append(r.theta1)
            v = getattr(r, attr)
            ys.append(v if isinstance(v, float) else v.value)
        out.svg(svg_lines, f"displacement_scan_{kind}.svg", series, "theta1", "<dx>", f"{kind} displacement")
    n_bad = sum(not r.longrun_displacement.converged for r in rows)
    out.json(
        "displacement_scan.json",
        _meta(
            cfg,
            note=SWEEP_NOTE if q["theta1"] is None else "user-supplied theta1 values",
            points=len(rows),
            nonconverged=n_bad,
            max_tail_bound=max(r.longrun_displacement.tail_bound for r in rows),
            gap_tolerance=GAP_TOL,
            k_grid=DEFAULT_GRID,
        ),
    )
    return EXIT_NONCONVERGED if n_bad else EXIT_OK


def _layout(q) -> RegionLayout:
    return RegionLayout(CoinSpec(*q["inner"]), CoinSpec(*q["outer"]), q["x0"])


def _edge(cfg: RunConfig, out: _Outputs) -> int:
    q = cfg.params
    res = edge_experiment(_layout(q), q["p"], q["steps"], q["start"], q["frame"], q["half_width"] or None)
    out.csv("edge_Q.csv", *_wide(res.positions, res.Q))
    out.csv("edge_P.csv", *_wide(res.positions, res.record.P))
    out.svg(svg_heatmap, "edge_Q.svg", res.Q, res.positions, np.arange(1, q["steps"] + 1), "x", "t", "Q(x,t)")
    final = res.Q[-1]
    out.json(
        "edge.json",
        _meta(
            cfg,
            Q_at_start_final=res.at(q["start"], q["steps"]),
            argmax_final=int(res.positions[int(np.argmax(final))]),
            survival=res.record.survival,
            bookkeeping_residual=res.record.bookkeeping_residual(),
        ),
    )
    return EXIT_OK


def _disorder_edge(cfg: RunConfig, out: _Outputs) -> int:
    q = cfg.params
    spec = DisorderSpec(q["amplitude"], cfg.seed, q["ensemble"])
    res = disorder_edge(_layout(q), spec, q["p"], q["steps"], q["start"], q["frame"], q["half_width"] or None, cfg.workers)
    out.csv("disorder_edge_Q_mean.csv", *_wide(res.positions, res.Q_mean))
    out.csv("disorder_edge_Q_std.csv", *_wide(res.positions, res.members.std))
    members = [
        [seed, stream, member, t + 1, int(x), res.members.values[member, t, i]]
        for (seed, stream, member) in res.members.seeds
        for t in range(q["steps"])
        for i, x in enumerate(res.positions)
    ]
    out.csv("disorder_edge_members.csv", ["seed", "stream", "member", "t", "x", "Q"], members)
    out.svg(svg_heatmap, "disorder_edge_Q_mean.svg", res.Q_mean, res.positions, np.arange(1, q["steps"] + 1), "x", "t", "mean Q(x,t)")
    out.json(
        "disorder_edge.json",
        _meta(
            cfg,
            seeds=res.members.seeds,
            rng="PCG64 on SeedSequence(seed, spawn_key=(stream, member))",
            Q_mean_at_start_final=res.at(q["start"], q["steps"]),
            argmax_final=int(res.positions[int(np.argmax(res.Q_mean[-1]))]),
        ),
    )
    return EXIT_OK


def _disorder_scan(cfg: RunConfig, out: _Outputs) -> int:
    q = cfg.params
    spec = DisorderSpec(q["amplitude"], cfg.seed, q["ensemble"])
    pts = disorder_displacement(q["theta2"], q["theta1"], spec, q["p"], q["steps"], q["frame"], cfg.workers)
    out.csv(
        "disorder_scan.csv",
        ["theta1", "theta2", "clean", "mean", "std", "members"],
        [[pt.theta1, pt.theta2, pt.clean, pt.mean, pt.std, len(pt.summary.values)] for pt in pts],
    )
    out.csv(
        "disorder_scan_members.csv",
        ["theta1", "seed", "stream", "member", "displacement"],
        [[pt.theta1, *s, v] for pt in pts for s, v in zip(pt.summary.seeds, pt.summary.values)],
    )
    xs = [pt.theta1 for pt in pts]
    out.svg(
        svg_lines,
        "disorder_scan.svg",
        {"clean": (xs, [pt.clean for pt in pts]), "ensemble mean": (xs, [pt.mean for pt in pts])},
        "theta1",
        "<dx>",
        f"{q['steps']}-step displacement",
    )
    out.json(
        "disorder_scan.json",
        _meta(
            cfg,
            note=SWEEP_NOTE if q["theta1"] is None else "user-supplied theta1 values",
            rng="PCG64 on SeedSequence(seed, spawn_key=(stream, member)); sweep point i uses stream i",
            seeds=[pt.summary.seeds for pt in pts],
        ),
    )
    return EXIT_OK


def _read_reference(path) -> tuple[np.ndarray, np.ndarray]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["x", "q"]:
            raise MalformedTable(f"{path}: header must be 'x,Q'")
        try:
            pairs = [(int(r[0]), float(r[1])) for r in reader if r and any(c.strip() for c in r)]
        except (ValueError, IndexError):
            raise MalformedTable(f"{path}: unreadable row") from None
    pairs.sort()
    return np.array([x for x, _ in pairs]), np.array([v for _, v in pairs])


def _ingest(cfg: RunConfig, out: _Outputs) -> int:
    q = cfg.params
    res = ingest_counts(read_counts_csv(q["counts"]))
    rows = [
        [t + 1, int(x), res.P_exp[t, i], res.P_err[t, i]]
        for t in range(res.P_exp.shape[0])
        for i, x in enumerate(res.positions)
    ]
    out.csv("ingest_P.csv", ["t", "x", "P_exp", "P_err"], rows)
    summary = {"displacement": res.displacement, "dwell_time": res.dwell_time, "steps": int(res.P_exp.shape[0])}
    series = {}
    if res.Q_exp is not None:
        out.csv("ingest_Q.csv", ["x", "Q_exp"], [[int(x), v] for x, v in zip(res.positions, res.Q_exp)])
        series["Q_exp"] = (res.positions, res.Q_exp)
    if q["reference"]:
        if res.Q_exp is None:
            raise MalformedTable("no transmitted counts to compare with the reference")
        xs, ref = _read_reference(q["reference"])
        lo, hi = min(xs[0], res.positions[0]), max(xs[-1], res.positions[-1])
        grid = np.arange(lo, hi + 1)
        a, b = np.zeros(grid.size), np.zeros(grid.size)
        a[res.positions - lo] = res.Q_exp
        b[xs - lo] = ref
        summary["similarity"] = similarity(a, b)
        series["reference"] = (xs, ref)
    if series:
        out.svg(svg_lines, "ingest_Q.svg", series, "x", "Q", "final survivor distribution")
    out.json("ingest.json", _meta(cfg, **summary))
    return EXIT_OK


def _random_angles(rng, n):
    return rng.uniform(-math.pi, math.pi, n)


def _oracle_check(cfg: RunConfig, out: _Outputs) -> int:
    q = cfg.params
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    L = q["half_width"]
    steps = min(q["steps"], (L - 2) // 2)
    rows, worst = [], 0.0
    for i in range(q["configurations"]):
        t1, t2 = _random_angles(rng, 2 * L + 1), _random_angles(rng, 2 * L + 1)
        p = float(rng.uniform(0, 1))
        frame = Frame.PRIME if rng.random() < 0.5 else Frame.DOUBLE_PRIME
        amp = np.zeros((2 * L + 1, 2), complex)
        amp[L - 1 : L + 2] = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        init = WalkerState(amp)
        rec = evolve(init, CoinField.explicit(t1, t2), p, frame, FixedSteps(steps), keep_states=True)
        states, dense_rows = dense_evolve(amp, t1, t2, p, frame, steps)
        diff = max(
            max(float(np.max(np.abs(a.amplitudes - b))) for a, b in zip(rec.states[1:], states)),
            float(np.max(np.abs(rec.P - dense_rows))),
        )
        worst = max(worst, diff)
        rows.append(["dense", i, frame.value, p, steps, diff, diff <= 1e-10])
    fractions = []
    for i in range(q["mc_configurations"]):
        coin = CoinSpec(*_random_angles(rng, 2))
        p = float(rng.uniform(0.2, 1.0))
        frame = Frame.PRIME if rng.random() < 0.5 else Frame.DOUBLE_PRIME
        Lmc = lattice_half_width(steps)
        field_ = CoinField.homogeneous(coin, Lmc)
        init = WalkerState.localized(Lmc, 0, PLUS)
        exact = evolve(init, field_, p, frame, FixedSteps(steps)).P
        mc = monte_carlo_oracle(init, field_, p, frame, steps, q["trials"], cfg.seed + i)
        mask = exact > 1e-12
        se = np.sqrt(exact * (1 - exact) / q["trials"])
        frac = float(np.mean(np.abs(mc.P_hat - exact)[mask] <= 4 * se[mask])) if mask.any() else 1.0
        fractions.append(frac)
        rows.append(["monte_carlo", i, frame.value, p, steps, frac, frac >= 0.95])
    out.csv("oracle_check.csv", ["check", "index", "frame", "p", "steps", "metric", "passed"], rows)
    passed = all(r[-1] for r in rows)
    out.json(
        "oracle_check.json",
        _meta(cfg, passed=passed, dense_max_abs_diff=worst, dense_tolerance=1e-10, mc_fractions=fractions, mc_required=0.95),
    )
    return EXIT_OK if passed else EXIT_DOMAIN


_RUNNERS = {
    "phase-diagram": _phase_diagram,
    "displacement-scan": _displacement_scan,
    "edge": _edge,
    "disorder-edge": _disorder_edge,
    "disorder-scan": _disorder_scan,
    "ingest": _ingest,
    "oracle-check": _oracle_check,
}


def run_scenario(cfg: RunConfig) -> int:
    """Run one scenario, write its artifacts to ``cfg.out`` and return the exit status."""
    return _RUNNERS[cfg.scenario](cfg, _Outputs(cfg))


# ---------------------------------------------------------------------- argv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nuqw", description="Lossy split-step quantum walk simulator.")
    sub = parser.add_subparsers(dest="scenario", required=True, metavar="SCENARIO")
    for name in SCENARIOS:
        sp = sub.add_parser(name, help=f"run the {name} scenario")
        sp.add_argument("--config", help="JSON file with flat scenario keys")
        sp.add_argument("--seed", help="base seed (default 0)")
        sp.add_argument("--workers", help="worker threads (default 1)")
        sp.add_argument("--out", help="output directory (default $NUQW_OUTPUT_DIR or ./nuqw-output)")
        sp.add_argument("--format", help=f"comma-separated subset of {','.join(FORMATS)}")
        for key, (default, _, text) in SCHEMAS[name].items():
            shown = default if not isinstance(default, list) else ",".join(map(str, default))
            sp.add_argument(
                "--" + key.replace("_", "-"),
                dest=key,
                help=f"{text} (default: {shown})",
            )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    scenario = args.pop("scenario")
    path = args.pop("config")
    try:
        cfg = parse_config(scenario, path, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run_scenario(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (WalkError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
