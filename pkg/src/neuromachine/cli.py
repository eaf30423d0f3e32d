"""Command-line front end.

Exit codes: 0 success, 1 divergence or validation failure, 2 usage error,
3 numerical instability.  Every output file is written atomically.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .engine import ProbeSpec
from .engine import run as engine_run
from .layout import CompileError, CompileParams, ImageError, build_images, load_image, perf_estimate
from .model_core import NumericalInstabilityError
from .net_model import NetworkFormatError, Stimulus, parse_network, random_network, serialize_network
from .oracle import DiffError, diff_runs, oracle_run
from .recording import (
    atomic_write_text,
    format_histogram,
    format_raster,
    format_traces,
    parse_raster,
    weight_histogram,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_UNSTABLE = 0, 1, 2, 3

RASTER_FILE = "raster.csv"
TRACE_FILE = "traces.csv"
HIST_FILE = "weights_hist.csv"


def _ids(text: str) -> list[int]:
    if not text:
        return []
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _count(text: str) -> int:
    # accepts 12e6 style counts
    v = float(text)
    if v < 0 or v != int(v):
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return int(v)


def _add_hw_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-hn", type=_positive, default=1, help="hardware neurons (default 1)")
    p.add_argument("--p", type=_positive, default=2, help="lanes per HN (default 2)")


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--steps", type=_nonneg, required=True, help="network steps (1 ms each)")
    p.add_argument("--probe-neurons", type=_ids, default=[], metavar="IDS")
    p.add_argument("--probe-synapses", type=_ids, default=[], metavar="IDX")
    p.add_argument("--cadence", choices=("step", "substep"), default="step")
    p.add_argument("--stimulus", type=Path, help="file of 'timestep neuron_id current' lines")
    p.add_argument("--out", type=Path, required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="neuromachine", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("compile", help="validate a network file and write a memory image")
    p.add_argument("net", type=Path)
    p.add_argument("out", type=Path)
    _add_hw_flags(p)

    p = sub.add_parser("run", help="run a compiled image")
    p.add_argument("image", type=Path)
    _add_sim_flags(p)
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--checkpoint-in", type=Path)
    p.add_argument("--checkpoint-out", type=Path)
    p.add_argument("--histogram", action="store_true", help="write the final weight histogram")

    p = sub.add_parser("oracle", help="run the reference simulator on a network file")
    p.add_argument("net", type=Path)
    _add_sim_flags(p)
    _add_hw_flags(p)
    p.add_argument("--tolerant", action="store_true", help="reverse summation order")

    p = sub.add_parser("diff", help="compare two run directories")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.add_argument("--tolerance", type=float, default=0.0)

    p = sub.add_parser("perf", help="estimate wall-clock seconds per model second")
    p.add_argument("--image", type=Path, help="use an image's exact lane length")
    p.add_argument("--neurons", type=_count)
    p.add_argument("--synapses", type=_count)
    _add_hw_flags(p)
    p.add_argument("--clock", type=float, default=300e6, help="clock in Hz (default 300e6)")
    p.add_argument("--substeps", type=_positive, default=25)

    p = sub.add_parser("inspect", help="print an image's layout summary")
    p.add_argument("image", type=Path)

    p = sub.add_parser("generate", help="write a seeded random network file")
    p.add_argument("out", type=Path)
    p.add_argument("--neurons", type=_positive, required=True)
    p.add_argument("--in-degree", type=float, default=10.0, help="mean in-degree")
    p.add_argument("--distribution", choices=("poisson", "fixed", "skewed"), default="poisson")
    p.add_argument("--exc-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    return ap


def _probes(args) -> ProbeSpec | None:
    if not args.probe_neurons and not args.probe_synapses:
        return None
    return ProbeSpec(args.probe_neurons, args.probe_synapses, args.cadence)


def _stimulus(args) -> Stimulus | None:
    return Stimulus.parse(args.stimulus.read_text()) if args.stimulus else None


def _write_run(out: Path, raster, traces, probes) -> None:
    atomic_write_text(out / RASTER_FILE, format_raster(raster))
    if probes is not None:
        atomic_write_text(out / TRACE_FILE, format_traces(traces))


def _check_probes(probes, n_neurons, n_synapses) -> None:
    if probes is None:
        return
    for i in probes.neurons:
        if not 0 <= i < n_neurons:
            raise ValueError(f"probe neuron {i} out of range (network has {n_neurons})")
    for k in probes.synapses:
        if not 0 <= k < n_synapses:
            raise ValueError(f"probe synapse {k} out of range (network has {n_synapses})")


def cmd_compile(args) -> int:
    desc = parse_network(args.net.read_text())
    c = build_images(desc, CompileParams(n_hn=args.n_hn, p=args.p), args.out)
    print(f"{args.out}: {c.n_neurons} neurons, {len(c.hns)} HN, rows per lane: {c.rows_per_lane}, "
          f"null slots: {c.null_slots}")
    return EXIT_OK


def cmd_run(args) -> int:
    compiled = load_image(args.image)
    probes = _probes(args)
    _check_probes(probes, compiled.n_neurons, compiled.n_synapses)
    res, eng = engine_run(compiled, args.steps, probes, _stimulus(args), args.workers, args.checkpoint_in)
    _write_run(args.out, res.raster, res.traces, probes)
    if args.histogram:
        atomic_write_text(args.out / HIST_FILE, format_histogram(weight_histogram(*eng.weights())))
    if args.checkpoint_out:
        eng.save_checkpoint(args.checkpoint_out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .oracle import OracleConfig

    desc = parse_network(args.net.read_text())
    probes = _probes(args)
    _check_probes(probes, desc.n_neurons, desc.n_synapses)
    cfg = OracleConfig("tolerant" if args.tolerant else "exact")
    res = oracle_run(desc, CompileParams(n_hn=args.n_hn, p=args.p), args.steps, _stimulus(args), probes, cfg)
    _write_run(args.out, res.raster, res.traces, probes)
    return EXIT_OK


def _read_run(d: Path):
    raster = parse_raster((d / RASTER_FILE).read_text())
    tf = d / TRACE_FILE
    traces = tf.read_text().splitlines() if tf.exists() else []
    return raster, traces


def cmd_diff(args) -> int:
    ra, ta = _read_run(args.a)
    rb, tb = _read_run(args.b)
    report = diff_runs(ra, rb, ta, tb, args.tolerance)
    print(report)
    return EXIT_OK if report.within_tolerance else EXIT_FAIL


def format_perf(seconds: float) -> str:
    if seconds <= 1.0:
        return f"{seconds:.1f} (real time)"
    return f"{seconds:.1f} s per model s"


def cmd_perf(args, ap) -> int:
    compiled = None
    if args.image:
        compiled = load_image(args.image)
        n, s = compiled.n_neurons, compiled.n_synapses
        params = CompileParams(n_hn=len(compiled.hns), p=compiled.params.p, clock_hz=args.clock,
                               substeps=args.substeps)
    else:
        if args.neurons is None or args.synapses is None:
            ap.error("perf needs --image or both --neurons and --synapses")
        n, s = args.neurons, args.synapses
        params = CompileParams(n_hn=args.n_hn, p=args.p, clock_hz=args.clock, substeps=args.substeps)
    print(format_perf(perf_estimate(n, s, params, compiled=compiled)))
    return EXIT_OK


def cmd_inspect(args) -> int:
    c = load_image(args.image)
    print(f"rows per lane: {c.rows_per_lane}, null slots: {c.null_slots}")
    for k, h in enumerate(c.hns):
        print(f"hn {k}: neurons {h.lo}..{h.hi - 1 if h.hi > h.lo else h.lo} ({h.hi - h.lo}), rows {h.rows}, "
              f"nulls {h.layout.n_nulls}")
    return EXIT_OK


def cmd_generate(args) -> int:
    desc = random_network(args.neurons, args.in_degree, seed=args.seed, in_degree=args.distribution,
                          exc_fraction=args.exc_fraction)
    atomic_write_text(args.out, serialize_network(desc))
    print(f"{args.out}: {desc.n_neurons} neurons, {desc.n_synapses} synapses")
    return EXIT_OK


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.cmd == "perf":
            return cmd_perf(args, ap)
        return globals()[f"cmd_{args.cmd}"](args)
    except NumericalInstabilityError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_UNSTABLE
    except CompileError as e:
        print("error: network failed validation", file=sys.stderr)
        for v in e.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_FAIL
    except (NetworkFormatError, ImageError, DiffError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
