"""Command-line front end.

Subcommands: ``denoise``, ``deblur``, ``inpaint``, ``synth``, ``metrics``,
``analyze`` and ``replay``. Exit status is 0 on success, 2 on I/O failure,
3 on an invalid configuration and 4 when the solver aborts.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import admm, analysis, metrics, synth
from .imageio import load_image, save_image
from .problems import ProblemSpec, apply_blur, load_mask, parse_kernel
from .weights import parse_weight_mode

log = logging.getLogger("satvtv2")

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3, 4
MANIFEST_PREFIX = "# manifest: "
SOLVER_COMMANDS = ("denoise", "deblur", "inpaint")


class ConfigError(ValueError):
    pass


@dataclass
class RunManifest:
    """Everything needed to repeat one command."""

    command: str
    input: str | None = None
    output: str | None = None
    reference: str | None = None
    trace: str | None = None
    lam: float = 100.0
    r1: float = 1.0
    r2: float = 2.0
    mu: float = 0.0
    gamma: float = 0.0
    tau: float = 0.0
    h: float = 5.0
    max_iter: int = 300
    tol: float = 2e-3
    weights: str = "dynamic"
    enable_first: bool = True
    enable_second: bool = True
    kernel: str | None = None
    mask: str | None = None
    r3: float | None = None
    noise: float = 0.0
    seed: int | None = None
    deltas: bool = False
    timing: bool = False
    extra: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        data = json.loads(text)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown manifest keys: {sorted(unknown)}")
        return cls(**data)

    def solver_config(self, reference: np.ndarray | None) -> admm.SolverConfig:
        return admm.SolverConfig(
            lam=self.lam,
            r1=self.r1,
            r2=self.r2,
            mu=self.mu,
            gamma=self.gamma,
            tau=self.tau,
            h=self.h,
            max_iter=self.max_iter,
            tol=self.tol,
            weight_mode=parse_weight_mode(self.weights, reference),
            enable_first=self.enable_first,
            enable_second=self.enable_second,
        )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="observed image (.pgm or .png)")
    p.add_argument("-o", "--out", dest="output", required=True, help="restored image path")
    p.add_argument("--lambda", dest="lam", type=float, default=100.0, help="fidelity weight lambda (default 100)")
    p.add_argument("--r1", type=float, default=1.0)
    p.add_argument("--r2", type=float, default=2.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--h", type=float, default=5.0, help="mesh size (default 5)")
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--tol", type=float, default=2e-3)
    p.add_argument(
        "--weights",
        default="dynamic",
        help="dynamic | observed | oracle | constant:<alpha>:<beta> (oracle uses --ref)",
    )
    p.add_argument("--no-first", dest="enable_first", action="store_false", help="drop the first-order term")
    p.add_argument("--no-second", dest="enable_second", action="store_false", help="drop the second-order term")
    p.add_argument("--ref", dest="reference", help="clean image for PSNR/SSIM")
    p.add_argument("--trace", help="write the per-iteration CSV trace here")
    p.add_argument("--deltas", action="store_true", help="fill delta1/delta2 (runs the solver twice)")
    p.add_argument("--timing", action="store_true", help="record wall_ms (makes traces non-reproducible)")
    p.add_argument("--noise", type=float, default=0.0, help="add Gaussian noise of this std before solving")
    p.add_argument("--seed", type=int, help="noise seed (required with --noise)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="satvtv2", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub_denoise = sub.add_parser("denoise", help="Gaussian denoising")
    _solver_flags(sub_denoise)

    sub_deblur = sub.add_parser("deblur", help="deblurring with a known kernel")
    _solver_flags(sub_deblur)
    sub_deblur.add_argument("--kernel", required=True, help="gaussian:<size>:<sigma> or average:<size>")

    sub_inpaint = sub.add_parser("inpaint", help="inpainting of masked pixels")
    _solver_flags(sub_inpaint)
    sub_inpaint.add_argument("--mask", required=True, help="8-bit mask image; >= 128 marks a missing pixel")
    sub_inpaint.add_argument("--r3", type=float, default=0.005)

    sub_synth = sub.add_parser("synth", help="generate a synthetic test image")
    sub_synth.add_argument("scene", choices=("disk", "bars", "triangle"))
    sub_synth.add_argument("-o", "--out", dest="output")
    sub_synth.add_argument("--M", type=int)
    sub_synth.add_argument("--N", type=int)
    sub_synth.add_argument("--R", type=float, default=32.0, help="disk radius in pixels")
    sub_synth.add_argument("--contrast", type=float, default=100.0, help="disk height")
    sub_synth.add_argument("--blur", help="kernel applied before noise")
    sub_synth.add_argument("--noise", type=float, default=0.0)
    sub_synth.add_argument("--seed", type=int)
    sub_synth.add_argument("--clean-out", help="also write the undegraded scene")
    sub_synth.add_argument("--mask-fraction", type=float, default=0.0)
    sub_synth.add_argument("--mask-out", help="write a random missing-pixel mask here")

    sub_metrics = sub.add_parser("metrics", help="PSNR/SSIM of a candidate against a reference")
    sub_metrics.add_argument("reference")
    sub_metrics.add_argument("candidate")
    sub_metrics.add_argument("--header", action="store_true", help="print the column names first")

    sub_analyze = sub.add_parser("analyze", help="radial steepness sweep of the Weingarten integral")
    sub_analyze.add_argument("--R", type=float, default=32.0)
    sub_analyze.add_argument("--contrast", type=float, default=100.0)
    sub_analyze.add_argument("--factors", default=",".join(f"{x:g}" for x in analysis.SWEEP_FACTORS))
    sub_analyze.add_argument("-o", "--out", dest="output", help="CSV path (default stdout)")

    sub_replay = sub.add_parser("replay", help="rerun the command recorded in a trace file")
    sub_replay.add_argument("trace_file")
    sub_replay.add_argument("-o", "--out", dest="output", help="override the output image path")
    sub_replay.add_argument("--trace", help="override the trace path")
    return parser


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    names = {f.name for f in dataclasses.fields(RunManifest)} - {"extra", "command"}
    values = {k: v for k, v in vars(args).items() if k in names}
    extra = {k: v for k, v in vars(args).items() if k not in names | {"command", "verbose"}}
    return RunManifest(command=args.command, extra=extra, **values)


def _build_problem(m: RunManifest, shape: tuple[int, int]) -> ProblemSpec:
    if m.command == "denoise":
        return ProblemSpec.denoise()
    if m.command == "deblur":
        return ProblemSpec.deblur(parse_kernel(m.kernel))
    mask = load_mask(load_image(m.mask))
    if mask.shape != shape:
        raise ConfigError(f"mask shape {mask.shape} does not match image shape {shape}")
    return ProblemSpec.inpaint(mask, m.r3)


def write_trace(path: str | Path, manifest: RunManifest, trace: list[admm.TraceRecord]) -> None:
    buf = io.StringIO()
    buf.write(MANIFEST_PREFIX + manifest.to_json() + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(admm.TRACE_COLUMNS)
    for rec in trace:
        writer.writerow(rec.row())
    Path(path).write_text(buf.getvalue())


def read_trace(path: str | Path) -> tuple[RunManifest, list[dict[str, str]]]:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(MANIFEST_PREFIX):
        raise ConfigError(f"{path} has no embedded manifest")
    manifest = RunManifest.from_json(lines[0][len(MANIFEST_PREFIX) :])
    rows = list(csv.DictReader(lines[1:]))
    return manifest, rows


def cmd_solve(m: RunManifest) -> int:
    f = load_image(m.input)
    reference = load_image(m.reference) if m.reference else None
    if m.noise:
        if m.seed is None:
            raise ConfigError("--noise needs --seed")
        f = synth.add_gaussian_noise(f, synth.NoiseSpec(m.noise, m.seed))
    cfg = m.solver_config(reference)
    problem = _build_problem(m, f.shape)
    if m.deltas:
        u, trace, _ = admm.run_with_deltas(cfg, problem, f, reference, timing=m.timing)
    else:
        u, trace = admm.run(cfg, problem, f, reference, timing=m.timing)
    stored = save_image(m.output, u)
    if m.trace:
        write_trace(m.trace, m, trace)
    last = trace[-1]
    msg = f"{m.command}: {len(trace)} iterations, Ru={last.Ru:.3e}"
    if reference is not None:
        q = metrics.QualityReport.compare(reference, stored.astype(float))
        msg += f", psnr={metrics.format_value(q.psnr_db)}, ssim={metrics.format_value(q.ssim)}"
    print(msg)
    return EXIT_OK


def cmd_synth(m: RunManifest) -> int:
    x = m.extra
    scene = x["scene"]
    if scene == "disk":
        M = x.get("M") or int(round(4 * x["R"]))
        N = x.get("N") or M
        clean = synth.disk_image(M, N, x["R"], x["contrast"])
    elif scene == "bars":
        clean = synth.bars_image(x.get("M") or 128, x.get("N") or 128)
    else:
        clean = synth.triangle_image(x.get("M") or 254, x.get("N") or 214)
    if (m.noise or x.get("mask_out")) and m.seed is None:
        raise ConfigError("--seed is required with --noise or --mask-out")
    kernel = parse_kernel(x["blur"]) if x.get("blur") else None
    noise = synth.NoiseSpec(m.noise, m.seed) if m.noise else None
    out = synth.degrade(clean, kernel, noise)
    save_image(m.output or f"{scene}.pgm", out)
    if x.get("clean_out"):
        save_image(x["clean_out"], clean)
    if x.get("mask_out"):
        # a different stream from the noise so both can share one seed
        mask = synth.random_mask(clean.shape, x["mask_fraction"], m.seed + 1)
        save_image(x["mask_out"], np.where(mask, 255.0, 0.0))
    return EXIT_OK


def cmd_metrics(m: RunManifest) -> int:
    ref = load_image(m.extra["reference_path"])
    cand = load_image(m.extra["candidate"])
    q = metrics.QualityReport.compare(ref, cand)
    w = csv.writer(sys.stdout, lineterminator="\n")
    if m.extra.get("header"):
        w.writerow(("mse", "psnr", "ssim"))
    w.writerow(q.row())
    return EXIT_OK


SWEEP_COLUMNS = (
    "steepness", "integral", "target", "rel_error", "lower", "upper", "sandwich_ok",
    "tv", "tv_target", "fidelity", "fidelity_bound", "fidelity_ok",
)


def cmd_analyze(m: RunManifest) -> int:
    x = m.extra
    try:
        factors = [float(s) for s in x["factors"].split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"bad --factors {x['factors']!r}") from None
    rows = analysis.steepness_sweep(x["R"], x["contrast"], factors)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    fmt = metrics.format_value
    for r in rows:
        w.writerow(
            (
                fmt(r.steepness), fmt(r.integral), fmt(r.target), fmt(r.rel_error), fmt(r.lower), fmt(r.upper),
                int(r.sandwich_ok), fmt(r.tv), fmt(2 * np.pi * x["R"] * x["contrast"]), fmt(r.fidelity),
                fmt(r.fidelity_bound), int(r.fidelity_ok),
            )
        )
    if m.output:
        Path(m.output).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def execute(m: RunManifest) -> int:
    if m.command in SOLVER_COMMANDS:
        return cmd_solve(m)
    if m.command == "synth":
        return cmd_synth(m)
    if m.command == "metrics":
        return cmd_metrics(m)
    if m.command == "analyze":
        return cmd_analyze(m)
    raise ConfigError(f"unknown command {m.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "replay":
            m, _ = read_trace(args.trace_file)
            if args.output:
                m.output = args.output
            if args.trace:
                m.trace = args.trace
        else:
            if args.command == "metrics":
                args.reference_path = args.reference
                del args.reference
            m = manifest_from_args(args)
        return execute(m)
    except admm.SolverDiverged as exc:
        print(f"error: solver aborted: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, EOFError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
