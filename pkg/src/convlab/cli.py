"""Batch front end: load module/exponent files, run one computation, emit
tables, CSV profiles, skeleton graphs or SVG plots.

Exit status encodes the certified/flagged/error trichotomy: 0 when every
result is certified, 1 when the artifact was produced but carries flags
(uncertified spans, lower-bound-only radii), 2 on errors.  Flag lines go to
stderr so pipelines can enforce certification without parsing the artifact.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field

from .diffmod import frobenius_descendant
from .errors import ConvlabError, SchemaError
from .expo import liouville_partition, liouville_profile, constant_basis, fuchs_basis
from .radii import module_radii, radii_profile, spectral_radius_oracle
from .serialize import (
    basis_as_list,
    dump_json,
    exponent_input,
    exponent_report,
    fraction_str,
    module_as_dict,
    newton_as_dict,
    oracle_as_dict,
    parse_fraction_str,
    parse_module_file,
    poly_file_input,
    profile_as_dict,
    profile_csv,
    profile_svg,
    radii_report,
    skeleton_dot,
    skeleton_input,
)
from .valcore import newton_polygon

_REQUIRED = object()

# flag name -> default value (raw string), per command
_PARAMS = {
    "radii": {"r": _REQUIRED, "depth": "2"},
    "profile": {"r1": _REQUIRED, "r2": _REQUIRED, "grid": "32", "depth": "2"},
    "graph": {},
    "newton": {"r": _REQUIRED},
    "exponents": {"c": "1", "m-max": "12"},
    "descend": {},
    "oracle": {"r": _REQUIRED, "k-max": "64"},
    "fuchs": {"t-order": _REQUIRED, "step-budget": "64"},
    "constant-basis": {"iterations": _REQUIRED},
}

_OUTPUTS = {
    "radii": ("json",),
    "profile": ("csv", "json", "svg"),
    "graph": ("json", "dot"),
    "newton": ("json",),
    "exponents": ("json",),
    "descend": ("json",),
    "oracle": ("json",),
    "fuchs": ("json",),
    "constant-basis": ("json",),
}

COMMANDS = tuple(_PARAMS)


@dataclass(frozen=True)
class JobSpec:
    """One batch job: a command, an input file, string parameters and the
    output format.  Parameter values stay strings here; they are parsed
    exactly when the job runs."""

    command: str
    input_path: str
    params: dict = field(default_factory=dict)
    output: str = ""

    def __post_init__(self):
        if self.command not in _PARAMS:
            raise SchemaError(f"unknown command {self.command!r}")
        if not self.output:
            object.__setattr__(self, "output", _OUTPUTS[self.command][0])
        if self.output not in _OUTPUTS[self.command]:
            raise SchemaError(
                f"command {self.command!r} cannot emit {self.output!r} "
                f"(choose from {', '.join(_OUTPUTS[self.command])})")
        spec = _PARAMS[self.command]
        for key in self.params:
            if key not in spec:
                raise SchemaError(f"unknown parameter {key!r} "
                                  f"for command {self.command!r}")
        for key, default in spec.items():
            if default is _REQUIRED and key not in self.params:
                raise SchemaError(f"command {self.command!r} needs --{key}")

    def rational(self, key):
        raw = self.params.get(key, _PARAMS[self.command][key])
        return parse_fraction_str(raw, "--" + key)

    def integer(self, key) -> int:
        raw = self.params.get(key, _PARAMS[self.command][key])
        try:
            return int(raw)
        except ValueError as exc:
            raise SchemaError(f"not an integer: {raw!r}", "--" + key) from exc


@dataclass(frozen=True)
class JobResult:
    status: int
    artifact: str
    flags: tuple = ()


def _read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc


def emit_profile(obj, output: str = "csv") -> str:
    """Render a profile (or, for "dot", a skeleton) in the requested format."""
    if output == "csv":
        return profile_csv(obj)
    if output == "json":
        return dump_json(profile_as_dict(obj))
    if output == "svg":
        return profile_svg(obj)
    if output == "dot":
        return skeleton_dot(obj)
    raise SchemaError(f"unknown output format {output!r}")


def _profile_flags(profile) -> list:
    lines = [f"flag: {kind} at r = {fraction_str(x)}" for kind, x in profile.flags]
    for i, f in enumerate(profile.functions, start=1):
        for a, b, ok in zip(f.xs, f.xs[1:], f.certified):
            if not ok:
                lines.append(f"flag: uncertified span "
                             f"[{fraction_str(a)}, {fraction_str(b)}] in f_{i}")
    return lines


def _run_radii(job: JobSpec):
    M = parse_module_file(job.input_path)
    r = job.rational("r")
    ms = module_radii(M, r, depth=job.integer("depth"))
    flags = [f"flag: lower bound only at irlog >= {fraction_str(e.irlog)} "
             f"(multiplicity {e.multiplicity})"
             for e in ms.entries if not e.is_exact]
    return dump_json(radii_report(ms, r)), flags


def _run_profile(job: JobSpec):
    M = parse_module_file(job.input_path)
    prof = radii_profile(M, job.rational("r1"), job.rational("r2"),
                         grid=job.integer("grid"), depth=job.integer("depth"))
    return emit_profile(prof, job.output), _profile_flags(prof)


def _run_graph(job: JobSpec):
    skel = skeleton_input(_read_json(job.input_path))
    if job.output == "dot":
        return skeleton_dot(skel), []
    return dump_json(skel.as_dict()), []


def _run_newton(job: JobSpec):
    _, coeffs = poly_file_input(_read_json(job.input_path))
    polygon = newton_polygon(coeffs, job.rational("r"))
    return dump_json(newton_as_dict(polygon)), []


def _run_exponents(job: JobSpec):
    p, entries = exponent_input(_read_json(job.input_path))
    m_max = job.integer("m-max")
    verdicts = [liouville_profile(a, p, m_max) for a in entries]
    partition = liouville_partition(entries, p, c=job.rational("c"), m_max=m_max)
    flags = [f"flag: depth exhausted for entry {fraction_str(e)}"
             for e, v in zip(entries, verdicts) if v.status == "ConsistentToDepth"]
    if not partition.exact:
        flags.append(f"flag: partition undecided at depth {m_max}")
    return dump_json(exponent_report(p, entries, verdicts, partition)), flags


def _run_descend(job: JobSpec):
    M = parse_module_file(job.input_path)
    return dump_json(module_as_dict(frobenius_descendant(M))), []


def _run_oracle(job: JobSpec):
    M = parse_module_file(job.input_path)
    result = spectral_radius_oracle(M, job.rational("r"),
                                    k_max=job.integer("k-max"))
    return dump_json(oracle_as_dict(result)), []


def _run_fuchs(job: JobSpec):
    M = parse_module_file(job.input_path)
    t_order = job.integer("t-order")
    basis = fuchs_basis(M, t_order, step_budget=job.integer("step-budget"))
    return dump_json({"t_order": t_order, "basis": basis_as_list(basis)}), []


def _run_constant_basis(job: JobSpec):
    M = parse_module_file(job.input_path)
    result = constant_basis(M, job.integer("iterations"))
    return dump_json({"basis": basis_as_list(result.basis),
                      "residual": fraction_str(result.residual)}), []


_DISPATCH = {
    "radii": _run_radii,
    "profile": _run_profile,
    "graph": _run_graph,
    "newton": _run_newton,
    "exponents": _run_exponents,
    "descend": _run_descend,
    "oracle": _run_oracle,
    "fuchs": _run_fuchs,
    "constant-basis": _run_constant_basis,
}


def run(job: JobSpec) -> JobResult:
    """Execute one job.  Status 0: certified artifact; 1: artifact with
    flags; 2: error (no artifact)."""
    try:
        artifact, flags = _DISPATCH[job.command](job)
    except OSError as exc:
        return JobResult(2, "", (f"error: {exc}",))
    except ConvlabError as exc:
        return JobResult(2, "", (f"error: {type(exc).__name__}: {exc}",))
    return JobResult(1 if flags else 0, artifact, tuple(flags))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convlab",
        description="Exact convergence-radius computations on the p-adic disc.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for command, spec in _PARAMS.items():
        p = sub.add_parser(command)
        p.add_argument("input", help="input file (JSON)")
        for key, default in spec.items():
            if default is _REQUIRED:
                p.add_argument(f"--{key}", required=True)
            else:
                p.add_argument(f"--{key}", default=None,
                               help=f"default {default}")
        p.add_argument("--format", choices=_OUTPUTS[command],
                       default=_OUTPUTS[command][0])
        p.add_argument("--out", default=None, help="write artifact here "
                       "instead of stdout")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    spec = _PARAMS[args.command]
    params = {}
    for key in spec:
        value = getattr(args, key.replace("-", "_"))
        if value is not None:
            params[key] = value
    try:
        job = JobSpec(command=args.command, input_path=args.input,
                      params=params, output=args.format)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    result = run(job)
    for line in result.flags:
        print(line, file=sys.stderr)
    if result.status != 2:
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(result.artifact)
        else:
            sys.stdout.write(result.artifact)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
