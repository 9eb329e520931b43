"""Exact JSON/CSV/DOT/SVG serialization of the core objects.

Every number travels as an exact rational string "num/den" (integers drop
the denominator, infinities are "inf"/"-inf"); the only floating point in
the package is SVG pixel coordinates.  Parsers validate shapes strictly and
report violations with JSON-pointer paths.  Emit and parse are exact
inverses on module files.
"""

import csv
import io
import json
from fractions import Fraction

from .diffmod import DiffModule
from .errors import ParameterError, SchemaError
from .valcore import INF, NEG_INF, FieldMode, LaurentPoly

DERIVATIONS = ("ddt", "t_ddt")


def fraction_str(x) -> str:
    if x == INF:
        return "inf"
    if x == NEG_INF:
        return "-inf"
    return str(Fraction(x))


def parse_fraction_str(s, pointer: str = ""):
    if isinstance(s, int) and not isinstance(s, bool):
        return Fraction(s)
    if not isinstance(s, str):
        raise SchemaError(f"expected a rational string, got {s!r}", pointer)
    text = s.strip()
    if text == "inf":
        return INF
    if text == "-inf":
        return NEG_INF
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"not a rational: {s!r}", pointer) from exc


def _require_keys(d: dict, required, optional=(), pointer: str = ""):
    if not isinstance(d, dict):
        raise SchemaError(f"expected an object, got {type(d).__name__}", pointer)
    for k in required:
        if k not in d:
            raise SchemaError(f"missing key {k!r}", pointer)
    for k in d:
        if k not in required and k not in optional:
            raise SchemaError(f"unknown key {k!r}", pointer)


# -- field modes ---------------------------------------------------------------------


def mode_as_dict(mode: FieldMode) -> dict:
    if mode.kind == "padic":
        return {"mode": "padic", "p": mode.p}
    return {"mode": "eqchar0", "prec": mode.prec}


def mode_from_dict(d, pointer: str = "") -> FieldMode:
    _require_keys(d, ("mode",), ("p", "prec"), pointer)
    kind = d["mode"]
    if kind == "padic":
        _require_keys(d, ("mode", "p"), (), pointer)
        if not isinstance(d["p"], int) or isinstance(d["p"], bool):
            raise SchemaError("p must be an integer", pointer + "/p")
        try:
            return FieldMode.padic(d["p"])
        except ParameterError as exc:
            raise SchemaError(str(exc), pointer + "/p") from exc
    if kind == "eqchar0":
        _require_keys(d, ("mode",), ("prec",), pointer)
        prec = d.get("prec", 16)
        if not isinstance(prec, int) or isinstance(prec, bool):
            raise SchemaError("prec must be an integer", pointer + "/prec")
        try:
            return FieldMode.eqchar0(prec)
        except ParameterError as exc:
            raise SchemaError(str(exc), pointer + "/prec") from exc
    raise SchemaError(f"unknown mode {kind!r}", pointer + "/mode")


# -- scalars and Laurent polynomials ---------------------------------------------------


def scalar_as_json(s):
    """Rational scalars travel as strings, series scalars as u-support maps."""
    if s.mode.kind == "padic":
        return fraction_str(s.frac)
    if all(n == 0 for n in s.series) and s.known_to is INF:
        return fraction_str(s.series.get(0, Fraction(0)))
    return {str(n): fraction_str(c) for n, c in sorted(s.series.items())}


def scalar_from_json(v, mode: FieldMode, pointer: str = ""):
    if isinstance(v, (str, int)):
        return mode.scalar(parse_fraction_str(v, pointer))
    if isinstance(v, dict):
        if mode.kind != "eqchar0":
            raise SchemaError("series coefficients need eqchar0 mode", pointer)
        series = {}
        for key, c in v.items():
            try:
                n = int(key)
            except ValueError as exc:
                raise SchemaError(f"bad series exponent {key!r}",
                                  pointer + "/" + key) from exc
            series[n] = parse_fraction_str(c, pointer + "/" + key)
        return mode.series_scalar(series)
    raise SchemaError(f"bad coefficient {v!r}", pointer)


def poly_as_dict(f: LaurentPoly) -> dict:
    return {str(n): scalar_as_json(c) for n, c in sorted(f.coeffs.items())}


def poly_from_json(v, mode: FieldMode, pointer: str = "") -> LaurentPoly:
    """Canonical form maps exponent strings to coefficients; a bare rational
    string is accepted as shorthand for a constant."""
    if isinstance(v, (str, int)):
        return LaurentPoly.constant(mode, parse_fraction_str(v, pointer))
    if not isinstance(v, dict):
        raise SchemaError(f"bad polynomial {v!r}", pointer)
    coeffs = {}
    for key, c in v.items():
        try:
            n = int(key)
        except ValueError as exc:
            raise SchemaError(f"bad exponent {key!r}", pointer + "/" + key) from exc
        coeffs[n] = scalar_from_json(c, mode, pointer + "/" + key)
    return LaurentPoly(mode, coeffs)


# -- differential modules ---------------------------------------------------------------


def module_as_dict(M: DiffModule) -> dict:
    return {
        "mode": mode_as_dict(M.mode),
        "derivation": M.derivation,
        "interval": {"r_min": fraction_str(M.interval[0]),
                     "r_max": fraction_str(M.interval[1])},
        "matrix": [[poly_as_dict(e) for e in row] for row in M.matrix],
    }


def module_from_dict(d, pointer: str = "") -> DiffModule:
    _require_keys(d, ("mode", "derivation", "interval", "matrix"), (), pointer)
    mode = mode_from_dict(d["mode"], pointer + "/mode")
    derivation = d["derivation"]
    if derivation not in DERIVATIONS:
        raise SchemaError(f"derivation must be one of {DERIVATIONS}",
                          pointer + "/derivation")
    _require_keys(d["interval"], ("r_min", "r_max"), (), pointer + "/interval")
    r_min = parse_fraction_str(d["interval"]["r_min"], pointer + "/interval/r_min")
    r_max = parse_fraction_str(d["interval"]["r_max"], pointer + "/interval/r_max")
    if not r_min <= r_max:
        raise SchemaError("need r_min <= r_max", pointer + "/interval")
    rows = d["matrix"]
    if not isinstance(rows, list) or not rows or \
            any(not isinstance(row, list) or len(row) != len(rows) for row in rows):
        raise SchemaError("matrix must be square and nonempty", pointer + "/matrix")
    matrix = [[poly_from_json(e, mode, f"{pointer}/matrix/{i}/{j}")
               for j, e in enumerate(row)] for i, row in enumerate(rows)]
    if r_max == INF:
        for i, row in enumerate(matrix):
            for j, e in enumerate(row):
                if not e.is_zero() and e.min_exp() < 0:
                    raise SchemaError(
                        "pole at the center conflicts with r_max = inf",
                        f"{pointer}/matrix/{i}/{j}")
    return DiffModule(mode, derivation, (r_min, r_max), matrix)


def parse_module_file(path) -> DiffModule:
    """Load and validate one module file; schema violations carry
    JSON-pointer paths."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    return module_from_dict(data)


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# -- reports ------------------------------------------------------------------------------


def radii_report(ms, r) -> dict:
    report = {
        "r": fraction_str(r),
        "irlog": [[fraction_str(e.irlog), e.multiplicity]
                  for e in ms.entries if e.is_exact],
        "exact": ms.fully_exact,
    }
    bounds = [[fraction_str(e.irlog), e.multiplicity]
              for e in ms.entries if not e.is_exact]
    if bounds:
        report["lower_bounds"] = bounds
    return report


def profile_as_dict(profile) -> dict:
    return {
        "r1": fraction_str(profile.r1),
        "r2": fraction_str(profile.r2),
        "rank": profile.rank,
        "functions": [f.as_dict() for f in profile.functions],
        "flags": [[kind, fraction_str(x)] for kind, x in profile.flags],
    }


def profile_csv(profile) -> str:
    """One row per breakpoint (union over the curves; the curves share
    sample points, so this is their common domain)."""
    points = set()
    for f in profile.functions:
        points.update(f.xs)
    points = sorted(points)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["r"] + [f"f_{i}" for i in range(1, profile.rank + 1)])
    for x in points:
        writer.writerow([fraction_str(x)]
                        + [fraction_str(f.evaluate(x)) for f in profile.functions])
    return out.getvalue()


_SVG_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def profile_svg(profile, width: int = 480, height: int = 320) -> str:
    """Polyline per curve; uncertified pieces are dashed.  The only place
    floating point is allowed to appear."""
    pad = 40
    xs_all = sorted({x for f in profile.functions for x in f.xs})
    ys_all = [y for f in profile.functions for y in f.ys]
    x_lo, x_hi = xs_all[0], xs_all[-1]
    y_lo, y_hi = min(ys_all), max(ys_all)
    if y_hi == y_lo:
        y_hi = y_lo + 1
    span_x = x_hi - x_lo
    span_y = y_hi - y_lo

    def px(x):
        return pad + float((x - x_lo) / span_x) * (width - 2 * pad)

    def py(y):
        return height - pad - float((y - y_lo) / span_y) * (height - 2 * pad)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" '
        f'height="{height - 2 * pad}" fill="none" stroke="#999"/>',
    ]
    for i, f in enumerate(profile.functions):
        color = _SVG_PALETTE[i % len(_SVG_PALETTE)]
        for j in range(len(f.xs) - 1):
            dash = '' if f.certified[j] else ' stroke-dasharray="6 4"'
            lines.append(
                f'<line x1="{px(f.xs[j]):.3f}" y1="{py(f.ys[j]):.3f}" '
                f'x2="{px(f.xs[j + 1]):.3f}" y2="{py(f.ys[j + 1]):.3f}" '
                f'stroke="{color}" fill="none"{dash}/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# -- skeleta ------------------------------------------------------------------------------


def skeleton_input(d, pointer: str = ""):
    """Parse a skeleton description: mode, root radius and ball generators."""
    from .berkdisc import DiscPoint, Skeleton

    _require_keys(d, ("mode", "root_radius_log", "generators"), (), pointer)
    mode = mode_from_dict(d["mode"], pointer + "/mode")
    root = parse_fraction_str(d["root_radius_log"], pointer + "/root_radius_log")
    gens = []
    if not isinstance(d["generators"], list) or not d["generators"]:
        raise SchemaError("need a nonempty generator list", pointer + "/generators")
    for i, g in enumerate(d["generators"]):
        gp = f"{pointer}/generators/{i}"
        _require_keys(g, ("center",), ("radius_log",), gp)
        center = parse_fraction_str(g["center"], gp + "/center")
        if "radius_log" in g:
            gens.append(DiscPoint.ball(
                mode, center, parse_fraction_str(g["radius_log"], gp + "/radius_log")))
        else:
            gens.append(DiscPoint.rational(mode, center))
    return Skeleton(mode, root, gens)


def skeleton_dot(skel) -> str:
    d = skel.as_dict()

    def label(v):
        parts = [v["type"], f"center {v['center']}"]
        if "radius_log" in v:
            parts.append(f"r {v['radius_log']}")
        return "\\n".join(parts)

    lines = ["digraph skeleton {"]
    for i, v in enumerate(d["vertices"]):
        lines.append(f'  v{i} [label="{label(v)}"];')
    for e in d["edges"]:
        r_end = "inf" if e["r_end"] is None else e["r_end"]
        lines.append(f'  v{e["parent"]} -> v{e["child"]} '
                     f'[label="[{e["r_start"]}, {r_end}]"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- polynomials and polygons ---------------------------------------------------------------


def poly_file_input(d, pointer: str = ""):
    _require_keys(d, ("mode", "coeffs"), (), pointer)
    mode = mode_from_dict(d["mode"], pointer + "/mode")
    if not isinstance(d["coeffs"], list) or not d["coeffs"]:
        raise SchemaError("need a nonempty coefficient list", pointer + "/coeffs")
    return mode, [poly_from_json(c, mode, f"{pointer}/coeffs/{i}")
                  for i, c in enumerate(d["coeffs"])]


def newton_as_dict(polygon) -> dict:
    return {
        "degree": polygon.degree,
        "entries": [[fraction_str(v), m] for v, m in polygon.entries],
    }


# -- exponent reports --------------------------------------------------------------------------


def exponent_input(d, pointer: str = ""):
    _require_keys(d, ("p", "entries"), (), pointer)
    if not isinstance(d["p"], int) or isinstance(d["p"], bool):
        raise SchemaError("p must be an integer", pointer + "/p")
    if not isinstance(d["entries"], list) or not d["entries"]:
        raise SchemaError("need a nonempty entry list", pointer + "/entries")
    entries = [parse_fraction_str(e, f"{pointer}/entries/{i}")
               for i, e in enumerate(d["entries"])]
    return d["p"], entries


def exponent_report(p, entries, verdicts, partition) -> dict:
    return {
        "p": p,
        "entries": [fraction_str(e) for e in entries],
        "verdicts": [{
            "entry": fraction_str(e),
            "status": v.status,
            "profile": [[m, s] for m, s in v.profile],
            "note": v.note,
        } for e, v in zip(entries, verdicts)],
        "partition": {
            "blocks": [[fraction_str(x) for x in block]
                       for block in partition.blocks],
            "exact": partition.exact,
        },
    }


# -- oracle and solver outputs -------------------------------------------------------------------


def oracle_as_dict(result) -> dict:
    return {
        "r": fraction_str(result.r),
        "k_max": result.k_max,
        "irlog": fraction_str(result.irlog),
        "estimates": [[k, fraction_str(v)] for k, v in result.estimates],
    }


def basis_as_list(matrix) -> list:
    return [[poly_as_dict(e) for e in row] for row in matrix]
