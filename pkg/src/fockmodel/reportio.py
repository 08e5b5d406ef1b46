"""Canonical config/report serialization.

One structured-text grammar (JSON subset) for both scenario configs and
verification reports: object keys sorted, floats printed with 17
significant digits, complex numbers as [re, im] pairs, matrices as
row-major nested arrays, words as 1-based integer arrays.  Emission is
byte-stable: the same report canonicalizes to the same bytes.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .freeseries import NcSeries, NcSeriesTuple


class SchemaError(ValueError):
    """Config or report payload violates the documented grammar."""


class IoError(OSError):
    """Reading or writing a config/report file failed."""


# ---------------------------------------------------------------------------
# canonical JSON
# ---------------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    x = float(x)
    if not np.isfinite(x):
        raise SchemaError(f"non-finite float {x!r} has no canonical form")
    if x == 0.0:
        x = 0.0          # normalize -0.0
    return format(x, ".16e")


def _canon(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return f"[{_fmt_float(obj.real)}, {_fmt_float(obj.imag)}]"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, np.ndarray):
        return _canon(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_canon(v) for v in obj) + "]"
    if isinstance(obj, dict):
        parts = []
        for k in sorted(obj):
            if not isinstance(k, str):
                raise SchemaError(f"non-string key {k!r}")
            parts.append(f"{json.dumps(k, ensure_ascii=True)}: {_canon(obj[k])}")
        return "{" + ", ".join(parts) + "}"
    raise SchemaError(f"cannot canonicalize {type(obj).__name__}")


def canonical_json(obj) -> str:
    return _canon(obj) + "\n"


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# matrix / series codecs
# ---------------------------------------------------------------------------

def encode_complex(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def decode_complex(obj) -> complex:
    if not (isinstance(obj, (list, tuple)) and len(obj) == 2):
        raise SchemaError(f"complex scalar must be [re, im], got {obj!r}")
    return complex(float(obj[0]), float(obj[1]))


def encode_matrix(A) -> list:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise SchemaError("matrices are 2-d row-major arrays")
    return [[encode_complex(v) for v in row] for row in A.tolist()]


def decode_matrix(obj) -> np.ndarray:
    try:
        return np.array([[decode_complex(v) for v in row] for row in obj],
                        dtype=complex)
    except (TypeError, ValueError) as e:
        raise SchemaError(f"bad matrix payload: {e}") from None


def encode_vector(v) -> list:
    return [encode_complex(x) for x in np.asarray(v, dtype=complex).ravel()]


def encode_series(s: NcSeries) -> list:
    """Term list [[word, [re, im]], ...] sorted by graded-lex word order."""
    items = sorted(s.coeffs.items(), key=lambda kv: (len(kv[0]), kv[0]))
    return [[list(w), encode_complex(c)] for w, c in items]


def decode_series(obj, n: int, degree: int) -> NcSeries:
    coeffs = {}
    try:
        for w, c in obj:
            coeffs[tuple(int(l) for l in w)] = decode_complex(c)
    except (TypeError, ValueError) as e:
        raise SchemaError(f"bad series payload: {e}") from None
    return NcSeries(n, degree, coeffs)


def encode_series_tuple(F: NcSeriesTuple) -> list:
    return [encode_series(f) for f in F]


def decode_series_tuple(obj, n: int, degree: int) -> NcSeriesTuple:
    if len(obj) != n:
        raise SchemaError(f"series tuple needs {n} components, got {len(obj)}")
    return NcSeriesTuple(tuple(decode_series(c, n, degree) for c in obj))


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckRecord:
    name: str
    value: float
    tolerance: float
    margin_used: object        # int or None
    passed: bool

    def to_payload(self) -> dict:
        return {"name": self.name, "value": float(self.value),
                "tolerance": float(self.tolerance),
                "margin_used": self.margin_used, "pass": bool(self.passed)}


@dataclass(frozen=True)
class Report:
    meta: dict
    checks: tuple
    artifacts: dict = field(default_factory=dict)

    def __post_init__(self):
        names = [c.name for c in self.checks]
        if len(set(names)) != len(names):
            dups = sorted({x for x in names if names.count(x) > 1})
            raise SchemaError(f"duplicate check names: {dups}")

    @property
    def overall_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def canonical(self) -> "Report":
        """Byte-stable form: checks sorted by name, timings zeroed."""
        meta = dict(self.meta)
        if "timings" in meta:
            meta["timings"] = {k: 0.0 for k in sorted(meta["timings"])}
        checks = tuple(sorted(self.checks, key=lambda c: c.name))
        return Report(meta, checks, dict(self.artifacts))

    def to_payload(self) -> dict:
        return {"meta": self.meta,
                "checks": [c.to_payload() for c in self.checks],
                "artifacts": self.artifacts,
                "overall_pass": self.overall_pass}


def report_from_payload(payload: dict) -> Report:
    try:
        checks = tuple(CheckRecord(c["name"], float(c["value"]),
                                   float(c["tolerance"]), c["margin_used"],
                                   bool(c["pass"]))
                       for c in payload["checks"])
        return Report(payload["meta"], checks, payload.get("artifacts", {}))
    except (KeyError, TypeError) as e:
        raise SchemaError(f"bad report payload: {e}") from None


def render_table(report: Report) -> str:
    rows = [("check", "value", "tolerance", "margin", "pass")]
    for c in sorted(report.checks, key=lambda c: c.name):
        rows.append((c.name, f"{c.value:.3e}", f"{c.tolerance:.1e}",
                     "-" if c.margin_used is None else str(c.margin_used),
                     "PASS" if c.passed else "FAIL"))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = ["  ".join(r[i].ljust(widths[i]) for i in range(5)).rstrip()
             for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    n_pass = sum(c.passed for c in report.checks)
    lines.append("")
    meta = report.meta
    lines.append(f"config {meta.get('config_hash', '?')}  "
                 f"seed {meta.get('seed', '?')}")
    for k, v in sorted(meta.get("timings", {}).items()):
        lines.append(f"  {k}: {v:.2f}s")
    lines.append(f"overall: {'PASS' if report.overall_pass else 'FAIL'} "
                 f"({n_pass}/{len(report.checks)})")
    return "\n".join(lines) + "\n"


def emit_report(report: Report, path, fmt: str = "json") -> None:
    """Write the canonical JSON rendering (or the human table) to path;
    path=None writes nothing and is only useful through format_report."""
    text = format_report(report, fmt)
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as e:
        raise IoError(f"cannot write report to {path}: {e}") from None


def format_report(report: Report, fmt: str = "json") -> str:
    if fmt == "json":
        return canonical_json(report.canonical().to_payload())
    if fmt == "table":
        return render_table(report)
    raise SchemaError(f"unknown report format {fmt!r}")


def parse_report(path) -> Report:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as e:
        raise IoError(f"cannot read report from {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise SchemaError(f"report file is not valid JSON: {e}") from None
    return report_from_payload(payload)
