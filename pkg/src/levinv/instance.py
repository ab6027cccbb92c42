"""Problem data: the matrix ``A``, offset ``b`` and target leverage vector ``c``.

Instances are immutable. They can be written to and read from a small
self-describing text format::

    # optional comments
    n=3
    d=2
    A:
    1.0 0.5
    ...            (n rows of d numbers)
    b:
    0.1 0.2 0.3    (n numbers, any line breaks)
    c:
    0.5 0.5 1.0    (n numbers, any line breaks)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InstanceFormatError

RANK_RTOL = 1e-10


def _frozen(a, ndim):
    arr = np.array(a, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Inputs of the inversion problem.

    Construction only checks that shapes agree; the remaining invariants
    (rank, range of ``c``) are reported by :func:`validate`.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = _frozen(self.A, 2)
        b = _frozen(self.b, 1)
        c = _frozen(self.c, 1)
        n = A.shape[0]
        if b.shape != (n,) or c.shape != (n,):
            raise ValueError(
                f"inconsistent shapes: A {A.shape}, b {b.shape}, c {c.shape}"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def with_target(self, c) -> "ProblemInstance":
        return ProblemInstance(self.A, self.b, c)


@dataclass(frozen=True, eq=False)
class RegConfig:
    """Regularization weights ``w`` for ``0.5 * ||diag(w) A x||^2``.

    ``l`` is the strong-convexity level the weights were chosen for and
    ``beta`` the well-posedness margin used in the weight bound; both are
    bookkeeping only when ``w`` is supplied directly.
    """

    w: np.ndarray
    l: float = 0.0
    beta: float = 0.05

    def __post_init__(self):
        w = _frozen(self.w, 1)
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("regularization weights must be finite and nonnegative")
        object.__setattr__(self, "w", w)

    @classmethod
    def zero(cls, n: int) -> "RegConfig":
        return cls(np.zeros(n))

    @classmethod
    def from_bound(cls, A, l: float, beta: float, margin: float = 1e-12) -> "RegConfig":
        """Smallest uniform weights with ``w_i^2 >= -44 beta + l / sigma_min(A)^2``."""
        if l <= 0:
            raise ValueError("l must be positive")
        if not 0 < beta < 0.1:
            raise ValueError("beta must lie in (0, 0.1)")
        smin = np.linalg.svd(np.asarray(A, dtype=float), compute_uv=False)[-1]
        w2 = max(0.0, -44.0 * beta + l / smin**2) + margin
        return cls(np.full(np.asarray(A).shape[0], math.sqrt(w2)), l=l, beta=beta)

    @property
    def is_pure(self) -> bool:
        return not np.any(self.w)

    def satisfies_bound(self, A) -> bool:
        smin = np.linalg.svd(np.asarray(A, dtype=float), compute_uv=False)[-1]
        need = max(0.0, -44.0 * self.beta + self.l / smin**2)
        return bool(np.all(self.w**2 >= need))


@dataclass(frozen=True)
class SolveSettings:
    """Run-level settings shared by the command line and scripted runs."""

    method: str = "newton"
    max_iter: int = 50
    tol: float = 1e-12
    step: str = "fixed"
    eta: float | None = None
    alpha: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("gd", "newton"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.step not in ("fixed", "schedule"):
            raise ValueError(f"unknown step policy {self.step!r}")


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()
    rank: int = 0
    trace_target: float = field(default=float("nan"))

    @property
    def ok(self) -> bool:
        return not self.errors


def validate(inst: ProblemInstance) -> ValidationReport:
    """Check the instance invariants without raising."""
    errors = []
    warnings = []
    n, d = inst.n, inst.d
    if d < 1:
        errors.append("d must be at least 1")
    if n < d:
        errors.append(f"need n >= d, got n={n}, d={d}")
    for name in ("A", "b", "c"):
        if not np.all(np.isfinite(getattr(inst, name))):
            errors.append(f"{name} has non-finite entries")

    rank = 0
    if d >= 1 and np.all(np.isfinite(inst.A)):
        sv = np.linalg.svd(inst.A, compute_uv=False)
        rank = int(np.sum(sv > RANK_RTOL * sv[0])) if sv.size and sv[0] > 0 else 0
        if rank < d:
            errors.append(f"A is rank deficient: rank {rank} < d = {d}")

    bad = np.flatnonzero((inst.c < 0) | (inst.c > 1))
    if bad.size:
        errors.append(f"c entries outside [0, 1] at indices {bad.tolist()}")

    total = float(np.sum(inst.c))
    if abs(total - d) > 1e-8:
        warnings.append(f"target is not realizable: sum(c) = {total:.12g} != d = {d}")
    return ValidationReport(tuple(errors), tuple(warnings), rank, total)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def format_instance(inst: ProblemInstance, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {line}" for line in comment.splitlines())
    lines.append(f"n={inst.n}")
    lines.append(f"d={inst.d}")
    lines.append("A:")
    lines.extend(" ".join(_fmt(v) for v in row) for row in inst.A)
    lines.append("b:")
    lines.append(" ".join(_fmt(v) for v in inst.b))
    lines.append("c:")
    lines.append(" ".join(_fmt(v) for v in inst.c))
    return "\n".join(lines) + "\n"


def save_instance(inst: ProblemInstance, path, comment: str | None = None) -> None:
    Path(path).write_text(format_instance(inst, comment), encoding="utf-8")


def _parse_number(tok: str, where: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise InstanceFormatError(f"{where}: cannot parse {tok!r} as a number") from None
    if not math.isfinite(v):
        raise InstanceFormatError(f"{where}: non-finite value {tok!r}")
    return v


def parse_sections(text: str) -> tuple[dict[str, str], dict[str, list[list[str]]]]:
    """Split the text format into ``key=value`` headers and named sections.

    Each section is a list of token rows, one per non-empty line.
    """
    header: dict[str, str] = {}
    sections: dict[str, list[list[str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.endswith(":") and " " not in line:
            current = line[:-1]
            if current in sections:
                raise InstanceFormatError(f"line {lineno}: duplicate section {current!r}")
            sections[current] = []
        elif "=" in line and current is None:
            key, _, value = line.partition("=")
            header[key.strip()] = value.strip()
        elif current is None:
            raise InstanceFormatError(f"line {lineno}: data outside of a section")
        else:
            sections[current].append(line.split())
    return header, sections


def _header_int(header, key):
    if key not in header:
        raise InstanceFormatError(f"missing header {key}=")
    try:
        return int(header[key])
    except ValueError:
        raise InstanceFormatError(f"header {key} is not an integer: {header[key]!r}") from None


def read_vector(sections, name, length):
    if name not in sections:
        raise InstanceFormatError(f"missing section {name}:")
    toks = [t for row in sections[name] for t in row]
    if len(toks) != length:
        raise InstanceFormatError(f"section {name}: expected {length} values, got {len(toks)}")
    return np.array([_parse_number(t, f"section {name}") for t in toks])


def parse_instance(text: str) -> ProblemInstance:
    header, sections = parse_sections(text)
    n = _header_int(header, "n")
    d = _header_int(header, "d")
    if n < 1 or d < 1:
        raise InstanceFormatError(f"n and d must be positive, got n={n}, d={d}")
    if "A" not in sections:
        raise InstanceFormatError("missing section A:")
    rows = sections["A"]
    if len(rows) != n:
        raise InstanceFormatError(f"section A: expected {n} rows, got {len(rows)}")
    A = np.empty((n, d))
    for i, row in enumerate(rows):
        if len(row) != d:
            raise InstanceFormatError(f"section A row {i}: expected {d} values, got {len(row)}")
        A[i] = [_parse_number(t, f"section A row {i}") for t in row]
    b = read_vector(sections, "b", n)
    c = read_vector(sections, "c", n)
    return ProblemInstance(A, b, c)


def load_instance(path) -> ProblemInstance:
    return parse_instance(Path(path).read_text(encoding="utf-8"))
