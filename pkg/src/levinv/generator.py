"""Synthetic instances with a planted parameter vector ``x_star``.

Random numbers come from numpy's Philox-4x64 counter-based generator.
Each quantity draws from its own stream keyed by ``(seed, stream id)``,
so adding or reordering draws for one quantity never changes another.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance import ProblemInstance, RegConfig, parse_sections, read_vector
from .leverage import eval_sigma_diag

STREAMS = {"A": 1, "x_star": 2, "s_star": 3, "noise": 4, "start": 5}
MAX_RESAMPLE = 100


def stream(seed: int, name: str | int) -> np.random.Generator:
    sid = STREAMS[name] if isinstance(name, str) else int(name)
    return np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), sid]))


@dataclass(frozen=True)
class GenConfig:
    n: int
    d: int
    seed: int = 0
    margin: float = 0.5
    mode: str = "pure"
    l: float = 1e-3
    beta: float = 0.05
    noise: float = 0.0

    def __post_init__(self):
        if not self.n >= self.d >= 1:
            raise ValueError(f"need n >= d >= 1, got n={self.n}, d={self.d}")
        if not self.margin > 0:
            raise ValueError("margin must be positive")
        if self.mode not in ("pure", "regularized"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")


@dataclass(frozen=True, eq=False)
class GroundTruth:
    x_star: np.ndarray
    s_star: np.ndarray
    seed: int
    margin: float
    sigma_min_A: float
    reg: RegConfig
    mode: str = "pure"
    extra: dict = field(default_factory=dict)


def _sample_A(cfg: GenConfig) -> np.ndarray:
    rng = stream(cfg.seed, "A")
    for _ in range(MAX_RESAMPLE):
        A = rng.standard_normal((cfg.n, cfg.d))
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-1] > 1e-10 * sv[0]:
            return A
    raise RuntimeError("could not sample a full-rank A; check n and d")


def gen_instance(cfg: GenConfig) -> tuple[ProblemInstance, RegConfig, GroundTruth]:
    """Sample ``A``, ``x_star`` and ``s_star``; set ``b = A x_star - s_star``.

    ``|s_star_i| = margin + |z_i|`` with random signs, so every entry of
    ``s(x_star)`` clears the margin. ``c`` is the leverage vector at
    ``x_star``, optionally with clipped Gaussian noise.
    """
    A = _sample_A(cfg)
    x_star = stream(cfg.seed, "x_star").standard_normal(cfg.d)
    rng = stream(cfg.seed, "s_star")
    mag = cfg.margin + np.abs(rng.standard_normal(cfg.n))
    sign = np.where(rng.random(cfg.n) < 0.5, -1.0, 1.0)
    s_star = sign * mag
    b = A @ x_star - s_star
    planted = ProblemInstance(A, b, np.zeros(cfg.n))
    c = eval_sigma_diag(planted, x_star)
    if cfg.noise > 0:
        c = np.clip(c + cfg.noise * stream(cfg.seed, "noise").standard_normal(cfg.n), 0.0, 1.0)
    inst = ProblemInstance(A, b, c)
    smin = float(np.linalg.svd(A, compute_uv=False)[-1])
    if cfg.mode == "pure":
        reg = RegConfig(np.zeros(cfg.n), l=0.0, beta=cfg.beta)
    else:
        reg = RegConfig.from_bound(A, cfg.l, cfg.beta)
    truth = GroundTruth(x_star, s_star, cfg.seed, cfg.margin, smin, reg, cfg.mode,
                        {"noise": cfg.noise})
    return inst, reg, truth


def perturb_start(x_star, rho: float, seed: int) -> np.ndarray:
    """``x_star + rho * u`` with ``u`` uniform on the unit sphere."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    x_star = np.asarray(x_star, dtype=float)
    u = stream(seed, "start").standard_normal(x_star.size)
    u /= np.linalg.norm(u)
    return x_star + rho * u


def _fmt(v):
    return format(float(v), ".17g")


def format_truth(truth: GroundTruth) -> str:
    lines = [
        "# planted ground truth",
        f"d={truth.x_star.size}",
        f"n={truth.s_star.size}",
        f"seed={truth.seed}",
        f"margin={_fmt(truth.margin)}",
        f"mode={truth.mode}",
        f"sigma_min_A={_fmt(truth.sigma_min_A)}",
        f"l={_fmt(truth.reg.l)}",
        f"beta={_fmt(truth.reg.beta)}",
        f"noise={_fmt(truth.extra.get('noise', 0.0))}",
        f"min_abs_s_star={_fmt(np.min(np.abs(truth.s_star)))}",
        "x_star:",
        " ".join(_fmt(v) for v in truth.x_star),
        "s_star:",
        " ".join(_fmt(v) for v in truth.s_star),
        "w:",
        " ".join(_fmt(v) for v in truth.reg.w),
    ]
    return "\n".join(lines) + "\n"


def parse_truth(text: str) -> GroundTruth:
    header, sections = parse_sections(text)
    d, n = int(header["d"]), int(header["n"])
    x_star = read_vector(sections, "x_star", d)
    s_star = read_vector(sections, "s_star", n)
    w = read_vector(sections, "w", n)
    reg = RegConfig(w, l=float(header.get("l", 0.0)), beta=float(header.get("beta", 0.05)))
    return GroundTruth(x_star, s_star, int(header.get("seed", 0)), float(header["margin"]),
                       float(header["sigma_min_A"]), reg, header.get("mode", "pure"),
                       {"noise": float(header.get("noise", 0.0))})
