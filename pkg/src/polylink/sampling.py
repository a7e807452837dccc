"""Density models on a polytope and reproducible i.i.d. point generation.

Sampling is rejection from the bounding box with a counter-based RNG (Philox),
so identical (polytope, density, n, seed) inputs give bit-identical clouds and
per-trial streams can be derived independently for parallel execution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial
from scipy.spatial import ConvexHull, QhullError

from .errors import ConfigurationError, SamplingEfficiencyError
from .geometry import Polytope

__all__ = [
    "DensityModel", "PointCloud",
    "uniform_density", "product_density", "grid_density", "make_density",
    "sample_points", "estimate_face_infimum",
    "derive_seed", "rng_from_seed", "check_normalization",
]

MAX_PROPOSAL_FACTOR = 10_000        # default proposal cap is this times n
_SEED_MASK = (1 << 64) - 1
_NORMALIZER_SAMPLES = 10 ** 6       # Monte Carlo normalizer for grid densities
_NORMALIZER_SEED = 913_862_943      # fixed: the normalizer is part of the model
_PROBE_DEFAULT = 4096               # Halton probes per face for estimated infima


def derive_seed(master_seed: int, *indices: int) -> int:
    """Deterministic 64-bit stream seed from (master_seed, *indices)."""
    entropy = [int(master_seed) & _SEED_MASK] + [int(i) & _SEED_MASK for i in indices]
    ss = np.random.SeedSequence(entropy)
    return int(ss.generate_state(1, np.uint64)[0])


def rng_from_seed(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed) & _SEED_MASK)))


@dataclass
class DensityModel:
    """Normalized density f on a polytope with sup bound and per-face infima.

    ``evaluate`` accepts one point (shape (d,)) or a batch ((m, d)) and returns
    normalized values.  ``per_face_inf`` maps face id -> inf of f over that
    face (the polytope's own face carries f0, the essential infimum over A).
    ``infima_estimated`` is True when the infima are probe minima (grid
    densities) rather than exact values.
    """

    kind: str
    polytope_key: str
    sup_bound: float
    f0: float
    f1: float
    per_face_inf: dict[int, float]
    infima_estimated: bool
    _eval: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __post_init__(self):
        if not self.f0 > 0:
            raise ConfigurationError(f"density needs f0 > 0, got {self.f0}")
        if self.f1 < self.f0 * (1 - 1e-12):
            raise ConfigurationError(f"f1={self.f1} below f0={self.f0}")

    def evaluate(self, x):
        pts = np.asarray(x, dtype=float)
        if pts.ndim == 1:
            return float(self._eval(pts[None])[0])
        return self._eval(pts)


@dataclass
class PointCloud:
    """n points in R^d plus the provenance that generated them."""

    dim: int
    points: np.ndarray
    seed: int
    polytope_id: str
    n_proposals: int = 0
    n_accepted: int = 0

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != self.dim:
            raise ValueError(f"points must be (n, {self.dim}), got {self.points.shape}")
        if len(self.points) < 1:
            raise ValueError("a point cloud needs at least one point")

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.n_proposals if self.n_proposals else float("nan")

    @classmethod
    def from_points(cls, points, *, seed: int = 0, polytope_id: str = "external") -> "PointCloud":
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"points must be a 2-d array, got shape {pts.shape}")
        return cls(dim=pts.shape[1], points=pts, seed=int(seed), polytope_id=polytope_id)


# -- density constructors --------------------------------------------------

def uniform_density(polytope: Polytope) -> DensityModel:
    """Uniform density 1/volume on the polytope; all infima exact."""
    c = 1.0 / polytope.volume
    per_face = {f.id: c for f in polytope.faces}
    return DensityModel(
        kind="uniform", polytope_key=polytope.key, sup_bound=c, f0=c, f1=c,
        per_face_inf=per_face, infima_estimated=False,
        _eval=lambda pts: np.full(len(pts), c),
    )


def _poly_extrema(coeffs, lo, hi):
    P = Polynomial(coeffs)
    cand = [lo, hi]
    dP = P.deriv()
    if dP.degree() >= 1 and np.any(dP.coef != 0):
        for r in dP.roots():
            if abs(r.imag) < 1e-12 and lo - 1e-12 <= r.real <= hi + 1e-12:
                cand.append(min(max(float(r.real), lo), hi))
    vals = [float(P(c)) for c in cand]
    return min(vals), max(vals)


def product_density(polytope: Polytope, factors) -> DensityModel:
    """Separable density prod_i g_i(x_i) on a box/hypercube, exactly normalized.

    ``factors`` is one polynomial-coefficient list per axis (ascending order,
    as in numpy.polynomial).  Each factor must be strictly positive on its
    axis range; infima over every face are exact (product of per-axis minima
    over the face's coordinate ranges).
    """
    if polytope.kind not in ("hypercube", "box"):
        raise ConfigurationError(
            f"product densities require a box/hypercube domain, got {polytope.kind}")
    d = polytope.dim
    factors = [list(map(float, f)) for f in factors]
    if len(factors) != d:
        raise ConfigurationError(f"need {d} factors, got {len(factors)}")
    lo, hi = polytope.bounding_box
    polys = [Polynomial(f) for f in factors]
    mins, maxs, integrals = [], [], []
    for i, f in enumerate(factors):
        m, M = _poly_extrema(f, float(lo[i]), float(hi[i]))
        if m <= 0:
            raise ConfigurationError(
                f"factor {i} is not strictly positive on [{lo[i]}, {hi[i]}] (min {m:.3g})")
        anti = polys[i].integ()
        integrals.append(float(anti(hi[i]) - anti(lo[i])))
        mins.append(m)
        maxs.append(M)
    Z = float(np.prod(integrals))

    def _eval(pts, _polys=polys, _Z=Z):
        vals = np.ones(len(pts))
        for i, P in enumerate(_polys):
            vals *= P(pts[:, i])
        return vals / _Z

    per_face = {}
    for face in polytope.faces:
        fv = polytope.vertices[list(face.vertex_ids)]
        prod_min = 1.0
        for i in range(d):
            a, b = float(fv[:, i].min()), float(fv[:, i].max())
            m, _ = _poly_extrema(factors[i], a, b)
            prod_min *= m
        per_face[face.id] = prod_min / Z
    f0 = per_face[polytope.top_face.id]
    f1 = min(per_face[f.id] for f in polytope.faces if f.dimension < d)
    return DensityModel(
        kind="product", polytope_key=polytope.key,
        sup_bound=float(np.prod(maxs)) / Z, f0=f0, f1=f1,
        per_face_inf=per_face, infima_estimated=False, _eval=_eval,
    )


def grid_density(polytope: Polytope, values, cells) -> DensityModel:
    """Piecewise-constant density on a regular grid over the bounding box.

    ``cells`` gives the grid resolution per axis; ``values`` the (flat or
    nested) strictly positive cell values.  The normalizer is Monte Carlo with
    a fixed internal seed, and per-face infima are Halton-probe minima, so the
    model reports infima_estimated=True.
    """
    d = polytope.dim
    cells = [int(c) for c in cells]
    if len(cells) != d or any(c < 1 for c in cells):
        raise ConfigurationError(f"cells must be {d} positive ints, got {cells}")
    vals = np.asarray(values, dtype=float).reshape(cells)
    if not np.isfinite(vals).all() or (vals <= 0).any():
        raise ConfigurationError("grid values must be finite and strictly positive")
    lo, hi = polytope.bounding_box
    span = hi - lo
    ncell = np.array(cells)

    def _raw(pts):
        idx = np.floor((pts - lo) / span * ncell).astype(int)
        np.clip(idx, 0, ncell - 1, out=idx)
        return vals[tuple(idx.T)]

    rng = rng_from_seed(_NORMALIZER_SEED)
    probe = lo + span * rng.random((_NORMALIZER_SAMPLES, d))
    inside = polytope.contains_many(probe)
    if not inside.any():
        raise ConfigurationError("normalizer Monte Carlo found no interior points")
    bbox_vol = float(span.prod())
    Z = bbox_vol * float(_raw(probe)[inside].sum()) / _NORMALIZER_SAMPLES
    if not Z > 0:
        raise ConfigurationError("grid density integrates to zero over the polytope")

    def _eval(pts, _Z=Z):
        return _raw(pts) / _Z

    f0_est = float(_raw(probe[inside]).min()) / Z
    model = DensityModel(
        kind="grid", polytope_key=polytope.key,
        sup_bound=float(vals.max()) / Z, f0=f0_est, f1=f0_est,
        per_face_inf={}, infima_estimated=True, _eval=_eval,
    )
    per_face = {}
    for face in polytope.faces:
        if face.dimension == d:
            per_face[face.id] = f0_est
        else:
            per_face[face.id] = _probe_face_min(model, polytope, face,
                                                _PROBE_DEFAULT, seed=0)
    model.per_face_inf = per_face
    model.f1 = min(per_face[f.id] for f in polytope.faces if f.dimension < d)
    model.f0 = min(f0_est, model.f1)
    return model


def make_density(spec, polytope: Polytope) -> DensityModel:
    """Build from a spec dict: {"kind": "uniform"} | {"kind": "product",
    "factors": [...]} | {"kind": "grid", "values": ..., "cells": [...]}."""
    if isinstance(spec, DensityModel):
        return spec
    if not isinstance(spec, dict):
        raise ConfigurationError(f"density spec must be a dict, got {type(spec)}")
    kind = spec.get("kind", "uniform")
    if kind == "uniform":
        return uniform_density(polytope)
    if kind == "product":
        if "factors" not in spec:
            raise ConfigurationError("product density spec needs 'factors'")
        return product_density(polytope, spec["factors"])
    if kind == "grid":
        if "values" not in spec or "cells" not in spec:
            raise ConfigurationError("grid density spec needs 'values' and 'cells'")
        return grid_density(polytope, spec["values"], spec["cells"])
    raise ConfigurationError(f"unknown density kind {kind!r}")


def check_normalization(density: DensityModel, polytope: Polytope, *,
                        samples: int = _NORMALIZER_SAMPLES, seed: int = 0) -> float:
    """Monte Carlo estimate of the integral of f over the polytope (should be 1)."""
    rng = rng_from_seed(seed)
    lo, hi = polytope.bounding_box
    pts = lo + (hi - lo) * rng.random((int(samples), polytope.dim))
    inside = polytope.contains_many(pts)
    vals = np.where(inside, density.evaluate(pts), 0.0)
    return float((hi - lo).prod()) * float(vals.mean())


# -- sampling --------------------------------------------------------------

def sample_points(polytope: Polytope, density: DensityModel, n: int, seed: int,
                  *, max_proposals: int | None = None) -> PointCloud:
    """n i.i.d. draws from the density by rejection from the bounding box.

    Deterministic in (polytope, density, n, seed).  Raises
    SamplingEfficiencyError when sup_bound is non-positive or the proposal
    budget (default 10^4 * n) is exhausted before n acceptances.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if density.polytope_key != polytope.key:
        raise ConfigurationError("density was built for a different polytope")
    sup = float(density.sup_bound)
    if not (math.isfinite(sup) and sup > 0):
        raise SamplingEfficiencyError(f"sup_bound must be positive, got {sup}")
    cap = int(max_proposals) if max_proposals is not None else MAX_PROPOSAL_FACTOR * n
    d = polytope.dim
    lo, hi = polytope.bounding_box
    span = hi - lo
    rng = rng_from_seed(seed)
    batch = int(min(max(n, 8192), 1_000_000))
    proposals = 0
    accepted_total = 0
    kept: list[np.ndarray] = []
    short = n
    while short > 0:
        if proposals >= cap:
            rate = accepted_total / proposals if proposals else 0.0
            raise SamplingEfficiencyError(
                f"rejection sampling exceeded {cap} proposals with "
                f"{accepted_total} acceptances (rate {rate:.2e})")
        pts = lo + span * rng.random((batch, d))
        u = rng.random(batch)
        accept = (u * sup < density.evaluate(pts)) & polytope.contains_many(pts)
        proposals += batch
        accepted_total += int(accept.sum())
        sel = pts[accept]
        if len(sel):
            kept.append(sel)
            short -= len(sel)
    points = np.concatenate(kept)[:n]
    return PointCloud(dim=d, points=points, seed=int(seed),
                      polytope_id=polytope.describe(),
                      n_proposals=proposals, n_accepted=accepted_total)


# -- face infima -----------------------------------------------------------

def _halton(count: int, dims: int, start: int = 0) -> np.ndarray:
    """Halton sequence points in [0,1)^dims, indices start+1 .. start+count."""
    primes = (2, 3, 5, 7, 11, 13)
    if dims > len(primes):
        raise ValueError(f"Halton probe supports up to {len(primes)} dimensions")
    idx = np.arange(start + 1, start + count + 1, dtype=np.int64)
    out = np.empty((count, dims))
    for j in range(dims):
        p = primes[j]
        i = idx.copy()
        f = 1.0
        r = np.zeros(count)
        while i.max() > 0:
            f /= p
            r += f * (i % p)
            i //= p
        out[:, j] = r
    return out


def _face_probe_points(polytope: Polytope, face, n_probe: int, start: int) -> np.ndarray:
    D = face.dimension
    d = polytope.dim
    fverts = polytope.vertices[list(face.vertex_ids)]
    anchors = np.vstack([fverts, face.relative_interior_point[None]])
    if D == 0:
        return anchors
    if D == d:
        lo, hi = polytope.bounding_box
        raw = lo + (hi - lo) * _halton(4 * n_probe, d, start)
        pts = raw[polytope.contains_many(raw)][:n_probe]
        return np.vstack([anchors, pts]) if len(pts) else anchors
    x0 = fverts[0]
    rel = fverts[1:] - x0
    _, s, vt = np.linalg.svd(rel, full_matrices=False)
    basis = vt[:D]  # orthonormal rows spanning the face
    local = rel @ basis.T
    local = np.vstack([np.zeros(D), local])
    lo, hi = local.min(0), local.max(0)
    if D == 1:
        t = lo + (hi - lo) * _halton(n_probe, 1, start)
        return np.vstack([anchors, x0 + t @ basis])
    try:
        lhull = ConvexHull(local)
    except QhullError:
        return anchors
    eq = lhull.equations
    raw = lo + (hi - lo) * _halton(4 * n_probe, D, start)
    ok = (raw @ eq[:, :D].T + eq[:, D] <= 1e-12).all(1)
    sel = raw[ok][:n_probe]
    return np.vstack([anchors, x0 + sel @ basis]) if len(sel) else anchors


def _probe_face_min(density: DensityModel, polytope: Polytope, face,
                    n_probe: int, seed: int) -> float:
    pts = _face_probe_points(polytope, face, int(n_probe), int(seed))
    vals = density.evaluate(pts)
    return float(np.min(vals))


def estimate_face_infimum(density: DensityModel, polytope: Polytope, face,
                          n_probe: int = _PROBE_DEFAULT, seed: int = 0) -> float:
    """Infimum of the density over a face.

    Exact (from the model) for uniform and product densities; otherwise the
    minimum over n_probe Halton points on the face plus its vertices, which
    is an upper bound on the true infimum.  ``seed`` offsets the Halton index.
    """
    from .geometry import _resolve_face
    f = _resolve_face(polytope, face)
    if int(n_probe) < 1:
        raise ValueError(f"n_probe must be >= 1, got {n_probe}")
    if density.kind in ("uniform", "product"):
        return density.per_face_inf[f.id]
    return _probe_face_min(density, polytope, f, n_probe, seed)
