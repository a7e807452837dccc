"""Limit constants for the normalized thresholds, face by face.

Both thresholds obey the same first-order law: with beta = lim k(n)/log n,

    beta < inf:   n * T^d / log n  ->  max over faces of  hhat_beta(D/d) / (f * rho)
    beta = inf:   n * T^d / k(n)   ->  max over faces of  1 / (f * rho)

where D is the face dimension, rho its angular volume, and f the density
infimum over the face.  ``limit_constant`` evaluates this over the whole face
lattice; the polygon/polyhedron/hypercube variants evaluate specialized
closed forms (shared boundary infima f1/f_j instead of per-face values) and
must agree on the max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .geometry import Polytope, angular_volume, dihedral_angle, unit_ball_volume
from .rates import BetaMode, hhat
from .sampling import DensityModel

__all__ = [
    "FaceContribution", "LimitReport",
    "limit_constant", "limit_constant_polygon",
    "limit_constant_polyhedron", "limit_constant_hypercube",
]

ARGMAX_REL_TOL = 1e-9


@dataclass(frozen=True)
class FaceContribution:
    face_id: int
    dimension: int
    angular_volume: float
    density_inf: float
    contribution: float


@dataclass
class LimitReport:
    """Per-face contributions, their max, and which faces attain it."""

    beta: BetaMode
    per_face: list[FaceContribution]
    constant: float
    argmax_faces: list[int]
    normalization: str        # "per log n" (beta < inf) or "per k(n)" (beta = inf)
    infima_estimated: bool

    def to_dict(self) -> dict:
        return {
            "beta": str(self.beta),
            "constant": self.constant,
            "argmax_faces": list(self.argmax_faces),
            "normalization": self.normalization,
            "infima_estimated": self.infima_estimated,
            "per_face": [
                {"face_id": c.face_id, "dimension": c.dimension,
                 "angular_volume": c.angular_volume, "density_inf": c.density_inf,
                 "contribution": c.contribution}
                for c in self.per_face
            ],
        }


def _finish(beta: BetaMode, contribs: list[FaceContribution],
            estimated: bool) -> LimitReport:
    constant = max(c.contribution for c in contribs)
    if not (math.isfinite(constant) and constant > 0):
        raise ConfigurationError(f"limit constant came out as {constant!r}")
    argmax = [c.face_id for c in contribs
              if c.contribution > 0
              and c.contribution >= constant * (1.0 - ARGMAX_REL_TOL)]
    norm = "per k(n)" if beta.is_infinite else "per log n"
    return LimitReport(beta=beta, per_face=contribs, constant=constant,
                       argmax_faces=argmax, normalization=norm,
                       infima_estimated=estimated)


def _face_inf(density: DensityModel, face_id: int) -> float:
    f = density.per_face_inf.get(face_id)
    if f is None or not f > 0:
        raise ConfigurationError(f"density has no positive infimum for face {face_id}")
    return f


def limit_constant(polytope: Polytope, density: DensityModel,
                   beta: BetaMode) -> LimitReport:
    """The general limit over the whole face lattice.

    Uses each face's own density infimum and angular volume.  With beta = 0,
    vertices contribute 0 (hhat(0, 0) = 0) and are recorded but can never be
    argmax; the full-dimensional face keeps the constant positive.
    """
    beta = BetaMode.parse(beta)
    d = polytope.dim
    contribs = []
    for face in polytope.faces:
        rho = angular_volume(polytope, face)
        f = _face_inf(density, face.id)
        if beta.is_infinite:
            c = 1.0 / (f * rho)
        else:
            c = hhat(beta.beta, face.dimension / d) / (f * rho)
        contribs.append(FaceContribution(face.id, face.dimension, rho, f, c))
    return _finish(beta, contribs, density.infima_estimated)


def _require_finite(beta: BetaMode) -> float:
    beta = BetaMode.parse(beta)
    if beta.is_infinite:
        raise ValueError("the specialized closed forms require finite beta; "
                         "use limit_constant for the beta = inf regime")
    return beta.beta


def limit_constant_polygon(polytope: Polytope, density: DensityModel,
                           beta: BetaMode) -> LimitReport:
    """Closed d=2 form: max(hhat_b(1)/(pi f0), 2 hhat_b(1/2)/(pi f1),
    max over vertices of 2b/(omega_v f(v)))."""
    b = _require_finite(beta)
    if polytope.dim != 2:
        raise ValueError(f"polygon form needs d=2, got d={polytope.dim}")
    f0, f1 = density.f0, density.f1
    contribs = []
    for face in polytope.faces:
        rho = angular_volume(polytope, face)
        if face.dimension == 2:
            f, c = f0, hhat(b, 1.0) / (math.pi * f0)
        elif face.dimension == 1:
            f, c = f1, 2.0 * hhat(b, 0.5) / (math.pi * f1)
        else:
            omega = 2.0 * rho
            f = density.evaluate(polytope.vertices[face.vertex_ids[0]])
            c = 2.0 * b / (omega * f)
        contribs.append(FaceContribution(face.id, face.dimension, rho, f, c))
    return _finish(BetaMode.finite(b), contribs, density.infima_estimated)


def limit_constant_polyhedron(polytope: Polytope, density: DensityModel,
                              beta: BetaMode) -> LimitReport:
    """Closed d=3 form: max(hhat_b(1)/(theta3 f0), 2 hhat_b(2/3)/(theta3 f1),
    3 hhat_b(1/3)/(2 min_e alpha_e f_e), max over vertices of b/(rho_v f(v)))."""
    b = _require_finite(beta)
    if polytope.dim != 3:
        raise ValueError(f"polyhedron form needs d=3, got d={polytope.dim}")
    theta3 = unit_ball_volume(3)
    f0, f1 = density.f0, density.f1
    contribs = []
    for face in polytope.faces:
        rho = angular_volume(polytope, face)
        if face.dimension == 3:
            f, c = f0, hhat(b, 1.0) / (theta3 * f0)
        elif face.dimension == 2:
            f, c = f1, 2.0 * hhat(b, 2.0 / 3.0) / (theta3 * f1)
        elif face.dimension == 1:
            alpha = dihedral_angle(polytope, face)
            f = _face_inf(density, face.id)
            c = 3.0 * hhat(b, 1.0 / 3.0) / (2.0 * alpha * f)
        else:
            f = density.evaluate(polytope.vertices[face.vertex_ids[0]])
            c = b / (rho * f)
        contribs.append(FaceContribution(face.id, face.dimension, rho, f, c))
    return _finish(BetaMode.finite(b), contribs, density.infima_estimated)


def _is_unit_hypercube(polytope: Polytope) -> bool:
    if polytope.kind not in ("hypercube", "box"):
        return False
    lo, hi = polytope.bounding_box
    return bool(np.all(lo == 0.0) and np.all(hi == 1.0))


def limit_constant_hypercube(polytope: Polytope, density: DensityModel,
                             beta: BetaMode) -> LimitReport:
    """Closed unit-hypercube form: max over codimension j of
    2^j hhat_b(1 - j/d) / (theta_d f_j), with f_j the infimum over the
    codimension-j faces (f_0 over the interior)."""
    b = _require_finite(beta)
    if not _is_unit_hypercube(polytope):
        raise ValueError("hypercube form needs the unit hypercube [0,1]^d")
    d = polytope.dim
    theta = unit_ball_volume(d)
    f_by_codim = {0: density.f0}
    for j in range(1, d + 1):
        f_by_codim[j] = min(_face_inf(density, f.id)
                            for f in polytope.faces_of_dimension(d - j))
    contribs = []
    for face in polytope.faces:
        j = d - face.dimension
        fj = f_by_codim[j]
        c = 2 ** j * hhat(b, (d - j) / d) / (theta * fj)
        contribs.append(FaceContribution(face.id, face.dimension,
                                         angular_volume(polytope, face), fj, c))
    return _finish(BetaMode.finite(b), contribs, density.infima_estimated)
