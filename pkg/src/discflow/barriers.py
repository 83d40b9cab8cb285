"""Exact circular-arc barrier families and their evolution laws.

Two one-parameter families of circular arcs in the unit disc:

* Dirichlet-Neumann arcs through the pinned point o = (-d, 0), meeting the
  unit circle orthogonally at (cos(theta), sin(theta)); driven by the
  characteristic angle law d(theta)/dt = sin(theta)/(a + cos(theta)) they
  form a subsolution family for curve shortening flow.
* Neumann-Neumann arcs symmetric about the y-axis, meeting the circle
  orthogonally at (+-cos(theta), sin(theta)); with theta(t) = arcsin(e^{2t})
  they form a supersolution family.

Both facts are verified numerically by `verify_barrier_inequality`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BarrierViolation, DomainError

#: slack tolerance for analytically exact inequalities (round-off only)
SLACK_TOL = -1e-10

#: bisection bracket floor for the closed-form angle inversion
_THETA_LO = 1e-15
_BISECT_ITERS = 80


@dataclass(frozen=True)
class ProblemConfig:
    """Dirichlet offset d in (0, 1] and its derived coefficients
    a = (1/d + d)/2, b = (1/d - d)/2; a^2 - b^2 = 1 holds exactly."""

    d: float

    def __post_init__(self):
        if not (0.0 < self.d <= 1.0):
            raise DomainError(f"d must lie in (0, 1], got {self.d}")

    @property
    def a(self) -> float:
        return 0.5 * (1.0 / self.d + self.d)

    @property
    def b(self) -> float:
        return 0.5 * (1.0 / self.d - self.d)

    @property
    def origin(self) -> np.ndarray:
        return np.array([-self.d, 0.0])

    @property
    def omega(self) -> float:
        """Maximal time of the subsolution family: log 2 for d = 1, else inf."""
        return math.log(2.0) if self.b == 0.0 else math.inf


class ArcKind(Enum):
    DIRICHLET_NEUMANN = "dn"
    NEUMANN_NEUMANN = "nn"


@dataclass(frozen=True)
class ArcBarrier:
    kind: ArcKind
    theta: float
    center: np.ndarray
    radius: float

    def points(self, samples: int) -> np.ndarray:
        """Arc nodes sampled uniformly in the arc's own angle parameter,
        endpoints included."""
        cx, cy = self.center
        if self.kind is ArcKind.NEUMANN_NEUMANN:
            psi = np.linspace(-self.theta, self.theta, samples)
            # lower arc of the circle: (r sin(psi), eta - r cos(psi))
            return np.column_stack([self.radius * np.sin(psi),
                                    cy - self.radius * np.cos(psi)])
        # DN: from the Dirichlet point to the circle endpoint
        end = np.array([math.cos(self.theta), math.sin(self.theta)])
        psi1 = math.atan2(end[1] - cy, end[0] - cx)
        # the start angle is recovered from the known point o on the arc
        o = _dn_origin(self)
        psi0 = math.atan2(o[1] - cy, o[0] - cx)
        dpsi = (psi1 - psi0 + math.pi) % (2.0 * math.pi) - math.pi
        psi = psi0 + np.linspace(0.0, dpsi, samples)
        return np.column_stack([cx + self.radius * np.cos(psi),
                                cy + self.radius * np.sin(psi)])


def _dn_origin(barrier: ArcBarrier) -> np.ndarray:
    # the DN circle center sits at x = -a, so o = (-d, 0) is the larger of
    # the two y = 0 crossings
    cx, cy = barrier.center
    disc = barrier.radius ** 2 - cy ** 2
    return np.array([cx + math.sqrt(max(disc, 0.0)), 0.0])


def dn_arc(cfg: ProblemConfig, theta: float) -> ArcBarrier:
    """Dirichlet-Neumann arc through o meeting the circle orthogonally at
    (cos(theta), sin(theta)); radius (a + cos(theta))/sin(theta)."""
    if not (0.0 < theta < math.pi):
        raise DomainError(f"theta must lie in (0, pi), got {theta}")
    st, ct = math.sin(theta), math.cos(theta)
    r = (cfg.a + ct) / st
    center = np.array([ct - r * st, st + r * ct])
    return ArcBarrier(kind=ArcKind.DIRICHLET_NEUMANN, theta=theta,
                      center=center, radius=r)


def nn_arc(theta: float) -> ArcBarrier:
    """Neumann-Neumann arc: center (0, csc(theta)), radius cot(theta)."""
    if not (0.0 < theta < 0.5 * math.pi):
        raise DomainError(f"theta must lie in (0, pi/2), got {theta}")
    return ArcBarrier(kind=ArcKind.NEUMANN_NEUMANN, theta=theta,
                      center=np.array([0.0, 1.0 / math.sin(theta)]),
                      radius=1.0 / math.tan(theta))


def theta_plus(t):
    """Supersolution angle law theta(t) = arcsin(e^{2t}), t <= 0."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr > 0.0):
        raise DomainError("theta_plus requires t <= 0")
    out = np.arcsin(np.exp(2.0 * t_arr))
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def _log_profile(theta, a):
    # log of 2 sin^{1+a}(theta/2) cos^{1-a}(theta/2), monotone in theta
    half = 0.5 * theta
    return (math.log(2.0) + (1.0 + a) * np.log(np.sin(half))
            + (1.0 - a) * np.log(np.cos(half)))


def theta_minus(cfg: ProblemConfig, t):
    """Invert e^t = 2 sin^{1+a}(theta/2) cos^{1-a}(theta/2) on (0, pi).

    Bisection in log space to |dtheta| well below 1e-12; theta(0) = pi/2.
    For d = 1 the time domain is t < log 2, otherwise all of R (supported
    down to t around -70 by the fixed bracket floor).
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr >= cfg.omega):
        raise DomainError(f"theta_minus requires t < {cfg.omega}")
    a = cfg.a
    lo = np.full(t_arr.shape, _THETA_LO)
    hi = np.full(t_arr.shape, math.pi - 1e-15)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        too_big = _log_profile(mid, a) > t_arr
        hi = np.where(too_big, mid, hi)
        lo = np.where(too_big, lo, mid)
    out = 0.5 * (lo + hi)
    return float(out[0]) if np.isscalar(t) or np.asarray(t).ndim == 0 else out


def characteristic_rhs(cfg: ProblemConfig, theta):
    """Right-hand side of the characteristic angle law."""
    return np.sin(theta) / (cfg.a + np.cos(theta))


def characteristic_time(cfg: ProblemConfig, theta: float) -> float:
    """Time at which the subsolution angle reaches theta (inverse of
    theta_minus): t = log(2 sin^{1+a}(theta/2) cos^{1-a}(theta/2))."""
    if not (0.0 < theta < math.pi):
        raise DomainError(f"theta must lie in (0, pi), got {theta}")
    return float(_log_profile(theta, cfg.a))


def integrate_characteristic_ode(cfg: ProblemConfig, t_min: float, t_max: float,
                                 step: float = 1e-3):
    """RK4 integration of the characteristic angle law from theta(0) = pi/2.

    Returns (t_grid, theta_grid) covering [t_min, t_max] with 0 in range.
    Exists only as a cross-check of the closed-form inversion.
    """
    if t_min > 0.0 or t_max < 0.0:
        raise DomainError("integration range must contain t = 0")
    if t_max >= cfg.omega:
        raise DomainError("t_max beyond the family's maximal time")

    def rhs(th):
        return math.sin(th) / (cfg.a + math.cos(th))

    def march(t_stop, h):
        ts = [0.0]
        ys = [0.5 * math.pi]
        t_cur, y = 0.0, 0.5 * math.pi
        n = int(round(abs(t_stop) / abs(h)))
        for _ in range(n):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * h * k1)
            k3 = rhs(y + 0.5 * h * k2)
            k4 = rhs(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t_cur += h
            ts.append(t_cur)
            ys.append(y)
        return ts, ys

    ts_b, ys_b = march(t_min, -step) if t_min < 0.0 else ([0.0], [0.5 * math.pi])
    ts_f, ys_f = march(t_max, step) if t_max > 0.0 else ([0.0], [0.5 * math.pi])
    t_grid = np.array(ts_b[::-1] + ts_f[1:])
    theta_grid = np.array(ys_b[::-1] + ys_f[1:])
    return t_grid, theta_grid


@dataclass(frozen=True)
class BarrierReport:
    kind: ArcKind
    d: float
    t: float
    samples: int
    min_slack: float
    argmin_point: tuple[float, float]

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.kind.value,
            "d": self.d,
            "t": self.t,
            "samples": self.samples,
            "min_slack": self.min_slack,
            "argmin_point": list(self.argmin_point),
        }, sort_keys=True)


def dn_slack(cfg: ProblemConfig, theta: float, y) -> np.ndarray:
    """Subsolution slack kappa - normal speed = (sin(theta) - y)/(a + cos(theta))
    at height y on the DN arc."""
    return (math.sin(theta) - np.asarray(y)) / (cfg.a + math.cos(theta))


def nn_slack(theta: float, y) -> np.ndarray:
    """Supersolution slack (speed toward the center) - kappa at height y on
    the NN arc, with the angle law theta(t) = arcsin(e^{2t})."""
    eta = 1.0 / math.sin(theta)
    r = 1.0 / math.tan(theta)
    eta_th = -eta * r  # d(csc)/d(theta) = -csc*cot
    r_th = -eta * eta  # d(cot)/d(theta) = -csc^2
    theta_t = 2.0 * math.tan(theta)
    u = (np.asarray(y) - eta) / r
    speed_to_center = -(u * eta_th + r_th) * theta_t
    return speed_to_center - 1.0 / r


def verify_barrier_inequality(cfg: ProblemConfig, kind: ArcKind, t: float,
                              samples: int) -> BarrierReport:
    """Check the sub/supersolution inequality on one timeslice.

    For the DN family with theta = theta_minus(t), normal speed
    (y/sin(theta)) * theta'(t) must not exceed kappa = 1/r; for the NN
    family with theta = theta_plus(t) the speed toward the center must be
    at least kappa.  Raises BarrierViolation if any slack < -1e-10.
    """
    if samples < 16:
        raise DomainError("need at least 16 samples")
    if kind is ArcKind.DIRICHLET_NEUMANN:
        theta = theta_minus(cfg, t)
        barrier = dn_arc(cfg, theta)
        pts = barrier.points(samples)
        slack = dn_slack(cfg, theta, pts[:, 1])
    elif kind is ArcKind.NEUMANN_NEUMANN:
        if t >= 0.0:
            raise DomainError("NN family requires t < 0")
        theta = float(theta_plus(t))
        barrier = nn_arc(theta)
        pts = barrier.points(samples)
        slack = nn_slack(theta, pts[:, 1])
    else:
        raise DomainError(f"unknown arc kind {kind}")
    i_min = int(np.argmin(slack))
    min_slack = float(slack[i_min])
    report = BarrierReport(kind=kind, d=cfg.d, t=t, samples=samples,
                           min_slack=min_slack,
                           argmin_point=(float(pts[i_min, 0]), float(pts[i_min, 1])))
    if min_slack < SLACK_TOL:
        raise BarrierViolation(
            f"{kind.value} inequality violated at t={t}: slack {min_slack:.3e}",
            point=report.argmin_point, slack=min_slack)
    return report
