"""Method-of-lines integration of the kinetic flows and dynamical diagnostics.

Derivatives in ``x`` and ``p`` are spectral; time stepping is classical RK4.
The two lowest flows have closed-form right-hand sides:

* Benney: ``f_y = p f_x - A0_x f_p``
* second flow: ``f_t = (p^2 + A0) f_x - (A0_x p + A1_x) f_p``

Any density from :mod:`dkp.hierarchy` defines a further flow.

Data whose Lax function is not monotone (for instance ``-0.5 exp(-x^2 - p^2)``)
make the linearised flows weakly unstable with growth proportional to the
wavenumber, so round-off in the top Fourier modes would grow without bound.
The stepper therefore applies a high-order exponential filter to every stage
right-hand side; resolved modes are untouched to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadConfig, CFLViolation, UnderResolved
from .grid import DECAY_TOL, Field, decay_report, integrate, spectral_derivative
from .hierarchy import DensitySpec, PowerLaw, _slice_data, _variational, density_per_slice, hamiltonian_rhs
from .singular import lambda_arrays

__all__ = [
    "FlowSpec",
    "Trajectory",
    "ExponentialFilter",
    "DEFAULT_FILTER",
    "CFL_LIMIT",
    "benney_rhs",
    "second_rhs",
    "flow_rhs",
    "cfl_number",
    "step_rk4",
    "advance",
    "evolve",
    "classical_densities",
    "relative_drift",
    "benney_moment_residual",
    "second_moment_residual",
    "dkp_residual",
    "commutativity_defect",
]

CFL_LIMIT = 0.5
MONITOR_K = 4


@dataclass(frozen=True)
class ExponentialFilter:
    """Fourier multiplier ``exp(-strength * (k / k_max) ** order)`` on both axes."""

    strength: float = 36.0
    order: int = 36

    def multiplier(self, n: int) -> np.ndarray:
        ratio = 2.0 * np.abs(np.fft.fftfreq(n))
        return np.exp(-self.strength * ratio**self.order)

    def __call__(self, values: np.ndarray) -> np.ndarray:
        out = values
        for axis in (0, 1):
            n = values.shape[axis]
            shape = [1, 1]
            shape[axis] = n
            out = np.fft.ifft(np.fft.fft(out, axis=axis) * self.multiplier(n).reshape(shape), axis=axis).real
        return out


DEFAULT_FILTER = ExponentialFilter()


@dataclass(frozen=True)
class FlowSpec:
    """``kind`` is ``"benney"``, ``"second"`` or ``"general"`` (with ``density``)."""

    kind: str
    density: DensitySpec | None = None

    def __post_init__(self):
        if self.kind not in ("benney", "second", "general"):
            raise BadConfig(f"flow.kind: unknown flow {self.kind!r}")
        if (self.kind == "general") != (self.density is not None):
            raise BadConfig("flow.general: a density is required exactly for general flows")

    @classmethod
    def benney(cls) -> "FlowSpec":
        return cls("benney")

    @classmethod
    def second(cls) -> "FlowSpec":
        return cls("second")

    @classmethod
    def general(cls, spec: DensitySpec) -> "FlowSpec":
        return cls("general", spec)

    def describe(self) -> str:
        return self.kind if self.density is None else f"general:{self.density.describe()}"


@dataclass
class Trajectory:
    """Monitored history of a run.

    ``moments[i]`` has shape ``(MONITOR_K + 1, n_x)`` and holds ``A^0..A^4``
    per x-slice at ``times[i]``. ``densities[i, j]`` is the x-integral of the
    j-th monitored density and ``density_scales[j]`` the initial x-integral of
    its absolute integrand (used when the density itself vanishes).
    """

    flow: FlowSpec
    dt: float
    times: np.ndarray
    moments: np.ndarray
    densities: np.ndarray
    density_specs: tuple
    density_scales: np.ndarray
    casimir: np.ndarray
    decay_ratios: np.ndarray
    snapshots: list = field(default_factory=list)
    snapshot_times: list = field(default_factory=list)
    status: str = "completed"

    @property
    def monitor_spacing(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0


def _a_moments(field_: Field, K: int) -> np.ndarray:
    return field_.moments(K).A


def benney_rhs(field_: Field) -> Field:
    grid = field_.grid
    fx, fp = field_.d_x(), field_.d_p()
    a0 = integrate(field_.values, grid.dp, axis=1)
    a0x = spectral_derivative(a0, grid.dx)
    return field_.with_values(grid.p[None, :] * fx - a0x[:, None] * fp)


def second_rhs(field_: Field) -> Field:
    grid = field_.grid
    fx, fp = field_.d_x(), field_.d_p()
    a = _a_moments(field_, 1)
    a0x = spectral_derivative(a[0], grid.dx)
    a1x = spectral_derivative(a[1], grid.dx)
    p = grid.p[None, :]
    return field_.with_values((p**2 + a[0][:, None]) * fx - (a0x[:, None] * p + a1x[:, None]) * fp)


def flow_rhs(field_: Field, flow: FlowSpec) -> Field:
    if flow.kind == "benney":
        return benney_rhs(field_)
    if flow.kind == "second":
        return second_rhs(field_)
    return hamiltonian_rhs(field_, flow.density)


def _speeds(field_: Field, flow: FlowSpec) -> tuple[float, float]:
    """Largest transport speeds along x and along p."""
    grid = field_.grid
    p = grid.p
    if flow.kind == "benney":
        a0 = integrate(field_.values, grid.dp, axis=1)
        return float(np.max(np.abs(p))), float(np.max(np.abs(spectral_derivative(a0, grid.dx))))
    if flow.kind == "second":
        a = _a_moments(field_, 1)
        a0x = spectral_derivative(a[0], grid.dx)
        a1x = spectral_derivative(a[1], grid.dx)
        sx = np.max(np.abs(p[None, :] ** 2 + a[0][:, None]))
        sp = np.max(np.abs(a0x[:, None] * p[None, :] + a1x[:, None]))
        return float(sx), float(sp)
    fv, fp, lam, lam_p = _slice_data(field_)
    u, up = _variational(fv, fp, lam, lam_p, flow.density.at_level(flow.density.n + 1))
    ux = spectral_derivative(u, grid.dx, axis=0)
    return float(np.max(np.abs(up))), float(np.max(np.abs(ux)))


def cfl_number(field_: Field, flow: FlowSpec, dt: float) -> float:
    """``|dt| * max(speed_x / dx, speed_p / dp)``."""
    sx, sp = _speeds(field_, flow)
    return abs(dt) * max(sx / field_.grid.dx, sp / field_.grid.dp)


def step_rk4(
    field_: Field,
    flow: FlowSpec,
    dt: float,
    check_cfl: bool = True,
    decay_tol: float = DECAY_TOL,
    spectral_filter: ExponentialFilter | None = DEFAULT_FILTER,
) -> Field:
    """One classical RK4 step (``dt`` may be negative to run a flow backwards).

    Pass ``spectral_filter=None`` to integrate the unfiltered right-hand side.
    """
    if check_cfl:
        c = cfl_number(field_, flow, dt)
        if c > CFL_LIMIT * (1 + 1e-12):
            raise CFLViolation(f"time.dt: CFL number {c:.4f} exceeds {CFL_LIMIT}")
    g = field_.grid
    u = field_.values
    filt = spectral_filter if spectral_filter is not None else (lambda v: v)

    def rhs(values):
        return filt(flow_rhs(Field(g, values), flow).values)

    k1 = rhs(u)
    k2 = rhs(u + 0.5 * dt * k1)
    k3 = rhs(u + 0.5 * dt * k2)
    k4 = rhs(u + dt * k3)
    out = Field(g, u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
    # only an axis that decayed before the step can be reached by the solution
    before = decay_report(field_, decay_tol).ratios
    after = decay_report(out, decay_tol).ratios
    reached = [axis for axis in after if after[axis] > decay_tol >= before[axis]]
    if reached:
        raise UnderResolved(f"evolve: solution reached the {'/'.join(reached)} boundary, ratios {after}")
    return out


def advance(
    field_: Field,
    flow: FlowSpec,
    duration: float,
    cfl: float = CFL_LIMIT,
    decay_tol: float = DECAY_TOL,
    spectral_filter: ExponentialFilter | None = DEFAULT_FILTER,
) -> Field:
    """Integrate over ``duration`` with the fewest equal substeps that satisfy the CFL bound."""
    if duration == 0.0:
        return field_
    steps = max(1, math.ceil(cfl_number(field_, flow, duration) / (0.9 * cfl)))
    dt = duration / steps
    out = field_
    for _ in range(steps):
        out = step_rk4(out, flow, dt, check_cfl=False, decay_tol=decay_tol, spectral_filter=spectral_filter)
    return out


def classical_densities(levels: Sequence[int] = (0, 1, 2, 3)) -> tuple:
    """Specs of ``(1/n!) int f lambda^n`` for the given levels."""
    return tuple(DensitySpec(PowerLaw(1), n) for n in levels)


def _integrated(field_: Field, spec: DensitySpec) -> float:
    return float(integrate(density_per_slice(field_, spec), field_.grid.dx))


def _abs_scale(field_: Field, spec: DensitySpec) -> float:
    grid = field_.grid
    lam, _ = lambda_arrays(field_.values, grid.dp, grid.p)
    integrand = np.abs(spec.h.value(field_.values) * lam**spec.n) / math.factorial(spec.n)
    return float(integrand.sum() * grid.dp * grid.dx)


def evolve(
    field_: Field,
    flow: FlowSpec,
    t_end: float,
    dt: float,
    monitor_every: int = 1,
    densities: Sequence[DensitySpec] | None = None,
    snapshot_every: int | None = None,
    gradient_factor: float = 1e3,
    decay_tol: float = DECAY_TOL,
    spectral_filter: ExponentialFilter | None = DEFAULT_FILTER,
) -> Trajectory:
    """Integrate to ``t_end`` with fixed step ``dt`` and record monitors.

    The run stops early with ``status="gradient_catastrophe"`` once
    ``max|f_x|`` exceeds ``gradient_factor`` times its initial value.
    """
    if not dt > 0:
        raise BadConfig("time.dt: must be > 0")
    if t_end < 0:
        raise BadConfig("time.t_end: must be >= 0")
    if int(monitor_every) != monitor_every or monitor_every < 1:
        raise BadConfig("time.monitor_every: must be an integer >= 1")
    n_steps = round(t_end / dt)
    if abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise BadConfig("time.dt: t_end must be an integer multiple of dt")
    specs = classical_densities() if densities is None else tuple(densities)
    c = cfl_number(field_, flow, dt)
    if c > CFL_LIMIT * (1 + 1e-12):
        raise CFLViolation(f"time.dt: CFL number {c:.4f} exceeds {CFL_LIMIT}")
    report = decay_report(field_, decay_tol)
    if not report.passed:
        raise UnderResolved(f"initial: boundary ratios {report.ratios} exceed {decay_tol:.1e}")

    grid = field_.grid
    times, moms, dens, cas, ratios = [], [], [], [], []
    snaps, snap_times = [], []

    def record(fl: Field, t: float):
        times.append(t)
        moms.append(_a_moments(fl, MONITOR_K))
        dens.append([_integrated(fl, s) for s in specs])
        cas.append(float(fl.values.sum() * grid.dx * grid.dp))
        r = decay_report(fl, decay_tol).ratios
        ratios.append([r["x"], r["p"]])

    grad0 = float(np.max(np.abs(field_.d_x())))
    status = "completed"
    current = field_
    record(current, 0.0)
    if snapshot_every:
        snaps.append(current)
        snap_times.append(0.0)
    for step in range(1, n_steps + 1):
        current = step_rk4(current, flow, dt, check_cfl=False, decay_tol=decay_tol, spectral_filter=spectral_filter)
        t = step * dt
        if step % monitor_every == 0:
            record(current, t)
        if snapshot_every and step % snapshot_every == 0:
            snaps.append(current)
            snap_times.append(t)
        if grad0 > 0 and np.max(np.abs(current.d_x())) > gradient_factor * grad0:
            status = "gradient_catastrophe"
            if step % monitor_every:
                record(current, t)
            break
    return Trajectory(
        flow=flow,
        dt=dt,
        times=np.array(times),
        moments=np.array(moms),
        densities=np.array(dens),
        density_specs=specs,
        density_scales=np.array([_abs_scale(field_, s) for s in specs]),
        casimir=np.array(cas),
        decay_ratios=np.array(ratios),
        snapshots=snaps,
        snapshot_times=snap_times,
        status=status,
    )


def relative_drift(traj: Trajectory) -> np.ndarray:
    """Max over time of ``|H(t) - H(0)|`` per density, relative to ``|H(0)|``.

    A density whose value is negligible against the x-integral of its absolute
    integrand (e.g. odd moments of even data) is measured against that scale.
    """
    h0 = traj.densities[0]
    scale = np.where(np.abs(h0) > 1e-8 * traj.density_scales, np.abs(h0), traj.density_scales)
    scale = np.where(scale > 0, scale, 1.0)
    return np.max(np.abs(traj.densities - h0), axis=0) / scale


def _time_derivative(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    tau = traj.monitor_spacing
    if len(traj.times) < 3:
        raise BadConfig("monitor: at least three monitor times are needed")
    a_t = (traj.moments[2:] - traj.moments[:-2]) / (2 * tau)
    return a_t, traj.moments[1:-1]


def _x_norm(values: np.ndarray, dx: float) -> np.ndarray:
    return np.sqrt(np.sum(values**2, axis=-1) * dx)


def benney_moment_residual(traj: Trajectory, k: int, dx: float) -> np.ndarray:
    """``||A^k_t - A^{k+1}_x - k A^{k-1} A^0_x||`` at interior monitor times."""
    if not 0 <= k <= 3:
        raise BadConfig("k: must be in 0..3")
    a_t, a = _time_derivative(traj)
    d = lambda v: spectral_derivative(v, dx)
    prev = a[:, k - 1] if k >= 1 else 0.0
    res = a_t[:, k] - d(a[:, k + 1]) - k * prev * d(a[:, 0])
    return _x_norm(res, dx)


def second_moment_residual(traj: Trajectory, k: int, dx: float) -> np.ndarray:
    """``||A^k_t - A^{k+2}_x - A^0 A^k_x - (k+1) A^k A^0_x - k A^{k-1} A^1_x||``."""
    if not 0 <= k <= 2:
        raise BadConfig("k: must be in 0..2")
    a_t, a = _time_derivative(traj)
    d = lambda v: spectral_derivative(v, dx)
    prev = a[:, k - 1] if k >= 1 else 0.0
    res = (
        a_t[:, k]
        - d(a[:, k + 2])
        - a[:, 0] * d(a[:, k])
        - (k + 1) * a[:, k] * d(a[:, 0])
        - k * prev * d(a[:, 1])
    )
    return _x_norm(res, dx)


def dkp_residual(field0: Field, dt: float, dy: float) -> float:
    """L2 norm in x of ``d_x(A0_t - A0 A0_x) - A0_yy`` at the stencil centre.

    ``A0(x, y, t)`` is sampled on the 3x3 stencil ``{-dy, 0, dy} x {-dt, 0, dt}``
    by running the Benney flow for ``y`` and then the second flow for ``t``.
    """
    grid = field0.grid
    benney, second = FlowSpec.benney(), FlowSpec.second()
    a0 = {}
    for iy, y in enumerate((-dy, 0.0, dy)):
        base = advance(field0, benney, y)
        for it, t in enumerate((-dt, 0.0, dt)):
            a0[iy, it] = integrate(advance(base, second, t).values, grid.dp, axis=1)
    centre = a0[1, 1]
    a0_t = (a0[1, 2] - a0[1, 0]) / (2 * dt)
    a0_yy = (a0[2, 1] - 2 * centre + a0[0, 1]) / dy**2
    inner = a0_t - centre * spectral_derivative(centre, grid.dx)
    res = spectral_derivative(inner, grid.dx) - a0_yy
    return float(_x_norm(res, grid.dx))


def commutativity_defect(field0: Field, dt: float, dy: float) -> float:
    """``||Y(dy) T(dt) f - T(dt) Y(dy) f|| / ||f||`` for one step of each flow."""
    norm = np.linalg.norm(field0.values)
    if norm == 0.0:
        return 0.0
    benney, second = FlowSpec.benney(), FlowSpec.second()
    yt = advance(advance(field0, second, dt), benney, dy)
    ty = advance(advance(field0, benney, dy), second, dt)
    return float(np.linalg.norm(yt.values - ty.values) / norm)
