"""History of the boundary trace w(t) = u_xx(t, 0) and its weighted integrals.

The transported variable z(t, rho, s) = w(t - rho*s) never needs separate
storage: every functional of z reduces, by the change of variable
sigma = rho*s, to integrals of w over [t - tau2, t].  The buffer keeps w
samples at the solver step size; the lags tau1, tau2 need not be multiples
of dt (endpoint cells use linear interpolation).  Gain factors beta, |beta|
are applied by callers.
"""

from __future__ import annotations

import math

import numpy as np

from .model import MemoryKernel


class HistoryBuffer:
    """Ring of w samples at spacing dt covering at least [t_now - tau2, t_now].

    Single-writer: the time loop pushes once per completed step.  Snapshots
    (`copy`) are handed to any concurrent diagnostic consumer.
    """

    def __init__(self, dt: float, tau2: float, samples: np.ndarray, t_now: float = 0.0):
        self.dt = dt
        self.tau2 = tau2
        self.maxlen = math.ceil(tau2 / dt) + 3
        samples = np.asarray(samples, dtype=float)
        if len(samples) > self.maxlen:
            samples = samples[-self.maxlen:]
        self._w = samples.copy()      # oldest first; _w[-1] is w(t_now)
        self.t_now = t_now
        if self.span < tau2:
            raise ValueError("initial history does not span tau2")

    @classmethod
    def from_initial(cls, z0, dt: float, tau2: float) -> "HistoryBuffer":
        """Sample the initial history z0(t), t in (-tau2, 0], once at setup."""
        k = math.ceil(tau2 / dt) + 2
        times = -dt * np.arange(k, -1, -1)
        return cls(dt, tau2, np.array([float(z0(t)) for t in times]), t_now=0.0)

    @property
    def span(self) -> float:
        return (len(self._w) - 1) * self.dt

    def times(self) -> np.ndarray:
        return self.t_now - self.dt * np.arange(len(self._w) - 1, -1, -1)

    def copy(self) -> "HistoryBuffer":
        return HistoryBuffer(self.dt, self.tau2, self._w, self.t_now)

    def push(self, w_new: float) -> None:
        if len(self._w) >= self.maxlen:
            self._w = np.append(self._w[1:], w_new)
        else:
            self._w = np.append(self._w, w_new)
        self.t_now += self.dt

    def w_at(self, t):
        """Linear interpolation of the stored history at time(s) t."""
        t = np.asarray(t, dtype=float)
        t0 = self.t_now - self.span
        eps = 1e-9 * self.dt
        if np.any(t < t0 - eps) or np.any(t > self.t_now + eps):
            raise ValueError("requested time outside the stored history span")
        out = np.interp(t, self.times(), self._w)
        return out if out.ndim else float(out)


def _lag_nodes(buf: HistoryBuffer, lo: float, hi: float, t_eval: float) -> np.ndarray:
    """Lag grid on [lo, hi] aligned with the sample times, endpoints included."""
    # sigma = t_eval - sample_time lands on (t_eval - t_now) + k*dt
    off = t_eval - buf.t_now
    k0 = math.ceil((lo - off) / buf.dt - 1e-12)
    k1 = math.floor((hi - off) / buf.dt + 1e-12)
    nodes = off + buf.dt * np.arange(k0, k1 + 1)
    nodes = nodes[(nodes > lo + 1e-15) & (nodes < hi - 1e-15)]
    return np.concatenate(([lo], nodes, [hi]))


def memory_integral(buf: HistoryBuffer, kernel: MemoryKernel,
                    t_eval: float | None = None) -> float:
    """int_{tau1}^{tau2} lam(sigma) w(t - sigma) d sigma (no beta factor)."""
    t = buf.t_now if t_eval is None else t_eval
    if t - kernel.tau2 < buf.t_now - buf.span - 1e-9 * buf.dt:
        raise ValueError("insufficient history span for the memory integral")
    s = _lag_nodes(buf, kernel.tau1, kernel.tau2, t)
    vals = np.asarray(kernel(s)) * buf.w_at(t - s)
    return float(np.trapezoid(vals, s))


def _cumulative_w2(buf: HistoryBuffer, kernel: MemoryKernel, weight, t: float):
    """sigma grid on [0, tau2] and G(s) = int_0^s weight(sig) w(t-sig)^2 dsig."""
    s = _lag_nodes(buf, 0.0, kernel.tau2, t)
    vals = weight(s) * buf.w_at(t - s) ** 2
    G = np.concatenate(([0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(s))))
    return s, G


def z_energy(buf: HistoryBuffer, kernel: MemoryKernel, weight: str = "plain",
             delta: float = 0.0, t_eval: float | None = None) -> float:
    """Double integral int lam(s) int_0^s W(sigma) w(t-sigma)^2 dsigma ds.

    W = 1 for weight='plain' (the memory part of the energy), or
    W = exp(-delta*sigma) for weight='exp' (the E2 functional).
    The |beta| factor is applied by the caller.
    """
    t = buf.t_now if t_eval is None else t_eval
    if t - kernel.tau2 < buf.t_now - buf.span - 1e-9 * buf.dt:
        raise ValueError("insufficient history span for the memory energy")
    if weight == "plain":
        W = lambda s: np.ones_like(s)
    elif weight == "exp":
        W = lambda s: np.exp(-delta * s)
    else:
        raise ValueError(f"unknown weight {weight!r}")
    sig, G = _cumulative_w2(buf, kernel, W, t)
    s = _lag_nodes(buf, kernel.tau1, kernel.tau2, t)
    vals = np.asarray(kernel(s)) * np.interp(s, sig, G)
    return float(np.trapezoid(vals, s))


def z_boundary_norm(buf: HistoryBuffer, kernel: MemoryKernel, delta: float = 0.0,
                    t_eval: float | None = None) -> float:
    """int lam(s) exp(-delta*s) w(t-s)^2 ds (the z(t,1,s) boundary term)."""
    return trace_sq_integral(buf, kernel, weight="exp", delta=delta, t_eval=t_eval)


def trace_sq_integral(buf: HistoryBuffer, kernel: MemoryKernel, weight: str = "one",
                      delta: float = 0.0, t_eval: float | None = None) -> float:
    """int lam(s) W(s) w(t-s)^2 ds with W in {1, s, exp(-delta*s)}."""
    t = buf.t_now if t_eval is None else t_eval
    if t - kernel.tau2 < buf.t_now - buf.span - 1e-9 * buf.dt:
        raise ValueError("insufficient history span")
    s = _lag_nodes(buf, kernel.tau1, kernel.tau2, t)
    if weight == "one":
        W = np.ones_like(s)
    elif weight == "s":
        W = s
    elif weight == "exp":
        W = np.exp(-delta * s)
    else:
        raise ValueError(f"unknown weight {weight!r}")
    vals = np.asarray(kernel(s)) * W * buf.w_at(t - s) ** 2
    return float(np.trapezoid(vals, s))
