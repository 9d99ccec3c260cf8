"""Directional derivatives of the energy in the reference form, and the
twisted energy of measures.

nabla_theta E_omega(phi) = V^{-1} (theta, 0).(omega, phi)^n - V^theta E_omega(phi)
with V^theta = n [theta].[omega]^{n-1} / V.  In exact mode it is cross-checked
against the t-derivative of E_{omega + t theta}(phi), extracted from the
polynomial t -> (omega + t theta, phi)^{n+1} by Lagrange interpolation.
"""
from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import arith
from .core import e_energy, energy_pairing, pairing_power
from .errors import IdentityViolation, VolumeError
from .measures import j_energy
from .model import Model

TOL_FD = 1e-6


def volume_derivative_ratio(model: Model, omega, theta):
    """V^theta = n [theta].[omega]^{n-1} / V_omega."""
    vol = model.checked_volume(omega)
    forms = [model.asarray(theta)] + [model.asarray(omega)] * (model.n - 1)
    return model.scalar(model.n) * model.intersection(forms) / vol


def nabla_e(model: Model, omega, theta, phi, check=True):
    omega, theta, phi = model.asarray(omega), model.asarray(theta), model.asarray(phi)
    vol = model.checked_volume(omega)
    e_theta = energy_pairing(model, [(theta, model.zero_function())] + [(omega, phi)] * model.n) / vol
    value = e_theta - volume_derivative_ratio(model, omega, theta) * e_energy(model, omega, phi)
    if check and model.exact:
        other = energy_t_derivative(model, omega, theta, phi)
        if value != other:
            raise IdentityViolation(f"directional derivative routes disagree: {value} vs {other}")
    return value


def _lagrange_derivative_at_zero(nodes, values):
    """p'(0) for the interpolating polynomial through (nodes, values)."""
    total = Fraction(0)
    for i, (xi, yi) in enumerate(zip(nodes, values)):
        others = [xj for j, xj in enumerate(nodes) if j != i]
        denom = Fraction(1)
        for xj in others:
            denom *= xi - xj
        # derivative at 0 of prod_j (t - x_j)
        deriv = Fraction(0)
        for k in range(len(others)):
            term = Fraction(1)
            for j, xj in enumerate(others):
                if j != k:
                    term *= -xj
            deriv += term
        total += yi * deriv / denom
    return total


def energy_t_derivative(model: Model, omega, theta, phi):
    """d/dt E_{omega + t theta}(phi) at t = 0, exactly (rational model only)."""
    n = model.n
    nodes = [Fraction(k) for k in range(n + 2)]
    pair_vals, vol_vals = [], []
    for t in nodes:
        w = omega + t * theta
        pair_vals.append(pairing_power(model, w, phi))
        vol_vals.append(model.volume(w))
    p0, v0 = pair_vals[0], vol_vals[0]
    if v0 <= 0:
        raise VolumeError("non-positive volume")
    dp = _lagrange_derivative_at_zero(nodes, pair_vals)
    dv = _lagrange_derivative_at_zero(nodes, vol_vals)
    return (dp * v0 - p0 * dv) / ((n + 1) * v0 * v0)


# -- twisted energy of measures ----------------------------------------------------

class PotentialCache:
    """Solved potentials keyed by content hash of (model, omega, mu)."""

    def __init__(self):
        self._data = {}
        self._lock = threading.Lock()

    @staticmethod
    def key(model, omega, mu):
        payload = json.dumps([model.content_hash(),
                              [arith.format_scalar(v) for v in model.asarray(omega)],
                              [arith.format_scalar(v) for v in model.asarray(mu)]])
        return hashlib.sha256(payload.encode()).hexdigest()

    def get_or_compute(self, model, omega, mu, compute):
        k = self.key(model, omega, mu)
        with self._lock:
            if k in self._data:
                return self._data[k]
        value = compute()
        with self._lock:
            return self._data.setdefault(k, value)

    def __len__(self):
        with self._lock:
            return len(self._data)

    def clear(self):
        with self._lock:
            self._data.clear()


POTENTIALS = PotentialCache()


@dataclass
class TwistedEvaluation:
    omega: np.ndarray
    theta: np.ndarray
    mu: np.ndarray
    value: object
    potential_used: np.ndarray
    v_theta: object


def solved_potential(model: Model, omega, mu):
    return POTENTIALS.get_or_compute(model, omega, mu,
                                     lambda: j_energy(model, omega, mu).phi_star)


def j_twisted(model: Model, omega, theta, mu) -> TwistedEvaluation:
    """J_omega^theta(mu) = nabla_theta E_omega(phi_mu) with MA_omega(phi_mu) = mu."""
    omega, theta, mu = model.asarray(omega), model.asarray(theta), model.asarray(mu)
    phi = solved_potential(model, omega, mu)
    value = nabla_e(model, omega, theta, phi, check=False)
    return TwistedEvaluation(omega, theta, mu, value, phi,
                             volume_derivative_ratio(model, omega, theta))


def j_twisted_value(model, omega, theta, mu):
    return j_twisted(model, omega, theta, mu).value


# -- finite-difference verification --------------------------------------------------

@dataclass
class FdReport:
    steps: list
    quotients: list
    skipped: list
    limit: float
    target: float
    deviation: float
    table: list = field(default_factory=list)

    def to_dict(self):
        return {"steps": self.steps, "quotients": self.quotients, "skipped": self.skipped,
                "limit": self.limit, "target": self.target, "deviation": self.deviation,
                "table": self.table}


def _neville_at_zero(xs, ys):
    """Value at 0 of the interpolating polynomial (Richardson extrapolation);
    returns the final value and the full tableau."""
    table = [list(ys)]
    cur = list(ys)
    for level in range(1, len(xs)):
        nxt = []
        for i in range(len(cur) - 1):
            x0, x1 = xs[i], xs[i + level]
            nxt.append((x1 * cur[i] - x0 * cur[i + 1]) / (x1 - x0))
        table.append(nxt)
        cur = nxt
    return cur[0], table


def fd_derivative_check(model: Model, omega, theta, mu, steps=(1e-2, 5e-3, 2.5e-3)) -> FdReport:
    """(J_{omega + t theta}(mu) - J_omega(mu)) / t over the steps, extrapolated to
    t = 0 and compared with J_omega^theta(mu)."""
    omega, theta, mu = model.asarray(omega), model.asarray(theta), model.asarray(mu)
    base = j_energy(model, omega, mu).j_value
    used, quotients, skipped = [], [], []
    for t in steps:
        ts = model.scalar(arith.to_fraction(t) if model.exact else t)
        w = omega + ts * theta
        if model.volume(w) <= 0:
            skipped.append(float(t))
            continue
        jt = j_energy(model, w, mu).j_value
        used.append(float(t))
        quotients.append(float((jt - base) / ts))
    target = float(j_twisted_value(model, omega, theta, mu))
    if not quotients:
        return FdReport([], [], skipped, float("nan"), target, float("inf"))
    limit, table = _neville_at_zero(used, quotients)
    return FdReport(used, quotients, skipped, float(limit), target,
                    abs(float(limit) - target), [[float(v) for v in row] for row in table])
