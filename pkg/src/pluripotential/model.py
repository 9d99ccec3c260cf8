"""The abstract model contract: carrier, test functions, forms, dd^c, wedge and
positivity cone.

Forms, test functions and measures are flat numpy vectors.  In exact mode they
are object arrays of ``Fraction``; in float mode they are float64 arrays.
Every backend in this package has a polyhedral positivity cone: a form is
nonnegative iff all entries of ``cone_values(form)`` are nonnegative.
"""
from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import arith
from .errors import ConeViolation, ConstructionInvalid, VolumeError


class Model:
    backend = "abstract"
    n: int
    carrier_size: int
    form_dim: int
    exact: bool

    # -- backend hooks -------------------------------------------------------
    def ddc(self, phi):
        raise NotImplementedError

    def wedge(self, forms):
        """Signed measure of ``forms[0] ^ ... ^ forms[n-1]``."""
        raise NotImplementedError

    def cone_values(self, form):
        """Linear facet values; the form is nonnegative iff all are >= 0."""
        raise NotImplementedError

    def cone_row_point(self, row: int) -> int:
        """Carrier point responsible for cone row ``row``."""
        return row

    def cohomology_class(self, form):
        raise NotImplementedError

    def reference_form(self):
        raise NotImplementedError

    def random_function(self, rng):
        raise NotImplementedError

    def random_cone_form(self, rng):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    # -- arithmetic ----------------------------------------------------------
    @property
    def tol(self) -> float:
        return 0.0 if self.exact else 1e-9

    @property
    def cone_tol(self) -> float:
        return 0.0 if self.exact else 1e-11

    def asarray(self, values):
        return arith.exact_array(values) if self.exact else arith.float_array(values)

    def scalar(self, x):
        return arith.to_fraction(x) if self.exact else float(x)

    def zero_function(self):
        return arith.zeros(self.carrier_size, self.exact)

    def zero_form(self):
        return arith.zeros(self.form_dim, self.exact)

    def constant(self, c):
        return self.zero_function() + self.scalar(c)

    def function_to_form(self, phi):
        """The form ``dd^c phi`` is how functions enter form space."""
        return self.ddc(phi)

    # -- derived quantities --------------------------------------------------
    def integrate(self, phi, measure):
        return (self.asarray(phi) * measure).sum()

    def intersection(self, forms):
        return self.wedge([self.asarray(f) for f in forms]).sum()

    def volume(self, omega):
        return self.intersection([omega] * self.n)

    def checked_volume(self, omega):
        vol = self.volume(omega)
        if vol <= 0:
            raise VolumeError(f"non-positive volume V_omega = {vol}")
        return vol

    def in_cone(self, form, tol=None) -> bool:
        tol = self.cone_tol if tol is None else tol
        return bool(np.all(self.cone_values(self.asarray(form)) >= -tol))

    def cone_witness(self, form, tol=None):
        """Carrier point where positivity fails, or None."""
        tol = self.cone_tol if tol is None else tol
        vals = self.cone_values(self.asarray(form))
        bad = np.nonzero(vals < -tol)[0]
        if len(bad) == 0:
            return None
        worst = bad[np.argmin(vals[bad])]
        return self.cone_row_point(int(worst))

    def require_cone(self, form, what="form"):
        w = self.cone_witness(form)
        if w is not None:
            raise ConeViolation(f"{what} is not in the positive cone", witness=w)

    def twist(self, omega, phi):
        """The form omega_phi = omega + dd^c phi."""
        return self.asarray(omega) + self.ddc(self.asarray(phi))

    def require_psh(self, omega, phi):
        w = self.cone_witness(self.twist(omega, phi))
        if w is not None:
            raise ConeViolation("test function is not omega-psh", witness=w)

    @cached_property
    def ddc_cone_matrix(self):
        """Matrix K with cone_values(dd^c phi) = K phi."""
        cols = []
        for k in range(self.carrier_size):
            e = self.zero_function()
            e[k] = self.scalar(1)
            cols.append(self.cone_values(self.ddc(e)))
        return np.stack(cols, axis=1)

    def with_arithmetic(self, exact: bool) -> "Model":
        raise NotImplementedError

    @cached_property
    def float_model(self) -> "Model":
        """The same model in float arithmetic, for numerical solvers."""
        return self.with_arithmetic(False) if self.exact else self

    def ddc_cone_matrix_float(self):
        return np.asarray(self.ddc_cone_matrix, dtype=float)

    # -- sampling ------------------------------------------------------------
    def _fraction(self, rng, lo=0.0, hi=1.0, denom=64):
        k = int(rng.integers(round(lo * denom), round(hi * denom) + 1))
        return Fraction(k, denom) if self.exact else k / denom

    def max_psh_scale(self, omega, psi):
        """Largest s with omega + dd^c(s psi) in the cone (None if unbounded)."""
        c = self.cone_values(self.asarray(omega))
        d = self.cone_values(self.ddc(self.asarray(psi)))
        neg = d < 0
        if not np.any(neg):
            return None
        return min(c[neg] / -d[neg])

    def random_psh(self, rng, omega, allow_constant=True):
        """A random omega-psh test function, scaled into the cone."""
        psi = self.random_function(rng)
        smax = self.max_psh_scale(omega, psi)
        frac = self._fraction(rng)
        if smax is None:
            phi = psi * frac
        else:
            phi = psi * (smax * frac)
        if allow_constant:
            phi = phi + self._fraction(rng, -2, 2, 8)
        return phi

    # -- serialization -------------------------------------------------------
    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def check_construction(model: Model):
    if model.carrier_size <= 0:
        raise ConstructionInvalid("carrier is empty")
    omega = model.reference_form()
    if not model.in_cone(omega):
        raise ConstructionInvalid("reference form is not in the positive cone")
    if model.volume(omega) <= 0:
        raise ConstructionInvalid("wedge of the reference form vanishes")
