"""Helpers for the two arithmetic modes: exact rationals and float64.

Exact vectors are numpy object arrays holding :class:`fractions.Fraction`.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x))
    return Fraction(x)


def exact_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = to_fraction(v)
    return out


def float_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=object) if _has_strings(values) else np.asarray(values)
    if arr.dtype == object:
        return np.array([float(to_fraction(v)) for v in arr.ravel()], dtype=float).reshape(arr.shape)
    return arr.astype(float)


def _has_strings(values) -> bool:
    if isinstance(values, np.ndarray):
        return values.dtype == object
    return any(isinstance(v, str) for v in np.ravel(np.asarray(values, dtype=object)))


def is_exact(arr) -> bool:
    return isinstance(arr, np.ndarray) and arr.dtype == object


def zeros(n: int, exact: bool) -> np.ndarray:
    return exact_array([0] * n) if exact else np.zeros(n)


def to_float(x) -> float:
    return float(x)


def format_scalar(x) -> str | float:
    """Serialize a scalar: rationals as ``"p/q"`` strings, floats unchanged."""
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, np.integer)):
        return f"{int(x)}/1"
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def parse_scalar(s) -> Fraction | float:
    if isinstance(s, str):
        if s in ("inf", "-inf"):
            return float(s)
        return Fraction(s)
    if isinstance(s, int):
        return Fraction(s)
    return float(s)


def solve_exact(a, b) -> np.ndarray:
    """Solve ``a x = b`` over the rationals by Gauss-Jordan elimination."""
    m = [[to_fraction(v) for v in row] for row in np.asarray(a, dtype=object)]
    rhs = [to_fraction(v) for v in np.asarray(b, dtype=object)]
    n = len(m)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise np.linalg.LinAlgError("singular system")
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            rhs[col], rhs[piv] = rhs[piv], rhs[col]
        inv = 1 / m[col][col]
        row = [v * inv for v in m[col]]
        r_val = rhs[col] * inv
        m[col], rhs[col] = row, r_val
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], row)]
                rhs[r] = rhs[r] - f * r_val
    return exact_array(rhs)


def solve(a, b, exact: bool) -> np.ndarray:
    if exact:
        return solve_exact(a, b)
    return np.linalg.solve(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def random_rational(rng: np.random.Generator, size, lo=-4, hi=4, denom=8) -> np.ndarray:
    """Rationals ``k/denom`` with ``k`` uniform in ``[lo*denom, hi*denom]``."""
    ks = rng.integers(lo * denom, hi * denom + 1, size=size)
    return exact_array([Fraction(int(k), denom) for k in np.ravel(ks)]).reshape(np.shape(ks))


def rationalize(x: float, max_denominator: int = 1 << 20) -> Fraction:
    return Fraction(float(x)).limit_denominator(max_denominator)
