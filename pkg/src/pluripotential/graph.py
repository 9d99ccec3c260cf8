"""Weighted graph backend (n = 1).

Carrier = vertices, dd^c = -L with L the weighted graph Laplacian, forms are
vertex weights, the one-fold wedge is the identity and positivity is
componentwise.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import arith
from .errors import ConstructionInvalid
from .model import Model, check_construction


class GraphModel(Model):
    backend = "graph"
    n = 1

    def __init__(self, vertices: int, edges, exact: bool = True, omega=None):
        if vertices <= 0:
            raise ConstructionInvalid("graph needs at least one vertex")
        self.exact = exact
        self.carrier_size = vertices
        self.form_dim = vertices
        merged: dict[tuple[int, int], Fraction] = {}
        for i, j, w in edges:
            i, j = int(i), int(j)
            if not (0 <= i < vertices and 0 <= j < vertices) or i == j:
                raise ConstructionInvalid(f"bad edge ({i}, {j})")
            w = arith.to_fraction(w)
            if w <= 0:
                raise ConstructionInvalid(f"edge ({i}, {j}) has non-positive weight")
            key = (min(i, j), max(i, j))
            merged[key] = merged.get(key, Fraction(0)) + w
        self.edges = sorted((i, j, w) for (i, j), w in merged.items())
        adj = np.zeros((vertices, vertices))
        for i, j, _ in self.edges:
            adj[i, j] = adj[j, i] = 1
        if connected_components(adj, directed=False)[0] != 1:
            raise ConstructionInvalid("graph is not connected")
        lap = arith.exact_array(np.zeros((vertices, vertices), dtype=int))
        for i, j, w in self.edges:
            lap[i, i] += w
            lap[j, j] += w
            lap[i, j] -= w
            lap[j, i] -= w
        self.laplacian = lap if exact else arith.float_array(lap)
        self.omega = self.asarray(np.ones(vertices, dtype=int) if omega is None else omega)
        check_construction(self)

    def with_arithmetic(self, exact):
        return GraphModel(self.carrier_size, self.edges, exact=exact,
                          omega=[arith.to_fraction(x) for x in self.omega])

    def ddc(self, phi):
        return -self.laplacian.dot(self.asarray(phi))

    def wedge(self, forms):
        if len(forms) != 1:
            raise ValueError("graph wedge takes exactly one form")
        return self.asarray(forms[0]).copy()

    def cone_values(self, form):
        return self.asarray(form)

    def cohomology_class(self, form):
        return self.asarray(form).sum()

    def reference_form(self):
        return self.omega.copy()

    def random_function(self, rng):
        if self.exact:
            return arith.random_rational(rng, self.carrier_size, -2, 2, 8)
        return rng.normal(size=self.carrier_size)

    def random_cone_form(self, rng):
        """Nonnegative vertex weights with exponential coefficients and
        occasional zeros, so both interior and boundary are covered."""
        w = rng.exponential(size=self.carrier_size)
        w[rng.random(self.carrier_size) < 0.15] = 0.0
        if not w.any():
            w[0] = 1.0
        if self.exact:
            return arith.exact_array([Fraction(int(round(x * 16)) + (1 if x > 0 else 0), 16) for x in w])
        return w

    def dirac_potentials(self, omega):
        """Potentials phi_k with omega + dd^c phi_k = V * delta_k; they are the
        vertices of D_omega modulo constants."""
        from .core import solve_linear_ma

        omega = self.asarray(omega)
        key = tuple(omega)
        cache = self.__dict__.setdefault("_dirac_cache", {})
        if key in cache:
            return [v.copy() for v in cache[key]]
        out = []
        for k in range(self.carrier_size):
            mu = self.zero_function()
            mu[k] = self.scalar(1)
            out.append(solve_linear_ma(self, omega, mu))
        cache[key] = out
        return [v.copy() for v in out]

    def random_psh(self, rng, omega, allow_constant=True):
        if rng.random() < 0.5:
            return super().random_psh(rng, omega, allow_constant)
        verts = self.dirac_potentials(omega)
        w = rng.exponential(size=len(verts))
        w[rng.random(len(verts)) < 0.3] = 0.0
        if not w.any():
            w[int(rng.integers(len(verts)))] = 1.0
        if self.exact:
            w = [Fraction(int(round(x * 16)), 16) for x in w]
            if sum(w) == 0:
                w[0] = Fraction(1)
        total = sum(w)
        phi = sum((wk / total) * v for wk, v in zip(w, verts))
        if allow_constant:
            phi = phi + self._fraction(rng, -2, 2, 8)
        return phi

    def to_dict(self):
        fmt = arith.format_scalar if self.exact else float
        d = {
            "backend": "graph",
            "graph": {
                "vertices": self.carrier_size,
                "edges": [[i, j, fmt(w)] for i, j, w in self.edges],
            },
            "arithmetic": "rational" if self.exact else "float",
        }
        if any(w != 1 for w in self.omega):
            d["omega"] = [fmt(w) for w in self.omega]
        return d


def g2(exact: bool = True) -> GraphModel:
    """Two vertices joined by an edge of weight 1."""
    return GraphModel(2, [(0, 1, 1)], exact=exact)


def random_graph(rng, vertices: int, exact: bool = True, extra_edge_prob=0.4) -> GraphModel:
    """Random connected graph: a random spanning tree plus extra edges, with
    rational weights k/4, k in 1..8."""
    order = rng.permutation(vertices)
    edges = []
    for idx in range(1, vertices):
        j = int(order[int(rng.integers(idx))])
        edges.append((int(order[idx]), j, Fraction(int(rng.integers(1, 9)), 4)))
    for i in range(vertices):
        for j in range(i + 1, vertices):
            if rng.random() < extra_edge_prob:
                edges.append((i, j, Fraction(int(rng.integers(1, 9)), 4)))
    return GraphModel(vertices, edges, exact=exact)
