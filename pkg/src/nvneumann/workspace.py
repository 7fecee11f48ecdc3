"""Discretized problem context: nodes, volume grid, operators and cached
close-evaluation matrices for one domain at one resolution."""
from __future__ import annotations

from functools import cached_property

import numpy as np

from .bie import assemble, green_at_grid
from .geometry import Domain
from .quadrature import Discretization, trig_basis


class Workspace:
    def __init__(self, domain: Domain, disc: Discretization = Discretization()):
        self.domain = domain
        self.disc = disc.validate()
        self.bnodes, self.grid = disc.build(domain)
        self.ops = assemble(domain, self.bnodes)

    @property
    def layers(self):
        return self.ops.layers

    @cached_property
    def green(self):
        """Per component (value, ∂x, ∂y) matrices node data -> grid nodes."""
        return green_at_grid(self.ops, self.grid)

    def basis(self, j: int, K: int, constant: bool = False) -> np.ndarray:
        """Trigonometric basis in the curve parameter on component j, embedded
        in the full boundary vector (shape (total, 2K[+1]))."""
        c = self.bnodes.components[j]
        B = trig_basis(c.t, K, constant)
        out = np.zeros((self.bnodes.total, B.shape[1]))
        out[self.bnodes.slice(j)] = B
        return out

    def test_vectors(self, K: int):
        """The boundary test battery: per component the trigonometric basis to
        order K plus the indicator χ_j. Returns (matrix, labels)."""
        cols, labels = [], []
        for j in range(self.domain.kappa):
            cols.append(self.bnodes.indicator(j)[:, None])
            labels.append(f"chi[{j}]")
            cols.append(self.basis(j, K))
            for k in range(1, K + 1):
                labels += [f"cos{k}[{j}]", f"sin{k}[{j}]"]
        return np.concatenate(cols, axis=1), labels
