"""Mesh fields: n-component values on the DOF set of one mesh period."""

import numpy as np


class MeshField:
    """Values (ndof, n) with the volume-weighted norm
    ||g||^2 = sum_j |K_j| ||g_j||^2.
    """

    def __init__(self, layout, values, exact=None):
        self.layout = layout
        self.values = np.asarray(values)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        self.exact = exact  # optional list of tuples of Fractions

    @property
    def n(self):
        return self.values.shape[1]

    def norm(self):
        w = self.layout.vol_float()
        return float(np.sqrt((w[:, None] * np.abs(self.values) ** 2).sum()))

    def weighted_sum(self):
        """sum_j |K_j| g_j, one value per component."""
        w = self.layout.vol_float()
        return (w[:, None] * self.values).sum(axis=0)

    def weighted_sum_exact(self):
        if self.exact is None:
            raise ValueError("no exact values stored")
        n = len(self.exact[0])
        out = [0] * n
        for vj, row in zip(self.layout.vol, self.exact):
            for c in range(n):
                out[c] += vj * row[c]
        return tuple(out)

    def __sub__(self, other):
        return MeshField(self.layout, self.values - other.values)

    def __add__(self, other):
        return MeshField(self.layout, self.values + other.values)

    def scaled(self, s):
        return MeshField(self.layout, s * self.values)

    def copy(self):
        return MeshField(self.layout, self.values.copy())
