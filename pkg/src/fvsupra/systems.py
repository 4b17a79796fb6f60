"""Linear hyperbolic systems w_t + A.grad(w) = 0 with constant matrices.

Provides the directional flux Jacobian A.n, its eigendecomposition and the
matrix absolute value |A.n| used by upwind fluxes.  Scalar transport also
supports an exact (Fraction) path; the linearized Euler preset carries a
closed-form decomposition used to cross-check the generic numeric one.
"""

from fractions import Fraction

import numpy as np

from .exact import frac

__all__ = ["HyperbolicSystem", "DecompositionError", "transport",
           "linearized_euler", "system_preset", "flux_jacobian_decomposition"]


class DecompositionError(ValueError):
    pass


class HyperbolicSystem:
    def __init__(self, d, mats, name="", exact_capable=False, check_directions=8):
        self.d = d
        self.mats = [np.asarray(m, dtype=float) for m in mats]
        self.mats_exact = [tuple(tuple(frac(x) for x in row) for row in m)
                           for m in mats] if exact_capable else None
        self.n = self.mats[0].shape[0]
        self.name = name
        self.exact_capable = exact_capable
        self._wave_speed = None
        self._op_norm = None
        if check_directions:
            self._verify_hyperbolic(check_directions)

    def _verify_hyperbolic(self, k):
        for i in range(k):
            ang = 2 * np.pi * i / k
            e = (np.cos(ang), np.sin(ang))[: self.d]
            if self.d == 1:
                e = (1.0,)
            self.flux_jacobian_decomposition(e)
            if self.d == 1:
                break

    # -- directional matrices -----------------------------------------------

    def direction_matrix(self, nvec):
        a = np.zeros((self.n, self.n))
        for m, c in zip(self.mats, nvec):
            a = a + float(c) * m
        return a

    def direction_matrix_exact(self, nvec):
        if self.mats_exact is None:
            raise DecompositionError(f"system '{self.name}' has no exact path")
        out = [[Fraction(0)] * self.n for _ in range(self.n)]
        for m, c in zip(self.mats_exact, nvec):
            c = frac(c)
            for i in range(self.n):
                for j in range(self.n):
                    out[i][j] += c * m[i][j]
        return tuple(tuple(row) for row in out)

    def flux_jacobian_decomposition(self, nvec):
        """(S, eigenvalues, S_inv) of A.n with real spectrum.

        Raises DecompositionError, naming the direction, if the spectrum is
        complex or the eigenvector matrix is numerically defective.
        """
        if self.name == "lee":
            return _lee_decomposition(self, nvec)
        a = self.direction_matrix(nvec)
        scale = max(np.abs(a).max(), 1e-300)
        if np.allclose(a, a.T, atol=1e-14 * scale):
            lam, s = np.linalg.eigh(a)
            sinv = s.T
        else:
            lam, s = np.linalg.eig(a)
            if np.abs(lam.imag).max() > 1e-10 * scale:
                raise DecompositionError(
                    f"complex spectrum of A.n for direction {tuple(nvec)}")
            lam = lam.real
            s = s.real
            order = np.argsort(lam)
            lam, s = lam[order], s[:, order]
            try:
                sinv = np.linalg.inv(s)
            except np.linalg.LinAlgError:
                raise DecompositionError(
                    f"defective A.n for direction {tuple(nvec)}") from None
        recon = s @ np.diag(lam) @ sinv
        if np.abs(recon - a).max() > 1e-12 * max(scale, 1.0):
            raise DecompositionError(
                f"eigendecomposition of A.n inaccurate for direction {tuple(nvec)}")
        return s, lam, sinv

    def abs_direction_matrix(self, nvec):
        """|A.n| = S |Lambda| S^{-1} (floats)."""
        if self.name == "lee":
            return _lee_abs(self, nvec)
        s, lam, sinv = self.flux_jacobian_decomposition(nvec)
        return s @ np.diag(np.abs(lam)) @ sinv

    def upwind_split(self, nvec, exact=False):
        """((A.n + |A.n|)/2, (A.n - |A.n|)/2) as n x n matrices."""
        if exact:
            if self.n != 1:
                raise DecompositionError(
                    f"exact upwind split needs a scalar system, not n={self.n}")
            an = self.direction_matrix_exact(nvec)[0][0]
            pp = (an + abs(an)) / 2
            pm = (an - abs(an)) / 2
            return ((pp,),), ((pm,),)
        a = self.direction_matrix(nvec)
        aa = self.abs_direction_matrix(nvec)
        return (a + aa) / 2.0, (a - aa) / 2.0

    # -- global quantities ----------------------------------------------------

    def max_wave_speed(self):
        """sup over unit directions of the spectral radius of A.e."""
        if self._wave_speed is None:
            self._wave_speed = self._direction_sup(
                lambda a: np.abs(np.linalg.eigvals(a)).max())
        return self._wave_speed

    def op_norm(self):
        """Estimate of sup_{|e|=1} ||A.e||_2 by direction sampling + refinement."""
        if self._op_norm is None:
            self._op_norm = self._direction_sup(
                lambda a: np.linalg.norm(a, 2))
        return self._op_norm

    def _direction_sup(self, fun):
        if self.d == 1:
            return fun(self.mats[0])
        def val(t):
            return fun(np.cos(t) * self.mats[0] + np.sin(t) * self.mats[1])
        ts = np.linspace(0, 2 * np.pi, 181)
        vals = [val(t) for t in ts]
        k = int(np.argmax(vals))
        lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, len(ts) - 1)]
        # golden-section refinement of the sampled maximum
        gr = (np.sqrt(5.0) - 1) / 2
        a, b = lo, hi
        c, dd = b - gr * (b - a), a + gr * (b - a)
        for _ in range(60):
            if val(c) > val(dd):
                b = dd
            else:
                a = c
            c, dd = b - gr * (b - a), a + gr * (b - a)
        return max(max(vals), val((a + b) / 2))


def transport(omega):
    """Scalar transport with velocity omega (n = 1); exact path available."""
    omega = tuple(frac(w) for w in omega)
    d = len(omega)
    mats = [((w,),) for w in omega]
    return HyperbolicSystem(d, mats, name="transport", exact_capable=True)


def linearized_euler(u_bar=(0.0, 0.0), gamma=1.4):
    """2D Euler equations linearized on rho=1, p=1/gamma (unit sound speed).

    State w = (rho', u', v', p').  The matrices do not depend on gamma; the
    background pressure 1/gamma is what makes the sound speed unity.
    """
    ub, vb = float(u_bar[0]), float(u_bar[1])
    ax = [[ub, 1, 0, 0],
          [0, ub, 0, 1],
          [0, 0, ub, 0],
          [0, 1, 0, ub]]
    ay = [[vb, 0, 1, 0],
          [0, vb, 0, 0],
          [0, 0, vb, 1],
          [0, 0, 1, vb]]
    sys = HyperbolicSystem(2, [ax, ay], name="lee")
    sys.u_bar = (ub, vb)
    sys.gamma = float(gamma)
    return sys


def _lee_decomposition(sys, nvec):
    """Closed-form eigendecomposition of A.n for the linearized Euler system."""
    nx, ny = float(nvec[0]), float(nvec[1])
    m = float(np.hypot(nx, ny))
    if m == 0.0:
        return np.eye(4), np.zeros(4), np.eye(4)
    tx, ty = nx / m, ny / m
    ub, vb = float(sys.mats[0][0, 0]), float(sys.mats[1][0, 0])
    alpha = ub * tx + vb * ty
    s = np.array([
        [1.0, 1.0, 1.0, 0.0],
        [tx, -tx, 0.0, -ty],
        [ty, -ty, 0.0, tx],
        [1.0, 1.0, 0.0, 0.0],
    ])
    lam = m * np.array([alpha + 1.0, alpha - 1.0, alpha, alpha])
    sinv = np.array([
        [0.0, tx / 2, ty / 2, 0.5],
        [0.0, -tx / 2, -ty / 2, 0.5],
        [1.0, 0.0, 0.0, -1.0],
        [0.0, -ty, tx, 0.0],
    ])
    return s, lam, sinv


def _lee_abs(sys, nvec):
    """Closed-form |A.n| for the linearized Euler system.

    A.n = |n| ((ubar.theta) I + C(theta)) with eigenvalues ubar.n, ubar.n,
    ubar.n +- |n|; the spectral projectors have explicit forms.
    """
    nx, ny = float(nvec[0]), float(nvec[1])
    m = float(np.hypot(nx, ny))
    if m == 0.0:
        return np.zeros((4, 4))
    tx, ty = nx / m, ny / m
    ub, vb = float(sys.mats[0][0, 0]), float(sys.mats[1][0, 0])
    alpha = ub * tx + vb * ty
    wp, wm, w0 = abs(alpha + 1.0), abs(alpha - 1.0), abs(alpha)
    out = np.zeros((4, 4))
    kp = np.array([1.0, tx, ty, 1.0])
    km = np.array([1.0, -tx, -ty, 1.0])
    # rows of S^{-1} for the acoustic modes
    ap = np.array([0.0, tx / 2, ty / 2, 0.5])
    am = np.array([0.0, -tx / 2, -ty / 2, 0.5])
    out += wp * np.outer(kp, ap) + wm * np.outer(km, am)
    # entropy mode (1,0,0,0) with coefficient rho - p
    out += w0 * np.outer(np.array([1.0, 0, 0, 0]), np.array([1.0, 0, 0, -1.0]))
    # shear mode (0,-ty,tx,0) with coefficient -ty u + tx v
    out += w0 * np.outer(np.array([0.0, -ty, tx, 0]), np.array([0.0, -ty, tx, 0]))
    return m * out


def flux_jacobian_decomposition(system, nvec):
    """Module-level convenience wrapper."""
    return system.flux_jacobian_decomposition(nvec)


def system_preset(name, **kw):
    if name == "transport":
        return transport(kw.get("omega", (1.0,) * kw.get("d", 2)))
    if name == "lee":
        return linearized_euler(kw.get("u_bar", (0.0, 0.0)), kw.get("gamma", 1.4))
    raise ValueError(f"unknown system preset '{name}'")
