"""Algebraic covariant derivatives, duals, lifts, curvature in component,
commutator, general-frame, and fibre forms, and the flatness toolkit.

Index conventions: curvature arrays are R[a, b, mu, nu] with rows the upper
fibre index, antisymmetric in (mu, nu) exactly by construction; fibre
coefficient stacks are [mu, a, b] as in the connection module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connection import base_names, bundle_names
from .errors import NotFlat
from .fields import (
    FD_STEP_NESTED,
    anholonomy,
    as_scalar_field,
    fd_array_partial,
    fd_partial,
)
from .transport import PathSpec, fundamental_solution_with_residual


class SectionField:
    """A section of the vector bundle: r component fields over the base."""

    def __init__(self, components, names, region=None):
        self.names = tuple(names)
        self.region = region
        self.components = [as_scalar_field(c, self.names, region)
                           for c in components]
        self.r = len(self.components)

    @classmethod
    def from_exprs(cls, components, n, region=None):
        return cls(components, base_names(n), region)

    def __call__(self, x):
        return np.array([c(x) for c in self.components])


class DualSectionField(SectionField):
    """A section of the dual bundle: r covariant component fields."""


@dataclass
class CurvatureValues:
    """Curvature components R[a, b, mu, nu] at a point; exactly
    antisymmetric in the last two indices."""

    R: np.ndarray

    def matrix(self, mu, nu):
        """The r x r curvature matrix R_{mu nu}."""
        return self.R[:, :, mu, nu]


def _components(Y, names, region):
    comps = getattr(Y, "components", Y)
    return [as_scalar_field(c, names, region) for c in comps]


def _vector_values(F, names, region, x):
    return np.array([as_scalar_field(c, names, region)(x) for c in F])


def covariant_derivative(g3, F, Y, x, h=None):
    """nabla_F Y at x: F^mu (dY^a/dx^mu + G3[mu, a, b] Y^b)."""
    names = base_names(g3.n)
    Yc = _components(Y, names, g3.region)
    Fv = _vector_values(F, names, g3.region, x)
    dY = np.array([[fd_partial(c, x, mu, h) for c in Yc]
                   for mu in range(g3.n)])
    Yv = np.array([c(x) for c in Yc])
    return Fv @ (dY + np.einsum("mab,b->ma", g3(x), Yv))


def dual_covariant_derivative(g3, F, omega, x, h=None):
    """Dual derivative: F^mu (d omega_a/dx^mu - G3[mu, b, a] omega_b)."""
    names = base_names(g3.n)
    wc = _components(omega, names, g3.region)
    Fv = _vector_values(F, names, g3.region, x)
    dw = np.array([[fd_partial(c, x, mu, h) for c in wc]
                   for mu in range(g3.n)])
    wv = np.array([c(x) for c in wc])
    return Fv @ (dw - np.einsum("mba,b->ma", g3(x), wv))


def _nested_step(x, axis):
    return FD_STEP_NESTED * max(1.0, abs(float(x[axis])))


def curvature(g3, x, h=None):
    """Curvature components from the coefficient stack:
    R_{mu nu} = d_mu G_nu - d_nu G_mu + [G_mu, G_nu], with FD partials at
    a 1e-4 relative step."""
    n = g3.n
    D = np.stack([
        fd_array_partial(g3, x, mu, h if h is not None
                         else _nested_step(x, mu))
        for mu in range(n)])                      # D[mu, nu, a, b]
    stack = g3(x)
    prod = np.einsum("mac,ncb->mnab", stack, stack)
    T = D + prod
    Rmn = T - T.transpose(1, 0, 2, 3)
    return CurvatureValues(Rmn.transpose(2, 3, 0, 1))


def curvature_commutator_oracle(g3, F, G, Y, x, h=None):
    """The curvature operator evaluated from its definition
    R(F, G)Y = nabla_F nabla_G Y - nabla_G nabla_F Y - nabla_{[F,G]} Y,
    with nested finite differences. This is the independent oracle for
    contracting curvature() with Y, F, G."""
    n = g3.n
    names = base_names(n)
    Fc = _components(F, names, g3.region)
    Gc = _components(G, names, g3.region)
    Yc = _components(Y, names, g3.region)

    def yvals(xx):
        return np.array([c(xx) for c in Yc])

    def covd_values(vv, yfun, xx, steps=None):
        dY = np.stack([
            fd_array_partial(yfun, xx, mu,
                             steps(xx, mu) if steps is not None else h)
            for mu in range(n)])
        return vv @ (dY + np.einsum("mab,b->ma", g3(tuple(xx)), yfun(xx)))

    def nab(vecfields):
        def fun(xx):
            vv = np.array([c(xx) for c in vecfields])
            return covd_values(vv, yvals, xx)
        return fun

    Fv = np.array([c(x) for c in Fc])
    Gv = np.array([c(x) for c in Gc])
    dGmat = np.array([[fd_partial(c, x, nu, h) for c in Gc]
                      for nu in range(n)])        # [nu, mu]
    dFmat = np.array([[fd_partial(c, x, nu, h) for c in Fc]
                      for nu in range(n)])
    bracket = Fv @ dGmat - Gv @ dFmat

    first = covd_values(Fv, nab(Gc), x, steps=_nested_step)
    second = covd_values(Gv, nab(Fc), x, steps=_nested_step)
    third = covd_values(bracket, yvals, x)
    return first - second - third


def curvature_general_frame(g3, base_frame, x, h=None):
    """Curvature for coefficients given in a (possibly anholonomic) base
    frame: directional derivatives along the frame vectors plus the
    anholonomy correction -G3[lam, a, b] C[lam, mu, nu]."""
    n = g3.n
    E = base_frame(x)
    dcoord = np.stack([
        fd_array_partial(g3, x, t, h if h is not None
                         else _nested_step(x, t))
        for t in range(n)])                        # [t, nu, a, b]
    Ddir = np.einsum("tm,tnab->mnab", E, dcoord)   # E_mu(G_nu)
    stack = g3(x)
    prod = np.einsum("mac,ncb->mnab", stack, stack)
    T = Ddir + prod
    Rmn = T - T.transpose(1, 0, 2, 3)
    C = anholonomy(base_frame, x, h)
    Rmn = Rmn - np.einsum("lab,lmn->mnab", stack, C)
    return CurvatureValues(Rmn.transpose(2, 3, 0, 1))


def fibre_curvature_general(g2, frame, p, h=None):
    """Fibre curvature components and frame data for a general connection
    in a frame on the total space whose fibre block spans the vertical
    distribution. Returns (R[a, mu, nu], S[lam, mu, nu],
    fibre coefficients [mu, a, b]).

    With frame=None the natural frame is used: the outputs reduce to
    R^a_{mu nu} = X_mu(G^a_nu) - X_nu(G^a_mu) with X_mu = d_mu + G^b_mu d_b,
    S = 0, and fibre coefficients -d_b G^a_mu."""
    n, r = g2.n, g2.r
    G = g2(p)
    dG = np.stack([fd_array_partial(g2, p, t, h) for t in range(n + r)])

    if frame is None:
        XG = dG[:n] + np.einsum("bm,ban->man", G, dG[n:])   # X_mu(G)[mu,a,nu]
        R2 = np.einsum("man->amn", XG) - np.einsum("nam->amn", XG)
        S = np.zeros((n, n, n))
        coeffs = -dG[n:].transpose(2, 1, 0)                 # [mu, a, b]
        return R2, S, coeffs

    E = frame(p)
    if np.max(np.abs(E[:n, n:])) > 1e-12:
        raise ValueError("the frame's fibre block must be vertical")
    eG = np.einsum("ti,tan->ian", E, dG)      # e_I(G)[I, a, nu]
    XG = eG[:n] + np.einsum("bm,ban->man", G, eG[n:])
    C = anholonomy(frame, p, h)
    Cb = C[:n, :n, :n]        # C^lam_{mu nu}
    Cf_bb = C[n:, :n, :n]     # C^a_{mu nu}
    Cf_mix = C[n:, :n, n:]    # C^a_{mu b}
    Cb_mix = C[:n, :n, n:]    # C^lam_{mu b}
    Cf_ff = C[n:, n:, n:]     # C^a_{b d}

    term0 = np.einsum("man->amn", XG) - np.einsum("nam->amn", XG)
    t1 = -Cf_bb
    mixed = np.einsum("bm,anb->amn", G, Cf_mix)   # G^b_mu C^a_{nu b}
    t2 = -mixed + mixed.transpose(0, 2, 1)
    base_mixed = np.einsum("bm,lnb->lmn", G, Cb_mix)
    S = Cb + base_mixed - base_mixed.transpose(0, 2, 1)
    paren = -Cb + base_mixed - base_mixed.transpose(0, 2, 1)
    t3 = np.einsum("al,lmn->amn", G, paren)
    t4 = np.einsum("bm,dn,abd->amn", G, G, Cf_ff)
    R2 = term0 + t1 + t2 + t3 + t4

    coeffs = (-np.einsum("bam->mab", eG[n:])
              - np.einsum("amb->mab", Cf_mix)
              + np.einsum("dm,adb->mab", G, Cf_ff)
              - np.einsum("al,lmb->mab", G, Cb_mix))
    return R2, S, coeffs


def vertical_lift(Y, p):
    """Tangent components on the total space of the vertical lift of a
    section: (0, ..., 0, Y^a at the base point of p)."""
    n = len(Y.names)
    vals = Y(tuple(p[:n]))
    return np.concatenate([np.zeros(n), vals])


def horizontal_lift(F, g2, p):
    """Tangent components on the total space of the horizontal lift of a
    base vector: (F^mu, G[a, mu](p) F^mu)."""
    Fv = np.asarray(F, dtype=float)
    return np.concatenate([Fv, g2(p) @ Fv])


def nabla_hat_oracle(g2, zbar, zhat, p, h=None):
    """Vertical components of the hatted derivative
    Zbar^mu {X_mu(Zhat^a) - Zhat^b d_b(G^a_mu)} for vector fields given by
    horizontal components Zbar^mu and vertical components Zhat^a, both
    fields on the total space."""
    n, r = g2.n, g2.r
    names = bundle_names(n, r)
    region = g2.region
    zb = np.array([as_scalar_field(c, names, region)(p) for c in zbar])
    zc = [as_scalar_field(c, names, region) for c in zhat]
    zv = np.array([c(p) for c in zc])
    G = g2(p)
    dZ = np.array([[fd_partial(c, p, t, h) for c in zc]
                   for t in range(n + r)])          # [t, a]
    XZ = dZ[:n] + np.einsum("bm,ba->ma", G, dZ[n:])  # X_mu(Zhat)[mu, a]
    dG_fib = np.stack([fd_array_partial(g2, p, n + b, h)
                       for b in range(r)])           # [b, a, mu]
    drag = np.einsum("b,bam->ma", zv, dG_fib)
    return zb @ (XZ - drag)


def is_flat(g3, sample_points, tol=1e-6):
    """True plus the max |R| over the samples when the connection is flat
    to within tol there."""
    worst = 0.0
    for x in sample_points:
        worst = max(worst, float(np.max(np.abs(curvature(g3, x).R))))
    return worst <= tol, worst


def _staircase(x0, x1, order):
    pts = [np.asarray(x0, dtype=float).copy()]
    for axis in order:
        nxt = pts[-1].copy()
        nxt[axis] = x1[axis]
        pts.append(nxt)
    return pts


def flat_fundamental_matrix(g3, x0, x1, tol=1e-6, steps_per_leg=256):
    """Integrating matrix of a flat connection: solves
    dB/dx^mu = -G_mu B, B(x0) = identity, along two axis-ordered staircase
    paths from x0 to x1. Returns the first result together with the
    path-independence residual max |B_A - B_B|; raises NotFlat when the
    residual exceeds 100 * tol."""

    def integrate(order):
        W = np.eye(g3.r)
        pts = _staircase(x0, x1, order)
        for a, b in zip(pts[:-1], pts[1:]):
            if np.array_equal(a, b):
                continue
            leg = PathSpec.from_points([a, b], steps=steps_per_leg)
            Wleg, _ = fundamental_solution_with_residual(g3, leg)
            W = Wleg @ W
        return W

    WA = integrate(range(g3.n))
    WB = integrate(range(g3.n - 1, -1, -1))
    residual = float(np.max(np.abs(WA - WB)))
    if residual > 100.0 * tol:
        raise NotFlat(
            f"staircase integrals differ by {residual:.3e} "
            f"(tolerance {100.0 * tol:.3e}); the connection is not flat "
            "on this rectangle")
    return WA, residual
