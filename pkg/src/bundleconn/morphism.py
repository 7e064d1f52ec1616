"""Bundle morphisms (a fibre map over a base map), their Jacobi matrices in
natural and adapted frames, connection preservation, and the induced
coefficient arrays for vector-bundle morphisms and base maps."""

from __future__ import annotations

import numpy as np

from .connection import adapted_frame_matrix, base_names, bundle_names
from .fields import (
    FD_STEP_NESTED,
    MatrixField,
    as_scalar_field,
    fd_array_partial,
    fd_partial,
)
from .transport import _check_finite


class BundleMorphism:
    """A pair of maps: fibre components F^{a'}(x, u) over base components
    f^{mu'}(x). The target base point of any bundle point is always computed
    as f of the source base point, so the projections intertwine by
    construction. Dimensions may differ between source and target."""

    def __init__(self, base_components, fibre_components, n, r,
                 region=None, base_region=None, matrix=None):
        self.n = int(n)
        self.r = int(r)
        self.n_out = len(base_components)
        self.r_out = len(fibre_components)
        self.base = [as_scalar_field(c, base_names(n), base_region)
                     for c in base_components]
        self.fibre = [as_scalar_field(c, bundle_names(n, r), region)
                      for c in fibre_components]
        self.matrix = matrix

    @classmethod
    def from_exprs(cls, base_components, fibre_components, n, r,
                   region=None, base_region=None):
        return cls(base_components, fibre_components, n, r,
                   region, base_region)

    @classmethod
    def vector(cls, base_components, matrix, n, r,
               region=None, base_region=None):
        """Vector-bundle morphism: F^{a'} = matrix[a', b](x) u^b."""
        if not isinstance(matrix, MatrixField):
            matrix = MatrixField.from_exprs(matrix, base_names(n),
                                            base_region)

        def comp(a):
            def fn(*p):
                x = p[:n]
                u = np.asarray(p[n:], dtype=float)
                return float((matrix(x) @ u)[a])
            return fn

        fibre = [comp(a) for a in range(matrix.shape[0])]
        return cls(base_components, fibre, n, r, region, base_region,
                   matrix=matrix)

    @classmethod
    def identity(cls, n, r):
        base = [f"x{mu + 1}" for mu in range(n)]
        fibre = [f"u{a + 1}" for a in range(r)]
        return cls(base, fibre, n, r)

    def base_at(self, x):
        return np.array([c(x) for c in self.base])

    def apply(self, p):
        """Target bundle point of a source bundle point."""
        x = tuple(p[:self.n])
        return np.concatenate([self.base_at(x),
                               [c(p) for c in self.fibre]])


def compose(outer, inner):
    """The morphism outer after inner (dimensions must chain)."""
    if inner.n_out != outer.n or inner.r_out != outer.r:
        raise ValueError(
            f"cannot compose: inner maps into ({inner.n_out}, {inner.r_out}) "
            f"but outer expects ({outer.n}, {outer.r})")

    def base_comp(mu):
        return lambda *x: float(outer.base[mu](inner.base_at(x)))

    def fibre_comp(a):
        return lambda *p: float(outer.fibre[a](inner.apply(p)))

    return BundleMorphism(
        [base_comp(mu) for mu in range(outer.n_out)],
        [fibre_comp(a) for a in range(outer.r_out)],
        inner.n, inner.r)


def jacobi_natural(m, p, h=None):
    """Jacobi matrix of the morphism at a bundle point, in natural frames:
    blocks [[df, 0], [d_x F, d_u F]]. The upper-right block is exactly zero
    because base components never depend on the fibre coordinates."""
    n, r = m.n, m.r
    x = tuple(p[:n])
    J = np.zeros((m.n_out + m.r_out, n + r))
    for nu in range(m.n_out):
        for mu in range(n):
            J[nu, mu] = fd_partial(m.base[nu], x, mu, h)
    for a in range(m.r_out):
        for t in range(n + r):
            J[m.n_out + a, t] = fd_partial(m.fibre[a], p, t, h)
    _check_finite(J)
    return J


def jacobi_adapted(m, g2_src, g2_tgt, p, h=None):
    """Jacobi matrix in the adapted frames of the two connections, plus the
    lower-left block separately. That block measures how far the morphism is
    from sending horizontal vectors to horizontal vectors; it vanishes iff
    the morphism preserves the connection at p."""
    Jnat = jacobi_natural(m, p, h)
    Fp = m.apply(p)
    Msrc, _ = adapted_frame_matrix(g2_src, p)
    _, Mtgt_inv = adapted_frame_matrix(g2_tgt, Fp)
    Jad = Mtgt_inv @ Jnat @ Msrc
    return Jad, Jad[m.n_out:, :m.n].copy()


def preserves_connection(m, g2_src, g2_tgt, sample_points, tol=1e-6):
    """True plus the max |lower-left adapted block| over the samples when
    the morphism carries the first connection into the second there."""
    worst = 0.0
    for p in sample_points:
        _, block = jacobi_adapted(m, g2_src, g2_tgt, p)
        worst = max(worst, float(np.max(np.abs(block))))
    return worst <= tol, worst


def vb_morphism_coeffs(m, g3_src, g3_tgt, x, h=None):
    """Coefficient array D[b', a, mu] of a vector-bundle morphism:
    d_mu(matrix) - matrix G_mu + f^{lam'}_mu (G'_{lam'} o f) matrix.
    Contracting with u^a reproduces the lower-left adapted block."""
    if m.matrix is None:
        raise ValueError("a vector-form morphism (with a coefficient "
                         "matrix) is required")
    F = m.matrix
    n = m.n
    Fx = F(x)
    stack = g3_src(x)
    y = tuple(m.base_at(x))
    stackp = g3_tgt(y)
    fjac = np.array([[fd_partial(c, x, mu, h) for mu in range(n)]
                     for c in m.base])
    slices = []
    for mu in range(n):
        dF = fd_array_partial(F, x, mu, h)
        third = np.einsum("l,lbc,ca->ba", fjac[:, mu], stackp, Fx)
        slices.append(dF - Fx @ stack[mu] + third)
    return np.stack(slices).transpose(1, 2, 0)


def tangent_map_second_order(f, g3_src, g3_tgt, x, h=None):
    """Second-order coefficient array T[lam', mu, nu] of a base map between
    manifolds carrying connections on their tangent bundles:
    d_nu(jac[lam', mu]) - jac[lam', sig] G^sig_{mu nu}
    + (G'^{lam'}_{sig' tau'} o f) jac[sig', mu] jac[tau', nu]."""
    n = g3_src.n
    comps = [as_scalar_field(c, base_names(n), g3_src.region) for c in f]

    def jac(xx):
        return np.array([[fd_partial(c, xx, mu, h) for mu in range(n)]
                         for c in comps])

    d2 = np.stack([
        fd_array_partial(jac, x, nu,
                         FD_STEP_NESTED * max(1.0, abs(float(x[nu]))))
        for nu in range(n)])                       # [nu, lam', mu]
    J = jac(x)
    stack = g3_src(x)
    y = tuple(c(x) for c in comps)
    stackp = g3_tgt(y)
    term2 = np.einsum("ls,nsm->lmn", J, stack)
    term3 = np.einsum("tls,sm,tn->lmn", stackp, J, J)
    return d2.transpose(1, 2, 0) - term2 + term3
