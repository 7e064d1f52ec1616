"""Connection coefficient types (2-index, 3-index, affine), adapted frames,
and the coefficient transformation laws.

Storage conventions (docs/conventions.md): 2-index coefficients are an
(r, n) array G[a, mu] over bundle coordinates x1..xn,u1..ur; 3-index
coefficients are an (n, r, r) stack G3[mu, a, b] over the base; the
inhomogeneous part of an affine connection is an (r, n) array over the base.
A FrameChange holds frame matrices: Etilde_mu = B[nu, mu] E_nu on the base
and Etilde_a = B[b, a] E_b on the fibres.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularFrame, SingularJacobian
from .fields import (
    SINGULAR_DET,
    MatrixField,
    Region,
    _FieldArray,
    as_scalar_field,
    fd_array_partial,
    fd_partial,
)


def base_names(n):
    return tuple(f"x{i + 1}" for i in range(n))


def bundle_names(n, r):
    return base_names(n) + tuple(f"u{a + 1}" for a in range(r))


def bundle_region(base, r):
    """Extend a base region by unbounded fibre axes (None stays None)."""
    if base is None:
        return None
    return Region(list(base.bounds) + [(-np.inf, np.inf)] * r)


class TwoIndexField:
    """2-index coefficients G[a, mu](x, u) of a general connection, an
    (r, n) matrix field over the bundle region."""

    def __init__(self, n, r, matrix):
        if matrix.shape != (r, n):
            raise ValueError(f"expected shape {(r, n)}, got {matrix.shape}")
        self.n = n
        self.r = r
        self.matrix = matrix
        self.region = matrix.region

    @classmethod
    def from_exprs(cls, rows, n, r, region=None):
        return cls(n, r, MatrixField.from_exprs(rows, bundle_names(n, r), region))

    @classmethod
    def from_callable(cls, fn, n, r, region=None):
        return cls(n, r, MatrixField.from_callable(fn, (r, n),
                                                   bundle_names(n, r), region))

    @classmethod
    def zero(cls, n, r, region=None):
        return cls.from_exprs([["0"] * n] * r, n, r, region)

    @classmethod
    def from_linear(cls, g3):
        matrix = MatrixField.from_callable(
            lambda *p: two_index_from_linear(g3, p),
            (g3.r, g3.n), bundle_names(g3.n, g3.r),
            bundle_region(g3.region, g3.r))
        return cls(g3.n, g3.r, matrix)

    @classmethod
    def from_affine(cls, aff):
        g3 = aff.linear
        matrix = MatrixField.from_callable(
            lambda *p: two_index_from_affine(aff, p),
            (g3.r, g3.n), bundle_names(g3.n, g3.r),
            bundle_region(g3.region, g3.r))
        return cls(g3.n, g3.r, matrix)

    def __call__(self, p):
        return self.matrix(p)


class CoefficientField3:
    """3-index coefficients of a linear connection: an (n, r, r) stack
    G3[mu, a, b](x) of fields over the base region only."""

    def __init__(self, n, r, stack):
        self.n = n
        self.r = r
        self._stack = stack
        self.region = stack.region
        self.names = stack.names

    @classmethod
    def from_exprs(cls, stacks, region=None):
        stacks = [[list(row) for row in mat] for mat in stacks]
        n = len(stacks)
        r = len(stacks[0])
        names = base_names(n)
        return cls(n, r, _FieldArray((n, r, r), names, region, entries=stacks))

    @classmethod
    def from_callable(cls, fn, n, r, region=None):
        array = _FieldArray((n, r, r), base_names(n), region,
                            array_fn=lambda point: fn(*point))
        return cls(n, r, array)

    @classmethod
    def constant(cls, matrices, region=None):
        matrices = np.asarray(matrices, dtype=float)
        n, r, _ = matrices.shape
        return cls.from_exprs(matrices.tolist(), region)

    @classmethod
    def zero(cls, n, r, region=None):
        return cls.from_exprs([[["0"] * r] * r] * n, region)

    def __call__(self, x):
        return self._stack.value(x)


class AffineCoefficients:
    """Affine connection data: a linear part (3-index stack) plus an (r, n)
    inhomogeneous term over the base."""

    def __init__(self, linear, inhom):
        if inhom.shape != (linear.r, linear.n):
            raise ValueError(f"inhomogeneous part must have shape "
                             f"{(linear.r, linear.n)}, got {inhom.shape}")
        self.linear = linear
        self.inhom = inhom
        self.n = linear.n
        self.r = linear.r
        self.region = linear.region

    @classmethod
    def from_exprs(cls, stacks, inhom_rows, region=None):
        linear = CoefficientField3.from_exprs(stacks, region)
        inhom = MatrixField.from_exprs(inhom_rows, base_names(linear.n), region)
        return cls(linear, inhom)


class FrameChange:
    """A pair of invertible matrix fields over the base: the base block
    B[nu, mu] and the fibre block B[b, a], both frame matrices."""

    def __init__(self, base, fibre):
        if base.shape[0] != base.shape[1] or fibre.shape[0] != fibre.shape[1]:
            raise ValueError("frame-change blocks must be square")
        self.base = base
        self.fibre = fibre
        self.n = base.shape[0]
        self.r = fibre.shape[0]

    @classmethod
    def from_exprs(cls, base_rows, fibre_rows, n, region=None):
        names = base_names(n)
        return cls(MatrixField.from_exprs(base_rows, names, region),
                   MatrixField.from_exprs(fibre_rows, names, region))

    @classmethod
    def identity(cls, n, r, region=None):
        names = base_names(n)
        return cls(MatrixField.constant(np.eye(n), names, region),
                   MatrixField.constant(np.eye(r), names, region))

    def base_at(self, x):
        out = self.base(x)
        if abs(np.linalg.det(out)) < SINGULAR_DET:
            raise SingularFrame(f"singular base block at {tuple(x)}")
        return out

    def fibre_at(self, x):
        out = self.fibre(x)
        if abs(np.linalg.det(out)) < SINGULAR_DET:
            raise SingularFrame(f"singular fibre block at {tuple(x)}")
        return out


class CoordinateChange:
    """Fibre-preserving coordinate change: n base components xtilde(x) and
    r fibre components utilde(x, u). Only the forward maps are stored;
    inverse Jacobians are obtained numerically."""

    def __init__(self, base, fibre, n, r, region=None):
        self.n = n
        self.r = r
        self.base = [as_scalar_field(c, base_names(n), region) for c in base]
        names = bundle_names(n, r)
        fibre_region = bundle_region(region, r) if region is not None else None
        self.fibre = [as_scalar_field(c, names, fibre_region) for c in fibre]
        if len(self.base) != n or len(self.fibre) != r:
            raise ValueError("component count does not match dimensions")

    @classmethod
    def identity(cls, n, r):
        return cls([f"x{i + 1}" for i in range(n)],
                   [f"u{a + 1}" for a in range(r)], n, r)

    @classmethod
    def vector_bundle(cls, base, fibre_matrix, n, r, region=None):
        """utilde = M(x) u for a matrix field M over the base."""
        def comp(a):
            def fn(*p):
                u = np.asarray(p[n:], dtype=float)
                return float((fibre_matrix(p[:n]) @ u)[a])
            return fn
        return cls(base, [comp(a) for a in range(r)], n, r, region)

    def apply(self, p):
        x = tuple(p[:self.n])
        return tuple(c(x) for c in self.base) + tuple(c(p) for c in self.fibre)

    def base_jacobian(self, x):
        """J[alpha, mu] = d xtilde^alpha / d x^mu."""
        return np.array([[fd_partial(c, x, mu) for mu in range(self.n)]
                         for c in self.base])

    def fibre_jacobian_u(self, p):
        """A[a, b] = d utilde^a / d u^b."""
        return np.array([[fd_partial(c, p, self.n + b) for b in range(self.r)]
                         for c in self.fibre])

    def fibre_jacobian_x(self, p):
        """A[a, nu] = d utilde^a / d x^nu."""
        return np.array([[fd_partial(c, p, nu) for nu in range(self.n)]
                         for c in self.fibre])


def two_index_from_linear(g3, p):
    """G[a, mu](x, u) = -G3[mu, a, b](x) u^b."""
    x = tuple(p[:g3.n])
    u = np.asarray(p[g3.n:], dtype=float)
    return -np.einsum("mab,b->am", g3(x), u)


def two_index_from_affine(aff, p):
    """G[a, mu](x, u) = -G3[mu, a, b](x) u^b + Ginh[a, mu](x)."""
    x = tuple(p[:aff.n])
    return two_index_from_linear(aff.linear, p) + aff.inhom(x)


def transform_two_index(g2, change, p):
    """2-index law under a fibre-preserving coordinate change, evaluated at
    the point p given in the old coordinates:
    Gtilde[a, mu] = (d utilde^a/d u^b G[b, nu] + d utilde^a/d x^nu)
                    * (d x^nu / d xtilde^mu)."""
    G = g2(p)
    A_fib = change.fibre_jacobian_u(p)
    A_mix = change.fibre_jacobian_x(p)
    J = change.base_jacobian(tuple(p[:change.n]))
    if abs(np.linalg.det(J)) < SINGULAR_DET:
        raise SingularJacobian(f"singular base Jacobian at {tuple(p)}")
    return (A_fib @ G + A_mix) @ np.linalg.inv(J)


def transform_three_index(g3, change, x, base_frame=None, h=None):
    """3-index law, one matrix per new base direction:
    Gtilde_mu = B[nu, mu] inv(Bf) (G_nu Bf + E_nu(Bf)),
    with E_nu the coordinate frame by default (then E_nu(Bf) = d_nu Bf)."""
    stack = g3(x)
    Bf = change.fibre_at(x)
    Bb = change.base_at(x)
    dBf = np.stack([fd_array_partial(change.fibre, x, nu, h)
                    for nu in range(g3.n)])
    if base_frame is not None:
        E = base_frame(x)
        dBf = np.einsum("ts,tij->sij", E, dBf)
    core = np.stack([np.linalg.solve(Bf, stack[nu] @ Bf + dBf[nu])
                     for nu in range(g3.n)])
    return np.einsum("nm,nab->mab", Bb, core)


def transform_inhomogeneous(G, change, x):
    """Inhomogeneous-term law: Gtilde = inv(Bf) G Bb (purely algebraic)."""
    Gv = G(x) if isinstance(G, MatrixField) else np.asarray(G, dtype=float)
    return np.linalg.solve(change.fibre_at(x), Gv) @ change.base_at(x)


def adapted_frame_matrix(g2, p):
    """Adapted frame block matrix [[I, 0], [G, I]] at p and its closed-form
    inverse [[I, 0], [-G, I]] (the adapted coframe)."""
    G = g2(p)
    n, r = g2.n, g2.r
    M = np.eye(n + r)
    M[n:, :n] = G
    Minv = np.eye(n + r)
    Minv[n:, :n] = -G
    return M, Minv


def fibre_coefficients(g2, p, h=None):
    """Fibre coefficients in the adapted frame: C0[mu, a, b] =
    -d G[a, mu] / d u^b. For a linear connection this equals
    G3[mu, a, b] at the base point."""
    D = np.stack([fd_array_partial(g2, p, g2.n + b, h) for b in range(g2.r)])
    return -D.transpose(2, 1, 0)
