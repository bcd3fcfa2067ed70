"""Convex viscous potentials, their mollification, subgradients and conjugates.

Every supported law is isotropic: the potential depends on a symmetric tensor D
only through the pair (d, t) = (|D - (tr D/3) I|, tr D).  Mollification and the
conjugate supremum are therefore computed in these two reduced coordinates with
a product bump kernel, instead of a six-dimensional convolution.  The even
extension F(d, t) := F(|d|, t) used for the d-axis convolution is the
restriction of the convex potential to a 2-plane of symmetric tensors, so
convexity survives the reduction.

Laws:
  newtonian   F(D) = (mu/2)|D|^2 + (lam/2)(tr D)^2   =>  dF = mu D + lam (tr D) I
  power_law   F(D) = mu0 |dev D|^q
  tabulated   f(d, t) sampled on a rectangular grid, bilinear interpolation

The newtonian potential is chosen so its subgradient reproduces the standard
stress mu D + lam (div u) I exactly (see notes in the repository ledger about
the bulk-term normalization).
"""

import math
from dataclasses import dataclass, field

import numpy as np

_GL_NODES = 64
_BRACKET_HI = 1.0e4
_GOLDEN_TOL = 1.0e-10


class RheologyError(ValueError):
    """Invalid law parameters or usage."""


class RangeError(RheologyError):
    """Conjugate maximization left the representable range."""


def _bump(r):
    """C-infinity bump exp(-1/(1-r^2)) on |r|<1, unnormalized."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    ri = r[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ri * ri))
    return out


def _bump_prime(r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    ri = r[inside]
    one = 1.0 - ri * ri
    out[inside] = np.exp(-1.0 / one) * (-2.0 * ri / (one * one))
    return out


def _kernel_rule():
    """Gauss-Legendre nodes on [-1,1] with discretely normalized bump weights.

    Normalizing the discrete weights (rather than the continuum constant)
    makes sum(w) = 1 and sum(w*r) = 0 exact, so convolving a quadratic adds
    exactly a constant and the F_delta(0) = 0 normalization is machine-exact.
    """
    nodes, gl_w = np.polynomial.legendre.leggauss(_GL_NODES)
    raw = gl_w * _bump(nodes)
    z = raw.sum()
    w = raw / z
    w_prime = gl_w * _bump_prime(nodes) / z
    return nodes, w, w_prime


_KERNEL = _kernel_rule()


def reduce_sym(D):
    """(|dev D|, tr D) of a stack of symmetric 3x3 tensors."""
    D = np.asarray(D, dtype=float)
    t = D[..., 0, 0] + D[..., 1, 1] + D[..., 2, 2]
    frob2 = np.einsum("...ij,...ij->...", D, D)
    dev2 = np.maximum(frob2 - t * t / 3.0, 0.0)
    return np.sqrt(dev2), t


@dataclass
class RheologyLaw:
    kind: str                     # 'newtonian' | 'power_law' | 'tabulated'
    mu: float = 0.0               # newtonian shear viscosity
    lam: float = 0.0              # newtonian bulk viscosity
    mu0: float = 0.0              # coercivity constant (power-law coefficient)
    q: float = 4.0 / 3.0          # power-law exponent
    delta: float = 0.0            # mollification radius (0 = raw law)
    d_nodes: np.ndarray = None    # tabulated grids
    t_nodes: np.ndarray = None
    f_table: np.ndarray = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "newtonian":
            if not (self.mu > 0.0):
                raise RheologyError("newtonian law needs mu > 0")
            if self.lam + 2.0 * self.mu / 3.0 < 0.0:
                raise RheologyError("newtonian law needs lam + 2*mu/3 >= 0")
            if self.mu0 == 0.0:
                # largest constant with F >= mu0 |dev D|^2; the 4/3 bound then
                # holds on bounded boxes with a finite offset mu2
                self.mu0 = self.mu / 2.0
        elif self.kind == "power_law":
            if not (self.mu0 > 0.0 and self.q > 1.0):
                raise RheologyError("power law needs mu0 > 0 and q > 1")
        elif self.kind == "tabulated":
            d = np.asarray(self.d_nodes, dtype=float)
            t = np.asarray(self.t_nodes, dtype=float)
            f = np.asarray(self.f_table, dtype=float)
            if d.ndim != 1 or t.ndim != 1 or f.shape != (d.size, t.size):
                raise RheologyError("tabulated law: f_table must be (len(d), len(t))")
            if d[0] != 0.0 or np.any(np.diff(d) <= 0) or np.any(np.diff(t) <= 0):
                raise RheologyError("tabulated law: d starts at 0, grids strictly increasing")
            if not (self.mu0 > 0.0):
                raise RheologyError("tabulated law: supply the coercivity constant mu0")
            self.d_nodes, self.t_nodes, self.f_table = d, t, f
        else:
            raise RheologyError(f"unknown rheology kind {self.kind!r}")
        if self.delta < 0.0:
            raise RheologyError("delta must be >= 0")

    # --- raw reduced potential and its almost-everywhere partials ---------

    def _raw(self, d, t):
        d = np.abs(np.asarray(d, dtype=float))
        t = np.asarray(t, dtype=float)
        if self.kind == "newtonian":
            return 0.5 * self.mu * (d * d + t * t / 3.0) + 0.5 * self.lam * t * t
        if self.kind == "power_law":
            return self.mu0 * d ** self.q
        # tabulated, bilinear
        if np.any(d > self.d_nodes[-1]) or np.any(t < self.t_nodes[0]) or np.any(t > self.t_nodes[-1]):
            raise RangeError(
                f"tabulated potential queried outside table: d<= {self.d_nodes[-1]}, "
                f"t in [{self.t_nodes[0]}, {self.t_nodes[-1]}]")
        return self._bilinear(d, t, derivative=None)

    def _raw_partials(self, d, t):
        ds = np.asarray(d, dtype=float)
        sign = np.sign(ds)
        d = np.abs(ds)
        t = np.asarray(t, dtype=float)
        if self.kind == "newtonian":
            return sign * self.mu * d, (self.mu / 3.0 + self.lam) * t
        if self.kind == "power_law":
            fd = self.mu0 * self.q * d ** (self.q - 1.0)
            return sign * fd, np.zeros_like(t)
        fd = self._bilinear(d, t, derivative="d")
        ft = self._bilinear(d, t, derivative="t")
        return sign * fd, ft

    def _bilinear(self, d, t, derivative):
        dn, tn, f = self.d_nodes, self.t_nodes, self.f_table
        i = np.clip(np.searchsorted(dn, d, side="right") - 1, 0, dn.size - 2)
        j = np.clip(np.searchsorted(tn, t, side="right") - 1, 0, tn.size - 2)
        hd = dn[i + 1] - dn[i]
        ht = tn[j + 1] - tn[j]
        a = (d - dn[i]) / hd
        b = (t - tn[j]) / ht
        f00, f10 = f[i, j], f[i + 1, j]
        f01, f11 = f[i, j + 1], f[i + 1, j + 1]
        if derivative is None:
            return (1 - a) * (1 - b) * f00 + a * (1 - b) * f10 + (1 - a) * b * f01 + a * b * f11
        if derivative == "d":
            return ((1 - b) * (f10 - f00) + b * (f11 - f01)) / hd
        return ((1 - a) * (f01 - f00) + a * (f11 - f10)) / ht

    # --- mollified reduced potential ---------------------------------------

    def _moll_shift(self):
        key = "shift"
        if key not in self._cache:
            nodes, w, _ = _KERNEL
            s = self.delta * nodes
            vals = self._raw(-s[:, None] + 0.0, -s[None, :] + 0.0)
            self._cache[key] = float(np.einsum("i,j,ij->", w, w, vals))
        return self._cache[key]

    def _moll_value(self, d, t):
        nodes, w, _ = _KERNEL
        d = np.asarray(d, dtype=float)
        t = np.asarray(t, dtype=float)
        d, t = np.broadcast_arrays(d, t)
        shape = d.shape
        df, tf = d.reshape(-1), t.reshape(-1)
        out = np.empty(df.size, dtype=float)
        s = self.delta * nodes
        chunk = max(1, 2_000_000 // (nodes.size * nodes.size))
        for k in range(0, df.size, chunk):
            dd = df[k:k + chunk, None, None] - s[None, :, None]
            tt = tf[k:k + chunk, None, None] - s[None, None, :]
            vals = self._raw(dd, tt)
            out[k:k + chunk] = np.einsum("i,j,cij->c", w, w, vals)
        return out.reshape(shape) - self._moll_shift()

    def _moll_partials(self, d, t):
        nodes, w, _ = _KERNEL
        d = np.asarray(d, dtype=float)
        t = np.asarray(t, dtype=float)
        d, t = np.broadcast_arrays(d, t)
        shape = d.shape
        df, tf = d.reshape(-1), t.reshape(-1)
        fd = np.empty(df.size, dtype=float)
        ft = np.empty(df.size, dtype=float)
        s = self.delta * nodes
        chunk = max(1, 2_000_000 // (nodes.size * nodes.size))
        for k in range(0, df.size, chunk):
            dd = df[k:k + chunk, None, None] - s[None, :, None]
            tt = tf[k:k + chunk, None, None] - s[None, None, :]
            pd, pt = self._raw_partials(dd, tt)
            fd[k:k + chunk] = np.einsum("i,j,cij->c", w, w, pd)
            ft[k:k + chunk] = np.einsum("i,j,cij->c", w, w, pt)
        return fd.reshape(shape), ft.reshape(shape)

    def value_dt(self, d, t):
        """Reduced potential (mollified when delta > 0)."""
        if self.delta > 0.0:
            return self._moll_value(d, t)
        return self._raw(d, t)

    def partials_dt(self, d, t):
        if self.delta > 0.0:
            return self._moll_partials(d, t)
        return self._raw_partials(d, t)


def newtonian_law(mu, lam=0.0, delta=0.0):
    return RheologyLaw(kind="newtonian", mu=mu, lam=lam, delta=delta)


def power_law(mu0, q=4.0 / 3.0, delta=0.0):
    return RheologyLaw(kind="power_law", mu0=mu0, q=q, delta=delta)


def tabulated_law(d_nodes, t_nodes, f_table, mu0, delta=0.0):
    return RheologyLaw(kind="tabulated", mu0=mu0, delta=delta,
                       d_nodes=d_nodes, t_nodes=t_nodes, f_table=f_table)


def mollify(law, delta):
    if not delta > 0.0:
        raise RheologyError("mollification radius must be positive")
    return RheologyLaw(kind=law.kind, mu=law.mu, lam=law.lam, mu0=law.mu0,
                       q=law.q, delta=delta, d_nodes=law.d_nodes,
                       t_nodes=law.t_nodes, f_table=law.f_table)


def potential(law, D):
    """F(D) (or F_delta(D) when the law carries a mollification radius)."""
    d, t = reduce_sym(D)
    return law.value_dt(d, t)


def subgradient(law, D):
    """A member of dF(D); for newtonian with delta=0: mu D + lam (tr D) I.

    Tabulated laws must be mollified first (delta > 0) so the gradient exists
    everywhere; that precondition is a configuration error, not a crash site.
    """
    if law.kind == "tabulated" and law.delta == 0.0:
        raise RheologyError("tabulated laws need delta > 0 before subgradient evaluation")
    D = np.asarray(D, dtype=float)
    d, t = reduce_sym(D)
    fd, ft = law.partials_dt(d, t)
    tiny = d < 1.0e-14
    scale = np.where(tiny, 0.0, fd / np.where(tiny, 1.0, d))
    devD = D.copy()
    t3 = t / 3.0
    for i in range(3):
        devD[..., i, i] -= t3
    S = scale[..., None, None] * devD
    for i in range(3):
        S[..., i, i] += ft
    return S


def _golden_max_batch(f, lo, hi, tol=_GOLDEN_TOL):
    """Vectorized golden-section maximization of f over [lo, hi] per entry.

    Evaluates both interior points each iteration; f must accept arrays.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    width = float(np.max(hi - lo))
    if width <= tol:
        xm = 0.5 * (lo + hi)
        return xm, f(xm)
    n_iter = max(1, int(math.ceil(math.log(tol / width) / math.log(invphi))))
    for _ in range(n_iter):
        x1 = hi - invphi * (hi - lo)
        x2 = lo + invphi * (hi - lo)
        take_left = f(x1) >= f(x2)
        hi = np.where(take_left, x2, hi)
        lo = np.where(take_left, lo, x1)
    xm = 0.5 * (lo + hi)
    return xm, f(xm)


def conjugate_batch(law, s, sigma):
    """F*(S) on reduced stress coordinates (s, sigma) = (|dev S|, tr S), batched."""
    s = np.asarray(s, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    s, sigma = np.broadcast_arrays(s, sigma)
    if law.kind == "newtonian" and law.delta == 0.0:
        bulk = law.mu + 3.0 * law.lam
        dev_part = s * s / (2.0 * law.mu)
        if bulk < 0.0:
            # potential unbounded below along the trace axis
            return np.full(s.shape, np.inf)
        if bulk == 0.0:
            return np.where(np.abs(sigma) <= 1.0e-12 * (1.0 + s), dev_part, np.inf)
        return dev_part + sigma * sigma / (6.0 * bulk)
    if law.kind == "power_law":
        # mollification along t of a t-independent potential changes nothing,
        # so the conjugate is +inf off the deviatoric axis for any delta
        out = np.full(s.shape, np.inf)
        on_axis = np.abs(sigma) <= 1.0e-10 * (1.0 + s)
        if law.delta == 0.0:
            sv = np.maximum(s, 0.0)
            expo = law.q / (law.q - 1.0)
            vals = law.mu0 * (law.q - 1.0) * (sv / (law.q * law.mu0)) ** expo
            out[on_axis] = vals[on_axis]
            return out
        sa = s[on_axis]
        if sa.size:
            def neg_obj(dd):
                return sa * dd - law.value_dt(dd, np.zeros_like(dd))
            dstar, val = _golden_max_batch(neg_obj, np.zeros_like(sa),
                                           np.full(sa.shape, _BRACKET_HI))
            _check_bracket(dstar, 0.0, _BRACKET_HI, s=sa, lower_ok=True)
            out[on_axis] = val
        return out
    # generic isotropic law: alternating 1-D concave maximizations
    shape = s.shape
    sf = s.reshape(-1)
    sigmaf = sigma.reshape(-1)
    if law.kind == "tabulated":
        d_hi = law.d_nodes[-1] - 1.001 * law.delta
        t_lo = law.t_nodes[0] + 1.001 * law.delta
        t_hi = law.t_nodes[-1] - 1.001 * law.delta
        if d_hi <= 0 or t_hi <= t_lo:
            raise RheologyError("table too narrow for this mollification radius")
    else:
        d_hi, t_lo, t_hi = _BRACKET_HI, -_BRACKET_HI, _BRACKET_HI
    d_cur = np.zeros_like(sf)
    t_cur = np.full_like(sf, np.clip(0.0, t_lo, t_hi))
    val = sf * 0.0
    for _ in range(80):
        def along_d(dd):
            return sf * dd + sigmaf * t_cur / 3.0 - law.value_dt(dd, t_cur)
        d_new, _ = _golden_max_batch(along_d, np.zeros_like(sf), np.full(sf.shape, d_hi))

        def along_t(tt):
            return sf * d_new + sigmaf * tt / 3.0 - law.value_dt(d_new, tt)
        t_new, val = _golden_max_batch(along_t, np.full(sf.shape, t_lo),
                                       np.full(sf.shape, t_hi))
        move = np.maximum(np.abs(d_new - d_cur), np.abs(t_new - t_cur))
        d_cur, t_cur = d_new, t_new
        if np.max(move) < 1.0e-9:
            break
    _check_bracket(d_cur, 0.0, d_hi, s=sf, lower_ok=True)
    _check_bracket(t_cur, t_lo, t_hi, s=sigmaf)
    return val.reshape(shape)


def _check_bracket(x, lo, hi, s, lower_ok=False):
    margin = 1.0e-6 * (hi - lo)
    bad = x > hi - margin
    if not lower_ok:
        bad = bad | (x < lo + margin)
    if np.any(bad):
        worst = float(np.max(np.abs(np.asarray(s)[bad])))
        raise RangeError(
            f"conjugate maximizer escaped the bracket (stress norm {worst:g}); "
            "stress outside the representable range of this law")


def conjugate(law, S):
    """F*(S) = sup_D { S:D - F(D) } for a symmetric 3x3 stress S."""
    s, sigma = reduce_sym(S)
    out = conjugate_batch(law, np.atleast_1d(s), np.atleast_1d(sigma))
    return float(out[0]) if np.isscalar(s) or s.shape == () else out


def fenchel_young_residual(law, D, S):
    """S:D - F(D) - F*(S); <= 0 always, = 0 exactly when S is a subgradient at D."""
    D = np.asarray(D, dtype=float)
    S = np.asarray(S, dtype=float)
    pairing = np.einsum("...ij,...ij->...", S, D)
    d, t = reduce_sym(D)
    fval = law.value_dt(d, t)
    s, sigma = reduce_sym(S)
    fstar = conjugate_batch(law, s, sigma)
    return pairing - fval - fstar


def certify_coercivity(law, box=10.0, n_d=81, n_t=41, mu2_cap=1.0e6):
    """Check F_delta(D) >= mu1 |dev D|^{4/3} - mu2 on a sample box.

    Tries mu1 = mu0 first (the strongest claim), backing off toward mu0/2 only
    if the offset mu2 explodes; reports the pair actually verified.
    """
    d = np.linspace(0.0, box, n_d)
    t = np.linspace(-box, box, n_t)
    dd, tt = np.meshgrid(d, t, indexing="ij")
    fvals = law.value_dt(dd, tt)
    target_pow = dd ** (4.0 / 3.0)
    for mu1 in np.linspace(law.mu0, law.mu0 / 2.0, 11):
        mu2 = max(0.0, float(np.max(mu1 * target_pow - fvals)))
        if mu2 <= mu2_cap:
            ok = bool(np.all(fvals >= mu1 * target_pow - mu2 - 1.0e-12))
            return {"mu1": float(mu1), "mu2": mu2, "pass": ok}
    return {"mu1": law.mu0 / 2.0, "mu2": math.inf, "pass": False}


class ConjugateTable:
    """F* sampled on an (s, sigma) grid with bilinear interpolation."""

    def __init__(self, s_nodes, sigma_nodes, values):
        self.s_nodes = np.asarray(s_nodes, dtype=float)
        self.sigma_nodes = np.asarray(sigma_nodes, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (self.s_nodes.size, self.sigma_nodes.size):
            raise RheologyError("conjugate table shape mismatch")

    @classmethod
    def build(cls, law, s_nodes, sigma_nodes):
        ss, gg = np.meshgrid(np.asarray(s_nodes, float), np.asarray(sigma_nodes, float),
                             indexing="ij")
        vals = conjugate_batch(law, ss.ravel(), gg.ravel()).reshape(ss.shape)
        return cls(s_nodes, sigma_nodes, vals)

    def __call__(self, s, sigma):
        s = np.asarray(s, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        sn, gn, v = self.s_nodes, self.sigma_nodes, self.values
        if np.any(s < sn[0]) or np.any(s > sn[-1]) or np.any(sigma < gn[0]) or np.any(sigma > gn[-1]):
            raise RangeError("stress outside conjugate table range")
        i = np.clip(np.searchsorted(sn, s, side="right") - 1, 0, sn.size - 2)
        j = np.clip(np.searchsorted(gn, sigma, side="right") - 1, 0, gn.size - 2)
        a = (s - sn[i]) / (sn[i + 1] - sn[i])
        b = (sigma - gn[j]) / (gn[j + 1] - gn[j])
        return ((1 - a) * (1 - b) * v[i, j] + a * (1 - b) * v[i + 1, j]
                + (1 - a) * b * v[i, j + 1] + a * b * v[i + 1, j + 1])

    def save(self, path):
        with open(path, "w") as fh:
            fh.write("s,sigma,Fstar\n")
            for i, s in enumerate(self.s_nodes):
                for j, g in enumerate(self.sigma_nodes):
                    fh.write(f"{s:.17g},{g:.17g},{self.values[i, j]:.17g}\n")

    @classmethod
    def load(cls, path):
        rows = np.loadtxt(path, delimiter=",", skiprows=1)
        s = np.unique(rows[:, 0])
        g = np.unique(rows[:, 1])
        v = rows[:, 2].reshape(s.size, g.size)
        return cls(s, g, v)
