"""
Divergence-free velocity fields on the doubly periodic square.

Fields are stored as Fourier coefficients in the half-spectrum layout used
by ``rfft2``: an array of shape (2, n, n//2 + 1) per field, one slab per
velocity component.  The coefficient convention is

    u(x) = sum_k u_hat(k) exp(i k.x)

so that the true L2 norm over the box is ``length**2 * sum |u_hat|**2``
(summed over the full spectrum).  Nyquist modes are never populated, which
keeps products on the 2n padded grid free of aliasing.
"""

import json
import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * math.pi


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class TorusGrid:
    """Truncated Fourier lattice on [0, length)^2.

    Retained modes satisfy |k_i| <= n/2 - 1 (integer units), k != 0.
    """

    resolution_n: int
    domain_length: float = TWO_PI
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.resolution_n
        if not isinstance(n, (int, np.integer)) or n < 4 or n % 2:
            raise ValueError(f"resolution_n must be an even integer >= 4, got {n!r}")
        if not self.domain_length > 0:
            raise ValueError("domain_length must be positive")
        object.__setattr__(self, "resolution_n", int(n))
        object.__setattr__(self, "domain_length", float(self.domain_length))

        half = n // 2
        scale = TWO_PI / self.domain_length
        ix = np.fft.fftfreq(n, 1.0 / n).astype(int)
        iy = np.arange(half + 1)
        IX, IY = np.meshgrid(ix, iy, indexing="ij")
        mask = (np.abs(IX) <= half - 1) & (IY <= half - 1) & ((IX != 0) | (IY != 0))
        kx = scale * IX
        ky = scale * IY
        k2 = kx**2 + ky**2
        weight = np.where(IY == 0, 1.0, 2.0) * mask
        inv_k2 = np.zeros_like(k2)
        inv_k2[mask] = 1.0 / k2[mask]

        c = self._cache
        c.update(
            ix=IX, iy=IY, kx=kx, ky=ky, k2=k2, mask=mask, weight=weight,
            inv_k2=inv_k2, padded=2 * n,
        )
        for v in c.values():
            if isinstance(v, np.ndarray):
                v.flags.writeable = False

    # lattice data -------------------------------------------------------
    @property
    def shape(self):
        return (2, self.resolution_n, self.resolution_n // 2 + 1)

    @property
    def wavenumber_scale(self):
        return TWO_PI / self.domain_length

    @property
    def lambda1(self):
        return self.wavenumber_scale**2

    @property
    def area(self):
        return self.domain_length**2

    @property
    def padded(self):
        return self._cache["padded"]

    kx = property(lambda self: self._cache["kx"])
    ky = property(lambda self: self._cache["ky"])
    k2 = property(lambda self: self._cache["k2"])
    mask = property(lambda self: self._cache["mask"])
    weight = property(lambda self: self._cache["weight"])
    inv_k2 = property(lambda self: self._cache["inv_k2"])
    ix = property(lambda self: self._cache["ix"])
    iy = property(lambda self: self._cache["iy"])

    def physical_coordinates(self):
        """Coordinates of the padded quadrature grid, shape (P, P) each."""
        P = self.padded
        x = self.domain_length * np.arange(P) / P
        return np.meshgrid(x, x, indexing="ij")

    def describe(self):
        return {"resolution_n": self.resolution_n, "domain_length": self.domain_length}

    # transforms ---------------------------------------------------------
    def to_physical(self, c):
        """Half-spectrum coefficients (..., n, n//2+1) -> real values on the padded grid."""
        P = self.padded
        h = self.resolution_n // 2
        buf = np.zeros(c.shape[:-2] + (P, P // 2 + 1), dtype=complex)
        buf[..., :h, :h] = c[..., :h, :h]
        buf[..., P - h + 1:, :h] = c[..., h + 1:, :h]
        return sfft.irfft2(buf, s=(P, P), norm="forward", workers=1, overwrite_x=True)

    def from_physical(self, v):
        """Real values on the padded grid -> truncated half-spectrum coefficients."""
        n = self.resolution_n
        P = self.padded
        h = n // 2
        full = sfft.rfft2(v, norm="forward", workers=1)
        out = np.zeros(v.shape[:-2] + (n, h + 1), dtype=complex)
        out[..., :h, :h] = full[..., :h, :h]
        out[..., h + 1:, :h] = full[..., P - h + 1:, :h]
        out[..., 0, 0] = 0.0
        return out


def _check_same(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatch("fields live on different grids")
    return g


def _hermitian(grid, c):
    # enforce u(-kx, 0) = conj(u(kx, 0)) on the ky = 0 column
    col = c[..., :, 0]
    mirrored = np.conj(np.roll(col[..., ::-1], 1, axis=-1))
    c[..., :, 0] = 0.5 * (col + mirrored)
    return c


def _projector(grid):
    # entries of mask * (I - k k^T / |k|^2)
    P = grid._cache.get("proj")
    if P is None:
        kx, ky, ik, m = grid.kx, grid.ky, grid.inv_k2, grid.mask
        P = ((1 - kx * kx * ik) * m, -kx * ky * ik * m, (1 - ky * ky * ik) * m)
        for a in P:
            a.flags.writeable = False
        grid._cache["proj"] = P
    return P


def _project(grid, c):
    p00, p01, p11 = _projector(grid)
    out = np.empty_like(c)
    np.multiply(p00, c[0], out=out[0])
    out[0] += p01 * c[1]
    np.multiply(p11, c[1], out=out[1])
    out[1] += p01 * c[0]
    return out


class VelocityField:
    """Immutable truncated velocity field; see module docstring for layout."""

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid, coeffs):
        coeffs = np.array(coeffs, dtype=complex)
        if coeffs.shape != grid.shape:
            raise ValueError(f"coefficient shape {coeffs.shape} != {grid.shape}")
        coeffs.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("VelocityField is immutable")

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    def __add__(self, other):
        _check_same(self, other)
        return VelocityField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same(self, other)
        return VelocityField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, s):
        return VelocityField(self.grid, self.coeffs * float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return VelocityField(self.grid, -self.coeffs)

    def inner(self, other):
        return inner(self, other)

    def physical(self):
        return self.grid.to_physical(self.coeffs)

    def divergence_norm(self):
        """L2 norm of div u (zero for an admissible field)."""
        g = self.grid
        d = g.kx * self.coeffs[0] + g.ky * self.coeffs[1]
        return math.sqrt(g.area * float(np.sum(g.weight * np.abs(d) ** 2)))

    def mean(self):
        return self.coeffs[:, 0, 0].copy()


# ---------------------------------------------------------------------------
# spectral sums (exact Parseval)

def _weights(grid, power):
    # area * rfft multiplicity * |k|^(2 power), flattened for dot products
    key = ("w", power)
    w = grid._cache.get(key)
    if w is None:
        w = np.ascontiguousarray((grid.area * grid.weight * grid.k2**power).ravel())
        w.flags.writeable = False
        grid._cache[key] = w
    return w


def _sq(c):
    # |c|^2 summed over components; the float view avoids complex temporaries
    v = np.ascontiguousarray(c).reshape(c.shape[0], -1).view(np.float64)
    v = v * v
    e = v[0] if c.shape[0] == 1 else v.sum(axis=0)
    return e[0::2] + e[1::2]


def _wsum(grid, a):
    return float(np.sum(grid.weight * a))


def inner_coeffs(grid, a, b):
    prod = (a.real * b.real + a.imag * b.imag).sum(axis=0).ravel()
    return float(_weights(grid, 0) @ prod)


def l2_coeffs(grid, c):
    return math.sqrt(float(_weights(grid, 0) @ _sq(c)))


def h1_coeffs(grid, c):
    return math.sqrt(float(_weights(grid, 1) @ _sq(c)))


def lap_coeffs(grid, c):
    return math.sqrt(float(_weights(grid, 2) @ _sq(c)))


def norm_triple(grid, c):
    """(||u||, ||grad u||, ||Lap u||) from one pass over the coefficients."""
    e = _sq(c)
    return tuple(math.sqrt(float(_weights(grid, p) @ e)) for p in (0, 1, 2))


def inner(u, v):
    g = _check_same(u, v)
    return inner_coeffs(g, u.coeffs, v.coeffs)


def l4_norm(u):
    # |u|^4 has modes up to 4(n/2-1) < 2n, so the padded rectangle rule is exact
    up = u.physical()
    s = up[0] ** 2 + up[1] ** 2
    return (u.grid.area * float(np.mean(s * s))) ** 0.25


def norms(u):
    """(l2, h1_semi, l4, lap) with true integral normalization."""
    g, c = u.grid, u.coeffs
    return (l2_coeffs(g, c), h1_coeffs(g, c), l4_norm(u), lap_coeffs(g, c))


def l2_physical(u):
    """L2 norm by quadrature on the padded grid (independent of Parseval)."""
    up = u.physical()
    return math.sqrt(u.grid.area * float(np.mean(up[0] ** 2 + up[1] ** 2)))


# 2^(-1/4) with a 25% safety factor; the sharp torus constant is not known here
LADYZHENSKAYA_DEFAULT = 2.0 ** -0.25 * 1.25


def ladyzhenskaya_survey(fields, c_l=LADYZHENSKAYA_DEFAULT):
    """(largest ratio over fields, whether it stays below c_l)."""
    worst = max((ladyzhenskaya_ratio(u) for u in fields), default=0.0)
    return worst, worst <= c_l


def ladyzhenskaya_ratio(u):
    l2, h1, l4, _ = norms(u)
    if l2 == 0.0:
        return 0.0
    return l4 / math.sqrt(l2 * h1)


# ---------------------------------------------------------------------------
# operators

def leray_project(grid, raw):
    """Project a component-wise coefficient array onto mean-zero solenoidal fields.

    Accepts either a raw (2, n, n//2+1) array or a VelocityField.
    """
    c = raw.coeffs if isinstance(raw, VelocityField) else np.asarray(raw, dtype=complex)
    c = _hermitian(grid, np.array(c, dtype=complex))
    return VelocityField(grid, _project(grid, c))


def stokes_apply(u):
    g = u.grid
    return VelocityField(g, g.k2 * u.coeffs)


def _gradient_physical(grid, c):
    # d_j v_i for i, j in {0, 1}; returns array (2, 2, P, P) indexed [i, j]
    k = (grid.kx, grid.ky)
    d = np.stack([np.stack([1j * k[j] * c[i] for j in range(2)]) for i in range(2)])
    return grid.to_physical(d)


def _advection_physical(grid, cu, cv):
    up = grid.to_physical(cu)
    dv = _gradient_physical(grid, cv)
    return np.stack([up[0] * dv[i, 0] + up[1] * dv[i, 1] for i in range(2)])


def trilinear_b(u, v, w):
    """b(u, v, w) = ((u.grad) v, w), evaluated by exact padded quadrature."""
    g = _check_same(u, v, w)
    adv = _advection_physical(g, u.coeffs, v.coeffs)
    wp = g.to_physical(w.coeffs)
    return g.area * float(np.mean(adv[0] * wp[0] + adv[1] * wp[1]))


def nonlinear_coeffs(grid, cu, cv):
    adv = _advection_physical(grid, cu, cv)
    return _project(grid, grid.from_physical(adv))


def self_advection_coeffs(grid, c):
    """P[(w.grad) w] through the rotational form P[omega x w].

    The discarded gradient of |w|^2/2 is resolved exactly on the padded grid,
    so its projection vanishes identically and the result equals the
    general product form.
    """
    kx, ky = grid.kx, grid.ky
    stack = np.empty((3,) + c.shape[1:], dtype=complex)
    stack[0] = c[0]
    stack[1] = c[1]
    stack[2] = 1j * (kx * c[1] - ky * c[0])
    p = grid.to_physical(stack)
    prod = np.empty((2,) + p.shape[1:])
    np.multiply(p[2], p[1], out=prod[0])
    np.negative(prod[0], out=prod[0])
    np.multiply(p[2], p[0], out=prod[1])
    return _project(grid, grid.from_physical(prod))


def nonlinear_term(u, v):
    """Leray-projected, truncated B(u, v)."""
    g = _check_same(u, v)
    return VelocityField(g, nonlinear_coeffs(g, u.coeffs, v.coeffs))


# ---------------------------------------------------------------------------
# constructors

def field_from_function(grid, fn):
    """Sample fn(x, y) -> (ux, uy) on the padded grid, transform, project."""
    X, Y = grid.physical_coordinates()
    ux, uy = fn(X, Y)
    vals = np.stack([np.broadcast_to(ux, X.shape), np.broadcast_to(uy, X.shape)]).astype(float)
    return leray_project(grid, grid.from_physical(vals))


def taylor_green(grid, amplitude=1.0):
    """u = A (cos x sin y, -sin x cos y) in units of the lowest wavenumber."""
    s = grid.wavenumber_scale
    return field_from_function(
        grid,
        lambda x, y: (amplitude * np.cos(s * x) * np.sin(s * y),
                      -amplitude * np.sin(s * x) * np.cos(s * y)),
    )


def random_divfree_field(grid, seed, amplitude=1.0, decay=2.0):
    """Random solenoidal field with spectrum ~ |k|^-decay, scaled to ||u|| = amplitude."""
    rng = np.random.default_rng(seed)
    shape = grid.shape
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    kmag = np.sqrt(np.where(grid.mask, grid.k2, 1.0))
    raw *= kmag ** (-float(decay))
    u = leray_project(grid, raw)
    norm = l2_coeffs(grid, u.coeffs)
    if amplitude == 0 or norm == 0:
        return VelocityField.zeros(grid)
    return VelocityField(grid, u.coeffs * (amplitude / norm))


def gradient_field(grid, g_hat):
    """Coefficients of grad(phi) for scalar coefficients g_hat (no projection)."""
    return np.stack([1j * grid.kx * g_hat, 1j * grid.ky * g_hat]) * grid.mask


# ---------------------------------------------------------------------------
# snapshot I/O
#
# Binary layout: 8-byte magic b"TORUSFLD", little-endian uint32 header length,
# UTF-8 JSON header, then little-endian records of
#   int32 k1, int32 k2, float64 re1, im1, re2, im2
# one per retained mode in the half spectrum (k2 >= 0).  Integer wavenumbers
# are lattice indices; physical wavenumbers are 2*pi/domain_length times them.
# JSON files (suffix .json) hold the same header plus a "records" list.

SNAPSHOT_MAGIC = b"TORUSFLD"
RECORD_DTYPE = np.dtype([("k1", "<i4"), ("k2", "<i4"), ("re1", "<f8"), ("im1", "<f8"),
                         ("re2", "<f8"), ("im2", "<f8")])


def _records(u):
    g = u.grid
    sel = np.nonzero(g.mask)
    rec = np.zeros(len(sel[0]), dtype=RECORD_DTYPE)
    rec["k1"] = g.ix[sel]
    rec["k2"] = g.iy[sel]
    c = u.coeffs
    rec["re1"], rec["im1"] = c[0][sel].real, c[0][sel].imag
    rec["re2"], rec["im2"] = c[1][sel].real, c[1][sel].imag
    return rec


def _from_records(grid, rec):
    n = grid.resolution_n
    c = np.zeros(grid.shape, dtype=complex)
    i = np.asarray(rec["k1"]) % n
    j = np.asarray(rec["k2"])
    c[0, i, j] = np.asarray(rec["re1"]) + 1j * np.asarray(rec["im1"])
    c[1, i, j] = np.asarray(rec["re2"]) + 1j * np.asarray(rec["im2"])
    return VelocityField(grid, c * grid.mask)


def snapshot_bytes(u, meta=None):
    header = {"format": "torus-field-v1", "byte_order": "little", **u.grid.describe()}
    if meta:
        header["meta"] = meta
    h = json.dumps(header, sort_keys=True).encode()
    return SNAPSHOT_MAGIC + struct.pack("<I", len(h)) + h + _records(u).tobytes()


def save_snapshot(path, u, meta=None):
    path = str(path)
    if path.endswith(".json"):
        header = {"format": "torus-field-v1", **u.grid.describe()}
        if meta:
            header["meta"] = meta
        rec = _records(u)
        header["records"] = [[int(r["k1"]), int(r["k2"]), float(r["re1"]), float(r["im1"]),
                              float(r["re2"]), float(r["im2"])] for r in rec]
        data = json.dumps(header, sort_keys=True).encode()
    else:
        data = snapshot_bytes(u, meta)
    # write-then-rename so a crash never leaves a partial snapshot
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    tmp = os.path.join(d, "." + os.path.basename(path) + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def load_snapshot(path):
    path = str(path)
    with open(path, "rb") as fh:
        data = fh.read()
    if path.endswith(".json"):
        header = json.loads(data)
        grid = TorusGrid(header["resolution_n"], header["domain_length"])
        arr = np.array(header["records"], dtype=float).reshape(-1, 6)
        rec = {"k1": arr[:, 0].astype(int), "k2": arr[:, 1].astype(int),
               "re1": arr[:, 2], "im1": arr[:, 3], "re2": arr[:, 4], "im2": arr[:, 5]}
        return _from_records(grid, rec)
    if data[:8] != SNAPSHOT_MAGIC:
        raise ValueError("not a torus field snapshot")
    (hl,) = struct.unpack("<I", data[8:12])
    header = json.loads(data[12:12 + hl])
    grid = TorusGrid(header["resolution_n"], header["domain_length"])
    rec = np.frombuffer(data[12 + hl:], dtype=RECORD_DTYPE)
    return _from_records(grid, rec)
