import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oneleg.spectral_field import (
    LADYZHENSKAYA_DEFAULT,
    GridMismatch,
    TorusGrid,
    VelocityField,
    field_from_function,
    gradient_field,
    h1_coeffs,
    inner,
    l2_physical,
    ladyzhenskaya_ratio,
    ladyzhenskaya_survey,
    leray_project,
    load_snapshot,
    nonlinear_term,
    norms,
    random_divfree_field,
    save_snapshot,
    self_advection_coeffs,
    nonlinear_coeffs,
    snapshot_bytes,
    stokes_apply,
    taylor_green,
    trilinear_b,
)


def single_mode(grid, k1, k2, c):
    """Solenoidal mode c * (k2, -k1)/|k| exp(i k.x) + c.c., built in physical space."""
    kk = math.hypot(k1, k2)
    s = grid.wavenumber_scale
    return field_from_function(grid, lambda x, y: (
        2 * (c * np.exp(1j * s * (k1 * x + k2 * y))).real * k2 / kk,
        -2 * (c * np.exp(1j * s * (k1 * x + k2 * y))).real * k1 / kk))


# --- grid ---------------------------------------------------------------------

def test_grid_validation():
    for bad in (3, 5, 2, 0, 7.0):
        with pytest.raises(ValueError):
            TorusGrid(bad)
    with pytest.raises(ValueError):
        TorusGrid(8, 0.0)


def test_lambda1():
    assert TorusGrid(8).lambda1 == pytest.approx(1.0, rel=1e-15)
    assert TorusGrid(8, 1.0).lambda1 == pytest.approx((2 * math.pi) ** 2, rel=1e-15)


# --- projection -----------------------------------------------------------------

def test_project_zero(grid):
    z = leray_project(grid, np.zeros(grid.shape, complex))
    assert not np.any(z.coeffs)


def test_project_idempotent(grid, rng):
    raw = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    p1 = leray_project(grid, raw)
    p2 = leray_project(grid, p1)
    assert np.max(np.abs(p2.coeffs - p1.coeffs)) <= 1e-15 * np.max(np.abs(p1.coeffs))


def test_project_divfree_unchanged(grid):
    u = random_divfree_field(grid, 4)
    assert np.allclose(leray_project(grid, u).coeffs, u.coeffs, rtol=0, atol=1e-16)


def test_project_kills_gradients(grid, rng):
    # physical gradient of a real scalar: phi = sum a cos(k.x) + b sin(k.x)
    s = grid.wavenumber_scale
    modes = [(1, 0), (2, -3), (5, 4), (-7, 2)]
    amps = rng.standard_normal((len(modes), 2))

    def fn(x, y):
        gx = np.zeros_like(x)
        gy = np.zeros_like(x)
        for (k1, k2), (a, b) in zip(modes, amps):
            ph = s * (k1 * x + k2 * y)
            d = -a * np.sin(ph) + b * np.cos(ph)
            gx = gx + s * k1 * d
            gy = gy + s * k2 * d
        return gx, gy

    raw = grid.from_physical(np.stack(fn(*grid.physical_coordinates())))
    assert np.max(np.abs(raw)) > 0.1
    out = leray_project(grid, raw)
    assert math.sqrt(grid.area) * np.max(np.abs(out.coeffs)) < 1e-14


def test_gradient_field_helper(grid, rng):
    g_hat = (rng.standard_normal(grid.shape[1:]) + 1j * rng.standard_normal(grid.shape[1:]))
    out = leray_project(grid, gradient_field(grid, g_hat))
    assert np.max(np.abs(out.coeffs)) < 1e-13


# --- invariants -------------------------------------------------------------------

def test_field_invariants(grid):
    u = random_divfree_field(grid, 9, amplitude=3.0)
    assert np.all(u.mean() == 0)
    assert u.divergence_norm() <= 1e-13 * norms(u)[0]
    # real valuedness: the physical field computed from the half spectrum is real,
    # and round-tripping reproduces the coefficients
    back = grid.from_physical(u.physical())
    assert np.max(np.abs(back - u.coeffs)) < 1e-15


def test_fields_are_immutable(grid):
    u = random_divfree_field(grid, 1)
    with pytest.raises(ValueError):
        u.coeffs[0, 1, 1] = 1.0
    with pytest.raises(AttributeError):
        u.coeffs = None


def test_linear_ops(grid):
    u = random_divfree_field(grid, 1)
    v = random_divfree_field(grid, 2)
    assert np.array_equal((u + v - v).coeffs, (u + v - v).coeffs)
    assert np.allclose((2 * u).coeffs, (u + u).coeffs, atol=0)
    assert np.allclose((-u).coeffs, -u.coeffs)
    with pytest.raises(GridMismatch):
        u + VelocityField.zeros(TorusGrid(16))


# --- Stokes operator ----------------------------------------------------------------

def test_stokes_eigenmode(grid):
    u = single_mode(grid, 1, 0, 0.3 - 0.2j)
    assert np.max(np.abs(stokes_apply(u).coeffs - u.coeffs)) <= 1e-13 * np.max(np.abs(u.coeffs))


def test_stokes_zero(grid):
    assert not np.any(stokes_apply(VelocityField.zeros(grid)).coeffs)


def test_stokes_quadratic_form(grid):
    for seed in range(5):
        u = random_divfree_field(grid, seed, decay=1.0)
        a = inner(stokes_apply(u), u)
        assert a == pytest.approx(h1_coeffs(grid, u.coeffs) ** 2, rel=1e-12)
        assert a > 0


def test_stokes_self_adjoint(grid):
    u, v = random_divfree_field(grid, 1), random_divfree_field(grid, 2)
    assert inner(stokes_apply(u), v) == pytest.approx(inner(u, stokes_apply(v)), rel=1e-12)


# --- norms ------------------------------------------------------------------------

def test_norms_zero(grid):
    assert norms(VelocityField.zeros(grid)) == (0.0, 0.0, 0.0, 0.0)


def test_taylor_green_norms(grid):
    # |u|^2 = cos^2 x sin^2 y + sin^2 x cos^2 y integrates to 2 pi^2 over [0, 2pi)^2
    u = taylor_green(grid)
    l2, h1, l4, lap = norms(u)
    assert l2 ** 2 == pytest.approx(2 * math.pi ** 2, rel=1e-12)
    assert h1 ** 2 == pytest.approx(2 * l2 ** 2, rel=1e-12)
    assert lap ** 2 == pytest.approx(4 * l2 ** 2, rel=1e-12)
    # int |u|^4 = int (cos^2 x sin^2 y + sin^2 x cos^2 y)^2 = 3 pi^2 / 2 ... computed exactly:
    # a = cos^2 x sin^2 y, b = sin^2 x cos^2 y; int a^2 = int b^2 = (3pi/4)^2, int ab = (pi/4)^2
    want = 2 * (3 * math.pi / 4) ** 2 + 2 * (math.pi / 4) ** 2
    assert l4 ** 4 == pytest.approx(want, rel=1e-12)


def test_parseval_against_quadrature(grid):
    for seed in range(5):
        u = random_divfree_field(grid, seed, amplitude=2.0, decay=0.5)
        assert l2_physical(u) == pytest.approx(norms(u)[0], rel=1e-12)


def test_poincare(grid):
    lam = grid.lambda1
    for seed in range(20):
        u = random_divfree_field(grid, seed, decay=float(seed % 4))
        l2, h1, _, _ = norms(u)
        assert l2 <= lam ** -0.5 * h1 * (1 + 1e-13)


def test_ladyzhenskaya_ratio_survey(grid):
    fields = [random_divfree_field(grid, s, decay=d) for s in range(20) for d in (0.5, 2.0)]
    fields.append(taylor_green(grid))
    worst, ok = ladyzhenskaya_survey(fields)
    assert ok and 0 < worst <= LADYZHENSKAYA_DEFAULT
    # configurable constant
    assert not ladyzhenskaya_survey(fields, c_l=0.5 * worst)[1]
    assert ladyzhenskaya_ratio(VelocityField.zeros(grid)) == 0.0


# --- trilinear form -------------------------------------------------------------------

def test_trilinear_vanishes_on_repeated(grid):
    for seed in range(5):
        u = random_divfree_field(grid, seed)
        v = random_divfree_field(grid, seed + 100)
        _, h1v, _, _ = norms(v)
        assert abs(trilinear_b(u, v, v)) <= 1e-12 * norms(u)[0] * h1v * norms(v)[0]


def test_skew_symmetry_100_triples(grid):
    lam = grid.lambda1
    for t in range(100):
        u, v, w = (random_divfree_field(grid, 3 * t + j, decay=1.0 + (t % 3)) for j in range(3))
        s = trilinear_b(u, v, w) + trilinear_b(u, w, v)
        bound = 1e-12 * norms(u)[0] * norms(v)[1] * norms(w)[1] * lam ** -0.5
        assert abs(s) <= bound


def test_trilinear_zero_argument(grid):
    u = random_divfree_field(grid, 1)
    z = VelocityField.zeros(grid)
    assert trilinear_b(z, u, u) == 0 and trilinear_b(u, z, u) == 0 and trilinear_b(u, u, z) == 0


def test_trilinear_grid_mismatch(grid, small_grid):
    u = random_divfree_field(grid, 1)
    v = random_divfree_field(small_grid, 1)
    with pytest.raises(GridMismatch):
        trilinear_b(u, u, v)


def test_trilinear_single_modes_closed_form():
    g = TorusGrid(8)
    # u = (cos y, 0), v = (0, sin x): (u.grad) v = (0, cos y cos x)
    u = field_from_function(g, lambda x, y: (np.cos(y), 0 * x))
    v = field_from_function(g, lambda x, y: (0 * x, np.sin(x)))
    # w = (sin x sin y, cos x cos y) is solenoidal; b = int cos^2 x cos^2 y = pi^2
    w = field_from_function(g, lambda x, y: (np.sin(x) * np.sin(y), np.cos(x) * np.cos(y)))
    assert trilinear_b(u, v, w) == pytest.approx(math.pi ** 2, rel=1e-13)
    assert trilinear_b(u, w, v) == pytest.approx(-math.pi ** 2, rel=1e-13)
    # orthogonal third argument: int cos y cos x sin x = 0
    t = field_from_function(g, lambda x, y: (0 * x, np.sin(x)))
    assert abs(trilinear_b(u, v, t)) < 1e-13


# --- nonlinear term -------------------------------------------------------------------

def test_nonlinear_taylor_green_is_gradient(grid):
    u = taylor_green(grid, 1.7)
    _, h1, _, _ = norms(u)
    out = nonlinear_term(u, u)
    assert norms(out)[0] < 1e-12 * norms(u)[0] * h1


def test_nonlinear_zero(grid):
    u = random_divfree_field(grid, 1)
    z = VelocityField.zeros(grid)
    assert not np.any(nonlinear_term(u, z).coeffs)
    assert not np.any(nonlinear_term(z, u).coeffs)


def test_nonlinear_duality(grid):
    for seed in range(10):
        u, v, w = (random_divfree_field(grid, 10 * seed + j, decay=1.5) for j in range(3))
        a = inner(nonlinear_term(u, v), w)
        b = trilinear_b(u, v, w)
        assert a == pytest.approx(b, rel=1e-12, abs=1e-15)


def test_rotational_form_matches_general_form(grid):
    for seed in range(5):
        u = random_divfree_field(grid, seed, amplitude=4.0, decay=1.0)
        a = self_advection_coeffs(grid, u.coeffs)
        b = nonlinear_coeffs(grid, u.coeffs, u.coeffs)
        assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(b))


# --- random fields ---------------------------------------------------------------------

def test_random_field_deterministic(grid):
    a = random_divfree_field(grid, 42)
    b = random_divfree_field(grid, 42)
    assert a.coeffs.tobytes() == b.coeffs.tobytes()
    assert random_divfree_field(grid, 43).coeffs.tobytes() != a.coeffs.tobytes()


def test_random_field_amplitude(grid):
    assert not np.any(random_divfree_field(grid, 1, amplitude=0.0).coeffs)
    for amp in (0.1, 1.0, 7.0):
        u = random_divfree_field(grid, 5, amplitude=amp)
        assert abs(norms(u)[0] - amp) <= 0.1 * amp


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.0, 4.0))
def test_random_field_projection_idempotent(seed, decay):
    g = TorusGrid(16)
    u = random_divfree_field(g, seed, decay=decay)
    assert np.max(np.abs(leray_project(g, u).coeffs - u.coeffs)) <= 1e-15 * max(1.0, np.max(np.abs(u.coeffs)))


# --- snapshots ----------------------------------------------------------------------------

@pytest.mark.parametrize("suffix", [".bin", ".json"])
def test_snapshot_roundtrip(tmp_path, grid, suffix):
    u = random_divfree_field(grid, 3)
    p = tmp_path / f"u{suffix}"
    save_snapshot(p, u, {"n": 5})
    v = load_snapshot(p)
    assert v.grid == grid
    assert np.array_equal(v.coeffs, u.coeffs)


def test_snapshot_layout(grid):
    u = random_divfree_field(grid, 3)
    data = snapshot_bytes(u)
    assert data[:8] == b"TORUSFLD"
    hl = int.from_bytes(data[8:12], "little")
    nrec = (len(data) - 12 - hl) // 40
    assert nrec == int(grid.mask.sum())
    assert (len(data) - 12 - hl) % 40 == 0


def test_snapshot_bad_magic(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"NOTAFILE" + b"\0" * 8)
    with pytest.raises(ValueError):
        load_snapshot(p)


# --- concurrency -------------------------------------------------------------------------

def test_threaded_calls_are_deterministic(grid):
    u = random_divfree_field(grid, 11)
    ref = self_advection_coeffs(grid, u.coeffs).tobytes()
    out = []

    def work():
        out.append(self_advection_coeffs(grid, u.coeffs).tobytes())

    ts = [threading.Thread(target=work) for _ in range(8)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert all(o == ref for o in out)
