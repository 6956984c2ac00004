"""Spectral core tests against brute-force oracles and closed forms."""

import numpy as np
import pytest

from ns2dsens.spectral import (
    LAMBDA_1,
    GridSpec,
    SpectralField,
    bilinear,
    inner,
    leray_project,
    norm,
    norms,
    random_field,
    stokes_apply,
    taylor_green,
)


def band_modes(grid):
    K = grid.cutoff
    return [(kx, ky) for kx in range(-K, K + 1) for ky in range(-K, K + 1)]


def mode_get(coeffs, n, kx, ky):
    return coeffs[:, kx % n, ky % n]


def leray_oracle(field):
    """Per-mode projection computed with plain Python loops."""
    g = field.grid
    n = g.n
    out = np.array(field.coeffs)
    for kx in range(-(n // 2), n // 2):
        for ky in range(-(n // 2), n // 2):
            if kx == 0 and ky == 0:
                out[:, 0, 0] = 0.0
                continue
            c = mode_get(field.coeffs, n, kx, ky)
            par = (kx * c[0] + ky * c[1]) / (kx * kx + ky * ky)
            out[:, kx % n, ky % n] = c - np.array([kx, ky]) * par
    return SpectralField(g, out)


def bilinear_oracle(u, v):
    """Direct convolution sum over band modes, O(K^4), then per-mode projection."""
    g = u.grid
    n = g.n
    K = g.cutoff
    cu = u.coeffs
    cv = v.coeffs
    w = np.zeros((2, n, n), dtype=np.complex128)
    for kx, ky in band_modes(g):
        acc = np.zeros(2, dtype=np.complex128)
        for px, py in band_modes(g):
            qx, qy = kx - px, ky - py
            if max(abs(qx), abs(qy)) > K:
                continue
            up = mode_get(cu, n, px, py)
            vq = mode_get(cv, n, qx, qy)
            acc += 2j * np.pi * (up[0] * qx + up[1] * qy) * vq
        w[:, kx % n, ky % n] = acc
    return leray_oracle(SpectralField(g, w))


class TestGridSpec:
    def test_cutoff_is_floor_third(self):
        assert GridSpec(8).cutoff == 2
        assert GridSpec(12).cutoff == 4
        assert GridSpec(32).cutoff == 10
        assert GridSpec(64).cutoff == 21

    def test_rejects_odd_size(self):
        with pytest.raises(ValueError, match="even"):
            GridSpec(9)

    def test_rejects_small_size(self):
        with pytest.raises(ValueError, match="at least 8"):
            GridSpec(6)

    def test_wavenumbers_cover_fft_order(self):
        g = GridSpec(8)
        assert list(g.k[0][:, 0]) == [0, 1, 2, 3, -4, -3, -2, -1]
        assert g.k_sq[0, 0] == 0
        assert g.k_sq[1, 1] == 2

    def test_eigenvalues_match_poincare_scale(self):
        g = GridSpec(8)
        assert g.eigenvalues[1, 0] == pytest.approx(LAMBDA_1)
        assert g.eigenvalues[1, 1] == pytest.approx(2 * LAMBDA_1)


class TestSpectralField:
    def test_physical_round_trip(self):
        g = GridSpec(16)
        f = random_field(g, seed=7)
        back = SpectralField.from_physical(g, f.physical())
        assert np.abs(back.coeffs - f.coeffs).max() < 1e-14

    def test_mean_mode_pinned(self):
        g = GridSpec(8)
        vals = np.ones((2, 8, 8)) + np.random.default_rng(0).standard_normal((2, 8, 8))
        f = SpectralField.from_physical(g, vals)
        assert f.coeffs[0, 0, 0] == 0.0
        assert f.coeffs[1, 0, 0] == 0.0

    def test_coeffs_are_read_only(self):
        f = random_field(GridSpec(8), seed=1)
        with pytest.raises(ValueError):
            f.coeffs[0, 1, 1] = 1.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            SpectralField(GridSpec(8), np.zeros((2, 4, 4), dtype=np.complex128))

    def test_grid_mismatch_rejected(self):
        a = random_field(GridSpec(8), seed=1)
        b = random_field(GridSpec(16), seed=1)
        with pytest.raises(ValueError, match="grid mismatch"):
            a + b

    def test_arithmetic(self):
        g = GridSpec(8)
        a = random_field(g, seed=1)
        b = random_field(g, seed=2)
        s = 2.0 * a + b - a / 2.0
        expect = 1.5 * a.coeffs + b.coeffs
        assert np.abs(s.coeffs - expect).max() < 1e-15

    def test_validate_flags_broken_symmetry(self):
        g = GridSpec(8)
        c = np.zeros((2, 8, 8), dtype=np.complex128)
        c[0, 1, 0] = 1.0j  # no conjugate partner at (-1, 0)
        with pytest.raises(ValueError, match="conjugate symmetry"):
            SpectralField(g, c).validate()

    def test_validate_flags_out_of_band(self):
        g = GridSpec(8)
        c = np.zeros((2, 8, 8), dtype=np.complex128)
        c[0, 3, 0] = 1.0
        c[0, -3 % 8, 0] = 1.0
        with pytest.raises(ValueError, match="band"):
            SpectralField(g, c).validate(require_band=True)


class TestNorms:
    def test_single_mode_parseval(self):
        # u = (0, cos 2 pi x): coefficients 1/2 at k = (1, 0) and (-1, 0).
        g = GridSpec(16)
        x = g.points[0]
        vals = np.stack([np.zeros_like(x), np.cos(2 * np.pi * x)])
        f = SpectralField.from_physical(g, vals)
        assert norm(f, "l2") == pytest.approx(np.sqrt(0.5), rel=1e-14)
        assert norm(f, "h1") == pytest.approx(2 * np.pi * np.sqrt(0.5), rel=1e-14)
        assert norm(f, "h2") == pytest.approx(LAMBDA_1 * np.sqrt(0.5), rel=1e-14)

    def test_taylor_green_norms(self):
        g = GridSpec(32)
        u0 = taylor_green(g)
        t = norms(u0)
        assert t.l2 == pytest.approx(np.sqrt(0.5), rel=1e-13)
        assert t.h1 == pytest.approx(2 * np.pi, rel=1e-13)
        assert t.h2 == pytest.approx(8 * np.pi**2 * np.sqrt(0.5), rel=1e-13)

    def test_norms_consistent_with_norm(self):
        f = random_field(GridSpec(16), seed=3)
        t = norms(f)
        assert t.l2 == pytest.approx(norm(f, "l2"), rel=1e-14)
        assert t.h1 == pytest.approx(norm(f, "h1"), rel=1e-14)
        assert t.h2 == pytest.approx(norm(f, "h2"), rel=1e-14)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="norm kind"):
            norm(random_field(GridSpec(8), seed=0), "h3")

    def test_poincare_chain(self):
        for seed in range(20):
            f = random_field(GridSpec(32), seed=seed, l2_norm=1.0 + seed)
            t = norms(f)
            assert LAMBDA_1 * t.l2**2 <= t.h1**2 * (1 + 1e-12)
            assert LAMBDA_1 * t.h1**2 <= t.h2**2 * (1 + 1e-12)

    def test_inner_taylor_green_stokes(self):
        g = GridSpec(32)
        u0 = taylor_green(g)
        assert inner(u0, stokes_apply(u0), "l2") == pytest.approx(4 * np.pi**2, rel=1e-13)


class TestLeray:
    def test_matches_per_mode_oracle(self):
        g = GridSpec(8)
        rng = np.random.default_rng(42)
        for _ in range(5):
            f = random_field(g, rng, solenoidal=False)
            got = leray_project(f)
            want = leray_oracle(f)
            assert np.abs(got.coeffs - want.coeffs).max() < 1e-14

    def test_idempotent(self):
        f = random_field(GridSpec(16), seed=5, solenoidal=False)
        once = leray_project(f)
        twice = leray_project(once)
        assert np.abs(once.coeffs - twice.coeffs).max() < 1e-15

    def test_self_adjoint(self):
        g = GridSpec(16)
        rng = np.random.default_rng(9)
        for _ in range(5):
            a = random_field(g, rng, solenoidal=False)
            b = random_field(g, rng, solenoidal=False)
            lhs = inner(leray_project(a), b)
            rhs = inner(a, leray_project(b))
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_output_divergence_free(self):
        f = random_field(GridSpec(16), seed=11, solenoidal=False)
        assert leray_project(f).divergence_max() < 1e-13

    def test_annihilates_gradients(self):
        # Gradient fields have c_k parallel to k and must project to zero.
        g = GridSpec(8)
        c = np.zeros((2, 8, 8), dtype=np.complex128)
        for kx, ky in band_modes(g):
            if kx == 0 and ky == 0:
                continue
            c[:, kx % 8, ky % 8] = np.array([kx, ky]) * (0.3 + 0.1j)
        c = 0.5 * (c + np.conj(np.roll(c[..., ::-1, ::-1], (1, 1), axis=(-2, -1))))
        grad = SpectralField(g, c)
        assert norm(leray_project(grad)) < 1e-13 * norm(grad)


class TestStokes:
    def test_single_mode_eigenvalue(self):
        g = GridSpec(16)
        x = g.points[0]
        vals = np.stack([np.zeros_like(x), np.sin(2 * np.pi * x)])
        f = SpectralField.from_physical(g, vals)
        out = stokes_apply(f)
        assert np.abs(out.coeffs - LAMBDA_1 * f.coeffs).max() < 1e-13

    def test_taylor_green_eigenvalue(self):
        g = GridSpec(32)
        u0 = taylor_green(g)
        out = stokes_apply(u0)
        assert np.abs(out.coeffs - 8 * np.pi**2 * u0.coeffs).max() < 1e-13

    def test_commutes_with_leray(self):
        f = random_field(GridSpec(16), seed=13, solenoidal=False)
        a = stokes_apply(leray_project(f))
        b = leray_project(stokes_apply(f))
        assert np.abs(a.coeffs - b.coeffs).max() < 1e-11


class TestBilinear:
    @pytest.mark.parametrize("n", [8, 12])
    def test_matches_convolution_oracle(self, n):
        # n = 12 exercises the padded path where 3 * cutoff == n.
        g = GridSpec(n)
        rng = np.random.default_rng(100 + n)
        for _ in range(3):
            u = random_field(g, rng)
            v = random_field(g, rng, solenoidal=False)
            got = bilinear(u, v)
            want = bilinear_oracle(u, v)
            scale = max(np.abs(want.coeffs).max(), 1.0)
            assert np.abs(got.coeffs - want.coeffs).max() < 1e-12 * scale

    @pytest.mark.parametrize("n", [8, 12])
    def test_cutoff_boundary_modes(self, n):
        # All energy at the corners of the band, the worst case for aliasing.
        g = GridSpec(n)
        K = g.cutoff
        c = np.zeros((2, n, n), dtype=np.complex128)
        for sx in (1, -1):
            for sy in (1, -1):
                c[0, (sx * K) % n, (sy * K) % n] = 0.25 + 0.1j * sx * sy
        c = 0.5 * (c + np.conj(np.roll(c[..., ::-1, ::-1], (1, 1), axis=(-2, -1))))
        u = leray_project(SpectralField(g, c))
        got = bilinear(u, u)
        want = bilinear_oracle(u, u)
        scale = max(np.abs(want.coeffs).max(), 1e-30)
        assert np.abs(got.coeffs - want.coeffs).max() < 1e-12 * max(scale, 1.0)

    def test_truncates_inputs_to_band(self):
        g = GridSpec(16)
        rng = np.random.default_rng(17)
        c = rng.standard_normal((2, 16, 16)) + 1j * rng.standard_normal((2, 16, 16))
        c = 0.5 * (c + np.conj(np.roll(c[..., ::-1, ::-1], (1, 1), axis=(-2, -1))))
        c[:, 0, 0] = 0.0
        full = leray_project(SpectralField(g, c))
        cut = full.band_limited()
        a = bilinear(full, full)
        b = bilinear(cut, cut)
        assert np.abs(a.coeffs - b.coeffs).max() < 1e-13

    def test_output_band_limited_and_solenoidal(self):
        g = GridSpec(32)
        u = random_field(g, seed=23)
        v = random_field(g, seed=29)
        w = bilinear(u, v)
        w.validate(require_band=True)
        assert w.divergence_max() < 1e-13

    def test_taylor_green_self_advection_vanishes(self):
        g = GridSpec(32)
        u0 = taylor_green(g)
        assert norm(bilinear(u0, u0)) < 1e-13

    def test_skew_symmetry_smoke(self):
        g = GridSpec(16)
        rng = np.random.default_rng(31)
        u = random_field(g, rng)
        v = random_field(g, rng)
        w = random_field(g, rng)
        lhs = inner(bilinear(u, v), w)
        rhs = -inner(bilinear(u, w), v)
        scale = max(abs(lhs), abs(rhs), 1e-30)
        assert abs(lhs - rhs) < 1e-11 * scale


class TestRandomField:
    def test_seed_determinism(self):
        g = GridSpec(32)
        a = random_field(g, seed=99)
        b = random_field(g, seed=99)
        assert np.array_equal(a.coeffs, b.coeffs)

    def test_annulus_support(self):
        g = GridSpec(32)
        f = random_field(g, seed=3, kmin=2, kmax=6)
        outside = (g.k_sq < 4) | (g.k_sq > 36)
        assert np.abs(f.coeffs[:, outside]).max() == 0.0

    def test_norm_and_solenoidal(self):
        f = random_field(GridSpec(32), seed=4, kmin=2, kmax=6, l2_norm=3.5)
        assert norm(f) == pytest.approx(3.5, rel=1e-13)
        assert f.divergence_max() < 1e-13

    def test_real_valued(self):
        g = GridSpec(16)
        f = random_field(g, seed=8)
        raw = g.n**2 * np.fft.ifft2(np.asarray(f.coeffs), axes=(-2, -1))
        assert np.abs(raw.imag).max() < 1e-13

    def test_empty_annulus_rejected(self):
        with pytest.raises(ValueError, match="annulus"):
            random_field(GridSpec(8), seed=0, kmin=7)
