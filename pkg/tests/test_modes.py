import math

import numpy as np
import pytest
import scipy.special as sc

from eigloc import modes as M
from eigloc import zeros
from eigloc.errors import DomainError, InsufficientDataError
from eigloc.geometry import DomainSpec, ModeIndex, nu_of_l

INF = math.inf
BALL = DomainSpec.ball(2)
SHELL3 = DomainSpec.shell(3.0)
J01 = 2.404825557695773
A021 = 3.1230309195956922051  # mpmath bisection, nu = 0, R = 2


def mode(l, k, c=1.0, d=2):
    return ModeIndex(k, l, d, c)


class TestIndex:
    def test_nu_of_l(self):
        assert nu_of_l(0, 2, 1) == 1.0
        assert nu_of_l(2, 3, 0) == 2.5
        assert nu_of_l(10000, 2, 1) == math.sqrt(1e8 + 1)

    def test_sector_order_uses_beta(self):
        assert DomainSpec.sector(0.5).order(mode(3, 1, c=0.0)) == pytest.approx(6.0)

    @pytest.mark.parametrize("kw", [dict(k=0, l=1), dict(k=1, l=-1), dict(k=1, l=1, d=1), dict(k=1, l=1, c=-1.0)])
    def test_invalid_mode(self, kw):
        with pytest.raises(DomainError):
            ModeIndex(**kw)

    @pytest.mark.parametrize("build", [lambda: DomainSpec.shell(1.0), lambda: DomainSpec.sector(2.0), lambda: DomainSpec.annulus_sector(2.0, 0.0)])
    def test_invalid_domain(self, build):
        with pytest.raises(DomainError):
            build()


class TestEigenvalue:
    def test_disk_ground_state(self):
        assert M.eigenvalue(mode(0, 1, c=0.0), BALL) == pytest.approx(J01**2, rel=1e-12)

    def test_annulus_ground_state(self):
        assert M.eigenvalue(mode(0, 1, c=0.0), DomainSpec.shell(2.0)) == pytest.approx(A021**2, rel=1e-11)

    @pytest.mark.parametrize("domain", [BALL, SHELL3, DomainSpec.ball(3)])
    def test_increasing_in_k(self, domain):
        lam = [M.eigenvalue(mode(4, k, d=domain.d), domain) for k in range(1, 15)]
        assert np.all(np.diff(lam) > 0)


class TestProfiles:
    @pytest.mark.parametrize(
        "domain,l,k",
        [(BALL, 7, 3), (DomainSpec.ball(3), 2, 5), (SHELL3, 40, 6), (DomainSpec.shell(1.5, 3), 3, 2),
         (DomainSpec.sector(0.5), 5, 2), (DomainSpec.annulus_sector(2.0, 1.5), 4, 3), (BALL, 3000, 20)],
    )
    def test_boundary_vanishing(self, domain, l, k):
        p = M.radial_profile(mode(l, k, d=domain.d), domain)
        edges = [domain.outer] + ([domain.inner] if domain.is_annular else [])
        for r in edges:
            assert abs(p.normalized(r)) <= 1e-9

    def test_node_count(self):
        p = M.radial_profile(mode(12, 9), SHELL3)
        assert p.nodes.size == 8

    def test_schrodinger_mode_collapses_at_origin(self):
        p = M.radial_profile(mode(0, 3, c=1.0), BALL)
        assert p(0.0) == 0.0
        assert abs(p.normalized(1e-6)) < 1e-5

    def test_free_radial_mode_finite_at_origin(self):
        p = M.radial_profile(mode(0, 3, c=0.0), BALL)
        assert p(0.0) == 1.0

    def test_ball_profile_is_bessel(self):
        p = M.radial_profile(mode(6, 4, c=0.0), BALL)
        r = np.linspace(0, 1, 50)
        assert np.allclose(p(r), sc.jv(6, zeros.bessel_zero_j(6.0, 4) * r), rtol=1e-11, atol=1e-14)

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            M.radial_profile(mode(1, 1), SHELL3)(0.5)

    def test_disk_argmax(self):
        assert M.radial_profile(mode(100, 20), BALL).argmax() == pytest.approx(0.5, abs=0.05)


class TestSupNorm:
    def test_against_dense_grid(self):
        p = M.radial_profile(mode(100, 20, c=0.0), BALL)
        r = np.linspace(0, 1, 100001)
        ref = np.max(np.abs(sc.jv(100, p.zero * r)))
        assert float(p.sup) == pytest.approx(ref, rel=1e-6)
        assert float(p.sup) >= ref

    def test_shell_against_dense_grid(self):
        p = M.radial_profile(mode(60, 7), SHELL3)
        r = np.linspace(1, 3, 100001)
        ref = np.max(np.abs(p(r)))
        assert float(p.sup) == pytest.approx(ref, rel=1e-6)

    def test_decay_region_below_turning_point(self):
        p = M.radial_profile(mode(200, 5), BALL)
        turn = p.nu / p.zero
        assert float(M.sup_norm(p, (0.1, 0.8 * turn))) < abs(p(turn))

    def test_single_point(self):
        p = M.radial_profile(mode(2, 3), BALL)
        assert float(M.sup_norm(p, (0.4, 0.4))) == pytest.approx(abs(p(0.4)), rel=1e-14)


class TestLpNorm:
    @pytest.mark.parametrize("l,k", [(0, 1), (3, 4), (40, 7)])
    def test_l2_closed_form(self, l, k):
        p = M.radial_profile(mode(l, k, c=0.0), BALL)
        ref = 0.5 * sc.jv(l + 1, p.zero) ** 2
        assert math.exp(M.lp_log_integral(p, 2)) == pytest.approx(ref, rel=1e-8)

    def test_empty_interval(self):
        p = M.radial_profile(mode(2, 3), BALL)
        assert M.lp_norm(p, 2, (0.4, 0.4)).is_zero

    @pytest.mark.parametrize("p_exp", [1.0, 2.0, 6.0])
    def test_additivity(self, p_exp):
        p = M.radial_profile(mode(30, 6), SHELL3)
        a = math.exp(M.lp_log_integral(p, p_exp, (1.0, 1.7)))
        b = math.exp(M.lp_log_integral(p, p_exp, (1.7, 3.0)))
        full = math.exp(M.lp_log_integral(p, p_exp))
        assert a + b == pytest.approx(full, rel=1e-10)

    def test_invalid(self):
        p = M.radial_profile(mode(2, 3), BALL)
        with pytest.raises(DomainError):
            M.lp_norm(p, 0.5)
        with pytest.raises(DomainError):
            M.lp_norm(p, 2, (0.6, 0.4))


class TestFields:
    def test_disk_l0_equals_radial(self):
        p = M.radial_profile(mode(0, 2), BALL)
        for th in (0.0, 1.0, 4.0):
            assert M.field_2d(p, 0.3, th, normalized=False) == pytest.approx(p(0.3), rel=1e-15)

    def test_sector_edges(self):
        dom = DomainSpec.sector(0.75)
        p = M.radial_profile(mode(3, 2), dom)
        assert M.field_2d(p, 0.5, 0.0) == 0.0
        assert abs(M.field_2d(p, 0.5, 0.75 * math.pi)) < 1e-14
        with pytest.raises(DomainError):
            M.field_2d(p, 0.5, 3.0)

    def test_annulus_sector_edge(self):
        dom = DomainSpec.annulus_sector(2.0, 1.25)
        p = M.radial_profile(mode(2, 1), dom)
        assert abs(M.field_2d(p, 1.5, 1.25 * math.pi)) < 1e-14

    def test_not_planar(self):
        p = M.radial_profile(mode(1, 1, d=3), DomainSpec.ball(3))
        with pytest.raises(DomainError):
            M.field_2d(p, 0.5, 0.0)

    def test_heatmap_normalized(self):
        p = M.radial_profile(mode(20, 4), BALL)
        r, th, u = M.heatmap(p, 200, 64)
        assert u.shape == (200, 64)
        assert np.max(np.abs(u)) == pytest.approx(1.0, abs=1e-3)
        assert np.max(np.abs(u)) <= 1.0 + 1e-12


class TestLocalization:
    def test_sup_identity(self):
        rep = M.localization_ratio(mode(100, 20), BALL, INF, 0.1)
        assert rep.ratio_total == max(rep.ratio_inside, rep.ratio_outside)
        assert 0 <= rep.ratio_total <= 1

    def test_ball_trend(self):
        r = [M.localization_ratio(mode(l, k), BALL, INF, 0.1).ratio_total for l, k in [(25, 5), (100, 20), (500, 100)]]
        assert r[0] > r[1] > r[2]

    def test_angular_cancellation(self):
        m = mode(30, 5)
        p = M.radial_profile(m, BALL)
        rep = M.localization_ratio(m, BALL, INF, 0.1, profile=p)
        r = np.linspace(0, 1, 4001)
        th = np.linspace(0, 2 * math.pi, 721)
        u = np.abs(M.field_2d(p, r[:, None], th[None, :], normalized=False))
        outside = np.abs(r - rep.localized_radius) >= 0.1
        ratio = u[outside].max() / u.max()
        assert ratio == pytest.approx(rep.ratio_total, rel=1e-3)

    def test_focusing_modes(self):
        sup = [M.localization_ratio(mode(0, k), BALL, INF, 0.1, w=0).ratio_outside for k in (10, 100, 1000)]
        l2 = [M.localization_ratio(mode(0, k), BALL, 2.0, 0.1, w=0).ratio_outside for k in (10, 100, 1000)]
        assert sup[0] > sup[1] > sup[2]
        assert min(l2) > 0.5

    def test_whispering_gallery(self):
        ball = [M.localization_ratio(mode(l, 1), BALL, INF, 0.1).ratio_total for l in (50, 200, 1000)]
        shell = [M.localization_ratio(mode(l, 1), SHELL3, INF, 0.1, w=1e3).ratio_total for l in (50, 200, 1000)]
        assert ball[0] > ball[1] > ball[2] and ball[2] < 1e-6
        assert shell[0] > shell[1] > shell[2] and shell[2] < 1e-2

    @pytest.mark.parametrize("l", [0, 1])
    def test_shell_focusing_modes_not_localized(self, l):
        for k in (20, 50, 100):
            p = M.radial_profile(mode(l, k), SHELL3)
            best = min(
                M.region_ratio(p, [(1.0, c - 0.1) if c - 0.1 > 1 else None, (c + 0.1, 3.0) if c + 0.1 < 3 else None])
                for c in np.linspace(1, 3, 41)
            )
            assert best > 0.5

    def test_subcritical_index(self):
        assert M.localization_index(3.0, 0.1, 1.0, 50, 50) > 0.2

    def test_supercritical_index_trend(self):
        g = [M.localization_index(3.0, 0.1, 10.0, l, l // 10) for l in (100, 500, 2000)]
        assert g[0] > g[1] > g[2]

    def test_index_empty_region(self):
        assert M.localization_index(3.0, 5.0, 10.0, 100, 10) == 0.0

    def test_invalid(self):
        with pytest.raises(DomainError):
            M.localization_ratio(mode(10, 2), BALL, INF, 0.0)
        with pytest.raises(DomainError):
            M.localization_ratio(mode(10, 2), BALL, 0.5, 0.1)


class TestDecayFit:
    def test_degenerate(self):
        assert M.fit_decay([10, 20, 30], [-1.0, -1.0, -1.0], "outside") == ("polynomial", 0.0)

    def test_insufficient(self):
        with pytest.raises(InsufficientDataError):
            M.fit_decay([10, 20], [-1.0, -2.0], "inside")
        with pytest.raises(InsufficientDataError):
            M.decay_fit([(100, 20), (200, 40)], BALL, "inside")

    def test_recovers_synthetic_laws(self):
        nus = np.array([100.0, 200.0, 400.0, 800.0])
        _, q = M.fit_decay(nus, nus * math.log(0.9) + 2.0, "inside")
        _, g = M.fit_decay(nus, -np.log(nus) / 6 + 1.0, "outside")
        assert q == pytest.approx(0.9, rel=1e-12)
        assert g == pytest.approx(1 / 6, rel=1e-12)


class TestRatioBounds:
    @pytest.mark.parametrize("nu", [10.0, 300.0, 5000.0])
    def test_j_inequality(self, nu):
        z = np.linspace(0.01, 1.0, 500)
        lr = M.j_ratio_bound_log(nu, z)
        assert np.all(lr >= -1e-9) and np.all(lr <= nu * (1 - z) + 1e-9)

    @pytest.mark.parametrize("l", [200, 1000])
    def test_cylinder_inequality(self, l):
        nu = nu_of_l(l, 2, 1)
        a = zeros.cross_zero(nu, l // 10, 3.0)
        z = np.linspace(a / nu, 1.0, 400)
        sign, lr = M.cylinder_ratio_bound_log(nu, a, z)
        inner = z > a / nu
        assert np.all(sign[inner] >= 0)
        assert np.all(lr[inner] <= nu * (1 - z[inner]) + 1e-9)
