"""Channel statistics: Rician reductions, closed forms against the quadrature path, pdf identities."""

import itertools, math, unittest

import mpmath
import numpy as np

from gtrfading import models
from gtrfading.errors import DomainError
from gtrfading.models import ChannelModel, Method, MobilityConfig, Statistic, TruncatedUniform, Uniform, VonMises, parse_phase
from gtrfading.quad import QuadSpec, integrate_finite

SPEC = QuadSpec(rel_tol=1e-10, abs_tol=1e-13)
PHASES = (Uniform(), TruncatedUniform(0.3), TruncatedUniform(0.6, 0.4), VonMises(2.0), VonMises(4.0, centered_at_pi=False))

GRID_SPEC = QuadSpec(rel_tol=1e-12, abs_tol=0.0)
GRID_K = (0.0, 1.0, 10.0, 100.0)
GRID_DELTA = (0.0, 0.5, 1.0)
GRID_S_GAMMA = (-100.0, -10.0, -1.0, -0.1)


def gtr(K=10.0, delta=0.5, gamma_bar=10.0, phase=Uniform(), n0=1.0):
    return ChannelModel(K=K, delta=delta, gamma_bar=gamma_bar, phase=phase, n0=n0)


def mp_mgf(s, m, weight, points):
    """E_α[(1+K)/d exp(K̄(α) s γ̄ / d)] with d = 1 + K - sγ̄, by mpmath quadrature over α."""
    K, gb, delta = mpmath.mpf(m.K), mpmath.mpf(m.gamma_bar), mpmath.mpf(m.delta)
    d = 1 + K - s * gb
    return mpmath.quad(lambda a: (1 + K) / d * mpmath.exp(K * (1 + delta * mpmath.cos(a)) * s * gb / d) * weight(a), points)


class PhaseTests(unittest.TestCase):
    def test_uniform_identities(self):
        alpha = np.linspace(-7.0, 7.0, 41)
        u = Uniform().pdf(alpha)
        np.testing.assert_allclose(TruncatedUniform(1.0).pdf(alpha), u, rtol=1e-15)
        np.testing.assert_allclose(VonMises(0.0).pdf(alpha), u, rtol=1e-15)

    def test_pdfs_integrate_to_one(self):
        for phase in PHASES:
            res = integrate_finite(lambda a: phase.pdf(a), 0.0, 2.0 * math.pi, QuadSpec(rel_tol=1e-9))
            self.assertAlmostEqual(res.value, 1.0, places=6, msg=phase.describe())

    def test_truncated_support(self):
        t = TruncatedUniform(0.25)
        self.assertEqual(t.support, (0.75 * math.pi, 1.25 * math.pi))
        self.assertEqual(t.pdf(math.pi), 1.0 / (0.5 * math.pi)); self.assertEqual(t.pdf(0.0), 0.0)

    def test_ranges(self):
        for bad in (lambda: TruncatedUniform(0.0), lambda: TruncatedUniform(1.2), lambda: TruncatedUniform(0.5, math.pi), lambda: VonMises(-1.0), lambda: VonMises(math.inf)):
            with self.assertRaises(DomainError):
                bad()

    def test_parse(self):
        self.assertEqual(parse_phase("uniform"), Uniform())
        self.assertEqual(parse_phase("trunc:p=0.2"), TruncatedUniform(0.2))
        self.assertEqual(parse_phase(" VM:eta=3, center=0 "), VonMises(3.0, centered_at_pi=False))
        for phase in (TruncatedUniform(0.4, -0.5), VonMises(7.5)):
            self.assertEqual(parse_phase(phase.describe()), phase)

    def test_parse_errors(self):
        for text in ("gauss", "trunc", "trunc:p=x", "trunc:p", "vm:eta=1,center=2", "trunc:p=0.5,q=1"):
            with self.assertRaises(DomainError) as ctx:
                parse_phase(text)
            self.assertEqual(ctx.exception.invariant, "phase_syntax", text)


class ModelTests(unittest.TestCase):
    def test_validation(self):
        cases = {"K_range": {"K": -1.0}, "delta_range": {"delta": 1.5}, "gamma_bar_range": {"gamma_bar": 0.0}, "n0_range": {"n0": math.nan}}
        for invariant, kwargs in cases.items():
            with self.assertRaises(DomainError) as ctx:
                gtr(**kwargs)
            self.assertEqual(ctx.exception.invariant, invariant)

    def test_ray_amplitudes_reproduce_parameters(self):
        m = gtr(K=7.0, delta=0.6, gamma_bar=3.0, n0=2.0)
        self.assertAlmostEqual((m.v1**2 + m.v2**2) / (2.0 * m.sigma2), 7.0, places=12)
        self.assertAlmostEqual(2.0 * m.v1 * m.v2 / (m.v1**2 + m.v2**2), 0.6, places=12)
        self.assertAlmostEqual(m.p_r, 2.0 * m.sigma2 * (1.0 + m.K), places=12)

    def test_k_bar_is_clamped(self):
        m = gtr(delta=1.0)
        self.assertEqual(models.k_bar(m, math.pi), 0.0)
        self.assertAlmostEqual(models.k_bar(m, 0.0), 20.0, places=12)
        self.assertTrue(np.all(models.k_bar(m, np.linspace(0, 2 * math.pi, 101)) >= 0.0))

    def test_statistic_contract(self):
        with self.assertRaises(DomainError):
            Statistic(1.0, Method.CLOSED_FORM, 1e-3)
        with self.assertRaises(DomainError):
            Statistic(1.0, Method.QUADRATURE, -1.0)
        self.assertEqual(Statistic(2.0, Method.QUADRATURE, 0.1).scaled(-3.0), Statistic(-6.0, Method.QUADRATURE, 0.30000000000000004))


class DensityTests(unittest.TestCase):
    def test_rician_reduction_matches_quadrature(self):
        for m in (gtr(delta=0.0, phase=VonMises(3.0)), gtr(K=0.0, phase=TruncatedUniform(0.2))):
            for r in (0.3, 2.0, 5.0):
                closed = models.envelope_pdf(r, m)
                forced = models.envelope_pdf(r, m, SPEC, closed_form=False)
                self.assertIs(closed.method, Method.CLOSED_FORM); self.assertIs(forced.method, Method.QUADRATURE)
                self.assertAlmostEqual(forced.value / closed.value, 1.0, delta=1e-10)

    def test_rayleigh_pdf(self):
        m = gtr(K=0.0, delta=0.0, gamma_bar=2.0)
        r = 0.9
        self.assertAlmostEqual(models.envelope_pdf(r, m).value, (2 * r / m.p_r) * math.exp(-r * r / m.p_r), places=14)

    def test_envelope_pdf_integrates_to_one(self):
        for phase in PHASES:
            m = gtr(K=10.0, delta=0.8, gamma_bar=1.0, phase=phase)
            res = integrate_finite(lambda r: models.envelope_pdf(r, m).value, 0.0, 8.0, QuadSpec(rel_tol=1e-9))
            self.assertAlmostEqual(res.value, 1.0, delta=1e-8, msg=phase.describe())

    def test_two_ray_form_agrees(self):
        m = gtr(K=12.0, delta=0.9, gamma_bar=1.0)
        for r in (0.05, 0.4, 1.0, 1.7):
            a = models.envelope_pdf(r, m, SPEC).value
            b = models.envelope_pdf_two_ray_form(r, m, SPEC).value
            self.assertAlmostEqual(a / b, 1.0, delta=1e-9, msg=f"r={r}")
        with self.assertRaises(DomainError):
            models.envelope_pdf_two_ray_form(1.0, gtr(phase=VonMises(1.0)))

    def test_snr_pdf_is_the_transformed_envelope_pdf(self):
        m = gtr(K=5.0, delta=0.7, gamma_bar=4.0, phase=VonMises(1.5))
        for g in (0.2, 3.0, 9.0):
            r = math.sqrt(g * m.n0)
            expected = models.envelope_pdf(r, m, SPEC).value * math.sqrt(m.n0) / (2.0 * math.sqrt(g))
            self.assertAlmostEqual(models.snr_pdf(g, m, SPEC).value / expected, 1.0, delta=1e-9)

    def test_cdf_is_the_integrated_pdf(self):
        m = gtr(K=5.0, delta=0.8, gamma_bar=1.0, phase=VonMises(2.0))
        r0 = 0.5
        area = integrate_finite(lambda r: models.envelope_pdf(r, m, SPEC).value, 0.0, r0, SPEC).value
        self.assertAlmostEqual(models.envelope_cdf(r0, m, SPEC).value / area, 1.0, delta=1e-8)

    def test_cdf_bounds_and_monotone(self):
        for phase in PHASES:
            m = gtr(K=20.0, delta=1.0, gamma_bar=1.0, phase=phase)
            values = [models.envelope_cdf(r, m).value for r in (0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 6.0)]
            self.assertEqual(values[0], 0.0)
            self.assertTrue(all(0.0 <= v <= 1.0 for v in values))
            self.assertTrue(all(b >= a for a, b in zip(values, values[1:])), phase.describe())
            self.assertAlmostEqual(values[-1], 1.0, places=9)

    def test_balanced_rays_fade_deeper_than_rayleigh(self):
        deep = models.envelope_cdf(0.01, gtr(K=1e4, delta=1.0, gamma_bar=1.0)).value
        rayleigh = models.envelope_cdf(0.01, gtr(K=0.0, delta=0.0, gamma_bar=1.0)).value
        self.assertAlmostEqual(rayleigh, -math.expm1(-1e-4), places=15)
        self.assertGreater(deep, 5.0 * rayleigh)

    def test_negative_arguments(self):
        with self.assertRaises(DomainError):
            models.envelope_pdf(-1.0, gtr())
        with self.assertRaises(DomainError):
            models.snr_pdf(-0.5, gtr())

    def test_snr_pdf_integrates_to_one_over_the_grid(self):
        phases = (Uniform(), TruncatedUniform(0.3), VonMises(3.0), VonMises(3.0, centered_at_pi=False))
        for K, delta, phase in itertools.product(GRID_K, GRID_DELTA, phases):
            m = gtr(K=K, delta=delta, gamma_bar=1.0, phase=phase)
            # E[γ] <= 2 here; the Rayleigh tail beyond 60 is e^-60
            res = integrate_finite(lambda g: models.snr_pdf(g, m).value, 0.0, 60.0, QuadSpec(rel_tol=1e-9))
            self.assertAlmostEqual(res.value, 1.0, delta=1e-8, msg=f"K={K} delta={delta} {phase.describe()}")

    def test_hyper_two_ray_ordering(self):
        base = gtr(K=1e4, delta=1.0, gamma_bar=1.0)
        truncated = [models.envelope_cdf(0.1, base.with_(phase=TruncatedUniform(p))).value for p in (1.0, 0.5, 0.2)]
        concentrated = [base.with_(phase=VonMises(eta)) for eta in (0.0, 2.0, 5.0)]
        vm = [models.envelope_cdf(0.1, m).value for m in concentrated]
        means = [models.mean_snr(m).value for m in concentrated]
        for values in (truncated, vm):
            self.assertTrue(all(b > a for a, b in zip(values, values[1:])), values)
        self.assertTrue(all(b < a for a, b in zip(means, means[1:])), means)
        self.assertAlmostEqual(truncated[0], 0.0449, delta=5e-4); self.assertAlmostEqual(truncated[2], 0.2247, delta=5e-4)
        self.assertAlmostEqual(vm[2], 0.2408, delta=5e-4); self.assertAlmostEqual(means[2], 0.107, delta=5e-4)


class MgfAndMomentTests(unittest.TestCase):
    def test_closed_mgf_matches_quadrature(self):
        for phase in (Uniform(), VonMises(0.0), VonMises(3.0), VonMises(2.5, centered_at_pi=False)):
            m = gtr(K=10.0, delta=0.5, gamma_bar=10.0, phase=phase)
            for s in (-1.0, -0.05, 0.05):
                closed = models.mgf(s, m, SPEC)
                forced = models.mgf(s, m, SPEC, closed_form=False)
                self.assertIs(closed.method, Method.CLOSED_FORM)
                self.assertAlmostEqual(forced.value / closed.value, 1.0, delta=1e-10, msg=f"{phase.describe()} s={s}")

    def test_closed_mgf_matches_quadrature_over_the_grid(self):
        for K, delta, phase in itertools.product(GRID_K, GRID_DELTA, (Uniform(), VonMises(3.0), VonMises(3.0, centered_at_pi=False))):
            m = gtr(K=K, delta=delta, phase=phase)
            for x in GRID_S_GAMMA:
                closed = models.mgf(x / m.gamma_bar, m)
                forced = models.mgf(x / m.gamma_bar, m, GRID_SPEC, closed_form=False)
                self.assertIs(closed.method, Method.CLOSED_FORM)
                self.assertAlmostEqual(forced.value / closed.value, 1.0, delta=1e-9, msg=f"K={K} delta={delta} {phase.describe()} s*gb={x}")

    def test_truncated_mgf_over_the_grid(self):
        phase = TruncatedUniform(0.3)
        lo, hi = phase.support
        for K, delta in itertools.product(GRID_K, GRID_DELTA):
            m = gtr(K=K, delta=delta, phase=phase)
            for x in GRID_S_GAMMA:
                expected = mp_mgf(x / m.gamma_bar, m, lambda a: 1 / (2 * mpmath.pi * 0.3), [lo, math.pi, hi])
                got = models.mgf(x / m.gamma_bar, m, GRID_SPEC).value
                self.assertAlmostEqual(got / expected, 1.0, delta=1e-9, msg=f"K={K} delta={delta} s*gb={x}")

    def test_mgf_at_zero_and_truncated_path(self):
        for phase in PHASES:
            self.assertAlmostEqual(models.mgf(0.0, gtr(phase=phase)).value, 1.0, places=12)
        self.assertIs(models.mgf(-1.0, gtr(phase=TruncatedUniform(0.3))).method, Method.QUADRATURE)

    def test_mgf_domain(self):
        with self.assertRaises(DomainError) as ctx:
            models.mgf(1.1, gtr(K=10.0, gamma_bar=10.0))
        self.assertEqual(ctx.exception.invariant, "mgf_domain")

    def test_first_moment_is_mean_snr(self):
        for phase in PHASES:
            m = gtr(phase=phase)
            first = models.moment(1, m, SPEC, closed_form=False).value
            self.assertAlmostEqual(models.mean_snr(m, SPEC).value / first, 1.0, delta=1e-10, msg=phase.describe())
        self.assertEqual(models.mean_snr(gtr(gamma_bar=7.0)).value, 7.0)

    def test_mean_snr_closed_forms(self):
        m = gtr(K=10.0, delta=1.0, gamma_bar=1.0, phase=TruncatedUniform(0.2))
        expected = 1.0 - (10.0 / 11.0) * math.sin(0.2 * math.pi) / (0.2 * math.pi)
        self.assertAlmostEqual(models.mean_snr(m).value, expected, places=14)
        self.assertIs(models.mean_snr(m.with_(phase=TruncatedUniform(0.2, 0.3)), SPEC).method, Method.QUADRATURE)
        toward = models.mean_snr(m.with_(phase=VonMises(5.0))).value
        away = models.mean_snr(m.with_(phase=VonMises(5.0, centered_at_pi=False))).value
        self.assertLess(toward, 1.0); self.assertGreater(away, 1.0); self.assertAlmostEqual(toward + away, 2.0, places=14)

    def test_second_moment(self):
        m = gtr(K=6.0, delta=0.4, gamma_bar=3.0)
        closed = models.moment(2, m)
        self.assertIs(closed.method, Method.CLOSED_FORM)
        self.assertAlmostEqual(models.moment(2, m, SPEC, closed_form=False).value / closed.value, 1.0, delta=1e-11)
        rician = gtr(K=6.0, delta=0.0, gamma_bar=3.0, phase=VonMises(1.0))
        self.assertAlmostEqual(models.moment(3, rician).value / models.moment(3, rician, SPEC, closed_form=False).value, 1.0, delta=1e-11)

    def test_moment_order(self):
        for k in (0, 1.5, True):
            with self.assertRaises(DomainError):
                models.moment(k, gtr())

    def test_third_moment_is_the_third_mgf_derivative(self):
        lo, hi = TruncatedUniform(0.4).support
        cases = (
            (Uniform(), lambda a: 1 / (2 * mpmath.pi), [0, mpmath.pi, 2 * mpmath.pi]),
            (VonMises(2.0), lambda a: mpmath.exp(2 * mpmath.cos(a - mpmath.pi)) / (2 * mpmath.pi * mpmath.besseli(0, 2)), [0, mpmath.pi, 2 * mpmath.pi]),
            (TruncatedUniform(0.4), lambda a: 1 / (2 * mpmath.pi * 0.4), [lo, mpmath.pi, hi]),
        )
        for phase, weight, points in cases:
            m = gtr(K=10.0, delta=1.0, phase=phase)
            with mpmath.workdps(30):
                expected = float(mpmath.diff(lambda s: mp_mgf(s, m, weight, points), 0, 3))
            got = models.moment(3, m, SPEC).value
            self.assertAlmostEqual(got / expected, 1.0, delta=1e-9, msg=phase.describe())

    def test_amount_of_fading(self):
        self.assertAlmostEqual(models.amount_of_fading(gtr(K=0.0, delta=0.0)).value, 1.0, places=15)
        m = gtr(K=8.0, delta=0.9)
        m1 = models.moment(1, m, SPEC, closed_form=False).value
        m2 = models.moment(2, m, SPEC, closed_form=False).value
        self.assertAlmostEqual(models.amount_of_fading(m).value, (m2 - m1 * m1) / (m1 * m1), places=10)
        # the balanced two-ray limit of the uniform model
        self.assertAlmostEqual(models.amount_of_fading(gtr(K=1e8, delta=1.0)).value, 0.5, places=6)
        self.assertIs(models.amount_of_fading(gtr(phase=VonMises(2.0)), SPEC).method, Method.QUADRATURE)


class CrossingTests(unittest.TestCase):
    def test_rayleigh_closed_forms(self):
        m = gtr(K=0.0, delta=0.0, gamma_bar=2.0)
        mob = MobilityConfig(f_d=50.0)
        r = 0.8
        rho = r / math.sqrt(m.p_r)
        lcr = models.level_crossing_rate(r, m, mob).value
        self.assertAlmostEqual(lcr, math.sqrt(2 * math.pi) * 50.0 * rho * math.exp(-rho * rho), places=10)
        aod = models.average_outage_duration(r, m, mob).value
        self.assertAlmostEqual(aod, math.expm1(rho * rho) / (math.sqrt(2 * math.pi) * 50.0 * rho), places=12)

    def test_lcr_scales_with_doppler(self):
        m = gtr(phase=VonMises(1.0))
        a = models.level_crossing_rate(1.0, m, MobilityConfig(10.0)).value
        b = models.level_crossing_rate(1.0, m, MobilityConfig(30.0)).value
        self.assertAlmostEqual(b / a, 3.0, places=12)

    def test_domains(self):
        m, mob = gtr(gamma_bar=1.0), MobilityConfig(100.0)
        for r in (0.0, -1.0, math.inf):
            with self.assertRaises(DomainError):
                models.level_crossing_rate(r, m, mob)
        with self.assertRaises(DomainError):
            MobilityConfig(0.0)
        with self.assertRaises(DomainError) as ctx:
            models.average_outage_duration(1e3, gtr(K=0.0, delta=0.0, gamma_bar=1.0), mob)
        self.assertEqual(ctx.exception.invariant, "nonzero_crossing_rate")


if __name__ == "__main__":
    unittest.main()
