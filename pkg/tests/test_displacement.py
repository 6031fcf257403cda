import numpy as np
import pytest
from scipy.integrate import solve_ivp

from pseudotoric.displacement import (CutProfile, base_hamiltonian, displace,
                                      find_avoiding_ray, lift_hamiltonian,
                                      profile_for_loop)
from pseudotoric.fibration import (LevelValues, PseudotoricStructure,
                                   psi_eval, psi_jacobian,
                                   proportionality_factor)
from pseudotoric.loops import CircleLoop
from pseudotoric.symplectic import PhasePoint, poisson_bracket
from pseudotoric.torus import TorusSpec, twist_torus

from conftest import make_spec


def sample_profile():
    return CutProfile(ray_angle=np.pi, delta=0.3, delta_prime=0.75,
                      r_min=1.5, r_max=2.5, span=0.85, strength=1.0)


class TestAvoidingRay:
    def test_offset_circle(self):
        ray = find_avoiding_ray(CircleLoop(2.0, 0.5))
        assert ray.angle == pytest.approx(np.pi, abs=0.05)
        assert ray.min_distance > 1e-6 * 2.5

    def test_standard_loop_rejected(self):
        with pytest.raises(ValueError):
            find_avoiding_ray(CircleLoop(0.0, 1.0))

    def test_twist_loop(self):
        tw = twist_torus(2)
        ray = find_avoiding_ray(tw.loop)
        assert ray is not None
        # the returned ray misses every loop sample
        w = tw.loop.samples(4096)
        u = w * np.exp(-1j * ray.angle)
        dist = np.where(u.real >= 0, np.abs(u.imag), np.abs(u))
        assert np.min(dist) > 0

    def test_n_dirs_minimum(self):
        with pytest.raises(ValueError):
            find_avoiding_ray(CircleLoop(2.0, 0.5), n_dirs=16)


class TestCutProfile:
    def test_ordering_validated(self):
        with pytest.raises(ValueError):
            CutProfile(0.0, 0.5, 0.3, 1.0, 2.0, 0.5)

    def test_span_limit(self):
        with pytest.raises(ValueError):
            CutProfile(0.0, 0.1, 0.2, 1.0, 2.0, np.pi)

    def test_profile_for_loop(self):
        prof = profile_for_loop(CircleLoop(2.0, 0.5))
        assert prof.r_min == pytest.approx(1.5, abs=1e-3)
        assert prof.r_max == pytest.approx(2.5, abs=1e-3)
        assert 0 < prof.delta < prof.delta_prime < prof.r_min


class TestBaseHamiltonian:
    def test_vanishes_on_disc(self):
        prof = sample_profile()
        f = base_hamiltonian(prof)
        rng = np.random.default_rng(0)
        w = prof.delta * np.sqrt(rng.uniform(0, 1, 200)) \
            * np.exp(2j * np.pi * rng.uniform(0, 1, 200))
        assert np.all(f.value(w) == 0.0)
        assert np.all(f.wirtinger(w) == 0.0)

    def test_gradient_fd(self):
        prof = sample_profile()
        f = base_hamiltonian(prof)
        rng = np.random.default_rng(1)
        h = 1e-6
        for _ in range(40):
            w = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
            gw = f.wirtinger(w)
            fx = (f.value(w + h) - f.value(w - h)) / (2 * h)
            fy = (f.value(w + 1j * h) - f.value(w - 1j * h)) / (2 * h)
            assert abs(2 * gw - (fx + 1j * fy)) <= 1e-6 * (1 + abs(gw))

    def test_outward_radial_speed_on_plateau(self):
        prof = sample_profile()
        f = base_hamiltonian(prof)
        mid = prof.theta_mid
        for dtheta in np.linspace(-prof.span / 2, prof.span / 2, 9):
            for r in (prof.r_min, 2.0, prof.r_max):
                w = r * np.exp(1j * (mid + dtheta))
                v = f.velocity(w)
                radial = np.real(np.conj(w / abs(w)) * v)
                assert radial >= prof.strength * np.cos(prof.span / 2) / r - 1e-12

    def test_closed_form_flow_oracle(self):
        # on the plateau: r(t)^2 = r0^2 + 2 s cos(theta0 - mid) t, theta const
        prof = sample_profile()
        f = base_hamiltonian(prof)
        w0 = 1.6 * np.exp(1j * (prof.theta_mid + 0.2))

        def rhs(t, y):
            v = f.velocity(complex(y[0], y[1]))
            return [v.real, v.imag]

        sol = solve_ivp(rhs, (0, 0.8), [w0.real, w0.imag], rtol=1e-11,
                        atol=1e-12, dense_output=True)
        w1 = complex(sol.y[0, -1], sol.y[1, -1])
        r_expect = np.sqrt(abs(w0) ** 2 + 2 * prof.strength * np.cos(0.2) * 0.8)
        assert abs(w1) == pytest.approx(r_expect, abs=1e-8)
        assert np.angle(w1) == pytest.approx(np.angle(w0), abs=1e-8)


class TestLiftedHamiltonian:
    def test_vanishes_over_small_disc_and_singular_fiber(self):
        prof = sample_profile()
        F = lift_hamiltonian(prof)
        assert F(PhasePoint([0.0, 5.0])) == 0.0
        assert F(PhasePoint([0.1, 0.5, 0.2])) == 0.0   # |psi| = 0.01 < delta
        assert np.all(F.grad(PhasePoint([0.0, 3.0, 1.0])) == 0.0)

    def test_value_is_pullback(self):
        prof = sample_profile()
        F = lift_hamiltonian(prof)
        f = base_hamiltonian(prof)
        rng = np.random.default_rng(2)
        for _ in range(20):
            z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            p = PhasePoint(z)
            assert F(p) == pytest.approx(float(f.value(psi_eval(p))), abs=1e-12)

    def test_gradient_matches_fd(self):
        prof = sample_profile()
        F = lift_hamiltonian(prof)
        F_fd = lift_hamiltonian(prof)
        F_fd.gradient = None
        rng = np.random.default_rng(3)
        checked = 0
        while checked < 10:
            z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            if not 1.1 * prof.delta_prime < abs(np.prod(z)):
                continue
            p = PhasePoint(z)
            g, g_fd = F.grad(p), F_fd.grad(p)
            assert np.linalg.norm(g - g_fd) <= 1e-6 * (1 + np.linalg.norm(g))
            checked += 1

    def test_commutes_with_moments(self):
        prof = sample_profile()
        F = lift_hamiltonian(prof)
        S = PseudotoricStructure(2)
        rng = np.random.default_rng(4)
        for _ in range(20):
            z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            p = PhasePoint(z)
            for i in (1, 2):
                assert abs(poisson_bracket(F, S.moment_field(i), p)) <= 1e-10

    def test_projection_parallel_to_base_field(self):
        prof = sample_profile()
        F = lift_hamiltonian(prof)
        f = base_hamiltonian(prof)
        rng = np.random.default_rng(5)
        checked = 0
        while checked < 20:
            z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            p = PhasePoint(z)
            base = complex(f.velocity(psi_eval(p)))
            if abs(base) < 1e-6 or proportionality_factor(p) < 1e-6:
                continue
            from pseudotoric.symplectic import hamiltonian_field
            X = hamiltonian_field(F, p)
            proj = complex(np.sum(psi_jacobian(p) * X.components))
            ratio = proj / base
            assert abs(np.angle(ratio)) <= 1e-6
            assert ratio.real == pytest.approx(proportionality_factor(p),
                                               rel=1e-6)
            checked += 1


class TestDisplace:
    def test_circle_certificate(self):
        spec = make_spec(CircleLoop(2.0, 0.5), [0.0])
        prof = profile_for_loop(spec.loop)
        report = displace(spec, prof)
        assert report.certificate
        assert report.base_radius_margin > 0.05 * prof.r_max
        assert report.moment_drift <= 1e-6
        assert report.parallelism_defect <= 1e-6
        assert report.min_separation > 0

    def test_twist_certificate(self):
        spec = twist_torus(1)
        report = displace(spec, profile_for_loop(spec.loop))
        assert report.certificate
        assert report.base_radius_margin > 0

    def test_nonzero_levels(self):
        spec = make_spec(CircleLoop(2.0, 0.5), [0.3])
        report = displace(spec, profile_for_loop(spec.loop))
        assert report.certificate
        assert report.moment_drift <= 1e-6

    def test_standard_type_rejected(self):
        spec = make_spec(CircleLoop(0.0, 1.0), [0.0])
        with pytest.raises(ValueError):
            displace(spec, sample_profile())

    def test_time_cap_failure(self):
        from pseudotoric.symplectic import FlowParams
        spec = make_spec(CircleLoop(2.0, 0.5), [0.0])
        prof = profile_for_loop(spec.loop)
        params = FlowParams(step_size=0.001, max_time=0.002, tolerance=1e-10)
        report = displace(spec, prof, params=params)
        assert not report.certificate
        assert not report.escaped
        assert "slowest_sample_index" in report.diagnostics

    def test_margin_refinement_stability(self):
        spec = make_spec(CircleLoop(2.0, 0.5), [0.0])
        prof = profile_for_loop(spec.loop)
        m1 = displace(spec, prof, n_t=8, n_phi=8).base_radius_margin
        m2 = displace(spec, prof, n_t=16, n_phi=16).base_radius_margin
        assert abs(m2 - m1) <= 0.2 * max(m1, m2)
