import math

import numpy as np
import pytest

from mlab.errors import (
    ConfigurationError,
    DomainError,
    NumericalBlowupError,
    SequencingError,
    TruncationError,
)
from mlab.evolve import (
    EvolutionConfig,
    evolve_to,
    kick_step,
    kinetic_half_step,
    kinetic_step,
    potential_step,
)
from mlab.phasespace import PhaseSpaceState, gaussian_state, make_grid, marginal_x, moment, norm
from mlab.potentials import Duffing, FreeParticle, Harmonic, KickedRotor
from mlab.weyl import purity


def f2(s):
    return float((s.f**2).sum() * s.grid.cell_area)


class TestConfig:
    def test_liouville_needs_zero_d(self):
        with pytest.raises(ConfigurationError):
            EvolutionConfig("quantum_liouville", D=0.1)

    def test_problems_collected(self):
        with pytest.raises(ConfigurationError) as info:
            EvolutionConfig("bogus", D=-1, dt=0, moyal="x", lambda_max=4)
        msg = str(info.value)
        for word in ("mode", "D", "dt", "moyal", "lambda_max"):
            assert word in msg

    def test_kind_mismatch(self, qdkr_wigner):
        with pytest.raises(ConfigurationError):
            evolve_to(qdkr_wigner, KickedRotor(), EvolutionConfig("classical_liouville"), 1.0)


class TestKinetic:
    def test_free_streaming_moves_mean(self):
        g = make_grid(256, 64, -16, 16, -8, 8)
        s = gaussian_state(g, -2, 1.5, 0.8, 0.5, kind="classical")
        out = kinetic_step(s, 2.0, 3.0)
        assert moment(out, 1, 0) == pytest.approx(-2 + 1.5 * 3.0 / 2.0, abs=1e-8)
        assert moment(out, 0, 2) == pytest.approx(moment(s, 0, 2), rel=1e-12)
        assert norm(out) == pytest.approx(1.0, abs=1e-13)

    def test_half_step(self, box_grid):
        s = gaussian_state(box_grid, 0, 1, 1, 1, kind="classical")
        assert np.allclose(kinetic_half_step(s, 1.0, 0.2).f, kinetic_step(s, 1.0, 0.1).f)

    def test_cfl_guard_on_box(self, box_grid):
        s = gaussian_state(box_grid, 0, 0, 1, 1, kind="classical")
        with pytest.raises(ConfigurationError):
            kinetic_step(s, 1.0, 2.0)


class TestPotential:
    def test_harmonic_quantum_equals_classical(self):
        g = make_grid(128, 128, -10, 10, -10, 10)
        pot = Harmonic()
        sq = gaussian_state(g, 2, 0, 0.7, 0.7 / 0.98, kind="wigner")
        sc = gaussian_state(g, 2, 0, 0.7, 0.7 / 0.98, kind="classical")
        q = potential_step(sq, pot, EvolutionConfig("quantum_master", D=0.05), 0.0, 0.1)
        c = potential_step(sc, pot, EvolutionConfig("classical_fokker_planck", D=0.05), 0.0, 0.1)
        assert np.allclose(q.f, c.f, atol=1e-15)

    def test_truncated_series_exact_for_quartic(self):
        g = make_grid(128, 128, -6, 6, -12, 12)
        pot = Duffing()
        s = gaussian_state(g, -1, 2, 0.3, 1.0, kind="wigner", hbar=0.4)
        exact = potential_step(s, pot, EvolutionConfig("quantum_liouville"), 0.3, 0.01)
        trunc = potential_step(s, pot, EvolutionConfig("quantum_liouville", moyal="truncated",
                                                      lambda_max=3), 0.3, 0.01)
        assert np.allclose(exact.f, trunc.f, atol=1e-14)

    def test_first_order_truncation_is_classical(self):
        g = make_grid(128, 128, -6, 6, -12, 12)
        pot = Duffing()
        s = gaussian_state(g, -1, 2, 0.3, 1.0, kind="wigner", hbar=0.4)
        one = potential_step(s, pot, EvolutionConfig("quantum_liouville", moyal="truncated",
                                                    lambda_max=1), 0.3, 0.01)
        c = s.evolved(s.f.copy())
        c.kind = "classical"
        cl = potential_step(c, pot, EvolutionConfig("classical_liouville"), 0.3, 0.01)
        assert np.allclose(one.f, cl.f, atol=1e-14)

    def test_quantum_correction_scales_as_hbar_squared(self):
        g = make_grid(256, 256, -6, 6, -16, 16)
        pot = Duffing()
        s = gaussian_state(g, -2, 3, 0.3, 1.0, kind="classical")
        diffs = []
        for hbar in (0.4, 0.2, 0.1):
            q = s.evolved(s.f.copy())
            q.kind, q.hbar = "wigner", hbar
            fq = potential_step(q, pot, EvolutionConfig("quantum_liouville"), 0.0, 0.01).f
            fc = potential_step(s, pot, EvolutionConfig("classical_liouville"), 0.0, 0.01).f
            diffs.append(np.linalg.norm(fq - fc))
        assert diffs[0] / diffs[1] == pytest.approx(4.0, rel=0.02)
        assert diffs[1] / diffs[2] == pytest.approx(4.0, rel=0.02)

    def test_diffusion_raises_p2_linearly(self):
        g = make_grid(64, 256, -8, 8, -24, 24)
        s = gaussian_state(g, 0, 0, 1, 1, kind="classical")
        out = potential_step(s, FreeParticle(), EvolutionConfig("classical_fokker_planck", D=0.3),
                             0.0, 2.0)
        assert moment(out, 0, 2) == pytest.approx(1.0 + 2 * 0.3 * 2.0, rel=1e-9)


class TestKick:
    def test_first_kick_p2_quantum_and_classical(self, ring_grid):
        sigma = 2.5
        # <sin^2 q> of a (wrapped) Gaussian is (1 - exp(-2 sigma^2)) / 2
        for mode, kind in (("classical_liouville", "classical"), ("quantum_liouville", "wigner")):
            s = gaussian_state(ring_grid, 0, 0, sigma, 1.0, kind=kind, hbar=5.0)
            sin2 = np.sum(np.sin(ring_grid.x) ** 2 * marginal_x(s)) * ring_grid.dx
            assert sin2 == pytest.approx((1 - math.exp(-2 * sigma**2)) / 2, abs=1e-6)
            out = kick_step(s, 10.0, EvolutionConfig(mode))
            # the Nyquist theta column (Gaussian amplitude ~e^-12.6) limits this to ~1e-9
            assert moment(out, 0, 2) == pytest.approx(moment(s, 0, 2) + 100.0 * sin2, rel=1e-8)

    def test_kick_needs_periodic_grid(self, box_grid):
        s = gaussian_state(box_grid, 0, 0, 1, 1, kind="classical")
        with pytest.raises(DomainError):
            kick_step(s, 1.0, EvolutionConfig("classical_liouville"))

    def test_off_integer_kick(self, qdkr_wigner):
        s = qdkr_wigner.evolved(qdkr_wigner.f, t=0.5)
        with pytest.raises(SequencingError):
            kick_step(s, 10.0, EvolutionConfig("quantum_liouville"))

    def test_kick_is_unitary(self, qdkr_wigner):
        out = kick_step(qdkr_wigner, 10.0, EvolutionConfig("quantum_liouville"))
        assert purity(out) == pytest.approx(purity(qdkr_wigner), abs=1e-12)
        assert norm(out) == pytest.approx(1.0, abs=1e-13)


class TestEvolveTo:
    @pytest.mark.parametrize("mode,D", [("classical_liouville", 0.0), ("classical_fokker_planck", 0.1),
                                        ("quantum_liouville", 0.0), ("quantum_master", 0.1)])
    def test_norm_preserved(self, ring_grid, mode, D):
        kind = "wigner" if mode.startswith("quantum") else "classical"
        s = gaussian_state(ring_grid, 0, 0, 2.5, 1.0, kind=kind, hbar=5.0)
        rec, out = evolve_to(s, KickedRotor(10.0), EvolutionConfig(mode, D=D), 3.0,
                             {"norm": norm}, cadence=1.0)
        assert np.abs(rec["norm"] - 1).max() < 1e-8
        assert out.t == pytest.approx(3.0)

    def test_liouville_preserves_f2_on_box(self):
        g = make_grid(256, 256, -8, 8, -40, 40)
        s = gaussian_state(g, -3, 8, 0.1, 1.0, kind="classical")
        pot = Duffing()
        rec, _ = evolve_to(s, pot, EvolutionConfig("classical_liouville", dt=pot.period / 100),
                           pot.period, {"f2": f2}, check_leakage=False)
        assert abs(rec["f2"][-1] / rec["f2"][0] - 1) < 1e-12

    def test_exact_flight_matches_fine_strang(self):
        # resolved regime: the sheared theta stays inside the grid band
        g = make_grid(64, 1024, -math.pi, math.pi, -80, 80, "periodic_x")
        s = gaussian_state(g, 0, 0, 2.5, 1.0, kind="classical", hbar=5.0)
        s = kick_step(s, 1.0, EvolutionConfig("classical_liouville"))
        cfg = EvolutionConfig("classical_fokker_planck", D=0.1, dt=0.01)
        _, exact = evolve_to(s, FreeParticle(), cfg, 1.0)

        def strang(n):
            st = s
            dt = 1.0 / n
            for _ in range(n):
                st = kinetic_step(st, 1.0, dt / 2)
                st = potential_step(st, FreeParticle(), cfg, 0.0, dt)
                st = kinetic_step(st, 1.0, dt / 2)
            return st.f

        e1 = np.linalg.norm(strang(10) - exact.f)
        e2 = np.linalg.norm(strang(20) - exact.f)
        assert e1 / e2 == pytest.approx(4.0, rel=0.05)
        assert e2 < 1e-4 * np.linalg.norm(exact.f)

    @pytest.mark.filterwarnings("ignore::mlab.errors.TruncationWarning")
    def test_split_run_is_bit_identical(self, qdkr_wigner):
        cfg = EvolutionConfig("quantum_master", D=0.1)
        obs = {"p2": lambda s: moment(s, 0, 2)}
        rec, full = evolve_to(qdkr_wigner, KickedRotor(10.0), cfg, 3.0, obs, cadence=0.5)
        r1, mid = evolve_to(qdkr_wigner, KickedRotor(10.0), cfg, 1.5, obs, cadence=0.5)
        r2, end = evolve_to(mid, KickedRotor(10.0), cfg, 3.0, obs, cadence=0.5)
        assert np.array_equal(full.f, end.f)
        joined = r1.concatenate(r2)
        assert np.array_equal(joined.times, rec.times)
        assert np.array_equal(joined["p2"], rec["p2"])

    def test_split_duffing_bit_identical(self):
        g = make_grid(128, 128, -8, 8, -20, 20)
        s = gaussian_state(g, -3, 8, 0.2, 1.0, kind="wigner", hbar=0.4)
        pot = Duffing()
        cfg = EvolutionConfig("quantum_master", D=0.02, dt=0.005)
        _, full = evolve_to(s, pot, cfg, 0.2, cadence=0.1, check_leakage=False)
        _, mid = evolve_to(s, pot, cfg, 0.1, cadence=0.1, check_leakage=False)
        _, end = evolve_to(mid, pot, cfg, 0.2, cadence=0.1, check_leakage=False)
        assert np.array_equal(full.f, end.f)

    def test_sequencing_errors(self, qdkr_wigner):
        cfg = EvolutionConfig("quantum_liouville", dt=0.01)
        with pytest.raises(SequencingError):
            evolve_to(qdkr_wigner, KickedRotor(), cfg, 1.005)
        with pytest.raises(SequencingError):
            evolve_to(qdkr_wigner, KickedRotor(), EvolutionConfig("quantum_liouville", dt=0.3), 0.9)
        with pytest.raises(SequencingError):
            evolve_to(qdkr_wigner, KickedRotor(), cfg, 0.0)

    def test_kicks_need_periodic_grid(self, box_grid):
        s = gaussian_state(box_grid, 0, 0, 1, 1, kind="classical")
        with pytest.raises(DomainError):
            evolve_to(s, KickedRotor(), EvolutionConfig("classical_liouville"), 1.0)

    def test_leakage_detected(self):
        g = make_grid(64, 64, -math.pi, math.pi, -20, 20, "periodic_x")
        s = gaussian_state(g, 0, 0, 2.5, 1.0, kind="classical", hbar=5.0)
        with pytest.raises(TruncationError) as info:
            evolve_to(s, KickedRotor(10.0), EvolutionConfig("classical_liouville"), 5.0,
                      {"norm": norm}, cadence=1.0)
        assert len(info.value.partial) >= 1

    def test_blowup_detected(self, box_grid):
        s = gaussian_state(box_grid, 0, 0, 1, 1, kind="classical")
        f = s.f.copy()
        f[10, 10] = np.nan
        bad = PhaseSpaceState.__new__(PhaseSpaceState)
        bad.__dict__.update(s.__dict__, f=f)
        with pytest.raises(NumericalBlowupError):
            evolve_to(bad, Harmonic(), EvolutionConfig("classical_liouville", dt=0.01), 0.1)

    def test_observation_times(self, qdkr_wigner):
        rec, _ = evolve_to(qdkr_wigner, KickedRotor(10.0), EvolutionConfig("quantum_liouville"),
                           2.0, {"norm": norm}, cadence=1.0, observe_at=(0.25,))
        assert np.allclose(rec.times, [0, 0.25, 1, 2])
        assert rec.metadata["mode"] == "quantum_liouville"


def test_classical_rotor_matches_standard_map_monte_carlo():
    """Liouville solver against the standard map sampled from the same initial density."""
    g = make_grid(256, 4096, -math.pi, math.pi, -128, 128, "periodic_x")
    s = gaussian_state(g, 0, 0, 2.5, 1.0, kind="classical", hbar=5.0)
    rec, _ = evolve_to(s, KickedRotor(10.0), EvolutionConfig("classical_liouville"), 5.0,
                       {"p2": lambda st: moment(st, 0, 2)}, cadence=1.0)
    rng = np.random.default_rng(5)
    n = 400_000
    q = rng.normal(0, 2.5, n)
    p = rng.normal(0, 1.0, n)
    mc, se = [1.0], [0.0]
    for _ in range(5):
        p = p + 10.0 * np.sin(q)
        q = q + p
        mc.append(np.mean(p**2))
        se.append(np.std(p**2) / math.sqrt(n))
    z = np.abs(rec["p2"] - np.array(mc)) / np.maximum(np.array(se), 1e-12)
    assert rec["p2"][0] == pytest.approx(1.0, abs=1e-9)
    assert np.all(z[1:] < 4.0), (rec["p2"], mc, se)
