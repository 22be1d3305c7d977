"""Resonance chain: construction, gauge fidelity against the complex
coupled equations, eigensolver oracles, statistics, and classification."""

import math

import numpy as np
import pytest

from drivenosc.chain import (
    DELOCALIZED,
    build_chain,
    classify_states,
    eigenstate_stats,
    solve_chain,
)
from drivenosc.model import ModelParams, cell_boundaries, matrix_element_exact


def complex_chain_matrix(chain):
    """The resonance-restricted operator in its native complex form,
    assembled independently from the coupling elements."""
    p = chain.params
    N = p.resonance_number
    K = chain.size
    H = np.zeros((K, K), dtype=complex)
    for k in range(K):
        m = int(chain.site_states[k])
        H[k, k] = p.h * p.detuning * m / N
        if k + 1 < K:
            H[k, k + 1] = 0.5 * p.epsilon * matrix_element_exact(m, m + N, p.h)
        if k - 1 >= 0:
            H[k, k - 1] = 0.5 * p.epsilon * np.conj(matrix_element_exact(m, m - N, p.h))
    return H


class TestBuildChain:
    def test_resonant_diagonal_zero(self, params_weak):
        chain = build_chain(params_weak, 0, 100)
        assert np.all(chain.diagonal == 0.0)

    def test_zero_drive_zero_hopping(self):
        p = ModelParams(h=0.2, epsilon=0.0, resonance_number=2, detuning=0.01)
        chain = build_chain(p, 0, 50)
        assert np.all(chain.hopping == 0.0)
        assert np.all(chain.diagonal == 0.01 * 0.2 * chain.site_states / 2)

    def test_hopping_sign_definite_with_node_near_66(self, params_weak):
        chain = build_chain(params_weak, 0, 200)
        below = chain.site_states[:-1] < 60
        assert np.all(chain.hopping[below] > 0)
        k_node = int(np.argmin(np.abs(chain.hopping[:60])))
        assert 60 <= chain.site_states[k_node] <= 70

    def test_offset_gauge_shift(self, params_weak):
        chain = build_chain(params_weak, 1, 10)
        assert list(chain.site_states[:3]) == [1, 3, 5]
        assert chain.quasienergy_shift == pytest.approx(
            params_weak.mu * params_weak.h * 0.5
        )
        aligned = build_chain(params_weak, 4, 10)
        assert aligned.quasienergy_shift == 0.0

    def test_validation(self, params_weak):
        with pytest.raises(ValueError):
            build_chain(params_weak, -1, 10)
        with pytest.raises(ValueError):
            build_chain(params_weak, 0, 1)


class TestSolveChain:
    def test_zero_drive_is_site_ladder(self):
        p = ModelParams(h=0.2, epsilon=0.0, resonance_number=2, detuning=0.001)
        states = solve_chain(build_chain(p, 0, 40))
        for q, s in enumerate(states):
            m = 2 * q
            assert s.quasienergy == pytest.approx(0.2 * 0.001 * m / 2, abs=1e-15)
            assert s.mean == pytest.approx(m, abs=1e-9)
            assert s.variance == pytest.approx(0.0, abs=1e-6)

    def test_two_site_symmetric_split(self):
        p = ModelParams(h=0.2, epsilon=0.02, resonance_number=2, detuning=0.0)
        chain = build_chain(p, 10, 2)
        t = chain.hopping[0]
        states = solve_chain(chain)
        vals = sorted(s.quasienergy for s in states)
        assert vals[0] == pytest.approx(-abs(t), rel=1e-12)
        assert vals[1] == pytest.approx(abs(t), rel=1e-12)
        for s in states:
            w = np.abs(s.amplitudes) ** 2
            np.testing.assert_allclose(w, [0.5, 0.5], atol=1e-12)

    @pytest.mark.parametrize("resonance", [1, 2, 3])
    def test_gauge_reproduces_complex_equations(self, resonance):
        # re-gauged amplitudes must satisfy the native complex eigenproblem
        p = ModelParams(h=0.2, epsilon=0.05, resonance_number=resonance, detuning=0.002)
        chain = build_chain(p, 0, 30)
        H = complex_chain_matrix(chain)
        for s in solve_chain(chain)[::7]:
            residual = H @ s.amplitudes - s.quasienergy * s.amplitudes
            assert np.abs(residual).max() < 1e-10

    def test_eigen_residual_and_norm(self, params_weak):
        chain = build_chain(params_weak, 0, 120)
        H = complex_chain_matrix(chain)
        for s in solve_chain(chain)[::13]:
            assert abs(np.vdot(s.amplitudes, s.amplitudes).real - 1) < 1e-12
            assert np.abs(H @ s.amplitudes - s.quasienergy * s.amplitudes).max() < 1e-10

    def test_dense_solver_oracle_small_chains(self, params_weak):
        # brute force via the characteristic-polynomial recurrence and
        # via a dense Hermitian solver, both independent of the
        # tridiagonal path
        for sites in [3, 7, 12]:
            chain = build_chain(params_weak, 20, sites)
            ours = np.array(sorted(s.quasienergy for s in solve_chain(chain)))
            dense = np.sort(np.linalg.eigvalsh(complex_chain_matrix(chain)))
            np.testing.assert_allclose(ours, dense, atol=1e-10)
            # det(H - x) over the tridiagonal recurrence
            d, t = chain.diagonal, chain.hopping
            polys = [np.poly1d([1.0]), np.poly1d([-1.0, d[0]])]
            for k in range(1, sites):
                polys.append(
                    np.poly1d([-1.0, d[k]]) * polys[-1] - t[k - 1] ** 2 * polys[-2]
                )
            roots = np.sort(np.real(np.roots(polys[-1])))
            np.testing.assert_allclose(ours, roots, atol=1e-8)

    def test_drive_scaling_invariance(self):
        # at exact resonance the eigenvectors do not depend on the drive;
        # match states by eigenvalue (the +/- pairs share the same mean)
        base = ModelParams(h=0.2, epsilon=0.02, resonance_number=2, detuning=0.0)
        scaled = ModelParams(h=0.2, epsilon=0.06, resonance_number=2, detuning=0.0)
        sa = sorted(solve_chain(build_chain(base, 0, 80)), key=lambda s: s.quasienergy)
        sb = sorted(solve_chain(build_chain(scaled, 0, 80)), key=lambda s: s.quasienergy)
        for a, b in zip(sa, sb):
            assert b.quasienergy == pytest.approx(3 * a.quasienergy, abs=1e-12)
            overlap = abs(np.vdot(a.amplitudes, b.amplitudes))
            assert overlap == pytest.approx(1.0, abs=1e-10)

    def test_mirror_symmetry(self, params_weak):
        chain = build_chain(params_weak, 0, 60)
        flipped = type(chain)(
            params=chain.params,
            site_states=chain.site_states,
            diagonal=chain.diagonal[::-1].copy(),
            hopping=chain.hopping[::-1].copy(),
            gauge_phases=chain.gauge_phases,
        )
        va = np.sort([s.quasienergy for s in solve_chain(chain)])
        vb = np.sort([s.quasienergy for s in solve_chain(flipped)])
        np.testing.assert_allclose(va, vb, atol=1e-12)


class TestStats:
    def test_point_mass(self):
        amps = np.zeros(5, dtype=complex)
        amps[2] = 1.0
        mean, var = eigenstate_stats(amps, np.array([10, 20, 30, 40, 50]))
        assert (mean, var) == (30.0, 0.0)

    def test_two_point(self):
        amps = np.array([1, 1]) / math.sqrt(2)
        mean, var = eigenstate_stats(amps, np.array([0, 2]))
        assert mean == pytest.approx(1.0)
        assert var == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [2, 5, 16])
    def test_uniform_closed_form(self, n):
        amps = np.full(n, 1.0 / math.sqrt(n), dtype=complex)
        sites = np.arange(0, 2 * n, 2)
        mean, var = eigenstate_stats(amps, sites)
        assert mean == pytest.approx(n - 1.0, rel=1e-12)
        assert var == pytest.approx(math.sqrt((n * n - 1.0) / 3.0), rel=1e-12)


class TestClassify:
    def test_point_state_resident(self, params_detuned, partition):
        # a one-site (delta) state at m = 400 sits in its cell with zero width
        from drivenosc.chain import QuasienergyState

        sites = np.arange(396, 406, 2)
        amps = np.zeros(len(sites), dtype=complex)
        amps[2] = 1.0  # m = 400
        mean, var = eigenstate_stats(amps, sites)
        m = 400
        state = QuasienergyState(
            0.2 * 0.001 * m / 2, sites, amps, mean, var
        )
        out = classify_states([state], partition)
        assert out[0].cell_index == partition.cell_of(400)
        assert out[0].variance == 0.0

    def test_wide_state_delocalized(self, partition):
        # two-point state tuned to mean 30 (cell 1) with root variance three
        # times the cell-1 width
        from drivenosc.chain import QuasienergyState

        width = partition.cell_width(1)
        target = 3 * width
        far = (target**2 + 30.0**2) / 30.0
        p = 30.0 / far
        sites = np.array([0.0, far])
        amps = np.sqrt(np.array([1 - p, p])).astype(complex)
        mean, var = eigenstate_stats(amps, sites)
        assert mean == pytest.approx(30.0)
        assert var == pytest.approx(target, rel=1e-12)
        state = QuasienergyState(0.0, sites, amps, mean, var)
        out = classify_states([state], partition)
        assert out[0].cell_index == DELOCALIZED

    def test_partition_must_cover(self, params_weak):
        small = cell_boundaries(0.2, 2, 100)
        states = solve_chain(build_chain(params_weak, 200, 4))
        with pytest.raises(ValueError):
            classify_states(states, small)


class TestDetunedLocalization:
    """Behavior of the chain in the detuned regime (finite resonant region)."""

    def test_variances_shrink_relative_to_resonant(self, params_weak, params_detuned):
        resonant = solve_chain(build_chain(params_weak, 0, 601))
        detuned = solve_chain(build_chain(params_detuned, 0, 601))
        sel_r = [s.variance for s in resonant if 400 < s.mean < 1000]
        sel_d = [s.variance for s in detuned if 400 < s.mean < 1000]
        assert np.mean(sel_d) < 0.55 * np.mean(sel_r)

    @pytest.mark.xfail(
        strict=True,
        reason="level-ladder states stay several sites wide: the hop energy "
        "(eps/2)|F| ~ 1.6e-3 exceeds the per-site detuning step h*delta = 2e-4, "
        "so point localization would require levels beyond ~1e7",
    )
    def test_far_region_point_localized(self, params_detuned):
        states = solve_chain(build_chain(params_detuned, 0, 701))
        sel = [s for s in states if 400 < s.mean <= 1200]
        assert all(s.variance < params_detuned.resonance_number for s in sel)
