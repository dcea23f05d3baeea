"""Multitone synthesis and PAPR reduction."""

import numpy as np
import pytest
from scipy import fft

from mmsound.errors import DimensionError, DomainError
from mmsound.models import MultitoneSpec
from mmsound.processing import waveform


def _spec(phases, amplitudes=None):
    phases = np.asarray(phases, dtype=float)
    return MultitoneSpec(num_tones=phases.size, phases_rad=phases, amplitudes=amplitudes)


class TestSynthesis:
    def test_single_tone_constant_envelope(self):
        x = waveform.synthesize_time_domain(_spec([0.7]), oversample=8)
        assert np.allclose(np.abs(x), np.abs(x[0]))
        assert waveform.papr_db(_spec([0.7])) == pytest.approx(0.0, abs=1e-9)

    def test_two_tone_envelope(self):
        x = waveform.synthesize_time_domain(_spec([0.0, 0.0]), oversample=16)
        t = np.arange(x.size) / (x.size * 500e3)
        expected = np.abs(2 * np.cos(np.pi * 500e3 * t))
        assert np.allclose(np.abs(x) * np.sqrt(2), expected, atol=1e-12)
        assert int(np.argmax(np.abs(x))) == 0

    def test_parseval(self, rng):
        amps = rng.uniform(0.5, 2.0, 64)
        spec = _spec(rng.uniform(0, 2 * np.pi, 64), amps)
        x = waveform.synthesize_time_domain(spec, oversample=4)
        assert np.mean(np.abs(x) ** 2) == pytest.approx(np.sum(amps ** 2) / 64, rel=1e-9)

    def test_sample_count(self):
        assert waveform.synthesize_time_domain(waveform.newman_spec(10), oversample=3).size == 30

    def test_spec_length_mismatch(self):
        with pytest.raises(DimensionError):
            MultitoneSpec(num_tones=3, phases_rad=[0.0, 1.0])

    def test_nonpositive_amplitude(self):
        with pytest.raises(DomainError):
            _spec([0.0, 0.0], [1.0, 0.0])


class TestPapr:
    def test_coherent_peak(self):
        assert waveform.papr_db(_spec(np.zeros(801))) == pytest.approx(29.04, abs=0.01)

    def test_newman_phases(self):
        assert 1.5 <= waveform.papr_db(waveform.newman_spec(801)) <= 3.5

    def test_oversample_floor(self):
        with pytest.raises(DomainError):
            waveform.papr_db(waveform.newman_spec(16), oversample=2)

    def test_common_phase_and_time_shift_invariance(self, rng):
        spec = _spec(rng.uniform(0, 2 * np.pi, 32))
        base = waveform.papr_db(spec, oversample=4)
        rotated = _spec(spec.phases_rad + 1.3)
        k = np.arange(32)
        shifted = _spec(spec.phases_rad + 2 * np.pi * k * 5 / (4 * 32))
        assert waveform.papr_db(rotated, oversample=4) == pytest.approx(base, abs=1e-9)
        assert waveform.papr_db(shifted, oversample=4) == pytest.approx(base, abs=1e-9)

    def test_never_negative(self, rng):
        for _ in range(20):
            assert waveform.papr_db(_spec(rng.uniform(0, 2 * np.pi, 17))) >= 0.0


class TestOptimizer:
    def test_two_tones_cannot_go_below_3db(self):
        design = waveform.optimize_phases(2, target_papr_db=1.0, max_iters=50)
        assert design.papr_db == pytest.approx(3.01, abs=0.01)
        assert not design.reached_target

    def test_reaches_one_db_for_801_tones(self):
        design = waveform.optimize_phases(801, target_papr_db=1.0, max_iters=2000)
        assert design.papr_db <= 1.0
        assert design.reached_target
        assert design.initial_papr_db == pytest.approx(waveform.papr_db(waveform.newman_spec(801)))

    def test_never_worse_than_start(self):
        design = waveform.optimize_phases(64, target_papr_db=0.0, max_iters=30, restarts=2, seed=1)
        assert design.papr_db <= design.initial_papr_db
        assert not design.reached_target

    def test_phase_only(self):
        design = waveform.optimize_phases(128, target_papr_db=1.5, max_iters=300)
        spec = design.spec
        assert np.array_equal(spec.amplitudes, np.ones(128))
        x = waveform.synthesize_time_domain(spec, oversample=4)
        magnitudes = np.abs(fft.fft(x)[:128]) / (x.size / np.sqrt(128))
        assert np.allclose(magnitudes, 1.0, rtol=1e-9)

    def test_idempotent_below_target(self):
        first = waveform.optimize_phases(64, target_papr_db=3.0, max_iters=200)
        assert first.reached_target
        again = waveform.optimize_phases(64, target_papr_db=3.0, initial=first.spec)
        assert again.spec is first.spec
        assert again.iterations == 0

    def test_needs_two_tones(self):
        with pytest.raises(DomainError):
            waveform.optimize_phases(1)

    def test_seeded_restarts_are_deterministic(self):
        a = waveform.optimize_phases(48, target_papr_db=0.1, max_iters=20, restarts=3, seed=7)
        b = waveform.optimize_phases(48, target_papr_db=0.1, max_iters=20, restarts=3, seed=7)
        assert np.array_equal(a.spec.phases_rad, b.spec.phases_rad)


class TestTables:
    def test_duration(self):
        assert waveform.waveform_duration_s(waveform.newman_spec(801)) == pytest.approx(2e-6)

    def test_rows(self):
        rows = waveform.spec_to_rows(waveform.newman_spec(4))
        assert [r["tone_index"] for r in rows] == [0, 1, 2, 3]
        assert rows[1]["phase_rad"] == pytest.approx(np.pi / 4)
