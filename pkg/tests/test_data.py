"""Integrity of the bundled spectral data."""

import numpy as np
import pytest

from illumest.bundled import bundled_camera_paths, bundled_illuminant_manifest
from illumest.io import read_sensitivities, read_spd_csv
from illumest.spectral import SpectralAxis

EXPECTED_NAMES = (
    ["A"]
    + [f"D{n}" for n in (50, 55, 60, 65, 75, 93)]
    + [f"F{i}" for i in range(1, 13)]
    + [f"LED-B{i}" for i in range(1, 6)]
    + ["LED-BH1", "LED-RGB1", "LED-V1", "LED-V2"]
)


def spd(bundled_set, name):
    return bundled_set[bundled_set.index_of(name)].spd


def at(spectrum, wl):
    axis = spectrum.axis
    i = int(round((wl - axis.start_nm) / axis.step_nm))
    return float(spectrum.values[i])


class TestCatalog:
    def test_names_and_count(self, bundled_set):
        assert bundled_set.names() == EXPECTED_NAMES
        assert len(bundled_set) == 28

    def test_shared_default_axis(self, bundled_set):
        assert bundled_set.axis == SpectralAxis(400.0, 10.0, 31)

    def test_normalized_to_unit_peak(self, bundled_set):
        for ill in bundled_set:
            v = ill.spd.values
            assert v.min() >= 0.0
            assert v.max() == pytest.approx(1.0, abs=1e-12)


class TestIncandescent:
    def test_blackbody_ratios(self, bundled_set):
        # Planck-law ratios for a 2856 K radiator at the standard anchors
        a = spd(bundled_set, "A")
        assert at(a, 500) / at(a, 600) == pytest.approx(59.861 / 129.043, rel=5e-3)
        assert at(a, 400) / at(a, 700) == pytest.approx(14.708 / 198.261, rel=5e-3)
        # monotonically rising toward the red end
        assert np.all(np.diff(a.values) > 0)


class TestDaylight:
    def test_d65_ratios(self, bundled_set):
        d65 = spd(bundled_set, "D65")
        assert at(d65, 400) / at(d65, 550) == pytest.approx(82.755 / 104.046, rel=1e-2)
        assert at(d65, 650) / at(d65, 550) == pytest.approx(80.027 / 104.046, rel=1e-2)
        assert at(d65, 700) / at(d65, 450) == pytest.approx(71.609 / 117.008, rel=1e-2)

    def test_family_orders_by_temperature(self, bundled_set):
        # warmer phases put relatively more energy in the red
        red_blue = {
            name: at(spd(bundled_set, name), 650) / at(spd(bundled_set, name), 450)
            for name in ("D50", "D65", "D93")
        }
        assert red_blue["D50"] > red_blue["D65"] > red_blue["D93"]


class TestDischargeAndLed:
    def test_fluorescents_cover_the_range(self, bundled_set):
        for i in range(1, 13):
            v = spd(bundled_set, f"F{i}").values
            assert v.min() > 0.0

    def test_rgb_led_is_trimodal(self, bundled_set):
        led = spd(bundled_set, "LED-RGB1")
        assert at(led, 630) > 5 * at(led, 680)
        assert at(led, 530) > 3 * at(led, 500)
        assert at(led, 470) > 3 * at(led, 420)

    def test_violet_pumped_leds_emit_in_violet(self, bundled_set):
        for name in ("LED-V1", "LED-V2"):
            led = spd(bundled_set, name)
            assert at(led, 400) > 0.05


class TestCameras:
    def test_three_cameras_bundled(self, bundled_cameras):
        names = [p.stem for p in bundled_cameras]
        assert names == ["camera_a", "camera_b", "camera_c"]
        for p in bundled_cameras:
            assert p.exists()

    def test_channel_peaks_ordered_red_green_blue(self, bundled_cameras):
        for p in bundled_cameras:
            sens = read_sensitivities(p)
            assert sens.axis == SpectralAxis(400.0, 10.0, 31)
            wl = sens.axis.wavelengths()
            peaks = [wl[int(np.argmax(row))] for row in sens.rows]
            assert peaks[0] > peaks[1] > peaks[2]

    def test_normalized_and_nonnegative(self, bundled_cameras):
        for p in bundled_cameras:
            _, values = read_spd_csv(p)
            assert values.min() >= 0.0
            assert values.max() == pytest.approx(1.0, abs=1e-12)


class TestPackaging:
    def test_manifest_lives_inside_package(self):
        man = bundled_illuminant_manifest()
        assert man.exists()
        assert man.parent.name == "illuminants"

    def test_provenance_note_ships(self):
        man = bundled_illuminant_manifest()
        assert (man.parent.parent / "PROVENANCE.md").exists()
