"""Regenerate the bundled illuminant and camera CSVs under src/illumest/data.

Run from the repository root:  python scripts/generate_reference_data.py

Two families are computed from their standard defining formulas and
self-checked against well-known anchor values (incandescent A, daylight D
series). The fluorescent and LED families are analytic stand-ins shaped like
their lamp classes; see src/illumest/data/PROVENANCE.md.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from illumest.io import write_illuminant_manifest, write_spd_csv  # noqa: E402
from illumest.spectral import SpectralAxis  # noqa: E402

AXIS = SpectralAxis(400.0, 10.0, 31)
WL = AXIS.wavelengths()

DATA_DIR = ROOT / "src" / "illumest" / "data"

# ---------------------------------------------------------------------------
# Incandescent reference: Planckian radiator formula, normalized to 100 at
# 560 nm (the constant 1.435e7 nm*K with 2848 K is the standard's exact
# historical parameterization).
# ---------------------------------------------------------------------------


def illuminant_a(wl: np.ndarray) -> np.ndarray:
    c = 1.435e7
    num = np.exp(c / (2848.0 * 560.0)) - 1.0
    den = np.exp(c / (2848.0 * wl)) - 1.0
    return 100.0 * (560.0 / wl) ** 5 * num / den


# ---------------------------------------------------------------------------
# Daylight series: component spectra S0, S1, S2 at 400..700/10 nm combined
# with CCT-derived weights M1, M2 (no intermediate rounding).
# ---------------------------------------------------------------------------

_S0 = np.array([
    94.80, 104.80, 105.90, 96.80, 113.90, 125.60, 125.50, 121.30, 121.30,
    113.50, 113.10, 110.80, 106.50, 108.80, 105.30, 104.40, 100.00, 96.00,
    95.10, 89.10, 90.50, 90.30, 88.40, 84.00, 85.10, 81.90, 82.60, 84.90,
    81.30, 71.90, 74.30,
])
_S1 = np.array([
    43.40, 46.30, 43.90, 37.10, 36.70, 35.90, 32.60, 27.90, 24.30, 20.10,
    16.20, 13.20, 8.60, 6.10, 4.20, 1.90, 0.00, -1.60, -3.50, -3.50, -5.80,
    -7.20, -8.60, -9.50, -10.90, -10.70, -12.00, -14.00, -13.60, -12.00,
    -13.30,
])
_S2 = np.array([
    -1.10, -0.50, -0.70, -1.20, -2.60, -2.90, -2.80, -2.60, -2.60, -1.80,
    -1.50, -1.30, -1.20, -1.00, -0.50, -0.30, 0.00, 0.20, 0.50, 2.10, 3.20,
    4.10, 4.70, 5.10, 6.70, 7.30, 8.60, 9.80, 10.20, 8.30, 9.60,
])

#: Nominal CCTs scaled by the 1.4388/1.4380 radiation-constant revision.
_D_SERIES = {
    "D50": 5000.0 * 1.4388 / 1.4380,
    "D55": 5500.0 * 1.4388 / 1.4380,
    "D60": 6000.0 * 1.4388 / 1.4380,
    "D65": 6500.0 * 1.4388 / 1.4380,
    "D75": 7500.0 * 1.4388 / 1.4380,
    "D93": 9300.0 * 1.4388 / 1.4380,
}


def daylight(cct: float) -> np.ndarray:
    t = cct
    if 4000.0 <= t <= 7000.0:
        x = 0.244063 + 0.09911e3 / t + 2.9678e6 / t**2 - 4.6070e9 / t**3
    elif 7000.0 < t <= 25000.0:
        x = 0.237040 + 0.24748e3 / t + 1.9018e6 / t**2 - 2.0064e9 / t**3
    else:
        raise ValueError(f"CCT {t} outside the daylight model range")
    y = -3.000 * x**2 + 2.870 * x - 0.275
    m = 0.0241 + 0.2562 * x - 0.7341 * y
    m1 = (-1.3515 - 1.7703 * x + 5.9114 * y) / m
    m2 = (0.0300 - 31.4424 * x + 30.0717 * y) / m
    return _S0 + m1 * _S1 + m2 * _S2


# ---------------------------------------------------------------------------
# Analytic stand-ins for discharge and LED lamps (see PROVENANCE.md).
# ---------------------------------------------------------------------------


def _g(center: float, sigma: float) -> np.ndarray:
    return np.exp(-((WL - center) ** 2) / (2.0 * sigma**2))


def _mercury_lines(strength: float) -> np.ndarray:
    lines = ((404.7, 0.7), (435.8, 1.0), (546.1, 0.95), (578.0, 0.75))
    out = np.zeros_like(WL)
    for center, rel in lines:
        out += strength * rel * np.exp(-((WL - center) ** 2) / (2.0 * 2.2**2))
    return out


def _fluorescent(blue: float, orange: float, lines: float) -> np.ndarray:
    return blue * _g(480, 55) + orange * _g(585, 70) + _mercury_lines(lines)


def _broadband(b1: float, b2: float, b3: float, lines: float) -> np.ndarray:
    cont = b1 * _g(450, 60) + b2 * _g(540, 65) + b3 * _g(610, 65)
    return cont + _mercury_lines(lines)


def _triband(t1: float, t2: float, t3: float, lines: float, cont: float) -> np.ndarray:
    peaks = t1 * _g(435, 10) + t2 * _g(545, 9) + t3 * _g(611, 11)
    return peaks + cont * (_g(490, 60) + _g(580, 60)) + _mercury_lines(lines)


def fluorescent_family() -> dict[str, np.ndarray]:
    return {
        "F1": _fluorescent(1.00, 0.48, 0.30),
        "F2": _fluorescent(0.62, 0.80, 0.32),
        "F3": _fluorescent(0.43, 0.94, 0.33),
        "F4": _fluorescent(0.30, 1.00, 0.34),
        "F5": _fluorescent(0.95, 0.42, 0.28),
        "F6": _fluorescent(0.55, 0.88, 0.30),
        "F7": _broadband(0.95, 0.90, 0.80, 0.22),
        "F8": _broadband(0.75, 0.92, 0.90, 0.20),
        "F9": _broadband(0.60, 0.88, 1.00, 0.22),
        "F10": _triband(0.85, 1.00, 0.95, 0.25, 0.10),
        "F11": _triband(0.70, 1.00, 1.05, 0.25, 0.08),
        "F12": _triband(0.50, 0.90, 1.20, 0.22, 0.08),
    }


def led_family() -> dict[str, np.ndarray]:
    pump450 = _g(450, 9)
    pump405 = _g(405, 8)
    phos_y = _g(555, 55)
    phos_r = _g(620, 60)
    phos_b = _g(470, 25)
    nr, ng, nb = _g(625, 9), _g(530, 14), _g(465, 10)
    return {
        "LED-B1": 0.35 * pump450 + 0.75 * phos_y + 1.00 * phos_r,
        "LED-B2": 0.42 * pump450 + 0.85 * phos_y + 0.92 * phos_r,
        "LED-B3": 0.65 * pump450 + 1.00 * phos_y + 0.62 * phos_r,
        "LED-B4": 0.85 * pump450 + 1.00 * phos_y + 0.45 * phos_r,
        "LED-B5": 1.05 * pump450 + 0.95 * phos_y + 0.30 * phos_r,
        "LED-BH1": 0.40 * pump450 + 0.70 * phos_y + 0.55 * phos_r + 0.80 * nr,
        "LED-RGB1": 0.55 * nb + 0.85 * ng + 1.00 * nr,
        "LED-V1": 0.55 * pump405 + 0.35 * phos_b + 0.80 * phos_y + 0.95 * phos_r,
        "LED-V2": 0.75 * pump405 + 0.55 * phos_b + 0.95 * phos_y + 0.55 * phos_r,
    }


# ---------------------------------------------------------------------------
# Synthetic camera sensitivities (three Gaussian-lobe RGB models).
# ---------------------------------------------------------------------------


def cameras() -> dict[str, np.ndarray]:
    def cam(r_peak, r_w, g_peak, g_w, b_peak, b_w, r_leak, b_leak):
        r = _g(r_peak, r_w) + r_leak * _g(460, 20)
        g = _g(g_peak, g_w)
        b = _g(b_peak, b_w) + b_leak * _g(560, 30)
        rows = np.stack([r, g, b], axis=1)
        return rows / rows.max()

    return {
        "camera_a": cam(598, 30, 535, 32, 465, 22, 0.08, 0.05),
        "camera_b": cam(610, 26, 528, 36, 458, 20, 0.05, 0.08),
        "camera_c": cam(592, 34, 542, 30, 470, 24, 0.10, 0.03),
    }


def _check_anchors() -> None:
    a = illuminant_a(WL)
    anchors_a = {400: 14.708, 500: 59.861, 600: 129.043, 700: 198.261}
    for nm, want in anchors_a.items():
        got = a[int((nm - 400) / 10)]
        assert abs(got - want) < 0.05, f"A({nm}) = {got:.4f}, expected {want}"
    d65 = daylight(_D_SERIES["D65"])
    anchors_d65 = {400: 82.755, 450: 117.008, 550: 104.046, 650: 80.027, 700: 71.609}
    for nm, want in anchors_d65.items():
        got = d65[int((nm - 400) / 10)]
        assert abs(got - want) < 0.2, f"D65({nm}) = {got:.4f}, expected ~{want}"
    assert abs(d65[16] - 100.0) < 1e-9, "D65 must be exactly 100 at 560 nm"


def main() -> None:
    _check_anchors()

    spds: dict[str, np.ndarray] = {"A": illuminant_a(WL)}
    for name, cct in _D_SERIES.items():
        spds[name] = daylight(cct)
    spds.update(fluorescent_family())
    spds.update(led_family())
    assert len(spds) == 28, f"expected 28 illuminants, built {len(spds)}"

    ill_dir = DATA_DIR / "illuminants"
    ill_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for name, spd in spds.items():
        assert np.all(spd >= 0) and spd.max() > 0, name
        normalized = spd / spd.max()
        fname = name.lower().replace("-", "_") + ".csv"
        write_spd_csv(ill_dir / fname, AXIS, normalized)
        entries.append((fname, name))
    write_illuminant_manifest(ill_dir / "manifest.txt", entries)

    cam_dir = DATA_DIR / "cameras"
    cam_dir.mkdir(parents=True, exist_ok=True)
    for name, rows in cameras().items():
        write_spd_csv(cam_dir / f"{name}.csv", AXIS, rows)

    print(f"wrote {len(entries)} illuminants and 3 cameras under {DATA_DIR}")


if __name__ == "__main__":
    main()
