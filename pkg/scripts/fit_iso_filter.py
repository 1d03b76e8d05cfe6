"""Fit the fifth-order motion-sickness weighting filter and freeze its coefficients.

The target is the ISO 2631-1 Wf weighting (band-limiting high/low pass,
acceleration-velocity transition and upward step, 8th order). The fitted
model is

    H(s) = K s^2 / ((s + p0)(s^2 + b1 s + b0)(s^2 + c1 s + c0))

with every coefficient positive (so the filter is stable), fitted by least
squares on log-magnitude over 0.01-2 Hz from a seeded set of random starts.
Five poles cannot give both the s^2 low-frequency slope and the s^-4
high-frequency slope of the target; keeping the s^2 side was the best of the
numerator degrees tried (0, 1, 2 extra zeros all converge to this form). The result, its partial-fraction
(modal) form and the fit residual are written to ``src/msprofile/_iso_coeffs.py``.

    python scripts/fit_iso_filter.py
"""

from __future__ import annotations

import pathlib

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import residue

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "msprofile" / "_iso_coeffs.py"
F_LO, F_HI, N_FREQ = 0.01, 2.0, 400


def wf_exact(f):
    p = 2j * np.pi * np.asarray(f, dtype=float)
    w1, w2, w4, w5, w6 = (2 * np.pi * x for x in (0.08, 0.63, 0.25, 0.0625, 0.1))
    q4, q5, q6 = 0.86, 0.80, 0.80
    hh = 1 / (1 + np.sqrt(2) * w1 / p + (w1 / p) ** 2)
    hl = 1 / (1 + np.sqrt(2) * p / w2 + (p / w2) ** 2)
    ht = 1 / (1 + p / (q4 * w4) + (p / w4) ** 2)
    hs = (1 + p / (q5 * w5) + (p / w5) ** 2) / (1 + p / (q6 * w6) + (p / w6) ** 2) * (w5 / w6) ** 2
    return hh * hl * ht * hs


def polys(theta):
    k, p0, b1, b0, c1, c0 = np.exp(theta)
    num = np.array([k, 0.0, 0.0])
    den = np.polymul([1, p0], np.polymul([1, b1, b0], [1, c1, c0]))
    return num, den


def model(theta, f):
    s = 2j * np.pi * np.asarray(f)
    num, den = polys(theta)
    return np.polyval(num, s) / np.polyval(den, s)


def fit(starts: int = 200, seed: int = 0):
    f = np.logspace(np.log10(F_LO), np.log10(F_HI), N_FREQ)
    target = np.log(np.abs(wf_exact(f)))
    i_peak = np.argmin(np.abs(f - 0.16))

    def resid(theta):
        return np.log(np.abs(model(theta, f))) - target

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(starts):
        theta0 = rng.uniform(np.log(0.05), np.log(8.0), 6)
        theta0[0] = 0.0
        theta0[0] = np.log(np.abs(wf_exact(f[i_peak])) / np.abs(model(theta0, f[i_peak])))
        sol = least_squares(resid, theta0, method="trf", xtol=1e-14, ftol=1e-14, max_nfev=3000)
        cost = float(np.sqrt(np.mean(sol.fun**2)))
        if best is None or cost < best[1]:
            best = (sol.x, cost, float(np.max(np.abs(sol.fun))))
    return best


def main():
    theta, rms, worst = fit()
    num, den = polys(theta)
    res, poles, direct = residue(num, den)
    assert direct.size == 0 or np.allclose(direct, 0.0)
    assert np.all(poles.real < 0)
    order = np.lexsort((poles.imag, poles.real))
    res, poles = res[order], poles[order]
    lines = [
        '"""Frozen fifth-order motion-sickness weighting filter (generated by scripts/fit_iso_filter.py)."""',
        "",
        "import numpy as np",
        "",
        f"NUMERATOR = np.array({np.array2string(num, precision=17, separator=', ', max_line_width=200)})",
        f"DENOMINATOR = np.array({np.array2string(den, precision=17, separator=', ', max_line_width=200)})",
        f"POLES = np.array({[complex(p) for p in poles]!r})",
        f"RESIDUES = np.array({[complex(r) for r in res]!r})",
        f"FIT_BAND_HZ = ({F_LO}, {F_HI})",
        f"FIT_RMS_LOG_ERROR = {rms!r}",
        f"FIT_MAX_LOG_ERROR = {worst!r}",
        "",
    ]
    OUT.write_text("\n".join(lines))
    print(f"wrote {OUT}; rms log error {rms:.4g}, max {worst:.4g}")


if __name__ == "__main__":
    main()
