# Reference values for the infinite-depth-and-width dispersion limits,
# evaluated at 60 significant digits. Output is frozen into
# tests/theory_reference.rs.
from mpmath import mp, mpf, exp

mp.dps = 60


def chaotic(lam):
    lam = mpf(lam)
    return exp(5 * lam) / (2 * lam) * (1 - (1 - exp(-4 * lam)) / (4 * lam))


def eoc_main(lam, a0):
    lam, a0 = mpf(lam), mpf(a0)
    return (1 / (1 + a0) ** 2) * (
        exp(5 * lam) * (1 / (2 * lam) + (2 * a0**2 - 8 * a0) / (25 * lam**2))
        + (exp(lam) - exp(5 * lam)) * (1 - 4 * a0) / (8 * lam**2)
        + (2 * a0 / (5 * lam)) * ((4 - a0) / (5 * lam) - 1 - a0)
    )


def eoc_grouped(lam, a0):
    lam, a0 = mpf(lam), mpf(a0)
    return (1 / ((1 + a0) ** 2 * lam)) * (
        exp(5 * lam) * (mpf(1) / 2 + (16 * a0**2 + 36 * a0 - 25) / (200 * lam))
        + exp(lam) * (1 - 4 * a0) / (8 * lam)
        + 2 * a0 * (4 - a0) / (25 * lam)
        - 2 * a0 * (1 + a0) / 5
    )


for lam in ["0.25", "0.5", "1"]:
    print(f"chaotic lam={lam}: {mp.nstr(chaotic(lam), 25)}")
for lam in ["0.25", "0.5", "1"]:
    for a0 in ["0.1", "0.5", "1", "2", "0.3", "0.01"]:
        m, g = eoc_main(lam, a0), eoc_grouped(lam, a0)
        assert abs(m - g) < mpf("1e-50")
        print(f"eoc lam={lam} a0={a0}: {mp.nstr(m, 25)}")
