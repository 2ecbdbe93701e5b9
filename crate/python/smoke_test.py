"""Smoke test for the plate_modes extension module.

Uses an installed module if there is one (``maturin develop`` inside
``crates/python``); otherwise loads the cdylib from ``cargo build --release
-p plate-modes-py``.
"""

import importlib.util
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import plate_modes

        return plate_modes
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libplate_modes.so"
        if lib.exists():
            spec = importlib.util.spec_from_file_location("plate_modes", lib)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
            return module
    sys.exit("plate_modes not found: run `cargo build --release -p plate-modes-py` first")


def main():
    pm = load()

    m = pm.find_minimum()
    assert abs(m.kappa - 0.632138) < 1e-5, m
    assert abs(m.lambda_cap - 1.887837) < 1e-5, m
    assert abs(m.q - 0.849748) < 1e-4, m
    assert abs(pm.rayleigh_quotient_testcase() - 2.0) < 1e-10

    lam, branch = pm.lowest_branch(m.kappa)
    assert branch == "hat1" and abs(lam - m.lambda_cap) < 1e-12
    assert abs(pm.secular_function(lam, m.kappa)) < 1e-12
    assert pm.check_eigenvalue(1.0, 2) == 17.0

    disk = pm.RadialProfile("disk:a=1")
    assert disk.a == 1.0 and abs(disk.moment_f_t(10.0) - 0.125) < 1e-15
    consts = pm.ModelConstants(disk, m)
    assert consts.p > 0 and all(x >= 0 for x in consts.p_m)
    assert abs(consts.kernel(0.3, 0.1) - consts.kernel(0.9, 0.7)) < 1e-14

    for n in (0, 5, 20):
        s = consts.mu_series(n)
        q = consts.mu_quadrature(n)
        assert s.sign == 1
        assert abs(math.expm1(s.ln_abs - q.ln_abs)) < 1e-8, (n, s, q)
    tiny = consts.mu_series(150)
    assert float(tiny) == 0.0 and tiny.ln_abs < -700

    mu = [float(consts.mu_series(n)) for n in range(31)]
    ordered = pm.ordered_spectrum(mu)
    assert len(ordered) == 61 and math.isclose(ordered[0], max(mu), rel_tol=1e-12)
    assert all(a >= b for a, b in zip(ordered, ordered[1:]))
    small = pm.ordered_spectrum([3.0, 5.0, 1.0])
    assert all(math.isclose(x, y, rel_tol=1e-12) for x, y in zip(small, [5.0, 5.0, 3.0, 1.0, 1.0]))
    assert len(small) == 5

    k1, gap1 = pm.predict_eigenvalue(mu, m, 3, 0.1)
    k2, gap2 = pm.predict_eigenvalue(mu, m, 3, 0.01)
    assert k1 < m.lambda_cap and abs(gap1 - gap2 - 2 * math.log(10)) < 1e-12
    assert pm.predict_eigenvalue(mu, m, 1, 0.0)[0] == m.lambda_cap

    env = pm.AsymptoticEnvelope(disk, m)
    lt = env.log_w("plus", 50.0)
    assert abs(env.inverse_w("plus", lt) - 50.0) < 1e-9
    assert abs(env.log_w("minus", 30.0) - env.log_w("plus", 30.0) + 4 * math.log(30.0)) < 1e-12

    for bad in (lambda: pm.RadialProfile("square:a=1"), lambda: env.log_w("sideways", 50.0)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")
    try:
        pm.predict_eigenvalue([1.0], m, 5, 0.1)
    except IndexError:
        pass
    else:
        raise AssertionError("expected IndexError")

    print(f"ok: kappa={m.kappa:.9f} Lambda={m.lambda_cap:.9f} q={m.q:.9f} mu_20={consts.mu_series(20)}")


if __name__ == "__main__":
    main()
