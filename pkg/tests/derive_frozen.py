"""Print the frozen reference values used by the tests.

Run ``python3 tests/derive_frozen.py`` to regenerate; every number comes from
``oracles.py`` (mpmath, 50 digits) and never from the package itself.
"""

import mpmath as mp

import oracles as O

SPECS = {
    "H1": (0, [4]),
    "RH1": (1, [4]),
    "H2": (0, [4, 4]),
    "B12": (0, [1, 2]),
}

LOG_POINTS = {
    "H1": [[0.3, -0.2, 0.05], [1.0, 0.5, -0.4], [-0.7, 0.1, 0.02]],
    "RH1": [[0.5, 0.3, -0.2, 0.05], [-1.0, 1.0, 0.5, -0.4]],
    "H2": [[0.3, -0.2, 0.1, 0.4, 0.05], [1.0, 0.5, -0.3, 0.2, -0.6]],
    "B12": [[0.3, -0.2, 0.1, 0.4, 0.05], [0.2, 0.1, -0.3, 0.6, 0.9]],
}


def log_table():
    print("LOG_TABLE = {")
    for name, pts in LOG_POINTS.items():
        m, alphas = SPECS[name]
        print(f"    {name!r}: [")
        for x in pts:
            p, d = O.log_identity(m, alphas, x)
            print(f"        ({x}, {O.to_float(p)}, {float(d)!r}),")
        print("    ],")
    print("}")


def probe_table():
    # y = e, x = exp(p_x, 2 pi / alpha_d) with p_x = ((1, 0), (0, 0)) on alphas [1, 2];
    # the perturbation moves along the first coordinate of the top block
    m, alphas = SPECS["B12"]
    p = [1, 0, 0, 0, mp.pi]
    x = O.exp_identity(m, alphas, p)
    base = mp.mpf(1)  # x is reached by a minimizer of length |p_x| = 1
    rows = []
    for v in ("1e-1", "1e-2", "1e-3", "1e-4"):
        v = mp.mpf(v)
        plus = O.group_op(m, alphas, x, [0, 0, v, 0, 0])
        minus = O.group_op(m, alphas, x, [0, 0, -v, 0, 0])
        dp = O.log_identity(m, alphas, plus)[1]
        dm = O.log_identity(m, alphas, minus)[1]
        rows.append((float(v), float((dp**2 + dm**2 - 2 * base**2) / v**2)))
    print(f"PROBE_B12 = {rows}")


def tau_table():
    rows = []
    for name, s, p in [
        ("H1", 0.5, [1.0, 0.0, 0.7]),
        ("H1", 0.3, [0.2, -1.1, -1.2]),
        ("RH1", 0.25, [2.0, 0.3, 0.4, 1.0]),
        ("H2", 0.6, [1.0, 0.0, 0.0, 0.5, 1.3]),
        ("B12", 0.4, [0.5, 0.5, 1.0, -0.2, 2.5]),
        ("B12", 0.9, [0.0, 0.0, 1.0, 0.0, -3.0]),
    ]:
        m, alphas = SPECS[name]
        rows.append((name, s, p, float(O.tau_ratio(m, alphas, s, p))))
    print(f"TAU_TABLE = {rows}")


def heisenberg_table():
    rows = [(n, s, th, float(O.heisenberg_tau(n, s, th))) for n, s, th in [(1, 0.5, 1.0), (1, 0.1, 6.0), (2, 0.7, 3.0)]]
    print(f"HEISENBERG_TABLE = {rows}")


def jac_table():
    rows = []
    for name, p in [("H1", [1.0, 0.0, 0.3]), ("H2", [0.5, 0.2, -0.3, 1.0, 0.9]), ("B12", [0.1, 0.2, 0.3, 0.4, 1.5])]:
        m, alphas = SPECS[name]
        rows.append((name, p, float(O.jac_exp(m, alphas, p))))
    print(f"JAC_TABLE = {rows}")


def intermediate_example():
    # H1: midpoint from e toward ((1, 0), 0.1)
    m, alphas = SPECS["H1"]
    p, d = O.log_identity(m, alphas, [1, 0, mp.mpf("0.1")])
    mid = O.exp_identity(m, alphas, p, mp.mpf("0.5"))
    print(f"MIDPOINT_H1 = ({O.to_float(mid)}, {float(d)!r})")


if __name__ == "__main__":
    log_table()
    probe_table()
    tau_table()
    heisenberg_table()
    jac_table()
    intermediate_example()
