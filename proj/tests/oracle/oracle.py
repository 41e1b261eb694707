"""Independent reference values for the frozen test expectations.

Run from the repository root: python3 tests/oracle/oracle.py
Writes tests/fixtures/*.csv and prints the constants pasted into the tests.
"""
import itertools
import math
import os

import numpy as np
from scipy import optimize, special, stats

M64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix(x):
    x = (x + GOLDEN) & M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & M64
    return x ^ (x >> 31)


def rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & M64


class Xoshiro:
    def __init__(self, seed):
        self.s = []
        x = seed
        for _ in range(4):
            self.s.append(splitmix(x))
            x = (x + GOLDEN) & M64

    def next(self):
        s = self.s
        result = (rotl((s[1] * 5) & M64, 7) * 9) & M64
        t = (s[1] << 17) & M64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        return result


def rng_values():
    r = Xoshiro(42)
    print("xoshiro(42) first outputs:", [hex(r.next()) for _ in range(4)])
    r = Xoshiro(0)
    print("xoshiro(0) first output:", hex(r.next()))


def brute_assignment(a, b, p):
    n = len(a)
    best = math.inf
    arg = None
    for perm in itertools.permutations(range(n)):
        c = sum(np.linalg.norm(a[i] - b[perm[i]]) ** p for i in range(n))
        if c < best - 1e-12:
            best, arg = c, perm
    return best, arg


def fixture_5x5():
    mu = np.array([[0.5, 0.5], [2.0, 3.5], [4.0, 1.0], [3.5, 4.5], [1.0, 2.5]])
    nu = np.array([[1.5, 0.5], [4.5, 2.0], [0.5, 4.0], [3.0, 3.0], [2.5, 1.5]])
    os.makedirs("tests/fixtures", exist_ok=True)
    for name, pts in (("mu5", mu), ("nu5", nu)):
        with open(f"tests/fixtures/{name}.csv", "w") as f:
            f.write("# pml-cloud v1 kind=box dim=2 lower=0,0 upper=5,5\n")
            f.write("x0,x1\n")
            for x, y in pts:
                f.write(f"{x},{y}\n")
    for p in (1.0, 2.0, 3.0):
        cost, perm = brute_assignment(mu, nu, p)
        print(f"5x5 fixture p={p}: cost={cost!r} perm={perm}")


def cone_constants():
    for p in (2.0, 3.0, 4.0):
        print(f"c0(p={p}) = {1 + (2 / p) ** (1 / (p - 1))!r}")
    alpha = math.tan(0.5)
    for p in (1.25, 1.5):
        h = lambda c: p * (c - 1) * c ** (p - 2) / (1 + 2 * alpha ** (2 - p)) - 2
        root = optimize.brentq(h, 1.0 + 1e-12, 1e8, xtol=1e-14)
        print(f"c0(p={p}, aperture=0.5) = {root!r}")


def moments():
    for d, p in ((2, 2.0), (2, 1.5), (3, 3.0), (1, 1.0)):
        m = 2 ** (p / 2) * special.gamma((d + p) / 2) / special.gamma(d / 2)
        print(f"E|Z|^{p} in d={d}: {m!r}")


def cycle_counts():
    for n, k in ((5, 2), (5, 3), (6, 4), (8, 8)):
        print(f"cycle_count({n},{k}) = {math.comb(n, k) * math.factorial(k - 1)}")


def transport_lp():
    # Weighted transport 3 sources x 4 sinks, cost |x - y|^2 on the line.
    xs = np.array([0.0, 1.0, 3.0])
    ys = np.array([0.5, 1.5, 2.0, 4.0])
    a = np.array([0.2, 0.5, 0.3])
    b = np.array([0.1, 0.4, 0.25, 0.25])
    c = (xs[:, None] - ys[None, :]) ** 2
    n, m = c.shape
    aeq = []
    beq = []
    for i in range(n):
        row = np.zeros(n * m)
        row[i * m:(i + 1) * m] = 1
        aeq.append(row)
        beq.append(a[i])
    for j in range(m):
        row = np.zeros(n * m)
        row[j::m] = 1
        aeq.append(row)
        beq.append(b[j])
    res = optimize.linprog(c.ravel(), A_eq=np.array(aeq), b_eq=np.array(beq), method="highs")
    print(f"transport LP cost = {res.fun!r}")


def fit_reference():
    radii = np.array([16.0, 32.0, 64.0, 128.0])
    vals = 0.1 * np.log(radii) + 0.3 + np.array([0.001, -0.002, 0.0015, -0.0005])
    x = np.log(radii)
    res = stats.linregress(x, vals)
    t = stats.t.ppf(0.975, len(radii) - 2)
    print(f"log fit a={res.slope!r} b={res.intercept!r} ci=({res.slope - t * res.stderr!r}, "
          f"{res.slope + t * res.stderr!r})")


def quantiles():
    v = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]
    for q in (0.5, 0.9, 0.99):
        print(f"quantile type 7 q={q}: {np.quantile(v, q)!r}")


if __name__ == "__main__":
    rng_values()
    fixture_5x5()
    cone_constants()
    moments()
    cycle_counts()
    transport_lp()
    fit_reference()
    quantiles()


def barrier_reference():
    import mpmath
    mpmath.mp.dps = 40
    p = mpmath.mpf("1.5")
    f = (9 + 1) ** (p / 2) - (4 + 1) ** (p / 2)
    print(f"F(3, 1; p=1.5) = {mpmath.nstr(f, 20)}")


if __name__ == "__main__":
    barrier_reference()
