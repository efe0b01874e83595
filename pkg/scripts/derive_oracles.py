"""Independent derivations of the expected values frozen into the test suite.

Nothing here imports the package: every number comes from sympy or hand
arithmetic. Run it and paste the printed values into the tests when an
oracle changes.
"""

from fractions import Fraction as F

import sympy as sp


def two_state():
    # masses (1, 1), conductance 1/2: Q = [[-1/2, 1/2], [1/2, -1/2]]
    q = sp.Matrix([[-sp.Rational(1, 2), sp.Rational(1, 2)], [sp.Rational(1, 2), -sp.Rational(1, 2)]])
    u = (sp.eye(2) - q).solve(sp.Matrix([1, 0]))
    p = (q * 1).exp()
    return {"resolvent_alpha1_f10": tuple(u), "p1_00": sp.simplify(p[0, 0])}


def feller_integrals():
    y = sp.symbols("y", positive=True)
    lam_entrance = sp.integrate(y * y ** -3, (y, 1, sp.oo))
    sigma_exit = sp.integrate((1 - y) * (1 - y) ** sp.Rational(-3, 2), (y, 0, 1))
    w = sp.symbols("w", positive=True)  # w = 1 - y keeps sympy on the positive branch
    lam_exit = sp.integrate((1 - w) * w ** sp.Rational(-3, 2), (w, 0, 1))
    # Lebesgue on [0, 1], base 1/2: sigma(1) = int_(1/2,1) (1 - y) dy
    sigma_unit = sp.integrate(1 - y, (y, sp.Rational(1, 2), 1))
    return {"lambda_entrance": lam_entrance, "sigma_exit": sigma_exit, "lambda_exit": lam_exit,
            "sigma_lebesgue_unit_half": sigma_unit}


def cantor(depth, fat=False):
    kept, removed = [(F(0), F(1))], []
    for n in range(1, depth + 1):
        nxt = []
        for a, b in kept:
            w = (b - a) / 3 if not fat else F(1, 4 ** n)
            c, d = (a + b) / 2 - w / 2, (a + b) / 2 + w / 2
            removed.append((c, d))
            nxt += [(a, c), (d, b)]
        kept = nxt
    return sorted(removed), sum((b - a for a, b in kept), F(0))


def neumann_chain(n, k):
    # uniform grid with half end cells: cosine modes are exact eigenvectors
    h = sp.Rational(1, n - 1)
    return (1 - sp.cos(k * sp.pi * h)) / h ** 2


def witness_tv(h_left, h_right, gap):
    # leave {0-, 0+} to the left, entering from each side, by first-step analysis
    ml, mr, mg = F(1) / (2 * h_left), F(1) / (2 * h_right), F(1) / (2 * gap)
    pl0, pg0 = ml / (ml + mg), mg / (ml + mg)
    pg1 = mg / (mg + mr)
    a = pl0 / (1 - pg0 * pg1)
    return a, pg1 * a, a - pg1 * a


if __name__ == "__main__":
    print("two-state:", two_state())
    print("feller:", feller_integrals())
    print("cantor d=2 gaps:", cantor(2)[0], "gap length", 1 - cantor(2)[1])
    print("fat cantor d=2 measure:", cantor(2, True)[1])
    print("cantor_bm d=1 atoms:", [(c, (d - c) / 2) for c, d in cantor(1)[0]])
    for n in (25, 50, 100, 200):
        print(f"neumann chain n={n}:", [sp.N(neumann_chain(n, k), 17) for k in (1, 2)])
    print("snapping-out witness (h=1/10, 3/20, gap 1):", witness_tv(F(1, 10), F(3, 20), F(1)))
    # random walk c=(0,1,3), unit masses
    mu = (F(1, 2), F(1, 4))
    print("walk middle state: holding", 1 / (mu[0] + mu[1]), "probs", mu[0] / sum(mu), mu[1] / sum(mu))
    print("gap 2-state energies g: f=(-1,2) ->", F(9, 2), "/g ; clipped ->", F(1, 2), "/g")
