"""High-precision reference values for the kernel tests (mpmath).

Run with `python3 mlf_reference.py`; the printed numbers are frozen in
test_mlf.cpp and test_fractional.cpp.
"""
from itertools import product

import mpmath as mp

mp.mp.dps = 60


def multinomial_ml(eta, orders, args, shells=400):
    total = mp.mpf(0)
    n = len(orders)
    for k in range(shells):
        shell = mp.mpf(0)
        for parts in product(range(k + 1), repeat=n - 1):
            if sum(parts) > k:
                continue
            ls = list(parts) + [k - sum(parts)]
            coef = mp.factorial(k)
            term = mp.mpf(1)
            g = mp.mpf(eta)
            for l, xi, z in zip(ls, orders, args):
                coef /= mp.factorial(l)
                term *= mp.mpf(z) ** l
                g += mp.mpf(xi) * l
            shell += coef * term / mp.gamma(g)
        total += shell
        if k > 20 and abs(shell) < mp.mpf(10) ** (-40) * abs(total):
            break
    return total


def kernel(eta, terms, t):
    t = mp.mpf(t)
    args = [-mp.mpf(m) * t ** xi for m, xi in terms]
    return t ** (eta - 1) * multinomial_ml(eta, [xi for _, xi in terms], args)


def kernel_laplace(eta, terms, t):
    fs = lambda s: s ** (-eta) / (1 + sum(m * s ** (-xi) for m, xi in terms))
    return mp.invertlaplace(fs, t, method="talbot")


print("ml_series(eta=1, xi=(0.8,0.3), z=(-0.5,-0.25)) =",
      mp.nstr(multinomial_ml(1, [0.8, 0.3], [-0.5, -0.25]), 20))
print("E_{0.5,1}(-1) =", mp.nstr(mp.exp(1) * mp.erfc(1), 20))
print("kernel(eta=0.7, (2,0.7),(1,0.4), t=3) series =",
      mp.nstr(kernel(mp.mpf("0.7"), [(2, mp.mpf("0.7")), (1, mp.mpf("0.4"))], 3), 20))
print("kernel(eta=0.7, (2,0.7),(1,0.4), t=3) laplace =",
      mp.nstr(kernel_laplace(mp.mpf("0.7"), [(2, mp.mpf("0.7")), (1, mp.mpf("0.4"))], 3), 20))
m = 17 * mp.pi ** 4
print("kernel(eta=1, (17pi^4,0.8), t=1) laplace =",
      mp.nstr(kernel_laplace(1, [(m, mp.mpf("0.8"))], 1), 20))
asym = sum((-1) ** (k + 1) * m ** (-k) * mp.rgamma(1 - mp.mpf("0.8") * k) for k in range(1, 8))
print("   asymptotic =", mp.nstr(asym, 20))
terms = [(1, mp.mpf("0.8")), (mp.mpf("0.5"), mp.mpf("0.3"))]
print("antiderivative(eta=0.8, (1,0.8),(0.5,0.3), t=2) =",
      mp.nstr(mp.quad(lambda s: kernel(mp.mpf("0.8"), terms, s), [0, mp.mpf("0.1"), 2]), 20))
print("   via eta+1 =", mp.nstr(kernel(mp.mpf("1.8"), terms, 2), 20))
mp.mp.dps = 30
print("E_{0.9 mode}: kernel(eta=1, (0.5,0.5),(17pi^4,0.9), t=0.5) =",
      mp.nstr(kernel_laplace(1, [(mp.mpf("0.5"), mp.mpf("0.5")), (m, mp.mpf("0.9"))], mp.mpf("0.5")), 20))
print("kernel(eta=1.5, (0.5,0.5),(17pi^4,0.9), t=0.5) =",
      mp.nstr(kernel_laplace(mp.mpf("1.5"), [(mp.mpf("0.5"), mp.mpf("0.5")), (m, mp.mpf("0.9"))], mp.mpf("0.5")), 20))
print("E_{0.8,1}(-pi^4 0.5^0.8) =",
      mp.nstr(kernel_laplace(1, [(mp.pi ** 4, mp.mpf("0.8"))], mp.mpf("0.5")), 20))
