"""Trade-coefficient models for binary wealth exchange.

A trade maps the pre-trade riches (v, v*) of an ordered pair of agents to
(l*v + r*v*, lt*v* + rt*v), where (l, r, lt, rt) is a draw from the model's
tuple distribution.  Every built-in family preserves wealth in the mean:
E[L + Rt] = 1 = E[Lt + R].

The module also evaluates the analytic functionals of (L, R, Lt, Rt) that the
rest of the package relies on: power sums, the quadratic constants (a, b, c, d),
order-p constants, the mean-growth exponents (beta, gamma), the Pareto index,
and the almost-sure conservation flags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidConfig, NonIntegrable

FAMILIES = (
    "deterministic",
    "winner_takes_all",
    "iid_uniform",
    "complement_uniform",
    "random_sharing",
    "saving_propensity",
    "empirical_table",
)

_ATOL = 1e-12


class TradeTuple(NamedTuple):
    """One realized tuple of nonnegative trade fractions."""

    l: float
    r: float
    lt: float
    rt: float


class MomentValue(NamedTuple):
    """A moment estimate with its standard error (0.0 when exact)."""

    value: float
    stderr: float


class ParetoIndex(NamedTuple):
    alpha: float
    degenerate: bool


@dataclass(frozen=True)
class ConditionFlags:
    """Truth values of the almost-sure trade-conservation conditions."""

    as_preservation: bool      # L + Rt = 1 = Lt + R a.s.
    as_preservation_2: bool    # L + R = 1 = Lt + Rt a.s.
    weak_as_preservation: bool  # L + R + Lt + Rt = 2 a.s.
    lr_not_01: bool            # some component lies outside {0, 1} with positive prob.
    mean_conservation: bool    # E[L + Rt] = 1 = E[Lt + R]


@dataclass(frozen=True)
class CoefficientModel:
    """An immutable, sampleable distribution of trade tuples.

    params is family specific:
      deterministic      -- l, r, lt, rt
      saving_propensity  -- lam in [0, 1)
      empirical_table    -- atoms (list of 4-tuples), probs
    The remaining families take no parameters.
    """

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidConfig(f"unknown coefficient family {self.family!r}")
        _impl(self).validate(self.params)

    @property
    def closed_form_moments(self) -> bool:
        return True  # every catalog family has deterministic moment access

    def sample(self, rng, n: int) -> np.ndarray:
        """Draw n i.i.d. tuples as an (n, 4) array."""
        return _impl(self).sample(self.params, rng, n)

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params)}

    @staticmethod
    def from_dict(d: dict) -> "CoefficientModel":
        return CoefficientModel(d["family"], dict(d.get("params", {})))


@dataclass(frozen=True)
class ModelDiagnostics:
    """Every closed-form scalar the theory attaches to a coefficient model."""

    n_particles: int
    p: float
    alpha: float
    alpha_degenerate: bool
    a: float
    b: float
    c: float
    d: float
    a_p: float
    b_p: float
    beta_np: float
    gamma_np: float
    lambda1: float
    lambda2: float
    flags: ConditionFlags

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "n_particles", "p", "alpha", "alpha_degenerate", "a", "b", "c",
            "d", "a_p", "b_p", "beta_np", "gamma_np", "lambda1", "lambda2")}
        d["flags"] = vars(self.flags).copy() if hasattr(self.flags, "__dict__") else {
            f: getattr(self.flags, f) for f in (
                "as_preservation", "as_preservation_2", "weak_as_preservation",
                "lr_not_01", "mean_conservation")}
        return d


# ---------------------------------------------------------------------------
# family implementations

def _gauss01(n):
    """Gauss-Legendre nodes/weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


class _Family:
    """Shared quadrature-based defaults; subclasses override with closed forms."""

    def validate(self, params):
        if params:
            raise InvalidConfig(f"family takes no parameters, got {params}")

    def sample(self, params, rng, n):
        raise NotImplementedError

    def nodes(self, params):
        """Return (weights, tuples) with tuples of shape (K, 4)."""
        raise NotImplementedError

    def expectation(self, params, fn):
        w, t = self.nodes(params)
        return float(np.dot(w, fn(t[:, 0], t[:, 1], t[:, 2], t[:, 3])))

    def power_sum(self, params, p):
        """E[L^p + R^p + Lt^p + Rt^p]."""
        w, t = self.nodes(params)
        return float(np.dot(w, np.power(t, p).sum(axis=1)))

    def order_cross_inner(self, params, p):
        """E[L^{p-1} R + L R^{p-1} + Lt^{p-1} Rt + Lt Rt^{p-1}]."""
        return self.expectation(params, lambda l, r, lt, rt: (
            np.power(l, p - 1) * r + l * np.power(r, p - 1)
            + np.power(lt, p - 1) * rt + lt * np.power(rt, p - 1)))

    def pair_products(self, params):
        return self.expectation(params, lambda l, r, lt, rt: l * r + lt * rt)

    def cross_products(self, params):
        return self.expectation(params, lambda l, r, lt, rt: l * rt + lt * r)

    def twin_products(self, params):
        return self.expectation(params, lambda l, r, lt, rt: l * lt + r * rt)

    def beta(self, params, n_particles, p):
        """E[(1 + (L+R+Lt+Rt-2)/N)^p]."""
        def fn(l, r, lt, rt):
            base = 1.0 + (l + r + lt + rt - 2.0) / n_particles
            return np.power(np.maximum(base, 0.0), p)
        return self.expectation(params, fn)

    def flags(self, params) -> ConditionFlags:
        raise NotImplementedError


class _FiniteFamily(_Family):
    """Families with finite support: all functionals are exact atom sums."""

    def atoms(self, params):
        raise NotImplementedError

    def nodes(self, params):
        return self.atoms(params)

    def sample(self, params, rng, n):
        probs, tuples = self.atoms(params)
        idx = np.searchsorted(np.cumsum(probs), rng.random(n), side="right")
        return tuples[np.minimum(idx, len(probs) - 1)]

    def flags(self, params) -> ConditionFlags:
        probs, t = self.atoms(params)
        l, r, lt, rt = t[:, 0], t[:, 1], t[:, 2], t[:, 3]
        in01 = np.all((np.abs(t) <= _ATOL) | (np.abs(t - 1.0) <= _ATOL), axis=1)
        return ConditionFlags(
            as_preservation=bool(np.all(np.abs(l + rt - 1) <= _ATOL)
                                 and np.all(np.abs(lt + r - 1) <= _ATOL)),
            as_preservation_2=bool(np.all(np.abs(l + r - 1) <= _ATOL)
                                   and np.all(np.abs(lt + rt - 1) <= _ATOL)),
            weak_as_preservation=bool(np.all(np.abs(l + r + lt + rt - 2) <= _ATOL)),
            lr_not_01=bool(np.any(~in01 & (probs > 0))),
            mean_conservation=bool(abs(np.dot(probs, l + rt) - 1) <= 1e-9
                                   and abs(np.dot(probs, lt + r) - 1) <= 1e-9),
        )


class _Deterministic(_FiniteFamily):
    def validate(self, params):
        tup = [params.get(k) for k in ("l", "r", "lt", "rt")]
        if any(v is None for v in tup):
            raise InvalidConfig("deterministic family needs l, r, lt, rt")
        if any((not np.isfinite(v)) or v < 0 for v in tup):
            raise InvalidConfig("trade fractions must be finite and nonnegative")

    def atoms(self, params):
        t = np.array([[params["l"], params["r"], params["lt"], params["rt"]]], float)
        return np.array([1.0]), t


class _WinnerTakesAll(_FiniteFamily):
    def atoms(self, params):
        return np.array([1.0]), np.array([[1.0, 1.0, 0.0, 0.0]])


class _EmpiricalTable(_FiniteFamily):
    def validate(self, params):
        atoms = np.asarray(params.get("atoms", []), float)
        probs = np.asarray(params.get("probs", []), float)
        if atoms.ndim != 2 or atoms.shape[1] != 4 or atoms.shape[0] == 0:
            raise InvalidConfig("empirical_table needs a nonempty (K, 4) atom list")
        if probs.shape != (atoms.shape[0],):
            raise InvalidConfig("probs must match the number of atoms")
        if np.any(atoms < 0) or not np.all(np.isfinite(atoms)):
            raise InvalidConfig("atoms must be finite and nonnegative")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise InvalidConfig("probs must be nonnegative and sum to 1")

    def atoms(self, params):
        return (np.asarray(params["probs"], float),
                np.asarray(params["atoms"], float))


class _IidUniform(_Family):
    """L, R, Lt, Rt i.i.d. uniform on [0, 1]."""

    _nodes_cache = None

    def sample(self, params, rng, n):
        return rng.random((n, 4))

    def nodes(self, params):
        if _IidUniform._nodes_cache is None:
            x, w = _gauss01(24)
            ll, rr, tl, tr = np.meshgrid(x, x, x, x, indexing="ij")
            t = np.column_stack([ll.ravel(), rr.ravel(), tl.ravel(), tr.ravel()])
            ww = (w[:, None, None, None] * w[None, :, None, None]
                  * w[None, None, :, None] * w[None, None, None, :]).ravel()
            _IidUniform._nodes_cache = (ww, t)
        return _IidUniform._nodes_cache

    def power_sum(self, params, p):
        return 4.0 / (p + 1.0)

    def order_cross_inner(self, params, p):
        return 2.0 / p  # 4 * E[L^{p-1}] E[R] by independence

    def pair_products(self, params):
        return 0.5

    def cross_products(self, params):
        return 0.5

    def twin_products(self, params):
        return 0.5

    def flags(self, params):
        return ConditionFlags(False, False, False, True, True)


class _ComplementUniform(_Family):
    """L, R i.i.d. uniform on [0, 1]; Lt = 1 - L, Rt = 1 - R."""

    _nodes_cache = None

    def sample(self, params, rng, n):
        u = rng.random((n, 2))
        return np.column_stack([u[:, 0], u[:, 1], 1.0 - u[:, 0], 1.0 - u[:, 1]])

    def nodes(self, params):
        if _ComplementUniform._nodes_cache is None:
            x, w = _gauss01(96)
            ll, rr = np.meshgrid(x, x, indexing="ij")
            l, r = ll.ravel(), rr.ravel()
            t = np.column_stack([l, r, 1.0 - l, 1.0 - r])
            _ComplementUniform._nodes_cache = (np.outer(w, w).ravel(), t)
        return _ComplementUniform._nodes_cache

    def power_sum(self, params, p):
        return 4.0 / (p + 1.0)

    def order_cross_inner(self, params, p):
        return 2.0 / p

    def pair_products(self, params):
        return 0.5

    def cross_products(self, params):
        return 0.5

    def twin_products(self, params):
        return 1.0 / 3.0

    def beta(self, params, n_particles, p):
        return 1.0  # sum of components is identically 2

    def flags(self, params):
        return ConditionFlags(False, False, True, True, True)


class _RandomSharing(_Family):
    """L = R = Theta, Lt = Rt = 1 - Theta with Theta uniform on [0, 1]."""

    _nodes_cache = None

    def sample(self, params, rng, n):
        th = rng.random(n)
        return np.column_stack([th, th, 1.0 - th, 1.0 - th])

    def nodes(self, params):
        if _RandomSharing._nodes_cache is None:
            x, w = _gauss01(200)
            t = np.column_stack([x, x, 1.0 - x, 1.0 - x])
            _RandomSharing._nodes_cache = (w, t)
        return _RandomSharing._nodes_cache

    def power_sum(self, params, p):
        return 4.0 / (p + 1.0)

    def order_cross_inner(self, params, p):
        return 4.0 / (p + 1.0)

    def pair_products(self, params):
        return 2.0 / 3.0

    def cross_products(self, params):
        return 1.0 / 3.0

    def twin_products(self, params):
        return 1.0 / 3.0

    def beta(self, params, n_particles, p):
        return 1.0

    def flags(self, params):
        return ConditionFlags(True, False, True, True, True)


class _SavingPropensity(_Family):
    """Agents keep a fixed fraction lam and split the rest uniformly.

    With eps uniform on [0, 1]:
      L = lam + eps (1 - lam),   R = eps (1 - lam),
      Lt = lam + (1 - eps)(1 - lam),  Rt = (1 - eps)(1 - lam),
    which is strictly conservative for every lam in [0, 1).
    """

    def validate(self, params):
        lam = params.get("lam")
        if lam is None or not (0.0 <= lam < 1.0):
            raise InvalidConfig("saving_propensity needs lam in [0, 1)")

    def _tuples(self, lam, eps):
        s = 1.0 - lam
        return np.column_stack(
            [lam + eps * s, eps * s, lam + (1.0 - eps) * s, (1.0 - eps) * s])

    def sample(self, params, rng, n):
        return self._tuples(params["lam"], rng.random(n))

    def nodes(self, params):
        x, w = _gauss01(200)
        return w, self._tuples(params["lam"], x)

    def power_sum(self, params, p):
        lam = params["lam"]
        el = (1.0 - lam ** (p + 1.0)) / ((p + 1.0) * (1.0 - lam))
        er = (1.0 - lam) ** p / (p + 1.0)
        return 2.0 * (el + er)

    def order_cross_inner(self, params, p):
        lam = params["lam"]
        s = 1.0 - lam
        # E[L^{p-1} R] via the substitution x = lam + eps s
        e_lr = ((1.0 - lam ** (p + 1.0)) / (p + 1.0)
                - lam * (1.0 - lam ** p) / p) / s
        e_rl = s ** (p - 1.0) * (lam / p + s / (p + 1.0))
        return 2.0 * (e_lr + e_rl)  # tilde terms match by eps <-> 1-eps symmetry

    def beta(self, params, n_particles, p):
        return 1.0

    def flags(self, params):
        return ConditionFlags(True, False, True, True, True)


_IMPLS = {
    "deterministic": _Deterministic(),
    "winner_takes_all": _WinnerTakesAll(),
    "iid_uniform": _IidUniform(),
    "complement_uniform": _ComplementUniform(),
    "random_sharing": _RandomSharing(),
    "saving_propensity": _SavingPropensity(),
    "empirical_table": _EmpiricalTable(),
}


def _impl(model: CoefficientModel) -> _Family:
    return _IMPLS[model.family]


# ---------------------------------------------------------------------------
# convenience constructors

def deterministic(l, r, lt, rt):
    return CoefficientModel("deterministic", {"l": l, "r": r, "lt": lt, "rt": rt})


def winner_takes_all():
    return CoefficientModel("winner_takes_all")


def iid_uniform():
    return CoefficientModel("iid_uniform")


def complement_uniform():
    return CoefficientModel("complement_uniform")


def random_sharing():
    return CoefficientModel("random_sharing")


def saving_propensity(lam):
    return CoefficientModel("saving_propensity", {"lam": lam})


def empirical_table(atoms, probs):
    return CoefficientModel("empirical_table",
                            {"atoms": [list(map(float, a)) for a in atoms],
                             "probs": list(map(float, probs))})


def random_empirical_table(rng, n_atoms=4):
    """A random discrete tuple law, rescaled to conserve wealth in the mean."""
    atoms = rng.random((n_atoms, 4)) * 2.0
    probs = rng.random(n_atoms)
    probs /= probs.sum()
    # scale (L, Rt) and (Lt, R) so that E[L + Rt] = 1 = E[Lt + R]
    s1 = float(np.dot(probs, atoms[:, 0] + atoms[:, 3]))
    s2 = float(np.dot(probs, atoms[:, 2] + atoms[:, 1]))
    atoms[:, 0] /= s1
    atoms[:, 3] /= s1
    atoms[:, 2] /= s2
    atoms[:, 1] /= s2
    return empirical_table(atoms, probs)


# ---------------------------------------------------------------------------
# operations

def sample_tuple(model: CoefficientModel, rng) -> TradeTuple:
    """Draw one tuple from the model, advancing rng deterministically."""
    row = model.sample(rng, 1)[0]
    return TradeTuple(*map(float, row))


_SIMPLE_PHI = {
    "pair_products": lambda f, p_, n_: f.pair_products(p_),
    "cross_products": lambda f, p_, n_: f.cross_products(p_),
    "twin_products": lambda f, p_, n_: f.twin_products(p_),
}


def mixed_moment(model: CoefficientModel, phi, rng=None,
                 batch=100_000, max_batches=100, rel_target=1e-3) -> MomentValue:
    """Evaluate a catalogued moment functional of (L, R, Lt, Rt).

    phi is one of:
      ("power_sum", p)        E[L^p + R^p + Lt^p + Rt^p]
      ("pair_products",)      E[LR + Lt Rt]
      ("cross_products",)     E[L Rt + Lt R]
      ("twin_products",)      E[L Lt + R Rt]
      ("order_cross", p)      E[L^{p-1}R + LR^{p-1} + Lt^{p-1}Rt + LtRt^{p-1}]
      ("beta", N, p)          E[(1 + (L+R+Lt+Rt-2)/N)^p]
      ("custom", fn)          adaptive Monte Carlo over fn(l, r, lt, rt)

    Catalog functionals are evaluated in closed form (stderr 0).  The custom
    path uses batch-mean standard errors and raises NonIntegrable when the
    estimate does not stabilize.
    """
    fam = _impl(model)
    kind = phi[0]
    if kind == "power_sum":
        return MomentValue(fam.power_sum(model.params, float(phi[1])), 0.0)
    if kind in _SIMPLE_PHI:
        return MomentValue(_SIMPLE_PHI[kind](fam, model.params, None), 0.0)
    if kind == "order_cross":
        return MomentValue(fam.order_cross_inner(model.params, float(phi[1])), 0.0)
    if kind == "beta":
        return MomentValue(fam.beta(model.params, int(phi[1]), float(phi[2])), 0.0)
    if kind == "custom":
        if rng is None:
            rng = np.random.default_rng(0)
        fn = phi[1]
        means = []
        for _ in range(max_batches):
            t = model.sample(rng, batch)
            vals = fn(t[:, 0], t[:, 1], t[:, 2], t[:, 3])
            if not np.all(np.isfinite(vals)):
                raise NonIntegrable("non-finite values in Monte Carlo batch")
            means.append(float(np.mean(vals)))
            if len(means) >= 5:
                m = float(np.mean(means))
                se = float(np.std(means, ddof=1) / math.sqrt(len(means)))
                if se <= rel_target * max(abs(m), 1e-12):
                    return MomentValue(m, se)
        m = float(np.mean(means))
        se = float(np.std(means, ddof=1) / math.sqrt(len(means)))
        if se > 10 * rel_target * max(abs(m), 1e-12):
            raise NonIntegrable(
                f"estimate {m} +- {se} did not stabilize after {max_batches} batches")
        return MomentValue(m, se)
    raise InvalidConfig(f"unknown moment functional {phi!r}")


def pareto_index(model: CoefficientModel, p_max: float = 64.0,
                 tol: float = 1e-6) -> ParetoIndex:
    """sup{p >= 1 : E[L^p + R^p + Lt^p + Rt^p] < 2}, by bisection.

    Mean conservation forces the power sum to equal 2 at p = 1; when it is
    still >= 2 just above 1 the supremum set is empty and we report alpha = 1
    with the degeneracy flag set.
    """
    if p_max < 1.0 or tol <= 0.0:
        raise InvalidConfig("need p_max >= 1 and tol > 0")
    fam = _impl(model)

    def f(p):
        return fam.power_sum(model.params, p)

    lo = 1.0 + tol
    if f(lo) >= 2.0 - 1e-12:
        return ParetoIndex(1.0, True)
    if f(p_max) < 2.0:
        return ParetoIndex(math.inf, False)
    hi = p_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 2.0:
            lo = mid
        else:
            hi = mid
    return ParetoIndex(0.5 * (lo + hi), False)


def check_conditions(model: CoefficientModel, n_samples: int = 0,
                     tol: float = 1e-9, rng=None) -> ConditionFlags:
    """Conservation flags; analytic for catalog families, sampled otherwise.

    Passing n_samples > 0 forces the empirical check (used for cross-checks).
    """
    fam = _impl(model)
    if n_samples <= 0:
        return fam.flags(model.params)
    if rng is None:
        rng = np.random.default_rng(0)
    t = model.sample(rng, int(n_samples))
    l, r, lt, rt = t[:, 0], t[:, 1], t[:, 2], t[:, 3]
    in01 = (np.abs(t) <= tol) | (np.abs(t - 1.0) <= tol)
    return ConditionFlags(
        as_preservation=bool(np.all(np.abs(l + rt - 1) <= tol)
                             and np.all(np.abs(lt + r - 1) <= tol)),
        as_preservation_2=bool(np.all(np.abs(l + r - 1) <= tol)
                               and np.all(np.abs(lt + rt - 1) <= tol)),
        weak_as_preservation=bool(np.all(np.abs(l + r + lt + rt - 2) <= tol)),
        lr_not_01=bool(np.any(~np.all(in01, axis=1))),
        mean_conservation=bool(abs(np.mean(l + rt) - 1) <= 1e-3
                               and abs(np.mean(lt + r) - 1) <= 1e-3),
    )


def second_moment_roots(a, b, c, d, n_particles):
    """Roots of z^2 + (a + d/(N-1)) z + (ad - bc)/(N-1); real parts when complex."""
    A = a + d / (n_particles - 1)
    B = (a * d - b * c) / (n_particles - 1)
    disc = A * A - 4.0 * B
    if disc >= 0.0:
        s = math.sqrt(disc)
        return 0.5 * (-A + s), 0.5 * (-A - s)
    return 0.5 * -A, 0.5 * -A  # oscillatory envelope; decay rate only


def diagnostics(model: CoefficientModel, n_particles: int, p: float) -> ModelDiagnostics:
    """Populate every theory constant for the given model, N and moment order."""
    if n_particles < 2:
        raise InvalidConfig("need at least 2 particles")
    if p <= 0:
        raise InvalidConfig("need p > 0")
    fam = _impl(model)
    prm = model.params
    a = 1.0 - 0.5 * fam.power_sum(prm, 2.0)
    b = fam.pair_products(prm)
    c = fam.cross_products(prm)
    d = 1.0 - fam.twin_products(prm)
    a_p = 1.0 - 0.5 * fam.power_sum(prm, p)
    b_p = 2.0 ** (p - 2.0) * fam.order_cross_inner(prm, p)
    beta = fam.beta(prm, n_particles, p)
    gamma = 0.5 * n_particles * (1.0 - beta)
    lam1, lam2 = second_moment_roots(a, b, c, d, n_particles)
    alpha = pareto_index(model)
    return ModelDiagnostics(
        n_particles=n_particles, p=p,
        alpha=alpha.alpha, alpha_degenerate=alpha.degenerate,
        a=a, b=b, c=c, d=d, a_p=a_p, b_p=b_p,
        beta_np=beta, gamma_np=gamma, lambda1=lam1, lambda2=lam2,
        flags=fam.flags(prm),
    )
