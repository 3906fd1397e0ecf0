"""Maximum-likelihood fitting for the supported families.

Poisson and Bernoulli use Newton/IRLS on the canonical link.  The negative
binomial alternates IRLS for the coefficients with a one-dimensional Newton
search for the size parameter and finishes with joint Newton steps.  The
ordinal model runs full Newton on ``(beta, alpha_1, log gaps)`` so the
cutpoints stay ordered.  The zero-inflated Poisson starts with EM and is
polished by Newton steps on the observed-data likelihood.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import expit, gammaln, polygamma, psi, xlogy

from . import families as fam
from .data import Dataset, ModelSpec
from .errors import ConvergenceError, InsufficientDataError, ParameterDomainError, SeparationError

log = logging.getLogger(__name__)

THETA_MIN = 1e-3
FLAG_POISSON_LIKE = "poisson-like-dispersion"
FLAG_ZERO_BOUNDARY = "zero-probability-boundary"


@dataclass(frozen=True, eq=False)
class FitOptions:
    tol: float = 1e-8
    max_iter: int = 200
    theta_cap: float = 1e6


@dataclass(frozen=True, eq=False)
class FittedModel:
    """Result of :func:`fit_mle`.

    ``coef`` is the mean-model coefficient vector.  Auxiliary parameters are
    ``size`` (negative binomial), ``cutpoints`` (ordinal) and ``zero_coef``
    (zero-inflated Poisson).  ``cov`` is the inverse observed information for
    the packed parameter vector described by ``param_names``.
    """

    spec: ModelSpec
    coef: np.ndarray
    names: list[str]
    loglik: float
    n_iter: int
    converged: bool
    grad_norm: float
    size: float | None = None
    cutpoints: np.ndarray | None = None
    zero_coef: np.ndarray | None = None
    zero_names: list[str] | None = None
    cov: np.ndarray | None = None
    param_names: list[str] = field(default_factory=list)
    flags: tuple[str, ...] = ()
    history: tuple[float, ...] = ()

    @property
    def family(self) -> str:
        return self.spec.family

    @property
    def std_errors(self) -> np.ndarray:
        """Standard errors of the packed parameter vector."""
        if self.cov is None:
            return np.full(len(self.param_names), np.nan)
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))

    @property
    def coef_std_errors(self) -> np.ndarray:
        """Standard errors of ``coef`` (mean-model coefficients)."""
        se = self.std_errors
        start = len(self.zero_coef) if self.zero_coef is not None else 0
        return se[start : start + len(self.coef)]

    def linear_predictor(self, data) -> np.ndarray:
        """Mean-model linear predictor ``x'beta`` for each row."""
        X = self._mean_matrix(data)
        return X @ self.coef

    def _mean_matrix(self, data):
        if isinstance(data, Dataset):
            return self.spec.mean_design(data)[0]
        if isinstance(data, tuple):
            data = data[0]
        X = np.atleast_2d(np.asarray(data, dtype=float))
        if X.shape[1] != len(self.coef):
            raise ParameterDomainError(
                f"covariate row has {X.shape[1]} entries, model expects {len(self.coef)}"
            )
        return X

    def _zero_matrix(self, data):
        if isinstance(data, Dataset):
            return self.spec.zero_design(data)[0]
        if not isinstance(data, tuple) or len(data) != 2:
            raise ParameterDomainError("zip models need (mean rows, zero-model rows)")
        Z = np.atleast_2d(np.asarray(data[1], dtype=float))
        if Z.shape[1] != len(self.zero_coef):
            raise ParameterDomainError(
                f"zero-model row has {Z.shape[1]} entries, model expects {len(self.zero_coef)}"
            )
        return Z

    def conditional_params(self, data) -> fam.FamilyParams:
        """Per-row distribution parameters.

        ``data`` is a :class:`Dataset`, a design row/matrix matching ``coef``
        (intercept column included), or for zip a ``(mean rows, zero rows)``
        pair.
        """
        eta = self.linear_predictor(data)
        if self.family == "poisson":
            return fam.Poisson(np.exp(eta))
        if self.family == "negbin":
            return fam.NegBinomial(np.exp(eta), self.size)
        if self.family == "bernoulli":
            return fam.Bernoulli(expit(eta))
        if self.family == "ordinal":
            return fam.OrdinalLogit(eta, self.cutpoints)
        zeta = self._zero_matrix(data) @ self.zero_coef
        return fam.ZeroInflatedPoisson(expit(zeta), np.exp(eta))

    def fitted_means(self, data) -> np.ndarray:
        return fam.mean(self.conditional_params(data))


def fixed_model(spec: ModelSpec, coef, names=None, **aux) -> FittedModel:
    """A :class:`FittedModel` with user-supplied parameters and no fitting."""
    coef = np.asarray(coef, dtype=float)
    return FittedModel(
        spec=spec,
        coef=coef,
        names=list(names) if names is not None else [f"b{i}" for i in range(coef.size)],
        loglik=float("nan"),
        n_iter=0,
        converged=True,
        grad_norm=0.0,
        size=aux.get("size"),
        cutpoints=None if aux.get("cutpoints") is None else np.asarray(aux["cutpoints"], float),
        zero_coef=None if aux.get("zero_coef") is None else np.asarray(aux["zero_coef"], float),
        flags=("fixed",),
    )


# ----------------------------------------------------------------------
# Generic damped Newton ascent
# ----------------------------------------------------------------------


def _solve_ascent(H, g):
    """Newton direction ``-H^{-1} g``; regularised if ``H`` is not negative definite."""
    A = -H
    try:
        L = np.linalg.cholesky(A)
        return np.linalg.solve(L.T, np.linalg.solve(L, g))
    except np.linalg.LinAlgError:
        pass
    w, V = np.linalg.eigh((A + A.T) / 2)
    w = np.maximum(np.abs(w), 1e-8 * max(1.0, np.max(np.abs(w))))
    return V @ ((V.T @ g) / w)


def _newton(fun, x0, tol, max_iter, grad_norm=None, check=None, history=None):
    """Maximise ``fun`` (returning loglik, grad, hess) by damped Newton.

    Returns ``(x, loglik, grad_norm, iterations, converged)``.
    """
    x = np.asarray(x0, dtype=float).copy()
    ll, g, H = fun(x)
    norm = grad_norm or (lambda x, g: float(np.linalg.norm(g)))
    gn = norm(x, g)
    it = 0
    while gn >= tol and it < max_iter:
        it += 1
        step = _solve_ascent(H, g)
        t = 1.0
        for _ in range(60):
            xn = x + t * step
            lln, gnew, Hn = fun(xn)
            if np.isfinite(lln) and lln >= ll - 1e-12 * (1.0 + abs(ll)):
                break
            t *= 0.5
        else:
            break
        improved = lln - ll
        x, ll, g, H = xn, lln, gnew, Hn
        gn = norm(x, g)
        if history is not None:
            history.append(ll)
        if check is not None:
            check(x, improved)
        if t * np.max(np.abs(step)) < 1e-15 * (1.0 + np.max(np.abs(x))) and gn >= tol:
            # no representable progress left
            break
    if gn < tol:
        # polish: quadratic convergence takes the iterate to machine precision
        for _ in range(2):
            xn = x + _solve_ascent(H, g)
            lln, gnew, Hn = fun(xn)
            gnn = norm(xn, gnew)
            if not (np.isfinite(lln) and gnn <= gn and lln >= ll - 1e-12 * (1.0 + abs(ll))):
                break
            x, ll, g, H, gn = xn, lln, gnew, Hn, gnn
    return x, ll, gn, it, gn < tol


def _cov(H):
    try:
        return np.linalg.inv(-H)
    except np.linalg.LinAlgError:
        return None


def _init_log_linear(X, y):
    beta, *_ = np.linalg.lstsq(X, np.log(y + 0.5), rcond=None)
    return beta


def _fail(msg, x, gn):
    raise ConvergenceError(msg, last_iterate=x, grad_norm=gn)


# ----------------------------------------------------------------------
# Poisson and Bernoulli
# ----------------------------------------------------------------------


def _poisson_fun(X, y, offset_w=None):
    w = np.ones_like(y, dtype=float) if offset_w is None else offset_w

    def fun(beta):
        eta = X @ beta
        with np.errstate(over="ignore"):
            mu = np.exp(eta)
        ll = float(np.sum(w * (y * eta - mu - gammaln(y + 1.0))))
        g = X.T @ (w * (y - mu))
        H = -(X * (w * mu)[:, None]).T @ X
        return ll, g, H

    return fun


def _bernoulli_fun(X, y, weights=None):
    w = np.ones(len(y)) if weights is None else weights

    def fun(beta):
        eta = X @ beta
        ll = float(np.sum(w * (y * eta - np.logaddexp(0.0, eta))))
        p = expit(eta)
        g = X.T @ (w * (y - p))
        H = -(X * (w * p * expit(-eta))[:, None]).T @ X
        return ll, g, H

    return fun


def _fit_poisson(data, spec, opts):
    X, names = spec.mean_design(data)
    y = data.y.astype(float)
    hist = []
    beta, ll, gn, it, ok = _newton(
        _poisson_fun(X, y), _init_log_linear(X, y), opts.tol, opts.max_iter, history=hist
    )
    if not ok:
        _fail(f"Poisson fit did not converge (gradient norm {gn:.3g})", beta, gn)
    H = _poisson_fun(X, y)(beta)[2]
    return FittedModel(spec, beta, names, ll, it, True, gn, cov=_cov(H),
                       param_names=list(names), history=tuple(hist))


def _fit_bernoulli(data, spec, opts):
    X, names = spec.mean_design(data)
    y = data.y.astype(float)
    if np.any(y > 1):
        raise ParameterDomainError("Bernoulli outcomes must be 0 or 1")
    fun = _bernoulli_fun(X, y)

    def check(beta, improved):
        if improved > 0 and (
            np.linalg.norm(beta) > 1e3 or np.max(np.abs(X @ beta)) > 35.0
        ):
            raise SeparationError(
                "complete or quasi-complete separation: coefficients diverge "
                f"(|beta| = {np.linalg.norm(beta):.3g})"
            )

    hist = []
    beta, ll, gn, it, ok = _newton(fun, np.zeros(X.shape[1]), opts.tol, opts.max_iter,
                                   check=check, history=hist)
    if not ok:
        _fail(f"logistic fit did not converge (gradient norm {gn:.3g})", beta, gn)
    H = fun(beta)[2]
    # Under separation the gradient vanishes only asymptotically while Newton
    # keeps pushing the linear predictor by O(1) per step.
    if np.max(np.abs(X @ _solve_ascent(H, fun(beta)[1]))) > 0.5:
        raise SeparationError(
            "complete or quasi-complete separation: the likelihood keeps "
            "increasing as the coefficients diverge"
        )
    return FittedModel(spec, beta, names, ll, it, True, gn, cov=_cov(H),
                       param_names=list(names), history=tuple(hist))


# ----------------------------------------------------------------------
# Negative binomial
# ----------------------------------------------------------------------


def _nb_joint_fun(X, y):
    """Log-likelihood in ``(beta, log theta)``."""
    lgy = gammaln(y + 1.0)

    def fun(par):
        beta, lt = par[:-1], par[-1]
        theta = np.exp(lt)
        eta = X @ beta
        mu = np.exp(eta)
        tm = theta + mu
        ll = float(np.sum(gammaln(y + theta) - gammaln(theta) - lgy
                          + theta * lt + y * eta - (y + theta) * np.log(tm)))
        d_eta = theta * (y - mu) / tm
        d_th = psi(y + theta) - psi(theta) + lt + 1.0 - np.log(tm) - (y + theta) / tm
        h_ee = -theta * mu * (theta + y) / tm**2
        h_et = mu * (y - mu) / tm**2
        h_tt = (polygamma(1, y + theta) - polygamma(1, theta) + 1.0 / theta
                - 2.0 / tm + (y + theta) / tm**2)
        p = X.shape[1]
        g = np.empty(p + 1)
        g[:p] = X.T @ d_eta
        g[p] = theta * np.sum(d_th)
        H = np.empty((p + 1, p + 1))
        H[:p, :p] = (X * h_ee[:, None]).T @ X
        H[:p, p] = H[p, :p] = theta * (X.T @ h_et)
        H[p, p] = theta**2 * np.sum(h_tt) + g[p]
        return ll, g, H

    return fun


def _nb_beta_fun(X, y, theta):
    def fun(beta):
        eta = X @ beta
        mu = np.exp(eta)
        tm = theta + mu
        ll = float(np.sum(y * eta - (y + theta) * np.log(tm)))
        g = X.T @ (theta * (y - mu) / tm)
        # expected information (IRLS weights)
        H = -(X * (theta * mu / tm)[:, None]).T @ X
        return ll, g, H

    return fun


def _theta_newton(y, mu, theta, cap, iters=50):
    """One-dimensional Newton on log theta with the coefficients held fixed."""
    lt = np.log(theta)
    lo, hi = np.log(THETA_MIN), np.log(cap)
    for _ in range(iters):
        th = np.exp(lt)
        tm = th + mu
        s = np.sum(psi(y + th) - psi(th) + lt + 1.0 - np.log(tm) - (y + th) / tm)
        h = np.sum(polygamma(1, y + th) - polygamma(1, th) + 1.0 / th - 2.0 / tm + (y + th) / tm**2)
        g = th * s
        hh = th**2 * h + g
        if hh < 0:
            step = -g / hh
        else:
            step = np.sign(g) * 1.0
        step = float(np.clip(step, -2.0, 2.0))
        new = float(np.clip(lt + step, lo, hi))
        if abs(new - lt) < 1e-12:
            lt = new
            break
        lt = new
    return float(np.exp(lt))


def _fit_negbin(data, spec, opts):
    X, names = spec.mean_design(data)
    y = data.y.astype(float)
    beta = _init_log_linear(X, y)
    beta = _newton(_poisson_fun(X, y), beta, 1e-6, opts.max_iter)[0]
    mu = np.exp(X @ beta)
    excess = np.mean((y - mu) ** 2 - mu)
    theta = float(np.clip(np.mean(mu**2) / excess, 0.1, opts.theta_cap)) if excess > 0 else 10.0
    hist = []
    flags = ()
    it = 0
    for it in range(1, opts.max_iter + 1):
        beta = _newton(_nb_beta_fun(X, y, theta), beta, opts.tol, 50)[0]
        mu = np.exp(X @ beta)
        new_theta = _theta_newton(y, mu, theta, opts.theta_cap)
        ll = _nb_joint_fun(X, y)(np.append(beta, np.log(new_theta)))[0]
        hist.append(ll)
        if abs(np.log(new_theta) - np.log(theta)) < 1e-6:
            theta = new_theta
            break
        theta = new_theta
    joint = _nb_joint_fun(X, y)
    p = X.shape[1]
    if theta >= opts.theta_cap * (1 - 1e-9):
        flags = (FLAG_POISSON_LIKE,)
        warnings.warn(
            f"negative binomial size hit the cap {opts.theta_cap:g}; data look Poisson-like",
            RuntimeWarning,
            stacklevel=3,
        )
        beta, ll, gn, it2, ok = _newton(_nb_beta_fun(X, y, theta), beta, opts.tol, opts.max_iter)
        ll = joint(np.append(beta, np.log(theta)))[0]
        par = np.append(beta, np.log(theta))
    else:
        par, ll, gn, it2, ok = _newton(joint, np.append(beta, np.log(theta)), opts.tol,
                                       opts.max_iter, history=hist)
        if not ok or np.exp(par[-1]) > opts.theta_cap:
            _fail(f"negative binomial fit did not converge (gradient norm {gn:.3g})", par, gn)
        beta, theta = par[:p], float(np.exp(par[-1]))
    if not ok:
        _fail(f"negative binomial fit did not converge (gradient norm {gn:.3g})", par, gn)
    H = joint(par)[2]
    cov = _cov(H[:p, :p]) if flags else _cov(H)
    pnames = list(names) + ([] if flags else ["log(size)"])
    return FittedModel(spec, beta, names, ll, it + it2, True, gn, size=theta, cov=cov,
                       param_names=pnames, flags=flags, history=tuple(hist))


# ----------------------------------------------------------------------
# Ordinal (cumulative logit, proportional odds)
# ----------------------------------------------------------------------


def _ordinal_natural(X, y, K):
    """Log-likelihood, gradient and Hessian in ``(beta, alpha)``."""
    n, p = X.shape
    rows = np.arange(n)
    Du = np.zeros((n, p + K))
    Dl = np.zeros((n, p + K))
    Du[:, :p] = -X
    Dl[:, :p] = -X
    up = y < K
    lo = y > 0
    Du[rows[up], p + y[up]] = 1.0
    Dl[rows[lo], p + y[lo] - 1] = 1.0

    def fun(par):
        beta, alpha = par[:p], par[p:]
        eta = X @ beta
        ext = np.concatenate([[-np.inf], alpha, [np.inf]])
        with np.errstate(invalid="ignore"):
            u = ext[y + 1] - eta
            l = ext[y] - eta
            Fu, Fl = expit(u), expit(l)
            P = np.where(u + l < 0, Fu - Fl, expit(-l) - expit(-u))
        if np.any(P <= 0):
            return -np.inf, None, None
        fu = Fu * expit(-u)
        fl = Fl * expit(-l)
        dfu = fu * (1.0 - 2.0 * Fu)
        dfl = fl * (1.0 - 2.0 * Fl)
        lu = fu / P
        ll_ = -fl / P
        luu = dfu / P - lu**2
        lll = -dfl / P - ll_**2
        lul = -lu * ll_
        g = Du.T @ lu + Dl.T @ ll_
        cross = (Du * lul[:, None]).T @ Dl
        H = (Du * luu[:, None]).T @ Du + (Dl * lll[:, None]).T @ Dl + cross + cross.T
        return float(np.sum(np.log(P))), g, H

    return fun


def _to_alpha(c):
    return c[0] + np.concatenate([[0.0], np.cumsum(np.exp(c[1:]))])


def _from_alpha(alpha):
    return np.concatenate([[alpha[0]], np.log(np.diff(alpha))])


def _fit_ordinal(data, spec, opts):
    X, names = spec.mean_design(data)
    y = data.y
    K = int(y.max())
    if K < 1:
        raise InsufficientDataError("ordinal fit needs at least two categories")
    counts = np.bincount(y, minlength=K + 1)
    if np.any(counts == 0):
        raise InsufficientDataError(
            f"every category 0..{K} must be observed; missing {np.flatnonzero(counts == 0).tolist()}"
        )
    p = X.shape[1]
    nat = _ordinal_natural(X, y, K)

    def fun(par):
        beta, c = par[:p], par[p:]
        alpha = _to_alpha(c)
        ll, gn, Hn = nat(np.concatenate([beta, alpha]))
        if gn is None:
            return ll, None, None
        gaps = np.exp(c[1:])
        J = np.zeros((K, K))
        J[:, 0] = 1.0
        for m in range(1, K):
            J[m:, m] = gaps[m - 1]
        T = np.eye(p + K)
        T[p:, p:] = J
        g = T.T @ gn
        H = T.T @ Hn @ T
        ga = gn[p:]
        for m in range(1, K):
            H[p + m, p + m] += gaps[m - 1] * np.sum(ga[m:])
        return ll, g, H

    def natural_norm(par, g):
        return float(np.linalg.norm(nat(np.concatenate([par[:p], _to_alpha(par[p:])]))[1]))

    cum = np.cumsum(counts)[:-1] / y.size
    alpha0 = np.log(cum / (1.0 - cum))
    x0 = np.concatenate([np.zeros(p), _from_alpha(alpha0)])
    hist = []
    par, ll, gn, it, ok = _newton(fun, x0, opts.tol, opts.max_iter,
                                  grad_norm=natural_norm, history=hist)
    beta, alpha = par[:p], _to_alpha(par[p:])
    if not ok:
        _fail(f"ordinal fit did not converge (gradient norm {gn:.3g})", par, gn)
    H = nat(np.concatenate([beta, alpha]))[2]
    pnames = list(names) + [f"cut{k}" for k in range(K)]
    return FittedModel(spec, beta, names, ll, it, True, gn, cutpoints=alpha, cov=_cov(H),
                       param_names=pnames, history=tuple(hist))


# ----------------------------------------------------------------------
# Zero-inflated Poisson
# ----------------------------------------------------------------------


def _zip_loglik_grad(Z, X, y):
    q = Z.shape[1]
    lgy = gammaln(y + 1.0)
    zero = y == 0

    def fun(par):
        gam, beta = par[:q], par[q:]
        zeta, eta = Z @ gam, X @ beta
        lam = np.exp(eta)
        # log p0 and log(1-p0) without cancellation
        lp0 = -np.logaddexp(0.0, -zeta)
        lq0 = -np.logaddexp(0.0, zeta)
        l_zero = np.logaddexp(lp0, lq0 - lam)
        l_pos = lq0 + xlogy(y, lam) - lam - lgy
        ll = float(np.sum(np.where(zero, l_zero, l_pos)))
        p0 = expit(zeta)
        w = np.where(zero, np.exp(lp0 - l_zero), 0.0)  # posterior excess-zero prob
        d_zeta = w - p0
        d_eta = np.where(zero, -(1.0 - w) * lam, y - lam)
        g = np.concatenate([Z.T @ d_zeta, X.T @ d_eta])
        return ll, g, w

    return fun


def _fd_hessian(grad, par, h=1e-5):
    k = par.size
    H = np.empty((k, k))
    for i in range(k):
        e = np.zeros(k)
        e[i] = h * max(1.0, abs(par[i]))
        H[:, i] = (grad(par + e) - grad(par - e)) / (2 * e[i])
    return (H + H.T) / 2


def _fit_zip(data, spec, opts):
    X, names = spec.mean_design(data)
    Z, znames = spec.zero_design(data)
    y = data.y.astype(float)
    q = Z.shape[1]
    obs = _zip_loglik_grad(Z, X, y)

    beta = _init_log_linear(X, y)
    beta = _newton(_poisson_fun(X, y), beta, 1e-6, opts.max_iter)[0]
    lam = np.exp(X @ beta)
    pz = np.mean(np.exp(-lam))
    p0 = np.clip((np.mean(y == 0) - pz) / max(1.0 - pz, 1e-12), 0.01, 0.9)
    gam = np.zeros(q)
    if spec.zero_intercept and q:
        gam[0] = np.log(p0 / (1 - p0))
    par = np.concatenate([gam, beta])

    hist = []
    ll, g, w = obs(par)
    hist.append(ll)
    it = 0
    for it in range(1, 2000):
        # M-step: weighted logistic for the zero part, weighted Poisson for counts
        gam = _newton(_bernoulli_fun(Z, w), par[:q], 1e-10, 3)[0] if q else par[:q]
        beta = _newton(_poisson_fun(X, y, 1.0 - w), par[q:], 1e-10, 3)[0]
        par = np.concatenate([gam, beta])
        new_ll, g, w = obs(par)
        hist.append(new_ll)
        gn = float(np.linalg.norm(g))
        stalled = new_ll - ll < 1e-12 * (1.0 + abs(ll))
        ll = new_ll
        if gn < 1e-3 or stalled:
            break
    if float(np.linalg.norm(g)) > 1e-2:
        log.debug("EM stalled; switching to quasi-Newton")
        res = optimize.minimize(lambda t: -obs(t)[0], par, jac=lambda t: -obs(t)[1],
                                method="BFGS", options={"gtol": 1e-6, "maxiter": 2000})
        par = res.x

    def fun(t):
        ll_, g_, _ = obs(t)
        return ll_, g_, _fd_hessian(lambda s: obs(s)[1], t)

    par, ll, gn, it2, ok = _newton(fun, par, opts.tol, opts.max_iter, history=hist)
    flags = ()
    p0_hat = expit(Z @ par[:q]) if q else np.zeros(len(y))
    if np.max(p0_hat) < 1e-6:
        flags = (FLAG_ZERO_BOUNDARY,)
    if not ok:
        _fail(f"zero-inflated Poisson fit did not converge (gradient norm {gn:.3g})", par, gn)
    H = _fd_hessian(lambda s: obs(s)[1], par)
    return FittedModel(
        spec, par[q:], names, ll, it + it2, True, gn, zero_coef=par[:q], zero_names=znames,
        cov=_cov(H), param_names=[f"zero:{z}" for z in znames] + list(names), flags=flags,
        history=tuple(hist),
    )


_FITTERS = {
    "poisson": _fit_poisson,
    "negbin": _fit_negbin,
    "bernoulli": _fit_bernoulli,
    "ordinal": _fit_ordinal,
    "zip": _fit_zip,
}


def fit_mle(data: Dataset, spec: ModelSpec, options: FitOptions | None = None, **kw) -> FittedModel:
    """Fit ``spec`` to ``data`` by maximum likelihood.

    Keyword arguments override fields of ``options`` (``tol``, ``max_iter``,
    ``theta_cap``).

    Raises
    ------
    ConvergenceError
        Gradient norm still above ``tol`` after ``max_iter`` iterations.
    SeparationError
        Diverging coefficients in a Bernoulli fit.
    """
    opts = options or FitOptions()
    if kw:
        opts = FitOptions(**{**opts.__dict__, **kw})
    X, _ = spec.mean_design(data)
    if data.n < X.shape[1] or data.n < 2:
        raise InsufficientDataError(f"{data.n} observations for {X.shape[1]} coefficients")
    if spec.family in ("poisson", "negbin", "zip") and data.y.sum() == 0:
        raise InsufficientDataError("all outcomes are zero; the count model is not identified")
    return _FITTERS[spec.family](data, spec, opts)
