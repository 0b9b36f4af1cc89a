"""
PARAFAC (CP) decomposition of power tensors by alternating least squares,
with the PCA baseline and factor matching utilities.

A rank-L model writes the (delay, beam_pair, time) power tensor as
sum_l d_l o s_l o g_l: a delay signature, a spatial signature and a gain
trajectory per multipath component.
"""
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment

from pyblockage.analysis.tensorops import _values, full_unfold, mttkrp

logger = logging.getLogger(__name__)

# Condition number above which the normal equations are regularized
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class AlsOptions:
    max_iters: int = 500
    tol: float = 1e-8
    init: str = 'svd'
    nonneg: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError('max_iters must be >= 1: {0}'
                             .format(self.max_iters))
        if self.tol <= 0:
            raise ValueError('tol must be > 0: {0}'.format(self.tol))
        if self.init not in ('svd', 'random'):
            raise ValueError('init must be "svd" or "random": {0}'
                             .format(self.init))


@dataclass
class CPModel:
    '''
    Rank-L CP model.

    Columns of `D` and `S` have unit norm and the component magnitudes live
    in `G`. Components are ordered by descending norm of their `G` column.
    '''
    D: np.ndarray
    S: np.ndarray
    G: np.ndarray
    fit: float = np.nan
    iterations: int = 0
    converged: bool = True
    regularized: bool = False
    history: list = field(default_factory=list)
    timestamps: np.ndarray = None
    n_tx: int = None
    n_rx: int = None
    tap_spacing_ns: float = 1.0

    @property
    def L(self):
        return self.D.shape[1]

    @property
    def shape(self):
        return (self.D.shape[0], self.S.shape[0], self.G.shape[0])

    @classmethod
    def from_factors(cls, D, S, G, **kwargs):
        '''Build a model from arbitrary factors, enforcing the invariants.'''
        D, S, G = _normalize(np.array(D, dtype=float),
                             np.array(S, dtype=float),
                             np.array(G, dtype=float))
        return cls(D, S, G, **kwargs)

    def dominant_delay(self):
        '''Delay index with the largest |d| for each component.'''
        return np.argmax(np.abs(self.D), axis=0)

    def dominant_beam_pair(self):
        '''(tx_beam, rx_beam) with the largest |s| for each component.'''
        j = np.argmax(np.abs(self.S), axis=0)
        if self.n_rx is None:
            return [(None, int(jj)) for jj in j]
        return [(int(jj // self.n_rx), int(jj % self.n_rx)) for jj in j]

    def to_dict(self):
        def matrix(m):
            return {'shape': list(m.shape), 'data': m.ravel().tolist()}
        out = {'L': self.L,
               'fit': float(self.fit),
               'iterations': int(self.iterations),
               'converged': bool(self.converged),
               'regularized': bool(self.regularized),
               'D': matrix(self.D),
               'S': matrix(self.S),
               'G': matrix(self.G),
               'tap_spacing_ns': self.tap_spacing_ns,
               'n_tx': self.n_tx,
               'n_rx': self.n_rx}
        if self.timestamps is not None:
            out['timestamps'] = np.asarray(self.timestamps).tolist()
        return out

    @classmethod
    def from_dict(cls, d):
        def matrix(m):
            return np.array(m['data'], dtype=float).reshape(m['shape'])
        ts = d.get('timestamps')
        return cls(D=matrix(d['D']), S=matrix(d['S']), G=matrix(d['G']),
                   fit=d.get('fit', np.nan),
                   iterations=d.get('iterations', 0),
                   converged=d.get('converged', True),
                   regularized=d.get('regularized', False),
                   timestamps=None if ts is None else np.asarray(ts),
                   n_tx=d.get('n_tx'), n_rx=d.get('n_rx'),
                   tap_spacing_ns=d.get('tap_spacing_ns', 1.0))


@dataclass
class PCAModel:
    loadings: np.ndarray
    scores: np.ndarray
    singular_values: np.ndarray
    explained: np.ndarray

    @property
    def L(self):
        return self.loadings.shape[1]


def reconstruct(m):
    '''
    Dense tensor of a CP model: x[i, j, k] = sum_l D[i, l] S[j, l] G[k, l].
    '''
    return np.einsum('il,jl,kl->ijk', m.D, m.S, m.G, optimize=True)


def fit(m, t3):
    '''
    Relative reconstruction error ||x - x_hat|| / ||x|| of a model.
    '''
    x = _values(t3)
    if x.shape != m.shape:
        raise ValueError('Model shape {0} does not match tensor shape {1}'
                         .format(m.shape, x.shape))
    norm_x = np.linalg.norm(x)
    if norm_x == 0:
        raise ValueError('Cannot compute a relative error of a zero tensor.')
    return float(np.linalg.norm(x - reconstruct(m)) / norm_x)


def _normalize(D, S, G):
    # Unit-norm D and S, magnitude in G
    for F in (D, S):
        norms = np.linalg.norm(F, axis=0)
        norms[norms == 0] = 1.0
        F /= norms
        G *= norms

    # Sign: nonnegative column sums of D and S, compensated in G
    for F in (D, S):
        flip = np.where(F.sum(axis=0) < 0, -1.0, 1.0)
        F *= flip
        G *= flip

    order = np.argsort(-np.linalg.norm(G, axis=0), kind='stable')
    return D[:, order], S[:, order], G[:, order]


def _leading_vectors(gram, L):
    n = gram.shape[0]
    _, vecs = linalg.eigh(gram, subset_by_index=(n - L, n - 1))
    vecs = vecs[:, ::-1]
    signs = np.where(vecs.sum(axis=0) < 0, -1.0, 1.0)
    return vecs * signs


def _init_factors(x, L, opts):
    I, J, K = x.shape
    if opts.init == 'random':
        rng = np.random.default_rng(opts.seed)
        return [rng.uniform(0, 1, (n, L)) for n in (I, J, K)]

    grams = (np.einsum('ijk,ljk->il', x, x, optimize=True),
             np.einsum('ijk,ilk->jl', x, x, optimize=True),
             np.einsum('ijk,ijl->kl', x, x, optimize=True))
    return [_leading_vectors(g, L) for g in grams]


class _Solver:
    '''Normal-equation solves with a Tikhonov fallback.'''

    def __init__(self):
        self.regularized = False

    def __call__(self, gram, rhs):
        if np.linalg.cond(gram) > MAX_CONDITION:
            lam = 1e-10 * np.trace(gram)
            if lam == 0:
                lam = 1e-10
            gram = gram + lam * np.eye(gram.shape[0])
            if not self.regularized:
                msg = ('Ill-conditioned ALS normal equations; applying '
                       'Tikhonov regularization {0:.3e}'.format(lam))
                warnings.warn(msg)
                logger.warning(msg)
            self.regularized = True
        return linalg.solve(gram, rhs.T, assume_a='pos').T


def cp_als(t3, L, opts=None):
    '''
    Rank-L CP decomposition by alternating least squares.

    Parameters
    ----------
    t3 : `xarray.DataArray` or `numpy.ndarray`
        3-way tensor (delay, beam_pair, time)
    L : int
        Number of components
    opts : `AlsOptions`
        Iteration limits, initialization and constraints

    Returns
    -------
    model : `CPModel`
        `history` holds ||x - x_hat|| after every sweep. `converged` is
        False if `max_iters` was reached first.
    '''
    if opts is None:
        opts = AlsOptions()
    x = np.asarray(_values(t3), dtype=float)
    if x.ndim != 3:
        raise ValueError('cp_als expects a 3-way tensor, got {0} modes'
                         .format(x.ndim))
    if not 1 <= L <= min(x.shape):
        raise ValueError('L must be in [1, {0}]: {1}'.format(min(x.shape), L))

    norm_x = np.linalg.norm(x)
    if norm_x == 0:
        raise ValueError('Cannot decompose an all-zero tensor.')

    D, S, G = _init_factors(x, L, opts)
    solve = _Solver()
    history = []
    rel_old = np.inf
    converged = False
    best = None

    for iteration in range(1, opts.max_iters + 1):
        D = solve((S.T @ S) * (G.T @ G), mttkrp(x, (D, S, G), 0))
        D /= np.maximum(np.linalg.norm(D, axis=0), np.finfo(float).tiny)
        S = solve((D.T @ D) * (G.T @ G), mttkrp(x, (D, S, G), 1))
        S /= np.maximum(np.linalg.norm(S, axis=0), np.finfo(float).tiny)
        m_g = mttkrp(x, (D, S, G), 2)
        G = solve((D.T @ D) * (S.T @ S), m_g)

        if opts.nonneg:
            D, S, G = (np.maximum(F, 0) for F in (D, S, G))
            residual = np.linalg.norm(x - np.einsum('il,jl,kl->ijk', D, S, G,
                                                    optimize=True))
        else:
            inner = np.sum(G * m_g)
            norm_hat2 = np.sum((D.T @ D) * (S.T @ S) * (G.T @ G))
            residual = np.sqrt(max(norm_x**2 - 2 * inner + norm_hat2, 0.0))

        history.append(float(residual))
        rel = residual / norm_x
        if best is None or residual <= best[0]:
            best = (residual, D.copy(), S.copy(), G.copy())

        logger.debug('ALS sweep %d: relative error %.3e', iteration, rel)
        if abs(rel_old - rel) < opts.tol:
            converged = True
            break
        rel_old = rel

    if not converged:
        logger.warning('ALS stopped after %d sweeps without reaching '
                       'tol=%g', iteration, opts.tol)

    _, D, S, G = best
    D, S, G = _normalize(D, S, G)
    attrs = getattr(t3, 'attrs', {})
    times = t3['time'].values if hasattr(t3, 'coords') and 'time' in \
        t3.coords else None
    model = CPModel(D, S, G, iterations=iteration, converged=converged,
                    regularized=solve.regularized, history=history,
                    timestamps=times, n_tx=attrs.get('n_tx'),
                    n_rx=attrs.get('n_rx'),
                    tap_spacing_ns=attrs.get('tap_spacing_ns', 1.0))
    model.fit = fit(model, x)
    logger.info('ALS rank %d: %d sweeps, relative error %.3e', L,
                iteration, model.fit)
    return model


def pca_baseline(t3, L):
    '''
    Truncated SVD of the fully unfolded (delay * beam_pair, time) matrix.

    Returns
    -------
    model : `PCAModel`
        Orthonormal loadings, temporal scores (V * sigma) serving as the
        baseline gain trajectories, all singular values and the fraction
        of energy explained by each of the first L components.
    '''
    X = full_unfold(t3)
    if not 1 <= L <= min(X.shape):
        raise ValueError('L must be in [1, {0}]: {1}'.format(min(X.shape), L))
    U, s, Vt = linalg.svd(X, full_matrices=False)
    U = U[:, :L]
    V = Vt[:L].T
    signs = np.where(U.sum(axis=0) < 0, -1.0, 1.0)
    U = U * signs
    V = V * signs
    energy = np.sum(s**2)
    return PCAModel(loadings=U, scores=V * s[:L], singular_values=s,
                    explained=s[:L]**2 / energy)


def congruence(model, reference):
    '''
    Congruence of every (model, reference) component pair.

    Returns
    -------
    c : `numpy.ndarray`
        c[a, b] = product over the three modes of the absolute normalized
        inner product between component a of `model` and b of `reference`.
    '''
    c = np.ones((model.L, reference.L))
    for A, B in ((model.D, reference.D), (model.S, reference.S),
                 (model.G, reference.G)):
        An = A / np.linalg.norm(A, axis=0)
        Bn = B / np.linalg.norm(B, axis=0)
        c *= np.abs(An.T @ Bn)
    return np.clip(c, 0.0, 1.0)


def align_factors(model, reference):
    '''
    Match model components to reference components.

    Greedy: the pair with the highest congruence is matched first, ties
    broken by the lowest indices.

    Returns
    -------
    permutation : `numpy.ndarray`
        permutation[b] is the model component matched to reference b
    scores : `numpy.ndarray`
        Congruence of each matched pair
    '''
    if model.L != reference.L:
        raise ValueError('Models have different ranks: {0} vs {1}'
                         .format(model.L, reference.L))
    c = congruence(model, reference)
    work = c.copy()
    permutation = np.full(reference.L, -1)
    for _ in range(reference.L):
        a, b = np.unravel_index(np.argmax(work), work.shape)
        permutation[b] = a
        work[a, :] = -1
        work[:, b] = -1
    return permutation, c[permutation, np.arange(reference.L)]


def trajectory_correlation(estimated, truth):
    '''
    Mean Pearson correlation of matched gain trajectories.

    Parameters
    ----------
    estimated, truth : `numpy.ndarray`
        (K, L) trajectories as columns

    Returns
    -------
    corr : float
        Mean absolute correlation under the assignment that maximizes its
        sum
    '''
    estimated = np.asarray(estimated, dtype=float)
    truth = np.asarray(truth, dtype=float)
    E = estimated - estimated.mean(axis=0)
    T = truth - truth.mean(axis=0)
    E /= np.linalg.norm(E, axis=0)
    T /= np.linalg.norm(T, axis=0)
    corr = np.abs(T.T @ E)
    rows, cols = linear_sum_assignment(-corr)
    return float(np.mean(corr[rows, cols]))
