"""scikit-learn style front end: ``fit`` builds the walk, ``transform``
evolves batches of states, ``predict`` returns quasi-energies."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .engine import SpinorField, dispersion, evolve
from .reference import continuum_for_walk, hamiltonian_symbol
from .validation import check_momenta, check_positive, check_state_array
from .walk import make_walk


class DiracQuantumWalk(TransformerMixin, BaseEstimator):
    """Dirac quantum walk on one of the supported scenarios.

    Parameters mirror :func:`diracwalk.walk.make_walk`; ``n_steps`` is the
    number of walk steps ``transform`` applies. ``lattice_params`` holds
    optional upsilon / zeta / alpha overrides.
    """

    def __init__(self, scenario="line1d_free", epsilon=0.1, mass=0.0, fields=None,
                 n_steps=1, lattice_params=None):
        self.scenario = scenario
        self.epsilon = epsilon
        self.mass = mass
        self.fields = fields
        self.n_steps = n_steps
        self.lattice_params = lattice_params

    def fit(self, X=None, y=None):
        check_positive(self.epsilon, "epsilon")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise ValueError("n_steps must be a non-negative integer")
        self.walk_ = make_walk(self.scenario, self.epsilon, self.mass, self.fields,
                               **(self.lattice_params or {}))
        self.dt_ = self.walk_.dt
        self.report_ = self.walk_.report
        self.continuum_ = None if self.walk_.has_site_coins else continuum_for_walk(self.walk_)
        if X is not None:
            check_state_array(X, self.walk_.spinor_dim, self.walk_.dim)
        return self

    def transform(self, X):
        """Evolve each state (shape (n_samples, *grid, N)) by ``n_steps``."""
        check_is_fitted(self, "walk_")
        x, batched = check_state_array(X, self.walk_.spinor_dim, self.walk_.dim)
        spacing = self.walk_.lattice.grid_spacing
        out = np.stack([evolve(SpinorField(s, spacing), self.walk_, int(self.n_steps)).amplitudes
                        for s in x])
        return out if batched else out[0]

    def predict(self, K):
        """Quasi-energies, shape (n_points, N), ascending per row."""
        check_is_fitted(self, "walk_")
        k = check_momenta(K, self.walk_.dim)
        return np.array([dispersion(self.walk_, kk) for kk in k])

    def continuum_energies(self, K):
        check_is_fitted(self, "walk_")
        if self.continuum_ is None:
            raise ValueError("no continuum reference for site-dependent fields")
        k = check_momenta(K, self.walk_.dim)
        return np.array([np.linalg.eigvalsh(hamiltonian_symbol(self.continuum_, kk)) for kk in k])

    def score(self, K, y=None):
        """Negative worst-case gap between walk and continuum quasi-energies."""
        e_walk = self.predict(K)
        e_cont = self.continuum_energies(K)
        period = 2 * np.pi / self.dt_
        diff = e_walk - e_cont
        return -float(np.max(np.abs(diff - period * np.round(diff / period))))
