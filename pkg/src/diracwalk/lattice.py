"""Lattice geometries, directional-derivative decompositions and the
feasibility analysis that decides whether a Dirac walk exists on a lattice.

Every lattice lives on a rectangular integer index grid: a direction is an
integer index step and its physical edge is ``step * grid_spacing``. The
dilations upsilon (y) and zeta (z) only change ``grid_spacing``, so shifts
stay exact integer rolls whatever their values.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .coin_solver import (
    UNCONSTRAINED,
    AffinePauliFactor,
    InfeasibleError,
    solve_sigma3_conjugation,
    solve_time_dilation,
)
from .exceptions import RankDeficientError
from .linalg import hermitian_eigen2, pauli_vector

LATTICE_NAMES = (
    "line",
    "square",
    "cubic",
    "tri_equilateral",
    "tri_isosceles",
    "parallelepiped",
    "rhombohedral",
)
STRATEGIES = ("rescale_space", "dilate_time", "auto")

_R3 = math.sqrt(3.0)

# Families whose defining property is equal edges; their scalings stay fixed
# under the spatial-rescaling strategy.
_RIGID = {"line", "square", "cubic", "tri_equilateral", "rhombohedral"}

_TRI_STEPS = (("x", (2, 0)), ("u", (1, 1)), ("v", (-1, 1)))
_PARA_STEPS = (
    ("x", (2, 0, 0)),
    ("a", (1, 1, 1)),
    ("b", (-1, 1, 1)),
    ("c", (1, 3, 0)),
    ("d", (-1, 3, 0)),
    ("e", (0, -2, 1)),
)
_CANONICAL = {
    "line": (1.0, 1.0, 1.0),
    "square": (1.0, 1.0, 1.0),
    "cubic": (1.0, 1.0, 1.0),
    "tri_isosceles": (1 / _R3, 1.0, 1.0),
    "tri_equilateral": (1.0, 1.0, 1.5),
    "parallelepiped": (1 / _R3, 1 / math.sqrt(6.0), 1.0),
    "rhombohedral": (1.0, 1.0, None),
}

# Pauli index and sign attached to each Cartesian derivative, per spatial
# dimension (for 3D these act on the right tensor factor).
_AXIS_PAULI = {
    1: ((3, 1.0),),
    2: ((3, 1.0), (2, -1.0)),
    3: ((1, 1.0), (2, 1.0), (3, 1.0)),
}


@dataclass(frozen=True)
class Direction:
    label: str
    unit_vector: tuple
    step: tuple


@dataclass(frozen=True)
class LatticeSpec:
    name: str
    dim: int
    epsilon: float
    upsilon: float
    zeta: float
    alpha: float | None
    directions: tuple
    grid_spacing: tuple
    dilatable: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if len(self.grid_spacing) != self.dim:
            raise ValueError("grid_spacing length must equal dim")
        for d in self.directions:
            if len(d.step) != self.dim:
                raise ValueError(f"direction {d.label!r} has wrong step length")

    @property
    def labels(self):
        return tuple(d.label for d in self.directions)

    def edge(self, label):
        d = self.direction(label)
        return np.asarray(d.step, dtype=float) * np.asarray(self.grid_spacing)

    def direction(self, label):
        for d in self.directions:
            if d.label == label:
                return d
        raise KeyError(label)

    def dilated(self, factors):
        """Copy with axis j stretched by ``factors[j]`` (axis 0 is never stretched)."""
        factors = tuple(float(f) for f in factors) + (1.0,) * (self.dim - len(factors))
        spacing = tuple(s * f for s, f in zip(self.grid_spacing, factors))
        upsilon = self.upsilon * (factors[1] if self.dim > 1 else 1.0)
        zeta = self.zeta * (factors[2] if self.dim > 2 else 1.0)
        steps = [(d.label, d.step) for d in self.directions]
        return _assemble(
            self.name, self.epsilon, upsilon, zeta, self.alpha, steps, spacing, self.dilatable
        )

    def with_alpha(self, alpha):
        steps = [(d.label, d.step) for d in self.directions]
        return _assemble(
            self.name, self.epsilon, self.upsilon, self.zeta, alpha, steps,
            self.grid_spacing, self.dilatable,
        )

    def to_dict(self):
        return {
            "name": self.name,
            "dim": self.dim,
            "epsilon": self.epsilon,
            "upsilon": self.upsilon,
            "zeta": self.zeta,
            "alpha": self.alpha,
            "directions": [
                {"label": d.label, "unit_vector": list(d.unit_vector), "step": list(d.step)}
                for d in self.directions
            ],
            "grid_spacing": list(self.grid_spacing),
            "dilatable": self.dilatable,
        }

    @classmethod
    def from_dict(cls, doc):
        """Build from JSON. Either a full spec or a bare direction set
        (``epsilon``, ``grid_spacing``, ``directions`` with label/step)."""
        try:
            name = doc.get("name", "custom")
            spacing = tuple(float(s) for s in doc["grid_spacing"])
            steps = [(str(d["label"]), tuple(int(s) for s in d["step"])) for d in doc["directions"]]
            epsilon = float(doc["epsilon"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed lattice document: {exc}") from exc
        if not steps:
            raise ValueError("malformed lattice document: no directions")
        alpha = doc.get("alpha", 1.0)
        spec = _assemble(
            name,
            epsilon,
            float(doc.get("upsilon", 1.0)),
            float(doc.get("zeta", 1.0)),
            None if alpha is None else float(alpha),
            steps,
            spacing,
            bool(doc.get("dilatable", name not in _RIGID)),
        )
        for d, given in zip(spec.directions, doc["directions"]):
            if "unit_vector" in given and not np.allclose(
                d.unit_vector, given["unit_vector"], atol=1e-12
            ):
                raise ValueError(f"unit_vector of {d.label!r} inconsistent with its step")
        return spec


def _assemble(name, epsilon, upsilon, zeta, alpha, steps, spacing, dilatable):
    directions = []
    for label, step in steps:
        edge = np.asarray(step, dtype=float) * np.asarray(spacing, dtype=float)
        length = float(np.linalg.norm(edge))
        if length == 0.0:
            raise ValueError(f"direction {label!r} has zero length")
        directions.append(Direction(label, tuple(float(v) for v in edge / length), tuple(step)))
    return LatticeSpec(
        name=name,
        dim=len(spacing),
        epsilon=float(epsilon),
        upsilon=float(upsilon),
        zeta=float(zeta),
        alpha=alpha,
        directions=tuple(directions),
        grid_spacing=tuple(float(s) for s in spacing),
        dilatable=dilatable,
    )


def make_lattice(name, epsilon, upsilon=None, zeta=None, alpha=None):
    """Lattice with canonical parameters unless overridden."""
    if name not in _CANONICAL:
        raise ValueError(f"unknown lattice {name!r}; expected one of {LATTICE_NAMES}")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    for value, what in ((upsilon, "upsilon"), (zeta, "zeta"), (alpha, "alpha")):
        if value is not None and not value > 0:
            raise ValueError(f"{what} must be positive")
    c_ups, c_zeta, c_alpha = _CANONICAL[name]
    ups = c_ups if upsilon is None else float(upsilon)
    zet = c_zeta if zeta is None else float(zeta)
    alp = c_alpha if alpha is None else float(alpha)
    eps = float(epsilon)

    if name == "line":
        ups, zet = 1.0, 1.0
        spacing, steps = (eps,), [("x", (1,))]
    elif name == "square":
        zet = 1.0
        spacing, steps = (eps, ups * eps), [("x", (1, 0)), ("y", (0, 1))]
    elif name == "cubic":
        spacing = (eps, ups * eps, zet * eps)
        steps = [("x", (1, 0, 0)), ("y", (0, 1, 0)), ("z", (0, 0, 1))]
    elif name.startswith("tri_"):
        zet = 1.0
        spacing, steps = (eps / 2, ups * _R3 * eps / 2), list(_TRI_STEPS)
    else:
        spacing = (eps / 2, ups * eps / (2 * _R3), zet * eps * math.sqrt(2.0 / 3.0))
        steps = list(_PARA_STEPS)
    return _assemble(name, eps, ups, zet, alp, steps, spacing, name not in _RIGID)


def normalization_constants(spec):
    """Per-direction N_d = epsilon / |edge_d|, the factor that turns the
    dilated edge vector (in units of epsilon) into a unit vector."""
    out = {}
    for d in spec.directions:
        length = float(np.linalg.norm(spec.edge(d.label)))
        if length == 0.0:
            raise ValueError(f"direction {d.label!r} has zero length")
        out[d.label] = spec.epsilon / length
    return out


@dataclass(frozen=True)
class DerivativeDecomposition:
    """d_i = sum_d coefficients[i, d] * d_d with d_d the unit directional derivative.

    ``transfers[layer]`` expresses d_1 through the directions of that layer
    (e.g. d_1 = d_u - d_v on the equilateral lattice).
    """

    labels: tuple
    layers: tuple
    coefficients: np.ndarray
    normalizers: np.ndarray
    transfers: dict = field(default_factory=dict)

    def prefactors(self):
        """coefficients * N_d: weights on the edge vectors measured in epsilon."""
        return self.coefficients * self.normalizers[None, :]

    def transfer_prefactors(self, layer):
        return self.transfers[layer] * self.normalizers


def _layer_of(unit, tol=1e-12):
    nz = [j for j, v in enumerate(unit) if abs(v) > tol]
    return nz[-1]


def _solve_exact(columns, target, tol=1e-12):
    coef, *_ = np.linalg.lstsq(columns, target, rcond=None)
    if np.max(np.abs(columns @ coef - target)) > tol:
        return None
    return coef


def cartesian_decomposition(spec):
    """Express every Cartesian derivative through the lattice directions.

    Directions are grouped into layers by their highest nonzero Cartesian
    axis; axis i is reconstructed from the layer-i directions only (minimum
    norm if underdetermined), which reproduces the classic relations
    such as d_y = (d_u + d_v) / sqrt(3).
    """
    labels = spec.labels
    units = np.array([d.unit_vector for d in spec.directions], dtype=float)
    layers = tuple(_layer_of(u) for u in units)
    dim = spec.dim
    coeffs = np.zeros((dim, len(labels)))
    for axis in range(dim):
        idx = [n for n, layer in enumerate(layers) if layer == axis]
        target = np.eye(dim)[axis]
        sol = _solve_exact(units[idx].T, target) if idx else None
        if sol is None:
            raise RankDeficientError(
                f"lattice directions cannot reconstruct the derivative along axis {axis + 1}"
            )
        coeffs[axis, idx] = sol

    transfers = {}
    for layer in range(1, dim):
        idx = [n for n, lay in enumerate(layers) if lay == layer]
        if len(idx) < 2:
            continue
        sol = _solve_exact(units[idx].T, np.eye(dim)[0])
        if sol is not None:
            vec = np.zeros(len(labels))
            vec[idx] = sol
            transfers[layer] = vec
    norms = normalization_constants(spec)
    return DerivativeDecomposition(
        labels=labels,
        layers=layers,
        coefficients=coeffs,
        normalizers=np.array([norms[l] for l in labels]),
        transfers=transfers,
    )


@dataclass
class FeasibilityReport:
    status: str
    lattice: LatticeSpec
    strategy: str
    parameters: dict = field(default_factory=dict)
    targets: dict = field(default_factory=dict)
    coins: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    witness: dict = field(default_factory=dict)

    @property
    def feasible(self):
        return self.status != "infeasible"

    def to_dict(self):
        def mat(m):
            return [[float(z.real), float(z.imag)] for z in np.asarray(m).ravel()]

        return {
            "status": self.status,
            "lattice": self.lattice.name,
            "strategy": self.strategy,
            "parameters": self.parameters,
            "targets": {k: mat(v) for k, v in self.targets.items()},
            "coins": {k: mat(v) for k, v in self.coins.items()},
            "residuals": self.residuals,
            "witness": _jsonable(self.witness),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _pauli_coeffs(dim, axis, weight):
    k, sign = _AXIS_PAULI[dim][axis]
    vec = [0.0, 0.0, 0.0]
    vec[k - 1] = sign * weight
    return vec


def _coins_for(spec, targets, status, strategy, params):
    coins, residuals = {}, {}
    for label, target in targets.items():
        sol = solve_sigma3_conjugation(target)
        coins[label] = sol.u
        residuals[label] = sol.residual
    return FeasibilityReport(
        status=status, lattice=spec, strategy=strategy, parameters=params,
        targets=targets, coins=coins, residuals=residuals,
    )


def _params(spec, alpha):
    return {"upsilon": spec.upsilon, "zeta": spec.zeta, "alpha": alpha}


def _rescale(spec, free):
    dec = cartesian_decomposition(spec)
    pre = dec.prefactors()
    witness = {}
    if spec.dilatable if free is None else free:
        factors = []
        for axis in range(spec.dim):
            weights = {dec.labels[n]: abs(pre[axis, n])
                       for n, lay in enumerate(dec.layers) if lay == axis}
            vals = list(weights.values())
            if max(vals) - min(vals) > 1e-9:
                witness[f"axis_{axis + 1}"] = weights
            factors.append(vals[0])
        if abs(factors[0] - 1) > 1e-9:
            witness["axis_1"] = "x-direction prefactor must already be 1"
        if witness:
            return FeasibilityReport("infeasible", spec, "rescale_space", witness=witness)
        spec = spec.dilated(factors)
        dec = cartesian_decomposition(spec)
        pre = dec.prefactors()

    targets = {}
    for n, label in enumerate(dec.labels):
        axis = dec.layers[n]
        target = pauli_vector(_pauli_coeffs(spec.dim, axis, pre[axis, n]))
        lam_p, lam_m, _, _ = hermitian_eigen2(target)
        if abs(lam_p - 1) > 1e-9 or abs(lam_m + 1) > 1e-9:
            witness[label] = {"eigenvalues": [lam_p, lam_m]}
        targets[label] = target
    if witness:
        return FeasibilityReport("infeasible", spec, "rescale_space", witness=witness)
    spec = spec.with_alpha(1.0)
    return _coins_for(spec, targets, "feasible_rescaled", "rescale_space", _params(spec, 1.0))


def time_dilation_factors(spec, transfer_layer):
    """Affine Pauli factors (in alpha) for every direction when alpha - 1
    copies of d_1 are moved onto the directions of ``transfer_layer``."""
    dec = cartesian_decomposition(spec)
    pre = dec.prefactors()
    transfer = dec.transfer_prefactors(transfer_layer) if transfer_layer is not None else None
    factors = []
    for n, label in enumerate(dec.labels):
        axis = dec.layers[n]
        base = _pauli_coeffs(spec.dim, axis, pre[axis, n])
        if axis == 0:
            factors.append(AffinePauliFactor(base, (0.0, 0.0, 0.0), label))
            continue
        t = transfer[n] if transfer is not None else 0.0
        shift = _pauli_coeffs(spec.dim, 0, t)
        const = tuple(-s for s in shift)
        slope = tuple(b + s for b, s in zip(base, shift))
        factors.append(AffinePauliFactor(const, slope, label))
    return factors


def _dilate_time(spec):
    dec = cartesian_decomposition(spec)
    layers = sorted(dec.transfers) or [None]
    witness = {}
    for layer in layers:
        factors = time_dilation_factors(spec, layer)
        key = f"transfer_layer_{layer + 1}" if layer is not None else "no_transfer"
        try:
            roots = solve_time_dilation(factors)
        except InfeasibleError as exc:
            witness[key] = exc.witness["roots"]
            continue
        alpha = 1.0 if roots == UNCONSTRAINED else roots[0]
        targets = {f.label: f.matrix(alpha) for f in factors}
        out_spec = spec.with_alpha(alpha)
        report = _coins_for(
            out_spec, targets, "feasible_time_dilated", "dilate_time", _params(out_spec, alpha)
        )
        report.witness = {"alpha_candidates": roots, "transfer_layer": key}
        return report
    return FeasibilityReport("infeasible", spec, "dilate_time", witness=witness)


def analyze_feasibility(spec, strategy="auto", free_scalings=None):
    """Decide whether a first-order Dirac walk exists on ``spec``.

    ``rescale_space`` keeps alpha = 1 and solves for the y/z dilations.
    ``free_scalings`` says whether the dilations may change: None follows the
    family (rigid equal-edge families keep theirs), True/False force it.
    ``dilate_time`` keeps the geometry and solves
    for alpha. ``auto`` tries both in that order. Infeasibility is reported,
    never raised.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if strategy == "rescale_space":
        return _rescale(spec, free_scalings)
    if strategy == "dilate_time":
        return _dilate_time(spec)
    first = _rescale(spec, free_scalings)
    if first.feasible:
        return first
    second = _dilate_time(spec)
    if second.feasible:
        return second
    return FeasibilityReport(
        "infeasible", spec, "auto",
        witness={"rescale_space": first.witness, "dilate_time": second.witness},
    )
