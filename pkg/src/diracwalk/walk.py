"""Walk operators as ordered coin/shift sequences, plus the builders for
every supported scenario.

Steps are stored in application order (first applied first). A shift moves
component c of the spinor by ``signs[c] * step`` index units: the new value at
site n is the old value at ``n + signs[c] * step``, i.e. a plane wave
exp(i k.x) picks up exp(i signs[c] k.edge).
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .coin_solver import STANDARD_COINS, representation_transform  # noqa: F401 (re-export)
from .exceptions import InfeasibleError, UnsupportedError
from .lattice import analyze_feasibility, make_lattice
from .linalg import dagger, identity, kron, pauli

SIGNS = {2: (1, -1), 4: (1, -1, -1, 1)}

# scenario -> (lattice family, spinor dim, electromagnetic?)
SCENARIOS = {
    "line1d_free": ("line", 2, False),
    "line1d_electric": ("line", 2, True),
    "square2d_free": ("square", 2, False),
    "square2d_em": ("square", 2, True),
    "cubic3d_free": ("cubic", 4, False),
    "cubic3d_em": ("cubic", 4, True),
    "tri_isosceles": ("tri_isosceles", 2, False),
    "tri_equilateral": ("tri_equilateral", 2, False),
    "parallelepiped": ("parallelepiped", 4, False),
    "rhombohedral": ("rhombohedral", 4, False),
}
BUILDABLE = tuple(s for s in SCENARIOS if s != "rhombohedral")


@dataclass(frozen=True, eq=False)
class WalkStep:
    kind: str
    matrix: np.ndarray | None = None
    coin_field: np.ndarray | None = None
    step: tuple | None = None
    signs: tuple | None = None
    label: str = ""

    @classmethod
    def coin(cls, matrix, label=""):
        m = np.array(matrix, dtype=complex)
        m.setflags(write=False)
        return cls("uniform_coin", matrix=m, label=label)

    @classmethod
    def site_coin(cls, coin_field, label=""):
        f = np.array(coin_field, dtype=complex)
        f.setflags(write=False)
        return cls("site_coin", coin_field=f, label=label)

    @classmethod
    def shift(cls, step, signs, label=""):
        return cls("shift", step=tuple(int(s) for s in step), signs=tuple(signs), label=label)

    def to_dict(self):
        if self.kind == "shift":
            return {"kind": "shift", "label": self.label, "step": list(self.step),
                    "signs": list(self.signs)}
        if self.kind == "uniform_coin":
            return {"kind": "uniform_coin", "label": self.label,
                    "matrix": [[float(z.real), float(z.imag)] for z in self.matrix.ravel()]}
        return {"kind": "site_coin", "label": self.label,
                "grid": list(self.coin_field.shape[:-2])}


@dataclass(frozen=True, eq=False)
class EMFieldSpec:
    """Potentials A_0 .. A_D, each a constant or an array over the grid."""

    components: tuple

    def __post_init__(self):
        comps = []
        shape = None
        for i, c in enumerate(self.components):
            if np.ndim(c) == 0:
                c = float(c)
                if not math.isfinite(c):
                    raise ValueError(f"A_{i} is not finite")
            else:
                c = np.array(c, dtype=float)
                if not np.all(np.isfinite(c)):
                    raise ValueError(f"A_{i} has non-finite samples")
                if shape is not None and c.shape != shape:
                    raise ValueError("sampled potentials must share one grid shape")
                shape = c.shape
                c.setflags(write=False)
            comps.append(c)
        object.__setattr__(self, "components", tuple(comps))

    @property
    def is_constant(self):
        return all(np.ndim(c) == 0 for c in self.components)

    @property
    def grid_shape(self):
        for c in self.components:
            if np.ndim(c):
                return c.shape
        return None

    def at(self, site):
        site = tuple(site)
        return tuple(float(c) if np.ndim(c) == 0 else float(c[site]) for c in self.components)


@dataclass(frozen=True, eq=False)
class WalkOperator:
    steps: tuple
    spinor_dim: int
    lattice: object
    dt: float
    mass: float
    scenario: str = ""
    fields: EMFieldSpec | None = None
    report: object = field(default=None, repr=False)

    @property
    def epsilon(self):
        return self.lattice.epsilon

    @property
    def dim(self):
        return self.lattice.dim

    @property
    def has_site_coins(self):
        return any(s.kind == "site_coin" for s in self.steps)

    @property
    def grid_shape(self):
        for s in self.steps:
            if s.kind == "site_coin":
                return s.coin_field.shape[:-2]
        return None

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "spinor_dim": self.spinor_dim,
            "epsilon": self.epsilon,
            "dt": self.dt,
            "mass": self.mass,
            "lattice": self.lattice.to_dict(),
            "steps": [s.to_dict() for s in self.steps],
        }


def mass_coin(spinor_dim, mass, dt):
    """exp(-i m dt sigma_1) on 2-spinors; exp(-i m dt sigma_3 x I) on 4-spinors."""
    c, s = math.cos(mass * dt), math.sin(mass * dt)
    if spinor_dim == 2:
        return np.array([[c, -1j * s], [-1j * s, c]])
    ph = complex(c, -s)
    return np.diag([ph, ph, ph.conjugate(), ph.conjugate()])


def _gauge_coin(dim, spinor_dim, component, value, epsilon):
    """Coin for potential A_component; ``value`` may be an array (vectorised)."""
    a = np.asarray(value, dtype=float)[..., None, None]
    theta = epsilon * a
    if component == 0:
        return np.exp(1j * theta) * identity(spinor_dim)
    if spinor_dim == 4:
        return np.cos(theta) * identity(4) + 1j * np.sin(theta) * kron(pauli(1), pauli(component))
    if component == 1:
        return np.cos(theta) * identity(2) - 1j * np.sin(theta) * pauli(3)
    if component == 2 and dim == 2:
        return np.cos(theta) * identity(2) + 1j * np.sin(theta) * pauli(2)
    raise ValueError(f"no gauge coin for A_{component} in {dim} spatial dimensions")


def _check_fields(scenario, dim, fields):
    em = SCENARIOS[scenario][2]
    if fields is None:
        return None
    if not isinstance(fields, EMFieldSpec):
        fields = EMFieldSpec(tuple(fields))
    if not em:
        raise ValueError(f"scenario {scenario!r} takes no electromagnetic field")
    if len(fields.components) != dim + 1:
        raise ValueError(
            f"scenario {scenario!r} needs {dim + 1} potentials A_0..A_{dim}, "
            f"got {len(fields.components)}"
        )
    return fields


def em_coin_at_site(fields, site, scenario, epsilon):
    """Product of the scenario's gauge coins with potentials sampled at ``site``."""
    family, spinor_dim, em = SCENARIOS[scenario]
    dim = {"line": 1, "square": 2, "cubic": 3}.get(family)
    if not em:
        raise ValueError(f"scenario {scenario!r} has no gauge coins")
    fields = _check_fields(scenario, dim, fields)
    values = fields.at(site)
    out = identity(spinor_dim)
    for j in list(range(1, dim + 1)) + [0]:
        out = _gauge_coin(dim, spinor_dim, j, values[j], epsilon) @ out
    return out


def _is_identity(m):
    n = m.shape[-1]
    return np.array_equal(m, np.broadcast_to(np.eye(n), m.shape))


class _StepList(list):
    """Step accumulator that drops identity coins and cancels U^dagger right after U."""

    def coin(self, m, label=""):
        m = np.asarray(m, dtype=complex)
        if _is_identity(m):
            return
        last = self[-1] if self else None
        if (last is not None and last.kind == "uniform_coin"
                and np.max(np.abs(m @ last.matrix - np.eye(m.shape[0]))) <= 1e-14):
            self.pop()
            return
        self.append(WalkStep.coin(m, label))

    def wrapped_shift(self, outer, step, signs, label):
        self.coin(dagger(outer), f"{label}_in")
        self.append(WalkStep.shift(step, signs, label))
        self.coin(outer, f"{label}_out")


def _gauge_steps(steps, scenario, lattice, spinor_dim, fields):
    dim = lattice.dim
    for j in list(range(1, dim + 1)) + [0]:
        value = fields.components[j]
        coin = _gauge_coin(dim, spinor_dim, j, value, lattice.epsilon)
        if np.ndim(value) == 0:
            steps.coin(coin, f"A{j}")
        elif not _is_identity(coin):
            steps.append(WalkStep.site_coin(coin, f"A{j}"))


def build_walk(scenario, lattice, mass=0.0, fields=None):
    """Assemble the factored walk for ``scenario`` on ``lattice``.

    Application order: shifts (each wrapped in its basis-change coins, in the
    lattice's direction order), gauge coins A_1..A_D then A_0, mass coin.
    Coins equal to the identity are dropped.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; expected one of {tuple(SCENARIOS)}")
    family, spinor_dim, _ = SCENARIOS[scenario]
    if lattice.name != family:
        raise ValueError(f"scenario {scenario!r} needs a {family!r} lattice, got {lattice.name!r}")
    if not mass >= 0:
        raise ValueError("mass must be non-negative")
    fields = _check_fields(scenario, lattice.dim, fields)

    report = None
    if family in ("line", "square", "cubic"):
        if lattice.alpha != 1.0 or lattice.upsilon != 1.0 or lattice.zeta != 1.0:
            raise ValueError(f"{family!r} walks need upsilon = zeta = alpha = 1")
        coins = _cube_coins(lattice.dim)
    else:
        report = analyze_feasibility(lattice, "auto")
        if not report.feasible:
            raise InfeasibleError(
                f"no Dirac walk on the {family} lattice", witness=report.witness, report=report
            )
        lattice = report.lattice
        coins = report.coins

    signs = SIGNS[spinor_dim]
    left = STANDARD_COINS["U1"][0] @ pauli(1)
    steps = _StepList()
    for d in lattice.directions:
        u = coins[d.label]
        outer = u if spinor_dim == 2 else kron(left, u)
        steps.wrapped_shift(outer, d.step, signs, d.label)
    if fields is not None:
        _gauge_steps(steps, scenario, lattice, spinor_dim, fields)

    dt = lattice.alpha * lattice.epsilon
    # 4-spinor mass coin uses epsilon; identical to dt since alpha = 1 there
    steps.coin(mass_coin(spinor_dim, mass, dt if spinor_dim == 2 else lattice.epsilon), "mass")
    return WalkOperator(
        steps=tuple(steps),
        spinor_dim=spinor_dim,
        lattice=lattice,
        dt=dt,
        mass=float(mass),
        scenario=scenario,
        fields=fields,
        report=report,
    )


def _cube_coins(dim):
    if dim == 1:
        return {"x": identity(2)}
    if dim == 2:
        return {"x": identity(2), "y": STANDARD_COINS["U"][0]}
    return {"x": STANDARD_COINS["U1"][0], "y": STANDARD_COINS["U2"][0], "z": STANDARD_COINS["U3"][0]}


def make_walk(scenario, epsilon, mass=0.0, fields=None, **lattice_overrides):
    """Build ``scenario`` on its canonical lattice at scale ``epsilon``."""
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; expected one of {tuple(SCENARIOS)}")
    lattice = make_lattice(SCENARIOS[scenario][0], epsilon, **lattice_overrides)
    return build_walk(scenario, lattice, mass, fields)


def shift_symbol(step, signs, spacing, k):
    disp = np.asarray(step, dtype=float) * np.asarray(spacing, dtype=float)
    phase = float(np.dot(np.asarray(k, dtype=float), disp))
    return np.diag(np.exp(1j * phase * np.asarray(signs, dtype=float)))


def symbol(walk, k):
    """One-step operator acting on the plane wave exp(i k.x)."""
    if walk.has_site_coins:
        raise UnsupportedError("symbol needs translation-invariant (constant-field) walks")
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.shape != (walk.dim,):
        raise ValueError(f"momentum must have {walk.dim} components")
    out = identity(walk.spinor_dim)
    for s in walk.steps:
        if s.kind == "shift":
            out = shift_symbol(s.step, s.signs, walk.lattice.grid_spacing, k) @ out
        else:
            out = s.matrix @ out
    return out


def consistency_residual(walk, k):
    """max-norm of symbol(k) - (I - i dt H(k)); O(dt^2) for a consistent walk."""
    from .reference import continuum_for_walk, hamiltonian_symbol

    h = hamiltonian_symbol(continuum_for_walk(walk), k)
    target = identity(walk.spinor_dim) - 1j * walk.dt * h
    return float(np.max(np.abs(symbol(walk, k) - target)))
