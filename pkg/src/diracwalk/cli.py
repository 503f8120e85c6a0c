"""Command-line front end (``dqw``).

Every command takes a single JSON config (``--config PATH``, ``-`` for
stdin) whose keys can be overridden one by one with dotted flags, e.g.
``--initial.width 0.5`` or ``--mass 1``. Values given on the command line
are parsed as JSON when possible, otherwise kept as strings.

Exit codes: 0 success, 1 usage or config error, 2 mathematical infeasibility.
"""

import argparse
import copy
from dataclasses import dataclass, field
import json
import os
from pathlib import Path
import sys

import numpy as np

from .engine import dispersion, evolve, init_state, random_state, site_probability, total_norm
from .engine import wrap_quasi_energy
from .exceptions import InfeasibleError
from .lattice import STRATEGIES, LatticeSpec, analyze_feasibility, make_lattice
from .reference import continuum_for_walk, convergence_study, hamiltonian_symbol
from .walk import SCENARIOS, EMFieldSpec, build_walk

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2
COMMANDS = ("build", "evolve", "dispersion", "converge", "feasibility")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# sampled-field files
#
#   line 1:  D n_1 ... n_D C      (grid dimension, sites per axis, components)
#   then:    C * n_1 * ... * n_D real values, component-major, each component
#            in row-major (C) order; any whitespace separates values and
#            '#' starts a comment

def read_field_file(path):
    """Components A_0..A_{C-1} as arrays of the stored grid shape."""
    tokens = []
    with open(path) as fh:
        for line in fh:
            tokens.extend(line.split("#", 1)[0].split())
    try:
        dim = int(tokens[0])
        shape = tuple(int(t) for t in tokens[1:1 + dim])
        count = int(tokens[1 + dim])
        values = np.array([float(t) for t in tokens[2 + dim:]])
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed field file header or values ({exc})") from exc
    if dim < 1 or len(shape) != dim or any(n < 1 for n in shape) or count < 1:
        raise ConfigError(f"{path}: bad header")
    size = int(np.prod(shape))
    if values.size != count * size:
        raise ConfigError(f"{path}: expected {count * size} values, found {values.size}")
    return [values[c * size:(c + 1) * size].reshape(shape) for c in range(count)]


def write_field_file(path, components, grid=None):
    """Inverse of :func:`read_field_file`; constants are broadcast to ``grid``."""
    arrays = [np.asarray(c, dtype=float) for c in components]
    shape = tuple(grid) if grid is not None else next(a.shape for a in arrays if a.ndim)
    lines = [" ".join(str(v) for v in (len(shape), *shape, len(arrays)))]
    for a in arrays:
        lines.extend(f"{v:.17g}" for v in np.broadcast_to(a, shape).ravel())
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# config handling

def parse_overrides(tokens):
    """``['--a.b', '1', '--c=x']`` -> ``{'a.b': 1, 'c': 'x'}``."""
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or len(tok) == 2:
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, raw = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ConfigError(f"override {tok} needs a value")
            raw = tokens[i + 1]
            i += 2
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def apply_overrides(doc, overrides):
    doc = copy.deepcopy(doc)
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        node = doc
        for p in parts[:-1]:
            child = node.get(p)
            if child is None:
                child = node[p] = {}
            elif not isinstance(child, dict):
                raise ConfigError(f"cannot override {dotted!r}: {p!r} is not an object")
            node = child
        node[parts[-1]] = value
    return doc


def load_config(path, stdin=None):
    if path is None:
        return {}
    try:
        text = (stdin or sys.stdin).read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def _positive(doc, key, default=None, cast=float):
    value = doc.get(key, default)
    if value is None:
        raise ConfigError(f"missing config key {key!r}")
    try:
        value = cast(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key!r} must be a number") from exc
    if not value > 0:
        raise ConfigError(f"{key!r} must be positive")
    return value


@dataclass
class RunConfig:
    scenario: str | None = None
    lattice: object = None
    epsilon: float = 0.1
    mass: float = 0.0
    grid: tuple | None = None
    steps: int = 0
    snapshot: int | None = None
    fields: object = None
    initial: dict = field(default_factory=dict)
    output: str | None = None
    seed: int = 0
    upsilon: float | None = None
    zeta: float | None = None
    alpha: float | None = None
    extra: dict = field(default_factory=dict)

    _KNOWN = ("scenario", "lattice", "epsilon", "mass", "grid", "steps", "snapshot", "fields",
              "initial", "output", "seed", "upsilon", "zeta", "alpha")

    @classmethod
    def from_dict(cls, doc):
        kw = {k: doc[k] for k in cls._KNOWN if k in doc}
        kw["extra"] = {k: v for k, v in doc.items() if k not in cls._KNOWN}
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def validate(self):
        if self.scenario is not None and self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {tuple(SCENARIOS)}")
        self.epsilon = _positive({"epsilon": self.epsilon}, "epsilon")
        try:
            self.mass = float(self.mass)
            self.seed = int(self.seed)
            self.steps = int(self.steps)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad numeric config value: {exc}") from exc
        if self.mass < 0:
            raise ConfigError("'mass' must be non-negative")
        if self.steps < 0:
            raise ConfigError("'steps' must be non-negative")
        if self.snapshot is not None:
            self.snapshot = _positive({"snapshot": self.snapshot}, "snapshot", cast=int)
        if self.grid is not None:
            grid = [self.grid] if np.ndim(self.grid) == 0 else list(self.grid)
            try:
                self.grid = tuple(int(n) for n in grid)
            except (TypeError, ValueError) as exc:
                raise ConfigError("'grid' must be a list of site counts") from exc
            if any(n < 1 for n in self.grid):
                raise ConfigError("'grid' counts must be positive")
        for key in ("upsilon", "zeta", "alpha"):
            if getattr(self, key) is not None:
                setattr(self, key, _positive({key: getattr(self, key)}, key))
        if not isinstance(self.initial, dict):
            raise ConfigError("'initial' must be an object")
        if isinstance(self.fields, str) and not Path(self.fields).is_file():
            raise ConfigError(f"field file {self.fields!r} does not exist")

    def require_scenario(self):
        if self.scenario is None:
            raise ConfigError("config needs 'scenario'")
        return self.scenario

    def require_grid(self, dim):
        if self.grid is None:
            raise ConfigError("config needs 'grid'")
        if len(self.grid) != dim:
            raise ConfigError(f"'grid' needs {dim} entries for this scenario")
        return self.grid

    def field_spec(self):
        if self.fields is None:
            return None
        if isinstance(self.fields, str):
            return EMFieldSpec(tuple(read_field_file(self.fields)))
        if isinstance(self.fields, dict) and "file" in self.fields:
            path = self.fields["file"]
            if not Path(path).is_file():
                raise ConfigError(f"field file {path!r} does not exist")
            return EMFieldSpec(tuple(read_field_file(path)))
        if isinstance(self.fields, list) and all(np.ndim(v) == 0 for v in self.fields):
            return EMFieldSpec(tuple(self.fields))
        raise ConfigError("'fields' must be a list of constants or a field-file path")

    def lattice_spec(self):
        family = SCENARIOS[self.require_scenario()][0]
        name = self.lattice if isinstance(self.lattice, str) else family
        return make_lattice(name, self.epsilon, self.upsilon, self.zeta, self.alpha)

    def build(self):
        return build_walk(self.scenario, self.lattice_spec(), self.mass, self.field_spec())


# ---------------------------------------------------------------------------
# commands

def _g(x):
    return f"{float(x):.17g}"


def _initial_state(cfg, walk):
    grid = cfg.require_grid(walk.dim)
    spec = dict(cfg.initial)
    kind = spec.pop("type", spec.pop("profile", "point"))
    spacing = walk.lattice.grid_spacing
    if kind == "random":
        return random_state(grid, walk.spinor_dim, spacing, np.random.default_rng(cfg.seed))
    allowed = {"site", "component", "center", "width", "momentum", "wavenumber", "spinor"}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError(f"unknown initial-state keys {sorted(unknown)}")
    if "spinor" in spec and spec["spinor"] is not None:
        spec["spinor"] = [complex(*z) if isinstance(z, list) else complex(z) for z in spec["spinor"]]
    return init_state(grid, kind, spacing, walk.spinor_dim, **spec)


def cmd_build(cfg):
    cfg.require_scenario()
    return json.dumps(cfg.build().to_dict(), indent=2) + "\n"


def cmd_evolve(cfg):
    cfg.require_scenario()
    walk = cfg.build()
    state = _initial_state(cfg, walk)
    axes = "xyz"[:walk.dim]
    lines = ["step,t," + ",".join(axes) + ",prob"]
    every = cfg.snapshot or max(cfg.steps, 1)
    marks = sorted(set(range(every, cfg.steps + 1, every)) | {cfg.steps})
    done = 0
    for n in marks:
        state = evolve(state, walk, n - done)
        done = n
        prob = site_probability(state)
        t = _g(n * walk.dt)
        for idx in zip(*np.nonzero(prob)):
            coords = ",".join(_g(i * h) for i, h in zip(idx, state.spacing))
            lines.append(f"{n},{t},{coords},{_g(prob[idx])}")
    lines.append(f"# norm={_g(total_norm(state))}")
    return "\n".join(lines) + "\n"


def _momenta(cfg, dim):
    spec = cfg.extra.get("k")
    if spec is None:
        raise ConfigError("dispersion needs 'k': a list of momenta or {start, stop, count}")
    if isinstance(spec, dict):
        try:
            start = np.atleast_1d(np.asarray(spec["start"], dtype=float))
            stop = np.atleast_1d(np.asarray(spec["stop"], dtype=float))
            count = int(spec["count"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad 'k' range: {exc}") from exc
        if count < 1:
            raise ConfigError("'k.count' must be positive")
        ks = [start + (stop - start) * (i / max(count - 1, 1)) for i in range(count)]
    else:
        ks = [np.atleast_1d(np.asarray(k, dtype=float)) for k in spec]
    for k in ks:
        if k.shape != (dim,):
            raise ConfigError(f"every momentum needs {dim} components")
    return ks


def cmd_dispersion(cfg):
    cfg.require_scenario()
    walk = cfg.build()
    if walk.has_site_coins:
        raise ConfigError("dispersion needs constant fields")
    cont = continuum_for_walk(walk)
    period = 2 * np.pi / walk.dt
    head = ",".join(f"k{j + 1}" for j in range(walk.dim))
    lines = [head + ",branch,e_walk,e_continuum,abs_err"]
    for k in _momenta(cfg, walk.dim):
        e_walk = dispersion(walk, k)
        e_cont = np.sort(wrap_quasi_energy(np.linalg.eigvalsh(hamiltonian_symbol(cont, k)), walk.dt))
        diff = e_walk - e_cont
        err = np.abs(diff - period * np.round(diff / period))
        ktxt = ",".join(_g(v) for v in k)
        for b in range(walk.spinor_dim):
            lines.append(f"{ktxt},{b},{_g(e_walk[b])},{_g(e_cont[b])},{_g(err[b])}")
    return "\n".join(lines) + "\n"


def cmd_converge(cfg):
    cfg.require_scenario()
    eps_list = cfg.extra.get("epsilons")
    if not isinstance(eps_list, list) or len(eps_list) < 2:
        raise ConfigError("converge needs 'epsilons': a list of at least two values")
    t = _positive(cfg.extra, "time", 1.0)
    first = cfg.build()
    if first.has_site_coins:
        raise ConfigError("convergence studies need constant fields")
    box = cfg.extra.get("box")
    if box is None:
        grid = cfg.require_grid(first.dim)
        box = [n * h for n, h in zip(grid, first.lattice.grid_spacing)]
    box = [float(b) for b in np.atleast_1d(box)]
    if len(box) != first.dim:
        raise ConfigError(f"'box' needs {first.dim} entries")
    profile = {"profile": "gaussian", "width": 0.5}
    profile.update({("profile" if k == "type" else k): v for k, v in cfg.initial.items()})
    fields = cfg.field_spec()

    def builder(eps):
        lat = make_lattice(cfg.lattice_spec().name, eps, cfg.upsilon, cfg.zeta, cfg.alpha)
        return build_walk(cfg.scenario, lat, cfg.mass, fields)

    report = convergence_study(continuum_for_walk(first), builder, eps_list, t, box, profile)
    return report.to_csv()


def _feasibility_target(cfg, target):
    target = target if target is not None else cfg.lattice
    if target is None and cfg.scenario is not None:
        target = SCENARIOS[cfg.scenario][0]
    if target is None:
        raise ConfigError("feasibility needs a lattice name or a direction-set JSON file")
    if isinstance(target, dict):
        doc = target
    elif isinstance(target, str) and Path(target).is_file():
        try:
            doc = json.loads(Path(target).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{target}: not valid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{target}: direction set must be a JSON object")
    else:
        # named family; dilatable ones start unscaled so the scalings are derived
        name = str(target)
        try:
            spec = make_lattice(name, cfg.epsilon, cfg.upsilon, cfg.zeta, cfg.alpha)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if spec.dilatable and cfg.upsilon is None and cfg.zeta is None:
            spec = make_lattice(name, cfg.epsilon, 1.0, 1.0, cfg.alpha)
        return spec
    try:
        return LatticeSpec.from_dict(doc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_feasibility(cfg, target=None, strategy="auto"):
    """Returns (json text, exit code)."""
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    spec = _feasibility_target(cfg, target)
    report = analyze_feasibility(spec, strategy)
    doc = report.to_dict()
    doc["lattice_spec"] = report.lattice.to_dict()
    code = EXIT_OK if report.feasible else EXIT_INFEASIBLE
    return json.dumps(doc, indent=2) + "\n", code


# ---------------------------------------------------------------------------
# entry point

def _parser():
    p = argparse.ArgumentParser(prog="dqw", description="Dirac quantum walk simulator")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config path, '-' for stdin")
        s.add_argument("--out", help="output path (default stdout)")
        s.add_argument("--seed", type=int, help="seed for random initial states")
        if name == "feasibility":
            s.add_argument("target", nargs="?", help="lattice name or direction-set JSON path")
            s.add_argument("--strategy", default=None, choices=STRATEGIES)
    return p


def _thread_limit():
    raw = os.environ.get("DQW_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"DQW_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"DQW_THREADS must be a positive integer, got {raw!r}")
    return n


def _run(args, overrides, stdin):
    doc = apply_overrides(load_config(args.config, stdin), overrides)
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.out is not None:
        doc["output"] = args.out
    cfg = RunConfig.from_dict(doc)
    code = EXIT_OK
    try:
        if args.command == "feasibility":
            strategy = args.strategy or cfg.extra.get("strategy", "auto")
            text, code = cmd_feasibility(cfg, args.target, strategy)
        else:
            text = {"build": cmd_build, "evolve": cmd_evolve, "dispersion": cmd_dispersion,
                    "converge": cmd_converge}[args.command](cfg)
    except InfeasibleError as exc:
        if exc.report is None:
            raise
        text = json.dumps(exc.report.to_dict(), indent=2) + "\n"
        code = EXIT_INFEASIBLE
    return text, code, cfg.output


def main(argv=None, stdin=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = _parser()
    try:
        args, rest = parser.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        overrides = parse_overrides(rest)
        threads = _thread_limit()
        if threads is None:
            text, code, out = _run(args, overrides, stdin)
        else:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=threads):
                text, code, out = _run(args, overrides, stdin)
    except (ValueError, TypeError, KeyError) as exc:
        print(f"dqw {args.command}: error: {exc}", file=stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"dqw {args.command}: infeasible: {exc}", file=stderr)
        return EXIT_INFEASIBLE
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            print(f"dqw {args.command}: error: cannot write {out}: {exc}", file=stderr)
            return EXIT_CONFIG
    else:
        stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
