"""Run configuration: a sectioned key-value format with lossless round trips.

The on-disk format is INI (configparser) with sections [run], [grid],
[fluid], [solver], [platelets], [links].  Every field has a documented
default; floats are serialized with repr so parse(serialize(cfg)) == cfg.
Validation collects all problems before reporting.
"""

import configparser
import hashlib
import io
from dataclasses import dataclass, field, fields, replace

from . import rbfgeom
from .errors import ConfigError

METHODS = ("pl-ib", "rbf-ib")
INITIAL_FLOWS = ("rest", "poiseuille")
SOLVER_METHODS = ("pcg", "fft")
TARGETS = ("initial", "circle")


@dataclass(frozen=True)
class RunSection:
    method: str = "pl-ib"
    dt: float = 2e-4
    t_end: float = 2.0
    seed: int = 0
    snapshot_every: int = 100
    area_every: int = 0
    energy_every: int = 0
    forces_enabled: bool = True
    exit_x: float = None
    initial_flow: str = "rest"


@dataclass(frozen=True)
class GridSection:
    nx: int = 32
    ny: int = 32
    Lx: float = 1.0
    Ly: float = 1.0


@dataclass(frozen=True)
class FluidSection:
    rho: float = 1.0
    mu: float = 8.0
    u_max: float = 5.0
    forcing: str = "none"  # "none" or "poiseuille"


@dataclass(frozen=True)
class SolverSection:
    method: str = "pcg"
    rel_tol: float = 1e-9


@dataclass(frozen=True)
class PlateletSection:
    count: int = 0
    centers: tuple = ()
    a: float = 0.2
    b: float = 0.05
    n_s: int = 50
    n_d: int = 25
    epsilon: float = 0.0  # 0 selects the shape-parameter policy default
    k_t: float = 800.0
    k_b: float = 8.0
    target: str = "circle"
    circle_r: float = 0.1


@dataclass(frozen=True)
class LinkSection:
    enabled: bool = False
    bind_radius: float = 0.02
    max_links: int = 10
    wall_band: tuple = (0.4, 0.7)
    break_strain: float = 1.0
    k_c: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    grid: GridSection = field(default_factory=GridSection)
    fluid: FluidSection = field(default_factory=FluidSection)
    solver: SolverSection = field(default_factory=SolverSection)
    platelets: PlateletSection = field(default_factory=PlateletSection)
    links: LinkSection = field(default_factory=LinkSection)

    def epsilon(self):
        if self.platelets.epsilon > 0:
            return self.platelets.epsilon
        return rbfgeom.default_epsilon(self.platelets.n_d)

    def with_(self, **section_updates):
        """Functional update: with_(run=dict(dt=1e-4), grid=dict(nx=64))."""
        out = self
        for name, updates in section_updates.items():
            out = replace(out, **{name: replace(getattr(out, name), **updates)})
        return out


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(" ".join(repr(float(x)) for x in pair) for pair in value)
        return " ".join(repr(float(x)) for x in value)
    return str(value)


def serialize(cfg):
    """Canonical INI text for a RunConfig."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    for section_name in ("run", "grid", "fluid", "solver", "platelets", "links"):
        section = getattr(cfg, section_name)
        parser[section_name] = {
            f.name: _fmt(getattr(section, f.name)) for f in fields(section)
        }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def config_hash(cfg):
    """Short deterministic identifier used to key per-run output directories."""
    return hashlib.sha256(serialize(cfg).encode()).hexdigest()[:12]


def _parse_value(text, proto, problems, where):
    text = text.strip()
    if proto is None or isinstance(proto, float) and text == "":
        if text == "":
            return None
    try:
        if isinstance(proto, bool):
            if text.lower() in ("true", "1", "yes"):
                return True
            if text.lower() in ("false", "0", "no"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if isinstance(proto, int):
            return int(text)
        if isinstance(proto, float) or proto is None:
            return float(text)
        if isinstance(proto, tuple):
            if where.endswith("centers"):
                pairs = [p for p in (s.strip() for s in text.split(";")) if p]
                return tuple(tuple(float(x) for x in p.split()) for p in pairs)
            return tuple(float(x) for x in text.split())
        return text
    except ValueError as exc:
        problems.append(f"{where}: {exc}")
        return proto


def parse(text):
    """Parse INI text into a RunConfig; unknown keys and bad values all reported."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"unparseable config: {exc}"])
    problems = []
    sections = {}
    prototypes = {
        "run": RunSection(),
        "grid": GridSection(),
        "fluid": FluidSection(),
        "solver": SolverSection(),
        "platelets": PlateletSection(),
        "links": LinkSection(),
    }
    for name, proto in prototypes.items():
        updates = {}
        if parser.has_section(name):
            known = {f.name for f in fields(proto)}
            for key, raw in parser[name].items():
                if key not in known:
                    problems.append(f"[{name}] unknown key {key!r}")
                    continue
                current = getattr(proto, key)
                if key == "exit_x":
                    updates[key] = _parse_value(raw, 0.0, problems, f"[{name}] {key}") if raw.strip() else None
                else:
                    updates[key] = _parse_value(raw, current, problems, f"[{name}] {key}")
        sections[name] = replace(proto, **updates)
    for name in parser.sections():
        if name not in prototypes:
            problems.append(f"unknown section [{name}]")
    if problems:
        raise ConfigError(problems)
    return RunConfig(**sections)


def load(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


def save(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(cfg))


def validate(cfg):
    """All-at-once validation; returns the list of problems (empty if valid)."""
    problems = []
    r, g, fl, so, pl, li = cfg.run, cfg.grid, cfg.fluid, cfg.solver, cfg.platelets, cfg.links

    if r.method not in METHODS:
        problems.append(f"[run] method must be one of {METHODS}, got {r.method!r}")
    if r.dt <= 0:
        problems.append(f"[run] dt must be positive, got {r.dt}")
    if r.t_end <= 0:
        problems.append(f"[run] t_end must be positive, got {r.t_end}")
    if r.initial_flow not in INITIAL_FLOWS:
        problems.append(f"[run] initial_flow must be one of {INITIAL_FLOWS}")
    if r.snapshot_every < 0 or r.area_every < 0 or r.energy_every < 0:
        problems.append("[run] cadences must be >= 0")

    def pow2(n):
        return n >= 8 and (n & (n - 1)) == 0

    if not pow2(g.nx):
        problems.append(f"[grid] nx must be a power of two >= 8, got {g.nx}")
    if not pow2(g.ny):
        problems.append(f"[grid] ny must be a power of two >= 8, got {g.ny}")
    if g.Lx <= 0 or g.Ly <= 0:
        problems.append("[grid] domain lengths must be positive")
    elif pow2(g.nx) and pow2(g.ny) and abs(g.Lx / g.nx - g.Ly / g.ny) > 1e-12 * g.Lx:
        problems.append("[grid] cells must be square (Lx/nx == Ly/ny)")

    if fl.rho <= 0:
        problems.append(f"[fluid] rho must be positive, got {fl.rho}")
    if fl.mu <= 0:
        problems.append(f"[fluid] mu must be positive, got {fl.mu}")
    if fl.u_max <= 0:
        problems.append(f"[fluid] u_max must be positive, got {fl.u_max}")
    if fl.forcing not in ("none", "poiseuille"):
        problems.append(f"[fluid] forcing must be none or poiseuille, got {fl.forcing!r}")

    if so.method not in SOLVER_METHODS:
        problems.append(f"[solver] method must be one of {SOLVER_METHODS}")
    if not (0 < so.rel_tol < 1e-2):
        problems.append(f"[solver] rel_tol out of range (0, 1e-2): {so.rel_tol}")

    if pl.count != len(pl.centers):
        problems.append(
            f"[platelets] count ({pl.count}) != number of centers ({len(pl.centers)})"
        )
    if pl.count:
        if pl.a <= 0 or pl.b <= 0:
            problems.append("[platelets] radii a, b must be positive")
        if pl.n_s < 8:
            problems.append(f"[platelets] n_s must be >= 8, got {pl.n_s}")
        if cfg.run.method == "rbf-ib":
            if pl.n_d < 8:
                problems.append(f"[platelets] n_d must be >= 8, got {pl.n_d}")
            if pl.n_d > pl.n_s:
                problems.append(f"[platelets] n_d ({pl.n_d}) must be <= n_s ({pl.n_s})")
        if pl.k_t <= 0 or pl.k_b <= 0:
            problems.append("[platelets] stiffnesses k_t, k_b must be positive")
        if pl.target not in TARGETS:
            problems.append(f"[platelets] target must be one of {TARGETS}")
        if pl.target == "circle" and pl.circle_r <= 0:
            problems.append("[platelets] circle_r must be positive for target=circle")
        for c in pl.centers:
            if len(c) != 2:
                problems.append(f"[platelets] center {c} is not an (x, y) pair")

    if li.enabled:
        if li.bind_radius <= 0:
            problems.append("[links] bind_radius must be positive")
        if li.max_links < 0:
            problems.append("[links] max_links must be >= 0")
        if len(li.wall_band) != 2 or li.wall_band[0] >= li.wall_band[1]:
            problems.append(f"[links] wall_band must be (lo, hi) with lo < hi")
        if li.break_strain < 0:
            problems.append("[links] break_strain must be >= 0")
        if li.k_c < 0:
            problems.append("[links] k_c must be >= 0")
    return problems


def validated(cfg):
    problems = validate(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def marker_spacing_warnings(cfg):
    """Leakage rule diagnostics: initial sample spacing should stay under 0.5h.

    The coarsest published configurations bend this rule near an ellipse's
    major axis, so violations warn rather than fail.
    """
    if not cfg.platelets.count:
        return []
    import numpy as np

    h = cfg.grid.Lx / cfg.grid.nx
    lam = rbfgeom.uniform_nodes(cfg.platelets.n_s)
    tangent = np.hypot(
        cfg.platelets.a * np.sin(lam), cfg.platelets.b * np.cos(lam)
    )
    spacing = tangent.max() * 2 * np.pi / cfg.platelets.n_s
    if spacing > 0.5 * h:
        return [
            f"initial sample spacing {spacing:.4g} exceeds 0.5h = {0.5 * h:.4g}; "
            "leakage risk on this grid"
        ]
    return []
