"""Run configuration schema and its translation into domain objects."""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import sympy as sp
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError, DomainError
from .geometry import (
    ConstantFactor,
    CosinePotential,
    GeometrySpec,
    Interval,
    LinearFactor,
    PeriodicCircle,
    QuadraticPotential,
    TimeScaledPotential,
    ZeroPotential,
)
from .identities import CATALOG, ConstantWeight, ExponentialWeight, RationalWeight
from .nonlinearity import HYPOTHESES, Logistic, PowerAuxiliary, PowerLaw, SpaceModulated, ZeroAuxiliary, ZeroReaction
from .solver import (
    ConstantODE,
    ConstantPlusBump,
    ConstantPlusWave,
    ExplicitTable,
    OracleTrace,
    QuadraticPressure,
    ScenarioSpec,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = 1


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainCfg(Strict):
    kind: Literal["circle", "interval"] = "circle"
    length: float = 2.0 * math.pi
    x_lo: float = -1.0
    x_hi: float = 1.0


class ConformalCfg(Strict):
    kind: Literal["constant", "linear"] = "constant"
    lambda0: float = 0.0
    rate: float = 0.0


class PotentialCfg(Strict):
    kind: Literal["zero", "quadratic", "cosine"] = "zero"
    a: float = 1.0
    kappa: float = 1.0
    time_rate: float = 0.0


class GeometryCfg(Strict):
    domain: DomainCfg = DomainCfg()
    conformal: ConformalCfg = ConformalCfg()
    potential: PotentialCfg = PotentialCfg()


class NonlinearityCfg(Strict):
    kind: Literal["zero", "power", "logistic"] = "zero"
    c: float = 1.0
    a: float = 1.0
    modulation_eps: float = 0.0
    modulation_kappa: float = 1.0


class AuxCfg(Strict):
    kind: Literal["zero", "power"] = "zero"
    c: float = 1.0
    r: float = 1.0


class WeightCfg(Strict):
    kind: Literal["constant", "exponential", "rational"] = "constant"
    c: float = 1.0
    rate: float = 0.0
    k: float = 0.0


class OracleCfg(Strict):
    kind: Literal["none", "quadratic", "constant_ode"] = "none"
    a0: float = 0.5
    b0: float = 1.0
    u0: float = 1.0


class InitialCfg(Strict):
    kind: Literal["bump", "wave", "oracle", "table"] = "wave"
    base: float = 1.0
    amp: float = 0.3
    center: float = 0.0
    width: float = 0.5
    mode: int = 1
    phase: float = 0.0
    x: list[float] = []
    u: list[float] = []


class SolverCfg(Strict):
    nx: int = 64
    t_start: float = 0.0
    horizon: float = 0.2
    n_slices: int = 11
    cfl: float = 0.4
    dt: Optional[float] = None
    boundary: Literal["frozen", "oracle"] = "frozen"
    gradient_scheme: Literal["central", "forward"] = "central"
    initial: InitialCfg = InitialCfg()
    oracle: OracleCfg = OracleCfg()


class ExponentCfg(Strict):
    m: float = 3.0
    p: Optional[float] = 0.75
    beta: Optional[float] = None
    s: float = 2.0
    q: Optional[float] = None


class ToleranceCfg(Strict):
    order: float = 2.0
    order_tol: float = 0.3
    analytic_residual: float = 1e-9
    c_spread: float = 0.5
    finest_violation: float = 1e-4
    max_principle: float = 1e-6
    slack_coeff: float = 1.0
    estimate_variation: float = 0.25


class ExponentsTask(Strict):
    kind: Literal["exponents"]


class SolveTask(Strict):
    kind: Literal["solve"]
    csv: bool = True


class IdentityTask(Strict):
    kind: Literal["identity"]
    id: str
    source: Literal["solved", "analytic", "oracle"] = "solved"
    levels: int = 4
    zeta: WeightCfg = WeightCfg()
    gamma: AuxCfg = AuxCfg()
    profile: str = "1 + 3/10*sin(x) + 1/10*cos(2*x)"
    t_star: float = 0.0
    nodes: int = 15

    @model_validator(mode="after")
    def _known(self):
        if self.id not in CATALOG:
            raise ValueError(f"unknown identity id {self.id!r}; choose from {sorted(CATALOG)}")
        return self


class EstimateTask(Strict):
    kind: Literal["estimate"]
    id: Literal["I_local", "I_global", "I_static", "II_local", "II_global", "II_static"]
    x0: float = 0.0
    t0: Optional[float] = None
    R: float = 1.0
    T: Optional[float] = None
    levels: int = 3


class MaxPrincipleTask(Strict):
    kind: Literal["max_principle"]
    id: Literal["Cor6_4", "Cor6_5", "Cor11_3", "Cor11_4"]
    a: float = 0.0
    gamma: AuxCfg = AuxCfg()


class LiouvilleTask(Strict):
    kind: Literal["liouville"]
    id: Literal["Thm2_4", "Thm7_4"]
    radii: list[float] = [1.0, 2.0, 4.0, 8.0]
    x0: float = 1.0
    min_decay: float = 1.5


class AncientTask(Strict):
    kind: Literal["ancient"]
    u0: float = 5.0
    a: float = 1.0


class ConvergenceTask(Strict):
    kind: Literal["convergence"]
    levels: int = 3
    reference: Literal["oracle", "successive"] = "oracle"


class CutoffTask(Strict):
    kind: Literal["cutoff"]
    R: float = 1.0
    T: float = 1.0
    tau_fraction: float = 0.5
    a: float = 0.5
    samples: int = 512


class MatrixTask(Strict):
    kind: Literal["matrix"]
    n: int = 2
    samples: int = 100_000
    restarts: int = 8


class ConditionTask(Strict):
    kind: Literal["condition"]
    hypothesis: str
    u_lo: float = 1e-3
    u_hi: float = 1e3
    samples: int = 256
    a: float = 0.0
    gamma: AuxCfg = AuxCfg()

    @model_validator(mode="after")
    def _known(self):
        if self.hypothesis not in HYPOTHESES:
            raise ValueError(f"unknown hypothesis {self.hypothesis!r}; choose from {sorted(HYPOTHESES)}")
        return self


Task = Annotated[
    Union[ExponentsTask, SolveTask, IdentityTask, EstimateTask, MaxPrincipleTask, LiouvilleTask,
          AncientTask, ConvergenceTask, CutoffTask, MatrixTask, ConditionTask],
    Field(discriminator="kind"),
]


class RunConfig(Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    seed: int = 0
    geometry: GeometryCfg = GeometryCfg()
    nonlinearity: NonlinearityCfg = NonlinearityCfg()
    solver: SolverCfg = SolverCfg()
    exponents: ExponentCfg = ExponentCfg()
    tasks: list[Task] = []
    output_dir: str = "out"
    tolerances: ToleranceCfg = ToleranceCfg()


# ------------------------------------------------------------------ loading


def load_config(path: str | Path) -> RunConfig:
    """Read a TOML or JSON config. A JSON report is accepted through its ``config`` key."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix == ".json":
            data = json.loads(text)
            if "config" in data and "schema_version" in data and "tasks" not in data:
                data = data["config"]
        else:
            data = tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(data)


def parse_config(data: dict) -> RunConfig:
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    validate_tasks(cfg)
    return cfg


# -------------------------------------------------------------- translation


def build_geometry(cfg: RunConfig) -> GeometrySpec:
    g = cfg.geometry
    domain = PeriodicCircle(g.domain.length) if g.domain.kind == "circle" else Interval(g.domain.x_lo, g.domain.x_hi)
    conformal = (
        ConstantFactor(g.conformal.lambda0)
        if g.conformal.kind == "constant"
        else LinearFactor(g.conformal.lambda0, g.conformal.rate)
    )
    pot = g.potential
    if pot.kind == "zero":
        potential = ZeroPotential()
    elif pot.kind == "quadratic":
        potential = QuadraticPotential(pot.a)
    else:
        potential = CosinePotential(pot.a, pot.kappa)
    if pot.time_rate != 0.0:
        potential = TimeScaledPotential(potential, pot.time_rate)
    return GeometrySpec(
        m=cfg.exponents.m,
        domain=domain,
        conformal=conformal,
        potential=potential,
        boundary="periodic" if g.domain.kind == "circle" else "dirichlet",
    )


def build_nonlinearity(cfg: RunConfig):
    n = cfg.nonlinearity
    if n.kind == "zero":
        base = ZeroReaction()
    elif n.kind == "power":
        base = PowerLaw(n.c, n.a)
    else:
        base = Logistic(n.c)
    if n.modulation_eps != 0.0:
        return SpaceModulated(base, n.modulation_eps, n.modulation_kappa)
    return base


def build_aux(cfg: AuxCfg):
    return ZeroAuxiliary() if cfg.kind == "zero" else PowerAuxiliary(cfg.c, cfg.r)


def build_weight(cfg: WeightCfg):
    if cfg.kind == "constant":
        return ConstantWeight(cfg.c)
    if cfg.kind == "exponential":
        return ExponentialWeight(cfg.c, cfg.rate)
    return RationalWeight(cfg.k)


def build_oracle(cfg: RunConfig):
    o = cfg.solver.oracle
    if o.kind == "none":
        return None
    if o.kind == "quadratic":
        if cfg.exponents.p is None:
            raise ConfigError("the quadratic oracle needs exponents.p")
        return QuadraticPressure(cfg.exponents.p, o.a0, o.b0)
    return ConstantODE(o.u0)


def build_scenario(cfg: RunConfig) -> ScenarioSpec:
    s = cfg.solver
    if cfg.exponents.p is None:
        raise ConfigError("solving needs exponents.p")
    oracle = build_oracle(cfg)
    ic = s.initial
    if ic.kind == "bump":
        initial = ConstantPlusBump(ic.base, ic.amp, ic.center, ic.width)
    elif ic.kind == "wave":
        initial = ConstantPlusWave(ic.base, ic.amp, ic.mode, ic.phase)
    elif ic.kind == "oracle":
        if oracle is None:
            raise ConfigError("initial.kind = 'oracle' needs solver.oracle")
        initial = OracleTrace(oracle)
    else:
        initial = ExplicitTable(tuple(ic.x), tuple(ic.u))
    return ScenarioSpec(
        geometry=build_geometry(cfg),
        nonlinearity=build_nonlinearity(cfg),
        p=cfg.exponents.p,
        initial=initial,
        nx=s.nx,
        t_start=s.t_start,
        horizon=s.horizon,
        n_slices=s.n_slices,
        cfl=s.cfl,
        dt=s.dt,
        boundary_source=s.boundary,
        oracle=oracle,
        gradient_scheme=s.gradient_scheme,
    )


def parse_profile(text: str):
    """Density profile expression in ``x`` (sympy syntax) as a callable of a symbol."""
    x = sp.Symbol("x", real=True)
    try:
        expr = sp.parse_expr(text, local_dict={"x": x})
    except (SyntaxError, TypeError, sp.SympifyError) as exc:
        raise ConfigError(f"cannot parse profile {text!r}: {exc}") from exc
    if expr.free_symbols - {x}:
        raise ConfigError(f"profile may only use x, got {sorted(map(str, expr.free_symbols))}")
    return lambda sym: expr.subs(x, sym)


def validate_tasks(cfg: RunConfig) -> None:
    """Up-front precondition checks so that failures surface before any solve."""
    try:
        geom = build_geometry(cfg)
        build_nonlinearity(cfg)
    except DomainError as exc:
        raise ConfigError(f"geometry/nonlinearity: {exc}") from exc
    ex = cfg.exponents
    from .exponents import critical_exponents

    needs_scenario = any(t.kind not in ("exponents", "cutoff", "matrix", "ancient", "condition") for t in cfg.tasks)
    if needs_scenario:
        try:
            build_scenario(cfg)
        except DomainError as exc:
            raise ConfigError(f"scenario: {exc}") from exc
    for i, task in enumerate(cfg.tasks):
        where = f"tasks[{i}] ({task.kind})"
        if task.kind == "exponents" or task.kind in ("matrix", "cutoff", "ancient"):
            if task.kind == "exponents" and ex.m < 2:
                raise ConfigError(f"{where}: exponent windows need m >= 2")
            continue
        if ex.m < 2 and task.kind in ("estimate", "max_principle", "liouville"):
            raise ConfigError(f"{where}: needs m >= 2")
        if task.kind == "estimate":
            p_c, p_0 = critical_exponents(ex.m)
            lo = p_c if task.id.startswith("I_") else p_0
            if not (lo < (ex.p or -1.0) < 1.0):
                raise ConfigError(f"{where}: p={ex.p} outside ({lo:.6g}, 1) required by {task.id}")
            if task.id.endswith("_global") and not geom.closed:
                raise ConfigError(f"{where}: {task.id} needs the circle domain")
            if task.id.endswith("_static") and not geom.static:
                raise ConfigError(f"{where}: {task.id} needs a static metric and potential")
        if task.kind == "max_principle":
            if not geom.closed:
                raise ConfigError(f"{where}: corollaries are checked on the circle domain")
            if task.id in ("Cor6_4", "Cor6_5") and ex.q is None:
                raise ConfigError(f"{where}: {task.id} needs exponents.q")
        if task.kind == "liouville" and geom.closed:
            raise ConfigError(f"{where}: Liouville probes run on an interval domain")
        if task.kind == "convergence" and task.reference == "oracle" and cfg.solver.oracle.kind == "none":
            raise ConfigError(f"{where}: oracle reference requested but solver.oracle.kind = 'none'")
        if task.kind == "identity":
            if task.source == "oracle" and cfg.solver.oracle.kind != "quadratic":
                raise ConfigError(f"{where}: oracle source needs solver.oracle.kind = 'quadratic'")
            if task.source == "analytic":
                parse_profile(task.profile)
