"""JSON scenario files and the built-in five-agent ring benchmark.

A scenario file looks like::

    {
      "plant": {"n": 2, "m": 1, "A": [[0, -0.5], [0, 0]], "B": [[0], [1]]},
      "coupling": {"n_agents": 5, "adjacency": [[...]], "self_gains": [...],
                   "rho": 0.2, "epsilon": 0.2},
      "observers": {"alpha": [[...]], "pinning": [...], "mu": 10},
      "gain": {"F": [[-0.366, 0.9306]]},
      "initial": {"leader": [0, 1], "agents": [[...]], "observers": [[...]]},
      "horizon": 20, "step": 0.001, "thresholds": [0.5]
    }

``gain`` holds exactly one of ``F`` (explicit matrix), ``spec``
(``dominant_poles``, ``sigmas``, optional ``v``) or ``positive_real``
(optional ``q`` weight; ``theorem1`` is accepted as an alias).  Complex poles
are written as ``[re, im]`` pairs.  ``rho`` scales the self-gains and
``epsilon`` the adjacency; both default to 1.  Observer initial states default
to the leader's.
"""
import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .coupling import CouplingNetwork, build_coupling, compute_kz
from .errors import PreconditionError, ValidationError
from .network import DEFAULT_MU, ObserverGraph
from .sim import DEFAULT_STEP, Scenario
from .synthesis import FeedbackGain, GainSpec, Plant, assign_gain, positive_real_gain

GAIN_KINDS = ("F", "spec", "positive_real")
_GAIN_ALIASES = {"theorem1": "positive_real"}
DEFAULT_THRESHOLDS = (0.5,)
_FLAT_ROW = re.compile(r"\[\s*([-+0-9.eE,\s]*?)\s*\]")


@dataclass
class ScenarioFile:
    """Parsed scenario file in plain (JSON-compatible) Python values."""

    a: list
    b: list
    adjacency: list
    self_gains: list
    alpha: list
    pinning: list
    gain_kind: str
    gain: dict
    leader: list
    agents: list
    observers: list = None
    rho: float = 1.0
    epsilon: float = 1.0
    mu: float = DEFAULT_MU
    horizon: float = 20.0
    step: float = DEFAULT_STEP
    thresholds: list = field(default_factory=lambda: list(DEFAULT_THRESHOLDS))

    @property
    def n(self):
        return len(self.a)

    @property
    def m(self):
        return len(self.b[0])

    @property
    def n_agents(self):
        return len(self.self_gains)

    def plant(self):
        return Plant(self.a, self.b)

    def network(self):
        return CouplingNetwork.scaled(self.adjacency, self.self_gains, self.rho, self.epsilon)

    def observer_graph(self):
        return ObserverGraph(self.alpha, self.pinning, self.mu)

    def gain_spec(self):
        if self.gain_kind != "spec":
            return None
        return GainSpec(_poles_from_json(self.gain["dominant_poles"]), self.gain["sigmas"],
                        self.gain.get("v"))

    def resolve_gain(self):
        """FeedbackGain from whichever source the file declares."""
        if self.gain_kind == "F":
            return FeedbackGain(self.gain["F"])
        if self.gain_kind == "spec":
            return assign_gain(self.plant(), self.gain_spec())
        kz = compute_kz(build_coupling(self.network()))
        return positive_real_gain(self.plant(), kz, self.gain.get("q"))

    def to_scenario(self, gain=None, t_final=None, step=None):
        return Scenario(self.plant(), self.network(), self.observer_graph(),
                        gain if gain is not None else self.resolve_gain(),
                        self.leader, self.agents, self.observers,
                        self.horizon if t_final is None else t_final,
                        self.step if step is None else step)

    def with_explicit_gain(self, f):
        f = np.atleast_2d(np.asarray(f, dtype=float))
        return replace(self, gain_kind="F", gain={"F": f.tolist()})

    def to_dict(self):
        gain = dict(self.gain)
        initial = {"leader": self.leader, "agents": self.agents}
        if self.observers is not None:
            initial["observers"] = self.observers
        return {
            "plant": {"n": self.n, "m": self.m, "A": self.a, "B": self.b},
            "coupling": {"n_agents": self.n_agents, "adjacency": self.adjacency,
                         "self_gains": self.self_gains, "rho": self.rho,
                         "epsilon": self.epsilon},
            "observers": {"alpha": self.alpha, "pinning": self.pinning, "mu": self.mu},
            "gain": {self.gain_kind: gain[self.gain_kind] if self.gain_kind == "F" else gain},
            "initial": initial,
            "horizon": self.horizon,
            "step": self.step,
            "thresholds": self.thresholds,
        }

    def dumps(self):
        text = json.dumps(self.to_dict(), indent=2)
        # keep rows of numbers on one line
        return _FLAT_ROW.sub(lambda m: "[" + " ".join(m.group(1).split()) + "]", text) + "\n"

    def save(self, path):
        Path(path).write_text(self.dumps())


def poles_to_json(poles):
    out = []
    for z in np.asarray(poles, dtype=complex).ravel():
        out.append(float(z.real) if z.imag == 0 else [float(z.real), float(z.imag)])
    return out


def _poles_from_json(values):
    out = []
    for v in values:
        if isinstance(v, (list, tuple)):
            if len(v) != 2:
                raise ValidationError(f"complex pole must be [re, im], got {v}")
            out.append(complex(v[0], v[1]))
        else:
            out.append(complex(v))
    return out


class _Reader:
    """Field access with ``source:line: field: message`` diagnostics."""

    def __init__(self, text, source):
        self.lines = text.splitlines()
        self.source = source

    def fail(self, path, msg):
        key = path.rsplit(".", 1)[-1]
        line = next((i + 1 for i, ln in enumerate(self.lines) if f'"{key}"' in ln), None)
        where = f"{self.source}:{line}" if line else self.source
        raise ValidationError(f"{where}: {path}: {msg}")

    def get(self, obj, path, required=True, default=None):
        key = path.rsplit(".", 1)[-1]
        if not isinstance(obj, dict):
            self.fail(path, "parent is not an object")
        if key not in obj:
            if required:
                self.fail(path, "missing required field")
            return default
        return obj[key]

    def number(self, obj, path, required=True, default=None, positive=False):
        val = self.get(obj, path, required, default)
        if val is None:
            return val
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            self.fail(path, f"expected a finite number, got {val!r}")
        if positive and not val > 0:
            self.fail(path, f"must be positive, got {val}")
        return float(val)

    def matrix(self, obj, path, rows=None, cols=None, required=True):
        val = self.get(obj, path, required)
        if val is None:
            return None
        if not isinstance(val, list) or not val or not all(isinstance(r, list) for r in val):
            self.fail(path, "expected a non-empty nested array")
        width = len(val[0])
        if width == 0 or any(len(r) != width for r in val):
            self.fail(path, "rows have unequal or zero length")
        for r in val:
            for x in r:
                if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                    self.fail(path, f"non-numeric entry {x!r}")
        if rows is not None and len(val) != rows:
            self.fail(path, f"expected {rows} rows, got {len(val)}")
        if cols is not None and width != cols:
            self.fail(path, f"expected {cols} columns, got {width}")
        return [[float(x) for x in r] for r in val]

    def vector(self, obj, path, size=None, required=True):
        val = self.get(obj, path, required)
        if val is None:
            return None
        if not isinstance(val, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)
                for x in val):
            self.fail(path, "expected an array of finite numbers")
        if size is not None and len(val) != size:
            self.fail(path, f"expected {size} entries, got {len(val)}")
        return [float(x) for x in val]


def parse_scenario(text, source="<scenario>"):
    """Parse and validate scenario JSON; raises ``ValidationError`` with location info."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    rd = _Reader(text, source)
    if not isinstance(doc, dict):
        rd.fail("<root>", "top level must be an object")

    plant = rd.get(doc, "plant")
    a = rd.matrix(plant, "plant.A")
    n = len(a)
    b = rd.matrix(plant, "plant.B", rows=n)
    if len(a[0]) != n:
        rd.fail("plant.A", "must be square")
    for key, want in (("n", n), ("m", len(b[0]))):
        got = rd.get(plant, f"plant.{key}", required=False)
        if got is not None and got != want:
            rd.fail(f"plant.{key}", f"declared {got} but matrices imply {want}")

    coup = rd.get(doc, "coupling")
    d = rd.vector(coup, "coupling.self_gains")
    N = len(d)
    declared = rd.get(coup, "coupling.n_agents", required=False)
    if declared is not None and declared != N:
        rd.fail("coupling.n_agents", f"declared {declared} but self_gains has {N} entries")
    adjacency = rd.matrix(coup, "coupling.adjacency", rows=N, cols=N)
    rho = rd.number(coup, "coupling.rho", required=False, default=1.0, positive=True)
    eps = rd.number(coup, "coupling.epsilon", required=False, default=1.0)
    if eps < 0:
        rd.fail("coupling.epsilon", "must be nonnegative")

    obs = rd.get(doc, "observers")
    alpha = rd.matrix(obs, "observers.alpha", rows=N, cols=N)
    pinning = rd.vector(obs, "observers.pinning", size=N)
    mu = rd.number(obs, "observers.mu", required=False, default=DEFAULT_MU, positive=True)

    gain_doc = rd.get(doc, "gain")
    if not isinstance(gain_doc, dict):
        rd.fail("gain", "must be an object")
    kinds = [k for k in gain_doc if _GAIN_ALIASES.get(k, k) in GAIN_KINDS]
    extra = [k for k in gain_doc if k not in kinds]
    if len(kinds) != 1 or extra:
        rd.fail("gain", f"exactly one of {list(GAIN_KINDS)} is required, got {list(gain_doc)}")
    kind = _GAIN_ALIASES.get(kinds[0], kinds[0])
    body = gain_doc[kinds[0]]
    m = len(b[0])
    if kind == "F":
        gain = {"F": rd.matrix(gain_doc, f"gain.{kinds[0]}", rows=m, cols=n)}
    elif kind == "spec":
        poles = rd.get(body, "gain.spec.dominant_poles")
        if not isinstance(poles, list):
            rd.fail("gain.spec.dominant_poles", "expected an array")
        gain = {"dominant_poles": poles, "sigmas": rd.vector(body, "gain.spec.sigmas", size=m)}
        v = rd.matrix(body, "gain.spec.v", rows=m, cols=m, required=False)
        if v is not None:
            gain["v"] = v
    else:
        body = {} if body is None else body
        gain = {}
        q = rd.matrix(body, "gain.positive_real.q", rows=n, cols=n, required=False)
        if q is not None:
            gain["q"] = q

    init = rd.get(doc, "initial")
    leader = rd.vector(init, "initial.leader", size=n)
    agents = rd.matrix(init, "initial.agents", rows=N, cols=n)
    observers = rd.matrix(init, "initial.observers", rows=N, cols=n, required=False)

    horizon = rd.number(doc, "horizon", required=False, default=20.0, positive=True)
    step = rd.number(doc, "step", required=False, default=DEFAULT_STEP, positive=True)
    thresholds = rd.get(doc, "thresholds", required=False, default=list(DEFAULT_THRESHOLDS))
    if not isinstance(thresholds, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) and x > 0 for x in thresholds):
        rd.fail("thresholds", "expected an array of positive numbers")

    sf = ScenarioFile(a, b, adjacency, d, alpha, pinning, kind, gain, leader, agents,
                      observers, rho, eps, mu, horizon, step, [float(x) for x in thresholds])
    try:
        sf.gain_spec()
    except (ValidationError, PreconditionError) as exc:
        rd.fail("gain.spec", str(exc))
    # Domain-level checks; wrap them with the file location.
    try:
        sf.plant()
        sf.network()
        sf.observer_graph()
        if step > horizon:
            raise ValidationError(f"step {step} exceeds horizon {horizon}")
    except (ValidationError, PreconditionError) as exc:
        raise ValidationError(f"{source}: {exc}") from None
    return sf


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from None
    return parse_scenario(text, str(path))


# Five-agent ring benchmark: double-integrator-like plant, ring coupling
# a_12 = a_23 = a_34 = a_45 = a_51 = 1, self-gains scaled by rho.
RING_A = [[0.0, -0.5], [0.0, 0.0]]
RING_B = [[0.0], [1.0]]
RING_SELF_GAINS = [2.0, 1.95, 2.5, 2.9, 3.4]
RING_LEADER = [0.0, 1.0]
RING_SPREAD = [3.0, 1.5, 0.0, -1.5, -3.0]

GAIN_FAST = [[-0.3660, 0.9306]]
GAIN_DAMPED = [[-0.2, 1.0]]
UNCOUPLED = (0.12, 0.0)
COUPLED = (0.2, 0.2)

FIGURES = {
    "fig4": ("trajectories", GAIN_FAST),
    "fig5": ("metrics", GAIN_FAST),
    "fig6": ("trajectories", GAIN_DAMPED),
    "fig7": ("metrics", GAIN_DAMPED),
}


def ring_adjacency(n=5):
    adj = [[0.0] * n for _ in range(n)]
    for i in range(n):
        adj[i][(i + 1) % n] = 1.0
    return adj


def ring_benchmark(rho, epsilon, f=GAIN_FAST, horizon=20.0, step=DEFAULT_STEP,
                   observers=None, mu=DEFAULT_MU):
    """Five agents offset from the leader in position, moving at the leader's velocity.

    Observers start on the leader unless ``observers`` is given, so the
    observer error stays at zero and the agents follow the coupled loop alone.
    """
    agents = [[RING_LEADER[0] + s, RING_LEADER[1]] for s in RING_SPREAD]
    return ScenarioFile(
        a=[row[:] for row in RING_A], b=[row[:] for row in RING_B],
        adjacency=ring_adjacency(), self_gains=list(RING_SELF_GAINS),
        alpha=ring_adjacency(), pinning=[1.0, 0.0, 0.0, 0.0, 0.0],
        gain_kind="F", gain={"F": [list(r) for r in f]},
        leader=list(RING_LEADER), agents=agents, observers=observers,
        rho=rho, epsilon=epsilon, mu=mu, horizon=horizon, step=step)
