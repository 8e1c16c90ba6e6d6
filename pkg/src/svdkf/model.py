"""State-space model definition, Gaussian simulation, and example presets.

The model is

    x_k = F x_{k-1} + B u_{k-1} + G w_{k-1},   w ~ N(0, Theta)
    z_k = H x_k + v_k,                          v ~ N(0, R)

with x_0 ~ N(x0_mean, pi0).  Simulation is a pure function of
(model, horizon, controls, seed): the three noise roles (initial state,
process noise, measurement noise) draw from independent PCG64 streams
keyed as [seed, role], so identical inputs give bit-identical output.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .arrays import svd_factor_psd
from .errors import InvalidInput, InvalidModel

_ROLE_X0 = 0
_ROLE_PROCESS = 1
_ROLE_MEASUREMENT = 2

_OVERRIDABLE = ("f", "b", "g", "h", "theta", "r")


@dataclass(frozen=True)
class StateSpaceModel:
    f: np.ndarray
    b: np.ndarray
    g: np.ndarray
    h: np.ndarray
    theta: np.ndarray
    r: np.ndarray
    x0_mean: np.ndarray
    pi0: np.ndarray
    # per-step matrix overrides: {k: {"f": matrix, ...}}
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("f", "b", "g", "h", "theta", "r", "pi0"):
            object.__setattr__(self, name,
                               np.atleast_2d(np.asarray(getattr(self, name),
                                                        dtype=np.float64)))
        object.__setattr__(self, "x0_mean",
                           np.asarray(self.x0_mean,
                                      dtype=np.float64).reshape(-1))
        n = self.f.shape[0]
        if self.f.shape != (n, n):
            raise InvalidModel(f"f must be square, got {self.f.shape}")
        if self.b.shape[0] != n:
            raise InvalidModel("b must have n rows")
        if self.g.shape[0] != n:
            raise InvalidModel("g must have n rows")
        if self.h.shape[1] != n:
            raise InvalidModel("h must have n columns")
        p = self.g.shape[1]
        m = self.h.shape[0]
        if self.theta.shape != (p, p):
            raise InvalidModel(f"theta must be {p}x{p}, got {self.theta.shape}")
        if self.r.shape != (m, m):
            raise InvalidModel(f"r must be {m}x{m}, got {self.r.shape}")
        if self.x0_mean.shape != (n,):
            raise InvalidModel("x0_mean must be an n-vector")
        if self.pi0.shape != (n, n):
            raise InvalidModel("pi0 must be n x n")
        for name in ("theta", "r", "pi0"):
            a = getattr(self, name)
            scale = max(float(np.max(np.abs(a))), 1.0)
            if np.max(np.abs(a - a.T)) > 1e-12 * scale:
                raise InvalidModel(f"{name} is not symmetric")
            if np.min(np.linalg.eigvalsh(a)) < -1e-12 * scale:
                raise InvalidModel(f"{name} is not positive semidefinite")
        for k, table in self.overrides.items():
            for key in table:
                if key not in _OVERRIDABLE:
                    raise InvalidModel(f"unknown override field {key!r} at k={k}")

    @property
    def n(self) -> int:
        return self.f.shape[0]

    @property
    def m(self) -> int:
        return self.h.shape[0]

    @property
    def p(self) -> int:
        return self.g.shape[1]

    @property
    def d(self) -> int:
        return self.b.shape[1]

    @property
    def time_invariant(self) -> bool:
        return not self.overrides

    def matrices_at(self, k: int):
        """Return (f, b, g, h, theta, r) effective at step k."""
        vals = {name: getattr(self, name) for name in _OVERRIDABLE}
        if k in self.overrides:
            for key, mat in self.overrides[k].items():
                vals[key] = np.atleast_2d(np.asarray(mat, dtype=np.float64))
        return tuple(vals[name] for name in _OVERRIDABLE)


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray        # K x n true states, k = 1..K
    measurements: np.ndarray  # K x m
    controls: np.ndarray      # K x d, u_{k-1} applied at step k
    seed: int


def simulate(model: StateSpaceModel, horizon: int, controls=None,
             seed: int = 0, sample_x0: bool = True) -> Trajectory:
    """Draw one true trajectory and its measurement history.

    With sample_x0 the trajectory starts from a draw of N(x0_mean, pi0);
    otherwise it starts exactly at x0_mean while pi0 still describes the
    filters' initial uncertainty.  The x0 noise stream is consumed either
    way, so the process and measurement noise histories are identical for
    the same seed under both settings.
    """
    if horizon < 1:
        raise InvalidInput("horizon must be >= 1")
    n, m, p, d = model.n, model.m, model.p, model.d
    if controls is None:
        controls = np.zeros((horizon, d))
    controls = np.asarray(controls, dtype=np.float64).reshape(horizon, d)

    rng_x0 = np.random.default_rng([int(seed), _ROLE_X0])
    rng_w = np.random.default_rng([int(seed), _ROLE_PROCESS])
    rng_v = np.random.default_rng([int(seed), _ROLE_MEASUREMENT])

    # PSD square roots via SVD factors so rank-deficient covariances work
    q0, d0 = svd_factor_psd(model.pi0)
    s_pi0 = q0 * np.sqrt(d0)
    q_th, d_th = svd_factor_psd(model.theta)
    s_th = q_th * np.sqrt(d_th)
    q_r, d_r = svd_factor_psd(model.r)
    s_r = q_r * np.sqrt(d_r)

    states = np.empty((horizon, n))
    meas = np.empty((horizon, m))
    x0_noise = s_pi0 @ rng_x0.standard_normal(n)
    x = model.x0_mean + x0_noise if sample_x0 else model.x0_mean.copy()
    for k in range(horizon):
        f, b, g, h, theta, r = model.matrices_at(k + 1)
        if model.overrides:
            qt, dt = svd_factor_psd(theta)
            s_th = qt * np.sqrt(dt)
            qr_, dr_ = svd_factor_psd(r)
            s_r = qr_ * np.sqrt(dr_)
        w = s_th @ rng_w.standard_normal(p)
        v = s_r @ rng_v.standard_normal(m)
        x = f @ x + b @ controls[k] + g @ w
        meas[k] = h @ x + v
        states[k] = x
    return Trajectory(states=states, measurements=meas, controls=controls,
                      seed=int(seed))


# ---------------------------------------------------------------------------
# example presets: satellite in-track motion, well and ill conditioned
# ---------------------------------------------------------------------------

_F_SAT = np.array([
    [1.0, 1.0, 0.5, 0.5],
    [0.0, 1.0, 1.0, 1.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 0.606],
])
_Q_SAT = 0.63e-2


def example1() -> StateSpaceModel:
    """Well-conditioned satellite in-track motion model."""
    theta = np.zeros((4, 4))
    theta[3, 3] = _Q_SAT
    return StateSpaceModel(
        f=_F_SAT.copy(),
        b=np.zeros((4, 1)),
        g=np.eye(4),
        h=np.array([[1.0, 0.0, 0.0, 0.0]]),
        theta=theta,
        r=np.array([[1.0]]),
        x0_mean=np.zeros(4),
        pi0=np.diag([1.0, 1.0, 1.0, 1e-2]),
    )


def example2(delta: float) -> StateSpaceModel:
    """Satellite dynamics with the ill-conditioned two-row measurement.

    delta drives the conditioning of the innovation covariance toward the
    reciprocal of machine epsilon as delta shrinks.
    """
    delta = float(delta)
    if not 0.0 < delta <= 1.0:
        raise InvalidInput(f"delta must be in (0, 1], got {delta}")
    base = example1()
    return StateSpaceModel(
        f=base.f,
        b=base.b,
        g=base.g,
        h=np.array([[1.0, 1.0, 1.0, 1.0],
                    [1.0, 1.0, 1.0, 1.0 + delta]]),
        theta=base.theta,
        r=delta**2 * np.eye(2),
        x0_mean=np.zeros(4),
        pi0=np.eye(4),
    )


# ---------------------------------------------------------------------------
# model files and preset resolution
# ---------------------------------------------------------------------------

def model_to_dict(model: StateSpaceModel) -> dict:
    out = {name: getattr(model, name).tolist()
           for name in ("f", "b", "g", "h", "theta", "r", "pi0")}
    out["x0_mean"] = model.x0_mean.tolist()
    if model.overrides:
        out["overrides"] = [
            {"k": k, "field": key, "matrix": np.asarray(mat).tolist()}
            for k, table in sorted(model.overrides.items())
            for key, mat in table.items()
        ]
    return out


def model_from_dict(doc: dict) -> StateSpaceModel:
    try:
        kwargs = {name: doc[name]
                  for name in ("f", "b", "g", "h", "theta", "r",
                               "x0_mean", "pi0")}
    except KeyError as exc:
        raise InvalidModel(f"model document missing key {exc}") from exc
    overrides: dict = {}
    for entry in doc.get("overrides", []):
        overrides.setdefault(int(entry["k"]), {})[entry["field"]] = \
            np.asarray(entry["matrix"], dtype=np.float64)
    return StateSpaceModel(overrides=overrides, **kwargs)


def load_model(path) -> StateSpaceModel:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidModel(f"malformed model file {path}: {exc}") from exc
    return model_from_dict(doc)


def resolve_model(spec: str) -> StateSpaceModel:
    """Resolve a preset name ("example1", "example2:<delta>") or file path."""
    if spec == "example1":
        return example1()
    if spec.startswith("example2:"):
        try:
            delta = float(spec.split(":", 1)[1])
        except ValueError as exc:
            raise InvalidInput(f"bad delta in {spec!r}") from exc
        return example2(delta)
    if spec == "example2":
        raise InvalidInput("example2 needs a delta: use example2:<delta>")
    return load_model(spec)
