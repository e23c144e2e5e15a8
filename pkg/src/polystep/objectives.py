"""Finite-sum objectives: regularized logistic regression, quadratic sums and
shifted absolute values, with per-batch values/gradients, curvature constants,
closed-form batch minima where available and full-batch reference solving.

All objectives expose the same surface:

* ``n``, ``d``, ``kind``
* ``batch_value(S, x)`` / ``batch_grad(S, x)`` -- mean over the members of S
* ``lower_bound(S, policy)`` -- a certified lower bound on inf_x f_S(x)
* ``batch_min_value(S)`` -- exact f_S* where closed-form (else raises)

The batch loss is f_S(x) = (1/|S|) sum_{i in S} f_i(x).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import MiniBatch, Vector


class UnavailableExactMinimum(ValueError):
    """Exact batch minimum is not computable for this objective/batch."""


class UnsoundLowerBound(ValueError):
    """Requested lower-bound policy is not certified for this objective."""


class SingularSystem(ValueError):
    """The batch normal equations are singular."""


class SolverFailure(RuntimeError):
    """Reference solver hit the iteration cap before reaching tolerance."""

    def __init__(self, msg: str, grad_norm: float):
        super().__init__(msg)
        self.grad_norm = grad_norm


@dataclass(frozen=True)
class CurvatureInfo:
    """Extreme per-component curvature constants (diagnostic use only)."""

    L_max: float
    mu_min: float
    L_per_component: np.ndarray = field(repr=False, default=None)
    mu_per_component: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class ReferenceSolution:
    x_star: Vector
    f_star: float
    grad_norm: float
    tol: float


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@dataclass(frozen=True)
class LogisticObjective:
    """Regularized binary logistic loss over n datapoints.

    With the default ``standard`` label convention,
    f_i(x) = log(1 + exp(-y_i a_i^T x)) + (lam/2) ||x||^2.
    ``as_printed`` flips the margin sign (+y_i a_i^T x).
    """

    features: np.ndarray  # (n, d)
    labels: np.ndarray  # (n,), values in {-1, +1}
    lam: float = 0.0
    label_sign: str = "standard"  # standard | as_printed

    kind = "logistic"

    def __post_init__(self):
        if self.label_sign not in ("standard", "as_printed"):
            raise ValueError(f"unknown label_sign {self.label_sign!r}")
        if not np.isin(self.labels, (-1.0, 1.0)).all():
            raise ValueError("labels must be in {-1, +1}")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def _margin_sign(self) -> float:
        return -1.0 if self.label_sign == "standard" else 1.0

    def batch_value(self, S: MiniBatch, x: Vector) -> float:
        A = self.features[S]
        z = self._margin_sign() * self.labels[S] * (A @ x)
        reg = 0.5 * self.lam * float(np.dot(x, x))
        return float(np.mean(np.logaddexp(0.0, z))) + reg

    def batch_grad(self, S: MiniBatch, x: Vector) -> Vector:
        A = self.features[S]
        s = self._margin_sign()
        z = s * self.labels[S] * (A @ x)
        w = s * self.labels[S] * _sigmoid(z)
        return A.T @ w / len(S) + self.lam * x

    def batch_min_value(self, S: MiniBatch) -> float:
        # Closed form only for a single unregularized datapoint: the loss
        # decays to 0 along the margin direction.
        if len(S) == 1 and self.lam == 0.0:
            return 0.0
        raise UnavailableExactMinimum(
            "exact batch minimum for logistic losses is only available for "
            "B=1 with lam=0"
        )

    def lower_bound(self, S: MiniBatch, policy: str, value: float = 0.0) -> float:
        if policy == "zero":
            return 0.0  # logaddexp >= 0 and the L2 term is >= 0
        if policy == "exact":
            return self.batch_min_value(S)
        if policy == "constant":
            return value
        raise ValueError(f"unknown lower-bound policy {policy!r}")

    def curvature(self) -> CurvatureInfo:
        L = np.einsum("ij,ij->i", self.features, self.features) / 4.0 + self.lam
        mu = np.full(self.n, self.lam)
        return CurvatureInfo(float(L.max()), float(mu.min()), L, mu)


@dataclass(frozen=True)
class QuadraticObjective:
    """n quadratics f_i(x) = (1/2)(x - o_i)^T H_i (x - o_i) + floor_i."""

    curvatures: np.ndarray  # (n, d, d), each symmetric PSD
    offsets: np.ndarray  # (n, d)
    floors: np.ndarray  # (n,)

    kind = "quadratic"

    @property
    def n(self) -> int:
        return self.curvatures.shape[0]

    @property
    def d(self) -> int:
        return self.curvatures.shape[1]

    def batch_value(self, S: MiniBatch, x: Vector) -> float:
        diff = x - self.offsets[S]
        q = np.einsum("bij,bi,bj->b", self.curvatures[S], diff, diff)
        return float(np.mean(0.5 * q + self.floors[S]))

    def batch_grad(self, S: MiniBatch, x: Vector) -> Vector:
        diff = x - self.offsets[S]
        return np.einsum("bij,bj->i", self.curvatures[S], diff) / len(S)

    def batch_optimum(self, S: MiniBatch) -> tuple[Vector, float]:
        """Exact minimizer and minimum of f_S: solves (sum H_i) x = sum H_i o_i."""
        H = self.curvatures[S]
        A = H.sum(axis=0)
        rhs = np.einsum("bij,bj->i", H, self.offsets[S])
        try:
            x_s = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError as e:
            raise SingularSystem(f"batch curvature sum is singular: {e}") from e
        return x_s, self.batch_value(S, x_s)

    def batch_min_value(self, S: MiniBatch) -> float:
        if len(S) == 1:
            return float(self.floors[S[0]])
        return self.batch_optimum(S)[1]

    def lower_bound(self, S: MiniBatch, policy: str, value: float = 0.0) -> float:
        if policy == "zero":
            if not (self.floors >= 0).all():
                raise UnsoundLowerBound(
                    "zero lower bound requires all component floors >= 0"
                )
            return 0.0
        if policy == "exact":
            return self.batch_min_value(S)
        if policy == "constant":
            return value
        raise ValueError(f"unknown lower-bound policy {policy!r}")

    def curvature(self) -> CurvatureInfo:
        eigs = np.linalg.eigvalsh(self.curvatures)  # (n, d), ascending
        return CurvatureInfo(
            float(eigs[:, -1].max()), float(eigs[:, 0].min()), eigs[:, -1], eigs[:, 0]
        )


@dataclass(frozen=True)
class ShiftedAbsoluteObjective:
    """1-d non-smooth sum f_i(x) = |x - s_i|; used with subgradient steppers."""

    shifts: np.ndarray  # (n,)

    kind = "absolute"
    d = 1

    @property
    def n(self) -> int:
        return self.shifts.shape[0]

    def batch_value(self, S: MiniBatch, x: Vector) -> float:
        return float(np.mean(np.abs(x[0] - self.shifts[S])))

    def batch_grad(self, S: MiniBatch, x: Vector) -> Vector:
        # subgradient: sign(x - s_i), with 0 at the kink
        return np.array([np.mean(np.sign(x[0] - self.shifts[S]))])

    def batch_min_value(self, S: MiniBatch) -> float:
        if len(S) == 1:
            return 0.0
        raise UnavailableExactMinimum("exact batch minimum only for B=1")

    def lower_bound(self, S: MiniBatch, policy: str, value: float = 0.0) -> float:
        if policy == "zero":
            return 0.0
        if policy == "exact":
            return self.batch_min_value(S)
        if policy == "constant":
            return value
        raise ValueError(f"unknown lower-bound policy {policy!r}")


FiniteSumObjective = LogisticObjective | QuadraticObjective | ShiftedAbsoluteObjective


def full_batch(obj) -> MiniBatch:
    return np.arange(obj.n)


def full_value(obj, x: Vector) -> float:
    return obj.batch_value(full_batch(obj), x)


def full_grad(obj, x: Vector) -> Vector:
    return obj.batch_grad(full_batch(obj), x)


def solve_reference(obj, tol: float = 1e-10, max_iter: int = 1_000_000) -> ReferenceSolution:
    """Full-batch reference solution with ||grad f(x*)|| <= tol.

    Quadratics use the direct linear solve; the logistic loss runs full-batch
    gradient descent with stepsize 1/L of the averaged objective; the 1-d
    absolute sum takes the median of the shifts.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    S = full_batch(obj)

    if obj.kind == "quadratic":
        x_star, f_star = obj.batch_optimum(S)
        gn = float(np.linalg.norm(obj.batch_grad(S, x_star)))
        return ReferenceSolution(x_star, f_star, gn, tol)

    if obj.kind == "absolute":
        x_star = np.array([float(np.median(obj.shifts))])
        return ReferenceSolution(x_star, obj.batch_value(S, x_star), 0.0, tol)

    # logistic: L of the mean objective
    gram = obj.features.T @ obj.features / obj.n
    L = float(np.linalg.eigvalsh(gram)[-1]) / 4.0 + obj.lam
    x = np.zeros(obj.d)
    step = 1.0 / L
    gn = float(np.linalg.norm(obj.batch_grad(S, x)))
    for _ in range(max_iter):
        if gn <= tol:
            break
        x = x - step * obj.batch_grad(S, x)
        gn = float(np.linalg.norm(obj.batch_grad(S, x)))
    if gn > tol:
        raise SolverFailure(
            f"reference solver: grad norm {gn:.3e} > tol {tol:.3e} "
            f"after {max_iter} iterations",
            gn,
        )
    return ReferenceSolution(x, obj.batch_value(S, x), gn, tol)


def make_counterexample_1d() -> QuadraticObjective:
    """The two-component 1-d problem f = (1/2) f_1 + (1/2) f_2 with
    f_1 = (2/2)(x-1)^2, f_2 = (1/2)(x+1)^2: full-batch optimum 1/3, uniform
    offset mean 0."""
    H = np.array([[[2.0]], [[1.0]]])
    offsets = np.array([[1.0], [-1.0]])
    floors = np.zeros(2)
    return QuadraticObjective(H, offsets, floors)


def make_fig1_problem(
    rng: np.random.Generator,
    d: int,
    n: int,
    interpolated: bool = False,
    f_floor: float = 1.0,
) -> QuadraticObjective:
    """Random quadratic finite sum with H_i = A_i A_i^T / (3d), A_i standard
    Gaussian (d x 3d). Offsets are i.i.d. standard normal, shared across
    components when ``interpolated``."""
    H = np.empty((n, d, d))
    for i in range(n):
        A = rng.standard_normal((d, 3 * d))
        H[i] = A @ A.T / (3 * d)
    if interpolated:
        shared = rng.standard_normal(d)
        offsets = np.tile(shared, (n, 1))
    else:
        offsets = rng.standard_normal((n, d))
    return QuadraticObjective(H, offsets, np.full(n, float(f_floor)))


def make_random_strongly_convex(
    rng: np.random.Generator,
    d: int,
    n: int,
    eig_range: tuple[float, float] = (0.5, 3.0),
    offset_scale: float = 1.0,
    floor_range: tuple[float, float] = (0.0, 1.0),
) -> QuadraticObjective:
    """Random PD quadratic finite sum with per-component eigenvalues drawn
    uniformly from ``eig_range``."""
    lo, hi = eig_range
    if lo <= 0:
        raise ValueError("eig_range must be positive for a PD problem")
    H = np.empty((n, d, d))
    for i in range(n):
        Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        eigs = rng.uniform(lo, hi, size=d)
        H[i] = (Q * eigs) @ Q.T
    offsets = offset_scale * rng.standard_normal((n, d))
    floors = rng.uniform(*floor_range, size=n)
    return QuadraticObjective(H, offsets, floors)
