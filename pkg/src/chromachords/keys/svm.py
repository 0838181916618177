"""One-vs-rest RBF-kernel support vector machines trained by SMO."""
import numpy as np

from ..core.errors import InsufficientClasses, InvalidParameter
from ..core.models import ArrayModel

N_KEYS = 12
TAU = 1e-12


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a - b||^2) for every row pair of A and B."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.clip(sq, 0.0, None))


class BinaryMachine(ArrayModel):
    """A trained soft-margin machine: f(x) = sum(coef * k(sv, x)) - rho."""
    support_vectors: np.ndarray
    dual_coef: np.ndarray
    rho: float
    iterations: int = 0
    converged: bool = True

    def decision(self, X: np.ndarray, gamma: float) -> np.ndarray:
        X = np.atleast_2d(X)
        if len(self.dual_coef) == 0:
            return np.full(len(X), -self.rho)
        return rbf_kernel(X, self.support_vectors, gamma) @ self.dual_coef - self.rho


class KernelClassifier(ArrayModel):
    """Twelve one-vs-rest machines, one per major key."""
    machines: tuple[BinaryMachine, ...]
    gamma: float
    C: float
    degree: int = 1
    class_weights: np.ndarray

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.stack([m.decision(X, self.gamma) for m in self.machines], axis=1)

    def predict(self, X) -> np.ndarray:
        # np.argmax keeps the lowest index on ties
        return np.argmax(self.decision_function(X), axis=1)


def smo_solve(
    K: np.ndarray,
    y: np.ndarray,
    upper: np.ndarray,
    tol: float = 1e-3,
    max_iter: int = 10_000,
) -> tuple[np.ndarray, float, int, bool]:
    """
    Solve the soft-margin dual with pairwise (SMO) updates.

    Working pairs use the maximal-violation rule for i and second-order
    gain for j; each example has its own box bound `upper`. Stops when the
    KKT violation gap drops below `tol`. Returns (alpha, rho, iterations,
    converged).
    """
    n = len(y)
    y = y.astype(np.float64)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    diag = np.diag(K).copy()
    converged = False
    iteration = 0

    for iteration in range(1, max_iter + 1):
        at_upper = alpha >= upper
        at_lower = alpha <= 0.0
        in_up = np.where(y > 0, ~at_upper, ~at_lower)
        in_low = np.where(y > 0, ~at_lower, ~at_upper)
        if not in_up.any() or not in_low.any():
            converged = True
            break

        score = -y * grad
        up_scores = np.where(in_up, score, -np.inf)
        i = int(np.argmax(up_scores))
        g_max = up_scores[i]
        g_min = np.where(in_low, score, np.inf).min()
        if g_max - g_min < tol:
            converged = True
            break

        grad_diff = g_max - score
        quad = diag[i] + diag - 2.0 * K[i]
        quad = np.where(quad > 0, quad, TAU)
        gain = np.where(in_low & (grad_diff > 0), -(grad_diff ** 2) / quad, np.inf)
        j = int(np.argmin(gain))

        old_i, old_j = alpha[i], alpha[j]
        c_i, c_j = upper[i], upper[j]
        q_ij = y[i] * y[j] * K[i, j]
        if y[i] != y[j]:
            quad_coef = diag[i] + diag[j] + 2.0 * q_ij
            quad_coef = quad_coef if quad_coef > 0 else TAU
            delta = (-grad[i] - grad[j]) / quad_coef
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if diff > c_i - c_j:
                if alpha[i] > c_i:
                    alpha[i] = c_i
                    alpha[j] = c_i - diff
            elif alpha[j] > c_j:
                alpha[j] = c_j
                alpha[i] = c_j + diff
        else:
            quad_coef = diag[i] + diag[j] - 2.0 * q_ij
            quad_coef = quad_coef if quad_coef > 0 else TAU
            delta = (grad[i] - grad[j]) / quad_coef
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > c_i:
                if alpha[i] > c_i:
                    alpha[i] = c_i
                    alpha[j] = total - c_i
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > c_j:
                if alpha[j] > c_j:
                    alpha[j] = c_j
                    alpha[i] = total - c_j
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total

        d_i, d_j = alpha[i] - old_i, alpha[j] - old_j
        grad += y * (y[i] * K[i] * d_i + y[j] * K[j] * d_j)

    return alpha, _compute_rho(alpha, grad, y, upper), iteration, converged


def _compute_rho(alpha: np.ndarray, grad: np.ndarray, y: np.ndarray, upper: np.ndarray) -> float:
    y_grad = y * grad
    at_upper = alpha >= upper
    at_lower = alpha <= 0.0
    free = ~at_upper & ~at_lower
    if free.any():
        return float(y_grad[free].mean())
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = y_grad[ub_mask].min() if ub_mask.any() else np.inf
    lb = y_grad[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2.0)


def train_kernel_classifier(
    X,
    y,
    C: float = 0.5,
    gamma: float = 1.0,
    degree: int = 1,
    tol: float = 1e-3,
    max_iter: int = 10_000,
) -> KernelClassifier:
    """
    Train twelve one-vs-rest machines with balanced class weights.

    Each machine scales C per example by n_samples / (2 * count of that
    example's binary class). A key with no training examples gets a
    constant machine that always votes -1.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise InvalidParameter(f"X and y disagree: {X.shape} vs {y.shape}")
    if len(np.unique(y)) < 2:
        raise InsufficientClasses("need at least two distinct key labels")
    if y.min() < 0 or y.max() >= N_KEYS:
        raise InvalidParameter("key labels must lie in 0..11")

    n = len(y)
    K = rbf_kernel(X, X, gamma)
    machines = []
    weights = np.zeros((N_KEYS, 2))
    for key in range(N_KEYS):
        yb = np.where(y == key, 1.0, -1.0)
        n_pos = int((yb > 0).sum())
        if n_pos == 0:
            machines.append(BinaryMachine(
                support_vectors=np.zeros((0, X.shape[1])),
                dual_coef=np.zeros(0),
                rho=1.0,
            ))
            continue
        n_neg = n - n_pos
        w_pos, w_neg = n / (2.0 * n_pos), n / (2.0 * n_neg)
        weights[key] = (w_pos, w_neg)
        upper = C * np.where(yb > 0, w_pos, w_neg)
        alpha, rho, iterations, converged = smo_solve(K, yb, upper, tol=tol, max_iter=max_iter)
        support = alpha > 0.0
        machines.append(BinaryMachine(
            support_vectors=X[support].copy(),
            dual_coef=(alpha * yb)[support],
            rho=rho,
            iterations=iterations,
            converged=converged,
        ))

    return KernelClassifier(
        machines=tuple(machines),
        gamma=gamma,
        C=C,
        degree=degree,
        class_weights=weights,
    )
