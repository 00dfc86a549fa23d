"""Adam optimization with a single triangular learning-rate cycle.

The learning rate rises linearly from its lower bound to the upper bound at
the midpoint of training and falls back symmetrically; the first moment decay
rate moves through the same triangle in reverse (decreases first, increases
last). Bounds come from a learning-rate range test when not supplied.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .nn import PARAM_NAMES, NnModel


class TrainingDiverged(RuntimeError):
    """Loss became non-finite during training."""


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 6
    epochs: int = 4
    lr_min: float = 1e-3
    lr_max: float = 1e-2
    beta1_min: float = 0.85
    beta1_max: float = 0.95
    beta2: float = 0.999
    adam_eps: float = 1e-8
    threshold: float = 0.6
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4, 5, 6, 7)
    vocab_size: int = 20_000

    def __post_init__(self) -> None:
        if self.lr_min >= self.lr_max:
            raise ValueError("lr_min must be below lr_max")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")
        if not 0 <= self.beta1_min <= self.beta1_max < 1:
            raise ValueError("need 0 <= beta1_min <= beta1_max < 1")


def one_cycle(step: float, total_steps: int, low: float, high: float) -> float:
    """Triangle schedule: `low` at step 0, `high` at the midpoint, `low` at the
    end, linear in between. Endpoints and midpoint are exact by construction."""
    if total_steps < 2:
        raise ValueError("schedule needs at least 2 steps")
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    half = total_steps / 2.0
    frac = step / half if step <= half else (total_steps - step) / half
    return low * (1.0 - frac) + high * frac


class Adam:
    """Adaptive moment estimation over a model's parameter dict.

    The per-step learning rate and beta1 are passed in, so any schedule can
    drive the optimizer.
    """

    def __init__(self, model: NnModel, beta2: float = 0.999, eps: float = 1e-8):
        self.model = model
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in model.params.items()}
        self.v = {k: np.zeros_like(v) for k, v in model.params.items()}

    def step(self, grads: dict[str, np.ndarray], lr: float, beta1: float) -> None:
        self.t += 1
        b2 = self.beta2
        for name in PARAM_NAMES:
            g = grads[name]
            self.m[name] = beta1 * self.m[name] + (1 - beta1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            m_hat = self.m[name] / (1 - beta1 ** self.t)
            v_hat = self.v[name] / (1 - b2 ** self.t)
            self.model.params[name] -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainResult:
    model: NnModel
    loss_trace: list[float]
    lr_trace: list[float]
    total_steps: int


def _batches(n_samples: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n_samples)
    for start in range(0, n_samples, batch_size):
        yield order[start:start + batch_size]


def train(model: NnModel, inputs: list[list[int]], targets: np.ndarray,
          config: TrainConfig, seed: int = 0) -> TrainResult:
    """Train in place with Adam under the one-cycle schedule.

    Batch order reshuffles every epoch from a generator seeded with `seed`, so
    a fixed seed reproduces the run bit for bit. Raises TrainingDiverged on a
    non-finite loss.
    """
    if not inputs:
        raise ValueError("no training data")
    targets = np.asarray(targets, dtype=float)
    if targets.shape[0] != len(inputs):
        raise ValueError("inputs and targets disagree on sample count")
    rng = np.random.default_rng(seed)
    steps_per_epoch = -(-len(inputs) // config.batch_size)
    total_steps = config.epochs * steps_per_epoch
    optimizer = Adam(model, beta2=config.beta2, eps=config.adam_eps)
    loss_trace: list[float] = []
    lr_trace: list[float] = []
    step = 0
    for _ in range(config.epochs):
        for idx in _batches(len(inputs), config.batch_size, rng):
            lr = one_cycle(step, total_steps, config.lr_min, config.lr_max)
            beta1 = one_cycle(step, total_steps, config.beta1_max, config.beta1_min)
            batch = [inputs[i] for i in idx]
            loss, grads = model.loss_and_grads(batch, targets[idx],
                                               update_running=True)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss {loss} at step {step} (lr={lr:.3g})"
                )
            optimizer.step(grads, lr=lr, beta1=beta1)
            loss_trace.append(loss)
            lr_trace.append(lr)
            step += 1
    return TrainResult(model=model, loss_trace=loss_trace, lr_trace=lr_trace,
                       total_steps=total_steps)


@dataclass
class RangeTestResult:
    curve: list[tuple[float, float]]          # (lr, loss) per step
    suggested_min: float
    suggested_max: float
    diverged: bool
    flat_fallback: bool


def lr_range_test(model: NnModel, inputs: list[list[int]], targets: np.ndarray,
                  lr_lo: float, lr_hi: float, steps: int,
                  batch_size: int = 6, seed: int = 0,
                  divergence_factor: float = 4.0) -> RangeTestResult:
    """Train while the learning rate climbs linearly from `lr_lo` to `lr_hi`.

    The suggested maximum is the rate at the steepest loss descent and the
    suggested minimum is a tenth of that. A flat curve falls back to the
    geometric midpoint; divergence truncates the curve and flags the result.
    The caller's model is left untouched.
    """
    if lr_lo >= lr_hi:
        raise ValueError("lr_lo must be below lr_hi")
    if steps < 2:
        raise ValueError("need at least 2 steps")
    targets = np.asarray(targets, dtype=float)
    probe = model.copy()
    optimizer = Adam(probe)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(inputs))
    curve: list[tuple[float, float]] = []
    diverged = False
    best = np.inf
    for i in range(steps):
        lr = lr_lo + (lr_hi - lr_lo) * i / (steps - 1)
        # The recorded loss is over the full training set so the curve stays
        # interpretable; only the update uses the rotating mini-batch.
        loss = probe.loss(inputs, targets, training=True)
        if not np.isfinite(loss) or loss > divergence_factor * max(best, 1e-12):
            diverged = True
            break
        curve.append((lr, loss))
        best = min(best, loss)
        idx = order[(i * batch_size) % len(inputs):][:batch_size]
        if len(idx) == 0:
            idx = order[:batch_size]
        batch = [inputs[j] for j in idx]
        _, grads = probe.loss_and_grads(batch, targets[idx])
        optimizer.step(grads, lr=lr, beta1=0.9)

    losses = [l for _, l in curve]
    flat = len(losses) < 2 or (max(losses) - min(losses)) <= 1e-12 * max(
        1.0, abs(max(losses))
    )
    if flat:
        mid = float(np.sqrt(lr_lo * lr_hi))
        return RangeTestResult(curve, mid / 10.0, mid, diverged, True)
    # Smooth out batch noise, then take the steepest descent before the loss
    # minimum; past the minimum the slope only reflects the onset of blow-up.
    smoothed = []
    ema = losses[0]
    for value in losses:
        ema = 0.7 * ema + 0.3 * value
        smoothed.append(ema)
    best = int(np.argmin(smoothed))
    if best == 0:
        suggested_max = curve[0][0]
    else:
        drops = np.diff(smoothed[:best + 1])
        suggested_max = curve[int(np.argmin(drops)) + 1][0]
    return RangeTestResult(curve, suggested_max / 10.0, suggested_max,
                           diverged, False)


def derive_bounds(config: TrainConfig, result: RangeTestResult) -> TrainConfig:
    if result.suggested_min >= result.suggested_max:
        return config
    return replace(config, lr_min=result.suggested_min,
                   lr_max=result.suggested_max)
