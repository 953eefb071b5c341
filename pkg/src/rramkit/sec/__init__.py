"""Hardware-security primitives: TRNG, PUF and PUF-keyed weight locking."""

from .lock import (DemoMLP, WeightLocker, demo_task, keystream, lock_weights, nn_infer,
                   unlock_weights)
from .puf import (PufInstance, PufMetrics, enroll, evaluate_population, health_check,
                  puf_metrics, puf_response)
from .trng import (TrngConfig, calibrate_trng, randomness_tests, trng_bit, trng_stream,
                   von_neumann)

__all__ = [
    "DemoMLP", "PufInstance", "PufMetrics", "TrngConfig", "WeightLocker", "calibrate_trng",
    "demo_task", "enroll", "evaluate_population", "health_check", "keystream",
    "lock_weights", "nn_infer", "puf_metrics", "puf_response", "randomness_tests",
    "trng_bit", "trng_stream", "unlock_weights", "von_neumann",
]
