"""Tour of the attribution methods on one trained network.

Trains a small tanh classifier on two Gaussian blobs, picks a test point,
and prints every attribution method's feature scores side by side, followed
by two sanity tables: the integrated-gradients completeness gap shrinking
with the step count, and smoothed gradients converging to the plain
gradient as the noise scale drops to zero.

Run with:  python3 demos/01_explanations_tour.py
"""
from __future__ import annotations

import numpy as np

from explainleak.explain import EXPLANATION_METHODS, IgConfig, explain, ig_completeness_gap
from explainleak.models import LayerSpec, TrainConfig, init_model, train
from explainleak.synth import SynthConfig, generate_synthetic


def main() -> None:
    data = generate_synthetic(
        SynthConfig(n_features=6, n_classes=2, n_samples=200, class_sep=1.5, seed=0)
    )
    model = init_model(
        [LayerSpec(16, "tanh"), LayerSpec(2, "identity")], input_dim=6, seed=0
    )
    train(model, data, TrainConfig(optimizer="adagrad", lr=0.05, epochs=40, seed=0))
    print(f"target model: 6 -> 16 tanh -> 2, train accuracy "
          f"{model.accuracy(data.features, data.labels):.3f}")

    x = data.features[0]
    label = int(data.labels[0])
    print(f"\nexplaining the prediction at training point 0 (label {label})")
    print(f"{'method':<22}" + "".join(f"{f'x{i}':>9}" for i in range(6)))
    for method in EXPLANATION_METHODS:
        values = explain(model, x, method).values
        print(f"{method:<22}" + "".join(f"{v:>9.4f}" for v in values))

    print("\nintegrated gradients: attribution sum vs. actual score change")
    print(f"{'steps':>6} {'completeness gap':>18}")
    for steps in (10, 50, 100, 200, 400):
        gap = ig_completeness_gap(model, x, IgConfig(steps=steps))
        print(f"{steps:>6} {gap:>18.2e}")

    print("\nsmoothed gradients approach the plain gradient as noise vanishes")
    plain = explain(model, x, "gradient").values
    print(f"{'sigma':>6} {'L2 distance to gradient':>26}")
    for sigma in (1.0, 0.5, 0.1, 0.01, 0.0):
        smooth = explain(model, x, "smoothgrad", {"sigma": sigma, "samples": 50}).values
        print(f"{sigma:>6} {np.linalg.norm(smooth - plain):>26.2e}")


if __name__ == "__main__":
    main()
