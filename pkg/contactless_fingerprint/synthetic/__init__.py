"""Synthetic fingers and datasets in the evaluation layout."""

from .generator import (
    Perturbation,
    PlantedMinutia,
    SyntheticFingerSpec,
    generate_dataset,
    generate_finger,
    random_finger_spec,
    render_impression,
)

__all__ = [
    "Perturbation",
    "PlantedMinutia",
    "SyntheticFingerSpec",
    "generate_dataset",
    "generate_finger",
    "random_finger_spec",
    "render_impression",
]
