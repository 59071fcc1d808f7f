"""Nearest-training-data baseline.

The predictor is built from the training inputs (sidecar states) and their
recorded output statistics only; test outputs are never handed to it.
"""

from __future__ import annotations

import numpy as np

from ..qsim.core import quantum_fidelity


class NearestTrainingData:
    def __init__(self, state_ids, input_states, output_probs):
        """``input_states``: amplitude vectors; ``output_probs``: (n, |M|, m)."""
        if len(state_ids) == 0:
            raise ValueError("empty training set")
        order = np.argsort(np.asarray(state_ids), kind="stable")
        self.state_ids = [int(state_ids[i]) for i in order]
        self.inputs = [np.asarray(input_states[i], dtype=complex) for i in order]
        self.outputs = np.asarray(output_probs, dtype=np.float64)[order]
        if len(self.inputs) != len(self.outputs):
            raise ValueError("need one output record set per training input")

    @classmethod
    def from_dataset(cls, ds) -> "NearestTrainingData":
        ids = ds.state_ids["train"]
        return cls(ids, [ds.input_states[s] for s in ids], ds.probs[("train", "output")])

    def nearest(self, state) -> int:
        """Index (in state_id order) of the closest training input; lowest id wins ties."""
        fids = np.array([quantum_fidelity(state, s) for s in self.inputs])
        return int(np.argmax(fids))  # argmax returns the first maximum

    def nearest_id(self, state) -> int:
        return self.state_ids[self.nearest(state)]

    def predict(self, state, measurement=None) -> np.ndarray:
        """Recorded output statistics of the nearest training input.

        ``measurement`` selects one query index; ``None`` returns all of them.
        """
        out = self.outputs[self.nearest(state)]
        return out if measurement is None else out[measurement]


def nearest_training_data_predict(state, train: NearestTrainingData, measurement=None) -> np.ndarray:
    return train.predict(state, measurement)
