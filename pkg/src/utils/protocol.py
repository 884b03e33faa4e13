"""
Artifact protocol for model persistence.
Defines artifact types and JSON serialization/deserialization methods.
"""
import json
import os
from enum import Enum
from typing import Dict, Any, Optional

import numpy as np


FORMAT_VERSION = 1


class ArtifactType(Enum):
    """Artifact types written to disk."""
    LANDO_MODEL = "lando_model"
    OFFLINE_BUNDLE = "offline_bundle"
    POD_BASIS = "pod_basis"
    NEURAL_MAP = "neural_map"
    ONLINE_MODEL = "online_model"
    ERROR_REPORT = "error_report"


def encode_matrix(array: np.ndarray) -> Dict[str, Any]:
    """Encode a 1-D or 2-D array as explicit shape plus row-major values."""
    array = np.asarray(array, dtype=float)
    return {'shape': list(array.shape), 'data': array.ravel(order='C').tolist()}


def decode_matrix(payload: Dict[str, Any]) -> np.ndarray:
    """Inverse of ``encode_matrix``."""
    shape = tuple(int(dim) for dim in payload['shape'])
    data = np.asarray(payload['data'], dtype=float)
    if data.size != int(np.prod(shape)):
        raise ValueError(f"matrix payload has {data.size} values, shape {shape} needs {int(np.prod(shape))}")
    return data.reshape(shape, order='C')


class Artifact:
    """Type-tagged JSON envelope around a persisted domain object."""

    def __init__(self, artifact_type: ArtifactType, data: Dict[str, Any]):
        """Initialize an artifact.

        Args:
            artifact_type: Type of the artifact
            data: Payload produced by the object's ``to_dict``
        """
        self.artifact_type = artifact_type
        self.data = data

    def serialize(self) -> bytes:
        """Serialize artifact to UTF-8 JSON bytes."""
        envelope = {
            'type': self.artifact_type.value,
            'version': FORMAT_VERSION,
            'data': self.data
        }
        return json.dumps(envelope).encode('utf-8')

    @staticmethod
    def deserialize(data: bytes, expected: Optional[ArtifactType] = None) -> 'Artifact':
        """Deserialize an artifact from bytes.

        Args:
            data: Serialized artifact bytes
            expected: Artifact type the caller requires, if any

        Returns:
            Deserialized Artifact object
        """
        envelope = json.loads(data.decode('utf-8'))
        try:
            artifact_type = ArtifactType(envelope['type'])
        except (KeyError, ValueError):
            raise ValueError(f"unrecognised artifact type {envelope.get('type')!r}")
        if envelope.get('version') != FORMAT_VERSION:
            raise ValueError(f"unsupported artifact version {envelope.get('version')!r}")
        if expected is not None and artifact_type != expected:
            raise ValueError(f"expected {expected.name} artifact, found {artifact_type.name}")
        return Artifact(artifact_type, envelope['data'])

    def write(self, path: str) -> None:
        """Write the artifact to ``path``, creating parent directories."""
        directory = os.path.dirname(path)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)
        with open(path, 'wb') as f:
            f.write(self.serialize())

    @staticmethod
    def read(path: str, expected: Optional[ArtifactType] = None) -> 'Artifact':
        """Read an artifact from ``path``."""
        if not os.path.exists(path):
            raise ValueError(f"artifact file '{path}' not found")
        with open(path, 'rb') as f:
            return Artifact.deserialize(f.read(), expected)

    def __repr__(self):
        return f"Artifact(type={self.artifact_type.name}, keys={sorted(self.data)})"
