"""
Tests for the artifact protocol.
"""
import json
import os
import tempfile
import unittest

import numpy as np

from src.utils.protocol import FORMAT_VERSION, Artifact, ArtifactType, decode_matrix, encode_matrix


class TestProtocol(unittest.TestCase):
    """Test artifact envelopes and matrix encoding."""

    def test_artifact_creation(self):
        data = {'t_star': 50.0, 'mean': 0.01}
        artifact = Artifact(ArtifactType.ERROR_REPORT, data)

        self.assertEqual(artifact.artifact_type, ArtifactType.ERROR_REPORT)
        self.assertEqual(artifact.data, data)

    def test_artifact_serialization(self):
        artifact = Artifact(ArtifactType.POD_BASIS, {'energy_threshold': 0.9999})
        serialized = artifact.serialize()
        self.assertIsInstance(serialized, bytes)

        envelope = json.loads(serialized.decode('utf-8'))
        self.assertEqual(envelope['type'], 'pod_basis')
        self.assertEqual(envelope['version'], FORMAT_VERSION)

    def test_artifact_roundtrip(self):
        test_cases = [
            {'kind': 'linear', 'degree': 2},
            {'errors': [0.01, 0.03], 'count': 2, 'pod_rank': None},
            {'weights': encode_matrix(np.arange(6.0).reshape(2, 3))}
        ]

        for data in test_cases:
            artifact = Artifact(ArtifactType.LANDO_MODEL, data)
            restored = Artifact.deserialize(artifact.serialize())
            self.assertEqual(restored.artifact_type, ArtifactType.LANDO_MODEL)
            self.assertEqual(restored.data, data)

    def test_wrong_type_rejected(self):
        serialized = Artifact(ArtifactType.OFFLINE_BUNDLE, {}).serialize()
        with self.assertRaises(ValueError) as ctx:
            Artifact.deserialize(serialized, ArtifactType.ONLINE_MODEL)
        self.assertIn("ONLINE_MODEL", str(ctx.exception))

    def test_unknown_type_and_version_rejected(self):
        with self.assertRaises(ValueError):
            Artifact.deserialize(json.dumps({'type': 'order', 'version': FORMAT_VERSION, 'data': {}}).encode())
        with self.assertRaises(ValueError):
            Artifact.deserialize(json.dumps({'type': 'pod_basis', 'version': 99, 'data': {}}).encode())

    def test_write_and_read(self):
        with tempfile.TemporaryDirectory() as root:
            path = os.path.join(root, 'nested', 'model.json')
            Artifact(ArtifactType.NEURAL_MAP, {'t_star': 1.5}).write(path)
            restored = Artifact.read(path, ArtifactType.NEURAL_MAP)
            self.assertEqual(restored.data, {'t_star': 1.5})
            with self.assertRaises(ValueError):
                Artifact.read(os.path.join(root, 'missing.json'))

    def test_matrix_encoding_is_row_major(self):
        matrix = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        payload = encode_matrix(matrix)
        self.assertEqual(payload, {'shape': [2, 3], 'data': [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]})
        np.testing.assert_array_equal(decode_matrix(payload), matrix)

    def test_matrix_shape_mismatch(self):
        with self.assertRaises(ValueError):
            decode_matrix({'shape': [2, 2], 'data': [1.0, 2.0, 3.0]})


if __name__ == '__main__':
    unittest.main()
