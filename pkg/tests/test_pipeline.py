"""
Tests for the offline and online stages and for error evaluation.
"""
import csv
import os
import tempfile
import unittest

import numpy as np

from src.models import lando, pod
from src.models.kernels import KernelSpec
from src.models.lando import DynamicsMode, SnapshotSet
from src.models.neural import AffineScaler, MlpConfig, NeuralMap
from src.pipeline import evaluation
from src.pipeline.evaluation import ErrorReport
from src.pipeline.offline import OfflineBundle, offline
from src.pipeline.online import OnlineModel, generate_at, online, predict
from src.systems.lotka_volterra import LotkaVolterraParams, solve_lotka_volterra
from src.utils.errors import InstanceError, ZeroReferenceError
from src.utils.protocol import Artifact, ArtifactType


X0 = np.array([1.0, 1.0])


def propagator(mu: float) -> np.ndarray:
    return np.diag([mu, 1.0 - mu])


def linear_instance(mu: float, steps: int = 9):
    X = np.empty((2, steps + 1))
    X[:, 0] = X0
    for j in range(steps):
        X[:, j + 1] = propagator(mu) @ X[:, j]
    return np.array([mu]), SnapshotSet.from_trajectory(X, np.arange(steps + 1, dtype=float), DynamicsMode.DISCRETE)


def linear_dataset(mus, steps: int = 9):
    return [linear_instance(mu, steps) for mu in mus]


def small_mlp(output_dim: int = 2) -> MlpConfig:
    return MlpConfig(1, output_dim, hidden_layers=[8], max_epochs=20, patience=20, seed=0)


def fixed_online_model(weights, x0=X0, bounds=((0.0, 1.0),)) -> OnlineModel:
    """Online model whose map is the linear layer mu -> weights @ mu."""
    weights = np.asarray(weights, dtype=float)
    config = MlpConfig(weights.shape[1], weights.shape[0], hidden_layers=[])
    network = NeuralMap(config, [weights], [np.zeros(weights.shape[0])],
                        AffineScaler.identity(config.input_dim), AffineScaler.identity(config.output_dim))
    return OnlineModel(1.0, network, np.asarray(x0, dtype=float), [list(b) for b in bounds], (0.0, 1.0))


class TestOffline(unittest.TestCase):
    """Test per-instance fitting."""

    def setUp(self):
        self.train = linear_dataset([0.3, 0.4, 0.6, 0.7])
        self.valid = linear_dataset([0.35, 0.65])
        self.bundle = offline(self.train, KernelSpec.linear(), 1e-12, seed=2, validation=self.valid)

    def test_single_instance_matches_direct_fit(self):
        bundle = offline(self.train[:1], KernelSpec.linear(), 1e-12, seed=5)
        direct = lando.fit(self.train[0][1], KernelSpec.linear(), 1e-12, 5)
        self.assertEqual(bundle.size, 1)
        np.testing.assert_array_equal(bundle.models[0][1].weights, direct.weights)

    def test_bundle_metadata(self):
        self.assertEqual(self.bundle.size, 4)
        self.assertEqual(self.bundle.state_dim, 2)
        self.assertEqual(self.bundle.parameter_dim, 1)
        self.assertEqual(self.bundle.mode, DynamicsMode.DISCRETE)
        self.assertEqual(self.bundle.dt, 1.0)
        self.assertEqual(self.bundle.window, (0.0, 9.0))
        np.testing.assert_allclose(self.bundle.bounds, [[0.3, 0.7]])
        np.testing.assert_array_equal(self.bundle.x0, X0)
        np.testing.assert_array_equal(self.bundle.valid_mus, [[0.35], [0.65]])
        self.assertTrue(self.bundle.contains([0.5]))
        self.assertFalse(self.bundle.contains([0.8]))

    def test_deterministic(self):
        again = offline(self.train, KernelSpec.linear(), 1e-12, seed=2, validation=self.valid)
        for (_, a), (_, b) in zip(self.bundle.models, again.models):
            np.testing.assert_array_equal(a.weights, b.weights)
            self.assertEqual(a.dictionary.indices, b.dictionary.indices)

    def test_failing_instance_is_named(self):
        zero = SnapshotSet.from_trajectory(np.zeros((2, 10)), np.arange(10.0), DynamicsMode.DISCRETE)
        with self.assertRaises(InstanceError) as ctx:
            offline(self.train + [(np.array([0.9]), zero)], KernelSpec.linear(), 1e-12, seed=0)
        self.assertEqual(ctx.exception.mu, (0.9,))
        self.assertIn("0.9", str(ctx.exception))

    def test_inconsistent_instances(self):
        _, short = linear_instance(0.5, steps=5)
        dt2 = SnapshotSet.from_trajectory(short.X, 2.0 * short.times, DynamicsMode.DISCRETE)
        with self.assertRaises(ValueError):
            offline(self.train + [(np.array([0.5]), dt2)], KernelSpec.linear(), 1e-12, seed=0)
        with self.assertRaises(ValueError):
            offline([], KernelSpec.linear(), 1e-12, seed=0)

    def test_artifact_roundtrip(self):
        with tempfile.TemporaryDirectory() as root:
            path = os.path.join(root, "bundle.json")
            Artifact(ArtifactType.OFFLINE_BUNDLE, self.bundle.to_dict()).write(path)
            restored = OfflineBundle.from_dict(Artifact.read(path, ArtifactType.OFFLINE_BUNDLE).data)
        np.testing.assert_array_equal(generate_at(restored, 4.0), generate_at(self.bundle, 4.0))
        self.assertEqual(len(restored.validation), 2)


class TestGenerate(unittest.TestCase):
    """Test state generation at a query time."""

    def setUp(self):
        self.mus = [0.3, 0.4, 0.6, 0.7]
        self.bundle = offline(linear_dataset(self.mus), KernelSpec.linear(), 1e-12, seed=0)

    def test_zero_time_returns_initial_state(self):
        S = generate_at(self.bundle, 0.0)
        np.testing.assert_array_equal(S, np.tile(X0[:, None], (1, 4)))

    def test_discrete_matches_matrix_power(self):
        S = generate_at(self.bundle, 3.0)
        for i, mu in enumerate(self.mus):
            expected = np.linalg.matrix_power(propagator(mu), 3) @ X0
            np.testing.assert_allclose(S[:, i], expected, rtol=1e-8, atol=1e-12)

    def test_beyond_training_window(self):
        S = generate_at(self.bundle, 12.0)
        np.testing.assert_allclose(S[:, 0], np.linalg.matrix_power(propagator(0.3), 12) @ X0,
                                   rtol=1e-6, atol=1e-12)

    def test_off_grid_time_warns(self):
        with self.assertLogs("Online", level="WARNING"):
            S = generate_at(self.bundle, 2.5)
        np.testing.assert_allclose(S, generate_at(self.bundle, 2.0))

    def test_invalid_queries(self):
        with self.assertRaises(ValueError):
            generate_at(self.bundle, -1.0)
        with self.assertRaises(ValueError):
            generate_at(self.bundle, 1.0, x0=[1.0, 2.0, 3.0])

    def test_continuous_matches_reference_solver(self):
        t = np.linspace(0.0, 50.0, 101)
        dataset = []
        for alpha in (0.04, 0.06, 0.08):
            p = LotkaVolterraParams(alpha=alpha)
            dataset.append((np.array([alpha]), solve_lotka_volterra(p, [80.0, 20.0], t)))
        bundle = offline(dataset, KernelSpec.quadratic(), 1e-6, seed=0)
        S = generate_at(bundle, 20.0)
        for i, (alpha, snapshots) in enumerate(dataset):
            reference = snapshots.X[:, 40]
            self.assertLess(np.linalg.norm(S[:, i] - reference) / np.linalg.norm(reference), 1e-3)


class TestOnline(unittest.TestCase):
    """Test the t* surrogate construction and prediction."""

    @classmethod
    def setUpClass(cls):
        cls.bundle = offline(linear_dataset([0.3, 0.4, 0.6, 0.7]), KernelSpec.linear(), 1e-12, seed=0,
                             validation=linear_dataset([0.35, 0.65]))

    def test_full_state_map(self):
        model = online(self.bundle, 3.0, mlp_config=small_mlp(5))
        self.assertIsNone(model.pod)
        self.assertEqual(model.map.config.output_dim, 2)
        self.assertEqual(model.map.config.input_dim, 1)
        self.assertEqual(model.steps, 3)
        self.assertFalse(model.extrapolated)
        self.assertEqual(set(model.stage_residuals), {'fit_residual', 'pod_projection_error', 'valid_loss'})
        self.assertEqual(predict(model, 0.5).shape, (2,))

    def test_full_rank_pod(self):
        model = online(self.bundle, 3.0, pod_modes=2, mlp_config=small_mlp())
        self.assertEqual(model.pod.n, 2)
        mu = np.array([0.45])
        expected = model.pod.reconstruct(model.map.forward(mu))
        np.testing.assert_allclose(predict(model, mu), expected, rtol=1e-12)
        self.assertLess(model.stage_residuals['pod_projection_error'], 1e-10)

    def test_extrapolated_time(self):
        with self.assertLogs("Online", level="WARNING"):
            model = online(self.bundle, 12.0, mlp_config=small_mlp())
        self.assertTrue(model.extrapolated)

    def test_without_validation_split(self):
        bundle = offline(linear_dataset([0.3, 0.7]), KernelSpec.linear(), 1e-12, seed=0)
        model = online(bundle, 1.0, mlp_config=small_mlp())
        self.assertEqual(len(model.map.train_history), 20)

    def test_continuous_bundle(self):
        t = np.linspace(0.0, 20.0, 41)
        dataset = [(np.array([a]), solve_lotka_volterra(LotkaVolterraParams(alpha=a), [80.0, 20.0], t))
                   for a in (0.03, 0.05, 0.07)]
        bundle = offline(dataset, KernelSpec.quadratic(), 1e-6, seed=0)
        model = online(bundle, 10.0, mlp_config=small_mlp())
        self.assertEqual(model.step, 0.5)
        self.assertIsNone(model.steps)
        self.assertEqual(model.map.config.output_dim, 2)

    def test_predict_batches(self):
        model = fixed_online_model([[1.0], [2.0]])
        np.testing.assert_allclose(predict(model, 0.5), [0.5, 1.0])
        np.testing.assert_allclose(predict(model, [0.1, 0.2, 0.3]), [[0.1, 0.2, 0.3], [0.2, 0.4, 0.6]])
        np.testing.assert_allclose(predict(model, [[0.1], [0.2]]), [[0.1, 0.2], [0.2, 0.4]])

    def test_predict_outside_box_warns(self):
        model = fixed_online_model([[1.0], [2.0]])
        with self.assertLogs("Online", level="WARNING"):
            predict(model, 1.5)
        with self.assertRaises(ValueError):
            predict(model, [[0.1, 0.2]])

    def test_output_dimension_checked(self):
        config = MlpConfig(1, 3, hidden_layers=[])
        network = NeuralMap(config, [np.ones((3, 1))], [np.zeros(3)], AffineScaler.identity(1), AffineScaler.identity(3))
        with self.assertRaises(ValueError):
            OnlineModel(1.0, network, X0, [[0.0, 1.0]], (0.0, 1.0))

    def test_artifact_roundtrip(self):
        model = online(self.bundle, 2.0, pod_modes=1, mlp_config=small_mlp())
        restored = OnlineModel.from_dict(Artifact.deserialize(
            Artifact(ArtifactType.ONLINE_MODEL, model.to_dict()).serialize(), ArtifactType.ONLINE_MODEL).data)
        mus = np.array([[0.3], [0.5], [0.7]])
        np.testing.assert_array_equal(predict(restored, mus), predict(model, mus))
        self.assertEqual(restored.t_star, 2.0)
        self.assertEqual(restored.pod.n, 1)


class TestLotkaVolterraBundle(unittest.TestCase):
    """Test persistence of quadratic-kernel bundles fitted on population data."""

    def test_saved_bundle_reloads_and_trains(self):
        t = np.linspace(0.0, 40.0, 81)

        def instances(alphas):
            return [(np.array([a]), solve_lotka_volterra(LotkaVolterraParams(alpha=a), [80.0, 20.0], t))
                    for a in alphas]

        bundle = offline(instances(np.linspace(0.015, 0.1, 6)), KernelSpec.quadratic(), 1e-6, seed=0,
                         validation=instances([0.03, 0.06, 0.09]))
        with tempfile.TemporaryDirectory() as root:
            path = os.path.join(root, "bundle.json")
            Artifact(ArtifactType.OFFLINE_BUNDLE, bundle.to_dict()).write(path)
            restored = OfflineBundle.from_dict(Artifact.read(path, ArtifactType.OFFLINE_BUNDLE).data)
        for (_, a), (_, b) in zip(bundle.models, restored.models):
            np.testing.assert_array_equal(b.dictionary.chol, a.dictionary.chol)
        np.testing.assert_array_equal(generate_at(restored, 30.0), generate_at(bundle, 30.0))
        model = online(restored, 30.0, mlp_config=small_mlp())
        self.assertEqual(model.map.config.output_dim, 2)
        self.assertTrue(np.all(np.isfinite(predict(model, 0.05))))


class TestEvaluation(unittest.TestCase):
    """Test relative errors, reports and sweeps."""

    def test_relative_error(self):
        self.assertEqual(evaluation.relative_error([3.0, 4.0], [3.0, 4.0]), 0.0)
        self.assertEqual(evaluation.relative_error([3.0, 4.0], [0.0, 0.0]), 1.0)
        self.assertAlmostEqual(evaluation.relative_error([3.0, 4.0], [3.0, 3.0]), 0.2)
        with self.assertRaises(ZeroReferenceError):
            evaluation.relative_error([0.0, 0.0], [1.0, 0.0])

    def test_identical_predictions_give_zero_error(self):
        model = fixed_online_model([[1.0], [2.0]])
        test = [(mu, np.array([mu, 2.0 * mu])) for mu in (0.2, 0.5, 0.9)]
        report = evaluation.evaluate(model, test)
        np.testing.assert_allclose(report.errors, 0.0, atol=1e-15)
        self.assertEqual(report.mean, 0.0)
        self.assertEqual(report.count, 3)

    def test_zero_prediction_gives_unit_error(self):
        model = fixed_online_model([[0.0], [0.0]])
        report = evaluation.evaluate(model, [(0.4, np.array([1.0, -2.0])), (0.6, np.array([0.5, 0.5]))])
        np.testing.assert_allclose(report.errors, [1.0, 1.0])
        self.assertEqual(report.std, 0.0)

    def test_zero_reference_raises(self):
        model = fixed_online_model([[1.0], [2.0]])
        with self.assertRaises(ZeroReferenceError):
            evaluation.evaluate(model, [(0.4, np.zeros(2))])

    def test_population_statistics(self):
        report = ErrorReport.from_errors(1.0, [[0.1], [0.2]], [0.01, 0.03])
        self.assertAlmostEqual(report.mean, 0.02, places=15)
        self.assertAlmostEqual(report.std, 0.01, places=15)
        rng = np.random.default_rng(0)
        errors = rng.uniform(size=17)
        report = ErrorReport.from_errors(2.0, rng.uniform(size=(17, 2)), errors)
        self.assertAlmostEqual(report.mean, sum(errors) / 17, delta=1e-14)
        self.assertAlmostEqual(report.std, np.sqrt(sum((e - report.mean) ** 2 for e in errors) / 17), delta=1e-14)
        restored = ErrorReport.from_dict(report.to_dict())
        np.testing.assert_array_equal(restored.errors, report.errors)
        self.assertEqual(restored.mean, report.mean)

    def test_sweep_over_times(self):
        bundle = offline(linear_dataset([0.3, 0.4, 0.6, 0.7]), KernelSpec.linear(), 1e-12, seed=0)
        test = linear_dataset([0.45, 0.55], steps=12)
        reports = evaluation.sweep(bundle, [1.0, 2.0, 11.0], test, mlp_config=small_mlp())
        self.assertEqual([r.t_star for r in reports], [1.0, 2.0, 11.0])
        self.assertEqual([r.extrapolated for r in reports], [False, False, True])
        self.assertTrue(all(r.count == 2 and r.pod_rank is None for r in reports))

    def test_pod_threshold_sweep(self):
        bundle = offline(linear_dataset([0.3, 0.4, 0.6, 0.7]), KernelSpec.linear(), 1e-12, seed=0)
        test = linear_dataset([0.45, 0.55])
        results = evaluation.pod_threshold_sweep(bundle, 2.0, [0.5, 1.0], test, mlp_config=small_mlp())
        self.assertEqual([threshold for threshold, _ in results], [0.5, 1.0])
        self.assertEqual(results[0][1].pod_rank, 1)
        self.assertEqual(results[1][1].pod_rank, 2)

    def test_csv_writers(self):
        reports = [ErrorReport.from_errors(t, [[0.1], [0.2]], [0.01, 0.03]) for t in (1.0, 2.0)]
        basis = pod.compute(np.diag([3.0, 1.0]), n_modes=2)
        with tempfile.TemporaryDirectory() as root:
            sweep_path = os.path.join(root, "out", "sweep.csv")
            evaluation.write_sweep_csv(reports, sweep_path, thresholds=[0.9, 0.99])
            with open(sweep_path) as f:
                rows = list(csv.reader(f))
            instance_path = os.path.join(root, "instances.csv")
            evaluation.write_instance_csv(reports[0], instance_path)
            with open(instance_path) as f:
                instance_rows = list(csv.reader(f))
            energy_path = os.path.join(root, "energy.csv")
            evaluation.write_energy_csv(basis, energy_path)
            with open(energy_path) as f:
                energy_rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["t_star", "mean", "std", "count", "extrapolated", "pod_rank", "pod_threshold"])
        self.assertEqual(len(rows), 3)
        self.assertAlmostEqual(float(rows[1][1]), 0.02)
        self.assertEqual(instance_rows[0], ["mu0", "error"])
        self.assertEqual(float(instance_rows[2][1]), 0.03)
        self.assertEqual(energy_rows[0], ["n", "energy", "projection_error"])
        self.assertAlmostEqual(float(energy_rows[1][1]), 0.9)
        self.assertAlmostEqual(float(energy_rows[1][2]), np.sqrt(0.1))
        self.assertAlmostEqual(float(energy_rows[2][2]), 0.0)


if __name__ == '__main__':
    unittest.main()
